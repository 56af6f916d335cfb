#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "ahelab/einstein.hpp"
#include "ahelab/errors.hpp"
#include "ahelab/green.hpp"
#include "ahelab/hyperbolic.hpp"
#include "ahelab/indicial.hpp"
#include "ahelab/spectral.hpp"

namespace py = pybind11;
using namespace ahelab;

namespace {

WindowKind parse_window(const std::string& s) {
    if (s == "holder") return WindowKind::Holder;
    if (s == "sobolev") return WindowKind::Sobolev;
    throw Error(Errc::InvalidSpec, "window kind must be holder or sobolev");
}

py::dict estimate_dict(const EstimateReport& r) {
    py::dict d;
    d["lambda_observed"] = r.lambda_observed;
    d["lambda_claimed"] = r.lambda_claimed;
    d["constant_C"] = r.constant_C;
    d["epsilon"] = r.epsilon;
    d["holds"] = r.holds;
    d["total"] = r.total;
    return d;
}

py::dict bound_dict(const BoundCheckReport& r) {
    py::dict d;
    d["grid"] = r.grid;
    d["ratios"] = r.ratios;
    d["sup_ratio"] = r.sup_ratio;
    d["witness"] = r.witness;
    d["monotone_tail"] = r.monotone_tail;
    d["tail_change"] = r.tail_change;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Indicial roots, Green kernels, spectra and Einstein solves for asymptotically hyperbolic metrics";

    static py::handle error_type =
        py::exception<Error>(m, "AhelabError", PyExc_RuntimeError).release();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
            inst.attr("code") = std::string(errc_name(e.code()));
            inst.attr("numeric") = errc_is_numeric(e.code());
            PyErr_SetObject(error_type.ptr(), inst.ptr());
        }
    });

    // indicial
    py::class_<OperatorSpec>(m, "OperatorSpec")
        .def_static("scalar", &OperatorSpec::scalar, py::arg("n"), py::arg("c") = 0.0)
        .def_static("covariant", &OperatorSpec::covariant, py::arg("n"), py::arg("r"), py::arg("c") = 0.0)
        .def_static("lichnerowicz", &OperatorSpec::lichnerowicz, py::arg("n"), py::arg("c") = 0.0)
        .def_static("hodge", &OperatorSpec::hodge, py::arg("n"), py::arg("q"))
        .def_static("vector", &OperatorSpec::vector, py::arg("n"))
        .def_property_readonly("family", [](const OperatorSpec& s) { return family_name(s.family); })
        .def_readonly("n", &OperatorSpec::n)
        .def_readonly("r_tensor", &OperatorSpec::r_tensor)
        .def_readonly("q_degree", &OperatorSpec::q_degree)
        .def_readonly("c_shift", &OperatorSpec::c_shift)
        .def("__repr__", [](const OperatorSpec& s) {
            return "OperatorSpec(" + family_name(s.family) + ", n=" + std::to_string(s.n) + ")";
        });

    m.def("indicial_radius", [](const OperatorSpec& s) {
        const auto r = indicial_radius(s);
        return py::make_tuple(r.radius ? py::cast(*r.radius) : py::none(), r.flag_middle_degree);
    }, "(radius or None, middle-degree flag)");
    m.def("characteristic_exponents", &characteristic_exponents);
    m.def("bundle_weight", &bundle_weight);
    m.def("fredholm_window", [](const OperatorSpec& s, const std::string& kind, double p) -> py::object {
        const auto w = fredholm_window(s, parse_window(kind), p);
        if (!w) return py::none();
        return py::make_tuple(w->lower, w->upper);
    }, py::arg("spec"), py::arg("kind") = "holder", py::arg("p") = 2.0);
    m.def("shifted_radius", &shifted_radius);
    m.def("koiso_bound", &koiso_bound);
    m.def("curvature_threshold", &curvature_threshold);

    // hyperbolic geometry
    m.def("hyperbolic_distance", &hyperbolic_distance);
    m.def("rho_two_point", &rho_two_point);
    m.def("lp_membership", [](double s, double delta, double p, int r, int n) {
        const auto rep = lp_membership(s, delta, p, r, n);
        py::dict d;
        d["analytic"] = rep.analytic == Membership::Converges;
        d["numeric"] = rep.numeric == Membership::Converges;
        d["borderline"] = rep.borderline;
        d["gap"] = rep.gap;
        return d;
    }, py::arg("s"), py::arg("delta"), py::arg("p"), py::arg("r") = 0, py::arg("n") = 2);

    // green kernel
    py::class_<GreenProfile>(m, "GreenProfile")
        .def_readonly("n", &GreenProfile::n)
        .def_readonly("d", &GreenProfile::d)
        .def_readonly("K", &GreenProfile::K)
        .def_readonly("normalization", &GreenProfile::normalization)
        .def_readonly("radius_R", &GreenProfile::radius_R)
        .def("scaled", &GreenProfile::scaled)
        .def("__call__", &GreenProfile::eval);
    m.def("green_profile", [](int n, double c, const std::vector<double>& d) {
        return green_profile(RadialOperator{n, c}, d);
    }, py::arg("n"), py::arg("c"), py::arg("d"));
    m.def("decay_slope", &decay_slope, py::arg("profile"), py::arg("d_lo") = 5.0, py::arg("d_hi") = 15.0);
    m.def("hypergeometric_integral", &hypergeometric_integral, py::arg("p"), py::arg("q"), py::arg("r"),
          py::arg("u"), py::arg("order") = 20);
    m.def("hypergeometric_bound", [](double p, double q, double r, const std::vector<double>& u) {
        return bound_dict(hypergeometric_bound(p, q, r, u));
    });
    m.def("distance_integral_bound", [](double a, double b, int n, int samples, std::uint64_t seed, int order) {
        return bound_dict(distance_integral_bound(a, b, n, samples, seed, order));
    }, py::arg("a"), py::arg("b"), py::arg("n"), py::arg("samples") = 16, py::arg("seed") = 1, py::arg("order") = 12);

    // spectral
    m.def("spectrum_bottom", [](const OperatorSpec& s, double D, int N) {
        py::gil_scoped_release nogil;
        return spectrum_bottom(discretize_radial(s, D, N));
    }, py::arg("spec"), py::arg("D") = 40.0, py::arg("N") = 2048);
    m.def("cheng_yau_check", [](double s, int n, double D, int N, double collar, int samples, std::uint64_t seed) {
        return estimate_dict(cheng_yau_check(s, RadialGrid::make(n, D, N), CollarOptions{collar, samples, seed}));
    }, py::arg("s"), py::arg("n"), py::arg("D") = 40.0, py::arg("N") = 2048, py::arg("collar") = 0.1,
       py::arg("samples") = 100, py::arg("seed") = 1);
    m.def("weighted_estimate_check", [](double delta, double lambda, const OperatorSpec& s, int samples,
                                        std::uint64_t seed) {
        return estimate_dict(weighted_estimate_check(delta, lambda, s, samples, seed));
    }, py::arg("delta"), py::arg("lambda_"), py::arg("spec"), py::arg("samples") = 100, py::arg("seed") = 1);

    // einstein
    m.def("linearization_error", [](const std::string& boundary, int count, std::uint64_t seed) {
        const auto spec = BoundaryMetricSpec::parse(boundary);
        return linearization_check(reference_metric(spec, 64), count, seed).max_rel_error;
    }, py::arg("boundary") = "round:1", py::arg("count") = 20, py::arg("seed") = 1);
    m.def("einstein_expand", [](const std::string& boundary, int l, int M) {
        const auto st = asymptotic_expand(BoundaryMetricSpec::parse(boundary, 3, l), l, M);
        py::dict d;
        d["slopes"] = st.slopes;
        d["residual_norms"] = st.residual_norms;
        d["corrections"] = st.corrections;
        return d;
    }, py::arg("boundary"), py::arg("l") = 2, py::arg("M") = 256);
    m.def("einstein_solve", [](const std::string& boundary, int l, int M, double noise, std::uint64_t seed,
                               int max_iters, double tol) {
        const auto spec = BoundaryMetricSpec::parse(boundary, 3, l);
        NewtonResult res;
        double fd = 0.0;
        {
            py::gil_scoped_release nogil;
            auto init = asymptotic_expand(spec, l, M);
            if (noise > 0.0) add_coefficient_noise(init.metric, noise, seed);
            NewtonConfig cfg;
            cfg.max_iters = max_iters;
            cfg.tol_residual = tol;
            res = newton_solve(spec, init, cfg);
            for (int i = 2; i <= 9; ++i) fd = std::max(fd, fd_einstein_defect(res.metric, 0.1 * i, 1.0));
        }
        py::dict d;
        d["iterations"] = res.iterations;
        d["converged"] = res.converged;
        d["history"] = res.history;
        d["residual"] = res.residual.sup_norm;
        d["einstein_sup"] = res.residual.einstein_sup;
        d["weighted_correction"] = res.weighted_correction;
        d["fd_defect"] = fd;
        return d;
    }, py::arg("boundary"), py::arg("l") = 2, py::arg("M") = 256, py::arg("noise") = 0.0, py::arg("seed") = 1,
       py::arg("max_iters") = 20, py::arg("tol") = 1e-8);
    m.def("hypothesis_check", [](double K, const std::string& yamabe, int n) {
        return hypothesis_name(hypothesis_check(K, parse_yamabe(yamabe), n));
    });
}
