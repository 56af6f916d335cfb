#include "ahelab/indicial.hpp"
#include "ahelab/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace ahelab {

std::string family_name(Family f) {
    switch (f) {
        case Family::ScalarLaplacian: return "scalar";
        case Family::CovariantLaplacianTraceFree: return "covariant";
        case Family::Lichnerowicz: return "lichnerowicz";
        case Family::HodgeLaplacian: return "hodge";
        case Family::VectorLaplacian: return "vector";
    }
    return "?";
}

Family parse_family(const std::string& s) {
    if (s == "scalar") return Family::ScalarLaplacian;
    if (s == "covariant") return Family::CovariantLaplacianTraceFree;
    if (s == "lichnerowicz") return Family::Lichnerowicz;
    if (s == "hodge") return Family::HodgeLaplacian;
    if (s == "vector") return Family::VectorLaplacian;
    throw Error(Errc::InvalidSpec, "unknown operator family '" + s + "'");
}

OperatorSpec OperatorSpec::scalar(int n, double c) {
    return {Family::ScalarLaplacian, n, 0, 0, c};
}
OperatorSpec OperatorSpec::covariant(int n, int r, double c) {
    return {Family::CovariantLaplacianTraceFree, n, r, 0, c};
}
OperatorSpec OperatorSpec::lichnerowicz(int n, double c) {
    return {Family::Lichnerowicz, n, 0, 0, c};
}
OperatorSpec OperatorSpec::hodge(int n, int q) { return {Family::HodgeLaplacian, n, 0, q, 0.0}; }
OperatorSpec OperatorSpec::vector(int n) { return {Family::VectorLaplacian, n, 0, 0, 0.0}; }

void OperatorSpec::validate() const {
    if (n < 1) throw Error(Errc::InvalidSpec, "n must be >= 1");
    if (family != Family::CovariantLaplacianTraceFree && r_tensor != 0)
        throw Error(Errc::InvalidSpec, "r_tensor is only used by the covariant family");
    if (r_tensor < 0) throw Error(Errc::InvalidSpec, "r_tensor must be >= 0");
    if (family != Family::HodgeLaplacian && q_degree != 0)
        throw Error(Errc::InvalidSpec, "q_degree is only used by the hodge family");
    if (q_degree < 0 || q_degree > n + 1)
        throw Error(Errc::InvalidSpec, "q_degree must lie in [0, n+1]");
    if ((family == Family::HodgeLaplacian || family == Family::VectorLaplacian) && c_shift != 0.0)
        throw Error(Errc::InvalidSpec, "hodge and vector families take no shift");
}

int bundle_weight(const OperatorSpec& s) {
    switch (s.family) {
        case Family::ScalarLaplacian: return 0;
        case Family::CovariantLaplacianTraceFree: return s.r_tensor;
        case Family::Lichnerowicz: return 2;
        case Family::HodgeLaplacian: return s.q_degree;
        case Family::VectorLaplacian: return -1;
    }
    return 0;
}

namespace {

// mu_min for the families whose indicial radius is sqrt of an explicit radicand.
std::optional<double> radicand(const OperatorSpec& s) {
    const double n = s.n;
    switch (s.family) {
        case Family::ScalarLaplacian: return n * n / 4.0 + s.c_shift;
        case Family::CovariantLaplacianTraceFree: return n * n / 4.0 + s.r_tensor + s.c_shift;
        case Family::Lichnerowicz: return n * n / 4.0 - 2.0 * n + s.c_shift;
        default: return std::nullopt;
    }
}

}  // namespace

RadiusResult indicial_radius(const OperatorSpec& s) {
    s.validate();
    RadiusResult out;
    if (auto mu = radicand(s)) {
        if (*mu > 0.0) out.radius = std::sqrt(*mu);
        return out;
    }
    if (s.family == Family::VectorLaplacian) {
        out.radius = s.n / 2.0 + 1.0;
        return out;
    }
    // Hodge rows, doubled to stay in integers.
    const int q2 = 2 * s.q_degree, n = s.n;
    if (q2 < n) {
        out.radius = n / 2.0 - s.q_degree;
    } else if (q2 == n) {
        // R = 0
    } else if (q2 == n + 1) {
        out.radius = 0.5;
        out.flag_middle_degree = true;
    } else {
        double R = s.q_degree - (n + 2) / 2.0;
        if (R > 0.0) out.radius = R;
    }
    return out;
}

std::optional<IndicialReport> indicial_report(const OperatorSpec& s) {
    auto rr = indicial_radius(s);
    if (!rr.radius) return std::nullopt;
    IndicialReport rep;
    rep.weight = bundle_weight(s);
    rep.radius = *rr.radius;
    const double center = s.n / 2.0 - rep.weight;
    rep.exponent_minus = center - rep.radius;
    rep.exponent_plus = center + rep.radius;
    rep.base_eigenvalue_min = rep.radius * rep.radius;
    rep.flag_middle_degree = rr.flag_middle_degree;
    return rep;
}

std::optional<std::pair<double, double>> characteristic_exponents(const OperatorSpec& s) {
    auto rep = indicial_report(s);
    if (!rep) return std::nullopt;
    return std::pair{rep->exponent_minus, rep->exponent_plus};
}

double indicial_value(const OperatorSpec& s, double sval) {
    s.validate();
    auto mu = radicand(s);
    if (!mu) throw Error(Errc::UnsupportedFamily, "indicial_value needs a scalar-valued indicial action");
    const double t = sval - s.n / 2.0 + bundle_weight(s);
    return *mu - t * t;
}

std::optional<double> shifted_radius(double R, double c) {
    if (R < 0.0) throw Error(Errc::ParameterViolation, "radius must be nonnegative");
    double v = c + R * R;
    if (v > 0.0) return std::sqrt(v);
    return std::nullopt;
}

std::optional<FredholmWindow> fredholm_window(const OperatorSpec& s, WindowKind kind, double p) {
    auto rr = indicial_radius(s);
    if (!rr.radius) return std::nullopt;
    FredholmWindow w;
    w.kind = kind;
    const double R = *rr.radius, n = s.n;
    if (kind == WindowKind::Sobolev) {
        if (!(p > 1.0) || !std::isfinite(p))
            throw Error(Errc::ParameterViolation, "Sobolev exponent must satisfy 1 < p < inf");
        w.p = p;
        w.lower = n / 2.0 - n / p - R;
        w.upper = n / 2.0 - n / p + R;
    } else {
        w.lower = n / 2.0 - R;
        w.upper = n / 2.0 + R;
    }
    return w;
}

// ---------------------------------------------------------------------------

CurvaturePoint::CurvaturePoint(int dim, std::vector<double> riemann, std::vector<double> metric)
    : dim_(dim), rm_(std::move(riemann)), g_(std::move(metric)) {
    const std::size_t d = dim;
    if (dim < 1 || rm_.size() != d * d * d * d || g_.size() != d * d)
        throw Error(Errc::ShapeMismatch, "curvature point arrays have wrong size");
    auto at = [&](const std::vector<double>& v, int i, int j, int k, int l) {
        return v[((i * dim + j) * dim + k) * dim + l];
    };
    double scale = 1.0;
    for (double x : rm_) scale = std::max(scale, std::abs(x));
    std::vector<double> sym(rm_.size());
    double defect = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k)
                for (int l = 0; l < dim; ++l) {
                    double a = at(rm_, i, j, k, l);
                    double imgs[4] = {-at(rm_, j, i, k, l), -at(rm_, i, j, l, k),
                                      at(rm_, k, l, i, j), at(rm_, j, i, l, k)};
                    double avg = a;
                    for (double b : imgs) {
                        defect = std::max(defect, std::abs(a - b));
                        avg += b;
                    }
                    sym[((i * dim + j) * dim + k) * dim + l] = avg / 5.0;
                }
    if (defect > 1e-10 * scale)
        throw Error(Errc::SymmetryViolation, "riemann array violates index symmetries");
    rm_ = std::move(sym);

    Eigen::MatrixXd G(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) G(i, j) = g_[i * dim + j];
    if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, G.cwiseAbs().maxCoeff()))
        throw Error(Errc::SymmetryViolation, "metric is not symmetric");
    G = 0.5 * (G + G.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
        throw Error(Errc::NotPositiveDefinite, "metric is not positive definite");
    Eigen::MatrixXd Gi = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    gi_.resize(d * d);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            g_[i * dim + j] = G(i, j);
            gi_[i * dim + j] = Gi(i, j);
        }
    ric_.assign(d * d, 0.0);
    for (int i = 0; i < dim; ++i)
        for (int k = 0; k < dim; ++k) {
            double s = 0.0;
            for (int j = 0; j < dim; ++j)
                for (int l = 0; l < dim; ++l) s += gi_[j * dim + l] * R(i, j, k, l);
            ric_[i * dim + k] = s;
        }
}

CurvaturePoint CurvaturePoint::constant_curvature(int dim, double K, std::vector<double> metric) {
    const std::size_t d = dim;
    if (metric.size() != d * d) throw Error(Errc::ShapeMismatch, "metric has wrong size");
    std::vector<double> rm(d * d * d * d);
    auto g = [&](int i, int j) { return metric[i * dim + j]; };
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            for (int k = 0; k < dim; ++k)
                for (int l = 0; l < dim; ++l)
                    rm[((i * dim + j) * dim + k) * dim + l] =
                        K * (g(i, k) * g(j, l) - g(i, l) * g(j, k));
    return CurvaturePoint(dim, std::move(rm), std::move(metric));
}

Tensor::Tensor(int rank_, int dim_) : rank(rank_), dim(dim_) {
    std::size_t n = 1;
    for (int i = 0; i < rank_; ++i) n *= dim_;
    data.assign(n, 0.0);
}

Action parse_action(const std::string& s) {
    if (s == "ringRc") return Action::RingRc;
    if (s == "ringRm") return Action::RingRm;
    if (s == "tildeRc") return Action::TildeRc;
    if (s == "tildeRm") return Action::TildeRm;
    throw Error(Errc::InvalidSpec, "unknown curvature action '" + s + "'");
}

Tensor curvature_action(const CurvaturePoint& pt, const Tensor& u, Action which) {
    const int d = pt.dim();
    if (u.dim != d) throw Error(Errc::ShapeMismatch, "tensor dimension differs from the point");
    if (u.rank < 1) throw Error(Errc::ShapeMismatch, "curvature actions need rank >= 1");
    if ((which == Action::RingRc || which == Action::RingRm) && u.rank != 2)
        throw Error(Errc::ShapeMismatch, "ring actions act on 2-tensors");
    std::size_t expect = 1;
    for (int i = 0; i < u.rank; ++i) expect *= d;
    if (u.data.size() != expect) throw Error(Errc::ShapeMismatch, "tensor data has wrong size");

    Tensor out(u.rank, d);
    if (which == Action::RingRc || which == Action::RingRm) {
        // u_j^k and u^{kl}
        std::vector<double> mixed(d * d, 0.0), up(d * d, 0.0);
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                double s = 0.0;
                for (int l = 0; l < d; ++l) s += u.data[j * d + l] * pt.ginv(l, k);
                mixed[j * d + k] = s;
            }
        for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
                double s = 0.0;
                for (int a = 0; a < d; ++a) s += pt.ginv(k, a) * mixed[a * d + l];
                up[k * d + l] = s;
            }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                if (which == Action::RingRc) {
                    for (int k = 0; k < d; ++k)
                        s += 0.5 * (pt.ricci(i, k) * mixed[j * d + k] + pt.ricci(j, k) * mixed[i * d + k]);
                } else {
                    for (int k = 0; k < d; ++k)
                        for (int l = 0; l < d; ++l) s += pt.R(i, k, j, l) * up[k * d + l];
                }
                out.data[i * d + j] = s;
            }
        return out;
    }

    // Rank-general actions. Index strides: last index has stride 1.
    const int r = u.rank;
    std::vector<std::size_t> stride(r);
    stride[r - 1] = 1;
    for (int p = r - 2; p >= 0; --p) stride[p] = stride[p + 1] * d;
    std::vector<int> idx(r);
    // Raised Ricci R_j^k and R_i^l_j^k = g^{la} g^{kb} R_{iajb}.
    std::vector<double> ricmix(d * d, 0.0);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            double s = 0.0;
            for (int a = 0; a < d; ++a) s += pt.ricci(j, a) * pt.ginv(a, k);
            ricmix[j * d + k] = s;
        }
    std::vector<double> rup;
    if (which == Action::TildeRm) {
        rup.assign(std::size_t(d) * d * d * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int l = 0; l < d; ++l)
                for (int j = 0; j < d; ++j)
                    for (int k = 0; k < d; ++k) {
                        double s = 0.0;
                        for (int a = 0; a < d; ++a)
                            for (int b = 0; b < d; ++b)
                                s += pt.ginv(l, a) * pt.ginv(k, b) * pt.R(i, a, j, b);
                        rup[((i * d + l) * d + j) * d + k] = s;
                    }
    }
    for (std::size_t flat = 0; flat < out.data.size(); ++flat) {
        std::size_t rem = flat;
        for (int p = 0; p < r; ++p) {
            idx[p] = static_cast<int>(rem / stride[p]);
            rem %= stride[p];
        }
        const int j = idx[r - 1];
        const std::size_t base_last = flat - std::size_t(j);
        double s = 0.0;
        if (which == Action::TildeRc) {
            for (int k = 0; k < d; ++k) s += ricmix[j * d + k] * u.data[base_last + k];
        } else {
            for (int p = 0; p < r - 1; ++p) {
                const int ip = idx[p];
                const std::size_t base = base_last - std::size_t(ip) * stride[p];
                for (int l = 0; l < d; ++l)
                    for (int k = 0; k < d; ++k)
                        s += rup[((ip * d + l) * d + j) * d + k] * u.data[base + l * stride[p] + k];
            }
        }
        out.data[flat] = s;
    }
    return out;
}

double koiso_bound(double K_max, int n) { return n + (n - 1) * K_max; }

double curvature_threshold(int n) {
    if (n < 3) throw Error(Errc::ParameterViolation, "curvature_threshold needs n >= 3");
    return (double(n) * n - 8.0 * n) / (8.0 * n - 8.0);
}

}  // namespace ahelab
