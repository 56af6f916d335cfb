// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ahelab/einstein.hpp"
#include "ahelab/errors.hpp"
#include "ahelab/green.hpp"
#include "ahelab/hyperbolic.hpp"
#include "ahelab/indicial.hpp"
#include "ahelab/spectral.hpp"

using namespace ahelab;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    std::string name;
    double time_limit;  // seconds, <= 0 for none
    std::function<Outcome()> run;
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

template <class F>
bool throws(F&& f, Errc code) {
    try {
        f();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

// --- 1 ---
Outcome indicial_table() {
    double worst = 0.0;
    int mismatches = 0, rows = 0;
    auto expect = [&](const OperatorSpec& s, double radicand) {
        ++rows;
        const auto got = indicial_radius(s).radius;
        if (radicand > 0.0) {
            if (!got) ++mismatches;
            else worst = std::max(worst, std::abs(*got - std::sqrt(radicand)));
        } else if (got) {
            ++mismatches;
        }
    };
    for (int n = 2; n <= 8; ++n) {
        const double m2 = n * n / 4.0;
        for (int c = -5; c <= 10; ++c) {
            expect(OperatorSpec::lichnerowicz(n, c), m2 - 2.0 * n + c);
            expect(OperatorSpec::scalar(n, c), m2 + c);
            for (int r = 0; r <= 3; ++r) expect(OperatorSpec::covariant(n, r, c), m2 + r + c);
        }
        ++rows;
        const auto v = indicial_radius(OperatorSpec::vector(n)).radius;
        if (!v) ++mismatches;
        else worst = std::max(worst, std::abs(*v - (n / 2.0 + 1.0)));
        for (int q = 0; q <= n + 1; ++q) {
            ++rows;
            const auto h = indicial_radius(OperatorSpec::hodge(n, q));
            const double want = 2 * q < n ? n / 2.0 - q : (2 * q == n + 1 ? 0.5 : q - (n + 2) / 2.0);
            const bool fredholm_expected = 2 * q != n && 2 * q != n + 1 && want > 0.0;
            if (2 * q == n || want <= 0.0) {
                if (h.radius) ++mismatches;
            } else if (!h.radius) {
                ++mismatches;
            } else {
                worst = std::max(worst, std::abs(*h.radius - want));
            }
            if (h.fredholm() != fredholm_expected || h.flag_middle_degree != (2 * q == n + 1)) ++mismatches;
        }
    }
    return {mismatches == 0 && worst <= 1e-12,
            std::to_string(rows) + " rows, max error " + sci(worst) + ", " + std::to_string(mismatches) + " mismatches"};
}

// --- 2 ---
Outcome exponent_symmetry() {
    double sym = 0.0, shift = 0.0;
    int mismatches = 0;
    for (int n = 2; n <= 8; ++n)
        for (int r = 0; r <= 3; ++r) {
            const double R0 = *indicial_radius(OperatorSpec::covariant(n, r, 0)).radius;
            for (int c = -5; c <= 10; ++c) {
                const auto spec = OperatorSpec::covariant(n, r, c);
                const auto e = characteristic_exponents(spec);
                const auto R = indicial_radius(spec).radius;
                const double exact = n * n / 4.0 + r + c;
                if (bool(e) != (exact > 0.0) || bool(R) != (exact > 0.0)) {
                    ++mismatches;
                    continue;
                }
                if (!e) continue;
                const auto shifted = shifted_radius(R0, c);
                if (!shifted) {
                    ++mismatches;
                    continue;
                }
                sym = std::max(sym, std::abs(e->first + e->second - (n - 2.0 * r)));
                shift = std::max(shift, std::abs(*R - *shifted));
            }
        }
    return {mismatches == 0 && sym <= 1e-12 && shift <= 1e-12,
            "symmetry defect " + sci(sym) + ", shift-law defect " + sci(shift)};
}

// --- 3 ---
Outcome lichnerowicz_window() {
    bool ok = true;
    for (int n = 3; n <= 8; ++n) {
        const auto spec = OperatorSpec::lichnerowicz(n, 2.0 * n);
        const auto w = fredholm_window(spec, WindowKind::Holder);
        const auto e = characteristic_exponents(spec);
        ok = ok && w && w->lower == 0.0 && w->upper == n && e && e->first == -2.0 && e->second == n - 2.0;
    }
    return {ok, "n = 3..8, window (0, n), exponents (-2, n-2)"};
}

// --- 4 ---
std::vector<double> linspace(double a, double b, int m) {
    std::vector<double> x(m);
    for (int i = 0; i < m; ++i) x[i] = a + (b - a) * i / (m - 1);
    return x;
}

Outcome green_decay() {
    using clock = std::chrono::steady_clock;
    auto slope_of = [](int n, double c, double& secs) {
        const auto t0 = clock::now();
        const auto prof = green_profile(RadialOperator{n, c}, linspace(0.1, 20.0, 600));
        const double s = decay_slope(prof, 5.0, 15.0);
        secs = std::chrono::duration<double>(clock::now() - t0).count();
        return s;
    };
    double t3, t2;
    const double s3 = slope_of(3, 0.0, t3), s2 = slope_of(2, 1.25, t2);
    const bool ok = std::abs(s3 - 3.0) <= 0.06 && std::abs(s2 - 2.5) <= 0.05 && t3 < 10.0 && t2 < 10.0;
    return {ok, "slopes " + sci(s3) + " (target 3), " + sci(s2) + " (target 2.5); " + sci(t3) + " s, " + sci(t2) + " s"};
}

// --- 5 ---
Outcome integral_bounds() {
    std::vector<double> u;
    for (int i = 0; i < 49; ++i) u.push_back(i == 0 ? 0.0 : 1.0 - std::pow(10.0, -6.0 * i / 48));
    const double triples[6][3] = {{0.5, 0.5, 2.0}, {0.0, 1.0, 2.5}, {2.0, 0.5, 3.0},
                                  {-0.5, 0.2, 1.5}, {1.0, 0.0, 1.5}, {3.0, 2.0, 4.0}};
    bool ok = true;
    for (const auto& t : triples) {
        const auto rep = hypergeometric_bound(t[0], t[1], t[2], u);
        ok = ok && std::isfinite(rep.sup_ratio) && rep.monotone_tail;
    }
    ok = ok && throws([&] { (void)hypergeometric_bound(0.5, 1.0, 2.0, u); }, Errc::ParameterViolation);
    ok = ok && throws([&] { (void)hypergeometric_bound(-1.5, 0.5, 2.0, u); }, Errc::ParameterViolation);
    const double dist[3][3] = {{2.5, 1.0, 2}, {3.0, 1.0, 3}, {4.0, 1.5, 2}};
    double worst = 0.0;
    for (const auto& t : dist) {
        const int n = static_cast<int>(t[2]);
        const auto a = distance_integral_bound(t[0], t[1], n, 10, 3, 12);
        const auto b = distance_integral_bound(t[0], t[1], n, 10, 3, 24);
        ok = ok && std::isfinite(a.sup_ratio);
        worst = std::max(worst, std::abs(b.sup_ratio - a.sup_ratio) / a.sup_ratio);
    }
    ok = ok && worst < 0.02;
    ok = ok && throws([] { (void)distance_integral_bound(1.0, 1.5, 2, 8, 1); }, Errc::ParameterViolation);
    return {ok, "6 hypergeometric triples, distance doubling change " + sci(worst)};
}

// --- 6 ---
Outcome spectrum_bottom_check() {
    const double b0 = spectrum_bottom(discretize_radial(OperatorSpec::scalar(3, 0.0), 40.0, 2048));
    double shift = 0.0;
    for (double c : {0.5, 3.0, -1.0})
        shift = std::max(shift,
                         std::abs(spectrum_bottom(discretize_radial(OperatorSpec::scalar(3, c), 40.0, 2048)) - b0 - c));
    const double rel = std::abs(b0 - 2.25) / 2.25;
    return {rel <= 0.01 && shift <= 1e-10, "lambda_min " + sci(b0) + " (rel " + sci(rel) + "), shift defect " + sci(shift)};
}

// --- 7 ---
Outcome collar_estimates() {
    const int n = 3;
    const auto grid = RadialGrid::make(n, 40.0, 2048);
    const auto cy = cheng_yau_check(n / 2.0, grid, CollarOptions{0.1, 100, 4});
    bool ok = cy.lambda_observed >= n * n / 4.0 - 0.05 && cy.holds == cy.total;
    const auto spec = OperatorSpec::scalar(n, 0.0);
    double drift = 0.0;
    for (double delta : {0.0, 0.5, 1.0, -1.0}) {
        const auto a = weighted_estimate_check(delta, 2.25, spec, 100, 2);
        const auto b = weighted_estimate_check(delta, 2.25, spec, 200, 2);
        ok = ok && std::isfinite(a.constant_C) && std::isfinite(b.constant_C) && a.constant_C > 0.0;
        if (a.constant_C > 0.0) drift = std::max(drift, std::abs(b.constant_C - a.constant_C) / a.constant_C);
    }
    ok = ok && drift < 0.1;
    ok = ok && throws([&] { (void)weighted_estimate_check(1.6, 2.25, spec, 10, 1); }, Errc::WeightTooLarge);
    ok = ok && throws([&] { (void)weighted_estimate_check(-1.6, 2.25, spec, 10, 1); }, Errc::WeightTooLarge);
    return {ok, "Cheng-Yau lambda " + sci(cy.lambda_observed) + ", weighted C drift " + sci(drift)};
}

// --- 8 ---
Outcome bochner() {
    const auto grid = RadialGrid::make(3, 40.0, 256);
    const auto q0 = bochner_identity_check(0, 1.5, grid, 50, 5);
    const auto q1 = bochner_identity_check(1, 1.5, grid, 50, 6);
    return {q0.epsilon < 1e-6 && q1.epsilon < 1e-5 && q0.total == 50 && q1.total == 50,
            "defects " + sci(q0.epsilon) + " (q=0), " + sci(q1.epsilon) + " (q=1)"};
}

// --- 9 ---
Outcome weitzenbock() {
    const auto a = weitzenbock_radial_check(3, RadialGrid::make(3, 20.0, 256));
    const auto b = weitzenbock_radial_check(3, RadialGrid::make(3, 20.0, 512));
    const double ratio = a.epsilon / b.epsilon;
    return {a.lambda_claimed == -3.0 && ratio >= 3.5 && ratio <= 4.5, "doubling ratio " + sci(ratio)};
}

// --- 10 ---
Outcome membership() {
    int checked = 0, agree = 0;
    for (int n : {2, 3})
        for (int r : {0, 1, 2})
            for (double s = -1.0; s <= 3.0 + 1e-9; s += 0.25)
                for (double d = -1.0; d <= 1.0 + 1e-9; d += 0.25)
                    for (double p : {1.25, 1.5, 2.0, 3.0, 4.0}) {
                        const auto m = lp_membership(s, d, p, r, n);
                        if (std::abs(m.gap) < 1e-3) continue;
                        ++checked;
                        agree += m.analytic == m.numeric;
                    }
    return {checked > 0 && agree == checked, std::to_string(agree) + "/" + std::to_string(checked) + " agree"};
}

// --- 11 ---
Outcome linearization() {
    double worst = 0.0;
    for (const auto& spec : {BoundaryMetricSpec::round(3, 1.0), BoundaryMetricSpec::berger(1.0)}) {
        const auto h = reference_metric(spec, 64);
        worst = std::max(worst, linearization_check(h, 20, 11).max_rel_error);
    }
    return {worst < 1e-5, "max relative error " + sci(worst) + " over 2 x 20 perturbations"};
}

// --- 12 ---
Outcome recursion() {
    const auto b = asymptotic_expand(BoundaryMetricSpec::berger(1.05), 2, 256);
    const bool slopes = b.slopes.size() == 3 && b.slopes[1] >= 0.9 && b.slopes[2] >= 1.9;
    const auto r = asymptotic_expand(BoundaryMetricSpec::round(3, 1.0), 2, 256);
    bool zero = r.corrections.size() == 2;
    for (const auto& c : r.corrections)
        for (double x : c) zero = zero && x == 0.0;
    std::ostringstream d;
    d << "slopes " << sci(b.slopes[1]) << ", " << sci(b.slopes[2]) << "; round corrections "
      << (zero ? "zero" : "nonzero");
    return {slopes && zero, d.str()};
}

// --- 13 ---
Outcome newton() {
    const auto round = BoundaryMetricSpec::round(3, 1.0);
    auto init = asymptotic_expand(round, 2, 256);
    add_coefficient_noise(init.metric, 1e-2, 1);
    NewtonConfig cfg;
    cfg.max_iters = 10;
    const auto rr = newton_solve(round, init, cfg);
    const bool round_ok = rr.converged && rr.iterations <= 10 && rr.weighted_correction < 1e-8;

    const auto berger = BoundaryMetricSpec::berger(1.05);
    const auto bi = asymptotic_expand(berger, 2, 256);
    const auto br = newton_solve(berger, bi);
    double fd = 0.0;
    for (int i = 2; i <= 9; ++i) fd = std::max(fd, fd_einstein_defect(br.metric, 0.1 * i, 1.0));
    const bool berger_ok = br.converged && br.residual.sup_norm < 1e-8 && fd < 1e-6;
    return {round_ok && berger_ok, "round: " + std::to_string(rr.iterations) + " its, correction " +
                                       sci(rr.weighted_correction) + "; berger: residual " +
                                       sci(br.residual.sup_norm) + ", FD |Ric+3g| " + sci(fd)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"indicial radius table", 1.0, indicial_table},
        {"exponent symmetry and shift law", 0.0, exponent_symmetry},
        {"Delta_L + 2n window", 0.0, lichnerowicz_window},
        {"green decay slopes", 20.0, green_decay},
        {"integral bounds", 60.0, integral_bounds},
        {"spectrum bottom", 30.0, spectrum_bottom_check},
        {"Cheng-Yau and weighted estimates", 0.0, collar_estimates},
        {"Bochner identity", 0.0, bochner},
        {"Weitzenbock radial identity", 0.0, weitzenbock},
        {"membership oracle", 0.0, membership},
        {"Einstein linearization", 0.0, linearization},
        {"asymptotic recursion", 0.0, recursion},
        {"Newton solve", 300.0, newton},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit > 0.0 && secs >= c.time_limit) {
            o.pass = false;
            o.detail += "; over time limit " + sci(c.time_limit) + " s";
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1, c.name.c_str(), o.detail.c_str(),
                    secs);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed ? 1 : 0;
}
