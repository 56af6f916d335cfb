#include "ahelab/green.hpp"
#include "ahelab/errors.hpp"
#include "ahelab/numerics.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace ahelab {

double sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

double RadialOperator::apply(double u, double du, double d2u, double d) const {
    return -d2u - n * du / std::tanh(d) + c_shift * u;
}

std::optional<std::pair<double, double>> RadialOperator::roots() const {
    double disc = n * n / 4.0 + c_shift;
    if (disc < 0.0) return std::nullopt;
    double R = std::sqrt(disc);
    return std::pair{n / 2.0 - R, n / 2.0 + R};
}

RadialOperator radial_reduce(const OperatorSpec& spec) {
    spec.validate();
    if (spec.family != Family::ScalarLaplacian)
        throw Error(Errc::UnsupportedFamily, "radial reduction is implemented for the scalar Laplacian");
    return RadialOperator{spec.n, spec.c_shift};
}

// ---------------------------------------------------------------------------

double FrobeniusSeries::value(double rho) const {
    double s = 0.0, p = 1.0, r2 = rho * rho;
    for (std::size_t m = 0; m < a.size(); m += 2, p *= r2) s += a[m] * p;
    return s * std::pow(rho, this->s);
}

double FrobeniusSeries::Dvalue(double rho) const {
    double s = 0.0, p = 1.0, r2 = rho * rho;
    for (std::size_t m = 0; m < a.size(); m += 2, p *= r2) s += a[m] * (this->s + m) * p;
    return s * std::pow(rho, this->s);
}

double FrobeniusSeries::D2value(double rho) const {
    double s = 0.0, p = 1.0, r2 = rho * rho;
    for (std::size_t m = 0; m < a.size(); m += 2, p *= r2) {
        double e = this->s + m;
        s += a[m] * e * e * p;
    }
    return s * std::pow(rho, this->s);
}

std::pair<double, double> FrobeniusSeries::at_distance(double d) const {
    double rho = 1.0 / std::cosh(d);
    // d/dd = -tanh(d) D
    return {value(rho), -std::tanh(d) * Dvalue(rho)};
}

FrobeniusSeries frobenius_series(const RadialOperator& op, Branch br, int K) {
    auto rts = op.roots();
    if (!rts || rts->first == rts->second)
        throw Error(Errc::ParameterViolation, "exponents must be real and distinct");
    if (K < 0) throw Error(Errc::ParameterViolation, "order must be >= 0");
    const double diff = rts->second - rts->first;
    if (br == Branch::Minus && std::abs(diff - std::round(diff)) < 1e-12)
        throw Error(Errc::LogCaseUnsupported, "integer exponent difference on the minus branch");
    FrobeniusSeries f;
    f.s = br == Branch::Plus ? rts->second : rts->first;
    f.K = K;
    f.a.assign(K + 1, 0.0);
    f.a[0] = 1.0;
    const double n = op.n, c = op.c_shift;
    for (int m = 2; m <= K; m += 2) {
        const double e = f.s + m;
        const double den = e * e - n * e - c;
        f.a[m] = f.a[m - 2] * (e - 2.0) * (e - 1.0) / den;
    }
    return f;
}

double frobenius_residual(const RadialOperator& op, const FrobeniusSeries& f, double rho) {
    const double u = f.value(rho), Du = f.Dvalue(rho), D2u = f.D2value(rho);
    const double r2 = rho * rho;
    const double Lu = -(1.0 - r2) * D2u + (op.n + r2) * Du + op.c_shift * u;
    const double scale =
        std::max({(1.0 - r2) * std::abs(D2u) + (op.n + r2) * std::abs(Du) + std::abs(op.c_shift * u), std::abs(u)});
    return std::abs(Lu) / scale;
}

// ---------------------------------------------------------------------------

namespace {

using State = std::array<double, 2>;
namespace odeint = boost::numeric::odeint;

// The system is integrated in d itself. The log tanh(d/2) variable used before
// compresses d > 35 below the stepper's absolute time resolution.
double t_of_d(double d) { return d; }

// u' = v sinh^-n(d), v' = c sinh^n(d) u
struct RadialSystem {
    int n;
    double c;
    void operator()(const State& x, State& dxdt, double d) const {
        const double sn = std::exp(n * log_sinh(d));
        dxdt[0] = x[1] / sn;
        dxdt[1] = c * sn * x[0];
    }
};

std::vector<State> integrate_at(const RadialSystem& sys, State x0, double t0,
                                const std::vector<double>& times, double rtol) {
    std::vector<State> out;
    out.reserve(times.size());
    auto stepper = odeint::make_dense_output(1e-300, rtol, odeint::runge_kutta_dopri5<State>());
    std::vector<double> ts{t0};
    ts.insert(ts.end(), times.begin(), times.end());
    // first trial step from the first gap; an oversized trial near d = 0 gives
    // NaN error estimates, which odeint accepts
    const double dt = (times.empty() ? 1.0 : (times.front() - t0)) * 1e-2;
    try {
        odeint::integrate_times(stepper, sys, x0, ts.begin(), ts.end(), dt,
                                [&](const State& x, double) { out.push_back(x); });
    } catch (const std::exception& e) {
        throw Error(Errc::StiffIntegration, e.what());
    }
    out.erase(out.begin());
    for (const auto& s : out)
        if (!std::isfinite(s[0]) || !std::isfinite(s[1]))
            throw Error(Errc::StiffIntegration, "non-finite state");
    return out;
}

// Natural cubic spline second derivatives.
std::vector<double> spline_m2(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
        double diag = 2.0 * (h0 + h1);
        double rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        double sub = h0;
        double den = diag - sub * c[i - 1];
        c[i] = h1 / den;
        d[i] = (rhs - sub * d[i - 1]) / den;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m[i] = d[i] - c[i] * m[i + 1];
        if (i == 1) break;
    }
    return m;
}

struct Spline {
    std::vector<double> x, y, m;
    double eval(double t, double* dy = nullptr) const {
        auto it = std::upper_bound(x.begin(), x.end(), t);
        std::size_t i = std::clamp<std::size_t>(it - x.begin(), 1, x.size() - 1) - 1;
        double h = x[i + 1] - x[i];
        double A = (x[i + 1] - t) / h, B = (t - x[i]) / h;
        if (dy)
            *dy = (y[i + 1] - y[i]) / h - (3 * A * A - 1) * h * m[i] / 6 + (3 * B * B - 1) * h * m[i + 1] / 6;
        return A * y[i] + B * y[i + 1] + ((A * A * A - A) * m[i] + (B * B * B - B) * m[i + 1]) * h * h / 6;
    }
};

Spline log_spline(const GreenProfile& p) {
    Spline s;
    s.x = p.d;
    s.y.resize(p.K.size());
    for (std::size_t i = 0; i < p.K.size(); ++i) s.y[i] = std::log(std::abs(p.K[i]));
    s.m = spline_m2(s.x, s.y);
    return s;
}

}  // namespace

GreenProfile GreenProfile::scaled(double lambda) const {
    GreenProfile p = *this;
    p.normalization *= lambda;
    for (double& v : p.K) v *= lambda;
    return p;
}

double GreenProfile::eval(double dist) const {
    // Spline on log|K| is rebuilt lazily through a small cache keyed by data pointer.
    thread_local const GreenProfile* cached = nullptr;
    thread_local std::vector<double> cached_K;
    thread_local Spline sp;
    if (cached != this || cached_K != K) {
        sp = log_spline(*this);
        cached = this;
        cached_K = K;
    }
    const double sign = K.front() < 0 ? -1.0 : 1.0;
    const double dmin = d.front(), dmax = d.back();
    if (dist < dmin) {
        double dl = 0.0;
        double l0 = sp.eval(dmin, &dl);
        double kappa = -dmin * dl;  // local power -d log K / d log d
        if (n >= 2) return sign * std::exp(l0 - kappa * std::log(dist / dmin));
        return sign * std::exp(l0) * (1.0 + kappa * std::log(dmin / dist));
    }
    if (dist > dmax) {
        double s_plus = n / 2.0 + radius_R;
        double lr = std::log(std::cosh(dmax)) - std::log(std::cosh(dist));
        return sign * std::exp(sp.y.back() + s_plus * lr);
    }
    return sign * std::exp(sp.eval(dist));
}

GreenProfile green_profile(const RadialOperator& op, const std::vector<double>& d_grid,
                           const GreenOptions& opt) {
    auto rts = op.roots();
    if (!rts || !(rts->second > rts->first))
        throw Error(Errc::NonPositiveRadius, "green profile needs a positive indicial radius");
    if (d_grid.size() < 2) throw Error(Errc::ParameterViolation, "grid needs at least two points");
    std::vector<double> grid = d_grid;
    std::sort(grid.begin(), grid.end());
    if (grid.front() < 0.1) throw Error(Errc::ParameterViolation, "d_min must be >= 0.1");

    const RadialSystem sys{op.n, op.c_shift};
    const double d_match = 1.0;
    const double dmax = grid.back();

    // decaying branch, inward from dmax
    auto fs = frobenius_series(op, Branch::Plus, opt.series_order);
    auto [u1, du1] = fs.at_distance(dmax);
    State x1{u1, std::exp(op.n * log_sinh(dmax)) * du1};
    std::vector<double> times;
    std::vector<double> dd(grid.rbegin(), grid.rend());
    bool match_in_grid = false;
    for (double d : dd) {
        if (d == dmax) continue;
        times.push_back(t_of_d(d));
    }
    // merge matching point into the time list (times descending)
    std::vector<double> all = times;
    all.push_back(t_of_d(d_match));
    std::sort(all.begin(), all.end(), std::greater<>());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    match_in_grid = std::find(times.begin(), times.end(), t_of_d(d_match)) != times.end();
    (void)match_in_grid;
    auto states = integrate_at(sys, x1, t_of_d(dmax), all, opt.rtol);

    // regular solution outward from small d
    const double d0 = 1e-3, n = op.n, c = op.c_shift;
    State x0{1.0 + c * d0 * d0 / (2.0 * (n + 1.0)),
             std::exp(n * log_sinh(d0)) * c * d0 / (n + 1.0)};
    auto reg = integrate_at(sys, x0, t_of_d(d0), {t_of_d(d_match)}, opt.rtol);

    State up{};
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i] == t_of_d(d_match)) up = states[i];
    // Wronskian in (u, v = sinh^n u') variables
    const double W = reg[0][0] * up[1] - up[0] * reg[0][1];
    GreenProfile prof;
    prof.n = op.n;
    prof.c_shift = op.c_shift;
    prof.radius_R = 0.5 * (rts->second - rts->first);
    prof.normalization = -1.0 / (sphere_area(op.n) * W);
    prof.d = grid;
    prof.K.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double d = grid[j];
        double u;
        if (d == dmax) {
            u = x1[0];
        } else {
            auto it = std::find(all.begin(), all.end(), t_of_d(d));
            u = states[it - all.begin()][0];
        }
        prof.K[j] = prof.normalization * u;
    }
    return prof;
}

double decay_slope(const GreenProfile& prof, double d_lo, double d_hi) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < prof.d.size(); ++i)
        if (prof.d[i] >= d_lo && prof.d[i] <= d_hi && prof.K[i] != 0.0) {
            x.push_back(-std::log(std::cosh(prof.d[i])));
            y.push_back(std::log(std::abs(prof.K[i])));
        }
    if (x.size() < 8) throw Error(Errc::DegenerateWindow, "fewer than 8 grid points in the window");
    return lsq_slope(x, y);
}

// ---------------------------------------------------------------------------

namespace {

void check_hyp(double p, double q, double r) {
    if (!(p + 1.0 > 0.0) || !(q + 1.0 > 0.0) || !(r > q + 1.0))
        throw Error(Errc::ParameterViolation, "need p+1 > 0 and r > q+1 > 0");
}

}  // namespace

double hypergeometric_integral(double p, double q, double r, double u, int order) {
    check_hyp(p, q, r);
    if (u < 0.0 || u > 1.0 - 1e-6) throw Error(Errc::ParameterViolation, "u must lie in [0, 1-1e-6]");
    const double omu = 1.0 - u;
    const auto br = graded_breaks(0.0, 0.5, 0.0, 0.15, 1e-15);
    const auto rule = composite_gauss(br, order);
    // left half in t, right half in w = 1 - t. A negative endpoint exponent e
    // is removed by x = s^(1/(e+1)), so x^e dx = ds/(e+1).
    auto half = [&](double e, auto&& rest) {
        if (e >= 0.0) return rule.integrate([&](double x) { return std::pow(x, e) * rest(x); });
        const double a = 1.0 / (e + 1.0), top = std::pow(0.5, e + 1.0);
        const auto sub = composite_gauss(graded_breaks(0.0, top, 0.0, 0.15, 1e-15), order);
        return a * sub.integrate([&](double s) { return rest(std::pow(s, a)); });
    };
    const double left = half(p, [&](double t) { return std::pow(1.0 - t, q) * std::pow(1.0 - u * t, -r); });
    const double right = half(q, [&](double w) { return std::pow(1.0 - w, p) * std::pow(omu + u * w, -r); });
    return left + right;
}

double hypergeometric_ratio(double p, double q, double r, double u, int order) {
    return hypergeometric_integral(p, q, r, u, order) / std::pow(1.0 - u, q + 1.0 - r);
}

BoundCheckReport hypergeometric_bound(double p, double q, double r, const std::vector<double>& u_grid,
                                      int order) {
    check_hyp(p, q, r);
    BoundCheckReport rep;
    rep.grid = u_grid;
    rep.ratios.resize(u_grid.size());
    parallel_for(u_grid.size(), [&](std::size_t i) {
        rep.ratios[i] = hypergeometric_ratio(p, q, r, u_grid[i], order);
    });
    double umax = -1.0;
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        if (rep.ratios[i] > rep.sup_ratio || i == 0) {
            rep.sup_ratio = rep.ratios[i];
            rep.witness = u_grid[i];
        }
        umax = std::max(umax, u_grid[i]);
    }
    if (!u_grid.empty()) {
        double u2 = 1.0 - 10.0 * (1.0 - umax);
        if (u2 >= 0.0) {
            double a = hypergeometric_ratio(p, q, r, umax, order);
            double b = hypergeometric_ratio(p, q, r, u2, order);
            rep.tail_change = std::abs(a - b) / std::abs(a);
            rep.monotone_tail = rep.tail_change < 0.05;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

// Tensor Gauss rule over (s, theta) in (0,1) x (0,pi) graded toward the axis
// point s = r, theta = 0 and toward the sphere s = 1.
struct PolarRule {
    QuadRule s, th;
};

PolarRule polar_rule(double r, int order, double focus_width) {
    auto bs = graded_breaks(0.0, 1.0, r > 0.0 ? r : 0.0, 0.25, focus_width);
    auto b1 = graded_breaks(0.0, 1.0, 1.0, 0.25, 1e-12);
    bs.insert(bs.end(), b1.begin(), b1.end());
    std::sort(bs.begin(), bs.end());
    bs.erase(std::unique(bs.begin(), bs.end()), bs.end());
    auto bt = graded_breaks(0.0, std::numbers::pi, 0.0, 0.25, focus_width);
    return {composite_gauss(bs, order), composite_gauss(bt, order)};
}

double polar_volume(int n, double s, double th) {
    const double w = 1.0 - s * s;
    return std::pow(2.0, n + 1) * std::pow(s, n) * std::pow(std::sin(th), n - 1) / std::pow(w, n + 1);
}

template <class F>
double polar_integral(int n, double r, int order, double focus_width, F&& f) {
    auto rule = polar_rule(r, order, focus_width);
    const double area = n >= 2 ? sphere_area(n - 1) : 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < rule.s.size(); ++i) {
        const double s = rule.s.x[i];
        double inner = 0.0;
        for (std::size_t j = 0; j < rule.th.size(); ++j) {
            const double th = rule.th.x[j];
            inner += rule.th.w[j] * f(s, th) * polar_volume(n, s, th);
        }
        total += rule.s.w[i] * inner;
    }
    return area * total;
}

std::vector<double> axis_radii(int count, std::uint64_t seed) {
    std::vector<double> r{0.0};
    for (int k = 1; k <= 6; ++k) r.push_back(1.0 - std::pow(10.0, -0.5 * k));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 0.999);
    while (static_cast<int>(r.size()) < count) r.push_back(U(rng));
    std::sort(r.begin(), r.end());
    return r;
}

}  // namespace

double distance_integral_ratio(double a, double b, int n, double r, int order) {
    if (!(a + b > n) || !(a > b)) throw Error(Errc::ParameterViolation, "need a+b > n and a > b");
    if (n < 1) throw Error(Errc::ParameterViolation, "n must be >= 1");
    if (r < 0.0 || r >= 1.0) throw Error(Errc::ParameterViolation, "axis radius must lie in [0,1)");
    const double w = std::max(1e-3 * (1.0 - r), 1e-9);
    double I = polar_integral(n, r, order, w, [&](double s, double th) {
        const double s2 = s * s, r2 = r * r;
        const double rxe = (1.0 - r2) * (1.0 - s2) / ((1.0 + r2) * (1.0 + s2) - 4.0 * r * s * std::cos(th));
        const double re = (1.0 - s2) / (1.0 + s2);
        return std::pow(rxe, a) * std::pow(re, b);
    });
    const double rx = (1.0 - r * r) / (1.0 + r * r);
    return I / std::pow(rx, b);
}

BoundCheckReport distance_integral_bound(double a, double b, int n, int sample_pairs, std::uint64_t seed,
                                         int order) {
    if (!(a + b > n) || !(a > b)) throw Error(Errc::ParameterViolation, "need a+b > n and a > b");
    BoundCheckReport rep;
    rep.grid = axis_radii(std::max(sample_pairs, 8), seed);
    rep.ratios.resize(rep.grid.size());
    parallel_for(rep.grid.size(), [&](std::size_t i) {
        rep.ratios[i] = distance_integral_ratio(a, b, n, rep.grid[i], order);
    });
    for (std::size_t i = 0; i < rep.grid.size(); ++i)
        if (i == 0 || rep.ratios[i] > rep.sup_ratio) {
            rep.sup_ratio = rep.ratios[i];
            rep.witness = rep.grid[i];
        }
    const std::size_t m = rep.grid.size();
    rep.tail_change = std::abs(rep.ratios[m - 1] - rep.ratios[m - 2]) / std::abs(rep.ratios[m - 1]);
    rep.monotone_tail = rep.tail_change < 0.05;
    return rep;
}

double kernel_weight_ratio(const GreenProfile& prof, double b, double r, int order) {
    const int n = prof.n;
    if (!(b > n / 2.0 - prof.radius_R && b < n / 2.0 + prof.radius_R))
        throw Error(Errc::WeightOutOfRange, "need n/2 - R < b < n/2 + R");
    if (r < 0.0 || r >= 1.0) throw Error(Errc::ParameterViolation, "axis radius must lie in [0,1)");
    const double r2 = r * r;
    double I = polar_integral(n, r, order, 1e-9, [&](double s, double th) {
        const double s2 = s * s;
        const double diff = r2 + s2 - 2.0 * r * s * std::cos(th);
        const double d = 2.0 * std::asinh(std::sqrt(std::max(diff, 0.0) / ((1.0 - r2) * (1.0 - s2))));
        if (d <= 0.0) return 0.0;
        const double re = (1.0 - s2) / (1.0 + s2);
        return std::abs(prof.eval(d)) * std::pow(re, b);
    });
    const double rx = (1.0 - r2) / (1.0 + r2);
    return I / std::pow(rx, b);
}

BoundCheckReport kernel_weight_bound(const GreenProfile& prof, double b, int n,
                                     const std::vector<double>& radii, int order) {
    if (n != prof.n) throw Error(Errc::ParameterViolation, "profile dimension differs from n");
    if (!(b > n / 2.0 - prof.radius_R && b < n / 2.0 + prof.radius_R))
        throw Error(Errc::WeightOutOfRange, "need n/2 - R < b < n/2 + R");
    BoundCheckReport rep;
    rep.grid = radii.empty() ? std::vector<double>{0.0, 0.3, 0.6, 0.9, 0.99, 0.999} : radii;
    rep.ratios.resize(rep.grid.size());
    for (std::size_t i = 0; i < rep.grid.size(); ++i)
        rep.ratios[i] = kernel_weight_ratio(prof, b, rep.grid[i], order);
    for (std::size_t i = 0; i < rep.grid.size(); ++i)
        if (i == 0 || rep.ratios[i] > rep.sup_ratio) {
            rep.sup_ratio = rep.ratios[i];
            rep.witness = rep.grid[i];
        }
    const std::size_t m = rep.grid.size();
    if (m >= 2) {
        rep.tail_change = std::abs(rep.ratios[m - 1] - rep.ratios[m - 2]) / std::abs(rep.ratios[m - 1]);
        rep.monotone_tail = rep.tail_change < 0.05;
    }
    return rep;
}

}  // namespace ahelab
