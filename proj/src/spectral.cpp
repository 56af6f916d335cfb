#include "ahelab/spectral.hpp"
#include "ahelab/errors.hpp"
#include "ahelab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ahelab {

namespace {

// log of int_lo^hi sinh^n
double log_cell_volume(int n, double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double lm = n * log_sinh(mid);
    auto rule = gauss_legendre(8, lo, hi);
    double s = rule.integrate([&](double x) { return std::exp(n * log_sinh(x) - lm); });
    return lm + std::log(s);
}

double log_sinh_n(int n, double d) {
    return d <= 0.0 ? -INFINITY : n * log_sinh(d);
}

QuadRule support_rule(double a, double b) {
    std::vector<double> br(33);
    for (int i = 0; i <= 32; ++i) br[i] = a + (b - a) * i / 32.0;
    return composite_gauss(br, 24);
}

std::string bump_summary(int count, double lo, double hi, std::uint64_t seed) {
    return std::to_string(count) + " bumps in [" + fmt17(lo) + ", " + fmt17(hi) + "], seed " +
           std::to_string(seed);
}

}  // namespace

RadialGrid RadialGrid::make(int n, double D, int N) {
    if (n < 1 || N < 1 || !(D > 0.0)) throw Error(Errc::ParameterViolation, "need n >= 1, N >= 1, D > 0");
    RadialGrid g;
    g.n = n;
    g.D = D;
    const double h = D / N;
    g.nodes.resize(N);
    g.weights.resize(N);
    g.log_weights.resize(N);
    for (int i = 0; i < N; ++i) {
        g.nodes[i] = (i + 0.5) * h;
        g.log_weights[i] = log_cell_volume(n, i * h, (i + 1) * h);
        g.weights[i] = std::exp(g.log_weights[i]);
    }
    return g;
}

double RadialGrid::volume() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd DiscreteOperator::apply(const Eigen::VectorXd& v) const {
    if (v.size() != size()) throw Error(Errc::ShapeMismatch, "vector length differs from operator size");
    const Eigen::Index m = size();
    Eigen::VectorXd out(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double s = diag(i) * v(i);
        if (i > 0) s += lower(i - 1) * v(i - 1);
        if (i + 1 < m) s += upper(i) * v(i + 1);
        out(i) = s;
    }
    return out;
}

Eigen::MatrixXd DiscreteOperator::dense() const {
    const Eigen::Index m = size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        A(i, i) = diag(i);
        if (i + 1 < m) {
            A(i, i + 1) = upper(i);
            A(i + 1, i) = lower(i);
        }
    }
    return A;
}

double DiscreteOperator::symmetry_defect() const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i + 1 < size(); ++i) {
        // compare w_i A(i,i+1) with w_{i+1} A(i+1,i), scaled by w_i
        const double a = upper(i);
        const double b = std::exp(log_weights[i + 1] - log_weights[i]) * lower(i);
        const double scale = std::max(std::abs(a), std::abs(b));
        if (scale > 0.0) worst = std::max(worst, std::abs(a - b) / scale);
    }
    return worst;
}

DiscreteOperator discretize_interval(RadialKind kind, int n, double c_shift, double d_lo, double D, int N) {
    if (n < 1 || N < 4 || !(D > d_lo) || d_lo < 0.0)
        throw Error(Errc::ParameterViolation, "need n >= 1, N >= 4, 0 <= d_lo < D");
    DiscreteOperator op;
    op.kind = kind;
    op.n = n;
    op.c_shift = c_shift;
    op.d_lo = d_lo;
    op.D = D;
    op.boundary_condition = d_lo > 0.0 ? "dirichlet at both ends" : "dirichlet at D, regular at 0";
    const double h = (D - d_lo) / N;

    if (kind == RadialKind::Scalar) {
        // cells i = 0..N-1, faces at d_lo + i h
        op.nodes.resize(N);
        op.log_weights.resize(N);
        std::vector<double> lA(N + 1);
        for (int i = 0; i <= N; ++i) lA[i] = log_sinh_n(n, d_lo + i * h);
        for (int i = 0; i < N; ++i) {
            op.nodes[i] = d_lo + (i + 0.5) * h;
            op.log_weights[i] = log_cell_volume(n, d_lo + i * h, d_lo + (i + 1) * h);
        }
        op.diag.setZero(N);
        op.lower.setZero(N - 1);
        op.upper.setZero(N - 1);
        for (int i = 0; i < N; ++i) {
            const double left = std::exp(lA[i] - op.log_weights[i]) / h;
            const double right = std::exp(lA[i + 1] - op.log_weights[i]) / h;
            // ghost u = -u across a Dirichlet face doubles its diagonal share
            double dg = (i == 0 && d_lo > 0.0 ? 2.0 : 1.0) * left + (i == N - 1 ? 2.0 : 1.0) * right;
            if (i == 0 && d_lo == 0.0) dg = right;
            op.diag(i) = dg + c_shift;
            if (i + 1 < N) {
                op.upper(i) = -right;
                op.lower(i) = -std::exp(lA[i + 1] - op.log_weights[i + 1]) / h;
            }
        }
        return op;
    }

    // one-forms f dd on faces j = 1..N-1, f = 0 at d_lo (odd parity when d_lo = 0) and at D
    const int m = N - 1;
    op.nodes.resize(m);
    op.log_weights.resize(m);
    std::vector<double> lA(N + 1), lB(N + 1, 0.0), fd(N + 1);
    for (int j = 0; j <= N; ++j) {
        fd[j] = d_lo + j * h;
        lA[j] = log_sinh_n(n, fd[j]);
    }
    for (int i = 1; i <= N; ++i) lB[i] = log_sinh_n(n, d_lo + (i - 0.5) * h);
    for (int j = 1; j <= m; ++j) {
        op.nodes[j - 1] = fd[j];
        op.log_weights[j - 1] = lA[j] + std::log(h);
    }
    op.diag.setZero(m);
    op.lower.setZero(m - 1);
    op.upper.setZero(m - 1);
    const double h2 = h * h;
    if (kind == RadialKind::HodgeOneForm) {
        // Delta f = d d* f with d* f = -sinh^-n (sinh^n f)' on cell centres
        for (int j = 1; j <= m; ++j) {
            const int r = j - 1;
            op.diag(r) = (std::exp(lA[j] - lB[j + 1]) + std::exp(lA[j] - lB[j])) / h2 + c_shift;
            if (j < m) {
                op.upper(r) = -std::exp(lA[j + 1] - lB[j + 1]) / h2;
                op.lower(r) = -std::exp(lA[j] - lB[j + 1]) / h2;
            }
        }
    } else {
        // rough Laplacian -f'' - n coth f' + n coth^2 f by central differences
        for (int j = 1; j <= m; ++j) {
            const int r = j - 1;
            const double ct = 1.0 / std::tanh(fd[j]);
            op.diag(r) = 2.0 / h2 + n * ct * ct + c_shift;
            if (j < m) op.upper(r) = -1.0 / h2 - n * ct / (2.0 * h);
            if (j > 1) op.lower(r - 1) = -1.0 / h2 + n * ct / (2.0 * h);
        }
    }
    return op;
}

DiscreteOperator discretize_radial(const OperatorSpec& spec, double D, int N) {
    spec.validate();
    if (D < 10.0 || N < 64) throw Error(Errc::ResolutionTooLow, "need D >= 10 and N >= 64");
    RadialKind kind;
    if (spec.family == Family::ScalarLaplacian)
        kind = RadialKind::Scalar;
    else if (spec.family == Family::HodgeLaplacian && spec.q_degree == 1)
        kind = RadialKind::HodgeOneForm;
    else if (spec.family == Family::CovariantLaplacianTraceFree && spec.r_tensor == 1)
        kind = RadialKind::CovariantOneForm;
    else
        throw Error(Errc::UnsupportedFamily, "radial discretization covers functions and radial 1-forms");
    return discretize_interval(kind, spec.n, spec.c_shift, 0.0, D, N);
}

double spectrum_bottom(const DiscreteOperator& op) {
    const Eigen::Index m = op.size();
    if (m < 1) throw Error(Errc::EigenFailure, "empty operator");
    Eigen::VectorXd sub(std::max<Eigen::Index>(m - 1, 0));
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
        const double p = op.upper(i) * op.lower(i);
        if (!(p >= 0.0)) throw Error(Errc::EigenFailure, "operator is not symmetrizable");
        sub(i) = (op.upper(i) < 0.0 ? -1.0 : 1.0) * std::sqrt(p);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(op.diag, sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error(Errc::EigenFailure, "tridiagonal QR did not converge");
    return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------

void Bump::eval(double d, double& u, double& du, double& d2u) const {
    u = du = d2u = 0.0;
    const double x = (2.0 * d - a - b) / (b - a);
    const double w = 1.0 - x * x;
    if (w <= 1e-12) return;
    const double s = 2.0 / (b - a);
    const double g1 = -2.0 * x / (w * w);
    const double g2 = -2.0 / (w * w) - 8.0 * x * x / (w * w * w);
    const double B = std::exp(-1.0 / w);
    const double dB = B * g1 * s;
    const double d2B = B * (g1 * g1 + g2) * s * s;
    if (kappa == 0.0) {
        u = B, du = dB, d2u = d2B;
        return;
    }
    const double m = 0.5 * (a + b);
    const double t = std::tanh(d), sech = 1.0 / std::cosh(d);
    // log cosh difference, stable for large d
    const double lc = (d - m) + std::log1p(std::exp(-2.0 * d)) - std::log1p(std::exp(-2.0 * m));
    const double p = std::exp(-kappa * lc);
    const double dp = -kappa * t * p;
    const double d2p = (kappa * kappa * t * t - kappa * sech * sech) * p;
    u = p * B;
    du = dp * B + p * dB;
    d2u = d2p * B + 2.0 * dp * dB + p * d2B;
}

std::vector<Bump> random_bumps(int count, double lo, double hi, double wmin, double wmax, std::uint64_t seed,
                               double kmin, double kmax) {
    if (!(hi - lo >= wmin) || !(wmin > 0.0)) throw Error(Errc::ParameterViolation, "support window too small");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Bump> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        const double w = wmin + (std::min(wmax, hi - lo) - wmin) * U(rng);
        const double a = lo + (hi - lo - w) * U(rng);
        const double kap = kmin + (kmax - kmin) * U(rng);
        out.push_back({a, a + w, kap});
    }
    return out;
}

namespace {

double delta_phi_over_phi(int n, double s, double d) {
    const double r = 1.0 / std::cosh(d);
    return s * (n - s) + r * r * (s * s + s);
}

// integrals over a bump support with measure sinh^n, normalised by sinh^n(b)
template <class F>
double bump_integral(int n, const Bump& bp, F&& f) {
    const double ref = n * log_sinh(bp.b);
    auto rule = support_rule(bp.a, bp.b);
    return rule.integrate([&](double d) {
        double u, du, d2u;
        bp.eval(d, u, du, d2u);
        return f(d, u, du, d2u) * std::exp(n * log_sinh(d) - ref);
    });
}

}  // namespace

EstimateReport cheng_yau_check(double s_weight, const RadialGrid& grid, const std::vector<Bump>& tests,
                               double collar_rho) {
    const int n = grid.n;
    const double dc = std::acosh(1.0 / collar_rho);
    const double q = s_weight * s_weight + s_weight;
    const double base = s_weight * (n - s_weight);
    const double at_edge = base + collar_rho * collar_rho * q;
    EstimateReport rep;
    rep.lambda_claimed = std::min(base, at_edge);
    rep.epsilon = std::max(std::abs(base - n * n / 4.0), std::abs(at_edge - n * n / 4.0));
    rep.lambda_observed = INFINITY;
    rep.total = static_cast<int>(tests.size());
    for (const auto& bp : tests) {
        if (bp.a < dc || bp.b > grid.D) throw Error(Errc::SupportEscapesCollar, "test function leaves the collar");
        const double form = bump_integral(n, bp, [&](double d, double u, double du, double d2u) {
            return u * (-d2u - n * du / std::tanh(d));
        });
        const double mass = bump_integral(n, bp, [](double, double u, double, double) { return u * u; });
        const double bound = bump_integral(n, bp, [&](double d, double u, double, double) {
            return delta_phi_over_phi(n, s_weight, d) * u * u;
        });
        const double ratio = form / mass;
        rep.lambda_observed = std::min(rep.lambda_observed, ratio);
        if (form >= bound * (1.0 - 1e-10)) ++rep.holds;
    }
    rep.samples = std::to_string(tests.size()) + " bumps in collar rho < " + fmt17(collar_rho);
    return rep;
}

EstimateReport cheng_yau_check(double s_weight, const RadialGrid& grid, const CollarOptions& opt) {
    const double dc = std::acosh(1.0 / opt.collar_rho);
    if (grid.D <= dc + 0.5) throw Error(Errc::SupportEscapesCollar, "grid does not reach into the collar");
    auto tests = random_bumps(opt.samples, dc, grid.D, 0.5, grid.D - dc, opt.seed, 0.0, grid.n);
    auto rep = cheng_yau_check(s_weight, grid, tests, opt.collar_rho);
    rep.samples = bump_summary(opt.samples, dc, grid.D, opt.seed);
    return rep;
}

EstimateReport weighted_estimate_check(double delta, double lambda, const OperatorSpec& spec, int samples,
                                       std::uint64_t seed, double D, double collar_rho) {
    spec.validate();
    if (spec.family != Family::ScalarLaplacian)
        throw Error(Errc::UnsupportedFamily, "weighted estimate is implemented for functions");
    if (delta * delta >= lambda) throw Error(Errc::WeightTooLarge, "need |delta|^2 < lambda");
    const int n = spec.n;
    const double c = spec.c_shift;
    const double dc = std::acosh(1.0 / collar_rho);
    auto tests = random_bumps(samples, dc, D, 2.0, D - dc, seed, 0.0, n + 2.0 * std::abs(delta));
    EstimateReport rep;
    rep.lambda_claimed = lambda - delta * delta;
    rep.total = samples;
    for (const auto& bp : tests) {
        const double lref = std::log(std::cosh(bp.b));
        auto wt = [&](double d) { return std::exp(2.0 * delta * (std::log(std::cosh(d)) - lref)); };
        const double nu = bump_integral(n, bp, [&](double d, double u, double, double) { return wt(d) * u * u; });
        const double np = bump_integral(n, bp, [&](double d, double u, double du, double d2u) {
            const double Pu = -d2u - n * du / std::tanh(d) + c * u;
            return wt(d) * Pu * Pu;
        });
        const double C = std::sqrt(nu / np);
        if (std::isfinite(C)) ++rep.holds;
        rep.constant_C = std::max(rep.constant_C, C);
    }
    rep.lambda_observed = 1.0 / rep.constant_C;
    rep.samples = bump_summary(samples, dc, D, seed);
    return rep;
}

EstimateReport bochner_identity_check(int q, double phi_exponent, const RadialGrid& grid, int samples,
                                      std::uint64_t seed) {
    if (q != 0 && q != 1) throw Error(Errc::UnsupportedDegree, "only q = 0 and radial q = 1 are supported");
    const int n = grid.n;
    const double s = phi_exponent;
    const double hi = std::min(grid.D, 20.0);
    auto tests = random_bumps(samples, 0.5, hi, 0.5, 8.0, seed);
    EstimateReport rep;
    rep.total = samples;
    for (const auto& bp : tests) {
        double lhs, rhs;
        if (q == 0) {
            lhs = bump_integral(n, bp, [&](double d, double u, double du, double d2u) {
                return u * (-d2u - n * du / std::tanh(d));
            });
            rhs = bump_integral(n, bp, [&](double d, double u, double du, double) {
                const double t = du + s * std::tanh(d) * u;
                return delta_phi_over_phi(n, s, d) * u * u + t * t;
            });
        } else {
            lhs = bump_integral(n, bp, [&](double d, double f, double df, double d2f) {
                const double sh = std::sinh(d);
                return f * (-d2f - n * df / std::tanh(d) + n * f / (sh * sh));
            });
            rhs = bump_integral(n, bp, [&](double d, double f, double df, double) {
                const double psi = -s * std::tanh(d);
                const double sech = 1.0 / std::cosh(d);
                const double t = df + n * f / std::tanh(d) + psi * f;
                return delta_phi_over_phi(n, s, d) * f * f - 2.0 * s * sech * sech * f * f + t * t;
            });
        }
        const double defect = std::abs(lhs - rhs) / std::abs(lhs);
        rep.epsilon = std::max(rep.epsilon, defect);
        if (defect < 1e-6) ++rep.holds;
    }
    rep.samples = bump_summary(samples, 0.5, hi, seed);
    return rep;
}

EstimateReport asymptotic_form_estimate(int q, int n, const RadialGrid& grid, double collar_rho) {
    if ((q != 0 && q != 1) || !(2 * q < n))
        throw Error(Errc::UnsupportedDegree, "need q in {0, 1} and q < n/2");
    const double dc = std::acosh(1.0 / collar_rho);
    const int N = static_cast<int>(grid.nodes.size());
    if (N < 64 || grid.D < dc + 5.0) throw Error(Errc::ResolutionTooLow, "grid too small for the collar");
    auto op = discretize_interval(q == 0 ? RadialKind::Scalar : RadialKind::HodgeOneForm, n, 0.0, dc, grid.D, N);
    EstimateReport rep;
    rep.lambda_observed = spectrum_bottom(op);
    rep.lambda_claimed = (n - 2.0 * q) * (n - 2.0 * q) / 4.0;
    rep.epsilon = rep.lambda_claimed - rep.lambda_observed;
    rep.holds = rep.lambda_observed >= rep.lambda_claimed - 0.05 ? 1 : 0;
    rep.total = 1;
    rep.samples = "Dirichlet window [" + fmt17(dc) + ", " + fmt17(grid.D) + "], " + std::to_string(N) + " cells";
    return rep;
}

EstimateReport weitzenbock_radial_check(int n, const RadialGrid& grid) {
    const int N = static_cast<int>(grid.nodes.size());
    if (grid.D < 10.0 || N < 64) throw Error(Errc::ResolutionTooLow, "need D >= 10 and N >= 64");
    auto H = discretize_interval(RadialKind::HodgeOneForm, n, 0.0, 0.0, grid.D, N);
    auto C = discretize_interval(RadialKind::CovariantOneForm, n, 0.0, 0.0, grid.D, N);
    const std::vector<Bump> forms{{1.0, grid.D - 1.0}, {2.0, 6.0}, {0.5, 4.0}};
    EstimateReport rep;
    rep.lambda_claimed = -n;
    rep.total = static_cast<int>(forms.size());
    double num = 0.0, den = 0.0;
    for (const auto& bp : forms) {
        Eigen::VectorXd f(H.size());
        for (Eigen::Index j = 0; j < f.size(); ++j) {
            double du, d2u;
            bp.eval(H.nodes[j], f(j), du, d2u);
        }
        const Eigen::VectorXd diff = H.apply(f) - C.apply(f);
        const double defect = (diff + n * f).cwiseAbs().maxCoeff() / f.cwiseAbs().maxCoeff();
        rep.epsilon = std::max(rep.epsilon, defect);
        num += diff.dot(f);
        den += f.dot(f);
        ++rep.holds;
    }
    rep.lambda_observed = num / den;
    rep.samples = "3 fixed bumps, " + std::to_string(N) + " cells";
    return rep;
}

}  // namespace ahelab
