#include "ahelab/einstein.hpp"
#include "ahelab/errors.hpp"
#include "ahelab/indicial.hpp"
#include "ahelab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace ahelab {

// --- spec --------------------------------------------------------------------

BoundaryMetricSpec BoundaryMetricSpec::round(int n, double scale, int l) {
    BoundaryMetricSpec s;
    s.shape = BoundaryShape::RoundSphere;
    s.n = n;
    s.scale = scale;
    s.l = l;
    return s;
}

BoundaryMetricSpec BoundaryMetricSpec::berger(double squash, int l) {
    BoundaryMetricSpec s;
    s.shape = BoundaryShape::BergerSphere;
    s.n = 3;
    s.squash = squash;
    s.l = l;
    return s;
}

BoundaryMetricSpec BoundaryMetricSpec::parse(const std::string& str, int n, int l) {
    auto pos = str.find(':');
    std::string kind = str.substr(0, pos);
    double val = 1.0;
    if (pos != std::string::npos) {
        try {
            std::size_t used = 0;
            val = std::stod(str.substr(pos + 1), &used);
            if (used != str.size() - pos - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(Errc::InvalidSpec, "bad boundary parameter in '" + str + "'");
        }
    }
    BoundaryMetricSpec s;
    if (kind == "round")
        s = round(n, val, l);
    else if (kind == "berger") {
        if (n != 3) throw Error(Errc::InvalidSpec, "Berger boundary requires n = 3");
        s = berger(val, l);
    } else
        throw Error(Errc::InvalidSpec, "unknown boundary shape '" + kind + "'");
    return s;
}

void BoundaryMetricSpec::validate() const {
    if (shape == BoundaryShape::BergerSphere && n != 3) throw Error(Errc::InvalidSpec, "Berger boundary requires n = 3");
    if (n < 2) throw Error(Errc::InvalidSpec, "n must be >= 2");
    if (!(scale > 0.0) || !(squash > 0.0)) throw Error(Errc::InvalidSpec, "scale and squash must be positive");
    if (!(rho_max > 0.0 && rho_max < 2.0)) throw Error(Errc::InvalidSpec, "rho_max must lie in (0, 2)");
    if (enforce_paper_bound && (l < 2 || l > n - 1))
        throw Error(Errc::InvalidSpec, "regularity order must satisfy 2 <= l <= n-1");
    if (!enforce_paper_bound && l < 1) throw Error(Errc::InvalidSpec, "regularity order must be >= 1");
}

double BoundaryMetricSpec::b_hat() const { return shape == BoundaryShape::RoundSphere ? scale * scale : 1.0; }

double BoundaryMetricSpec::c_hat() const {
    return shape == BoundaryShape::RoundSphere ? scale * scale : squash * squash;
}

std::string BoundaryMetricSpec::describe() const {
    return round_symmetric() ? "round:" + fmt17(scale) : "berger:" + fmt17(squash);
}

// --- jets --------------------------------------------------------------------

namespace {

Jet2 operator+(Jet2 x, Jet2 y) { return {x.v + y.v, x.d + y.d, x.dd + y.dd}; }
Jet2 operator-(Jet2 x, Jet2 y) { return {x.v - y.v, x.d - y.d, x.dd - y.dd}; }
Jet2 operator*(Jet2 x, Jet2 y) { return {x.v * y.v, x.d * y.v + x.v * y.d, x.dd * y.v + 2 * x.d * y.d + x.v * y.dd}; }
Jet2 operator*(double s, Jet2 x) { return {s * x.v, s * x.d, s * x.dd}; }
Jet2 recip(Jet2 x) {
    const double i = 1.0 / x.v;
    return {i, -x.d * i * i, (2 * x.d * x.d * i - x.dd) * i * i};
}
Jet2 operator/(Jet2 x, Jet2 y) { return x * recip(y); }
Jet2 constant(double c) { return {c, 0.0, 0.0}; }
// f(g(r)) from f, f', f'' at g
Jet2 compose(double f, double f1, double f2, Jet2 g) { return {f, f1 * g.d, f2 * g.d * g.d + f1 * g.dd}; }
Jet2 powj(Jet2 x, double p) {
    if (p == 0.0) return constant(1.0);
    const double f = std::pow(x.v, p);
    return compose(f, p * f / x.v, p * (p - 1) * f / (x.v * x.v), x);
}

// e^{-1/y} and its derivatives
void smooth_step_base(double y, double& f, double& f1, double& f2) {
    if (y <= 0.0) {
        f = f1 = f2 = 0.0;
        return;
    }
    f = std::exp(-1.0 / y);
    f1 = f / (y * y);
    f2 = f * (1.0 / (y * y * y * y) - 2.0 / (y * y * y));
}

}  // namespace

Jet2 rho_of_r(double r) {
    const double q = 1.0 + r * r;
    return {(1.0 - r) * (1.0 + r) / q, -4.0 * r / (q * q), (12.0 * r * r - 4.0) / (q * q * q)};
}

MetricJets hyperbolic_jets(double r) {
    const double q = 1.0 + r * r;
    Jet2 h{4.0 / (q * q), -16.0 * r / (q * q * q), -16.0 / (q * q * q) + 96.0 * r * r / (q * q * q * q)};
    return {h, h, h};
}

Jet2 cutoff_of_r(double r, double rho_max) {
    const Jet2 rho = rho_of_r(r);
    const double q = rho_max / 4.0;
    // y = 1 - x, x = (rho - q)/q
    const Jet2 y = constant(2.0) - (1.0 / q) * rho;
    if (y.v >= 1.0) return constant(1.0);
    if (y.v <= 0.0) return constant(0.0);
    double f, f1, f2, g, g1, g2;
    smooth_step_base(y.v, f, f1, f2);
    smooth_step_base(1.0 - y.v, g, g1, g2);
    const Jet2 F = compose(f, f1, f2, y);
    const Jet2 G = compose(g, -g1, g2, y);
    return F / (F + G);
}

// --- Chebyshev grid -------------------------------------------------------

namespace {

// Chebyshev coefficients a_k, k = 0..N, of the even Lobatto interpolant.
std::vector<double> even_cheb_coeffs(const Eigen::VectorXd& vals, int M) {
    const int N = 2 * M - 1;
    std::vector<double> f(N + 1);
    for (int j = 0; j < M; ++j) f[j] = f[N - j] = vals(j);
    std::vector<double> a(N + 1, 0.0);
    for (int k = 0; k <= N; k += 2) {
        double s = 0.0;
        for (int j = 0; j <= N; ++j) {
            double w = (j == 0 || j == N) ? 0.5 : 1.0;
            s += w * f[j] * std::cos(std::numbers::pi * ((static_cast<long long>(j) * k) % (2 * N)) / N);
        }
        a[k] = 2.0 * s / N;
    }
    a[0] *= 0.5;
    a[N] *= 0.5;
    return a;
}

Jet2 cheb_sum_jet(const std::vector<double>& a, double x) {
    // T_k, T_k', T_k'' by recurrence
    double t0 = 1.0, t1 = x, d0 = 0.0, d1 = 1.0, s0 = 0.0, s1 = 0.0;
    Jet2 out{a[0], 0.0, 0.0};
    if (a.size() > 1) out = out + Jet2{a[1] * t1, a[1] * d1, 0.0};
    for (std::size_t k = 2; k < a.size(); ++k) {
        const double t2 = 2 * x * t1 - t0;
        const double d2 = 2 * t1 + 2 * x * d1 - d0;
        const double s2 = 4 * d1 + 2 * x * s1 - s0;
        out.v += a[k] * t2;
        out.d += a[k] * d2;
        out.dd += a[k] * s2;
        t0 = t1, t1 = t2, d0 = d1, d1 = d2, s0 = s1, s1 = s2;
    }
    return out;
}

}  // namespace

EvenChebGrid EvenChebGrid::make(int M) {
    if (M < 4) throw Error(Errc::ParameterViolation, "grid needs at least 4 nodes");
    EvenChebGrid g;
    g.M = M;
    const int N = 2 * M - 1;
    std::vector<double> x(N + 1);
    for (int j = 0; j <= N; ++j) x[j] = std::cos(std::numbers::pi * j / N);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N + 1, N + 1);
    auto c = [&](int j) { return (j == 0 || j == N) ? 2.0 : 1.0; };
    for (int i = 0; i <= N; ++i) {
        double rs = 0.0;
        for (int j = 0; j <= N; ++j) {
            if (i == j) continue;
            const double diff = -2.0 * std::sin(std::numbers::pi * (i + j) / (2.0 * N)) *
                                std::sin(std::numbers::pi * (i - j) / (2.0 * N));
            const double sgn = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            D(i, j) = c(i) / c(j) * sgn / diff;
            rs += D(i, j);
        }
        D(i, i) = -rs;
    }
    const Eigen::MatrixXd D2 = D * D;
    g.D1.resize(M, M);
    g.D2.resize(M, M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            g.D1(i, j) = D(i, j) + D(i, N - j);
            g.D2(i, j) = D2(i, j) + D2(i, N - j);
        }
    g.r.resize(M);
    g.rho.resize(M);
    for (int j = 0; j < M; ++j) {
        g.r[j] = x[j];
        g.rho[j] = j == 0 ? 0.0 : rho_of_r(x[j]).v;
    }
    return g;
}

double EvenChebGrid::interpolate(const Eigen::VectorXd& values, double x) const {
    return interpolate_jet(values, x).v;
}

Jet2 EvenChebGrid::interpolate_jet(const Eigen::VectorXd& values, double x) const {
    return cheb_sum_jet(even_cheb_coeffs(values, M), x);
}

// --- metric ------------------------------------------------------------------

namespace {

int field_count(const BoundaryMetricSpec& s) { return s.round_symmetric() ? 2 : 3; }

// (b, eps, zeta) jets -> (a, b, c) jets
MetricJets assemble(double r, Jet2 b, Jet2 e, Jet2 z, bool round) {
    const Jet2 r2{r * r, 2 * r, 2.0};
    MetricJets m;
    m[0] = b + r2 * e;
    m[1] = b;
    m[2] = round ? b : b + r2 * z;
    return m;
}

MetricJets add(const MetricJets& x, const MetricJets& y) { return {x[0] + y[0], x[1] + y[1], x[2] + y[2]}; }

}  // namespace

std::array<double, 3> CohomOneMetric::correction(int j) const {
    const double s = weight_power == 0 ? 1.0 : std::pow(grid->rho[j], weight_power);
    return {s * w(j, 0), s * w(j, 1), s * w(j, 2)};
}

MetricJets CohomOneMetric::eval(double r) const {
    MetricJets m = (*base)(r);
    if (!grid || w.size() == 0 || w.isZero(0.0)) return m;
    if (cache_key_.rows() != w.rows() || cache_key_ != w) {
        for (int f = 0; f < 3; ++f) {
            Eigen::VectorXd v(grid->M);
            for (int j = 0; j < grid->M; ++j) v(j) = correction(j)[f];
            cache_coeffs_[f] = even_cheb_coeffs(v, grid->M);
        }
        cache_key_ = w;
    }
    std::array<Jet2, 3> cj;
    for (int f = 0; f < 3; ++f) cj[f] = cheb_sum_jet(cache_coeffs_[f], r);
    return add(m, assemble(r, cj[0], cj[1], cj[2], spec.round_symmetric()));
}

std::vector<MetricJets> CohomOneMetric::node_jets() const {
    const int M = grid->M;
    std::vector<MetricJets> out(M);
    Eigen::MatrixXd dv(M, 3);
    for (int j = 0; j < M; ++j) {
        auto c = correction(j);
        for (int f = 0; f < 3; ++f) dv(j, f) = c[f];
    }
    const Eigen::MatrixXd d1 = grid->D1 * dv, d2 = grid->D2 * dv;
    for (int j = 0; j < M; ++j) {
        const double r = grid->r[j];
        Jet2 b{dv(j, 0), d1(j, 0), d2(j, 0)}, e{dv(j, 1), d1(j, 1), d2(j, 1)}, z{dv(j, 2), d1(j, 2), d2(j, 2)};
        out[j] = add((*base)(r), assemble(r, b, e, z, spec.round_symmetric()));
    }
    return out;
}

bool CohomOneMetric::positive() const {
    for (const auto& m : node_jets())
        for (int i = 0; i < 3; ++i)
            if (!(m[i].v > 0.0)) return false;
    for (int k = 1; k < 200; ++k) {
        const auto m = eval(k / 200.0);
        for (int i = 0; i < 3; ++i)
            if (!(m[i].v > 0.0)) return false;
    }
    return true;
}

CohomOneMetric reference_metric(const BoundaryMetricSpec& spec, int M) {
    spec.validate();
    const double db = spec.b_hat() - 1.0, dc = spec.c_hat() - 1.0;
    const double rmax = spec.rho_max;
    auto fn = [db, dc, rmax](double r) {
        MetricJets m = hyperbolic_jets(r);
        if (db == 0.0 && dc == 0.0) return m;
        const Jet2 phi = cutoff_of_r(r, rmax);
        if (phi.v == 0.0 && phi.d == 0.0 && phi.dd == 0.0) return m;
        const Jet2 ir2{1.0 / (r * r), -2.0 / (r * r * r), 6.0 / (r * r * r * r)};
        m[1] = m[1] + db * (phi * ir2);
        m[2] = m[2] + dc * (phi * ir2);
        return m;
    };
    CohomOneMetric g;
    g.spec = spec;
    g.base = std::make_shared<const AnalyticMetric>(fn);
    g.grid = std::make_shared<const EvenChebGrid>(EvenChebGrid::make(M));
    g.w = Eigen::MatrixXd::Zero(M, 3);
    if (!g.positive()) throw Error(Errc::NotPositiveDefinite, "T(ghat) degenerates on the grid");
    return g;
}

// --- residual -----------------------------------------------------------------

namespace {

template <int N>
struct Dual {
    double v = 0.0;
    std::array<double, N> g{};
    Dual() = default;
    Dual(double x) : v(x) {}  // NOLINT
};

template <int N>
Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> o(a.v + b.v);
    for (int i = 0; i < N; ++i) o.g[i] = a.g[i] + b.g[i];
    return o;
}
template <int N>
Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> o(a.v - b.v);
    for (int i = 0; i < N; ++i) o.g[i] = a.g[i] - b.g[i];
    return o;
}
template <int N>
Dual<N> operator-(const Dual<N>& a) {
    Dual<N> o(-a.v);
    for (int i = 0; i < N; ++i) o.g[i] = -a.g[i];
    return o;
}
template <int N>
Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> o(a.v * b.v);
    for (int i = 0; i < N; ++i) o.g[i] = a.g[i] * b.v + a.v * b.g[i];
    return o;
}
template <int N>
Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
    Dual<N> o(a.v / b.v);
    const double ib = 1.0 / b.v;
    for (int i = 0; i < N; ++i) o.g[i] = (a.g[i] - o.v * b.g[i]) * ib;
    return o;
}
template <int N>
Dual<N> sqrt(const Dual<N>& a) {
    Dual<N> o(std::sqrt(a.v));
    const double h = 0.5 / o.v;
    for (int i = 0; i < N; ++i) o.g[i] = a.g[i] * h;
    return o;
}
using std::sqrt;

template <class T>
struct Jet1 {
    T v, d;
};
template <class T>
Jet1<T> operator+(const Jet1<T>& a, const Jet1<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <class T>
Jet1<T> operator-(const Jet1<T>& a, const Jet1<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <class T>
Jet1<T> operator*(const Jet1<T>& a, const Jet1<T>& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
template <class T>
Jet1<T> operator/(const Jet1<T>& a, const Jet1<T>& b) {
    T q = a.v / b.v;
    return {q, (a.d - q * b.d) / b.v};
}
template <class T>
Jet1<T> scale(double s, const Jet1<T>& a) { return {T(s) * a.v, T(s) * a.d}; }
template <class T>
Jet1<T> jsqrt(const Jet1<T>& a) {
    T s = sqrt(a.v);
    return {s, a.d / (T(2.0) * s)};
}

template <class T>
struct LocalOut {
    std::array<T, 3> Q, E, ric;
};

// g = (a, a', a'', b, b', b'', c, c', c'')
template <class T>
LocalOut<T> local_residual(const BoundaryMetricSpec& spec, double r, const std::array<T, 9>& g,
                           const MetricJets& g0) {
    using J = Jet1<T>;
    const Jet2 rj = rho_of_r(r);
    const int n = spec.n;
    const bool round = spec.round_symmetric();
    const J R{T(rj.v), T(rj.d)}, R1{T(rj.d), T(rj.dd)}, X{T(r), T(1.0)};
    const J two_over_r = J{T(2.0), T(0.0)} / X;
    const J A{g[0], g[1]}, A1{g[1], g[2]};
    const J A0{T(g0[0].v), T(g0[0].d)}, A01{T(g0[0].d), T(g0[0].dd)};
    const int nb = round ? 1 : 2;
    const double dim[2] = {round ? double(n) : 2.0, 1.0};
    J B[2] = {{g[3], g[4]}, {g[6], g[7]}};
    J B1[2] = {{g[4], g[5]}, {g[7], g[8]}};
    J B0[2] = {{T(g0[1].v), T(g0[1].d)}, {T(g0[2].v), T(g0[2].d)}};
    J B01[2] = {{T(g0[1].d), T(g0[1].dd)}, {T(g0[2].d), T(g0[2].dd)}};

    const J sa = jsqrt(A);
    const T prop = T(rj.v) / sa.v;  // d/ds = (rho/sqrt a) d/dr
    J lam[2], ell[2], ell0[2];
    J S{T(0.0), T(0.0)};
    for (int k = 0; k < nb; ++k) {
        ell[k] = R * (two_over_r + B1[k] / B[k]) - scale(2.0, R1);
        ell0[k] = R * (two_over_r + B01[k] / B0[k]) - scale(2.0, R1);
        lam[k] = ell[k] / scale(2.0, sa);
        S = S + scale(dim[k], lam[k]);
    }
    // physical orbit coefficients and their intrinsic Ricci
    const T rr = T(r * r) / (T(rj.v) * T(rj.v));
    T ro[2];
    if (round) {
        ro[0] = T(n - 1.0) / (rr * g[3]);
    } else {
        const T P1 = rr * g[3], P3 = rr * g[6];
        ro[0] = T(4.0) / P1 - T(2.0) * P3 / (P1 * P1);
        ro[1] = T(2.0) * P3 / (P1 * P1);
    }
    T ric_tt = T(0.0);
    T ric_k[2];
    for (int k = 0; k < nb; ++k) {
        ric_tt = ric_tt - T(dim[k]) * (prop * lam[k].d + lam[k].v * lam[k].v);
        ric_k[k] = ro[k] - prop * lam[k].d - lam[k].v * S.v;
    }
    J om = R * (A1 / A - A01 / A0) / scale(2.0, sa);
    J sum{T(0.0), T(0.0)};
    for (int k = 0; k < nb; ++k) sum = sum + scale(dim[k], ell[k] / A - (B0[k] / B[k]) * ell0[k] / A0);
    om = om - scale(0.5, sa * sum);

    LocalOut<T> out;
    const T nn = T(double(n));
    out.ric[0] = ric_tt;
    out.E[0] = ric_tt + nn;
    out.Q[0] = ric_tt + nn - prop * om.d;
    for (int k = 0; k < nb; ++k) {
        out.ric[k + 1] = ric_k[k];
        out.E[k + 1] = ric_k[k] + nn;
        out.Q[k + 1] = ric_k[k] + nn - om.v * lam[k].v;
    }
    if (round) {
        out.ric[2] = out.ric[1];
        out.E[2] = out.E[1];
        out.Q[2] = out.Q[1];
    }
    return out;
}

std::array<double, 9> flatten(const MetricJets& m) {
    return {m[0].v, m[0].d, m[0].dd, m[1].v, m[1].d, m[1].dd, m[2].v, m[2].d, m[2].dd};
}

double orth_norm(const BoundaryMetricSpec& s, const std::array<double, 3>& q) {
    if (s.round_symmetric()) return std::sqrt(q[0] * q[0] + s.n * q[1] * q[1]);
    return std::sqrt(q[0] * q[0] + 2.0 * q[1] * q[1] + q[2] * q[2]);
}

}  // namespace

double PointResidual::q_norm(const BoundaryMetricSpec& spec) const { return orth_norm(spec, Q); }
double PointResidual::e_norm(const BoundaryMetricSpec& spec) const { return orth_norm(spec, E); }

PointResidual point_residual(const BoundaryMetricSpec& spec, double r, const MetricJets& g, const MetricJets& g0) {
    if (!(r > 0.0 && r < 1.0)) throw Error(Errc::ParameterViolation, "residual needs 0 < r < 1");
    for (int i = 0; i < 3; ++i)
        if (!(g[i].v > 0.0) || !(g0[i].v > 0.0)) throw Error(Errc::NotPositiveDefinite, "metric coefficient <= 0");
    auto o = local_residual<double>(spec, r, flatten(g), g0);
    return {o.Q, o.E, o.ric};
}

namespace {

void check_same_grid(const CohomOneMetric& g, const CohomOneMetric& g0) {
    if (!g.grid || !g0.grid || g.grid->M != g0.grid->M) throw Error(Errc::GridMismatch, "metrics use different grids");
    for (int j = 0; j < g.grid->M; ++j)
        if (g.grid->r[j] != g0.grid->r[j]) throw Error(Errc::GridMismatch, "metrics use different nodes");
    if (g.spec.round_symmetric() != g0.spec.round_symmetric() || g.spec.n != g0.spec.n)
        throw Error(Errc::GridMismatch, "metrics use different ansatz");
}

}  // namespace

GaugeResidual gauge_fixed_residual(const CohomOneMetric& g, const CohomOneMetric& g0) {
    check_same_grid(g, g0);
    const int M = g.grid->M;
    const auto gj = g.node_jets(), g0j = g0.node_jets();
    GaugeResidual res;
    res.Q = Eigen::MatrixXd::Zero(M, 3);
    res.q_norm.assign(M, 0.0);
    res.einstein_part.assign(M, 0.0);
    res.ricci_max = -INFINITY;
    for (int j = 1; j < M; ++j) {
        auto p = point_residual(g.spec, g.grid->r[j], gj[j], g0j[j]);
        for (int i = 0; i < 3; ++i) {
            res.Q(j, i) = p.Q[i];
            res.ricci_max = std::max(res.ricci_max, p.ric[i]);
        }
        res.q_norm[j] = p.q_norm(g.spec);
        res.einstein_part[j] = p.e_norm(g.spec);
        res.sup_norm = std::max(res.sup_norm, res.q_norm[j]);
        res.einstein_sup = std::max(res.einstein_sup, res.einstein_part[j]);
    }
    return res;
}

// --- linearization -----------------------------------------------------------

Jet2 Perturbation::eval(int i, double r) const {
    const auto& c = coeffs[i];
    std::vector<double> a(2 * c.size(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) a[2 * k] = c[k];
    return a.empty() ? Jet2{} : cheb_sum_jet(a, r);
}

Perturbation random_perturbation(int terms, std::uint64_t seed, bool round) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Perturbation p;
    for (int i = 0; i < 3; ++i) {
        p.coeffs[i].resize(terms);
        for (int k = 0; k < terms; ++k) p.coeffs[i][k] = U(rng) / ((k + 1.0) * (k + 1.0));
    }
    if (round) p.coeffs[2] = p.coeffs[1];
    return p;
}

std::array<double, 3> LinearizedOperator::apply(const Perturbation& v, double r) const {
    if (!(r > 0.0 && r < 1.0)) throw Error(Errc::ParameterViolation, "operator needs 0 < r < 1");
    const double q = 0.5 * (1.0 - r) * (1.0 + r);
    const double coth = (1.0 + r * r) / (2.0 * r), csch = (1.0 - r) * (1.0 + r) / (2.0 * r);
    const double cs2 = csch * csch;
    double k[3], k1[3], k2[3];
    for (int i = 0; i < 3; ++i) {
        const Jet2 j = v.eval(i, r);
        k[i] = j.v;
        k1[i] = q * j.d;
        k2[i] = q * (q * j.dd - r * j.d);
    }
    const int n = spec.n;
    auto radial = [&](int i) { return -0.5 * k2[i] - 0.5 * n * coth * k1[i]; };
    if (spec.round_symmetric()) {
        const double pt = radial(0) + n * k[0] + n * (k[0] - k[1]) * cs2;
        const double ps = radial(1) + n * k[1] + (k[1] - k[0]) * cs2;
        return {pt, ps, ps};
    }
    const double pt = radial(0) + 3.0 * k[0] + (3.0 * k[0] - 2.0 * k[1] - k[2]) * cs2;
    const double p1 = radial(1) + 2.0 * k[1] + k[2] + (2.0 * k[1] - k[2] - k[0]) * cs2;
    const double p3 = radial(2) + 2.0 * k[1] + k[2] + (3.0 * k[2] - 2.0 * k[1] - k[0]) * cs2;
    return {pt, p1, p3};
}

Eigen::MatrixXd LinearizedOperator::apply_nodes(const Perturbation& v, const EvenChebGrid& grid) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grid.M, 3);
    for (int j = 1; j < grid.M; ++j) {
        auto p = apply(v, grid.r[j]);
        for (int i = 0; i < 3; ++i) out(j, i) = p[i];
    }
    return out;
}

LinearizedOperator linearized_operator(const CohomOneMetric& h) {
    const auto res = gauge_fixed_residual(h, h);
    if (res.sup_norm > 1e-10) throw Error(Errc::NotEinsteinBase, "Q(h, h) does not vanish");
    const auto jets = h.node_jets();
    for (int j = 0; j < h.grid->M; ++j) {
        const auto hy = hyperbolic_jets(h.grid->r[j]);
        for (int i = 0; i < 3; ++i)
            if (std::abs(jets[j][i].v - hy[i].v) > 1e-12 * hy[i].v)
                throw Error(Errc::NotEinsteinBase, "closed form is available for the hyperbolic base only");
    }
    return LinearizedOperator{h.spec};
}

std::array<double, 3> fd_linearization(const CohomOneMetric& h, const Perturbation& v, double r, double step) {
    const MetricJets h0 = h.eval(r);
    auto Q = [&](double s) {
        MetricJets g = h0;
        for (int i = 0; i < 3; ++i) g[i] = h0[i] * (constant(1.0) + s * v.eval(i, r));
        return point_residual(h.spec, r, g, h0).Q;
    };
    auto D = [&](double s) {
        auto p = Q(s), m = Q(-s);
        std::array<double, 3> d;
        for (int i = 0; i < 3; ++i) d[i] = (p[i] - m[i]) / (2.0 * s);
        return d;
    };
    const auto d1 = D(step), d2 = D(0.5 * step);
    std::array<double, 3> out;
    for (int i = 0; i < 3; ++i) out[i] = (4.0 * d2[i] - d1[i]) / 3.0;
    return out;
}

LinearizationReport linearization_check(const CohomOneMetric& h, int count, std::uint64_t seed) {
    const auto L = linearized_operator(h);
    const std::vector<double> probes{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    LinearizationReport rep;
    rep.perturbations = count;
    rep.probes = static_cast<int>(probes.size());
    const int nf = h.spec.round_symmetric() ? 2 : 3;
    for (int c = 0; c < count; ++c) {
        const auto v = random_perturbation(6, seed + c, h.spec.round_symmetric());
        double err = 0.0, vn = 0.0;
        for (double r : probes) {
            const auto a = L.apply(v, r), f = fd_linearization(h, v, r);
            for (int i = 0; i < nf; ++i) {
                err = std::max(err, std::abs(a[i] - f[i]));
                vn = std::max(vn, std::abs(v.eval(i, r).v));
            }
        }
        rep.max_rel_error = std::max(rep.max_rel_error, err / vn);
    }
    return rep;
}

Eigen::Matrix3d indicial_matrix(const BoundaryMetricSpec& spec, double s) {
    const int n = spec.n;
    Eigen::Matrix3d M = Eigen::Matrix3d::Identity() * (-0.5 * s * s + 0.5 * n * s);
    if (spec.round_symmetric()) {
        M += n * Eigen::Matrix3d::Identity();
    } else {
        Eigen::Matrix3d Minf;
        Minf << 3, 0, 0, 0, 2, 1, 0, 2, 1;
        M += Minf;
    }
    return M;
}

// --- expansion ---------------------------------------------------------------

std::vector<double> residual_profile(const CohomOneMetric& g, const CohomOneMetric& g0, const std::vector<double>& rhos) {
    std::vector<double> out;
    out.reserve(rhos.size());
    for (double rho : rhos) {
        const double r = std::sqrt((1.0 - rho) / (1.0 + rho));
        out.push_back(point_residual(g.spec, r, g.eval(r), g0.eval(r)).q_norm(g.spec));
    }
    return out;
}

namespace {

std::vector<double> slope_window() {
    std::vector<double> rh;
    for (int i = 0; i <= 8; ++i) rh.push_back(std::pow(10.0, -4.0 + 0.25 * i));
    return rh;
}

// absolute level below which Q carries no information
constexpr double kResidualFloor = 1e-13;

}  // namespace

ExpansionState asymptotic_expand(const BoundaryMetricSpec& spec, int l, int M) {
    spec.validate();
    const int n = spec.n;
    if (l < 1 || l > n - 1) throw Error(Errc::OrderOutOfRange, "need 1 <= l <= n-1");
    const CohomOneMetric g0 = reference_metric(spec, M);
    const bool round = spec.round_symmetric();
    const int nf = round ? 2 : 3;

    ExpansionState st;
    st.metric = g0;
    const auto window = slope_window();
    auto record = [&]() {
        const auto prof = residual_profile(st.metric, g0, window);
        double sup = 0.0;
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < window.size(); ++i) {
            sup = std::max(sup, prof[i] / std::pow(window[i], st.k));
            if (prof[i] > kResidualFloor) {
                lx.push_back(std::log(window[i]));
                ly.push_back(std::log(prof[i]));
            }
        }
        st.residual_norms.push_back(sup);
        st.slopes.push_back(lx.size() >= 3 ? lsq_slope(lx, ly) : INFINITY);
    };
    record();

    const auto T0 = g0.base;
    for (int k = 1; k <= l; ++k) {
        std::vector<double> rs, vals[3];
        bool informative = false;
        for (int j = 0; j < 6; ++j) {
            const double rho = 0.02 * std::pow(2.0, -j);
            const double r = std::sqrt((1.0 - rho) / (1.0 + rho));
            const auto p = point_residual(spec, r, st.metric.eval(r), g0.eval(r));
            rs.push_back(rho);
            for (int i = 0; i < 3; ++i) {
                vals[i].push_back(p.Q[i] / std::pow(rho, k));
                informative = informative || std::abs(p.Q[i]) > kResidualFloor;
            }
        }
        Eigen::Vector3d v = Eigen::Vector3d::Zero();
        if (informative)
            for (int i = 0; i < 3; ++i) v(i) = neville(rs, vals[i], 0.0);
        const Eigen::Matrix3d I = indicial_matrix(spec, k);
        Eigen::Vector3d psi = Eigen::Vector3d::Zero();
        const Eigen::MatrixXd Ib = I.topLeftCorner(nf, nf);
        if (std::abs(Ib.determinant()) < 1e-12) throw Error(Errc::IndicialSingular, "indicial matrix singular at this order");
        psi.head(nf) = Ib.partialPivLu().solve(-v.head(nf));
        if (round) psi(2) = psi(1);
        st.corrections.push_back({psi(0), psi(1), psi(2)});

        auto prev = st.metric.base;
        auto fn = [prev, T0, psi, k, rmax = spec.rho_max](double r) {
            MetricJets m = (*prev)(r);
            if (psi.isZero(0.0)) return m;
            const Jet2 phi = cutoff_of_r(r, rmax);
            if (phi.v == 0.0 && phi.d == 0.0 && phi.dd == 0.0) return m;
            const Jet2 fac = phi * powj(rho_of_r(r), k);
            const MetricJets t = (*T0)(r);
            for (int i = 0; i < 3; ++i) m[i] = m[i] + psi(i) * (fac * t[i]);
            return m;
        };
        st.metric.base = std::make_shared<const AnalyticMetric>(fn);
        st.k = k;
        record();
    }
    if (!st.metric.positive()) throw Error(Errc::NotPositiveDefinite, "expanded metric degenerates");
    st.metric.weight_power = l;
    return st;
}

// --- Newton ------------------------------------------------------------------

void add_coefficient_noise(CohomOneMetric& g, double amplitude, std::uint64_t seed, int terms) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int nf = field_count(g.spec);
    for (int f = 0; f < nf; ++f) {
        std::vector<double> c(terms);
        for (double& x : c) x = U(rng);
        for (int j = 0; j < g.grid->M; ++j) {
            const double r = g.grid->r[j];
            double t0 = 1.0, t1 = 2 * r * r - 1.0, s = c[0];
            for (int k = 1; k < terms; ++k) {
                s += c[k] * t1;
                const double t2 = 2.0 * (2 * r * r - 1.0) * t1 - t0;  // T_2k via T_2 recurrence
                t0 = t1;
                t1 = t2;
            }
            g.w(j, f) += amplitude * s * (1.0 - r * r);
        }
    }
}

double weighted_correction_norm(const CohomOneMetric& g, double delta) {
    double sup = 0.0;
    for (int j = 1; j < g.grid->M; ++j) {
        const double r = g.grid->r[j], rho = g.grid->rho[j];
        const auto hy = hyperbolic_jets(r);
        const auto base = (*g.base)(r);
        const auto c = g.correction(j);
        const double dcorr[3] = {c[0] + r * r * c[1], c[0], g.spec.round_symmetric() ? c[0] : c[0] + r * r * c[2]};
        double m = 0.0;
        for (int i = 0; i < 3; ++i) m = std::max(m, std::abs((base[i].v - hy[i].v) + dcorr[i]) / hy[i].v);
        sup = std::max(sup, std::pow(rho, -delta) * m);
    }
    return sup;
}

namespace {

// rho^-delta on the node nearest the boundary multiplies roundoff; delta = 1
// keeps that floor below 1e-12 up to M = 256.
constexpr double kCorrectionWeight = 1.0;

Eigen::VectorXd newton_residual(const CohomOneMetric& g, const CohomOneMetric& g0, const std::vector<MetricJets>& g0j) {
    const int M = g.grid->M, nf = field_count(g.spec);
    const auto gj = g.node_jets();
    Eigen::VectorXd F(nf * M);
    for (int f = 0; f < nf; ++f) F(f * M) = g.w(0, f);
    for (int j = 1; j < M; ++j) {
        auto p = local_residual<double>(g.spec, g.grid->r[j], flatten(gj[j]), g0j[j]);
        for (int e = 0; e < nf; ++e) F(e * M + j) = p.Q[e];
    }
    return F;
}

double residual_sup(const Eigen::VectorXd& F, int M, int nf) {
    double s = 0.0;
    for (int e = 0; e < nf; ++e)
        for (int j = 1; j < M; ++j) s = std::max(s, std::abs(F(e * M + j)));
    return s;
}

Eigen::MatrixXd analytic_jacobian(const CohomOneMetric& g, const std::vector<MetricJets>& g0j) {
    const int M = g.grid->M, nf = field_count(g.spec);
    const auto gj = g.node_jets();
    const auto& D1 = g.grid->D1;
    const auto& D2 = g.grid->D2;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nf * M, nf * M);
    for (int f = 0; f < nf; ++f) J(f * M, f * M) = 1.0;
    std::vector<double> sc(M);
    for (int m = 0; m < M; ++m) sc[m] = g.weight_power == 0 ? 1.0 : std::pow(g.grid->rho[m], g.weight_power);
    for (int j = 1; j < M; ++j) {
        const double r = g.grid->r[j];
        const auto flat = flatten(gj[j]);
        std::array<Dual<9>, 9> in;
        for (int i = 0; i < 9; ++i) {
            in[i] = Dual<9>(flat[i]);
            in[i].g[i] = 1.0;
        }
        const auto out = local_residual<Dual<9>>(g.spec, r, in, g0j[j]);
        for (int e = 0; e < nf; ++e) {
            const auto& P = out.Q[e].g;  // P[3q + m], q in (a, b, c), m derivative order
            // chain (b, eps, zeta) -> (a, b, c)
            double Pf[3][3];
            for (int m = 0; m < 3; ++m) Pf[0][m] = P[m] + P[3 + m] + P[6 + m];
            for (int q = 0; q < 2; ++q) {
                const int base = q == 0 ? 0 : 6;
                Pf[q + 1][0] = r * r * P[base] + 2 * r * P[base + 1] + 2 * P[base + 2];
                Pf[q + 1][1] = r * r * P[base + 1] + 4 * r * P[base + 2];
                Pf[q + 1][2] = r * r * P[base + 2];
            }
            for (int f = 0; f < nf; ++f)
                for (int m = 0; m < M; ++m) {
                    double v = Pf[f][1] * D1(j, m) + Pf[f][2] * D2(j, m);
                    if (m == j) v += Pf[f][0];
                    J(e * M + j, f * M + m) = v * sc[m];
                }
        }
    }
    return J;
}

Eigen::MatrixXd fd_jacobian(const CohomOneMetric& g, const CohomOneMetric& g0, const std::vector<MetricJets>& g0j,
                            const Eigen::VectorXd& F0, double step) {
    const int M = g.grid->M, nf = field_count(g.spec);
    Eigen::MatrixXd J(nf * M, nf * M);
    CohomOneMetric gp = g;
    for (int f = 0; f < nf; ++f)
        for (int m = 0; m < M; ++m) {
            const double h = step * std::max(1.0, std::abs(g.w(m, f)));
            gp.w(m, f) = g.w(m, f) + h;
            J.col(f * M + m) = (newton_residual(gp, g0, g0j) - F0) / h;
            gp.w(m, f) = g.w(m, f);
        }
    return J;
}

}  // namespace

NewtonResult newton_solve(const BoundaryMetricSpec& spec, const ExpansionState& init, const NewtonConfig& cfg) {
    spec.validate();
    if (!(cfg.tol_residual > 0.0) || !(cfg.damping > 0.0 && cfg.damping <= 1.0) || cfg.max_iters < 0)
        throw Error(Errc::ParameterViolation, "need tol_residual > 0, damping in (0,1], max_iters >= 0");
    const CohomOneMetric g0 = reference_metric(spec, init.metric.size());
    const auto g0j = g0.node_jets();
    NewtonResult res;
    res.metric = init.metric;
    res.metric.spec = spec;
    if (res.metric.weight_power == 0) res.metric.weight_power = std::max(init.k, 1);
    const int M = res.metric.size(), nf = field_count(spec);

    Eigen::VectorXd F = newton_residual(res.metric, g0, g0j);
    double rn = residual_sup(F, M, nf);
    res.history.push_back(rn);
    for (int it = 0; it < cfg.max_iters && rn >= cfg.tol_residual; ++it) {
        const Eigen::MatrixXd J =
            cfg.analytic_jacobian ? analytic_jacobian(res.metric, g0j) : fd_jacobian(res.metric, g0, g0j, F, cfg.fd_step);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        const Eigen::VectorXd dx = lu.solve(-F);
        if (!dx.allFinite()) throw Error(Errc::NoConvergence, "singular Jacobian");
        double lam = cfg.damping;
        bool accepted = false;
        CohomOneMetric trial = res.metric;
        Eigen::VectorXd Ft;
        double rt = INFINITY;
        while (lam >= 1.0 / 1024.0) {
            trial.w = res.metric.w;
            for (int f = 0; f < nf; ++f) trial.w.col(f) += lam * dx.segment(f * M, M);
            try {
                Ft = newton_residual(trial, g0, g0j);
                rt = residual_sup(Ft, M, nf);
            } catch (const Error&) {
                rt = INFINITY;
            }
            if (rt < rn) {
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if (!accepted) break;
        res.metric = trial;
        F = Ft;
        rn = rt;
        res.iterations = it + 1;
        res.history.push_back(rn);
    }
    res.converged = rn < cfg.tol_residual;
    res.weighted_correction = weighted_correction_norm(res.metric, kCorrectionWeight);
    if (cfg.max_iters == 0 || !cfg.raise) {
        res.residual = gauge_fixed_residual(res.metric, g0);
        return res;
    }
    if (!res.converged)
        throw Error(Errc::NoConvergence, "residual " + fmt17(rn) + " above tolerance after " +
                                             std::to_string(res.iterations) + " iterations");
    if (!res.metric.positive()) throw Error(Errc::NotPositiveDefinite, "solution degenerates");
    res.residual = gauge_fixed_residual(res.metric, g0);
    if (res.residual.einstein_sup >= 10.0 * cfg.tol_residual || !(res.residual.ricci_max < 0.0))
        throw Error(Errc::GaugeObstruction, "Q vanishes but Ric + n g = " + fmt17(res.residual.einstein_sup));
    return res;
}

// --- hypotheses --------------------------------------------------------------

Hypothesis hypothesis_check(double K_max, YamabeSign yamabe, int n) {
    if (n < 3) throw Error(Errc::ParameterViolation, "hypothesis check needs n >= 3");
    if (K_max <= 0.0) return Hypothesis::SatisfiesA;
    if (yamabe != YamabeSign::Negative && K_max <= curvature_threshold(n)) return Hypothesis::SatisfiesB;
    return Hypothesis::Neither;
}

std::string hypothesis_name(Hypothesis h) {
    switch (h) {
        case Hypothesis::SatisfiesA: return "SatisfiesA";
        case Hypothesis::SatisfiesB: return "SatisfiesB";
        case Hypothesis::Neither: return "Neither";
    }
    return "Neither";
}

YamabeSign parse_yamabe(const std::string& s) {
    if (s == "neg" || s == "negative") return YamabeSign::Negative;
    if (s == "zero") return YamabeSign::Zero;
    if (s == "pos" || s == "positive") return YamabeSign::Positive;
    throw Error(Errc::InvalidSpec, "yamabe sign must be neg, zero or pos");
}

}  // namespace ahelab
