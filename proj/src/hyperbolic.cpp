#include "ahelab/hyperbolic.hpp"
#include "ahelab/errors.hpp"
#include "ahelab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <unordered_map>

namespace ahelab {

namespace {

double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

void check_ball(const Vec& v) {
    if (norm2(v) >= 1.0) throw Error(Errc::OnBoundary, "point must lie strictly inside the unit ball");
}

}  // namespace

double hyperbolic_distance(const Vec& xi, const Vec& eta) {
    if (xi.size() != eta.size()) throw Error(Errc::ShapeMismatch, "points differ in dimension");
    check_ball(xi);
    check_ball(eta);
    double diff = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) diff += (xi[i] - eta[i]) * (xi[i] - eta[i]);
    // cosh d = 1 + 2|xi-eta|^2 / ((1-|xi|^2)(1-|eta|^2)), written through asinh
    double den = (1.0 - norm2(xi)) * (1.0 - norm2(eta));
    return 2.0 * std::asinh(std::sqrt(diff / den));
}

double rho_two_point(const Vec& xi, const Vec& eta) {
    if (xi.size() != eta.size()) throw Error(Errc::ShapeMismatch, "points differ in dimension");
    check_ball(xi);
    check_ball(eta);
    double a = norm2(xi), b = norm2(eta), dot = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) dot += xi[i] * eta[i];
    return (1.0 - a) * (1.0 - b) / ((1.0 + a) * (1.0 + b) - 4.0 * dot);
}

double rho_origin(const Vec& xi) {
    check_ball(xi);
    double a = norm2(xi);
    return (1.0 - a) / (1.0 + a);
}

double halfspace_distance(const HalfSpacePoint& a, const HalfSpacePoint& b) {
    if (a.x.size() != b.x.size()) throw Error(Errc::ShapeMismatch, "points differ in dimension");
    double e = (a.y - b.y) * (a.y - b.y);
    for (std::size_t i = 0; i < a.x.size(); ++i) e += (a.x[i] - b.x[i]) * (a.x[i] - b.x[i]);
    return 2.0 * std::asinh(0.5 * std::sqrt(e / (a.y * b.y)));
}

Background MobiusChart::push(const HalfSpacePoint& p) const {
    if (p.x.size() != center_theta.size()) throw Error(Errc::ShapeMismatch, "chart dimension mismatch");
    Background b{center_theta, center_rho * p.y};
    for (std::size_t i = 0; i < p.x.size(); ++i) b.theta[i] += center_rho * p.x[i];
    return b;
}

HalfSpacePoint MobiusChart::pull(const Background& b) const {
    if (b.theta.size() != center_theta.size()) throw Error(Errc::OutsideChart, "dimension mismatch");
    if (!(b.rho > 0.0)) throw Error(Errc::OutsideChart, "rho must be positive");
    HalfSpacePoint p{b.theta, b.rho / center_rho};
    for (std::size_t i = 0; i < p.x.size(); ++i) p.x[i] = (b.theta[i] - center_theta[i]) / center_rho;
    return p;
}

HalfSpacePoint MobiusChart::pull_within(const Background& b, double r) const {
    HalfSpacePoint p = pull(b);
    const double sx = std::sinh(r);
    bool ok = p.y > std::exp(-r) && p.y < std::exp(r);
    for (double x : p.x) ok = ok && std::abs(x) < sx;
    if (!ok) throw Error(Errc::OutsideChart, "point lies outside the chart box");
    return p;
}

// ---------------------------------------------------------------------------

bool CoverRegion::contains(const HalfSpacePoint& p) const {
    if (!(p.y >= rho_min && p.y < rho_max)) return false;
    for (double x : p.x)
        if (!(std::abs(x) < c)) return false;
    return true;
}

double ball_volume_profile(int n, double t) {
    if (t <= 0.0) return 0.0;
    auto q = gauss_legendre(64, 0.0, t);
    return q.integrate([&](double s) { return std::pow(std::sinh(s), n); });
}

namespace {

// Bucket grid in (log y, x) with u-cells of width D; x-cell width grows with y.
class CenterIndex {
public:
    CenterIndex(int n, double D) : n_(n), D_(D) {}

    void insert(const HalfSpacePoint& p, int id) { cells_[key(cell_of(p))].push_back(id); }

    template <class F>
    void for_near(const HalfSpacePoint& p, F&& f) const {
        const double u = std::log(p.y);
        const long iu0 = static_cast<long>(std::floor(u / D_));
        const double Rx = 2.0 * p.y * std::exp(D_ / 2.0) * std::sinh(D_ / 2.0);
        std::vector<long> lo(n_), hi(n_), cur(n_ + 1);
        for (long iu = iu0 - 1; iu <= iu0 + 1; ++iu) {
            const double W = width(iu);
            for (int a = 0; a < n_; ++a) {
                lo[a] = static_cast<long>(std::floor((p.x[a] - Rx) / W));
                hi[a] = static_cast<long>(std::floor((p.x[a] + Rx) / W));
            }
            cur[0] = iu;
            for (int a = 0; a < n_; ++a) cur[a + 1] = lo[a];
            for (;;) {
                auto it = cells_.find(key(cur));
                if (it != cells_.end())
                    for (int id : it->second) f(id);
                int a = 0;
                while (a < n_) {
                    if (++cur[a + 1] <= hi[a]) break;
                    cur[a + 1] = lo[a];
                    ++a;
                }
                if (a == n_) break;
            }
            if (n_ == 0) continue;
        }
    }

private:
    double width(long iu) const { return std::exp((iu + 1) * D_) * D_; }
    std::vector<long> cell_of(const HalfSpacePoint& p) const {
        std::vector<long> c(n_ + 1);
        c[0] = static_cast<long>(std::floor(std::log(p.y) / D_));
        const double W = width(c[0]);
        for (int a = 0; a < n_; ++a) c[a + 1] = static_cast<long>(std::floor(p.x[a] / W));
        return c;
    }
    static std::uint64_t key(const std::vector<long>& c) {
        std::uint64_t h = 1469598103934665603ull;
        for (long v : c) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            h *= 1099511628211ull;
        }
        return h;
    }

    int n_;
    double D_;
    // Hash collisions only merge buckets; queries re-check distances.
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

}  // namespace

std::vector<HalfSpacePoint> region_lattice(const CoverRegion& region, double h, double offset) {
    std::vector<HalfSpacePoint> pts;
    if (region.empty()) return pts;
    const int n = region.n;
    for (long k = 0;; ++k) {
        const double y = region.rho_min * std::exp((k + offset) * h);
        if (y >= region.rho_max) break;
        const double dx = h * y;
        const long m = static_cast<long>(std::floor(2.0 * region.c / dx - offset));
        std::vector<long> idx(n, 0);
        if (m < 0) continue;
        for (;;) {
            HalfSpacePoint p{Vec(n), y};
            for (int a = 0; a < n; ++a) p.x[a] = -region.c + (idx[a] + offset) * dx;
            if (region.contains(p)) pts.push_back(std::move(p));
            int a = 0;
            while (a < n) {
                if (++idx[a] <= m) break;
                idx[a] = 0;
                ++a;
            }
            if (a == n) break;
        }
    }
    return pts;
}

WhitneyCover whitney_cover(const CoverRegion& region, double r0, std::uint64_t seed,
                           const CoverOptions& opt) {
    if (!(r0 > 0.0)) throw Error(Errc::ParameterViolation, "r0 must be positive");
    if (region.n < 1) throw Error(Errc::ParameterViolation, "n must be >= 1");
    if (!region.empty() && !(region.rho_min > 0.0 && region.rho_max <= 1.0))
        throw Error(Errc::ParameterViolation, "region needs 0 < rho_min and rho_max <= 1");
    const double h = opt.spacing_factor * r0;
    if (h > r0 / 4.0) throw Error(Errc::GridTooCoarse, "candidate spacing exceeds r0/4");

    WhitneyCover cov;
    cov.n = region.n;
    cov.inner_radius = r0;
    cov.outer_radius = opt.outer_factor * r0;
    cov.candidate_spacing = h;
    cov.multiplicity_bound = static_cast<long long>(std::floor(
        ball_volume_profile(region.n, 2.0 * cov.outer_radius + r0 / 2.0) /
        ball_volume_profile(region.n, r0 / 2.0)));
    if (region.empty()) return cov;

    std::mt19937_64 rng(seed);
    const double offset = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

    CenterIndex index(region.n, r0);
    auto try_add = [&](const HalfSpacePoint& p) {
        bool free = true;
        index.for_near(p, [&](int id) {
            if (free && halfspace_distance(p, cov.centers[id]) < r0) free = false;
        });
        if (free) {
            index.insert(p, static_cast<int>(cov.centers.size()));
            cov.centers.push_back(p);
        }
    };
    // Lexicographic greedy over the candidate lattice, then a maximality sweep
    // over a finer probe lattice so every probe point is within r0 of a center.
    for (const auto& p : region_lattice(region, h, offset)) try_add(p);
    const auto probes = region_lattice(region, opt.probe_factor * r0, 0.5);
    for (const auto& p : probes) try_add(p);

    std::vector<HalfSpacePoint> pts = cov.centers;
    pts.insert(pts.end(), probes.begin(), probes.end());
    cov.measured_multiplicity = cover_multiplicity(cov, pts, cov.outer_radius);
    return cov;
}

int cover_multiplicity(const WhitneyCover& cover, const std::vector<HalfSpacePoint>& pts, double r) {
    CenterIndex index(cover.n, r);
    for (std::size_t i = 0; i < cover.centers.size(); ++i)
        index.insert(cover.centers[i], static_cast<int>(i));
    int best = 0;
    for (const auto& p : pts) {
        int cnt = 0;
        index.for_near(p, [&](int id) {
            if (halfspace_distance(p, cover.centers[id]) < r) ++cnt;
        });
        best = std::max(best, cnt);
    }
    return best;
}

double cover_gap(const WhitneyCover& cover, const std::vector<HalfSpacePoint>& pts) {
    const double D = 2.0 * cover.inner_radius;
    CenterIndex index(cover.n, D);
    for (std::size_t i = 0; i < cover.centers.size(); ++i)
        index.insert(cover.centers[i], static_cast<int>(i));
    double worst = 0.0;
    for (const auto& p : pts) {
        double best = std::numeric_limits<double>::infinity();
        index.for_near(p, [&](int id) { best = std::min(best, halfspace_distance(p, cover.centers[id])); });
        if (!std::isfinite(best))
            for (const auto& c : cover.centers) best = std::min(best, halfspace_distance(p, c));
        worst = std::max(worst, best);
    }
    return worst;
}

// ---------------------------------------------------------------------------

namespace {

// integrand in t = log rho: e^{a t} (1 - e^{2t})^{(n-1)/2}
double membership_integrand(double a, int n, double t) {
    return std::exp(a * t) * std::pow(-std::expm1(2.0 * t), 0.5 * (n - 1));
}

}  // namespace

double membership_integral(double s, double delta, double p, int r_weight, int n, double eps,
                           double eps0) {
    const double a = (s + r_weight - delta) * p - n;
    const double t0 = std::log(eps), t1 = std::log(eps0);
    const double dec = std::log(10.0);
    std::vector<double> br{t0};
    for (double t = t0 + dec; t < t1; t += dec) br.push_back(t);
    br.push_back(t1);
    auto q = composite_gauss(br, 64);
    return q.integrate([&](double t) { return membership_integrand(a, n, t); });
}

MembershipReport lp_membership(double s, double delta, double p, int r_weight, int n) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error(Errc::ParameterViolation, "need 1 < p < inf");
    if (n < 1) throw Error(Errc::ParameterViolation, "n must be >= 1");
    MembershipReport rep;
    rep.gap = s - (delta + n / p - r_weight);
    rep.exponent = (s + r_weight - delta) * p - n;
    rep.borderline = std::abs(rep.gap) < 1e-9;
    rep.analytic = (rep.gap > 0.0 && !rep.borderline) ? Membership::Converges : Membership::Diverges;

    // Decade-by-decade exhaustion rho in [eps, 0.5], eps = 0.5 * 10^-k.
    const double dec = std::log(10.0);
    const auto base = gauss_legendre(64, 0.0, 1.0);
    double total = 0.0, prev_inc = std::numeric_limits<double>::infinity();
    int nondecreasing = 0;
    const int cap = 200000;
    double t_hi = std::log(0.5);
    rep.numeric = Membership::Diverges;
    for (int k = 1; k <= cap; ++k) {
        const double t_lo = t_hi - dec;
        double inc = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            double t = t_lo + dec * base.x[i];
            inc += dec * base.w[i] * membership_integrand(rep.exponent, n, t);
        }
        total += inc;
        rep.decades = k;
        if (!std::isfinite(total)) break;
        if (k > 2) {
            if (inc >= prev_inc) {
                if (++nondecreasing >= 3) break;
            } else {
                nondecreasing = 0;
            }
            if (inc < 1e-8 * total) {
                rep.numeric = Membership::Converges;
                break;
            }
        }
        prev_inc = inc;
        t_hi = t_lo;
    }
    rep.partial = total;
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct ChartLattice {
    int dim = 0;                 // n + 1
    std::vector<long> ext;       // points per axis
    std::vector<double> origin;  // coordinates of index 0
    double h = 0.0;
    std::vector<char> inside;
    [[nodiscard]] std::size_t size() const { return inside.size(); }
    [[nodiscard]] std::size_t flat(const std::vector<long>& i) const {
        std::size_t f = 0;
        for (int a = 0; a < dim; ++a) f = f * ext[a] + i[a];
        return f;
    }
    void unflat(std::size_t f, std::vector<long>& i) const {
        for (int a = dim - 1; a >= 0; --a) {
            i[a] = static_cast<long>(f % ext[a]);
            f /= ext[a];
        }
    }
    [[nodiscard]] HalfSpacePoint point(const std::vector<long>& i) const {
        HalfSpacePoint p{Vec(dim - 1), 0.0};
        for (int a = 0; a < dim - 1; ++a) p.x[a] = origin[a] + i[a] * h;
        p.y = origin[dim - 1] + i[dim - 1] * h;
        return p;
    }
};

ChartLattice make_lattice(int n, double r, double h) {
    ChartLattice L;
    L.dim = n + 1;
    L.h = h;
    const double sx = std::sinh(r), ylo = std::exp(-r), yhi = std::exp(r);
    std::size_t total = 1;
    for (int a = 0; a < n; ++a) {
        long m = static_cast<long>(std::floor(sx / h));
        L.ext.push_back(2 * m + 1);
        L.origin.push_back(-m * h);
        total *= 2 * m + 1;
    }
    long k0 = static_cast<long>(std::ceil((ylo - 1.0) / h));
    long k1 = static_cast<long>(std::floor((yhi - 1.0) / h));
    L.ext.push_back(k1 - k0 + 1);
    L.origin.push_back(1.0 + k0 * h);
    total *= (k1 - k0 + 1);
    L.inside.assign(total, 0);
    HalfSpacePoint center{Vec(n, 0.0), 1.0};
    std::vector<long> i(L.dim);
    for (std::size_t f = 0; f < total; ++f) {
        L.unflat(f, i);
        auto p = L.point(i);
        L.inside[f] = p.y > 0.0 && halfspace_distance(p, center) < r;
    }
    return L;
}

}  // namespace

double weighted_norm_sup(const BackgroundField& field, double delta, const WhitneyCover& cover, int k,
                         double alpha, const NormOptions& opt) {
    if (k < 0 || k > 2) throw Error(Errc::ParameterViolation, "k must be 0, 1 or 2");
    if (alpha < 0.0 || alpha > 1.0) throw Error(Errc::ParameterViolation, "alpha must lie in [0,1]");
    if (cover.centers.empty()) return 0.0;
    if (opt.chart_radius / opt.h < 4.0)
        throw Error(Errc::InsufficientSamples, "fewer than 4 lattice steps per chart radius");
    const int n = cover.n, dim = n + 1;
    const ChartLattice L = make_lattice(n, opt.chart_radius, opt.h);
    std::size_t count = std::count(L.inside.begin(), L.inside.end(), 1);
    if (count < std::size_t(1) << dim) throw Error(Errc::InsufficientSamples, "chart lattice too sparse");

    // multi-indices of order exactly j
    std::vector<std::vector<std::vector<int>>> orders(k + 1);
    orders[0].push_back({});
    for (int j = 1; j <= k; ++j)
        for (const auto& m : orders[j - 1]) {
            int start = m.empty() ? 0 : m.back();
            for (int a = start; a < dim; ++a) {
                auto mm = m;
                mm.push_back(a);
                orders[j].push_back(mm);
            }
        }
    // Hölder offsets: axes and diagonals at dyadic lengths.
    std::vector<std::vector<long>> dirs;
    for (int a = 0; a < dim; ++a) {
        std::vector<long> d(dim, 0);
        d[a] = 1;
        dirs.push_back(d);
        for (int b = a + 1; b < dim; ++b)
            for (int sg : {1, -1}) {
                auto e = d;
                e[b] = sg;
                dirs.push_back(e);
            }
    }
    std::vector<long> dyadic;
    for (long m = 1; m * opt.h <= opt.chart_radius; m *= 2) dyadic.push_back(m);

    std::mutex mu;
    double result = 0.0;
    const double h = opt.h;
    parallel_for(cover.centers.size(), [&](std::size_t ci) {
        const auto& c = cover.centers[ci];
        MobiusChart ch{c.x, c.y};
        auto F = [&](Vec x, double y) { return field(ch.push(HalfSpacePoint{std::move(x), y}).theta, c.y * y); };
        auto Fp = [&](const HalfSpacePoint& p, const std::vector<int>& shift) {
            Vec x = p.x;
            double y = p.y;
            for (int a = 0; a < dim; ++a) {
                if (a < n) x[a] += shift[a] * h;
                else y += shift[a] * h;
            }
            return F(std::move(x), y);
        };
        // central-difference derivative for multi-index m
        auto deriv = [&](const HalfSpacePoint& p, const std::vector<int>& m) {
            std::vector<int> sh(dim, 0);
            if (m.empty()) return Fp(p, sh);
            if (m.size() == 1) {
                sh[m[0]] = 1;
                double fp = Fp(p, sh);
                sh[m[0]] = -1;
                return (fp - Fp(p, sh)) / (2 * h);
            }
            if (m[0] == m[1]) {
                sh[m[0]] = 1;
                double fp = Fp(p, sh);
                sh[m[0]] = -1;
                double fm = Fp(p, sh);
                sh[m[0]] = 0;
                return (fp - 2 * Fp(p, sh) + fm) / (h * h);
            }
            double s = 0.0;
            for (int sa : {1, -1})
                for (int sb : {1, -1}) {
                    sh[m[0]] = sa;
                    sh[m[1]] = sb;
                    s += sa * sb * Fp(p, sh);
                }
            return s / (4 * h * h);
        };
        std::vector<double> sups(k + 1, 0.0);
        const auto& top = orders[k];
        std::vector<std::vector<double>> topvals(top.size(), std::vector<double>(L.size(), 0.0));
        std::vector<long> idx(dim);
        for (std::size_t f = 0; f < L.size(); ++f) {
            if (!L.inside[f]) continue;
            L.unflat(f, idx);
            auto p = L.point(idx);
            for (int j = 0; j <= k; ++j)
                for (std::size_t mi = 0; mi < orders[j].size(); ++mi) {
                    double v = deriv(p, orders[j][mi]);
                    sups[j] = std::max(sups[j], std::abs(v));
                    if (j == k) topvals[mi][f] = v;
                }
        }
        double hol = 0.0;
        if (alpha > 0.0) {
            std::vector<long> jdx(dim);
            for (std::size_t f = 0; f < L.size(); ++f) {
                if (!L.inside[f]) continue;
                L.unflat(f, idx);
                for (const auto& d : dirs)
                    for (long m : dyadic) {
                        bool ok = true;
                        double len2 = 0.0;
                        for (int a = 0; a < dim; ++a) {
                            jdx[a] = idx[a] + m * d[a];
                            ok = ok && jdx[a] >= 0 && jdx[a] < L.ext[a];
                            len2 += double(m * d[a]) * double(m * d[a]);
                        }
                        if (!ok) continue;
                        std::size_t g = L.flat(jdx);
                        if (!L.inside[g]) continue;
                        const double dist = std::pow(std::sqrt(len2) * h, alpha);
                        for (std::size_t mi = 0; mi < top.size(); ++mi)
                            hol = std::max(hol, std::abs(topvals[mi][f] - topvals[mi][g]) / dist);
                    }
            }
        }
        double norm = hol;
        for (double s : sups) norm += s;
        norm *= std::pow(c.y, -delta);
        std::lock_guard lk(mu);
        result = std::max(result, norm);
    });
    return result;
}

// ---------------------------------------------------------------------------

CompactifiedMetric hyperbolic_test_metric(int n) {
    CompactifiedMetric m;
    m.n = n;
    m.domain = 1e6;
    m.gbar = [n](const Vec&, double) { return Eigen::MatrixXd::Identity(n + 1, n + 1); };
    return m;
}

CompactifiedMetric perturbed_test_metric(int n, double amp) {
    CompactifiedMetric m;
    m.n = n;
    m.domain = 2.0;
    m.gbar = [n, amp](const Vec& th, double rho) {
        Eigen::MatrixXd G = Eigen::MatrixXd::Identity(n + 1, n + 1);
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b)
                G(a, b) += amp * (0.5 * std::sin(th[a] + 2 * th[b]) + 0.5 * std::sin(th[b] + 2 * th[a]) +
                                  rho * (a == b ? 2.0 : 1.0));
            G(a, n) += amp * 0.5 * rho * std::cos(th[a]);
            G(n, a) = G(a, n);
        }
        G(n, n) += amp * rho * (1.0 + 0.5 * th[0]);
        return G;
    };
    return m;
}

BoundaryChart BoundaryChart::at(const CompactifiedMetric& m, const Vec& theta0, double r) {
    const int n = m.n;
    if (static_cast<int>(theta0.size()) != n) throw Error(Errc::ShapeMismatch, "theta0 dimension");
    if (!(r > 0.0)) throw Error(Errc::ParameterViolation, "chart scale must be positive");
    Eigen::MatrixXd Gi = m.gbar(theta0, 0.0).inverse();
    // covectors as rows in the (theta, rho) basis; Gram-Schmidt under Gi
    std::vector<Eigen::VectorXd> basis;
    Eigen::VectorXd drho = Eigen::VectorXd::Zero(n + 1);
    drho(n) = 1.0;
    auto ip = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(Gi * b); };
    drho /= std::sqrt(ip(drho, drho));
    basis.push_back(drho);
    BoundaryChart ch;
    ch.boundary_theta = theta0;
    ch.scale = r;
    ch.A = Eigen::MatrixXd::Zero(n, n);
    ch.B = Eigen::VectorXd::Zero(n);
    for (int b = 0; b < n; ++b) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
        v(b) = 1.0;
        for (const auto& e : basis) v -= ip(v, e) * e;
        v /= std::sqrt(ip(v, v));
        basis.push_back(v);
        ch.A.row(b) = v.head(n).transpose();
        ch.B(b) = v(n);
    }
    return ch;
}

double boundary_chart_deviation(const CompactifiedMetric& m, const BoundaryChart& ch, int sample_count) {
    const int n = m.n;
    if (sample_count < 2) throw Error(Errc::InsufficientSamples, "need at least 2 samples per axis");
    // J maps (theta, rho) differentials to (theta~, rho)
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n + 1, n + 1);
    J.topLeftCorner(n, n) = ch.A;
    J.topRightCorner(n, 1) = ch.B;
    const Eigen::MatrixXd Ji = J.inverse();
    const Eigen::MatrixXd Ai = ch.A.inverse();
    const double r = ch.scale;
    if (r >= m.domain) throw Error(Errc::ChartEscapesDomain, "chart height exceeds metric domain");

    double worst = 0.0;
    std::vector<long> idx(n + 1, 0);
    const int S = sample_count;
    for (;;) {
        Eigen::VectorXd tt(n);
        for (int a = 0; a < n; ++a) tt(a) = r * (-1.0 + (idx[a] + 0.5) * 2.0 / S);
        const double rho = r * (idx[n] + 0.5) / S;
        Eigen::VectorXd th = Ai * (tt - ch.B * rho);
        Vec theta(n);
        for (int a = 0; a < n; ++a) {
            theta[a] = ch.boundary_theta[a] + th(a);
            if (std::abs(th(a)) >= m.domain) throw Error(Errc::ChartEscapesDomain, "chart leaves metric domain");
        }
        Eigen::MatrixXd Gn = Ji.transpose() * m.gbar(theta, rho) * Ji;
        // |y^-2 (Gn - I)| in the hyperbolic metric y^-2 I equals |Gn - I| Euclidean
        worst = std::max(worst, (Gn - Eigen::MatrixXd::Identity(n + 1, n + 1)).norm());
        int a = 0;
        while (a <= n) {
            if (++idx[a] < S) break;
            idx[a] = 0;
            ++a;
        }
        if (a > n) break;
    }
    return worst;
}

}  // namespace ahelab
