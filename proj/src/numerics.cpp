#include "ahelab/numerics.hpp"
#include "ahelab/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

namespace ahelab {

std::string_view errc_name(Errc c) noexcept {
    switch (c) {
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::UnsupportedFamily: return "UnsupportedFamily";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::SymmetryViolation: return "SymmetryViolation";
        case Errc::OnBoundary: return "OnBoundary";
        case Errc::OutsideChart: return "OutsideChart";
        case Errc::GridTooCoarse: return "GridTooCoarse";
        case Errc::InsufficientSamples: return "InsufficientSamples";
        case Errc::ChartEscapesDomain: return "ChartEscapesDomain";
        case Errc::LogCaseUnsupported: return "LogCaseUnsupported";
        case Errc::NonPositiveRadius: return "NonPositiveRadius";
        case Errc::StiffIntegration: return "StiffIntegration";
        case Errc::DegenerateWindow: return "DegenerateWindow";
        case Errc::ParameterViolation: return "ParameterViolation";
        case Errc::WeightOutOfRange: return "WeightOutOfRange";
        case Errc::ResolutionTooLow: return "ResolutionTooLow";
        case Errc::EigenFailure: return "EigenFailure";
        case Errc::SupportEscapesCollar: return "SupportEscapesCollar";
        case Errc::WeightTooLarge: return "WeightTooLarge";
        case Errc::UnsupportedDegree: return "UnsupportedDegree";
        case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
        case Errc::GridMismatch: return "GridMismatch";
        case Errc::NotEinsteinBase: return "NotEinsteinBase";
        case Errc::IndicialSingular: return "IndicialSingular";
        case Errc::OrderOutOfRange: return "OrderOutOfRange";
        case Errc::NoConvergence: return "NoConvergence";
        case Errc::GaugeObstruction: return "GaugeObstruction";
    }
    return "Unknown";
}

bool errc_is_numeric(Errc c) noexcept {
    switch (c) {
        case Errc::StiffIntegration:
        case Errc::EigenFailure:
        case Errc::NotPositiveDefinite:
        case Errc::NotEinsteinBase:
        case Errc::IndicialSingular:
        case Errc::NoConvergence:
        case Errc::GaugeObstruction:
            return true;
        default:
            return false;
    }
}

namespace {

struct GLCache {
    std::mutex mu;
    std::map<int, QuadRule> rules;
};

GLCache& gl_cache() {
    static GLCache c;
    return c;
}

QuadRule compute_gl(int m) {
    QuadRule r;
    r.x.resize(m);
    r.w.resize(m);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= m; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = m * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        r.x[i] = -z;
        r.x[m - 1 - i] = z;
        r.w[i] = r.w[m - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return r;
}

}  // namespace

QuadRule gauss_legendre(int m, double a, double b) {
    if (m < 1) throw Error(Errc::ParameterViolation, "gauss_legendre needs m >= 1");
    QuadRule base;
    {
        auto& c = gl_cache();
        std::lock_guard lk(c.mu);
        auto it = c.rules.find(m);
        if (it == c.rules.end()) it = c.rules.emplace(m, compute_gl(m)).first;
        base = it->second;
    }
    double h = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int i = 0; i < m; ++i) {
        base.x[i] = mid + h * base.x[i];
        base.w[i] *= h;
    }
    return base;
}

QuadRule composite_gauss(const std::vector<double>& breaks, int m) {
    QuadRule out;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        if (!(breaks[k + 1] > breaks[k])) continue;
        auto r = gauss_legendre(m, breaks[k], breaks[k + 1]);
        out.x.insert(out.x.end(), r.x.begin(), r.x.end());
        out.w.insert(out.w.end(), r.w.begin(), r.w.end());
    }
    return out;
}

std::vector<double> graded_breaks(double a, double b, double focus, double ratio,
                                  double min_width) {
    std::vector<double> pts{a, b};
    auto grade = [&](double from, double to) {
        // cells from `to` shrinking toward `from`
        double len = std::abs(to - from);
        double sgn = to > from ? 1.0 : -1.0;
        double w = len;
        while (w > min_width) {
            w *= ratio;
            pts.push_back(from + sgn * w);
        }
    };
    if (focus > a && focus < b) {
        pts.push_back(focus);
        grade(focus, a);
        grade(focus, b);
    } else if (focus <= a) {
        grade(a, b);
    } else {
        grade(b, a);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

double neville(const std::vector<double>& xs, const std::vector<double>& ys, double x0) {
    std::vector<double> p = ys;
    const std::size_t n = xs.size();
    for (std::size_t m = 1; m < n; ++m)
        for (std::size_t i = 0; i + m < n; ++i)
            p[i] = ((x0 - xs[i + m]) * p[i] + (xs[i] - x0) * p[i + 1]) / (xs[i] - xs[i + m]);
    return p[0];
}

double log_sinh(double x) {
    if (x > 20.0) return x - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * x));
    return std::log(std::sinh(x));
}

unsigned thread_cap() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("AHE_LAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return std::min<unsigned>(static_cast<unsigned>(v), hw);
    }
    return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    unsigned nt = std::min<std::size_t>(thread_cap(), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace ahelab
