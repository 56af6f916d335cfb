#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace ahelab {

struct QuadRule {
    std::vector<double> x;
    std::vector<double> w;

    [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
    template <class F>
    [[nodiscard]] double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(x[i]);
        return s;
    }
};

/// Gauss-Legendre rule with m nodes on [a, b].
[[nodiscard]] QuadRule gauss_legendre(int m, double a = -1.0, double b = 1.0);

/// Gauss-Legendre with m nodes on each interval between consecutive breakpoints.
[[nodiscard]] QuadRule composite_gauss(const std::vector<double>& breaks, int m);

/// Breakpoints on [a, b] refined geometrically toward `focus` (one of a, b, or an
/// interior point). Cells shrink by `ratio` until they reach `min_width`.
[[nodiscard]] std::vector<double> graded_breaks(double a, double b, double focus,
                                                double ratio, double min_width);

/// Least-squares slope of y against x.
[[nodiscard]] double lsq_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Polynomial (Neville) extrapolation of samples (xs, ys) to x0.
[[nodiscard]] double neville(const std::vector<double>& xs, const std::vector<double>& ys,
                             double x0 = 0.0);

/// log(sinh(x)) for x > 0 without overflow.
[[nodiscard]] double log_sinh(double x);

/// Worker count honoring AHE_LAB_THREADS.
[[nodiscard]] unsigned thread_cap();

/// Runs body(i) for i in [0, n) on up to thread_cap() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Formats with 17 significant digits.
[[nodiscard]] std::string fmt17(double v);

}  // namespace ahelab
