#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ahelab/indicial.hpp"

namespace ahelab {

/// Radial form -u'' - n coth(d) u' + c u of Delta + c on H^{n+1}.
struct RadialOperator {
    int n = 1;
    double c_shift = 0.0;

    [[nodiscard]] double apply(double u, double du, double d2u, double d) const;
    /// Indicial roots n/2 -+ sqrt(n^2/4 + c); nullopt when the radicand is negative.
    [[nodiscard]] std::optional<std::pair<double, double>> roots() const;
};

[[nodiscard]] RadialOperator radial_reduce(const OperatorSpec& spec);

enum class Branch { Plus, Minus };

/// u = rho^s * sum a_m rho^m, rho = 1/cosh d. Odd coefficients vanish.
struct FrobeniusSeries {
    double s = 0.0;
    std::vector<double> a;
    int K = 0;

    [[nodiscard]] double value(double rho) const;
    /// D u with D = rho d/drho (and D^2 u).
    [[nodiscard]] double Dvalue(double rho) const;
    [[nodiscard]] double D2value(double rho) const;
    /// u and du/dd at geodesic distance d.
    [[nodiscard]] std::pair<double, double> at_distance(double d) const;
};

[[nodiscard]] FrobeniusSeries frobenius_series(const RadialOperator& op, Branch br, int K);

/// |L u| relative to the size of its terms, using the rho-form of L.
[[nodiscard]] double frobenius_residual(const RadialOperator& op, const FrobeniusSeries& f, double rho);

struct GreenProfile {
    int n = 1;
    double c_shift = 0.0;
    std::vector<double> d;
    std::vector<double> K;
    double normalization = 1.0;
    double radius_R = 0.0;

    [[nodiscard]] GreenProfile scaled(double lambda) const;
    /// Kernel at arbitrary d > 0: interpolation on the grid, matched power/log
    /// extension below the grid, rho^{n/2+R} extension beyond it.
    [[nodiscard]] double eval(double dist) const;
};

struct GreenOptions {
    double rtol = 1e-10;
    int series_order = 24;
};

[[nodiscard]] GreenProfile green_profile(const RadialOperator& op, const std::vector<double>& d_grid,
                                         const GreenOptions& opt = {});

/// Least-squares slope of log|K| against log rho(d) on [d_lo, d_hi].
[[nodiscard]] double decay_slope(const GreenProfile& prof, double d_lo, double d_hi);

struct BoundCheckReport {
    std::vector<double> grid;
    std::vector<double> ratios;
    double sup_ratio = 0.0;
    double witness = 0.0;
    bool monotone_tail = false;
    double tail_change = 0.0;
};

/// Quadrature value of int_0^1 t^p (1-t)^q (1-ut)^-r dt.
[[nodiscard]] double hypergeometric_integral(double p, double q, double r, double u, int order = 20);
[[nodiscard]] double hypergeometric_ratio(double p, double q, double r, double u, int order = 20);
[[nodiscard]] BoundCheckReport hypergeometric_bound(double p, double q, double r,
                                                    const std::vector<double>& u_grid, int order = 20);

/// The (s, theta) reduced integral of rho(xi,eta)^a rho(eta)^b divided by rho(xi)^b,
/// xi on the axis at Euclidean radius r.
[[nodiscard]] double distance_integral_ratio(double a, double b, int n, double r, int order = 12);
[[nodiscard]] BoundCheckReport distance_integral_bound(double a, double b, int n, int sample_pairs,
                                                       std::uint64_t seed, int order = 12);

[[nodiscard]] double kernel_weight_ratio(const GreenProfile& prof, double b, double r, int order = 12);
[[nodiscard]] BoundCheckReport kernel_weight_bound(const GreenProfile& prof, double b, int n,
                                                   const std::vector<double>& radii = {}, int order = 12);

/// Area of the unit n-sphere.
[[nodiscard]] double sphere_area(int n);

}  // namespace ahelab
