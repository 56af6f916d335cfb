#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace ahelab {

using Vec = std::vector<double>;

// --- ball model ------------------------------------------------------------

/// Hyperbolic distance in the unit ball (metric 4|dx|^2/(1-|x|^2)^2).
[[nodiscard]] double hyperbolic_distance(const Vec& xi, const Vec& eta);

/// rho(xi, eta) = 1 / cosh d(xi, eta).
[[nodiscard]] double rho_two_point(const Vec& xi, const Vec& eta);

/// rho(xi, 0) = (1 - |xi|^2) / (1 + |xi|^2).
[[nodiscard]] double rho_origin(const Vec& xi);

// --- half-space model --------------------------------------------------------

struct HalfSpacePoint {
    Vec x;
    double y = 1.0;
};

/// Distance for the metric (|dx|^2 + dy^2) / y^2.
[[nodiscard]] double halfspace_distance(const HalfSpacePoint& a, const HalfSpacePoint& b);

/// Background coordinates (theta, rho) of the collar model.
struct Background {
    Vec theta;
    double rho = 1.0;
};

struct MobiusChart {
    Vec center_theta;
    double center_rho = 1.0;

    /// (x, y) -> (theta0 + rho0 x, rho0 y).
    [[nodiscard]] Background push(const HalfSpacePoint& p) const;
    /// Inverse of push. OutsideChart if rho <= 0 or the dimension differs.
    [[nodiscard]] HalfSpacePoint pull(const Background& b) const;
    /// Pull restricted to the box {|x| < sinh r, e^-r < y < e^r} containing B_r.
    [[nodiscard]] HalfSpacePoint pull_within(const Background& b, double r) const;
};

// --- Whitney cover -----------------------------------------------------------

/// Target region of a cover: {|theta|_inf < c, rho_min <= rho < rho_max} in the
/// half-space collar model. Empty when rho_min >= rho_max.
struct CoverRegion {
    int n = 2;
    double rho_min = 0.1;
    double rho_max = 0.5;
    double c = 0.25;

    [[nodiscard]] bool contains(const HalfSpacePoint& p) const;
    [[nodiscard]] bool empty() const { return !(rho_max > rho_min); }
};

struct WhitneyCover {
    int n = 2;
    std::vector<HalfSpacePoint> centers;
    double inner_radius = 0.0;  // r0
    double outer_radius = 0.0;  // r1
    long long multiplicity_bound = 0;
    int measured_multiplicity = 0;
    double candidate_spacing = 0.0;
};

struct CoverOptions {
    double outer_factor = 2.0;      // r1 = outer_factor * r0
    double spacing_factor = 0.125;  // candidate lattice spacing / r0
    double probe_factor = 0.1;      // maximality sweep spacing / r0
};

/// Volume of a hyperbolic ball of radius t in H^{n+1}, up to the sphere area.
[[nodiscard]] double ball_volume_profile(int n, double t);

/// Greedy maximal packing of balls of radius r0/2 with centers in the region.
[[nodiscard]] WhitneyCover whitney_cover(const CoverRegion& region, double r0, std::uint64_t seed,
                                         const CoverOptions& opt = {});

/// Lattice covering the region with the given hyperbolic spacing, for probes.
[[nodiscard]] std::vector<HalfSpacePoint> region_lattice(const CoverRegion& region, double h,
                                                         double offset = 0.0);

/// Max over pts of the number of centers within distance r.
[[nodiscard]] int cover_multiplicity(const WhitneyCover& cover,
                                     const std::vector<HalfSpacePoint>& pts, double r);

/// Max over pts of the distance to the nearest center.
[[nodiscard]] double cover_gap(const WhitneyCover& cover, const std::vector<HalfSpacePoint>& pts);

// --- L^p membership ----------------------------------------------------------

enum class Membership { Converges, Diverges };

struct MembershipReport {
    Membership analytic = Membership::Diverges;
    Membership numeric = Membership::Diverges;
    bool borderline = false;
    double gap = 0.0;        // Re s - (delta + n/p - r)
    double exponent = 0.0;   // a = (s + r - delta) p - n
    double partial = 0.0;    // last partial integral
    int decades = 0;
};

[[nodiscard]] MembershipReport lp_membership(double s, double delta, double p, int r_weight, int n);

/// Gauss-Legendre value of the collar integral over rho in [eps, eps0].
[[nodiscard]] double membership_integral(double s, double delta, double p, int r_weight, int n,
                                         double eps, double eps0 = 0.5);

// --- weighted norms ----------------------------------------------------------

/// Scalar field in background coordinates.
using BackgroundField = std::function<double(const Vec& theta, double rho)>;

struct NormOptions {
    double chart_radius = 1.0;  // sample lattice fills B_r of each chart
    double h = 1.0 / 16.0;      // lattice spacing in chart coordinates
};

/// sup over charts of rho(p_i)^-delta times the discrete C^{k,alpha} norm of the
/// pulled-back field. k in {0, 1, 2}.
[[nodiscard]] double weighted_norm_sup(const BackgroundField& field, double delta,
                                       const WhitneyCover& cover, int k, double alpha,
                                       const NormOptions& opt = {});

// --- boundary charts ---------------------------------------------------------

/// Compactified metric gbar = rho^2 g in background coordinates (theta, rho),
/// index n is the rho direction. Valid for |theta - theta0|_inf, rho < domain.
struct CompactifiedMetric {
    int n = 2;
    std::function<Eigen::MatrixXd(const Vec& theta, double rho)> gbar;
    double domain = 1.0;
};

/// Euclidean half-space gbar = identity.
[[nodiscard]] CompactifiedMetric hyperbolic_test_metric(int n);

/// gbar = I + amp (theta-dependent boundary deformation + rho correction),
/// keeping |d rho| = 1 on the boundary. Smooth in (theta, rho).
[[nodiscard]] CompactifiedMetric perturbed_test_metric(int n, double amp);

struct BoundaryChart {
    Vec boundary_theta;  // the boundary point p
    double scale = 0.5;  // r
    Eigen::MatrixXd A;   // theta~ = A (theta - theta0) + B rho
    Eigen::VectorXd B;

    /// Frame from Gram-Schmidt of (d rho, d theta^b) under gbar^-1 at p.
    static BoundaryChart at(const CompactifiedMetric& m, const Vec& theta0, double r);
};

/// sup over a lattice in Y_1 = {|x|_inf < 1, 0 < y < 1} of |Psi* g - hyperbolic|
/// measured in the hyperbolic metric.
[[nodiscard]] double boundary_chart_deviation(const CompactifiedMetric& m, const BoundaryChart& chart,
                                              int sample_count);

}  // namespace ahelab
