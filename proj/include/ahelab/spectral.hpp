#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ahelab/indicial.hpp"

namespace ahelab {

/// Cell-centred grid on [0, D] with exact cell volumes for sinh^n(d) dd.
struct RadialGrid {
    int n = 3;
    double D = 40.0;
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> log_weights;

    static RadialGrid make(int n, double D, int N);
    [[nodiscard]] double h() const { return D / static_cast<double>(nodes.size()); }
    /// Volume of the truncated ball divided by the sphere area.
    [[nodiscard]] double volume() const;
};

enum class RadialKind { Scalar, HodgeOneForm, CovariantOneForm };

/// Tridiagonal operator on node values. Scalar and Hodge kinds are symmetric
/// for the diagonal weights; the covariant stencil is plain central FD.
struct DiscreteOperator {
    RadialKind kind = RadialKind::Scalar;
    int n = 3;
    double c_shift = 0.0;
    double d_lo = 0.0;  // 0 means regularity at the centre, else Dirichlet
    double D = 0.0;
    std::string boundary_condition;
    std::vector<double> nodes;
    std::vector<double> log_weights;
    Eigen::VectorXd diag, lower, upper;  // lower(i) = A(i+1,i), upper(i) = A(i,i+1)

    [[nodiscard]] Eigen::Index size() const { return diag.size(); }
    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    [[nodiscard]] Eigen::MatrixXd dense() const;
    /// max |w_i A_ij - w_j A_ji| / max |w_i A_ij|.
    [[nodiscard]] double symmetry_defect() const;
};

/// Supported specs: scalar Laplacian (with shift), Hodge on 1-forms, covariant on
/// 1-forms (r = 1); the latter two act on radial forms f(d) dd.
[[nodiscard]] DiscreteOperator discretize_radial(const OperatorSpec& spec, double D, int N);

/// Same, with Dirichlet data at d_lo > 0 instead of the regular centre. No D/N floor.
[[nodiscard]] DiscreteOperator discretize_interval(RadialKind kind, int n, double c_shift, double d_lo,
                                                   double D, int N);

[[nodiscard]] double spectrum_bottom(const DiscreteOperator& op);

struct EstimateReport {
    double lambda_observed = 0.0;
    double lambda_claimed = 0.0;
    double constant_C = 0.0;
    double epsilon = 0.0;  // collar slack, or max defect for identity checks
    int holds = 0;
    int total = 0;
    std::string samples;
};

/// Smooth bump exp(-1/(1-x^2)) on [a, b] times the profile (cosh m / cosh d)^kappa,
/// m the midpoint; value and first two derivatives.
struct Bump {
    double a = 0.0, b = 1.0;
    double kappa = 0.0;
    void eval(double d, double& u, double& du, double& d2u) const;
};

/// Random bumps with support inside [lo, hi], widths in [wmin, wmax], kappa in [kmin, kmax].
[[nodiscard]] std::vector<Bump> random_bumps(int count, double lo, double hi, double wmin, double wmax,
                                             std::uint64_t seed, double kmin = 0.0, double kmax = 0.0);

struct CollarOptions {
    double collar_rho = 0.1;
    int samples = 100;
    std::uint64_t seed = 1;
};

/// phi = rho^s on the collar {rho < collar_rho}; quadratic form against random bumps.
[[nodiscard]] EstimateReport cheng_yau_check(double s_weight, const RadialGrid& grid,
                                             const CollarOptions& opt = {});
[[nodiscard]] EstimateReport cheng_yau_check(double s_weight, const RadialGrid& grid,
                                             const std::vector<Bump>& tests, double collar_rho);

/// Empirical C in ||u||_delta <= C ||(Delta + c) u||_delta over random collar bumps.
[[nodiscard]] EstimateReport weighted_estimate_check(double delta, double lambda, const OperatorSpec& spec,
                                                     int samples, std::uint64_t seed, double D = 30.0,
                                                     double collar_rho = 0.1);

/// Both sides of the weighted Bochner identity for q = 0 or radial q = 1.
[[nodiscard]] EstimateReport bochner_identity_check(int q, double phi_exponent, const RadialGrid& grid,
                                                    int samples, std::uint64_t seed);

/// Smallest Dirichlet eigenvalue of the form Laplacian on {rho < collar_rho}.
[[nodiscard]] EstimateReport asymptotic_form_estimate(int q, int n, const RadialGrid& grid,
                                                      double collar_rho = 0.1);

/// Hodge minus covariant Laplacian on radial 1-forms versus -n Id.
[[nodiscard]] EstimateReport weitzenbock_radial_check(int n, const RadialGrid& grid);

}  // namespace ahelab
