#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ahelab {

// ---------------------------------------------------------------------------
// Ansatz. Euclidean ball radius r in [0, 1], rho = (1 - r^2)/(1 + r^2) and
//   gbar = rho^2 g = a dr^2 + r^2 b (s1^2 + s2^2) + r^2 c s3^2
// with left-invariant forms ds3 = -2 s1^s2 on S^3 (round: c = b, unit S^n).
// Hyperbolic space is a = b = c = 4/(1 + r^2)^2.
// ---------------------------------------------------------------------------

enum class BoundaryShape { RoundSphere, BergerSphere };

struct BoundaryMetricSpec {
    BoundaryShape shape = BoundaryShape::RoundSphere;
    int n = 3;
    double scale = 1.0;   // round: ghat = scale^2 * hhat
    double squash = 1.0;  // Berger: s1^2 + s2^2 + squash^2 s3^2
    int l = 2;
    bool enforce_paper_bound = true;
    double rho_max = 1.9;  // extension cutoff: 1 on rho < rho_max/4, 0 on rho > rho_max/2

    static BoundaryMetricSpec round(int n, double scale = 1.0, int l = 2);
    static BoundaryMetricSpec berger(double squash, int l = 2);
    /// "round:<scale>" or "berger:<squash>".
    static BoundaryMetricSpec parse(const std::string& s, int n = 3, int l = 2);

    void validate() const;
    [[nodiscard]] bool round_symmetric() const { return shape == BoundaryShape::RoundSphere; }
    /// Boundary values of b and c.
    [[nodiscard]] double b_hat() const;
    [[nodiscard]] double c_hat() const;
    [[nodiscard]] std::string describe() const;
};

/// Value and first two derivatives.
struct Jet2 {
    double v = 0.0, d = 0.0, dd = 0.0;
};

/// (a, b, c) jets in r.
using MetricJets = std::array<Jet2, 3>;
using AnalyticMetric = std::function<MetricJets(double r)>;

/// Positive even-Chebyshev nodes r_j = cos(pi j/(2M-1)), j < M, with folded
/// differentiation matrices for even functions.
struct EvenChebGrid {
    int M = 0;
    std::vector<double> r;
    std::vector<double> rho;
    Eigen::MatrixXd D1, D2;

    static EvenChebGrid make(int M);
    /// Even interpolant of node values at an arbitrary r in [0, 1].
    [[nodiscard]] double interpolate(const Eigen::VectorXd& values, double x) const;
    [[nodiscard]] Jet2 interpolate_jet(const Eigen::VectorXd& values, double x) const;
};

/// Analytic base plus a node-valued correction of (b, (a-b)/r^2, (c-b)/r^2)
/// scaled by rho^weight_power.
struct CohomOneMetric {
    BoundaryMetricSpec spec;
    std::shared_ptr<const AnalyticMetric> base;
    std::shared_ptr<const EvenChebGrid> grid;
    int weight_power = 0;
    Eigen::MatrixXd w;  // M x 3

    [[nodiscard]] int size() const { return grid ? grid->M : 0; }
    [[nodiscard]] const std::vector<double>& rho_grid() const { return grid->rho; }
    /// Jets of (a, b, c) at an arbitrary r.
    [[nodiscard]] MetricJets eval(double r) const;
    /// Jets of (a, b, c) at every node, correction differentiated spectrally.
    [[nodiscard]] std::vector<MetricJets> node_jets() const;
    /// Correction (b, eps, zeta) values at node j, unscaled.
    [[nodiscard]] std::array<double, 3> correction(int j) const;
    [[nodiscard]] bool positive() const;

private:
    mutable Eigen::MatrixXd cache_key_;
    mutable std::array<std::vector<double>, 3> cache_coeffs_;
};

[[nodiscard]] MetricJets hyperbolic_jets(double r);
/// Smooth cutoff: 1 for rho < rho_max/4, 0 for rho > rho_max/2.
[[nodiscard]] Jet2 cutoff_of_r(double r, double rho_max = 0.5);
[[nodiscard]] Jet2 rho_of_r(double r);

/// T(ghat) = h + rho^-2 E(ghat - hhat) on an M-node grid.
[[nodiscard]] CohomOneMetric reference_metric(const BoundaryMetricSpec& spec, int M = 64);

struct PointResidual {
    std::array<double, 3> Q{};    // orthonormal (t, 1, 3); round uses (t, s, s)
    std::array<double, 3> E{};    // Ric + n g, orthonormal
    std::array<double, 3> ric{};  // Ricci, orthonormal
    [[nodiscard]] double q_norm(const BoundaryMetricSpec& spec) const;
    [[nodiscard]] double e_norm(const BoundaryMetricSpec& spec) const;
};

/// Q(g, g0) = Ric + n g - (1/2) L_W g with W = tr_g(Gamma_g - Gamma_g0), at radius r in (0, 1).
[[nodiscard]] PointResidual point_residual(const BoundaryMetricSpec& spec, double r, const MetricJets& g,
                                           const MetricJets& g0);

struct GaugeResidual {
    Eigen::MatrixXd Q;                 // M x 3, row 0 (r = 1) is zero
    std::vector<double> q_norm;        // |Q|_g per node
    std::vector<double> einstein_part; // |Ric + n g|_g per node
    double sup_norm = 0.0;
    double einstein_sup = 0.0;
    double ricci_max = 0.0;            // largest orthonormal Ricci eigenvalue
};

[[nodiscard]] GaugeResidual gauge_fixed_residual(const CohomOneMetric& g, const CohomOneMetric& g0);

/// Diagonal perturbation kappa_i = delta gbar_ii / gbar_ii, each an even Chebyshev series.
struct Perturbation {
    std::array<std::vector<double>, 3> coeffs;
    [[nodiscard]] Jet2 eval(int i, double r) const;
};

[[nodiscard]] Perturbation random_perturbation(int terms, std::uint64_t seed, bool round);

/// (1/2)(Delta_L + 2n) about the hyperbolic base, closed form in the ansatz.
struct LinearizedOperator {
    BoundaryMetricSpec spec;
    [[nodiscard]] std::array<double, 3> apply(const Perturbation& v, double r) const;
    [[nodiscard]] Eigen::MatrixXd apply_nodes(const Perturbation& v, const EvenChebGrid& grid) const;
};

/// NotEinsteinBase unless h is the hyperbolic metric with Q(h, h) = 0 to 1e-10.
[[nodiscard]] LinearizedOperator linearized_operator(const CohomOneMetric& h);

/// Richardson-extrapolated d/ds Q(h + s v, h) at r.
[[nodiscard]] std::array<double, 3> fd_linearization(const CohomOneMetric& h, const Perturbation& v, double r,
                                                     double step = 1e-2);

struct LinearizationReport {
    double max_rel_error = 0.0;  // sup |FD - L v| / sup |v| over probes, worst case
    int perturbations = 0;
    int probes = 0;
};

[[nodiscard]] LinearizationReport linearization_check(const CohomOneMetric& h, int count, std::uint64_t seed);

/// Indicial matrix of (1/2)(Delta_L + 2n) on rho^s kappa.
[[nodiscard]] Eigen::Matrix3d indicial_matrix(const BoundaryMetricSpec& spec, double s);

struct ExpansionState {
    int k = 0;
    CohomOneMetric metric;
    std::vector<double> residual_norms;  // sup_{rho in [1e-4,1e-2]} rho^-j |Q(g_j)|, j = 0..k
    std::vector<double> slopes;          // log-log slope of |Q(g_j)| on the same window
    std::vector<std::array<double, 3>> corrections;  // psi for j = 1..k
};

/// |Q(g, g0)|_g at the given rho values (analytic parts only).
[[nodiscard]] std::vector<double> residual_profile(const CohomOneMetric& g, const CohomOneMetric& g0,
                                                   const std::vector<double>& rhos);

[[nodiscard]] ExpansionState asymptotic_expand(const BoundaryMetricSpec& spec, int l, int M = 256);

struct NewtonConfig {
    int max_iters = 20;
    double tol_residual = 1e-8;
    double damping = 1.0;
    bool analytic_jacobian = true;
    double fd_step = 1e-7;
    bool raise = true;  // false: return unconverged or obstructed states instead of throwing
};

struct NewtonResult {
    CohomOneMetric metric;
    GaugeResidual residual;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;  // sup |Q| before each step and at the end
    double weighted_correction = 0.0;
};

/// Adds amplitude * sum c_k T_2k(r) (1 - r^2) noise to each correction field.
void add_coefficient_noise(CohomOneMetric& g, double amplitude, std::uint64_t seed, int terms = 4);

/// sup over interior nodes of rho^-delta max_i |gbar_i - hbar_i| / hbar_i.
[[nodiscard]] double weighted_correction_norm(const CohomOneMetric& g, double delta);

[[nodiscard]] NewtonResult newton_solve(const BoundaryMetricSpec& spec, const ExpansionState& init,
                                        const NewtonConfig& cfg = {});

enum class YamabeSign { Negative, Zero, Positive };
enum class Hypothesis { SatisfiesA, SatisfiesB, Neither };

[[nodiscard]] Hypothesis hypothesis_check(double K_max, YamabeSign yamabe, int n);
[[nodiscard]] std::string hypothesis_name(Hypothesis h);
[[nodiscard]] YamabeSign parse_yamabe(const std::string& s);

// --- independent oracle ------------------------------------------------------

/// |Ric + 3 g|_g of the full 4-dimensional metric in Euler coordinates
/// (r, theta, phi, psi), by nested fourth-order finite differences. n = 3 only.
/// h <= 0 picks a step proportional to rho.
[[nodiscard]] double fd_einstein_defect(const CohomOneMetric& g, double r, double theta, double h = 0.0);

}  // namespace ahelab
