#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ahelab {

enum class Family {
    ScalarLaplacian,
    CovariantLaplacianTraceFree,
    Lichnerowicz,
    HodgeLaplacian,
    VectorLaplacian,
};

[[nodiscard]] std::string family_name(Family f);
[[nodiscard]] Family parse_family(const std::string& s);

/// A geometric operator family on an asymptotically hyperbolic (n+1)-manifold.
/// Only the fields relevant to `family` carry meaning; see validate().
struct OperatorSpec {
    Family family = Family::ScalarLaplacian;
    int n = 1;
    int r_tensor = 0;
    int q_degree = 0;
    double c_shift = 0.0;

    static OperatorSpec scalar(int n, double c = 0.0);
    static OperatorSpec covariant(int n, int r, double c = 0.0);
    static OperatorSpec lichnerowicz(int n, double c = 0.0);
    static OperatorSpec hodge(int n, int q);
    static OperatorSpec vector(int n);

    /// Throws InvalidSpec when fields not used by the family are set.
    void validate() const;
};

/// Indicial radius, or its absence. `flag_middle_degree` marks the Hodge case
/// q = (n+1)/2: the radius is 1/2 yet the operator is not Fredholm.
struct RadiusResult {
    std::optional<double> radius;
    bool flag_middle_degree = false;

    [[nodiscard]] bool fredholm() const { return radius.has_value() && !flag_middle_degree; }
};

struct IndicialReport {
    int weight = 0;
    double radius = 0.0;
    double exponent_minus = 0.0;
    double exponent_plus = 0.0;
    double base_eigenvalue_min = 0.0;
    bool flag_middle_degree = false;
};

enum class WindowKind { Sobolev, Holder };

struct FredholmWindow {
    WindowKind kind = WindowKind::Holder;
    double p = 2.0;  // Sobolev exponent; unused for Holder
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool empty() const { return !(upper > lower); }
    [[nodiscard]] bool contains(double delta) const { return delta > lower && delta < upper; }
};

[[nodiscard]] int bundle_weight(const OperatorSpec& spec);
[[nodiscard]] RadiusResult indicial_radius(const OperatorSpec& spec);

/// Full report; nullopt when the family is not Fredholm (radius undefined).
[[nodiscard]] std::optional<IndicialReport> indicial_report(const OperatorSpec& spec);

/// Extremal characteristic exponents (n/2 - w - R, n/2 - w + R); nullopt if NotFredholm.
[[nodiscard]] std::optional<std::pair<double, double>> characteristic_exponents(
    const OperatorSpec& spec);

/// Minimal eigenvalue of I_s: mu_min - (s - n/2 + w)^2. Scalar-valued families only.
[[nodiscard]] double indicial_value(const OperatorSpec& spec, double s);

/// sqrt(c + R^2), or nullopt when c + R^2 <= 0.
[[nodiscard]] std::optional<double> shifted_radius(double R, double c);

[[nodiscard]] std::optional<FredholmWindow> fredholm_window(const OperatorSpec& spec,
                                                            WindowKind kind, double p = 2.0);

/// Riemann tensor R_{ijkl} and metric g_{ij} at one point, dim x dim.
class CurvaturePoint {
public:
    /// Validates the index symmetries (tolerance 1e-10 relative) and stores the
    /// symmetrized tensor. riemann is row-major in (i,j,k,l).
    CurvaturePoint(int dim, std::vector<double> riemann, std::vector<double> metric);

    /// R_{ijkl} = K (g_ik g_jl - g_il g_jk).
    static CurvaturePoint constant_curvature(int dim, double K, std::vector<double> metric);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] double R(int i, int j, int k, int l) const {
        return rm_[((i * dim_ + j) * dim_ + k) * dim_ + l];
    }
    [[nodiscard]] double g(int i, int j) const { return g_[i * dim_ + j]; }
    [[nodiscard]] double ginv(int i, int j) const { return gi_[i * dim_ + j]; }
    /// Ricci R_{ik} = g^{jl} R_{ijkl}.
    [[nodiscard]] double ricci(int i, int k) const { return ric_[i * dim_ + k]; }
    [[nodiscard]] const std::vector<double>& metric() const { return g_; }

private:
    int dim_;
    std::vector<double> rm_, g_, gi_, ric_;
};

/// Covariant tensor of given rank over a point of dimension dim, row-major.
struct Tensor {
    int rank = 0;
    int dim = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int rank_, int dim_);
    [[nodiscard]] std::size_t size() const { return data.size(); }
};

enum class Action { RingRc, RingRm, TildeRc, TildeRm };

[[nodiscard]] Action parse_action(const std::string& s);

/// Curvature actions of the Ricci and Riemann tensors on covariant tensors.
[[nodiscard]] Tensor curvature_action(const CurvaturePoint& pt, const Tensor& u, Action which);

[[nodiscard]] double koiso_bound(double K_max, int n);
[[nodiscard]] double curvature_threshold(int n);

}  // namespace ahelab
