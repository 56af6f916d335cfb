#include <doctest.h>

#include <cmath>
#include <random>

#include "ahelab/errors.hpp"
#include "ahelab/hyperbolic.hpp"

using namespace ahelab;

namespace {

Errc code_of(const auto& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected ahelab::Error");
    return Errc::InvalidSpec;
}

Vec random_ball_point(std::mt19937_64& rng, int dim, double rmax) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Vec v(dim);
    double s = 0.0;
    for (double& x : v) s += (x = N(rng)) * x;
    const double r = rmax * std::pow(U(rng), 1.0 / dim) / std::sqrt(s);
    for (double& x : v) x *= r;
    return v;
}

}  // namespace

TEST_CASE("ball distance") {
    CHECK(hyperbolic_distance({0, 0, 0}, {0, 0, 0}) == 0.0);
    CHECK(hyperbolic_distance({0.5, 0, 0}, {0, 0, 0}) == doctest::Approx(std::acosh(5.0 / 3.0)).epsilon(1e-14));
    CHECK(code_of([] { (void)hyperbolic_distance({1.0, 0}, {0, 0}); }) == Errc::OnBoundary);
    CHECK(code_of([] { (void)hyperbolic_distance({0.1}, {0, 0}); }) == Errc::ShapeMismatch);
}

TEST_CASE("rotation invariance of the distance") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const Vec a = random_ball_point(rng, 3, 0.95), b = random_ball_point(rng, 3, 0.95);
        // rotation about a random axis via Rodrigues
        Vec k = random_ball_point(rng, 3, 1.0);
        const double kn = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        for (double& x : k) x /= kn;
        const double th = 2.0 * M_PI * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        auto rot = [&](const Vec& v) {
            const double dot = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
            const Vec cr = {k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]};
            Vec o(3);
            for (int i = 0; i < 3; ++i)
                o[i] = v[i] * std::cos(th) + cr[i] * std::sin(th) + k[i] * dot * (1 - std::cos(th));
            return o;
        };
        const double d0 = hyperbolic_distance(a, b), d1 = hyperbolic_distance(rot(a), rot(b));
        CHECK(std::abs(d0 - d1) < 1e-12 * std::max(1.0, d0));
    }
}

TEST_CASE("two-point rho") {
    CHECK(rho_two_point({0.3, 0.2}, {0.3, 0.2}) == doctest::Approx(1.0));
    const double s = std::sqrt(0.5);
    CHECK(rho_origin({s, 0.0}) == doctest::Approx(1.0 / 3.0));
    CHECK(rho_two_point({s, 0.0}, {0.0, 0.0}) == doctest::Approx(1.0 / 3.0));
    std::mt19937_64 rng(3);
    int tested = 0;
    for (int t = 0; t < 2000 && tested < 200; ++t) {
        const Vec a = random_ball_point(rng, 3, 0.999), b = random_ball_point(rng, 3, 0.999);
        CHECK(rho_two_point(a, b) == doctest::Approx(1.0 / std::cosh(hyperbolic_distance(a, b))).epsilon(1e-10));
        if (hyperbolic_distance(a, b) > 1.0) continue;
        ++tested;
        // d(a, b) <= 1 gives rho(b) <= cosh(d_a) / cosh(d_a - 1) rho(a) <= e rho(a)
        CHECK(rho_origin(b) <= std::exp(1.0) * rho_origin(a) * (1.0 + 1e-12));
    }
    CHECK(tested > 20);
}

TEST_CASE("halfspace distance matches the ball through the Cayley map") {
    // (x, y) -> ball: standard inversion formula in dimension 2.
    auto to_ball = [](double x, double y) {
        const double den = x * x + (y + 1.0) * (y + 1.0);
        return Vec{2.0 * x / den, (x * x + y * y - 1.0) / den};
    };
    const HalfSpacePoint a{{0.3}, 0.7}, b{{-1.1}, 2.5};
    CHECK(halfspace_distance(a, b) ==
          doctest::Approx(hyperbolic_distance(to_ball(0.3, 0.7), to_ball(-1.1, 2.5))).epsilon(1e-12));
}

TEST_CASE("mobius chart") {
    const MobiusChart ch{{0.2, -0.1}, 0.05};
    const Background b0 = ch.push({{0.0, 0.0}, 1.0});
    CHECK(b0.theta == Vec{0.2, -0.1});
    CHECK(b0.rho == 0.05);
    const HalfSpacePoint p{{0.4, -0.3}, 1.7};
    const HalfSpacePoint q = ch.pull(ch.push(p));
    CHECK(q.x[0] == doctest::Approx(0.4));
    CHECK(q.x[1] == doctest::Approx(-0.3));
    CHECK(q.y == doctest::Approx(1.7));
    CHECK(ch.push(p).rho == ch.center_rho * p.y);
    CHECK(code_of([&] { (void)ch.pull(Background{{0.2, -0.1}, 0.0}); }) == Errc::OutsideChart);
    CHECK(code_of([&] { (void)ch.pull_within(Background{{0.2, -0.1}, 1.0}, 1.0); }) == Errc::OutsideChart);
}

TEST_CASE("empty region gives empty cover") {
    CoverRegion reg;
    reg.rho_min = 1.0;
    reg.rho_max = 1.0;
    const auto cov = whitney_cover(reg, 0.3, 1);
    CHECK(cov.centers.empty());
}

TEST_CASE("whitney cover: coverage, packing and multiplicity") {
    CoverRegion reg;
    reg.n = 2;
    reg.rho_min = 0.1;
    reg.rho_max = 0.5;
    const double r0 = 0.3;
    const auto cov = whitney_cover(reg, r0, 5);
    REQUIRE(!cov.centers.empty());
    const auto probes = region_lattice(reg, r0 / 20.0, 0.25);
    CHECK(probes.size() > cov.centers.size());
    CHECK(cover_gap(cov, probes) < r0);
    for (std::size_t i = 0; i < cov.centers.size(); ++i)
        for (std::size_t j = i + 1; j < cov.centers.size(); j += 7)
            CHECK(halfspace_distance(cov.centers[i], cov.centers[j]) >= r0);
    for (const auto& c : cov.centers) CHECK(reg.contains(c));
    CHECK(cov.measured_multiplicity >= 1);
    CHECK(cov.measured_multiplicity <= cov.multiplicity_bound);
    CHECK(cover_multiplicity(cov, probes, cov.outer_radius) <= cov.multiplicity_bound);
}

TEST_CASE("cover determinism and errors") {
    CoverRegion reg;
    reg.rho_min = 0.2;
    const auto a = whitney_cover(reg, 0.4, 9), b = whitney_cover(reg, 0.4, 9);
    REQUIRE(a.centers.size() == b.centers.size());
    for (std::size_t i = 0; i < a.centers.size(); ++i) CHECK(a.centers[i].y == b.centers[i].y);
    CHECK(code_of([&] { (void)whitney_cover(reg, 0.0, 1); }) == Errc::ParameterViolation);
    CoverOptions coarse;
    coarse.spacing_factor = 0.5;
    CHECK(code_of([&] { (void)whitney_cover(reg, 0.4, 1, coarse); }) == Errc::GridTooCoarse);
}

TEST_CASE("lp membership examples") {
    CHECK(lp_membership(2, 0, 2, 0, 2).analytic == Membership::Converges);
    CHECK(lp_membership(2, 0, 2, 0, 2).numeric == Membership::Converges);
    const auto border = lp_membership(1.0, 0, 2, 0, 2);
    CHECK(border.analytic == Membership::Diverges);
    CHECK(border.borderline);
    const auto r2 = lp_membership(1, 0, 2, 2, 2);
    CHECK(r2.analytic == Membership::Converges);
    CHECK(r2.numeric == Membership::Converges);
    // direct quadrature oracle at eps = 1e-6 is close to the large-eps limit
    const double a = membership_integral(1, 0, 2, 2, 2, 1e-6), b = membership_integral(1, 0, 2, 2, 2, 1e-9);
    CHECK(std::abs(a - b) < 1e-6 * b);
    CHECK(lp_membership(0.5, 0, 2, 0, 2).numeric == Membership::Diverges);
    CHECK(code_of([] { (void)lp_membership(1, 0, 1.0, 0, 2); }) == Errc::ParameterViolation);
}

TEST_CASE("membership agreement on a grid") {
    int checked = 0;
    for (double s = -1.0; s <= 3.0; s += 0.25)
        for (double d = -1.0; d <= 1.0; d += 0.5)
            for (double p : {1.5, 2.0, 4.0}) {
                const auto m = lp_membership(s, d, p, 1, 3);
                if (std::abs(m.gap) < 1e-3) continue;
                ++checked;
                CHECK(m.analytic == m.numeric);
            }
    CHECK(checked > 200);
}

namespace {

WhitneyCover collar_cover(double rho_max, double r0) {
    CoverRegion reg;
    reg.n = 1;
    reg.rho_min = rho_max / 8.0;
    reg.rho_max = rho_max;
    reg.c = 0.1;
    return whitney_cover(reg, r0, 2);
}

}  // namespace

TEST_CASE("weighted norm of rho^delta") {
    const double delta = 0.7;
    const BackgroundField f = [delta](const Vec&, double rho) { return std::pow(rho, delta); };
    const double coarse = weighted_norm_sup(f, delta, collar_cover(0.4, 0.8), 0, 0.0);
    const double fine = weighted_norm_sup(f, delta, collar_cover(0.4, 0.4), 0, 0.0);
    // chart values are y^delta on B_1, so the sup is exp(delta) up to lattice error
    CHECK(coarse == doctest::Approx(std::exp(delta)).epsilon(0.05));
    CHECK(fine == doctest::Approx(coarse).epsilon(1e-6));
    const double c1 = weighted_norm_sup(f, delta, collar_cover(0.4, 0.6), 1, 0.5);
    CHECK(std::isfinite(c1));
    CHECK(c1 > coarse);
}

TEST_CASE("weighted norm: zero field and shrinking collars") {
    const BackgroundField zero = [](const Vec&, double) { return 0.0; };
    CHECK(weighted_norm_sup(zero, 1.0, collar_cover(0.4, 0.6), 2, 0.5) == 0.0);
    const double delta = 0.5;
    const BackgroundField f = [delta](const Vec&, double rho) { return std::pow(rho, delta + 1.0); };
    const double big = weighted_norm_sup(f, delta, collar_cover(0.4, 0.6), 0, 0.0);
    const double small = weighted_norm_sup(f, delta, collar_cover(0.04, 0.6), 0, 0.0);
    CHECK(small < 0.15 * big);
    CHECK(code_of([&] { (void)weighted_norm_sup(f, delta, collar_cover(0.4, 0.6), 3, 0.5); }) ==
          Errc::ParameterViolation);
}

TEST_CASE("boundary chart deviation") {
    const auto h = hyperbolic_test_metric(2);
    CHECK(boundary_chart_deviation(h, BoundaryChart::at(h, {0.1, 0.2}, 0.5), 6) < 1e-14);

    const auto g = perturbed_test_metric(2, 0.1);
    const Vec p0 = {0.3, -0.2};
    const double d1 = boundary_chart_deviation(g, BoundaryChart::at(g, p0, 0.2), 8);
    const double d2 = boundary_chart_deviation(g, BoundaryChart::at(g, p0, 0.1), 8);
    const double ratio = d2 / d1;
    CHECK(ratio >= 0.3);
    CHECK(ratio <= 0.7);

    const auto g2 = perturbed_test_metric(2, 0.2);
    const double e1 = boundary_chart_deviation(g, BoundaryChart::at(g, p0, 0.2), 8);
    const double e2 = boundary_chart_deviation(g2, BoundaryChart::at(g2, p0, 0.2), 8);
    CHECK(e2 <= 2.0 * e1 * 1.1);
    CHECK(code_of([&] { (void)boundary_chart_deviation(g, BoundaryChart::at(g, p0, 3.0), 8); }) ==
          Errc::ChartEscapesDomain);
}
