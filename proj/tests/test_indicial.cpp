#include <doctest.h>

#include <cmath>
#include <random>

#include "ahelab/errors.hpp"
#include "ahelab/indicial.hpp"

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

std::vector<double> metric_identity(int d) {
    std::vector<double> g(d * d, 0.0);
    for (int i = 0; i < d; ++i) g[i * d + i] = 1.0;
    return g;
}

}  // namespace

TEST_CASE("bundle weights") {
    CHECK(bundle_weight(OperatorSpec::lichnerowicz(4, 0)) == 2);
    CHECK(bundle_weight(OperatorSpec::scalar(3)) == 0);
    CHECK(bundle_weight(OperatorSpec::vector(3)) == -1);
    CHECK(bundle_weight(OperatorSpec::covariant(3, 3)) == 3);
    CHECK(bundle_weight(OperatorSpec::hodge(5, 2)) == 2);
}

TEST_CASE("family names round trip") {
    for (Family f : {Family::ScalarLaplacian, Family::CovariantLaplacianTraceFree, Family::Lichnerowicz,
                     Family::HodgeLaplacian, Family::VectorLaplacian})
        CHECK(parse_family(family_name(f)) == f);
    CHECK(code_of([] { (void)parse_family("biharmonic"); }) == Errc::InvalidSpec);
}

TEST_CASE("indicial radius examples") {
    CHECK(*indicial_radius(OperatorSpec::lichnerowicz(4, 8)).radius == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_FALSE(indicial_radius(OperatorSpec::lichnerowicz(4, 0)).radius);
    CHECK(*indicial_radius(OperatorSpec::covariant(4, 2, 0)).radius == doctest::Approx(std::sqrt(6.0)));
    const auto mid = indicial_radius(OperatorSpec::hodge(3, 2));
    REQUIRE(mid.radius);
    CHECK(*mid.radius == 0.5);
    CHECK(mid.flag_middle_degree);
    CHECK_FALSE(mid.fredholm());
    CHECK(*indicial_radius(OperatorSpec::vector(2)).radius == 2.0);
}

TEST_CASE("hodge table n=3") {
    const double want[] = {1.5, 0.5, 0.5, 0.5, 1.5};
    for (int q = 0; q <= 4; ++q) {
        const auto r = indicial_radius(OperatorSpec::hodge(3, q));
        REQUIRE(r.radius);
        CHECK(*r.radius == want[q]);
        CHECK(r.flag_middle_degree == (q == 2));
    }
}

TEST_CASE("hodge even n: R = 0 at q = n/2 and its dual") {
    CHECK_FALSE(indicial_radius(OperatorSpec::hodge(4, 2)).radius);
    CHECK_FALSE(indicial_radius(OperatorSpec::hodge(4, 3)).radius);
    CHECK_FALSE(indicial_radius(OperatorSpec::hodge(4, 3)).flag_middle_degree);
    REQUIRE(indicial_radius(OperatorSpec::hodge(4, 4)).radius);
    CHECK(*indicial_radius(OperatorSpec::hodge(4, 4)).radius == 1.0);
}

TEST_CASE("hodge duality q <-> n+1-q") {
    for (int n = 2; n <= 8; ++n)
        for (int q = 0; 2 * q < n; ++q) {
            const auto a = indicial_radius(OperatorSpec::hodge(n, q));
            const auto b = indicial_radius(OperatorSpec::hodge(n, n + 1 - q));
            REQUIRE(a.radius);
            REQUIRE(b.radius);
            CHECK(*a.radius == *b.radius);
        }
}

TEST_CASE("characteristic exponents") {
    auto e = characteristic_exponents(OperatorSpec::lichnerowicz(5, 10));
    REQUIRE(e);
    CHECK(e->first == doctest::Approx(-2.0));
    CHECK(e->second == doctest::Approx(3.0));
    e = characteristic_exponents(OperatorSpec::scalar(2, 0));
    CHECK(e->first == 0.0);
    CHECK(e->second == 2.0);
    // Oracle: roots of s(4-s) - 3 = 0.
    e = characteristic_exponents(OperatorSpec::covariant(4, 0, -3));
    const double disc = std::sqrt(16.0 - 12.0);
    CHECK(e->first == doctest::Approx((4.0 - disc) / 2.0));
    CHECK(e->second == doctest::Approx((4.0 + disc) / 2.0));
}

TEST_CASE("indicial value") {
    CHECK(indicial_value(OperatorSpec::lichnerowicz(4, 8), -2.0) == doctest::Approx(0.0));
    CHECK(indicial_value(OperatorSpec::scalar(3), 1.5) == 2.25);
    CHECK(indicial_value(OperatorSpec::scalar(3), 0.0) == 0.0);
    CHECK(code_of([] { (void)indicial_value(OperatorSpec::hodge(3, 1), 0.0); }) == Errc::UnsupportedFamily);
}

TEST_CASE("shifted radius") {
    CHECK(*shifted_radius(2.0, 0.0) == 2.0);
    CHECK_FALSE(shifted_radius(2.0, -4.0));
    CHECK(*shifted_radius(std::sqrt(6.0), 3.0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(code_of([] { (void)shifted_radius(-1.0, 0.0); }) == Errc::ParameterViolation);
}

TEST_CASE("fredholm windows") {
    auto w = fredholm_window(OperatorSpec::lichnerowicz(4, 8), WindowKind::Holder);
    REQUIRE(w);
    CHECK(w->lower == 0.0);
    CHECK(w->upper == 4.0);
    CHECK(w->contains(2.0));
    CHECK_FALSE(w->contains(4.0));
    w = fredholm_window(OperatorSpec::lichnerowicz(4, 8), WindowKind::Sobolev, 2.0);
    CHECK(w->lower == -2.0);
    CHECK(w->upper == 2.0);
    w = fredholm_window(OperatorSpec::vector(2), WindowKind::Sobolev, 2.0);
    CHECK(w->lower == -2.0);
    CHECK(w->upper == 2.0);
    CHECK_FALSE(fredholm_window(OperatorSpec::lichnerowicz(4, 0), WindowKind::Holder));
    CHECK(code_of([] { (void)fredholm_window(OperatorSpec::scalar(3), WindowKind::Sobolev, 1.0); }) ==
          Errc::ParameterViolation);
}

TEST_CASE("spec validation") {
    OperatorSpec s = OperatorSpec::scalar(3);
    s.q_degree = 1;
    CHECK(code_of([&] { s.validate(); }) == Errc::InvalidSpec);
    CHECK(code_of([] { (void)indicial_radius(OperatorSpec::hodge(3, 5)); }) == Errc::InvalidSpec);
    CHECK(code_of([] { (void)indicial_radius(OperatorSpec::scalar(0)); }) == Errc::InvalidSpec);
}

TEST_CASE("exponent symmetry and shift law over the grid") {
    for (int n = 2; n <= 8; ++n)
        for (int r = 0; r <= 3; ++r)
            for (int c = -5; c <= 10; ++c) {
                const auto spec = OperatorSpec::covariant(n, r, c);
                const auto e = characteristic_exponents(spec);
                const double rad0 = *indicial_radius(OperatorSpec::covariant(n, r, 0)).radius;
                const auto shifted = shifted_radius(rad0, c);
                // existence follows the exact radicand; rad0^2 may carry roundoff at radicand 0
                const double exact = n * n / 4.0 + r + c;
                REQUIRE(bool(e) == (exact > 0.0));
                if (!e) {
                    if (shifted) CHECK(*shifted < 1e-7);
                    continue;
                }
                REQUIRE(shifted);
                CHECK(e->first + e->second == doctest::Approx(n - 2.0 * r).epsilon(1e-14));
                CHECK(std::abs(*indicial_radius(spec).radius - *shifted) < 1e-12);
            }
}

TEST_CASE("lichnerowicz plus 2n window is (0, n)") {
    for (int n = 3; n <= 8; ++n) {
        const auto spec = OperatorSpec::lichnerowicz(n, 2.0 * n);
        const auto w = fredholm_window(spec, WindowKind::Holder);
        CHECK(w->lower == 0.0);
        CHECK(w->upper == n);
        const auto e = characteristic_exponents(spec);
        CHECK(e->first == -2.0);
        CHECK(e->second == n - 2.0);
    }
}

TEST_CASE("curvature actions at constant curvature -1") {
    const int d = 4, n = d - 1;
    const auto pt = CurvaturePoint::constant_curvature(d, -1.0, metric_identity(d));
    std::mt19937_64 rng(7);
    std::normal_distribution<double> N(0.0, 1.0);
    Tensor u(2, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) u.data[i * d + j] = u.data[j * d + i] = N(rng);
    double tr = 0.0;
    for (int i = 0; i < d; ++i) tr += u.data[i * d + i];
    for (int i = 0; i < d; ++i) u.data[i * d + i] -= tr / d;

    const Tensor rm = curvature_action(pt, u, Action::RingRm);
    const Tensor rc = curvature_action(pt, u, Action::RingRc);
    const Tensor trm = curvature_action(pt, u, Action::TildeRm);
    for (std::size_t k = 0; k < u.size(); ++k) {
        CHECK(rm.data[k] == doctest::Approx(u.data[k]).epsilon(1e-12));
        CHECK(rc.data[k] == doctest::Approx(-n * u.data[k]).epsilon(1e-12));
        CHECK(trm.data[k] == doctest::Approx(rm.data[k]).epsilon(1e-12));
    }

    Tensor g(2, d);
    g.data = metric_identity(d);
    const Tensor rmg = curvature_action(pt, g, Action::RingRm);
    const Tensor rcg = curvature_action(pt, g, Action::RingRc);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(rmg.data[k] == doctest::Approx(rcg.data[k]));
}

TEST_CASE("curvature action on a non-flat metric") {
    const int d = 3;
    std::vector<double> g = {2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.2};
    const auto pt = CurvaturePoint::constant_curvature(d, -1.0, g);
    Tensor gt(2, d);
    gt.data = g;
    const Tensor rmg = curvature_action(pt, gt, Action::RingRm);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(rmg.data[k] == doctest::Approx(-(d - 1) * g[k]));
    Tensor bad(3, d);
    CHECK(code_of([&] { (void)curvature_action(pt, bad, Action::RingRm); }) == Errc::ShapeMismatch);
}

TEST_CASE("symmetry violation is rejected") {
    std::vector<double> rm(16, 0.0);
    rm[0 * 8 + 1 * 4 + 0 * 2 + 1] = 1.0;  // R_0101 without its partners
    CHECK(code_of([&] { CurvaturePoint(2, rm, metric_identity(2)); }) == Errc::SymmetryViolation);
}

TEST_CASE("koiso bound and threshold") {
    for (int n = 3; n <= 9; ++n) CHECK(koiso_bound(-1.0, n) == doctest::Approx(1.0));
    CHECK(curvature_threshold(8) == 0.0);
    for (int n = 3; n <= 9; ++n) {
        const double K = curvature_threshold(n);
        CHECK(2.0 * koiso_bound(K, n) == doctest::Approx(n * n / 4.0));
    }
    CHECK(code_of([] { (void)curvature_threshold(2); }) == Errc::ParameterViolation);
}
