#include <doctest.h>

#include <cmath>

#include "ahelab/errors.hpp"
#include "ahelab/green.hpp"
#include "ahelab/spectral.hpp"

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

}  // namespace

TEST_CASE("radial grid volumes") {
    const auto g = RadialGrid::make(2, 5.0, 200);
    // int_0^5 sinh^2 = (sinh 10 - 10)/4
    CHECK(g.volume() == doctest::Approx((std::sinh(10.0) - 10.0) / 4.0).epsilon(1e-12));
    CHECK(g.h() == doctest::Approx(0.025));
    CHECK(code_of([] { (void)RadialGrid::make(0, 5.0, 10); }) == Errc::ParameterViolation);
}

TEST_CASE("discrete operator structure") {
    const auto op = discretize_radial(OperatorSpec::scalar(3, 0.0), 20.0, 256);
    CHECK(op.symmetry_defect() < 1e-10);
    const auto hodge = discretize_radial(OperatorSpec::hodge(3, 1), 20.0, 256);
    CHECK(hodge.symmetry_defect() < 1e-10);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(op.size());
    const Eigen::VectorXd img = op.apply(one);
    for (Eigen::Index i = 1; i + 1 < op.size(); ++i) CHECK(std::abs(img(i)) < 1e-9 * op.diag(i));
    CHECK((op.dense() * one - img).cwiseAbs().maxCoeff() < 1e-12 * op.diag.cwiseAbs().maxCoeff());
    CHECK(code_of([] { (void)discretize_radial(OperatorSpec::scalar(3), 5.0, 256); }) == Errc::ResolutionTooLow);
    CHECK(code_of([] { (void)discretize_radial(OperatorSpec::lichnerowicz(3, 6), 20.0, 256); }) ==
          Errc::UnsupportedFamily);
}

TEST_CASE("frobenius mode is an approximate null vector") {
    // plus-branch solution of (Delta + c) u = 0, sampled on interior nodes
    const RadialOperator rop{3, 1.0};
    const auto fs = frobenius_series(rop, Branch::Plus, 60);
    auto residual = [&](int N) {
        const auto op = discretize_radial(OperatorSpec::scalar(3, 1.0), 20.0, N);
        Eigen::VectorXd u(op.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = fs.at_distance(op.nodes[i]).first;
        const Eigen::VectorXd r = op.apply(u);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < u.size(); ++i)
            if (op.nodes[i] > 3.0 && op.nodes[i] < 17.0) worst = std::max(worst, std::abs(r(i) / u(i)));
        return worst;
    };
    const double r1 = residual(512), r2 = residual(1024);
    CHECK(r2 < r1);
    CHECK(r2 < 1e-3);
}

TEST_CASE("spectrum bottom") {
    const auto op = discretize_radial(OperatorSpec::scalar(3, 0.0), 40.0, 2048);
    const double b0 = spectrum_bottom(op);
    CHECK(std::abs(b0 - 2.25) / 2.25 < 0.01);
    CHECK(b0 > 2.25);
    for (double c : {0.5, 3.0, -1.0}) {
        const double bc = spectrum_bottom(discretize_radial(OperatorSpec::scalar(3, c), 40.0, 2048));
        CHECK(std::abs(bc - b0 - c) < 1e-10);
    }
    const double d20 = spectrum_bottom(discretize_radial(OperatorSpec::scalar(2, 0.0), 20.0, 1024));
    const double d40 = spectrum_bottom(discretize_radial(OperatorSpec::scalar(2, 0.0), 40.0, 2048));
    CHECK(d20 > d40);
    CHECK(d40 > 1.0);
    CHECK(d40 < 1.02);
}

TEST_CASE("radial hodge one-forms share the scalar bottom") {
    // radial 1-forms are exact, and d intertwines the two Laplacians
    const double b = spectrum_bottom(discretize_radial(OperatorSpec::hodge(3, 1), 40.0, 2048));
    const double s = spectrum_bottom(discretize_radial(OperatorSpec::scalar(3, 0.0), 40.0, 2048));
    CHECK(b == doctest::Approx(s).epsilon(0.005));
    CHECK(b > 2.25);
}

TEST_CASE("cheng-yau collar estimate") {
    const auto grid = RadialGrid::make(3, 40.0, 2048);
    const auto rep = cheng_yau_check(1.5, grid, CollarOptions{0.1, 100, 4});
    CHECK(rep.lambda_observed >= 2.25 - 0.05);
    CHECK(rep.holds == 100);
    CHECK(rep.total == 100);
    CHECK(rep.epsilon == doctest::Approx(0.01 * (2.25 + 1.5)));
    const std::vector<Bump> outside{{0.5, 3.0, 0.0}};
    CHECK(code_of([&] { (void)cheng_yau_check(1.5, grid, outside, 0.1); }) == Errc::SupportEscapesCollar);
}

TEST_CASE("cheng-yau with the weight itself") {
    // u ~ phi on a long support: the Rayleigh quotient approaches Delta phi / phi = s(n - s)
    const auto grid = RadialGrid::make(3, 60.0, 1024);
    const std::vector<Bump> tests{{4.0, 58.0, 1.5}};
    const auto rep = cheng_yau_check(1.5, grid, tests, 0.1);
    CHECK(rep.lambda_observed == doctest::Approx(2.25).epsilon(0.02));
}

TEST_CASE("weighted estimate") {
    const auto spec = OperatorSpec::scalar(3, 0.0);
    const auto w0 = weighted_estimate_check(0.0, 2.25, spec, 50, 2);
    CHECK(w0.lambda_claimed == 2.25);
    CHECK(std::isfinite(w0.constant_C));
    const auto a = weighted_estimate_check(1.0, 2.25, spec, 100, 2);
    const auto b = weighted_estimate_check(1.0, 2.25, spec, 200, 2);
    CHECK(std::isfinite(a.constant_C));
    CHECK(a.holds == a.total);
    CHECK(std::abs(b.constant_C - a.constant_C) / a.constant_C < 0.1);
    CHECK(code_of([&] { (void)weighted_estimate_check(1.6, 2.25, spec, 10, 1); }) == Errc::WeightTooLarge);
}

TEST_CASE("bochner identity") {
    const auto grid = RadialGrid::make(3, 40.0, 256);
    const auto flat = bochner_identity_check(0, 0.0, grid, 20, 1);
    CHECK(flat.epsilon < 1e-8);
    const auto q0 = bochner_identity_check(0, 1.5, grid, 50, 5);
    CHECK(q0.epsilon < 1e-6);
    CHECK(q0.holds == 50);
    const auto q1 = bochner_identity_check(1, 1.5, grid, 50, 6);
    CHECK(q1.epsilon < 1e-5);
    CHECK(code_of([&] { (void)bochner_identity_check(2, 1.5, grid, 5, 1); }) == Errc::UnsupportedDegree);
}

TEST_CASE("asymptotic form estimates") {
    const auto g3 = RadialGrid::make(3, 40.0, 2048);
    CHECK(asymptotic_form_estimate(0, 3, g3, 0.05).lambda_observed >= 2.20);
    CHECK(asymptotic_form_estimate(1, 3, g3, 0.05).lambda_observed >= 0.20);
    const auto g2 = RadialGrid::make(2, 40.0, 2048);
    CHECK(code_of([&] { (void)asymptotic_form_estimate(1, 2, g2, 0.05); }) == Errc::UnsupportedDegree);
}

TEST_CASE("weitzenbock radial identity converges at second order") {
    const auto a = weitzenbock_radial_check(3, RadialGrid::make(3, 20.0, 256));
    const auto b = weitzenbock_radial_check(3, RadialGrid::make(3, 20.0, 512));
    CHECK(a.lambda_claimed == -3.0);
    CHECK(b.epsilon < a.epsilon);
    const double ratio = a.epsilon / b.epsilon;
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("bumps") {
    const Bump bp{1.0, 3.0, 0.0};
    double u, du, d2u;
    bp.eval(2.0, u, du, d2u);
    CHECK(u == doctest::Approx(std::exp(-1.0)));
    CHECK(du == doctest::Approx(0.0));
    bp.eval(3.5, u, du, d2u);
    CHECK(u == 0.0);
    // derivative check by central differences with the weight profile on
    const Bump kb{1.0, 4.0, 2.0};
    const double h = 1e-5, x = 2.2;
    double up, dup, d2up, um, dum, d2um;
    kb.eval(x + h, up, dup, d2up);
    kb.eval(x - h, um, dum, d2um);
    kb.eval(x, u, du, d2u);
    CHECK(du == doctest::Approx((up - um) / (2 * h)).epsilon(1e-7));
    CHECK(d2u == doctest::Approx((dup - dum) / (2 * h)).epsilon(1e-7));
    const auto bs = random_bumps(10, 2.0, 9.0, 0.5, 3.0, 7);
    for (const auto& b : bs) {
        CHECK(b.a >= 2.0);
        CHECK(b.b <= 9.0);
        CHECK(b.b - b.a >= 0.5);
    }
}
