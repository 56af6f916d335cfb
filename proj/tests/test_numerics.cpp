#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "ahelab/errors.hpp"
#include "ahelab/numerics.hpp"

using namespace ahelab;

TEST_CASE("gauss-legendre exactness") {
    const auto q = gauss_legendre(10, 0.0, 2.0);
    CHECK(q.size() == 10);
    // degree 19 is integrated exactly
    CHECK(q.integrate([](double x) { return std::pow(x, 19); }) == doctest::Approx(std::pow(2.0, 20) / 20));
    CHECK(q.integrate([](double) { return 1.0; }) == doctest::Approx(2.0));
    const auto c = composite_gauss({0.0, 0.5, 1.0, 3.0}, 8);
    CHECK(c.size() == 24);
    CHECK(c.integrate([](double x) { return std::exp(x); }) == doctest::Approx(std::exp(3.0) - 1.0));
}

TEST_CASE("graded breaks") {
    const auto b = graded_breaks(0.0, 1.0, 0.0, 0.5, 1e-3);
    CHECK(b.front() == 0.0);
    CHECK(b.back() == 1.0);
    CHECK(b[1] < 1e-3);
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] > b[i - 1]);
    const auto mid = graded_breaks(0.0, 1.0, 0.4, 0.5, 1e-2);
    bool has_focus = false;
    for (double x : mid) has_focus = has_focus || x == 0.4;
    CHECK(has_focus);
}

TEST_CASE("slope, extrapolation and log sinh") {
    CHECK(lsq_slope({0, 1, 2, 3}, {1, 3, 5, 7}) == doctest::Approx(2.0));
    CHECK(neville({1, 2, 3}, {1, 4, 9}, 0.0) == doctest::Approx(0.0));
    CHECK(log_sinh(1.0) == doctest::Approx(std::log(std::sinh(1.0))));
    CHECK(log_sinh(800.0) == doctest::Approx(800.0 - std::log(2.0)));
}

TEST_CASE("fmt17 round trips") {
    for (double v : {0.1, 1.0 / 3.0, 2.25, -1e-300, 6.02214076e23}) CHECK(std::strtod(fmt17(v).c_str(), nullptr) == v);
    CHECK(fmt17(3.0) == "3");
}

TEST_CASE("parallel_for covers every index and forwards exceptions") {
    std::atomic<long> sum{0};
    parallel_for(1000, [&](std::size_t i) { sum += static_cast<long>(i); });
    CHECK(sum == 999 * 1000 / 2);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                        if (i == 7) throw std::runtime_error("x");
                    }),
                    std::runtime_error);
    CHECK(thread_cap() >= 1);
}

TEST_CASE("error codes") {
    CHECK(errc_name(Errc::GaugeObstruction) == "GaugeObstruction");
    CHECK(errc_is_numeric(Errc::NoConvergence));
    CHECK_FALSE(errc_is_numeric(Errc::InvalidSpec));
    const Error e(Errc::WeightTooLarge, "delta");
    CHECK(e.code() == Errc::WeightTooLarge);
    CHECK(std::string(e.what()) == "WeightTooLarge: delta");
}
