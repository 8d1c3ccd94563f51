#include "spsim/numeric.hpp"

#include <doctest.h>

#include <cmath>

using namespace spsim;

TEST_SUITE_BEGIN("numeric");

TEST_CASE("radical inverse reproduces the textbook sequences") {
    // base 2: 1/2, 1/4, 3/4, 1/8
    CHECK(radical_inverse(2, 1) == doctest::Approx(0.5));
    CHECK(radical_inverse(2, 2) == doctest::Approx(0.25));
    CHECK(radical_inverse(2, 3) == doctest::Approx(0.75));
    CHECK(radical_inverse(2, 4) == doctest::Approx(0.125));
    // base 3: 1/3, 2/3, 1/9
    CHECK(radical_inverse(3, 1) == doctest::Approx(1.0 / 3));
    CHECK(radical_inverse(3, 2) == doctest::Approx(2.0 / 3));
    CHECK(radical_inverse(3, 3) == doctest::Approx(1.0 / 9));
}

TEST_CASE("halton draws skip the first ten points and stay inside (0,1)") {
    HaltonDraws d = halton_draws(3, 2, 50);
    CHECK(d.at(0, 0, 0) == doctest::Approx(radical_inverse(2, 11)));
    CHECK(d.at(0, 1, 0) == doctest::Approx(radical_inverse(3, 11)));
    // person 1 continues where person 0 stopped
    CHECK(d.at(1, 0, 0) == doctest::Approx(radical_inverse(2, 61)));
    for (double v : d.values) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("halton draws are deterministic per seed and shifted by it") {
    HaltonDraws a = halton_draws(2, 3, 20, 42);
    HaltonDraws b = halton_draws(2, 3, 20, 42);
    CHECK(a.values == b.values);
    HaltonDraws c = halton_draws(2, 3, 20, 43);
    CHECK(a.values != c.values);
}

TEST_CASE("halton draws reject unsupported dimension counts") {
    CHECK_THROWS_AS(halton_draws(1, 11, 10), Error);
}

TEST_CASE("normal quantile matches reference values") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.575829304).epsilon(1e-8));
    CHECK(normal_quantile(0.16) == doctest::Approx(-normal_quantile(0.84)).epsilon(1e-12));
    CHECK(normal_critical_value(0.05) == doctest::Approx(1.96).epsilon(1e-4));
    CHECK(normal_critical_value(0.01) == doctest::Approx(2.576).epsilon(1e-4));
    CHECK_THROWS_AS(normal_quantile(0.0), Error);
}

TEST_CASE("matrix inversion handles a known 2x2 and flags singularity") {
    std::vector<double> m = {4.0, 7.0, 2.0, 6.0};  // det 10
    REQUIRE(invert_matrix(m, 2));
    CHECK(m[0] == doctest::Approx(0.6));
    CHECK(m[1] == doctest::Approx(-0.7));
    CHECK(m[2] == doctest::Approx(-0.2));
    CHECK(m[3] == doctest::Approx(0.4));

    std::vector<double> singular = {1.0, 2.0, 2.0, 4.0};
    CHECK_FALSE(invert_matrix(singular, 2));
}

TEST_CASE("BFGS minimizes a shifted quadratic") {
    auto fn = [](const std::vector<double>& x, std::vector<double>& g) {
        // f = (x0-3)^2 + 2(x1+1)^2
        g = {2.0 * (x[0] - 3.0), 4.0 * (x[1] + 1.0)};
        return (x[0] - 3.0) * (x[0] - 3.0) + 2.0 * (x[1] + 1.0) * (x[1] + 1.0);
    };
    OptimResult res = minimize_bfgs(fn, {0.0, 0.0});
    CHECK(res.converged);
    CHECK(res.x[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(res.x[1] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("BFGS handles the Rosenbrock valley") {
    auto fn = [](const std::vector<double>& x, std::vector<double>& g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        g = {-2.0 * a - 400.0 * x[0] * b, 200.0 * b};
        return a * a + 100.0 * b * b;
    };
    OptimResult res = minimize_bfgs(fn, {-1.2, 1.0});
    CHECK(res.converged);
    CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("central-difference Hessian recovers a quadratic's matrix") {
    auto fn = [](const std::vector<double>& x, std::vector<double>& g) {
        // f = x0^2 + 3 x0 x1 + 5 x1^2 -> H = [[2,3],[3,10]]
        g = {2.0 * x[0] + 3.0 * x[1], 3.0 * x[0] + 10.0 * x[1]};
        return x[0] * x[0] + 3.0 * x[0] * x[1] + 5.0 * x[1] * x[1];
    };
    auto h = central_difference_hessian(fn, {0.7, -0.3});
    CHECK(h[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(h[1] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(h[2] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(h[3] == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_SUITE_END();
