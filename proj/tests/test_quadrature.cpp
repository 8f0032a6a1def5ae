#include <cmath>

#include "doctest.h"
#include "twophoton/quadrature.hpp"

using namespace twophoton;

namespace {

double integrate(std::size_t n, double a, double b, double (*f)(double), QuadratureRule rule) {
    const double h = (b - a) / static_cast<double>(n);
    const auto w = quadrature_weights(n, h, rule);
    double s = 0.0;
    for (std::size_t k = 0; k <= n; ++k) s += w[k] * f(a + static_cast<double>(k) * h);
    return s;
}

double cubic(double x) { return 2 * x * x * x - x * x + 3 * x - 1; }
double linear(double x) { return 3 * x - 1; }

}  // namespace

TEST_CASE("weights integrate cubics exactly for even and odd panel counts") {
    const double exact = 0.5 * 16 - 8.0 / 3 + 6 - 2;  // int_0^2
    for (std::size_t n : {2u, 3u, 4u, 5u, 7u, 10u, 11u})
        CHECK(integrate(n, 0, 2, cubic, QuadratureRule::simpson) == doctest::Approx(exact).epsilon(1e-14));
    CHECK(integrate(1, 0, 2, linear, QuadratureRule::simpson) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(integrate(7, 0, 2, linear, QuadratureRule::trapezoid) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(quadrature_weights(0, 0.1).size() == 1);
}

TEST_CASE("cumulative propagated integral matches the closed form") {
    // C(t) = int_0^t exp(-g (t - s)) cos(s) ds
    const double g = 0.8;
    auto exact = [g](double t) { return (g * std::cos(t) + std::sin(t) - g * std::exp(-g * t)) / (1 + g * g); };
    double prev = 0.0;
    for (std::size_t n : {20u, 40u, 80u}) {
        const double h = 4.0 / static_cast<double>(n);
        std::vector<double> f(n + 1);
        for (std::size_t k = 0; k <= n; ++k) f[k] = std::cos(static_cast<double>(k) * h);
        const StepPropagators<double> p{std::exp(-g * h), std::exp(-2 * g * h), std::exp(g * h), h};
        const auto c = propagated_integral(p, 0.0, f);
        double err = 0.0;
        for (std::size_t k = 0; k <= n; ++k) err = std::max(err, std::abs(c[k] - exact(static_cast<double>(k) * h)));
        if (prev > 0) CHECK(prev / err > 7.0);  // at least third order at every node
        prev = err;
        CHECK(err < 2e-4 * std::pow(20.0 / static_cast<double>(n), 3));
    }
}

TEST_CASE("propagated integral carries the initial value and handles odd node counts") {
    const double g = 0.5, h = 0.01;
    std::vector<double> f(6, 0.0);
    const StepPropagators<double> p{std::exp(-g * h), std::exp(-2 * g * h), std::exp(g * h), h};
    const auto c = propagated_integral(p, 2.0, f);
    for (std::size_t k = 0; k < f.size(); ++k) CHECK(c[k] == doctest::Approx(2.0 * std::exp(-g * h * k)).epsilon(1e-14));
}
