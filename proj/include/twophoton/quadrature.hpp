#pragma once

#include <cstddef>
#include <vector>

#include "twophoton/linalg.hpp"

namespace twophoton {

enum class QuadratureRule { trapezoid, simpson };

// Weights for integrating samples at nodes 0..n with spacing h. Simpson for even n;
// odd n closes with a 3/8 panel triple; n = 1 falls back to the trapezoid.
inline std::vector<double> quadrature_weights(std::size_t n, double h, QuadratureRule rule = QuadratureRule::simpson) {
    std::vector<double> w(n + 1, 0.0);
    if (n == 0) return w;
    if (rule == QuadratureRule::trapezoid || n == 1) {
        for (std::size_t k = 0; k < n; ++k) {
            w[k] += h / 2;
            w[k + 1] += h / 2;
        }
        return w;
    }
    const std::size_t even = (n % 2 == 0) ? n : n - 3;
    for (std::size_t k = 0; k + 2 <= even; k += 2) {
        w[k] += h / 3;
        w[k + 1] += 4 * h / 3;
        w[k + 2] += h / 3;
    }
    if (even != n) {
        w[even] += 3 * h / 8;
        w[even + 1] += 9 * h / 8;
        w[even + 2] += 9 * h / 8;
        w[even + 3] += 3 * h / 8;
    }
    return w;
}

template <class Value>
Value weighted_sum(const std::vector<double>& w, const std::vector<Value>& f) {
    Value acc = f.front();
    acc *= 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        Value term = f[k];
        term *= w[k];
        acc += term;
    }
    return acc;
}

// Propagators T_h, T_{2h}, T_{-h} of a linear semigroup, for either scalars or operators.
template <class Op>
struct StepPropagators {
    Op th, t2h, tmh;
    double h;
};

// C_k = T_{kh} c0 + int_0^{kh} T_{kh - s} f(s) ds on nodes k = 0..n. Simpson chaining on even
// nodes, one-interval quadratic rule on odd nodes.
template <class Op, class Value>
std::vector<Value> propagated_integral(const StepPropagators<Op>& p, const Value& c0, const std::vector<Value>& f,
                                       QuadratureRule rule = QuadratureRule::simpson) {
    const std::size_t n = f.size() - 1;
    const double h = p.h;
    std::vector<Value> out(n + 1, c0);
    if (rule == QuadratureRule::trapezoid || n == 1) {
        for (std::size_t k = 0; k < n; ++k) out[k + 1] = p.th * out[k] + (h / 2) * (p.th * f[k] + f[k + 1]);
        return out;
    }
    for (std::size_t k = 0; k + 2 <= n; k += 2)
        out[k + 2] = p.t2h * out[k] + (h / 3) * (p.t2h * f[k] + 4.0 * (p.th * f[k + 1]) + f[k + 2]);
    for (std::size_t k = 1; k <= n; k += 2) {
        if (k + 1 <= n) {
            out[k] = p.th * out[k - 1] + (h / 12) * (5.0 * (p.th * f[k - 1]) + 8.0 * f[k] - p.tmh * f[k + 1]);
        } else {
            out[k] = p.th * out[k - 1] + (h / 12) * (8.0 * (p.th * f[k - 1]) + 5.0 * f[k] - p.t2h * f[k - 2]);
        }
    }
    return out;
}

}  // namespace twophoton
