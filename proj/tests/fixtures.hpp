#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "twophoton/field.hpp"
#include "twophoton/linalg.hpp"
#include "twophoton/system.hpp"

namespace fixtures {

using twophoton::COperator;
using twophoton::cplx;
using twophoton::CVector;

inline cplx random_complex(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

inline COperator random_operator(std::mt19937_64& rng, std::size_t d) {
    COperator a(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) a(i, j) = random_complex(rng);
    return a;
}

inline CVector random_state(std::mt19937_64& rng, std::size_t d) {
    CVector v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = random_complex(rng);
    v *= 1.0 / v.norm();
    return v;
}

// Random model with max |L^dag L| = gamma and max |H| = gamma.
inline twophoton::SystemModel random_model(std::mt19937_64& rng, std::size_t d, std::size_t channels,
                                           double gamma = 1.0) {
    COperator h = random_operator(rng, d);
    h = 0.5 * (h + h.adjoint());
    h *= gamma / h.max_abs();
    std::vector<COperator> ls;
    double mx = 0.0;
    for (std::size_t c = 0; c < channels; ++c) ls.push_back(random_operator(rng, d));
    for (const auto& l : ls) mx = std::max(mx, (l.adjoint() * l).max_abs());
    for (auto& l : ls) l *= std::sqrt(gamma / mx);
    return twophoton::SystemModel(h, ls);
}

inline twophoton::PhotonProfile random_profile(std::mt19937_64& rng, const twophoton::TimeGrid& g) {
    std::vector<cplx> v(g.bins());
    for (auto& x : v) x = random_complex(rng);
    return twophoton::PhotonProfile::normalized(g, v);
}

inline twophoton::TwoPhotonAmplitude random_amplitude(std::mt19937_64& rng, const twophoton::TimeGrid& g,
                                                      twophoton::ChannelMode mode) {
    twophoton::TwoPhotonAmplitude a(g, mode);
    for (std::size_t k2 = 0; k2 < g.bins(); ++k2)
        for (std::size_t k1 = 0; k1 < g.bins(); ++k1) a(k2, k1) = random_complex(rng);
    if (mode == twophoton::ChannelMode::unidirectional) a = twophoton::symmetrize(a);
    return twophoton::normalized(a);
}

inline twophoton::TwoPhotonAmplitude transpose(const twophoton::TwoPhotonAmplitude& a) {
    twophoton::TwoPhotonAmplitude t(a.grid(), a.mode());
    for (std::size_t k2 = 0; k2 < a.bins(); ++k2)
        for (std::size_t k1 = 0; k1 < a.bins(); ++k1) t(k2, k1) = a(k1, k2);
    return t;
}

inline double max_abs_diff(const twophoton::TwoPhotonAmplitude& a, const twophoton::TwoPhotonAmplitude& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.samples().size(); ++i) m = std::max(m, std::abs(a.samples()[i] - b.samples()[i]));
    return m;
}

// Sum of a few random Gaussian product terms sampled on nodes t0 + k tau, optionally mixed
// with a given amplitude; symmetrized for the unidirectional mode.
inline twophoton::TwoPhotonAmplitude random_smooth_amplitude(std::mt19937_64& rng, const twophoton::TimeGrid& g,
                                                             twophoton::ChannelMode mode,
                                                             const twophoton::TwoPhotonAmplitude* mix = nullptr,
                                                             double mix_weight = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double lo = g.t0(), span = g.tau() * static_cast<double>(g.bins() - 1);
    twophoton::TwoPhotonAmplitude a(g, mode);
    const int terms = 1 + static_cast<int>(u(rng) * 4);
    for (int n = 0; n < terms; ++n) {
        const double c1 = lo + span * u(rng), c2 = lo + span * u(rng);
        const double s1 = span * (0.05 + 0.5 * u(rng)), s2 = span * (0.05 + 0.5 * u(rng));
        const double w1 = 6 * (u(rng) - 0.5), w2 = 6 * (u(rng) - 0.5);
        const cplx c = random_complex(rng);
        for (std::size_t k2 = 0; k2 < g.bins(); ++k2)
            for (std::size_t k1 = 0; k1 < g.bins(); ++k1) {
                const double t2 = g.time(k2), t1 = g.time(k1);
                a(k2, k1) += c * std::exp(-0.5 * std::pow((t2 - c2) / s2, 2) - 0.5 * std::pow((t1 - c1) / s1, 2)) *
                             std::polar(1.0, w2 * t2 + w1 * t1);
            }
    }
    if (mode == twophoton::ChannelMode::unidirectional) a = twophoton::symmetrize(a);
    a = twophoton::normalized(a);
    if (mix) {
        std::vector<cplx> v(a.samples().size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = mix_weight * mix->samples()[i] + a.samples()[i];
        a = twophoton::TwoPhotonAmplitude(g, mode, std::move(v));
    }
    return a;
}

}  // namespace fixtures
