#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "twophoton/field.hpp"
#include "twophoton/quadrature.hpp"

using namespace twophoton;

namespace {

double pulse_mass(const PulseShape& p) {
    const std::size_t n = 20000;
    const double lo = p.support_lo(), hi = p.support_hi(), h = (hi - lo) / n;
    const auto w = quadrature_weights(n, h);
    double s = 0.0;
    for (std::size_t k = 0; k <= n; ++k) s += w[k] * std::norm(p(lo + k * h));
    return s;
}

double mode_overlap_defect(const std::vector<PhotonProfile>& modes) {
    double d = 0.0;
    for (std::size_t a = 0; a < modes.size(); ++a)
        for (std::size_t b = 0; b < modes.size(); ++b)
            d = std::max(d, std::abs(overlap(modes[a], modes[b]) - (a == b ? 1.0 : 0.0)));
    return d;
}

}  // namespace

TEST_CASE("time grid construction and validation") {
    const TimeGrid g = TimeGrid::from_span(1.0, 3.0, 4);
    CHECK(g.tau() == 0.5);
    CHECK(g.time(2) == 2.0);
    CHECK(g.t_end() == 3.0);
    CHECK_THROWS_AS(TimeGrid::from_step(0, -1, 3), InvalidInput);
    CHECK_THROWS_AS(TimeGrid::from_step(0, 1, 0), InvalidInput);
    CHECK(channel_mode_from_string(to_string(ChannelMode::bidirectional)) == ChannelMode::bidirectional);
    CHECK_THROWS_AS(channel_mode_from_string("sideways"), InvalidInput);
}

TEST_CASE("pulse library shapes are unit normalized") {
    CHECK(pulse_mass(PulseShape("gaussian", {{"center", 2}, {"sigma", 0.4}})) == doctest::Approx(1).epsilon(1e-10));
    CHECK(pulse_mass(PulseShape("chirped_gaussian", {{"center", 0}, {"sigma", 1}, {"chirp", 0.3}})) ==
          doctest::Approx(1).epsilon(1e-10));
    CHECK(pulse_mass(PulseShape("decaying_exponential", {{"gamma", 2}, {"start", 0}})) ==
          doctest::Approx(1).epsilon(1e-8));
    CHECK(pulse_mass(PulseShape("rising_exponential", {{"gamma", 0.5}, {"peak", 3}})) ==
          doctest::Approx(1).epsilon(1e-8));
    CHECK(std::abs(PulseShape("rectangular", {{"start", 0}, {"end", 4}})(1.0) - 0.5) < 1e-15);
    CHECK_THROWS_AS(PulseShape("sawtooth", {}), InvalidInput);
    CHECK_THROWS_AS(PulseShape("gaussian", {{"center", 0}}), InvalidInput);
    CHECK_THROWS_AS(PulseShape("gaussian", {{"center", 0}, {"sigma", -1}}), InvalidInput);
    const double s = rising_truncation_start(2.0, 5.0, 1e-8);
    CHECK(std::exp(2.0 * (s - 5.0)) == doctest::Approx(1e-8).epsilon(1e-12));
}

TEST_CASE("photon profiles enforce normalization") {
    const TimeGrid g = TimeGrid::from_step(0, 0.5, 4);
    CHECK_THROWS_AS(PhotonProfile(g, {1, 1, 1, 1}), InvalidInput);
    CHECK_THROWS_AS(PhotonProfile::normalized(g, {0, 0, 0, 0}), InvalidInput);
    CHECK_THROWS_AS(PhotonProfile::normalized(g, {1, 2}), InvalidInput);
    const PhotonProfile p = PhotonProfile::normalized(g, {1, 1, 1, 1});
    CHECK(p.mass() == doctest::Approx(1).epsilon(1e-15));
    CHECK(std::abs(p[0] - std::sqrt(0.5)) < 1e-15);
}

TEST_CASE("overlaps, tail sums and the separable normalization") {
    std::mt19937_64 rng(10);
    const TimeGrid g = TimeGrid::from_step(0, 0.1, 12);
    const PhotonProfile xi = fixtures::random_profile(rng, g), phi = fixtures::random_profile(rng, g);
    const auto tails = tail_sums(xi, phi);
    CHECK(std::abs(tails[0] - overlap(xi, phi)) < 1e-14);
    CHECK(tails[12] == cplx{});
    CHECK(std::abs(tails[11] - 0.1 * std::conj(xi[11]) * phi[11]) < 1e-15);
    CHECK(normalization_factor_separable(xi, phi) == doctest::Approx(1 + std::norm(overlap(xi, phi))));

    const TwoPhotonAmplitude uni = separable_amplitude(xi, phi, ChannelMode::unidirectional);
    CHECK(two_photon_norm(uni) == doctest::Approx(normalization_factor_separable(xi, phi)).epsilon(1e-13));
    const TwoPhotonAmplitude bi = separable_amplitude(xi, phi, ChannelMode::bidirectional);
    CHECK(two_photon_norm(bi) == doctest::Approx(1).epsilon(1e-13));
    CHECK_THROWS_AS(overlap(xi, PhotonProfile::normalized(TimeGrid::from_step(0, 0.2, 12), xi.samples())),
                    InvalidInput);
}

TEST_CASE("symmetrization yields a normalized symmetric amplitude") {
    std::mt19937_64 rng(11);
    const TimeGrid g = TimeGrid::from_step(0, 0.2, 9);
    TwoPhotonAmplitude a(g, ChannelMode::unidirectional);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j) a(i, j) = fixtures::random_complex(rng);
    CHECK(antisymmetry_defect(a) > 1e-3);
    const TwoPhotonAmplitude s = symmetrize(a);
    CHECK(antisymmetry_defect(s) == 0.0);
    CHECK(two_photon_norm(s) == doctest::Approx(1).epsilon(1e-13));
    CHECK_THROWS_AS(symmetrize(TwoPhotonAmplitude(g, ChannelMode::bidirectional)), InvalidInput);
    CHECK_THROWS_AS(normalized(TwoPhotonAmplitude(g, ChannelMode::bidirectional)), InvalidInput);
}

TEST_CASE("Takagi decomposition round trip on a 64-bin grid") {
    std::mt19937_64 rng(12);
    const TimeGrid g = TimeGrid::from_step(0, 0.05, 64);
    for (int rep = 0; rep < 2; ++rep) {
        const TwoPhotonAmplitude a = fixtures::random_amplitude(rng, g, ChannelMode::unidirectional);
        const ModeDecomposition d = decompose(a, 1e-300);
        CHECK(d.kind == DecompositionKind::takagi_symmetric);
        CHECK(fixtures::max_abs_diff(reconstruct(d), a) < 1e-10);
        CHECK(std::abs(d.total_mass() - 0.5) < 1e-12);
        CHECK(mode_overlap_defect(d.first) < 1e-10);
        for (std::size_t k = 1; k < d.weights.size(); ++k) CHECK(d.weights[k - 1] >= d.weights[k]);
        CHECK(d.weights.back() >= 0);
    }
}

TEST_CASE("Schmidt decomposition round trip on a 64-bin grid") {
    std::mt19937_64 rng(13);
    const TimeGrid g = TimeGrid::from_step(0, 0.05, 64);
    for (int rep = 0; rep < 2; ++rep) {
        const TwoPhotonAmplitude a = fixtures::random_amplitude(rng, g, ChannelMode::bidirectional);
        const ModeDecomposition d = decompose(a, 1e-300);
        CHECK(d.kind == DecompositionKind::schmidt_biphoton);
        CHECK(fixtures::max_abs_diff(reconstruct(d), a) < 1e-10);
        CHECK(std::abs(d.total_mass() - 1.0) < 1e-12);
        CHECK(mode_overlap_defect(d.first) < 1e-10);
        CHECK(mode_overlap_defect(d.second) < 1e-10);
    }
}

TEST_CASE("decomposition of a separable state has a single mode") {
    const TimeGrid g = TimeGrid::from_step(0, 0.1, 40);
    const PhotonProfile xi = profile_library("gaussian", {{"center", 2}, {"sigma", 0.5}}, g);
    const PhotonProfile phi = profile_library("decaying_exponential", {{"gamma", 1}, {"start", 0.5}}, g);
    const ModeDecomposition d = decompose(separable_amplitude(xi, phi, ChannelMode::bidirectional), 1e-10);
    REQUIRE(d.weights.size() == 1);
    CHECK(d.weights[0] == doctest::Approx(1).epsilon(1e-12));
    CHECK(d.dropped_mass < 1e-18);
}

TEST_CASE("asymmetric unidirectional input is rejected or symmetrized on request") {
    std::mt19937_64 rng(14);
    const TimeGrid g = TimeGrid::from_step(0, 0.1, 6);
    TwoPhotonAmplitude a(g, ChannelMode::unidirectional);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) a(i, j) = fixtures::random_complex(rng);
    CHECK_THROWS_AS(decompose(a, 1e-12), InvalidInput);
    const ModeDecomposition d = decompose(a, 1e-300, SymmetryPolicy::symmetrize);
    CHECK(fixtures::max_abs_diff(reconstruct(d), symmetrize(a)) < 1e-12);
}

TEST_CASE("CSV round trips are bit exact") {
    std::mt19937_64 rng(15);
    const TimeGrid g = TimeGrid::from_step(0.125, 1.0 / 3.0, 5);
    const TwoPhotonAmplitude a = fixtures::random_amplitude(rng, g, ChannelMode::bidirectional);
    std::stringstream ss;
    write_amplitude_csv(ss, a);
    const TwoPhotonAmplitude b = read_amplitude_csv(ss);
    CHECK(b.grid() == a.grid());
    CHECK(b.mode() == a.mode());
    CHECK(b.samples() == a.samples());

    const PhotonProfile p = fixtures::random_profile(rng, g);
    std::stringstream sp;
    write_profile_csv(sp, p);
    const PhotonProfile q = read_profile_csv(sp);
    CHECK(q.samples() == p.samples());

    std::stringstream bad("k2,k1,re,im\n0,0,1,0\n");
    CHECK_THROWS_AS(read_amplitude_csv(bad), InvalidInput);
}
