#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "twophoton/engine.hpp"
#include "twophoton/oracle.hpp"

using namespace twophoton;
namespace orc = twophoton::oracle;

namespace {

struct Case {
    SystemModel model;
    TimeGrid grid;
    PhotonProfile xi, phi;
    CVector psi0;
};

Case make_case(std::uint64_t seed, ChannelMode mode, std::size_t bins, double tau) {
    std::mt19937_64 rng(seed);
    const bool uni = mode == ChannelMode::unidirectional;
    Case c{fixtures::random_model(rng, 3, uni ? 1 : 2), TimeGrid::from_step(0, tau, bins), {}, {}, {}};
    c.xi = fixtures::random_profile(rng, c.grid);
    c.phi = fixtures::random_profile(rng, c.grid);
    c.psi0 = fixtures::random_state(rng, 3);
    return c;
}

FieldScenarios separable(const Case& c, ChannelMode mode) {
    return mode == ChannelMode::unidirectional ? FieldScenarios::separable_uni(c.xi, c.phi)
                                               : FieldScenarios::separable_bi(c.xi, c.phi);
}

std::map<std::string, double> engine_table(const FieldScenarios& fs, const InteractionBlocks& b, const CVector& psi0,
                                           EngineMode mode) {
    std::map<std::string, double> out;
    for (const auto& [seq, p] : enumerate_sequences(fs, b, psi0, mode))
        out[orc::sequence_key(seq, b.channels(), b.levels())] += p;
    return out;
}

int total_count(const InteractionBlocks& b, const OutcomeSequence& seq) {
    int n = 0;
    for (auto e : seq) n += outcome_count(b, e);
    return n;
}

}  // namespace

TEST_CASE("exact-mode engine reproduces the oracle for separable fields") {
    for (ChannelMode mode : {ChannelMode::unidirectional, ChannelMode::bidirectional}) {
        const bool uni = mode == ChannelMode::unidirectional;
        const Case c = make_case(40, mode, uni ? 4 : 3, 0.07);
        const auto tab = orc::enumerate_outcomes(c.model, orc::build_initial_state(c.xi, c.phi, mode, c.psi0),
                                                 c.grid.tau(), 0.0);
        const auto blocks = exact_blocks(c.model, c.grid.tau(), 2);
        const auto rep = orc::compare_with_engine(tab, engine_table(separable(c, mode), blocks, c.psi0, EngineMode::exact));
        CHECK(rep.max_abs_deviation < 1e-12);
        CHECK(rep.excluded_mass < 1e-14);
        CHECK(rep.engine_only_mass < 1e-14);
    }
}

TEST_CASE("exact-mode engine reproduces the oracle for decomposed general fields") {
    for (ChannelMode mode : {ChannelMode::unidirectional, ChannelMode::bidirectional}) {
        std::mt19937_64 rng(41);
        const bool uni = mode == ChannelMode::unidirectional;
        const SystemModel model = fixtures::random_model(rng, 2, uni ? 1 : 2);
        const TimeGrid g = TimeGrid::from_step(0, 0.1, 3);
        const TwoPhotonAmplitude phi = fixtures::random_amplitude(rng, g, mode);
        const CVector psi0 = fixtures::random_state(rng, 2);
        const auto fs = FieldScenarios::general(decompose(phi, 1e-14));
        const auto tab = orc::enumerate_outcomes(model, orc::build_initial_state(phi, psi0), g.tau(), 0.0);
        const auto rep =
            orc::compare_with_engine(tab, engine_table(fs, exact_blocks(model, g.tau(), 2), psi0, EngineMode::exact));
        CHECK(rep.max_abs_deviation < 1e-12);
        CHECK(rep.excluded_mass < 1e-14);
    }
}

TEST_CASE("specialized recurrences agree with the generic transition step") {
    for (ChannelMode mode : {ChannelMode::unidirectional, ChannelMode::bidirectional}) {
        const bool uni = mode == ChannelMode::unidirectional;
        const Case c = make_case(42, mode, 5, 0.05);
        const auto fs = separable(c, mode);
        const auto blocks = uni ? truncated_blocks_uni(c.model, 0.05) : truncated_blocks_bi(c.model, 0.05);
        ConditionalVectors cv = initial_vectors(fs, c.psi0);
        for (std::size_t j = 0; j < 5; ++j) {
            for (auto eta : allowed_outcomes(blocks, EngineMode::reduced)) {
                const auto generic = step_general(fs, j, blocks, cv, eta);
                const auto special = uni ? step_uni(cv, blocks, c.xi[j], c.phi[j], fs.normalization(), int(eta))
                                         : step_bi(cv, blocks, c.xi[j], c.phi[j], int(eta / 2), int(eta % 2));
                for (std::size_t a = 0; a < generic.v.size(); ++a)
                    CHECK(max_abs_diff(generic.v[a], special.v[a]) < 1e-14);
            }
            cv = step_general(fs, j, blocks, cv, 0);
        }
    }
}

TEST_CASE("exhaustive statistics agree with sequence enumeration") {
    for (EngineMode em : {EngineMode::reduced, EngineMode::exact})
        for (ChannelMode mode : {ChannelMode::unidirectional, ChannelMode::bidirectional}) {
            const bool uni = mode == ChannelMode::unidirectional;
            const Case c = make_case(43, mode, 4, 0.08);
            const auto fs = separable(c, mode);
            const auto blocks = em == EngineMode::exact
                                    ? exact_blocks(c.model, 0.08, 2)
                                    : (uni ? truncated_blocks_uni(c.model, 0.08) : truncated_blocks_bi(c.model, 0.08));
            const std::size_t smax = 3;
            std::vector<double> by_count(smax + 1, 0.0);
            for (const auto& [seq, p] : enumerate_sequences(fs, blocks, c.psi0, em))
                by_count[std::min<std::size_t>(total_count(blocks, seq), smax)] += p;
            const auto st = exhaustive_statistics(fs, blocks, c.psi0, smax, {2, 4}, em);
            REQUIRE(st.size() == 2);
            CHECK(st[1].bin == 4);
            for (std::size_t s = 0; s <= smax; ++s) {
                CHECK(std::abs(st[1].probability_by_count[s] - by_count[s]) < 1e-13);
                CHECK(std::abs(st[1].rho_by_count[s].trace() - by_count[s]) < 1e-13);
            }
            double total = 0.0;
            for (double p : st[0].probability_by_count) total += p;
            if (em == EngineMode::exact) CHECK(std::abs(total - 1.0) < 1e-12);
        }
}

TEST_CASE("one-step jump distribution") {
    const Case c = make_case(44, ChannelMode::unidirectional, 3, 0.1);
    const auto fs = separable(c, ChannelMode::unidirectional);
    const auto cv = initial_vectors(fs, c.psi0);
    const auto ex = jump_probability(fs, 0, exact_blocks(c.model, 0.1, 2), cv, EngineMode::exact);
    CHECK(std::abs(ex.deficit) < 1e-13);
    const auto rd = jump_probability(fs, 0, truncated_blocks_uni(c.model, 0.1), cv);
    double s = 0.0;
    for (double p : rd.probabilities) s += p;
    CHECK(std::abs(s + rd.deficit - 1.0) < 1e-15);
    CHECK_THROWS_AS(jump_probability(fs, 3, truncated_blocks_uni(c.model, 0.1), cv), InvalidInput);
    CHECK_THROWS_AS(jump_probability(fs, 0, truncated_blocks_uni(c.model, 0.1), cv, EngineMode::exact), InvalidInput);

    ConditionalVectors dead = cv;
    for (auto& v : dead.v) v *= 0.0;
    CHECK_THROWS_AS(jump_probability(fs, 0, truncated_blocks_uni(c.model, 0.1), dead), NumericError);
}

TEST_CASE("a posteriori density is consistent with the scenario trace") {
    const Case c = make_case(45, ChannelMode::bidirectional, 4, 0.1);
    const auto fs = separable(c, ChannelMode::bidirectional);
    const auto blocks = truncated_blocks_bi(c.model, 0.1);
    ConditionalVectors cv = initial_vectors(fs, c.psi0);
    for (std::size_t j = 0; j < 4; ++j) {
        const auto st = aposteriori_density(fs, j, cv);
        CHECK(std::abs(st.rho.trace() - st.trace) < 1e-14);
        CHECK(std::abs(st.trace - scenario_trace(fs, j, cv)) < 1e-14);
        const auto rep = hermitian_part_checks(st.rho);
        CHECK(rep.hermiticity_defect < 1e-14);
        CHECK(rep.min_eigenvalue > -1e-14);
        cv = step_general(fs, j, blocks, cv, 0);
    }
}

TEST_CASE("trajectory sampling is seeded and thread independent") {
    const Case c = make_case(46, ChannelMode::unidirectional, 30, 0.05);
    const auto fs = separable(c, ChannelMode::unidirectional);
    const auto blocks = truncated_blocks_uni(c.model, 0.05);
    CHECK(trajectory_seed(7, 1) != trajectory_seed(7, 2));
    CHECK(trajectory_seed(7, 1) == trajectory_seed(7, 1));
    const auto a = sample_trajectory(fs, blocks, c.psi0, 99, {10, 30});
    const auto b = sample_trajectory(fs, blocks, c.psi0, 99, {10, 30});
    CHECK(a.record.events.size() == b.record.events.size());
    CHECK(a.record.weight == b.record.weight);
    REQUIRE(a.checkpoints.size() == 2);
    CHECK(std::abs(a.checkpoints[1].trace() - 1.0) < 1e-12);

    MonteCarloOptions opt;
    opt.n_traj = 300;
    opt.seed = 5;
    opt.checkpoint_bins = {15, 30};
    std::vector<std::size_t> order;
    opt.on_record = [&](std::size_t i, const TrajectoryRecord&) { order.push_back(i); };
    const auto one = apriori_monte_carlo(fs, blocks, c.psi0, opt);
    opt.threads = 3;
    opt.on_record = nullptr;
    const auto three = apriori_monte_carlo(fs, blocks, c.psi0, opt);
    REQUIRE(order.size() == 300);
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == i);
    for (std::size_t k = 0; k < 2; ++k) CHECK(max_abs_diff(one.sigma[k], three.sigma[k]) == 0.0);
    CHECK(one.count_histogram == three.count_histogram);
}

TEST_CASE("Monte Carlo a priori state agrees with exhaustive statistics") {
    for (ChannelMode mode : {ChannelMode::unidirectional, ChannelMode::bidirectional}) {
        const Case c = make_case(47, mode, 25, 0.05);
        const auto fs = separable(c, mode);
        const auto blocks = exact_blocks(c.model, 0.05, 2);
        const auto st = exhaustive_statistics(fs, blocks, c.psi0, 3, {25}, EngineMode::exact);
        COperator sigma(3);
        for (const auto& r : st[0].rho_by_count) sigma += r;
        CHECK(std::abs(sigma.trace() - 1.0) < 1e-12);
        MonteCarloOptions opt;
        opt.n_traj = 4000;
        opt.seed = 11;
        opt.mode = EngineMode::exact;
        const auto mc = apriori_monte_carlo(fs, blocks, c.psi0, opt);
        CHECK(mc.n_dead == 0);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t k = 0; k < 3; ++k) {
                const cplx d = mc.sigma[0](r, k) - sigma(r, k);
                const cplx se = mc.std_error[0](r, k);
                INFO(r << k);
                CHECK(std::abs(d.real()) <= 5 * se.real() + 1e-12);
                CHECK(std::abs(d.imag()) <= 5 * se.imag() + 1e-12);
            }
    }
}

TEST_CASE("detector names") {
    CHECK(detector_name(Detector::single) == "D");
    CHECK(detector_name(Detector::right) == "R");
    CHECK(detector_name(Detector::left) == "L");
}
