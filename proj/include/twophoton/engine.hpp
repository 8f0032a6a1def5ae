#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "twophoton/field.hpp"
#include "twophoton/system.hpp"

namespace twophoton {

// Future-field scenario bookkeeping. Each label a names a field vector e_a on bins >= j;
// the composite state is sum_a w_a e_a (x) psi_a. Splitting off bin j gives
// e_a = sum coeff |in>_j (x) e_to, which drives the recurrences.
struct Transition {
    std::uint32_t from, to;
    std::uint8_t in1, in2;  // photons of the input bin consumed (channel 1, channel 2)
    cplx coeff;
};

struct GramEntry {
    std::uint32_t a, b;  // value = <e_a|e_b> on bins >= j, a <= b
    cplx value;
};

enum class FieldKind { separable_uni, separable_bi, takagi, schmidt };

class FieldScenarios {
public:
    // Unidirectional B^dag[phi] B^dag[xi]|vac>/sqrt(N) with the discrete N.
    static FieldScenarios separable_uni(const PhotonProfile& xi, const PhotonProfile& phi);
    // Bidirectional |1_xi>|1_phi>: xi travels in channel 1, phi in channel 2.
    static FieldScenarios separable_bi(const PhotonProfile& xi, const PhotonProfile& phi);
    // General states from a mode decomposition; kept weights are renormalized.
    static FieldScenarios general(const ModeDecomposition& dec);

    FieldKind kind() const { return kind_; }
    ChannelMode mode() const;
    const TimeGrid& grid() const { return grid_; }
    std::size_t bins() const { return grid_.bins(); }
    std::size_t labels() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<std::uint32_t>& initial_labels() const { return initial_; }
    // Photons remaining in the future field for each label.
    const std::vector<int>& photons() const { return photons_; }
    double normalization() const { return n_factor_; }
    double dropped_mass() const { return dropped_; }

    std::vector<Transition> transitions(std::size_t j) const;
    std::vector<GramEntry> gram(std::size_t j) const;

private:
    FieldKind kind_ = FieldKind::separable_uni;
    TimeGrid grid_;
    std::vector<double> weights_;
    std::vector<std::uint32_t> initial_;
    std::vector<int> photons_;
    std::vector<PhotonProfile> a_, b_;  // modes (separable: a_ = {xi}, b_ = {phi})
    double n_factor_ = 1.0;
    double dropped_ = 0.0;
    // overlaps[n][m][j] = sum_{k>=j} tau conj(a_n) a_m, and likewise for b_.
    std::vector<std::vector<std::vector<cplx>>> saa_, sbb_;
    std::vector<cplx> sab_;
};

std::vector<Transition> uni_transitions(cplx xi_j, cplx phi_j, double n_factor, double tau);
std::vector<Transition> bi_transitions(cplx xi_j, cplx phi_j, double tau);

struct ConditionalVectors {
    std::vector<CVector> v;  // indexed by scenario label
};

enum class EngineMode { reduced, exact };

ConditionalVectors initial_vectors(const FieldScenarios& fs, const CVector& psi0);

// Outcome indices use InteractionBlocks' combined count index.
std::vector<std::size_t> allowed_outcomes(const InteractionBlocks& blocks, EngineMode mode);
int outcome_count(const InteractionBlocks& blocks, std::size_t eta);

ConditionalVectors apply_step(const std::vector<Transition>& trans, const InteractionBlocks& blocks,
                              const ConditionalVectors& cv, std::size_t eta, EngineMode mode);

// Unidirectional reduced recurrences; eta in {0, 1}.
ConditionalVectors step_uni(const ConditionalVectors& cv, const InteractionBlocks& blocks, cplx xi_j, cplx phi_j,
                            double n_factor, int eta);
// Bidirectional reduced recurrences; eta in {(0,0), (1,0), (0,1)}.
ConditionalVectors step_bi(const ConditionalVectors& cv, const InteractionBlocks& blocks, cplx xi_j, cplx phi_j,
                           int eta1, int eta2);
// One step for any field kind at bin j.
ConditionalVectors step_general(const FieldScenarios& fs, std::size_t j, const InteractionBlocks& blocks,
                                const ConditionalVectors& cv, std::size_t eta, EngineMode mode = EngineMode::reduced);

struct AposterioriState {
    COperator rho;
    double trace;
};

double scenario_trace(const FieldScenarios& fs, std::size_t j, const ConditionalVectors& cv);
AposterioriState aposteriori_density(const FieldScenarios& fs, std::size_t j, const ConditionalVectors& cv);

struct JumpDistribution {
    std::vector<std::size_t> outcomes;
    std::vector<double> probabilities;
    std::vector<ConditionalVectors> next;
    double deficit;
};
// Throws NumericError("dead trajectory") for zero current norm.
JumpDistribution jump_probability(const FieldScenarios& fs, std::size_t j, const InteractionBlocks& blocks,
                                  const ConditionalVectors& cv, EngineMode mode = EngineMode::reduced);

enum class Detector { single, right, left };
std::string detector_name(Detector d);

struct DetectionEvent {
    std::size_t bin;
    Detector detector;
    int count;  // photons registered in this bin (1 except in exact mode)
};

struct TrajectoryRecord {
    TimeGrid grid;
    std::vector<DetectionEvent> events;
    double weight = 1.0;  // product of chosen one-step probabilities
    bool dead = false;
};

struct TrajectoryResult {
    TrajectoryRecord record;
    ConditionalVectors final_vectors;  // normalized to unit scenario trace
    // Normalized a posteriori states at the requested checkpoint bins.
    std::vector<COperator> checkpoints;
};

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index);

TrajectoryResult sample_trajectory(const FieldScenarios& fs, const InteractionBlocks& blocks, const CVector& psi0,
                                   std::uint64_t seed, const std::vector<std::size_t>& checkpoint_bins = {},
                                   EngineMode mode = EngineMode::reduced);

struct MonteCarloEstimate {
    std::vector<COperator> sigma;     // per checkpoint
    std::vector<COperator> std_error; // per checkpoint: real part holds SE of Re, imag part SE of Im
    std::vector<std::size_t> count_histogram;
    std::size_t n_traj = 0, n_dead = 0;
    double dead_weight = 0.0;
};

struct MonteCarloOptions {
    std::size_t n_traj = 1000;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    EngineMode mode = EngineMode::reduced;
    std::vector<std::size_t> checkpoint_bins;  // default: final bin only
    // Optional sink for every record, called in trajectory order.
    std::function<void(std::size_t, const TrajectoryRecord&)> on_record;
};

MonteCarloEstimate apriori_monte_carlo(const FieldScenarios& fs, const InteractionBlocks& blocks, const CVector& psi0,
                                       const MonteCarloOptions& opt);

// Exhaustive sum over all outcome sequences, carried out on scenario pair densities
// R_ab = sum_paths |psi_a><psi_b| so the cost is linear in M. Entry s collects records
// with exactly s registered photons; the last entry collects s >= s_max.
struct CountResolvedState {
    std::size_t bin;
    std::vector<COperator> rho_by_count;
    std::vector<double> probability_by_count;
};
std::vector<CountResolvedState> exhaustive_statistics(const FieldScenarios& fs, const InteractionBlocks& blocks,
                                                      const CVector& psi0, std::size_t s_max,
                                                      const std::vector<std::size_t>& checkpoint_bins,
                                                      EngineMode mode = EngineMode::reduced);

// Probability of every allowed outcome sequence over all bins (small M only).
using OutcomeSequence = std::vector<std::size_t>;
std::vector<std::pair<OutcomeSequence, double>> enumerate_sequences(const FieldScenarios& fs,
                                                                    const InteractionBlocks& blocks,
                                                                    const CVector& psi0, EngineMode mode);

}  // namespace twophoton
