#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "twophoton/field.hpp"
#include "twophoton/system.hpp"

namespace twophoton::oracle {

inline constexpr std::size_t DEFAULT_STATE_CAP = std::size_t{1} << 20;

// Vector on site_0 (x) ... (x) site_{M-1} (x) system; each site is the bin Fock space of all
// channels, local index n1 * (n_max + 1) + n2 for two channels.
struct CompositeState {
    CVector amplitudes;
    std::size_t sites = 0, channels = 1, n_max = 2, system_dim = 1;
    std::size_t local_dim() const { return channels == 1 ? n_max + 1 : (n_max + 1) * (n_max + 1); }
};

std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t factor, std::size_t cap);

// Two-photon field sum tau Phi_{k2,k1} b^dag_{k2} b^dag_{k1}|vac> (channel 2 then 1 when
// bidirectional) on bins first_bin..M-1, no system factor and no normalization.
CVector two_photon_field(const TwoPhotonAmplitude& phi, std::size_t first_bin, std::size_t n_max,
                         std::size_t cap = DEFAULT_STATE_CAP);
// sum_{k >= first_bin} sqrt(tau) xi_k b^dag_{channel,k}|vac>
CVector single_photon_field(const PhotonProfile& xi, std::size_t first_bin, std::size_t n_max, std::size_t channels,
                            std::size_t channel, std::size_t cap = DEFAULT_STATE_CAP);
CVector vacuum_field(std::size_t sites, std::size_t n_max, std::size_t channels);

CompositeState build_initial_state(const TwoPhotonAmplitude& phi, const CVector& psi0, std::size_t n_max = 2,
                                   std::size_t cap = DEFAULT_STATE_CAP);
// B^dag[phi] B^dag[xi]|vac> / norm, or |1_xi>_1 |1_phi>_2 for the bidirectional mode.
CompositeState build_initial_state(const PhotonProfile& xi, const PhotonProfile& phi, ChannelMode mode,
                                   const CVector& psi0, std::size_t n_max = 2, std::size_t cap = DEFAULT_STATE_CAP);
CompositeState build_vacuum_state(std::size_t sites, std::size_t channels, const CVector& psi0, std::size_t n_max = 2);

struct OutcomeEntry {
    double probability;
    CVector system_vector;  // unnormalized, squared norm = probability
};

struct OutcomeTable {
    std::size_t channels = 1, n_max = 2;
    // Key: per-bin combined outcome index (channel counts n1 * (n_max+1) + n2 when bidirectional).
    std::map<std::vector<std::size_t>, OutcomeEntry> entries;
    double pruned_mass = 0.0;
    double total_probability() const;
};

OutcomeTable enumerate_outcomes(const SystemModel& model, const CompositeState& state, double tau,
                                double prune_eps = 1e-14);

// State of the unmeasured bins and system after the given outcome prefix (unnormalized).
CompositeState evolve_prefix(const SystemModel& model, const CompositeState& state, double tau,
                             const std::vector<std::size_t>& prefix);

// <field| (x) 1 applied to a composite vector whose leading factor matches `field`.
CVector project_field(const CompositeState& state, const CVector& field);

std::string sequence_key(const std::vector<std::size_t>& seq, std::size_t channels, std::size_t levels);

struct ComparisonReport {
    double max_abs_deviation = 0.0;
    double excluded_mass = 0.0;      // oracle probability on sequences the engine does not produce
    double engine_only_mass = 0.0;   // engine probability on sequences missing from the oracle
    std::size_t compared = 0;
};
ComparisonReport compare_with_engine(const OutcomeTable& table, const std::map<std::string, double>& engine);

// Least-squares slope of log2(error) against log2(tau).
double fit_log2_slope(const std::vector<double>& taus, const std::vector<double>& errors);

void write_outcome_csv(std::ostream& os, const OutcomeTable& table);

}  // namespace twophoton::oracle
