#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "twophoton/engine.hpp"
#include "twophoton/field.hpp"
#include "twophoton/system.hpp"
#include "twophoton/tpa.hpp"

namespace twophoton::cli {

// Message carries "file:line:column: key: reason".
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelSpec {
    std::string kind = "ladder";  // ladder | custom
    ChannelMode mode = ChannelMode::unidirectional;
    LadderAtom atom;
    COperator hamiltonian;
    std::vector<COperator> couplings;
    CVector initial_state;  // empty: lowest basis state

    std::size_t dim() const { return kind == "ladder" ? 3 : hamiltonian.dim(); }
    SystemModel build() const;
    CVector psi0() const;
};

struct FieldSpec {
    double t0 = 0.0;
    PulseShape xi{"gaussian", {{"center", 5.0}, {"sigma", 0.5}}};
    PulseShape phi{"gaussian", {{"center", 5.5}, {"sigma", 0.6}}};
    std::string amplitude_file;  // general two-photon input, resolved against the config directory
};

struct GridSpec {
    double t = 10.0;       // end of the evaluation window
    double tau = 0.01;     // engine bin width
    std::size_t panels = 0;  // quadrature panels, 0 for the default
};

struct SimulateSpec {
    std::size_t n_traj = 1000;
    EngineMode engine = EngineMode::reduced;
    std::vector<double> checkpoints;  // empty: grid.t
    bool write_trajectories = true;
};

struct AnalyzeSpec {
    std::vector<double> times;  // empty: `points` equally spaced times in (t0, t]
    std::size_t points = 20;
    std::size_t s_max = 4;
    double engine_tau = 0.0;
    bool multi_count = true;
};

struct OracleSpec {
    std::size_t bins = 4;
    std::size_t n_max = 2;
    double prune = 0.0;
    std::vector<double> slope_taus{0.04, 0.02, 0.01};
};

struct TpaSpec {
    std::vector<double> ratios{0.25, 1.0, 4.0};
    double gamma_f = 1.0;
    double omega_eg = 10.0;
    std::optional<double> omega_fe;  // default: omega_eg (unidirectional), omega_eg + 3 (bidirectional)
    double window_eps = 1e-8;
    std::size_t time_points = 201;
    std::size_t frequency_points = 641;
    std::size_t panels = 200;  // samples of the exported optimal amplitude
    std::optional<double> t0, t;  // optimal-state window, default field.t0 and grid.t

    double figure_omega_fe(ChannelMode mode) const {
        return omega_fe ? *omega_fe : (mode == ChannelMode::unidirectional ? omega_eg : omega_eg + 3.0);
    }
};

struct ExperimentConfig {
    std::string source;
    ModelSpec model;
    FieldSpec field;
    GridSpec grid;
    SimulateSpec simulate;
    AnalyzeSpec analyze;
    OracleSpec oracle;
    TpaSpec tpa;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::optional<double> tolerance;
    std::string output;

    // Effective configuration; excludes the output location so that runs into different
    // directories share one hash.
    nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& name, const std::string& base_dir = ".");

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace twophoton::cli
