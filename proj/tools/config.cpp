#include "config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace twophoton::cli {

namespace {

class Reader {
public:
    explicit Reader(std::string name) : name_(std::move(name)) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& key, const std::string& why) const {
        std::ostringstream os;
        os << name_;
        if (n.IsDefined()) os << ':' << n.Mark().line + 1 << ':' << n.Mark().column + 1;
        os << ": " << key << ": " << why;
        throw ConfigError(os.str());
    }

    void expect_map(const YAML::Node& n, const std::string& key, std::initializer_list<const char*> allowed) const {
        if (!n.IsMap()) fail(n, key, "expected a mapping");
        const std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& kv : n) {
            const auto k = kv.first.as<std::string>();
            if (!ok.count(k)) fail(kv.first, key.empty() ? k : key + "." + k, "unknown key");
        }
    }

    double number(const YAML::Node& n, const std::string& key) const {
        if (!n.IsScalar()) fail(n, key, "expected a number");
        try {
            const double v = n.as<double>();
            if (!std::isfinite(v)) fail(n, key, "expected a finite number");
            return v;
        } catch (const YAML::Exception&) {
            fail(n, key, "expected a number, got '" + n.Scalar() + "'");
        }
    }

    double positive(const YAML::Node& n, const std::string& key) const {
        const double v = number(n, key);
        if (!(v > 0)) fail(n, key, "must be positive");
        return v;
    }

    std::size_t count(const YAML::Node& n, const std::string& key, std::size_t min = 0) const {
        const double v = number(n, key);
        if (v < static_cast<double>(min) || v != std::floor(v) || v > 1e15)
            fail(n, key, "expected an integer >= " + std::to_string(min));
        return static_cast<std::size_t>(v);
    }

    std::uint64_t u64(const YAML::Node& n, const std::string& key) const {
        if (!n.IsScalar()) fail(n, key, "expected an unsigned integer");
        try {
            return n.as<std::uint64_t>();
        } catch (const YAML::Exception&) {
            fail(n, key, "expected an unsigned integer, got '" + n.Scalar() + "'");
        }
    }

    bool boolean(const YAML::Node& n, const std::string& key) const {
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, key, "expected true or false");
        }
    }

    std::string text(const YAML::Node& n, const std::string& key) const {
        if (!n.IsScalar()) fail(n, key, "expected a string");
        return n.Scalar();
    }

    cplx complex(const YAML::Node& n, const std::string& key) const {
        if (n.IsSequence()) {
            if (n.size() != 2) fail(n, key, "complex entries are a number or [re, im]");
            return {number(n[0], key), number(n[1], key)};
        }
        return number(n, key);
    }

    std::vector<double> numbers(const YAML::Node& n, const std::string& key) const {
        if (!n.IsSequence()) fail(n, key, "expected a list of numbers");
        std::vector<double> v;
        for (std::size_t i = 0; i < n.size(); ++i) v.push_back(number(n[i], key + "[" + std::to_string(i) + "]"));
        return v;
    }

    COperator matrix(const YAML::Node& n, const std::string& key) const {
        if (!n.IsSequence() || n.size() == 0) fail(n, key, "expected a square matrix given as a list of rows");
        const std::size_t d = n.size();
        COperator m(d);
        for (std::size_t r = 0; r < d; ++r) {
            const std::string rk = key + "[" + std::to_string(r) + "]";
            if (!n[r].IsSequence() || n[r].size() != d) fail(n[r], rk, "row must have " + std::to_string(d) + " entries");
            for (std::size_t c = 0; c < d; ++c) m(r, c) = complex(n[r][c], rk + "[" + std::to_string(c) + "]");
        }
        return m;
    }

    ChannelMode mode(const YAML::Node& n, const std::string& key) const {
        try {
            return channel_mode_from_string(text(n, key));
        } catch (const InvalidInput&) {
            fail(n, key, "expected unidirectional or bidirectional");
        }
    }

    PulseShape pulse(const YAML::Node& n, const std::string& key) const {
        if (!n.IsMap()) fail(n, key, "expected a mapping with 'shape' and its parameters");
        if (!n["shape"]) fail(n, key, "missing 'shape'");
        const std::string shape = text(n["shape"], key + ".shape");
        ShapeParams params;
        for (const auto& kv : n) {
            const auto k = kv.first.as<std::string>();
            if (k != "shape") params[k] = number(kv.second, key + "." + k);
        }
        try {
            return PulseShape(shape, params);
        } catch (const InvalidInput& e) {
            fail(n, key, e.what());
        }
    }

private:
    std::string name_;
};

void read_model(const Reader& rd, const YAML::Node& n, ModelSpec& m) {
    rd.expect_map(n, "model", {"kind", "mode", "ladder", "hamiltonian", "couplings", "initial_state"});
    if (n["kind"]) {
        m.kind = rd.text(n["kind"], "model.kind");
        if (m.kind != "ladder" && m.kind != "custom") rd.fail(n["kind"], "model.kind", "expected ladder or custom");
    }
    if (m.kind == "ladder") {
        if (n["hamiltonian"] || n["couplings"])
            rd.fail(n, "model", "hamiltonian and couplings belong to kind: custom");
        if (n["mode"]) m.mode = rd.mode(n["mode"], "model.mode");
        if (const auto l = n["ladder"]) {
            rd.expect_map(l, "model.ladder", {"omega_eg", "omega_fe", "gamma_e", "gamma_f"});
            if (l["omega_eg"]) m.atom.omega_eg = rd.number(l["omega_eg"], "model.ladder.omega_eg");
            if (l["omega_fe"]) m.atom.omega_fe = rd.number(l["omega_fe"], "model.ladder.omega_fe");
            if (l["gamma_e"]) m.atom.gamma_e = rd.positive(l["gamma_e"], "model.ladder.gamma_e");
            if (l["gamma_f"]) m.atom.gamma_f = rd.positive(l["gamma_f"], "model.ladder.gamma_f");
        }
    } else {
        if (n["ladder"]) rd.fail(n["ladder"], "model.ladder", "only valid for kind: ladder");
        if (!n["hamiltonian"]) rd.fail(n, "model.hamiltonian", "required for kind: custom");
        if (!n["couplings"]) rd.fail(n, "model.couplings", "required for kind: custom");
        m.hamiltonian = rd.matrix(n["hamiltonian"], "model.hamiltonian");
        const auto c = n["couplings"];
        if (!c.IsSequence() || c.size() < 1 || c.size() > 2) rd.fail(c, "model.couplings", "expected one or two matrices");
        m.couplings.clear();
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string key = "model.couplings[" + std::to_string(i) + "]";
            m.couplings.push_back(rd.matrix(c[i], key));
            if (m.couplings.back().dim() != m.hamiltonian.dim())
                rd.fail(c[i], key, "dimension differs from the hamiltonian");
        }
        const ChannelMode implied = c.size() == 1 ? ChannelMode::unidirectional : ChannelMode::bidirectional;
        if (n["mode"] && rd.mode(n["mode"], "model.mode") != implied)
            rd.fail(n["mode"], "model.mode", "does not match the number of couplings");
        m.mode = implied;
        try {
            m.build();
        } catch (const InvalidInput& e) {
            rd.fail(n["hamiltonian"], "model.hamiltonian", e.what());
        }
    }
    if (const auto s = n["initial_state"]) {
        if (!s.IsSequence()) rd.fail(s, "model.initial_state", "expected a list of amplitudes");
        std::vector<cplx> v;
        for (std::size_t i = 0; i < s.size(); ++i)
            v.push_back(rd.complex(s[i], "model.initial_state[" + std::to_string(i) + "]"));
        m.initial_state = CVector(v);
        if (m.initial_state.dim() != m.dim())
            rd.fail(s, "model.initial_state", "expected " + std::to_string(m.dim()) + " entries");
        if (std::abs(m.initial_state.norm() - 1.0) > 1e-10) rd.fail(s, "model.initial_state", "must be normalized");
    }
}

}  // namespace

SystemModel ModelSpec::build() const {
    if (kind == "ladder") return ladder_model(atom, mode);
    return SystemModel(hamiltonian, couplings);
}

CVector ModelSpec::psi0() const { return initial_state.dim() ? initial_state : CVector::basis(dim(), 0); }

ExperimentConfig parse_config(const std::string& text, const std::string& name, const std::string& base_dir) {
    const Reader rd(name);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(name + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": " + e.msg);
    }
    ExperimentConfig c;
    c.source = name;
    if (root.IsNull()) return c;
    rd.expect_map(root, "", {"model", "field", "grid", "simulate", "analyze", "oracle", "tpa", "seed", "threads",
                             "tolerance", "output"});
    if (root["model"]) read_model(rd, root["model"], c.model);

    if (const auto f = root["field"]) {
        rd.expect_map(f, "field", {"t0", "xi", "phi", "amplitude_file"});
        if (f["t0"]) c.field.t0 = rd.number(f["t0"], "field.t0");
        if (f["xi"]) c.field.xi = rd.pulse(f["xi"], "field.xi");
        if (f["phi"]) c.field.phi = rd.pulse(f["phi"], "field.phi");
        if (f["amplitude_file"]) {
            const std::filesystem::path p = rd.text(f["amplitude_file"], "field.amplitude_file");
            c.field.amplitude_file = (p.is_absolute() ? p : std::filesystem::path(base_dir) / p).string();
            if (!std::filesystem::exists(c.field.amplitude_file))
                rd.fail(f["amplitude_file"], "field.amplitude_file", "file not found");
        }
    }
    if (const auto g = root["grid"]) {
        rd.expect_map(g, "grid", {"t", "tau", "panels"});
        if (g["t"]) c.grid.t = rd.number(g["t"], "grid.t");
        if (g["tau"]) c.grid.tau = rd.positive(g["tau"], "grid.tau");
        if (g["panels"]) c.grid.panels = rd.count(g["panels"], "grid.panels");
        if (!(c.grid.t > c.field.t0)) rd.fail(g["t"] ? g["t"] : g, "grid.t", "must exceed field.t0");
    }
    if (const auto s = root["simulate"]) {
        rd.expect_map(s, "simulate", {"n_traj", "engine", "checkpoints", "write_trajectories"});
        if (s["n_traj"]) c.simulate.n_traj = rd.count(s["n_traj"], "simulate.n_traj", 1);
        if (s["engine"]) {
            const auto e = rd.text(s["engine"], "simulate.engine");
            if (e == "reduced") c.simulate.engine = EngineMode::reduced;
            else if (e == "exact") c.simulate.engine = EngineMode::exact;
            else rd.fail(s["engine"], "simulate.engine", "expected reduced or exact");
        }
        if (s["checkpoints"]) {
            c.simulate.checkpoints = rd.numbers(s["checkpoints"], "simulate.checkpoints");
            for (double t : c.simulate.checkpoints)
                if (!(t > c.field.t0)) rd.fail(s["checkpoints"], "simulate.checkpoints", "times must exceed field.t0");
        }
        if (s["write_trajectories"])
            c.simulate.write_trajectories = rd.boolean(s["write_trajectories"], "simulate.write_trajectories");
    }
    if (const auto a = root["analyze"]) {
        rd.expect_map(a, "analyze", {"times", "points", "s_max", "engine_tau", "multi_count"});
        if (a["times"]) {
            c.analyze.times = rd.numbers(a["times"], "analyze.times");
            for (double t : c.analyze.times)
                if (t < c.field.t0) rd.fail(a["times"], "analyze.times", "times must not precede field.t0");
        }
        if (a["points"]) c.analyze.points = rd.count(a["points"], "analyze.points", 1);
        if (a["s_max"]) c.analyze.s_max = rd.count(a["s_max"], "analyze.s_max", 2);
        if (a["engine_tau"]) c.analyze.engine_tau = rd.positive(a["engine_tau"], "analyze.engine_tau");
        if (a["multi_count"]) c.analyze.multi_count = rd.boolean(a["multi_count"], "analyze.multi_count");
    }
    if (const auto o = root["oracle"]) {
        rd.expect_map(o, "oracle", {"bins", "n_max", "prune", "slope_taus"});
        if (o["bins"]) c.oracle.bins = rd.count(o["bins"], "oracle.bins", 1);
        if (o["n_max"]) c.oracle.n_max = rd.count(o["n_max"], "oracle.n_max", 2);
        if (o["prune"]) c.oracle.prune = rd.number(o["prune"], "oracle.prune");
        if (o["slope_taus"]) {
            c.oracle.slope_taus = rd.numbers(o["slope_taus"], "oracle.slope_taus");
            for (double t : c.oracle.slope_taus)
                if (!(t > 0)) rd.fail(o["slope_taus"], "oracle.slope_taus", "entries must be positive");
        }
        if (c.oracle.prune < 0) rd.fail(o["prune"], "oracle.prune", "must be non-negative");
    }
    if (const auto t = root["tpa"]) {
        rd.expect_map(t, "tpa", {"ratios", "gamma_f", "omega_eg", "omega_fe", "window_eps", "time_points",
                                 "frequency_points", "panels", "t0", "t"});
        if (t["ratios"]) {
            c.tpa.ratios = rd.numbers(t["ratios"], "tpa.ratios");
            for (double r : c.tpa.ratios)
                if (!(r > 0)) rd.fail(t["ratios"], "tpa.ratios", "ratios must be positive");
        }
        if (t["gamma_f"]) c.tpa.gamma_f = rd.positive(t["gamma_f"], "tpa.gamma_f");
        if (t["omega_eg"]) c.tpa.omega_eg = rd.number(t["omega_eg"], "tpa.omega_eg");
        if (t["omega_fe"]) c.tpa.omega_fe = rd.number(t["omega_fe"], "tpa.omega_fe");
        if (t["window_eps"]) {
            c.tpa.window_eps = rd.positive(t["window_eps"], "tpa.window_eps");
            if (c.tpa.window_eps >= 1) rd.fail(t["window_eps"], "tpa.window_eps", "must be below 1");
        }
        if (t["time_points"]) c.tpa.time_points = rd.count(t["time_points"], "tpa.time_points", 3);
        if (t["frequency_points"]) c.tpa.frequency_points = rd.count(t["frequency_points"], "tpa.frequency_points", 3);
        if (t["panels"]) c.tpa.panels = rd.count(t["panels"], "tpa.panels", 2);
        if (t["t0"]) c.tpa.t0 = rd.number(t["t0"], "tpa.t0");
        if (t["t"]) c.tpa.t = rd.number(t["t"], "tpa.t");
        if (c.tpa.t0 && c.tpa.t && !(*c.tpa.t > *c.tpa.t0)) rd.fail(t["t"], "tpa.t", "must exceed tpa.t0");
    }
    if (root["seed"]) c.seed = rd.u64(root["seed"], "seed");
    if (root["threads"]) c.threads = rd.count(root["threads"], "threads", 1);
    if (root["tolerance"]) c.tolerance = rd.positive(root["tolerance"], "tolerance");
    if (root["output"]) c.output = rd.text(root["output"], "output");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open configuration file");
    std::ostringstream os;
    os << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(os.str(), path, dir.empty() ? "." : dir.string());
}

namespace {

nlohmann::json complex_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

nlohmann::json matrix_json(const COperator& m) {
    auto rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.dim(); ++r) {
        auto row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.dim(); ++c) row.push_back(complex_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json pulse_json(const PulseShape& p) {
    nlohmann::json j = {{"shape", p.name()}};
    for (const auto& [k, v] : p.params()) j[k] = v;
    return j;
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["model"]["kind"] = model.kind;
    j["model"]["mode"] = to_string(model.mode);
    if (model.kind == "ladder") {
        j["model"]["ladder"] = {{"omega_eg", model.atom.omega_eg},
                                {"omega_fe", model.atom.omega_fe},
                                {"gamma_e", model.atom.gamma_e},
                                {"gamma_f", model.atom.gamma_f}};
    } else {
        j["model"]["hamiltonian"] = matrix_json(model.hamiltonian);
        for (const auto& l : model.couplings) j["model"]["couplings"].push_back(matrix_json(l));
    }
    for (std::size_t i = 0; i < model.psi0().dim(); ++i) j["model"]["initial_state"].push_back(complex_json(model.psi0()[i]));
    j["field"] = {{"t0", field.t0}, {"xi", pulse_json(field.xi)}, {"phi", pulse_json(field.phi)}};
    if (!field.amplitude_file.empty()) {
        std::ifstream in(field.amplitude_file, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        j["field"]["amplitude_fnv1a64"] = hex64(fnv1a64(os.str()));
    }
    j["grid"] = {{"t", grid.t}, {"tau", grid.tau}, {"panels", grid.panels}};
    j["simulate"] = {{"n_traj", simulate.n_traj},
                     {"engine", simulate.engine == EngineMode::exact ? "exact" : "reduced"},
                     {"checkpoints", simulate.checkpoints},
                     {"write_trajectories", simulate.write_trajectories}};
    j["analyze"] = {{"times", analyze.times},
                    {"points", analyze.points},
                    {"s_max", analyze.s_max},
                    {"engine_tau", analyze.engine_tau},
                    {"multi_count", analyze.multi_count}};
    j["oracle"] = {{"bins", oracle.bins}, {"n_max", oracle.n_max}, {"prune", oracle.prune}, {"slope_taus", oracle.slope_taus}};
    j["tpa"] = {{"ratios", tpa.ratios},
                {"gamma_f", tpa.gamma_f},
                {"omega_eg", tpa.omega_eg},
                {"window_eps", tpa.window_eps},
                {"time_points", tpa.time_points},
                {"frequency_points", tpa.frequency_points},
                {"panels", tpa.panels}};
    if (tpa.omega_fe) j["tpa"]["omega_fe"] = *tpa.omega_fe;
    if (tpa.t0) j["tpa"]["t0"] = *tpa.t0;
    if (tpa.t) j["tpa"]["t"] = *tpa.t;
    j["seed"] = seed;
    if (tolerance) j["tolerance"] = *tolerance;
    return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace twophoton::cli
