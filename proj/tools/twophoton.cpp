#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "output.hpp"
#include "twophoton/analytics.hpp"
#include "twophoton/engine.hpp"
#include "twophoton/format.hpp"
#include "twophoton/oracle.hpp"
#include "twophoton/tpa.hpp"

using namespace twophoton;
using namespace twophoton::cli;
using nlohmann::json;

namespace {

constexpr const char* kVersion = TWOPHOTON_VERSION;
constexpr const char* kOutEnv = "TWOPHOTON_OUT_DIR";

enum ExitCode { ok = 0, config_error = 1, numeric_failure = 2, check_failed = 3 };

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> threads;
    std::optional<double> tol;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "experiment configuration (YAML); built-in defaults when absent")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--out", f.out, std::string("output directory (default: $") + kOutEnv + ", then config)");
    sub->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--tol", f.tol, "tolerance of the run's invariant checks")->check(CLI::PositiveNumber);
}

ExperimentConfig configure(const CommonFlags& f) {
    ExperimentConfig c = f.config.empty() ? parse_config("", "<defaults>") : load_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (f.threads) c.threads = *f.threads;
    if (f.tol) c.tolerance = *f.tol;
    return c;
}

std::string output_dir(const CommonFlags& f, const ExperimentConfig& c) {
    if (!f.out.empty()) return f.out;
    if (const char* env = std::getenv(kOutEnv); env && *env) return env;
    return c.output.empty() ? "twophoton_out" : c.output;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json matrix_parts(const COperator& m) {
    json re = json::array(), im = json::array();
    for (std::size_t r = 0; r < m.dim(); ++r) {
        json rr = json::array(), ri = json::array();
        for (std::size_t c = 0; c < m.dim(); ++c) {
            rr.push_back(m(r, c).real());
            ri.push_back(m(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ri);
    }
    return {{"re", re}, {"im", im}};
}

class Run {
public:
    Run(std::string command, ExperimentConfig cfg, const std::string& dir)
        : command_(std::move(command)), cfg_(std::move(cfg)), out_(dir) {}

    const ExperimentConfig& cfg() const { return cfg_; }
    OutputDir& out() { return out_; }
    double tol(double fallback) const { return cfg_.tolerance ? *cfg_.tolerance : fallback; }

    void check(const std::string& name, double value, double bound) {
        const bool pass = value <= bound;
        checks_.push_back({{"name", name}, {"value", value}, {"bound", bound}, {"pass", pass}});
        if (!pass) {
            failed_ = true;
            std::cerr << "check failed: " << name << " = " << fmt17(value) << " > " << fmt17(bound) << '\n';
        }
    }

    void write_json(const std::string& name, const json& j) {
        out_.write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    int finish() {
        json m;
        m["program"] = "twophoton";
        m["command"] = command_;
        m["versions"] = {{"twophoton", kVersion},
                         {"cli11", CLI11_VERSION},
                         {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
        const json effective = cfg_.to_json();
        m["config"] = effective;
        m["config_hash"] = hex64(fnv1a64(effective.dump()));
        m["seed"] = cfg_.seed;
        m["threads"] = cfg_.threads;
        m["checks"] = checks_;
        json outputs = json::array();
        for (const auto& f : out_.files()) {
            const std::string bytes = slurp(out_.path() / f);
            outputs.push_back({{"file", f}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
        }
        m["outputs"] = outputs;
        m["status"] = failed_ ? "check_failed" : "ok";
        write_json(command_ + "_manifest.json", m);
        return failed_ ? check_failed : ok;
    }

private:
    std::string command_;
    ExperimentConfig cfg_;
    OutputDir out_;
    json checks_ = json::array();
    bool failed_ = false;
};

double max_rate(const SystemModel& model) {
    double g = 0.0;
    for (const auto& l : model.couplings()) g = std::max(g, (l.adjoint() * l).max_abs());
    return g;
}

ContinuousField continuous_field(const ExperimentConfig& c, ChannelMode mode) {
    return ContinuousField(mode, c.field.xi, c.field.phi, c.field.t0);
}

TwoPhotonAmplitude read_amplitude_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open amplitude file");
    return read_amplitude_csv(in);
}

std::vector<double> analysis_times(const ExperimentConfig& c) {
    if (!c.analyze.times.empty()) return c.analyze.times;
    std::vector<double> t;
    const double span = c.grid.t - c.field.t0;
    for (std::size_t k = 1; k <= c.analyze.points; ++k)
        t.push_back(c.field.t0 + span * static_cast<double>(k) / static_cast<double>(c.analyze.points));
    return t;
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(Run& run) {
    const auto& c = run.cfg();
    const SystemModel model = c.model.build();
    const CVector psi0 = c.model.psi0();
    FieldScenarios fsc;
    TimeGrid g;
    if (!c.field.amplitude_file.empty()) {
        const auto amp = read_amplitude_file(c.field.amplitude_file);
        if (amp.mode() != model.mode()) throw ConfigError(c.source + ": field.amplitude_file: channel mode differs from the model");
        fsc = FieldScenarios::general(decompose(amp, 1e-12));
        g = amp.grid();
    } else {
        const ContinuousField field = continuous_field(c, model.mode());
        const double end = std::max(c.grid.t, field.support_end());
        const auto bins = static_cast<std::size_t>(std::ceil((end - c.field.t0) / c.grid.tau - 1e-9));
        g = TimeGrid::from_step(c.field.t0, c.grid.tau, std::max<std::size_t>(bins, 1));
        fsc = discretize(field, g);
    }
    const double tau = g.tau();
    const bool uni = model.mode() == ChannelMode::unidirectional;
    const InteractionBlocks blocks = c.simulate.engine == EngineMode::exact
                                         ? exact_blocks(model, tau, 2)
                                         : (uni ? truncated_blocks_uni(model, tau) : truncated_blocks_bi(model, tau));

    std::vector<double> times = c.simulate.checkpoints.empty() ? std::vector<double>{c.grid.t} : c.simulate.checkpoints;
    MonteCarloOptions opt;
    opt.n_traj = c.simulate.n_traj;
    opt.seed = c.seed;
    opt.threads = c.threads;
    opt.mode = c.simulate.engine;
    for (double t : times) {
        const auto b = static_cast<std::size_t>(std::llround((t - g.t0()) / tau));
        if (b < 1 || b > g.bins()) throw ConfigError(c.source + ": simulate.checkpoints: time " + fmt17(t) + " outside the grid");
        opt.checkpoint_bins.push_back(b);
    }
    const std::string traj_file = "trajectories.csv";
    if (c.simulate.write_trajectories) {
        std::ofstream& os = run.out().open(traj_file);
        os << "traj_id,event_index,bin,detector,weight\n";
        opt.on_record = [&os](std::size_t id, const TrajectoryRecord& r) {
            std::size_t idx = 0;
            const std::string w = fmt17(r.weight);
            for (const auto& e : r.events)
                for (int k = 0; k < e.count; ++k)
                    os << id << ',' << idx++ << ',' << e.bin << ',' << detector_name(e.detector) << ',' << w << '\n';
        };
    }
    const auto est = apriori_monte_carlo(fsc, blocks, psi0, opt);
    if (c.simulate.write_trajectories) run.out().commit(traj_file);

    json cps = json::array();
    double trace_defect = 0.0, min_eig = 0.0;
    for (std::size_t k = 0; k < est.sigma.size(); ++k) {
        const auto& s = est.sigma[k];
        std::vector<double> pops;
        for (std::size_t i = 0; i < s.dim(); ++i) pops.push_back(s(i, i).real());
        const auto h = hermitian_part_checks(s);
        trace_defect = std::max(trace_defect, std::abs(s.trace().real() - 1.0));
        min_eig = std::min(min_eig, h.min_eigenvalue);
        cps.push_back({{"t", g.time(opt.checkpoint_bins[k])},
                       {"bin", opt.checkpoint_bins[k]},
                       {"trace", s.trace().real()},
                       {"populations", pops},
                       {"sigma", matrix_parts(s)},
                       {"std_error", matrix_parts(est.std_error[k])}});
    }
    json hist = json::object();
    for (std::size_t s = 0; s < est.count_histogram.size(); ++s)
        if (est.count_histogram[s]) hist[std::to_string(s)] = est.count_histogram[s];
    run.write_json("simulate_summary.json",
                   {{"n_traj", est.n_traj},
                    {"seed", c.seed},
                    {"engine", c.simulate.engine == EngineMode::exact ? "exact" : "reduced"},
                    {"tau", tau},
                    {"bins", g.bins()},
                    {"count_histogram", hist},
                    {"trace_estimate", est.sigma.back().trace().real()},
                    {"n_dead", est.n_dead},
                    {"dead_weight", est.dead_weight},
                    {"checkpoints", cps}});
    run.check("sigma_trace_defect", trace_defect, run.tol(1e-10));
    run.check("sigma_negative_eigenvalue", -min_eig, run.tol(1e-10));
    std::cout << "simulated " << est.n_traj << " trajectories; trace " << fmt17(est.sigma.back().trace().real()) << '\n';
}

// ---------------------------------------------------------------- analyze

void cmd_analyze(Run& run) {
    const auto& c = run.cfg();
    const SystemModel model = c.model.build();
    const CVector psi0 = c.model.psi0();
    const ContinuousField field = continuous_field(c, model.mode());
    const double t0 = c.field.t0, t = c.grid.t;
    const std::size_t n = c.grid.panels ? c.grid.panels + c.grid.panels % 2
                                        : default_panels(t - t0, std::max(max_rate(model), 1.0));
    const bool uni = model.mode() == ChannelMode::unidirectional;

    const auto path = no_count_path(model, field, psi0, QuadratureGrid(t0, t, n));
    std::vector<double> tt, p0;
    for (const auto& node : path) {
        tt.push_back(node.t);
        p0.push_back(conditional_density(field, node).trace().real());
    }
    run.out().write("no_count.csv", [&](std::ostream& os) { write_curve_csv(os, "t", {"p0"}, tt, {p0}); });
    run.check("no_count_start_defect", std::abs(p0.front() - 1.0), 1e-12);

    CountingOptions opt;
    opt.panels = c.grid.panels;
    opt.engine_tau = c.analyze.engine_tau;
    opt.s_max = c.analyze.s_max;
    opt.multi_count = c.analyze.multi_count;
    const auto times = analysis_times(c);
    std::vector<std::string> names{"p0", "p1"};
    if (!uni) names.insert(names.end(), {"p1_R", "p1_L"});
    for (std::size_t s = 2; s <= opt.s_max; ++s) names.push_back(s == opt.s_max ? "p" + std::to_string(s) + "_or_more" : "p" + std::to_string(s));
    names.insert(names.end(), {"multi_count_mass", "completeness_defect", "quadrature_error", "multi_count_error"});
    std::vector<std::vector<double>> cols(names.size());
    json report = json::array();
    double worst = 0.0;
    for (double ti : times) {
        const auto cd = count_distribution(model, field, psi0, ti, opt);
        std::vector<double> row{cd.p0, cd.p1};
        if (!uni) row.insert(row.end(), cd.p1_by_detector.begin(), cd.p1_by_detector.end());
        for (std::size_t s = 2; s <= opt.s_max; ++s) row.push_back(cd.probabilities[s]);
        row.insert(row.end(), {cd.multi_count_mass, cd.completeness_defect(), cd.quadrature_error, cd.multi_count_error});
        for (std::size_t k = 0; k < row.size(); ++k) cols[k].push_back(row[k]);
        if (opt.multi_count) worst = std::max(worst, cd.completeness_defect());
        report.push_back({{"t", ti},
                          {"p0", cd.p0},
                          {"p1", cd.p1},
                          {"multi_count_mass", cd.multi_count_mass},
                          {"completeness_defect", cd.completeness_defect()},
                          {"engine_tau", cd.engine_tau}});
    }
    run.out().write("counts.csv", [&](std::ostream& os) { write_curve_csv(os, "t", names, times, cols); });

    const auto dens = one_count_density(model, field, psi0, QuadratureGrid(t0, t, n));
    run.out().write("one_count_density.csv", [&](std::ostream& os) {
        write_curve_csv(os, "t1", uni ? std::vector<std::string>{"density_D"} : std::vector<std::string>{"density_R", "density_L"},
                        dens.t1, dens.density);
    });

    const auto ap = apriori_state_quadrature(model, field, psi0, t, opt);
    run.out().write("apriori_state.csv", [&](std::ostream& os) { write_matrix_csv(os, ap.sigma); });
    run.write_json("analyze_summary.json", {{"t", t},
                                            {"panels", n},
                                            {"completeness", report},
                                            {"apriori", {{"trace", ap.sigma.trace().real()},
                                                         {"remainder_trace", ap.remainder_trace},
                                                         {"remainder_error", ap.remainder_error},
                                                         {"sigma", matrix_parts(ap.sigma)}}}});
    if (opt.multi_count) run.check("completeness_defect", worst, run.tol(2e-3));
    std::cout << "analyzed " << times.size() << " times; max completeness defect " << fmt17(worst) << '\n';
}

// ---------------------------------------------------------------- tpa

struct TpaFlags {
    bool pmax = false, optimal = false, figures = false, curve = false;
    std::optional<double> ge, gf, delta;
    std::string evaluate;
};

std::string ratio_tag(ChannelMode mode, double r) {
    return std::string(mode == ChannelMode::unidirectional ? "uni" : "bi") + "_r" + fmt17(r);
}

double marginal_diff(const DensityMap& m) {
    double d = 0.0;
    for (std::size_t i = 0; i < m.axis.size(); ++i) d = std::max(d, std::abs(m.marginal1[i] - m.marginal2[i]));
    return d;
}

void tpa_figures(Run& run, ChannelMode mode) {
    const auto& c = run.cfg();
    json meta = json::array();
    for (double r : c.tpa.ratios) {
        const LadderAtom a{c.tpa.omega_eg, c.tpa.figure_omega_fe(mode), r * c.tpa.gamma_f, c.tpa.gamma_f};
        const double gmax = std::max(a.gamma_e, a.gamma_f), step = gmax / 20;
        const double hw = step * static_cast<double>(c.tpa.frequency_points - 1) / 2, centre = resonance_centre(a, step);
        const auto fm = frequency_density_map(a, 0.0, mode, centre, hw, c.tpa.frequency_points);
        const double window = optimal_window(a, c.tpa.window_eps);
        const auto tm = time_density_map(a, 0.0, window, mode, c.tpa.time_points);
        const std::string tag = ratio_tag(mode, r);
        run.out().write("frequency_density_" + tag + ".csv", [&](std::ostream& os) { write_density_csv(os, fm, "omega1", "omega2"); });
        run.out().write("frequency_marginals_" + tag + ".csv", [&](std::ostream& os) { write_marginals_csv(os, fm, "omega"); });
        run.out().write("time_density_" + tag + ".csv", [&](std::ostream& os) { write_density_csv(os, tm, "t1", "t2"); });
        run.out().write("time_marginals_" + tag + ".csv", [&](std::ostream& os) { write_marginals_csv(os, tm, "t"); });
        const std::size_t np = fm.axis.size();
        const auto arg = static_cast<std::size_t>(std::max_element(fm.density.begin(), fm.density.end()) - fm.density.begin());
        meta.push_back({{"ratio", r},
                        {"atom", {{"omega_eg", a.omega_eg}, {"omega_fe", a.omega_fe}, {"gamma_e", a.gamma_e}, {"gamma_f", a.gamma_f}}},
                        {"mode", to_string(mode)},
                        {"t", 0.0},
                        {"frequency_grid", {{"lo", fm.axis.front()}, {"hi", fm.axis.back()}, {"points", np}, {"step", step}}},
                        {"time_grid", {{"lo", tm.axis.front()}, {"hi", tm.axis.back()}, {"points", tm.axis.size()}}},
                        {"frequency_argmax", {{"omega1", fm.axis[arg % np]}, {"omega2", fm.axis[arg / np]}}},
                        {"marginal_difference", {{"time", marginal_diff(tm)}, {"frequency", marginal_diff(fm)}}}});
        if (mode == ChannelMode::unidirectional) {
            run.check("marginal_symmetry_time_" + tag, marginal_diff(tm), 1e-10);
            run.check("marginal_symmetry_frequency_" + tag, marginal_diff(fm), 1e-10);
        }
    }
    run.write_json("figures_" + std::string(mode == ChannelMode::unidirectional ? "uni" : "bi") + ".json", meta);
}

void cmd_tpa(Run& run, const TpaFlags& f) {
    const auto& c = run.cfg();
    const ChannelMode mode = c.model.mode;
    LadderAtom atom = c.model.kind == "ladder" ? c.model.atom : LadderAtom{};
    if (f.ge) atom.gamma_e = *f.ge;
    if (f.gf) atom.gamma_f = *f.gf;
    atom.validate();
    const double t0 = c.tpa.t0 ? *c.tpa.t0 : c.field.t0, t = c.tpa.t ? *c.tpa.t : c.grid.t;
    if (!(t > t0)) throw ConfigError(c.source + ": tpa: window end must exceed its start");
    const bool any = f.pmax || f.optimal || f.figures || f.curve || !f.evaluate.empty();
    json summary;
    summary["atom"] = {{"omega_eg", atom.omega_eg}, {"omega_fe", atom.omega_fe}, {"gamma_e", atom.gamma_e}, {"gamma_f", atom.gamma_f}};
    summary["mode"] = to_string(mode);

    if (f.pmax) {
        const double delta = f.delta ? *f.delta : t - t0;
        const double p = p_max(atom, delta);
        summary["p_max"] = {{"delta", delta}, {"value", p}};
        std::cout << fmt17(p) << '\n';
    }
    if (f.optimal) {
        const auto amp = optimal_amplitude(atom, t0, t, mode, c.tpa.panels);
        run.out().write("optimal_amplitude.csv", [&](std::ostream& os) { write_amplitude_csv(os, amp); });
        const double pm = p_max(atom, t - t0), pf = p_f_general(atom, amp, t);
        summary["optimal"] = {{"t0", t0}, {"t", t}, {"panels", c.tpa.panels}, {"p_max", pm}, {"p_f", pf}, {"norm", quadrature_norm(amp)}};
        run.check("optimal_attainment", std::abs(pf - pm), run.tol(1e-6));
        std::cout << "optimal amplitude: p_f " << fmt17(pf) << ", p_max " << fmt17(pm) << '\n';
    }
    if (!f.evaluate.empty()) {
        const auto amp = read_amplitude_file(f.evaluate);
        const auto& g = amp.grid();
        const double te = g.time(g.bins() - 1);
        const double pf = p_f_general(atom, amp, te), pm = p_max(atom, te - g.t0());
        summary["evaluate"] = {{"file", std::filesystem::path(f.evaluate).filename().string()},
                               {"t", te},
                               {"p_f", pf},
                               {"p_max", pm}};
        run.check("absorption_bound_excess", pf - pm, run.tol(1e-6));
        std::cout << fmt17(pf) << '\n';
    }
    if (f.curve) {
        if (!c.field.amplitude_file.empty()) throw ConfigError(c.source + ": tpa --curve needs a separable field");
        const ContinuousField field = continuous_field(c, mode);
        const Profile xi = [&](double s) { return field.xi(s); }, phi = [&](double s) { return field.phi(s); };
        const auto times = analysis_times(c);
        std::vector<double> pf;
        for (double ti : times) {
            const std::size_t n = std::max<std::size_t>(2, default_panels(ti - c.field.t0, std::max({atom.gamma_e, atom.gamma_f, 1.0})));
            pf.push_back(mode == ChannelMode::unidirectional
                             ? p_f_uni_separable(atom, xi, phi, field.normalization(), c.field.t0, ti, n)
                             : p_f_bi_separable(atom, xi, phi, c.field.t0, ti, n));
        }
        run.out().write("absorption.csv", [&](std::ostream& os) { write_curve_csv(os, "t", {"p_f"}, times, {pf}); });
    }
    if (f.figures || !any) tpa_figures(run, mode);
    run.write_json("tpa_summary.json", summary);
}

// ---------------------------------------------------------------- oracle

void cmd_oracle(Run& run) {
    namespace orc = twophoton::oracle;
    const auto& c = run.cfg();
    const SystemModel model = c.model.build();
    const CVector psi0 = c.model.psi0();
    const ChannelMode mode = model.mode();
    const bool uni = mode == ChannelMode::unidirectional;

    std::vector<cplx> xs, ps;
    std::optional<TwoPhotonAmplitude> amp;
    TimeGrid g;
    if (!c.field.amplitude_file.empty()) {
        amp = read_amplitude_file(c.field.amplitude_file);
        if (amp->mode() != mode) throw ConfigError(c.source + ": field.amplitude_file: channel mode differs from the model");
        g = amp->grid();
    } else {
        g = TimeGrid::from_span(c.field.t0, c.grid.t, c.oracle.bins);
        const ContinuousField field = continuous_field(c, mode);
        for (std::size_t k = 0; k < g.bins(); ++k) {
            xs.push_back(field.xi(g.time(k) + g.tau() / 2));
            ps.push_back(field.phi(g.time(k) + g.tau() / 2));
        }
    }
    struct Setup {
        orc::CompositeState state;
        FieldScenarios fields;
    };
    auto setup_for = [&](double tau) {
        if (amp) return Setup{orc::build_initial_state(*amp, psi0, c.oracle.n_max), FieldScenarios::general(decompose(*amp, 1e-12))};
        const TimeGrid gt = TimeGrid::from_step(g.t0(), tau, g.bins());
        const auto xi = PhotonProfile::normalized(gt, xs), phi = PhotonProfile::normalized(gt, ps);
        return Setup{orc::build_initial_state(xi, phi, mode, psi0, c.oracle.n_max),
                     uni ? FieldScenarios::separable_uni(xi, phi) : FieldScenarios::separable_bi(xi, phi)};
    };
    auto compare = [&](const orc::OutcomeTable& tab, const Setup& s, double tau, EngineMode em) {
        const InteractionBlocks blocks = em == EngineMode::exact
                                             ? exact_blocks(model, tau, 2)
                                             : (uni ? truncated_blocks_uni(model, tau) : truncated_blocks_bi(model, tau));
        std::map<std::string, double> table;
        for (const auto& [seq, p] : enumerate_sequences(s.fields, blocks, psi0, em))
            table[orc::sequence_key(seq, blocks.channels(), blocks.levels())] += p;
        return orc::compare_with_engine(tab, table);
    };

    const Setup base = setup_for(g.tau());
    const auto tab = orc::enumerate_outcomes(model, base.state, g.tau(), c.oracle.prune);
    run.out().write("outcomes.csv", [&](std::ostream& os) { orc::write_outcome_csv(os, tab); });
    const double total = tab.total_probability();
    json report = {{"bins", g.bins()},
                   {"tau", g.tau()},
                   {"n_max", c.oracle.n_max},
                   {"sequences", tab.entries.size()},
                   {"total_probability", total},
                   {"pruned_mass", tab.pruned_mass},
                   {"conservation_defect", std::abs(total + tab.pruned_mass - 1.0)}};
    run.check("conservation_defect", std::abs(total + tab.pruned_mass - 1.0), run.tol(1e-10));

    if (c.oracle.n_max == 2 && c.oracle.prune == 0.0) {
        const auto ex = compare(tab, base, g.tau(), EngineMode::exact);
        report["engine"]["exact"] = {{"max_abs_deviation", ex.max_abs_deviation},
                                     {"excluded_mass", ex.excluded_mass},
                                     {"engine_only_mass", ex.engine_only_mass}};
        run.check("exact_engine_deviation", ex.max_abs_deviation, run.tol(1e-10));
        if (!amp && c.oracle.slope_taus.size() >= 2) {
            json rows = json::array();
            std::vector<double> devs;
            for (double tau : c.oracle.slope_taus) {
                const Setup s = setup_for(tau);
                const auto t2 = orc::enumerate_outcomes(model, s.state, tau, 0.0);
                const auto rep = compare(t2, s, tau, EngineMode::reduced);
                devs.push_back(rep.max_abs_deviation);
                rows.push_back({{"tau", tau}, {"max_abs_deviation", rep.max_abs_deviation}, {"excluded_mass", rep.excluded_mass}});
            }
            report["engine"]["reduced"] = rows;
            report["engine"]["reduced_slope"] = orc::fit_log2_slope(c.oracle.slope_taus, devs);
        }
    }
    run.write_json("oracle_report.json", report);
    std::cout << "oracle: " << tab.entries.size() << " sequences, total probability " << fmt17(total) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-photon wave-packet scattering: trajectories, counting statistics and absorption"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonFlags sim_f, ana_f, tpa_f, orc_f;
    TpaFlags tf;
    auto* sim = app.add_subcommand("simulate", "sample quantum trajectories");
    auto* ana = app.add_subcommand("analyze", "closed-form counting statistics");
    auto* tpa = app.add_subcommand("tpa", "two-photon absorption by a ladder atom");
    auto* orc = app.add_subcommand("oracle", "brute-force outcome enumeration");
    add_common(sim, sim_f);
    add_common(ana, ana_f);
    add_common(tpa, tpa_f);
    add_common(orc, orc_f);
    tpa->add_flag("--pmax", tf.pmax, "print the absorption bound");
    tpa->add_option("--ge", tf.ge, "decay rate of e")->check(CLI::PositiveNumber);
    tpa->add_option("--gf", tf.gf, "decay rate of f")->check(CLI::PositiveNumber);
    tpa->add_option("--delta", tf.delta, "window length for --pmax")->check(CLI::NonNegativeNumber);
    tpa->add_flag("--optimal", tf.optimal, "export the optimal amplitude on the configured window");
    tpa->add_option("--evaluate", tf.evaluate, "absorption probability of an amplitude CSV")->check(CLI::ExistingFile);
    tpa->add_flag("--figures", tf.figures, "export density maps for the configured ratios (default action)");
    tpa->add_flag("--curve", tf.curve, "absorption curve of the configured field");

    CLI11_PARSE(app, argc, argv);

    const CommonFlags& f = sim->parsed() ? sim_f : ana->parsed() ? ana_f : tpa->parsed() ? tpa_f : orc_f;
    const std::string command = app.get_subcommands().front()->get_name();
    std::optional<Run> run;
    try {
        ExperimentConfig cfg = configure(f);
        const std::string dir = output_dir(f, cfg);
        run.emplace(command, std::move(cfg), dir);
        if (command == "simulate") cmd_simulate(*run);
        else if (command == "analyze") cmd_analyze(*run);
        else if (command == "tpa") cmd_tpa(*run, tf);
        else cmd_oracle(*run);
        return run->finish();
    } catch (const ConfigError& e) {
        if (run) run->out().discard();
        std::cerr << "configuration error: " << e.what() << '\n';
        return config_error;
    } catch (const InvalidInput& e) {
        if (run) run->out().discard();
        std::cerr << "invalid input: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        if (run) run->out().discard();
        std::cerr << "run failed: " << e.what() << '\n';
        return numeric_failure;
    }
}
