#include "twophoton/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "twophoton/format.hpp"

namespace twophoton {

QuadratureGrid::QuadratureGrid(double t0_, double t_, std::size_t panels_, QuadratureRule rule_)
    : t0(t0_), t(t_), panels(panels_), rule(rule_) {
    if (!(t_ >= t0_)) throw InvalidInput("quadrature grid: t < t0");
    if (panels_ < 1) throw InvalidInput("quadrature grid: need at least one panel");
}

std::size_t default_panels(double window, double gamma_ref) {
    if (!(gamma_ref > 0)) throw InvalidInput("default_panels: reference rate must be positive");
    const double per_unit = 2000.0 * gamma_ref / 10.0;
    auto n = static_cast<std::size_t>(std::ceil(std::max(window, 0.0) * per_unit));
    n = std::max<std::size_t>(n, 2);
    return n + (n % 2);
}

namespace {

constexpr std::size_t FIELD_PANELS = 20000;

template <class F>
cplx simpson(F f, double a, double b, std::size_t n) {
    if (!(b > a)) return {};
    n += n % 2;
    const double h = (b - a) / static_cast<double>(n);
    cplx s = f(a) + f(b);
    for (std::size_t k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + static_cast<double>(k) * h);
    return s * (h / 3.0);
}

}  // namespace

ContinuousField::ContinuousField(ChannelMode mode, PulseShape xi, PulseShape phi, double t0)
    : mode_(mode), xi_(std::move(xi)), phi_(std::move(phi)), t0_(t0) {
    hi_ = std::max(xi_.support_hi(), phi_.support_hi());
    if (!(hi_ > t0_)) throw InvalidInput("continuous field: profiles end before t0");
    const double lo = std::max(t0_, std::min(xi_.support_lo(), phi_.support_lo()));
    const double mx = simpson([&](double s) { return cplx(std::norm(xi_(s))); }, lo, hi_, FIELD_PANELS).real();
    const double mp = simpson([&](double s) { return cplx(std::norm(phi_(s))); }, lo, hi_, FIELD_PANELS).real();
    if (!(mx > 1e-12) || !(mp > 1e-12)) throw InvalidInput("continuous field: profile has no mass after t0");
    sx_ = 1.0 / std::sqrt(mx);
    sp_ = 1.0 / std::sqrt(mp);
    if (mode_ == ChannelMode::unidirectional) n_ = 1.0 + std::norm(tails(t0_).xp);
}

FieldTails ContinuousField::tails(double t) const {
    FieldTails r;
    const double a = std::max(t, t0_);
    if (!(hi_ > a)) return r;
    // Panel count scales with the remaining window so that all tails share one resolution.
    const auto n = static_cast<std::size_t>(
        std::max(2.0, std::ceil(static_cast<double>(FIELD_PANELS) * (hi_ - a) / (hi_ - t0_))));
    r.xx = simpson([&](double s) { return cplx(std::norm(xi(s))); }, a, hi_, n).real();
    r.pp = simpson([&](double s) { return cplx(std::norm(phi(s))); }, a, hi_, n).real();
    r.xp = simpson([&](double s) { return std::conj(xi(s)) * phi(s); }, a, hi_, n);
    return r;
}

COperator absorption_operator(const SystemModel& model, cplx amplitude, double t, std::size_t channel) {
    const COperator l = model.coupling(channel);
    return (-amplitude) * (propagator_T(model, -t) * l.adjoint() * propagator_T(model, t));
}

COperator absorption_operator(const SystemModel& model, const PulseShape& profile, double t, std::size_t channel) {
    return absorption_operator(model, profile(t), t, channel);
}

COperator emission_operator(const SystemModel& model, double t, std::size_t channel) {
    return propagator_T(model, -t) * model.coupling(channel) * propagator_T(model, t);
}

namespace {

struct Link {
    int from;
    int profile;  // 0 xi, 1 phi
    double scale;
    std::size_t channel;
};

// No-count source structure: label a is fed by -c(s) L^dag psi_from for each link.
struct Structure {
    std::array<std::vector<Link>, 4> links;
    std::array<int, 4> order{3, 1, 2, 0};
};

Structure structure_for(const ContinuousField& f) {
    Structure s;
    if (f.mode() == ChannelMode::unidirectional) {
        const double rn = 1.0 / std::sqrt(f.normalization());
        s.links[1] = {{3, 1, rn, 0}};
        s.links[2] = {{3, 0, rn, 0}};
        s.links[0] = {{1, 0, 1.0, 0}, {2, 1, 1.0, 0}};
    } else {
        s.links[2] = {{3, 0, 1.0, 0}};
        s.links[1] = {{3, 1, 1.0, 1}};
        s.links[0] = {{1, 0, 1.0, 0}, {2, 1, 1.0, 1}};
    }
    return s;
}

struct Context {
    const SystemModel& model;
    const ContinuousField& field;
    Structure st;
    std::vector<COperator> minus_ldag;
    QuadratureRule rule;

    Context(const SystemModel& m, const ContinuousField& f, QuadratureRule r)
        : model(m), field(f), st(structure_for(f)), rule(r) {
        const std::size_t need = f.mode() == ChannelMode::unidirectional ? 1 : 2;
        if (m.channels() != need) throw InvalidInput("model channel count does not match the field mode");
        for (const auto& l : m.couplings()) minus_ldag.push_back(cplx(-1.0) * l.adjoint());
    }
};

StepPropagators<COperator> step_props(const SystemModel& m, double h) {
    return {propagator_T(m, h), propagator_T(m, 2 * h), propagator_T(m, -h), h};
}

using LabelPaths = std::array<std::vector<CVector>, 4>;

// Evolves all labels over nodes of a uniform grid starting from `init`.
LabelPaths evolve(const Context& c, const StepPropagators<COperator>& p, const std::vector<cplx>& xi,
                  const std::vector<cplx>& phi, const std::array<CVector, 4>& init) {
    const std::size_t n = xi.size();
    LabelPaths out;
    for (int a : c.st.order) {
        std::vector<CVector> f(n, CVector(c.model.dim()));
        for (const auto& lk : c.st.links[static_cast<std::size_t>(a)]) {
            const auto& from = out[static_cast<std::size_t>(lk.from)];
            const auto& prof = lk.profile == 0 ? xi : phi;
            for (std::size_t k = 0; k < n; ++k) {
                const cplx coeff = lk.scale * prof[k];
                if (coeff == cplx{}) continue;
                f[k].axpy(coeff, c.minus_ldag[lk.channel] * from[k]);
            }
        }
        if (n == 1) {
            out[static_cast<std::size_t>(a)] = {init[static_cast<std::size_t>(a)]};
        } else {
            out[static_cast<std::size_t>(a)] = propagated_integral(p, init[static_cast<std::size_t>(a)], f, c.rule);
        }
    }
    return out;
}

std::array<CVector, 4> initial_condition(const SystemModel& m, const CVector& psi0) {
    if (psi0.dim() != m.dim()) throw InvalidInput("initial vector dimension does not match the model");
    std::array<CVector, 4> init{CVector(m.dim()), CVector(m.dim()), CVector(m.dim()), psi0};
    return init;
}

std::array<CVector, 4> at_node(const LabelPaths& p, std::size_t k) {
    return {p[0][k], p[1][k], p[2][k], p[3][k]};
}

std::array<CVector, 4> jump(const Context& c, const std::array<CVector, 4>& x, cplx xi, cplx phi, Detector det) {
    const auto& m = c.model;
    std::array<CVector, 4> y;
    if (c.field.mode() == ChannelMode::unidirectional) {
        if (det != Detector::single) throw InvalidInput("unidirectional field uses the single detector");
        const COperator& l = m.coupling(0);
        const double rn = 1.0 / std::sqrt(c.field.normalization());
        y[0] = l * x[0];
        y[0].axpy(xi, x[1]);
        y[0].axpy(phi, x[2]);
        y[1] = l * x[1];
        y[1].axpy(phi * rn, x[3]);
        y[2] = l * x[2];
        y[2].axpy(xi * rn, x[3]);
        y[3] = l * x[3];
    } else if (det == Detector::right) {
        const COperator& l = m.coupling(0);
        y[0] = l * x[0];
        y[0].axpy(xi, x[1]);
        y[1] = l * x[1];
        y[2] = l * x[2];
        y[2].axpy(xi, x[3]);
        y[3] = l * x[3];
    } else if (det == Detector::left) {
        const COperator& l = m.coupling(1);
        y[0] = l * x[0];
        y[0].axpy(phi, x[2]);
        y[1] = l * x[1];
        y[1].axpy(phi, x[3]);
        y[2] = l * x[2];
        y[3] = l * x[3];
    } else {
        throw InvalidInput("bidirectional field needs detector R or L");
    }
    return y;
}

void sample_field(const ContinuousField& f, double a, double h, std::size_t n, std::vector<cplx>& xi,
                  std::vector<cplx>& phi) {
    xi.resize(n + 1);
    phi.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        const double s = a + static_cast<double>(k) * h;
        xi[k] = f.xi(s);
        phi[k] = f.phi(s);
    }
}

std::vector<Detector> detectors_for(const ContinuousField& f) {
    if (f.mode() == ChannelMode::unidirectional) return {Detector::single};
    return {Detector::right, Detector::left};
}

}  // namespace

std::vector<ContinuousConditional> no_count_path(const SystemModel& model, const ContinuousField& field,
                                                 const CVector& psi0, const QuadratureGrid& grid) {
    if (grid.t0 < field.t0() - 1e-12) throw InvalidInput("quadrature grid starts before the field window");
    Context c(model, field, grid.rule);
    std::vector<cplx> xi, phi;
    const double h = grid.step();
    sample_field(field, grid.t0, h, grid.panels, xi, phi);
    const auto paths = evolve(c, step_props(model, h), xi, phi, initial_condition(model, psi0));
    std::vector<ContinuousConditional> out(grid.panels + 1);
    for (std::size_t k = 0; k <= grid.panels; ++k) {
        out[k].t = grid.node(k);
        out[k].v = at_node(paths, k);
    }
    out.back().t = grid.t;
    return out;
}

ContinuousConditional conditional_no_count(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                           const QuadratureGrid& grid) {
    if (grid.t == grid.t0) {
        Context c(model, field, grid.rule);
        ContinuousConditional r;
        r.t = grid.t;
        r.v = initial_condition(model, psi0);
        return r;
    }
    return no_count_path(model, field, psi0, grid).back();
}

ContinuousConditional conditional_one_count(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                            double t1, double t, Detector detector, std::size_t panels,
                                            QuadratureRule rule) {
    const double t0 = field.t0();
    if (!(t1 >= t0 && t >= t1)) throw InvalidInput("one-count record needs t0 <= t1 <= t");
    Context c(model, field, rule);
    const double span = t - t0;
    auto seg_panels = [&](double len) -> std::size_t {
        if (len <= 0.0) return 0;
        const double frac = span > 0 ? len / span : 1.0;
        return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(frac * static_cast<double>(panels))));
    };
    std::array<CVector, 4> x = initial_condition(model, psi0);
    std::vector<cplx> xi, phi;
    const std::size_t na = seg_panels(t1 - t0);
    if (na > 0) {
        const double h = (t1 - t0) / static_cast<double>(na);
        sample_field(field, t0, h, na, xi, phi);
        x = at_node(evolve(c, step_props(model, h), xi, phi, x), na);
    }
    x = jump(c, x, field.xi(t1), field.phi(t1), detector);
    const std::size_t nb = seg_panels(t - t1);
    if (nb > 0) {
        const double h = (t - t1) / static_cast<double>(nb);
        sample_field(field, t1, h, nb, xi, phi);
        x = at_node(evolve(c, step_props(model, h), xi, phi, x), nb);
    }
    ContinuousConditional r;
    r.t = t;
    r.counts = 1;
    r.t1 = t1;
    r.detector = detector;
    r.v = x;
    return r;
}

COperator conditional_density(const ContinuousField& field, const ContinuousConditional& c, const FieldTails& tl) {
    const std::size_t d = c.v[0].dim();
    COperator rho(d);
    auto add = [&](const CVector& a, const CVector& b, cplx w) {
        if (w == cplx{}) return;
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t s = 0; s < d; ++s) rho(r, s) += w * a[r] * std::conj(b[s]);
    };
    add(c.v[0], c.v[0], 1.0);
    add(c.v[1], c.v[1], tl.xx);
    add(c.v[2], c.v[2], tl.pp);
    if (field.mode() == ChannelMode::unidirectional) {
        // <e_phi|e_xi> = int xi conj(phi)
        add(c.v[1], c.v[2], std::conj(tl.xp));
        add(c.v[2], c.v[1], tl.xp);
        add(c.v[3], c.v[3], (std::norm(tl.xp) + tl.xx * tl.pp) / field.normalization());
    } else {
        add(c.v[3], c.v[3], tl.xx * tl.pp);
    }
    return rho;
}

COperator conditional_density(const ContinuousField& field, const ContinuousConditional& c) {
    return conditional_density(field, c, field.tails(c.t));
}

double exclusive_density(const ContinuousField& field, const ContinuousConditional& c, const FieldTails& tl) {
    return conditional_density(field, c, tl).trace().real();
}

double exclusive_density(const ContinuousField& field, const ContinuousConditional& c) {
    return exclusive_density(field, c, field.tails(c.t));
}

namespace {

struct OneCountIntegrals {
    std::vector<double> t1;
    std::vector<std::vector<double>> density;
    std::vector<COperator> rho_integral;  // per detector
    double p0 = 0.0;
    COperator rho0;
};

OneCountIntegrals integrate_one_count(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                      const QuadratureGrid& grid, bool want_rho) {
    Context c(model, field, grid.rule);
    const std::size_t n = grid.panels;
    const double h = grid.step();
    std::vector<cplx> xi, phi;
    sample_field(field, grid.t0, h, n, xi, phi);
    const auto props = step_props(model, h);
    const auto base = evolve(c, props, xi, phi, initial_condition(model, psi0));
    const FieldTails tl = field.tails(grid.t);

    OneCountIntegrals r;
    ContinuousConditional last;
    last.t = grid.t;
    last.v = at_node(base, n);
    r.rho0 = conditional_density(field, last, tl);
    r.p0 = r.rho0.trace().real();

    const auto dets = detectors_for(field);
    const auto w = quadrature_weights(n, h, grid.rule);
    r.t1.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) r.t1[k] = grid.node(k);
    r.density.assign(dets.size(), std::vector<double>(n + 1, 0.0));
    r.rho_integral.assign(dets.size(), COperator(model.dim()));
    for (std::size_t di = 0; di < dets.size(); ++di) {
        for (std::size_t k = 0; k <= n; ++k) {
            auto x = jump(c, at_node(base, k), xi[k], phi[k], dets[di]);
            if (k < n) {
                std::vector<cplx> xs(xi.begin() + static_cast<std::ptrdiff_t>(k), xi.end());
                std::vector<cplx> ps(phi.begin() + static_cast<std::ptrdiff_t>(k), phi.end());
                x = at_node(evolve(c, props, xs, ps, x), n - k);
            }
            ContinuousConditional cc;
            cc.t = grid.t;
            cc.v = x;
            const COperator rho = conditional_density(field, cc, tl);
            r.density[di][k] = rho.trace().real();
            if (want_rho) {
                COperator term = rho;
                term *= w[k];
                r.rho_integral[di] += term;
            }
        }
    }
    return r;
}

double max_rate(const SystemModel& model) {
    double g = 0.0;
    for (const auto& l : model.couplings()) g = std::max(g, (l.adjoint() * l).max_abs());
    return g;
}

double tau_default(const SystemModel& model) { return 0.01 / std::max(max_rate(model), 1e-3); }

std::size_t panels_for(const SystemModel& model, double window, const CountingOptions& opt) {
    std::size_t n = opt.panels ? opt.panels : default_panels(window, std::max(max_rate(model), 1.0));
    return n + n % 2;
}

struct MultiCount {
    std::vector<double> probabilities;  // index s, s >= 2 meaningful
    COperator rho;
    double mass = 0.0, error = 0.0, tau = 0.0;
};

MultiCount engine_multi_count(const SystemModel& model, const ContinuousField& field, const CVector& psi0, double t,
                              const CountingOptions& opt) {
    MultiCount mc;
    const std::size_t smax = std::max<std::size_t>(opt.s_max, 2);
    mc.probabilities.assign(smax + 1, 0.0);
    mc.rho = COperator(model.dim());
    if (!(t > field.t0())) return mc;
    const double tau = opt.engine_tau > 0 ? opt.engine_tau : tau_default(model);
    const auto coarse = engine_count_statistics(model, field, psi0, t, tau, smax);
    const auto fine = engine_count_statistics(model, field, psi0, t, tau / 2, smax);
    mc.tau = tau;
    double coarse_mass = 0.0;
    for (std::size_t s = 2; s <= smax; ++s) {
        const double pc = coarse.front().probability_by_count[s], pf = fine.front().probability_by_count[s];
        mc.probabilities[s] = 2 * pf - pc;
        mc.mass += mc.probabilities[s];
        coarse_mass += pc;
        COperator r = fine.front().rho_by_count[s];
        r *= 2.0;
        r -= coarse.front().rho_by_count[s];
        mc.rho += r;
    }
    mc.error = std::abs(mc.mass - coarse_mass) / 2;
    return mc;
}

}  // namespace

std::vector<CountResolvedState> engine_count_statistics(const SystemModel& model, const ContinuousField& field,
                                                        const CVector& psi0, double t, double tau, std::size_t s_max,
                                                        EngineMode mode) {
    const double t0 = field.t0();
    if (!(t > t0) || !(tau > 0)) throw InvalidInput("engine statistics need t > t0 and tau > 0");
    const auto mt = static_cast<std::size_t>(std::max<long long>(1, std::llround((t - t0) / tau)));
    const double step = (t - t0) / static_cast<double>(mt);
    const double tail = std::max(0.0, field.support_end() - t);
    const std::size_t m = mt + static_cast<std::size_t>(std::ceil(tail / step));
    const TimeGrid g = TimeGrid::from_step(t0, step, m);
    std::vector<cplx> xs(m), ps(m);
    for (std::size_t k = 0; k < m; ++k) {
        xs[k] = field.xi(g.time(k));
        ps[k] = field.phi(g.time(k));
    }
    const PhotonProfile xi = PhotonProfile::normalized(g, xs), phi = PhotonProfile::normalized(g, ps);
    const bool uni = field.mode() == ChannelMode::unidirectional;
    const FieldScenarios fs = uni ? FieldScenarios::separable_uni(xi, phi) : FieldScenarios::separable_bi(xi, phi);
    const InteractionBlocks blocks = mode == EngineMode::exact
                                         ? exact_blocks(model, step, 2)
                                         : (uni ? truncated_blocks_uni(model, step) : truncated_blocks_bi(model, step));
    return exhaustive_statistics(fs, blocks, psi0, s_max, {mt}, mode);
}

FieldScenarios discretize(const ContinuousField& field, const TimeGrid& g) {
    std::vector<cplx> xs(g.bins()), ps(g.bins());
    for (std::size_t k = 0; k < g.bins(); ++k) {
        const double s = g.time(k) + g.tau() / 2;
        xs[k] = field.xi(s);
        ps[k] = field.phi(s);
    }
    const PhotonProfile xi = PhotonProfile::normalized(g, xs), phi = PhotonProfile::normalized(g, ps);
    return field.mode() == ChannelMode::unidirectional ? FieldScenarios::separable_uni(xi, phi)
                                                       : FieldScenarios::separable_bi(xi, phi);
}

double CountDistribution::completeness_defect() const {
    return std::abs(1.0 - (p0 + p1 + multi_count_mass));
}

CountDistribution count_distribution(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                     double t, const CountingOptions& opt) {
    const double t0 = field.t0();
    if (!(t >= t0)) throw InvalidInput("count distribution needs t >= t0");
    CountDistribution cd;
    cd.t = t;
    const std::size_t smax = std::max<std::size_t>(opt.s_max, 1);
    cd.probabilities.assign(smax + 1, 0.0);
    if (t == t0) {
        cd.p0 = 1.0;
        cd.probabilities[0] = 1.0;
        cd.p1_by_detector.assign(detectors_for(field).size(), 0.0);
        return cd;
    }
    const std::size_t n = panels_for(model, t - t0, opt);
    auto run = [&](std::size_t panels, std::vector<double>& per_det) {
        const auto oc = integrate_one_count(model, field, psi0, QuadratureGrid(t0, t, panels, opt.rule), false);
        const auto w = quadrature_weights(panels, (t - t0) / static_cast<double>(panels), opt.rule);
        per_det.clear();
        for (const auto& dens : oc.density) {
            double s = 0.0;
            for (std::size_t k = 0; k < dens.size(); ++k) s += w[k] * dens[k];
            per_det.push_back(s);
        }
        return oc.p0;
    };
    cd.p0 = run(n, cd.p1_by_detector);
    for (double v : cd.p1_by_detector) cd.p1 += v;
    std::vector<double> half;
    const double p0h = run(std::max<std::size_t>(2, n / 2 + (n / 2) % 2), half);
    double p1h = 0.0;
    for (double v : half) p1h += v;
    cd.quadrature_error = std::abs((cd.p0 + cd.p1) - (p0h + p1h));
    cd.probabilities[0] = cd.p0;
    cd.probabilities[1] = cd.p1;
    if (opt.multi_count && smax >= 2) {
        const auto mc = engine_multi_count(model, field, psi0, t, opt);
        for (std::size_t s = 2; s <= smax; ++s) cd.probabilities[s] = mc.probabilities[s];
        cd.multi_count_mass = mc.mass;
        cd.multi_count_error = mc.error;
        cd.engine_tau = mc.tau;
    }
    return cd;
}

AprioriQuadrature apriori_state_quadrature(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                           double t, const CountingOptions& opt) {
    const double t0 = field.t0();
    if (!(t >= t0)) throw InvalidInput("a priori state needs t >= t0");
    AprioriQuadrature a;
    if (t == t0) {
        a.sigma = COperator::outer(psi0, psi0);
        return a;
    }
    const std::size_t n = panels_for(model, t - t0, opt);
    const auto oc = integrate_one_count(model, field, psi0, QuadratureGrid(t0, t, n, opt.rule), true);
    a.sigma = oc.rho0;
    for (const auto& r : oc.rho_integral) a.sigma += r;
    if (opt.multi_count) {
        const auto mc = engine_multi_count(model, field, psi0, t, opt);
        a.sigma += mc.rho;
        a.remainder_trace = mc.mass;
        a.remainder_error = mc.error;
    }
    return a;
}

OneCountDensity one_count_density(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                  const QuadratureGrid& grid) {
    auto oc = integrate_one_count(model, field, psi0, grid, false);
    return {std::move(oc.t1), std::move(oc.density)};
}

void write_curve_csv(std::ostream& os, const std::string& x_name, const std::vector<std::string>& y_names,
                     const std::vector<double>& x, const std::vector<std::vector<double>>& y) {
    if (y.size() != y_names.size()) throw InvalidInput("curve csv: column count mismatch");
    os << x_name;
    for (const auto& n : y_names) os << ',' << n;
    os << '\n';
    for (std::size_t k = 0; k < x.size(); ++k) {
        os << fmt17(x[k]);
        for (const auto& col : y) os << ',' << fmt17(col.at(k));
        os << '\n';
    }
}

void write_matrix_csv(std::ostream& os, const COperator& m) {
    os << "row,col,re,im\n";
    for (std::size_t r = 0; r < m.dim(); ++r)
        for (std::size_t c = 0; c < m.dim(); ++c)
            os << r << ',' << c << ',' << fmt17(m(r, c).real()) << ',' << fmt17(m(r, c).imag()) << '\n';
}

}  // namespace twophoton
