#include "twophoton/tpa.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "twophoton/format.hpp"
#include "twophoton/quadrature.hpp"

namespace twophoton {

void LadderAtom::validate() const {
    if (!(gamma_e > 0) || !(gamma_f > 0)) throw InvalidInput("ladder atom: rates must be positive");
    if (!std::isfinite(omega_eg) || !std::isfinite(omega_fe)) throw InvalidInput("ladder atom: non-finite frequency");
}

SystemModel ladder_model(const LadderAtom& atom, ChannelMode mode) {
    atom.validate();
    COperator h = COperator::diagonal({-atom.omega_eg, 0.0, atom.omega_fe});
    COperator ge(3), ef(3);
    ge(0, 1) = std::sqrt(atom.gamma_e);
    ef(1, 2) = std::sqrt(atom.gamma_f);
    if (mode == ChannelMode::unidirectional) return SystemModel(h, {ge + ef});
    return SystemModel(h, {ge, ef});
}

namespace {

void check_window(double t0, double t, std::size_t panels) {
    if (!(t >= t0)) throw InvalidInput("absorption probability needs t >= t0");
    if (panels < 2) throw InvalidInput("absorption probability needs at least two panels");
}

// Inner integrals J(s') = int_{t0}^{s'} exp(-Ge (s' - s)/2) exp(i w_eg s) f(s) ds on all nodes.
std::vector<cplx> inner_cumulative(const LadderAtom& a, const std::vector<cplx>& f, double t0, double h) {
    std::vector<cplx> g(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double s = t0 + static_cast<double>(k) * h;
        g[k] = std::polar(1.0, a.omega_eg * s) * f[k];
    }
    const StepPropagators<cplx> p{std::exp(-a.gamma_e * h / 2), std::exp(-a.gamma_e * h), std::exp(a.gamma_e * h / 2),
                                  h};
    return propagated_integral(p, cplx{}, g);
}

// exp(-Gf (t - s')/2) exp(i w_fe s')
cplx outer_kernel(const LadderAtom& a, double t, double s) {
    return std::exp(-a.gamma_f * (t - s) / 2) * std::polar(1.0, a.omega_fe * s);
}

std::vector<cplx> sample(const Profile& f, double t0, double h, std::size_t n) {
    std::vector<cplx> v(n + 1);
    for (std::size_t k = 0; k <= n; ++k) v[k] = f(t0 + static_cast<double>(k) * h);
    return v;
}

// I = int ds' K_out(s') int_{t0}^{s'} ds K_in(s', s) G(k', k) on the node grid.
template <class G>
cplx ordered_integral(const LadderAtom& a, double t0, double t, std::size_t n, G&& g) {
    const double h = (t - t0) / static_cast<double>(n);
    std::vector<double> decay(n + 1);
    std::vector<cplx> phase(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        decay[k] = std::exp(-a.gamma_e * h * static_cast<double>(k) / 2);
        phase[k] = std::polar(1.0, a.omega_eg * (t0 + static_cast<double>(k) * h));
    }
    const auto outer = quadrature_weights(n, h);
    cplx total{};
    for (std::size_t kp = 1; kp <= n; ++kp) {
        const auto w = quadrature_weights(kp, h);
        cplx inner{};
        for (std::size_t k = 0; k <= kp; ++k) inner += w[k] * decay[kp - k] * phase[k] * g(kp, k);
        total += outer[kp] * outer_kernel(a, t, t0 + static_cast<double>(kp) * h) * inner;
    }
    return total;
}

}  // namespace

double p_f_bi_separable(const LadderAtom& atom, const Profile& xi, const Profile& phi, double t0, double t,
                        std::size_t panels) {
    atom.validate();
    check_window(t0, t, panels);
    if (t == t0) return 0.0;
    const double h = (t - t0) / static_cast<double>(panels);
    const auto xs = sample(xi, t0, h, panels), ps = sample(phi, t0, h, panels);
    const auto jx = inner_cumulative(atom, xs, t0, h);
    std::vector<cplx> g(panels + 1);
    for (std::size_t k = 0; k <= panels; ++k) g[k] = outer_kernel(atom, t, t0 + static_cast<double>(k) * h) * ps[k] * jx[k];
    const cplx i = weighted_sum(quadrature_weights(panels, h), g);
    return atom.gamma_e * atom.gamma_f * std::norm(i);
}

double p_f_uni_separable(const LadderAtom& atom, const Profile& xi, const Profile& phi, double n_factor, double t0,
                         double t, std::size_t panels) {
    atom.validate();
    check_window(t0, t, panels);
    if (!(n_factor > 0)) throw InvalidInput("normalization factor must be positive");
    if (t == t0) return 0.0;
    const double h = (t - t0) / static_cast<double>(panels);
    const auto xs = sample(xi, t0, h, panels), ps = sample(phi, t0, h, panels);
    const auto jx = inner_cumulative(atom, xs, t0, h), jp = inner_cumulative(atom, ps, t0, h);
    std::vector<cplx> g(panels + 1);
    for (std::size_t k = 0; k <= panels; ++k)
        g[k] = outer_kernel(atom, t, t0 + static_cast<double>(k) * h) * (ps[k] * jx[k] + xs[k] * jp[k]);
    const cplx i = weighted_sum(quadrature_weights(panels, h), g);
    return atom.gamma_e * atom.gamma_f * std::norm(i) / n_factor;
}

double p_f_bi_general(const LadderAtom& atom, const JointAmplitude& phi, double t0, double t, std::size_t panels,
                      double norm) {
    atom.validate();
    check_window(t0, t, panels);
    if (!(norm > 0)) throw InvalidInput("amplitude norm must be positive");
    if (t == t0) return 0.0;
    const double h = (t - t0) / static_cast<double>(panels);
    auto node = [&](std::size_t k) { return t0 + static_cast<double>(k) * h; };
    const cplx i = ordered_integral(atom, t0, t, panels, [&](std::size_t kp, std::size_t k) { return phi(node(kp), node(k)); });
    return atom.gamma_e * atom.gamma_f * std::norm(i) / norm;
}

double p_f_uni_general(const LadderAtom& atom, const JointAmplitude& phi, double t0, double t, std::size_t panels,
                       double norm) {
    atom.validate();
    check_window(t0, t, panels);
    if (!(norm > 0)) throw InvalidInput("amplitude norm must be positive");
    if (t == t0) return 0.0;
    const double h = (t - t0) / static_cast<double>(panels);
    auto node = [&](std::size_t k) { return t0 + static_cast<double>(k) * h; };
    const cplx i = ordered_integral(atom, t0, t, panels, [&](std::size_t kp, std::size_t k) {
        return phi(node(kp), node(k)) + phi(node(k), node(kp));
    });
    return atom.gamma_e * atom.gamma_f * std::norm(i) / norm;
}

namespace {

struct SidedSamples {
    const TwoPhotonAmplitude& a;
    std::size_t m;
    // Phi(k2, k1) with k1 <= k2 (diagonal sample is the limit from t1 < t2).
    cplx lower(std::size_t k2, std::size_t k1) const { return a(k2, k1); }
    // Phi(k2, k1) with k1 >= k2; the diagonal value is extrapolated from k1 > k2.
    cplx upper(std::size_t k2, std::size_t k1) const {
        if (k1 != k2) return a(k2, k1);
        if (k2 + 3 < m) return 3.0 * a(k2, k2 + 1) - 3.0 * a(k2, k2 + 2) + a(k2, k2 + 3);
        if (k2 + 2 < m) return 2.0 * a(k2, k2 + 1) - a(k2, k2 + 2);
        if (k2 + 1 < m) return a(k2, k2 + 1);
        return a(k2, k2);
    }
};

}  // namespace

double quadrature_norm(const TwoPhotonAmplitude& phi) {
    const std::size_t m = phi.bins();
    const double h = phi.grid().tau();
    if (m < 3) throw InvalidInput("quadrature norm needs at least three samples per axis");
    const SidedSamples s{phi, m};
    const auto outer = quadrature_weights(m - 1, h);
    double total = 0.0;
    for (std::size_t k2 = 0; k2 < m; ++k2) {
        double row = 0.0;
        const auto wl = quadrature_weights(k2, h);
        if (phi.mode() == ChannelMode::unidirectional) {
            // int over the square of |Phi|^2 + conj(Phi(t1,t2)) Phi(t2,t1) = int_{t1<t2} |Phi(t2,t1) + Phi(t1,t2)|^2
            for (std::size_t k1 = 0; k1 <= k2; ++k1) row += wl[k1] * std::norm(s.lower(k2, k1) + s.upper(k1, k2));
        } else {
            const auto wu = quadrature_weights(m - 1 - k2, h);
            for (std::size_t k1 = 0; k1 <= k2; ++k1) row += wl[k1] * std::norm(s.lower(k2, k1));
            for (std::size_t k1 = k2; k1 < m; ++k1) row += wu[k1 - k2] * std::norm(s.upper(k2, k1));
        }
        total += outer[k2] * row;
    }
    return total;
}

double p_f_general(const LadderAtom& atom, const TwoPhotonAmplitude& phi, double t) {
    atom.validate();
    const TimeGrid& g = phi.grid();
    const double pos = (t - g.t0()) / g.tau();
    const auto n = static_cast<long long>(std::llround(pos));
    if (n < 0 || static_cast<std::size_t>(n) >= phi.bins() || std::abs(pos - static_cast<double>(n)) > 1e-6)
        throw InvalidInput("evaluation time must coincide with a sample node");
    if (n < 2) throw InvalidInput("evaluation window needs at least two panels");
    const SidedSamples s{phi, phi.bins()};
    const auto nn = static_cast<std::size_t>(n);
    const double norm = quadrature_norm(phi);
    cplx i;
    if (phi.mode() == ChannelMode::unidirectional) {
        i = ordered_integral(atom, g.t0(), t, nn,
                             [&](std::size_t kp, std::size_t k) { return s.lower(kp, k) + s.upper(k, kp); });
    } else {
        i = ordered_integral(atom, g.t0(), t, nn, [&](std::size_t kp, std::size_t k) { return s.lower(kp, k); });
    }
    return atom.gamma_e * atom.gamma_f * std::norm(i) / norm;
}

double p_max(const LadderAtom& atom, double delta) {
    atom.validate();
    if (delta < 0 || !std::isfinite(delta)) throw InvalidInput("p_max: delta must be a finite non-negative time");
    const double ge = atom.gamma_e, gf = atom.gamma_f;
    if (std::abs(ge - gf) < 1e-6 * std::max(ge, gf)) {
        // Symmetric in (ge, gf), so the limit at the mean rate is accurate to second order.
        const double g = 0.5 * (ge + gf);
        return -std::expm1(-g * delta) - g * delta * std::exp(-g * delta);
    }
    // 1 - (gf e^{-ge d} - ge e^{-gf d}) / (gf - ge), rearranged to avoid cancellation.
    const double d = gf - ge;
    return -std::expm1(-ge * delta) + ge * std::exp(-ge * delta) * std::expm1(-d * delta) / d;
}

double n_opt_bracket(const LadderAtom& atom, double delta) { return p_max(atom, delta); }

double n_opt(const LadderAtom& atom, double t0, double t, ChannelMode mode) {
    const double base = std::exp(atom.gamma_f * t) * n_opt_bracket(atom, t - t0) / (atom.gamma_e * atom.gamma_f);
    return mode == ChannelMode::unidirectional ? 4.0 * base : base;
}

JointAmplitude optimal_amplitude_function(const LadderAtom& atom, double t0, double t, ChannelMode mode) {
    atom.validate();
    if (!(t > t0)) throw InvalidInput("optimal amplitude needs t > t0");
    const double p = p_max(atom, t - t0);
    const double c = std::sqrt(atom.gamma_e * atom.gamma_f / p) * (mode == ChannelMode::unidirectional ? 0.5 : 1.0);
    // exp(Gf t2/2 - Ge (t2 - t1)/2) / sqrt(N_opt) in relative form.
    auto branch = [atom, t, c](double t2, double t1) {
        return c * std::exp(-atom.gamma_f * (t - t2) / 2 - atom.gamma_e * (t2 - t1) / 2) *
               std::polar(1.0, -atom.omega_fe * t2 - atom.omega_eg * t1);
    };
    if (mode == ChannelMode::bidirectional) {
        return [=](double t2, double t1) -> cplx {
            if (t1 < t0 || t2 > t || t1 > t2) return {};
            return branch(t2, t1);
        };
    }
    return [=](double t2, double t1) -> cplx {
        if (t1 < t0 || t2 < t0 || t1 > t || t2 > t) return {};
        return t1 <= t2 ? branch(t2, t1) : branch(t1, t2);
    };
}

TwoPhotonAmplitude optimal_amplitude(const LadderAtom& atom, double t0, double t, ChannelMode mode,
                                     std::size_t panels) {
    if (panels < 2) throw InvalidInput("optimal amplitude needs at least two panels");
    const auto f = optimal_amplitude_function(atom, t0, t, mode);
    const double h = (t - t0) / static_cast<double>(panels);
    const TimeGrid g = TimeGrid::from_step(t0, h, panels + 1);
    TwoPhotonAmplitude a(g, mode);
    auto node = [&](std::size_t k) { return k == panels ? t : g.time(k); };
    for (std::size_t k2 = 0; k2 <= panels; ++k2)
        for (std::size_t k1 = 0; k1 <= panels; ++k1) a(k2, k1) = f(node(k2), node(k1));
    return a;
}

double optimal_window(const LadderAtom& atom, double eps) {
    atom.validate();
    if (!(eps > 0 && eps < 1)) throw InvalidInput("optimal window: eps must lie in (0, 1)");
    double lo = 0.0, hi = 1.0 / std::min(atom.gamma_e, atom.gamma_f);
    while (1.0 - p_max(atom, hi) > eps) hi *= 2;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (1.0 - p_max(atom, mid) > eps ? lo : hi) = mid;
    }
    return hi;
}

cplx optimal_amplitude_frequency(const LadderAtom& atom, double t, ChannelMode mode, double omega2, double omega1) {
    atom.validate();
    const double s = std::sqrt(atom.gamma_e * atom.gamma_f);
    const double ds = omega1 + omega2 - atom.omega_fg();
    const cplx phase = std::polar(1.0, ds * t);
    const cplx dsum(atom.gamma_f / 2, ds);
    const cplx d1(atom.gamma_e / 2, omega1 - atom.omega_eg);
    if (mode == ChannelMode::bidirectional) return s * phase / (2 * std::numbers::pi * d1 * dsum);
    const cplx d2(atom.gamma_e / 2, omega2 - atom.omega_eg);
    return s * phase / (4 * std::numbers::pi * dsum) * (1.0 / d1 + 1.0 / d2);
}

cplx optimal_amplitude_fourier(const LadderAtom& atom, double t, ChannelMode mode, double window, std::size_t panels,
                               double omega2, double omega1) {
    atom.validate();
    if (!(window > 0) || panels < 2) throw InvalidInput("fourier quadrature needs a positive window and two panels");
    if (mode == ChannelMode::unidirectional) {
        return 0.5 * (optimal_amplitude_fourier(atom, t, ChannelMode::bidirectional, window, panels, omega2, omega1) +
                      optimal_amplitude_fourier(atom, t, ChannelMode::bidirectional, window, panels, omega1, omega2));
    }
    // sqrt(GeGf) exp(-Gf(t-t2)/2 - Ge(t2-t1)/2) exp(-i w_fe t2 - i w_eg t1) on t1 < t2 < t, times exp(i(w2 t2 + w1 t1)).
    const double t0 = t - window, h = window / static_cast<double>(panels);
    std::vector<cplx> f(panels + 1);
    for (std::size_t k = 0; k <= panels; ++k) {
        const double s = t0 + static_cast<double>(k) * h;
        f[k] = std::polar(1.0, (omega1 - atom.omega_eg) * s);
    }
    const StepPropagators<cplx> p{std::exp(-atom.gamma_e * h / 2), std::exp(-atom.gamma_e * h),
                                  std::exp(atom.gamma_e * h / 2), h};
    const auto j = propagated_integral(p, cplx{}, f);
    std::vector<cplx> g(panels + 1);
    for (std::size_t k = 0; k <= panels; ++k) {
        const double s = t0 + static_cast<double>(k) * h;
        g[k] = std::exp(-atom.gamma_f * (t - s) / 2) * std::polar(1.0, (omega2 - atom.omega_fe) * s) * j[k];
    }
    const double c = std::sqrt(atom.gamma_e * atom.gamma_f) / (2 * std::numbers::pi);
    return c * weighted_sum(quadrature_weights(panels, h), g);
}

double resonance_centre(const LadderAtom& atom, double step) {
    if (!(step > 0)) throw InvalidInput("resonance axis needs a positive step");
    return atom.omega_eg + step * std::round((atom.omega_fe - atom.omega_eg) / 2 / step);
}

DensityMap density_map(const std::vector<double>& axis, const std::function<double(double y, double x)>& f) {
    const std::size_t n = axis.size();
    if (n < 3) throw InvalidInput("density map needs at least three points per axis");
    DensityMap m;
    m.axis = axis;
    m.density.resize(n * n);
    for (std::size_t i2 = 0; i2 < n; ++i2)
        for (std::size_t i1 = 0; i1 < n; ++i1) m.density[i2 * n + i1] = f(axis[i2], axis[i1]);
    const double h = (axis.back() - axis.front()) / static_cast<double>(n - 1);
    const auto w = quadrature_weights(n - 1, h);
    m.marginal1.assign(n, 0.0);
    m.marginal2.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            m.marginal1[i] += w[j] * m.density[j * n + i];
            m.marginal2[i] += w[j] * m.density[i * n + j];
        }
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass += w[i] * m.marginal1[i];
    if (!(mass > 0)) throw NumericError("density map has zero mass");
    m.mass = mass;
    for (auto& v : m.density) v /= mass;
    for (auto& v : m.marginal1) v /= mass;
    for (auto& v : m.marginal2) v /= mass;
    return m;
}

namespace {

std::vector<double> uniform_axis(double lo, double hi, std::size_t points) {
    if (points < 3) throw InvalidInput("axis needs at least three points");
    std::vector<double> a(points);
    const double h = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) a[k] = k + 1 == points ? hi : lo + static_cast<double>(k) * h;
    return a;
}

}  // namespace

DensityMap time_density_map(const LadderAtom& atom, double t, double window, ChannelMode mode, std::size_t points) {
    const auto f = optimal_amplitude_function(atom, t - window, t, mode);
    return density_map(uniform_axis(t - window, t, points), [&](double y, double x) { return std::norm(f(y, x)); });
}

DensityMap frequency_density_map(const LadderAtom& atom, double t, ChannelMode mode, double centre, double half_width,
                                 std::size_t points) {
    return density_map(uniform_axis(centre - half_width, centre + half_width, points), [&](double y, double x) {
        return std::norm(optimal_amplitude_frequency(atom, t, mode, y, x));
    });
}

std::vector<std::size_t> local_maxima(const std::vector<double>& v) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const bool left = k == 0 || v[k] > v[k - 1];
        const bool right = k + 1 == v.size() || v[k] >= v[k + 1];
        if (left && right) out.push_back(k);
    }
    return out;
}

void write_density_csv(std::ostream& os, const DensityMap& m, const char* x_name, const char* y_name) {
    os << y_name << ',' << x_name << ",density\n";
    const std::size_t n = m.axis.size();
    for (std::size_t i2 = 0; i2 < n; ++i2)
        for (std::size_t i1 = 0; i1 < n; ++i1)
            os << fmt17(m.axis[i2]) << ',' << fmt17(m.axis[i1]) << ',' << fmt17(m.at(i2, i1)) << '\n';
}

void write_marginals_csv(std::ostream& os, const DensityMap& m, const char* axis_name) {
    os << axis_name << ",marginal1,marginal2\n";
    for (std::size_t i = 0; i < m.axis.size(); ++i)
        os << fmt17(m.axis[i]) << ',' << fmt17(m.marginal1[i]) << ',' << fmt17(m.marginal2[i]) << '\n';
}

}  // namespace twophoton
