#include "twophoton/oracle.hpp"

#include <cmath>
#include <functional>
#include <ostream>

#include "twophoton/format.hpp"

namespace twophoton::oracle {

std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t factor, std::size_t cap) {
    std::size_t v = factor;
    for (std::size_t k = 0; k < exp; ++k) {
        if (v > cap / base) throw SizingError("oracle state exceeds the dimension cap");
        v *= base;
    }
    if (v > cap) throw SizingError("oracle state exceeds the dimension cap");
    return v;
}

namespace {

std::size_t local_dim(std::size_t channels, std::size_t n_max) {
    return channels == 1 ? n_max + 1 : (n_max + 1) * (n_max + 1);
}

// Weight of site k in the field index of bins first..M-1 (site `first` most significant).
std::vector<std::size_t> site_strides(std::size_t sites, std::size_t f) {
    std::vector<std::size_t> s(sites, 1);
    for (std::size_t k = sites; k-- > 1;) s[k - 1] = s[k] * f;
    return s;
}

}  // namespace

CVector vacuum_field(std::size_t sites, std::size_t n_max, std::size_t channels) {
    CVector v(checked_power(local_dim(channels, n_max), sites, 1, DEFAULT_STATE_CAP));
    v[0] = 1.0;
    return v;
}

CVector two_photon_field(const TwoPhotonAmplitude& phi, std::size_t first_bin, std::size_t n_max, std::size_t cap) {
    const std::size_t m = phi.bins();
    if (first_bin > m) throw InvalidInput("first_bin beyond grid");
    const std::size_t ch = phi.mode() == ChannelMode::unidirectional ? 1 : 2;
    const std::size_t lv = n_max + 1, f = local_dim(ch, n_max), sites = m - first_bin;
    CVector v(checked_power(f, sites, 1, cap));
    const auto stride = site_strides(sites, f);
    const double tau = phi.grid().tau();
    for (std::size_t k2 = first_bin; k2 < m; ++k2)
        for (std::size_t k1 = first_bin; k1 < m; ++k1) {
            const cplx c = tau * phi(k2, k1);
            if (c == cplx{}) continue;
            const std::size_t s2 = stride[k2 - first_bin], s1 = stride[k1 - first_bin];
            if (ch == 1) {
                if (k1 != k2) {
                    v[s1 + s2] += c;
                } else if (n_max >= 2) {
                    v[2 * s1] += std::sqrt(2.0) * c;
                }
            } else {
                // channel-1 photon in bin k1 (local n1 = 1), channel-2 photon in bin k2 (local n2 = 1)
                if (k1 != k2) {
                    v[lv * s1 + s2] += c;
                } else {
                    v[(lv + 1) * s1] += c;
                }
            }
        }
    return v;
}

CVector single_photon_field(const PhotonProfile& xi, std::size_t first_bin, std::size_t n_max, std::size_t channels,
                            std::size_t channel, std::size_t cap) {
    const std::size_t m = xi.bins();
    if (first_bin > m) throw InvalidInput("first_bin beyond grid");
    const std::size_t f = local_dim(channels, n_max), sites = m - first_bin;
    CVector v(checked_power(f, sites, 1, cap));
    const auto stride = site_strides(sites, f);
    const std::size_t local_one = channels == 1 ? 1 : (channel == 0 ? n_max + 1 : 1);
    const double st = std::sqrt(xi.grid().tau());
    for (std::size_t k = first_bin; k < m; ++k) v[local_one * stride[k - first_bin]] += st * xi[k];
    return v;
}

CompositeState build_initial_state(const TwoPhotonAmplitude& phi, const CVector& psi0, std::size_t n_max,
                                   std::size_t cap) {
    if (n_max < 1) throw InvalidInput("n_max must be at least 1");
    const std::size_t ch = phi.mode() == ChannelMode::unidirectional ? 1 : 2;
    checked_power(local_dim(ch, n_max), phi.bins(), psi0.dim(), cap);
    CVector field = two_photon_field(phi, 0, n_max, cap);
    const double fn = field.norm();
    if (!(fn > 0)) throw InvalidInput("two-photon field has zero norm");
    field *= 1.0 / fn;
    const double pn = psi0.norm();
    if (!(pn > 0)) throw InvalidInput("initial system vector has zero norm");
    return {kron(field, (1.0 / pn) * psi0), phi.bins(), ch, n_max, psi0.dim()};
}

CompositeState build_initial_state(const PhotonProfile& xi, const PhotonProfile& phi, ChannelMode mode,
                                   const CVector& psi0, std::size_t n_max, std::size_t cap) {
    if (!(xi.grid() == phi.grid())) throw InvalidInput("grid mismatch");
    TwoPhotonAmplitude a(xi.grid(), mode);
    for (std::size_t k2 = 0; k2 < a.bins(); ++k2)
        for (std::size_t k1 = 0; k1 < a.bins(); ++k1) a(k2, k1) = phi[k2] * xi[k1];
    return build_initial_state(a, psi0, n_max, cap);
}

CompositeState build_vacuum_state(std::size_t sites, std::size_t channels, const CVector& psi0, std::size_t n_max) {
    return {kron(vacuum_field(sites, n_max, channels), psi0), sites, channels, n_max, psi0.dim()};
}

double OutcomeTable::total_probability() const {
    double s = 0.0;
    for (const auto& [k, e] : entries) s += e.probability;
    return s;
}

namespace {

// Applies the bin unitary to the leading site and splits by that site's outcome.
std::vector<CVector> interact_and_split(const COperator& u, const CVector& v, std::size_t f, std::size_t d) {
    const std::size_t rest = v.dim() / (f * d);
    std::vector<CVector> out(f, CVector(rest * d));
    std::vector<cplx> x(f * d), y(f * d);
    const std::size_t n = f * d;
    for (std::size_t q = 0; q < rest; ++q) {
        bool any = false;
        for (std::size_t i = 0; i < f; ++i)
            for (std::size_t s = 0; s < d; ++s) {
                x[i * d + s] = v[(i * rest + q) * d + s];
                any = any || x[i * d + s] != cplx{};
            }
        if (!any) continue;
        for (std::size_t r = 0; r < n; ++r) {
            cplx acc{};
            const cplx* row = u.data() + r * n;
            for (std::size_t c = 0; c < n; ++c) acc += row[c] * x[c];
            y[r] = acc;
        }
        for (std::size_t o = 0; o < f; ++o)
            for (std::size_t s = 0; s < d; ++s) out[o][q * d + s] = y[o * d + s];
    }
    return out;
}

}  // namespace

OutcomeTable enumerate_outcomes(const SystemModel& model, const CompositeState& state, double tau, double prune_eps) {
    if (model.channels() != state.channels) throw InvalidInput("model and state have different channel counts");
    if (model.dim() != state.system_dim) throw InvalidInput("model and state have different system dimensions");
    const COperator u = exact_unitary(model, tau, state.n_max);
    const std::size_t f = state.local_dim(), d = state.system_dim;
    OutcomeTable table;
    table.channels = state.channels;
    table.n_max = state.n_max;
    std::vector<std::size_t> seq;
    std::function<void(std::size_t, const CVector&)> rec = [&](std::size_t site, const CVector& v) {
        if (site == state.sites) {
            table.entries.emplace(seq, OutcomeEntry{v.norm2(), v});
            return;
        }
        auto parts = interact_and_split(u, v, f, d);
        for (std::size_t o = 0; o < f; ++o) {
            const double p = parts[o].norm2();
            if (p == 0.0) continue;
            if (p < prune_eps) {
                table.pruned_mass += p;
                continue;
            }
            seq.push_back(o);
            rec(site + 1, parts[o]);
            seq.pop_back();
        }
    };
    rec(0, state.amplitudes);
    return table;
}

CompositeState evolve_prefix(const SystemModel& model, const CompositeState& state, double tau,
                             const std::vector<std::size_t>& prefix) {
    if (prefix.size() > state.sites) throw InvalidInput("prefix longer than the number of bins");
    const COperator u = exact_unitary(model, tau, state.n_max);
    const std::size_t f = state.local_dim();
    CompositeState cur = state;
    for (auto o : prefix) {
        if (o >= f) throw InvalidInput("outcome index out of range");
        cur.amplitudes = interact_and_split(u, cur.amplitudes, f, state.system_dim)[o];
        --cur.sites;
    }
    return cur;
}

CVector project_field(const CompositeState& state, const CVector& field) {
    const std::size_t d = state.system_dim;
    if (field.dim() * d != state.amplitudes.dim()) throw InvalidInput("project_field: dimension mismatch");
    CVector out(d);
    for (std::size_t i = 0; i < field.dim(); ++i) {
        const cplx c = std::conj(field[i]);
        if (c == cplx{}) continue;
        for (std::size_t s = 0; s < d; ++s) out[s] += c * state.amplitudes[i * d + s];
    }
    return out;
}

std::string sequence_key(const std::vector<std::size_t>& seq, std::size_t channels, std::size_t levels) {
    std::string key;
    for (auto o : seq) {
        if (channels == 1) {
            key += std::to_string(o);
        } else {
            key += std::to_string(o / levels);
            key += std::to_string(o % levels);
        }
    }
    return key;
}

ComparisonReport compare_with_engine(const OutcomeTable& table, const std::map<std::string, double>& engine) {
    ComparisonReport rep;
    std::map<std::string, double> oracle;
    for (const auto& [seq, e] : table.entries) oracle[sequence_key(seq, table.channels, table.n_max + 1)] += e.probability;
    for (const auto& [key, p] : oracle) {
        auto it = engine.find(key);
        if (it == engine.end()) {
            rep.excluded_mass += p;
            continue;
        }
        rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(p - it->second));
        ++rep.compared;
    }
    for (const auto& [key, p] : engine) {
        if (oracle.count(key)) continue;
        // Sequences pruned or absent in the oracle count as deviations from zero.
        rep.engine_only_mass += p;
        rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(p));
    }
    return rep;
}

double fit_log2_slope(const std::vector<double>& taus, const std::vector<double>& errors) {
    if (taus.size() != errors.size() || taus.size() < 2) throw InvalidInput("slope fit needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0) || !(errors[i] > 0)) throw InvalidInput("slope fit needs positive values");
        const double x = std::log2(taus[i]), y = std::log2(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_outcome_csv(std::ostream& os, const OutcomeTable& table) {
    os << "sequence,probability\n";
    for (const auto& [seq, e] : table.entries)
        os << sequence_key(seq, table.channels, table.n_max + 1) << ',' << fmt17(e.probability) << '\n';
}

}  // namespace twophoton::oracle
