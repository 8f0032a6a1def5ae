#include "twophoton/engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace twophoton {

ConditionalVectors initial_vectors(const FieldScenarios& fs, const CVector& psi0) {
    ConditionalVectors cv;
    cv.v.assign(fs.labels(), CVector(psi0.dim()));
    for (auto l : fs.initial_labels()) cv.v[l] = psi0;
    return cv;
}

std::vector<std::size_t> allowed_outcomes(const InteractionBlocks& blocks, EngineMode mode) {
    std::vector<std::size_t> out;
    if (mode == EngineMode::exact) {
        for (std::size_t o = 0; o < blocks.count_states(); ++o) out.push_back(o);
    } else if (blocks.channels() == 1) {
        out = {0, 1};
    } else {
        out = {blocks.combine(0, 0), blocks.combine(1, 0), blocks.combine(0, 1)};
    }
    return out;
}

int outcome_count(const InteractionBlocks& blocks, std::size_t eta) {
    if (blocks.channels() == 1) return static_cast<int>(eta);
    return static_cast<int>(eta / blocks.levels() + eta % blocks.levels());
}

namespace {

bool transition_allowed(const Transition& t, const InteractionBlocks& blocks, EngineMode mode) {
    if (t.in1 >= blocks.levels() || t.in2 >= blocks.levels()) return false;
    if (mode == EngineMode::exact) return true;
    return t.in1 + t.in2 <= 1;
}

std::size_t input_index(const Transition& t, const InteractionBlocks& blocks) {
    return blocks.channels() == 1 ? t.in1 : blocks.combine(t.in1, t.in2);
}

void validate_outcome(const InteractionBlocks& blocks, std::size_t eta, EngineMode mode) {
    const auto ok = allowed_outcomes(blocks, mode);
    if (std::find(ok.begin(), ok.end(), eta) == ok.end()) throw InvalidInput("outcome not in the allowed alphabet");
}

}  // namespace

ConditionalVectors apply_step(const std::vector<Transition>& trans, const InteractionBlocks& blocks,
                              const ConditionalVectors& cv, std::size_t eta, EngineMode mode) {
    const std::size_t d = blocks.dim();
    ConditionalVectors out;
    out.v.assign(cv.v.size(), CVector(d));
    for (const auto& t : trans) {
        if (t.coeff == cplx{} || !transition_allowed(t, blocks, mode)) continue;
        const CVector& src = cv.v[t.from];
        if (src.is_zero()) continue;
        const COperator& v = blocks.at(eta, input_index(t, blocks));
        CVector& dst = out.v[t.to];
        for (std::size_t r = 0; r < d; ++r) {
            cplx s{};
            for (std::size_t c = 0; c < d; ++c) s += v(r, c) * src[c];
            dst[r] += t.coeff * s;
        }
    }
    return out;
}

ConditionalVectors step_uni(const ConditionalVectors& cv, const InteractionBlocks& blocks, cplx xi_j, cplx phi_j,
                            double n_factor, int eta) {
    if (blocks.channels() != 1) throw InvalidInput("step_uni: unidirectional blocks required");
    if (eta != 0 && eta != 1) throw InvalidInput("step_uni: outcome must be 0 or 1");
    if (cv.v.size() != 4) throw InvalidInput("step_uni: four scenario vectors required");
    return apply_step(uni_transitions(xi_j, phi_j, n_factor, blocks.tau()), blocks, cv, static_cast<std::size_t>(eta),
                      EngineMode::reduced);
}

ConditionalVectors step_bi(const ConditionalVectors& cv, const InteractionBlocks& blocks, cplx xi_j, cplx phi_j,
                           int eta1, int eta2) {
    if (blocks.channels() != 2) throw InvalidInput("step_bi: bidirectional blocks required");
    if (eta1 < 0 || eta2 < 0 || eta1 + eta2 > 1) throw InvalidInput("step_bi: outcome must be (0,0), (1,0) or (0,1)");
    if (cv.v.size() != 4) throw InvalidInput("step_bi: four scenario vectors required");
    return apply_step(bi_transitions(xi_j, phi_j, blocks.tau()), blocks, cv,
                      blocks.combine(static_cast<std::size_t>(eta1), static_cast<std::size_t>(eta2)),
                      EngineMode::reduced);
}

ConditionalVectors step_general(const FieldScenarios& fs, std::size_t j, const InteractionBlocks& blocks,
                                const ConditionalVectors& cv, std::size_t eta, EngineMode mode) {
    if ((fs.mode() == ChannelMode::unidirectional) != (blocks.channels() == 1))
        throw InvalidInput("field and blocks have different channel modes");
    if (mode == EngineMode::exact && blocks.order() != BlockOrder::exact)
        throw InvalidInput("exact engine mode requires exact blocks");
    validate_outcome(blocks, eta, mode);
    return apply_step(fs.transitions(j), blocks, cv, eta, mode);
}

double scenario_trace(const FieldScenarios& fs, std::size_t j, const ConditionalVectors& cv) {
    const auto& w = fs.weights();
    double tr = 0.0;
    for (const auto& g : fs.gram(j)) {
        if (g.value == cplx{}) continue;
        if (g.a == g.b) {
            tr += w[g.a] * w[g.a] * g.value.real() * cv.v[g.a].norm2();
        } else {
            tr += 2.0 * w[g.a] * w[g.b] * (g.value * dot(cv.v[g.a], cv.v[g.b])).real();
        }
    }
    return tr;
}

AposterioriState aposteriori_density(const FieldScenarios& fs, std::size_t j, const ConditionalVectors& cv) {
    const std::size_t d = cv.v.front().dim();
    const auto& w = fs.weights();
    COperator rho(d);
    for (const auto& g : fs.gram(j)) {
        if (g.value == cplx{}) continue;
        const CVector& x = cv.v[g.a];
        const CVector& y = cv.v[g.b];
        const double ww = w[g.a] * w[g.b];
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                if (g.a == g.b) {
                    rho(r, c) += ww * g.value * x[r] * std::conj(x[c]);
                } else {
                    // <e_a|e_b> |psi_b><psi_a| + h.c.
                    rho(r, c) += ww * (g.value * y[r] * std::conj(x[c]) + std::conj(g.value) * x[r] * std::conj(y[c]));
                }
            }
    }
    return {rho, rho.trace().real()};
}

JumpDistribution jump_probability(const FieldScenarios& fs, std::size_t j, const InteractionBlocks& blocks,
                                  const ConditionalVectors& cv, EngineMode mode) {
    if (j >= fs.bins()) throw InvalidInput("jump_probability: bin beyond grid");
    if (mode == EngineMode::exact && blocks.order() != BlockOrder::exact)
        throw InvalidInput("exact engine mode requires exact blocks");
    const double cur = scenario_trace(fs, j, cv);
    if (!(cur > 1e-150)) throw NumericError("dead trajectory");
    JumpDistribution jd;
    jd.outcomes = allowed_outcomes(blocks, mode);
    const auto trans = fs.transitions(j);
    double total = 0.0;
    for (auto eta : jd.outcomes) {
        jd.next.push_back(apply_step(trans, blocks, cv, eta, mode));
        const double p = std::max(0.0, scenario_trace(fs, j + 1, jd.next.back())) / cur;
        jd.probabilities.push_back(p);
        total += p;
    }
    jd.deficit = 1.0 - total;
    return jd;
}

std::string detector_name(Detector d) {
    switch (d) {
        case Detector::single: return "D";
        case Detector::right: return "R";
        case Detector::left: return "L";
    }
    return "?";
}

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(master ^ mix(index));
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void record_events(TrajectoryRecord& rec, const InteractionBlocks& blocks, std::size_t bin, std::size_t eta) {
    if (eta == 0) return;
    if (blocks.channels() == 1) {
        rec.events.push_back({bin, Detector::single, static_cast<int>(eta)});
        return;
    }
    const int n1 = static_cast<int>(eta / blocks.levels()), n2 = static_cast<int>(eta % blocks.levels());
    if (n1 > 0) rec.events.push_back({bin, Detector::right, n1});
    if (n2 > 0) rec.events.push_back({bin, Detector::left, n2});
}

}  // namespace

TrajectoryResult sample_trajectory(const FieldScenarios& fs, const InteractionBlocks& blocks, const CVector& psi0,
                                   std::uint64_t seed, const std::vector<std::size_t>& checkpoint_bins,
                                   EngineMode mode) {
    std::mt19937_64 rng(seed);
    TrajectoryResult res;
    res.record.grid = fs.grid();
    ConditionalVectors cv = initial_vectors(fs, psi0);
    const double t0 = scenario_trace(fs, 0, cv);
    if (!(t0 > 0)) throw InvalidInput("initial state has zero norm");
    for (auto& v : cv.v) v *= 1.0 / std::sqrt(t0);

    std::size_t next_cp = 0;
    auto take_checkpoints = [&](std::size_t j) {
        while (next_cp < checkpoint_bins.size() && checkpoint_bins[next_cp] == j) {
            res.checkpoints.push_back(aposteriori_density(fs, j, cv).rho);
            ++next_cp;
        }
    };
    take_checkpoints(0);
    for (std::size_t j = 0; j < fs.bins(); ++j) {
        JumpDistribution jd;
        try {
            jd = jump_probability(fs, j, blocks, cv, mode);
        } catch (const NumericError&) {
            res.record.dead = true;
            break;
        }
        double total = 0.0;
        for (double p : jd.probabilities) total += p;
        if (!(total > 1e-150)) {
            res.record.dead = true;
            break;
        }
        const double r = uniform01(rng) * total;
        std::size_t pick = 0;
        double acc = 0.0;
        for (; pick + 1 < jd.probabilities.size(); ++pick) {
            acc += jd.probabilities[pick];
            if (r < acc) break;
        }
        // Never pick a zero-probability branch because of rounding at the upper edge.
        while (jd.probabilities[pick] <= 0.0 && pick > 0) --pick;
        const double p = jd.probabilities[pick];
        res.record.weight *= p;
        record_events(res.record, blocks, j, jd.outcomes[pick]);
        cv = std::move(jd.next[pick]);
        for (auto& v : cv.v) v *= 1.0 / std::sqrt(p);
        take_checkpoints(j + 1);
    }
    res.final_vectors = std::move(cv);
    return res;
}

namespace {

struct Accumulator {
    std::vector<COperator> sum, sum_re2, sum_im2;
    std::vector<std::size_t> hist;
    std::size_t n = 0, dead = 0;
    double dead_weight = 0.0;

    Accumulator(std::size_t checkpoints, std::size_t d)
        : sum(checkpoints, COperator(d)), sum_re2(checkpoints, COperator(d)), sum_im2(checkpoints, COperator(d)) {}

    void add(const TrajectoryResult& tr) {
        if (tr.record.dead) {
            ++dead;
            dead_weight += tr.record.weight;
            return;
        }
        ++n;
        std::size_t counts = 0;
        for (const auto& e : tr.record.events) counts += static_cast<std::size_t>(e.count);
        if (hist.size() <= counts) hist.resize(counts + 1, 0);
        ++hist[counts];
        for (std::size_t c = 0; c < sum.size(); ++c) {
            const COperator& r = tr.checkpoints[c];
            sum[c] += r;
            for (std::size_t k = 0; k < r.dim() * r.dim(); ++k) {
                sum_re2[c].data()[k] += r.data()[k].real() * r.data()[k].real();
                sum_im2[c].data()[k] += r.data()[k].imag() * r.data()[k].imag();
            }
        }
    }

    void merge(const Accumulator& o) {
        for (std::size_t c = 0; c < sum.size(); ++c) {
            sum[c] += o.sum[c];
            sum_re2[c] += o.sum_re2[c];
            sum_im2[c] += o.sum_im2[c];
        }
        if (hist.size() < o.hist.size()) hist.resize(o.hist.size(), 0);
        for (std::size_t k = 0; k < o.hist.size(); ++k) hist[k] += o.hist[k];
        n += o.n;
        dead += o.dead;
        dead_weight += o.dead_weight;
    }
};

}  // namespace

MonteCarloEstimate apriori_monte_carlo(const FieldScenarios& fs, const InteractionBlocks& blocks, const CVector& psi0,
                                       const MonteCarloOptions& opt) {
    if (opt.n_traj < 1) throw InvalidInput("apriori_monte_carlo: n_traj must be at least 1");
    std::vector<std::size_t> cps = opt.checkpoint_bins.empty() ? std::vector<std::size_t>{fs.bins()}
                                                               : opt.checkpoint_bins;
    if (!std::is_sorted(cps.begin(), cps.end()) || cps.back() > fs.bins())
        throw InvalidInput("checkpoint bins must be sorted and within the grid");
    const std::size_t d = psi0.dim();

    // Fixed-size chunks reduced in index order keep the result independent of thread count.
    constexpr std::size_t chunk = 256;
    const std::size_t n_chunks = (opt.n_traj + chunk - 1) / chunk;
    std::vector<Accumulator> parts(n_chunks, Accumulator(cps.size(), d));
    std::vector<std::vector<TrajectoryRecord>> records(opt.on_record ? n_chunks : 0);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t lo = c * chunk, hi = std::min(opt.n_traj, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) {
            TrajectoryResult tr = sample_trajectory(fs, blocks, psi0, trajectory_seed(opt.seed, i), cps, opt.mode);
            if (tr.record.dead) tr.checkpoints.clear();
            parts[c].add(tr);
            if (opt.on_record) records[c].push_back(std::move(tr.record));
        }
    };
    const std::size_t nt = std::max<std::size_t>(1, std::min(opt.threads, n_chunks));
    if (nt == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nt; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t c = t; c < n_chunks; c += nt) run_chunk(c);
            });
        for (auto& th : pool) th.join();
    }

    Accumulator total(cps.size(), d);
    for (const auto& p : parts) total.merge(p);
    if (opt.on_record) {
        std::size_t idx = 0;
        for (const auto& chunk_records : records)
            for (const auto& r : chunk_records) opt.on_record(idx++, r);
    }

    MonteCarloEstimate est;
    est.n_traj = total.n;
    est.n_dead = total.dead;
    est.dead_weight = total.dead_weight;
    est.count_histogram = total.hist;
    const double n = static_cast<double>(std::max<std::size_t>(total.n, 1));
    for (std::size_t c = 0; c < cps.size(); ++c) {
        COperator mean = (1.0 / n) * total.sum[c];
        COperator se(d);
        for (std::size_t k = 0; k < d * d; ++k) {
            const cplx m = mean.data()[k];
            const double vr = std::max(0.0, total.sum_re2[c].data()[k].real() / n - m.real() * m.real());
            const double vi = std::max(0.0, total.sum_im2[c].data()[k].real() / n - m.imag() * m.imag());
            const double denom = std::max(1.0, n - 1.0);
            se.data()[k] = cplx(std::sqrt(vr / denom), std::sqrt(vi / denom));
        }
        est.sigma.push_back(std::move(mean));
        est.std_error.push_back(std::move(se));
    }
    return est;
}

namespace {

// Dense block operator K^eta over (label, system) for one bin.
COperator step_operator(const std::vector<Transition>& trans, const InteractionBlocks& blocks, std::size_t labels,
                        std::size_t eta, EngineMode mode) {
    const std::size_t d = blocks.dim();
    COperator k(labels * d);
    for (const auto& t : trans) {
        if (t.coeff == cplx{} || !transition_allowed(t, blocks, mode)) continue;
        const COperator& v = blocks.at(eta, input_index(t, blocks));
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) k(t.to * d + r, t.from * d + c) += t.coeff * v(r, c);
    }
    return k;
}

COperator assemble_rho(const FieldScenarios& fs, std::size_t j, const COperator& pair, std::size_t d) {
    const auto& w = fs.weights();
    COperator rho(d);
    for (const auto& g : fs.gram(j)) {
        if (g.value == cplx{}) continue;
        const double ww = w[g.a] * w[g.b];
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                if (g.a == g.b) {
                    rho(r, c) += ww * g.value * pair(g.a * d + r, g.a * d + c);
                } else {
                    // R_ab = sum |psi_a><psi_b|
                    rho(r, c) += ww * (std::conj(g.value) * pair(g.a * d + r, g.b * d + c) +
                                       g.value * pair(g.b * d + r, g.a * d + c));
                }
            }
    }
    return rho;
}

}  // namespace

std::vector<CountResolvedState> exhaustive_statistics(const FieldScenarios& fs, const InteractionBlocks& blocks,
                                                      const CVector& psi0, std::size_t s_max,
                                                      const std::vector<std::size_t>& checkpoint_bins,
                                                      EngineMode mode) {
    if (mode == EngineMode::exact && blocks.order() != BlockOrder::exact)
        throw InvalidInput("exact engine mode requires exact blocks");
    if (!std::is_sorted(checkpoint_bins.begin(), checkpoint_bins.end()) ||
        (!checkpoint_bins.empty() && checkpoint_bins.back() > fs.bins()))
        throw InvalidInput("checkpoint bins must be sorted and within the grid");
    const std::size_t d = psi0.dim(), nl = fs.labels();
    const std::size_t buckets = s_max + 1;
    const ConditionalVectors cv0 = initial_vectors(fs, psi0);
    CVector stacked(nl * d);
    for (std::size_t a = 0; a < nl; ++a)
        for (std::size_t r = 0; r < d; ++r) stacked[a * d + r] = cv0.v[a][r];

    std::vector<COperator> pair(buckets, COperator(nl * d));
    pair[0] = COperator::outer(stacked, stacked);
    std::vector<bool> live(buckets, false);
    live[0] = true;

    std::vector<CountResolvedState> out;
    std::size_t next_cp = 0;
    auto take = [&](std::size_t j) {
        while (next_cp < checkpoint_bins.size() && checkpoint_bins[next_cp] == j) {
            CountResolvedState st{j, {}, {}};
            for (std::size_t s = 0; s < buckets; ++s) {
                COperator rho = live[s] ? assemble_rho(fs, j, pair[s], d) : COperator(d);
                st.probability_by_count.push_back(rho.trace().real());
                st.rho_by_count.push_back(std::move(rho));
            }
            out.push_back(std::move(st));
            ++next_cp;
        }
    };
    take(0);
    const auto outcomes = allowed_outcomes(blocks, mode);
    for (std::size_t j = 0; j < fs.bins(); ++j) {
        const auto trans = fs.transitions(j);
        std::vector<COperator> next(buckets, COperator(nl * d));
        std::vector<bool> next_live(buckets, false);
        for (auto eta : outcomes) {
            const COperator k = step_operator(trans, blocks, nl, eta, mode);
            const COperator kd = k.adjoint();
            const std::size_t inc = static_cast<std::size_t>(outcome_count(blocks, eta));
            for (std::size_t s = 0; s < buckets; ++s) {
                if (!live[s]) continue;
                const std::size_t t = std::min(s + inc, s_max);
                next[t] += k * pair[s] * kd;
                next_live[t] = true;
            }
        }
        pair = std::move(next);
        live = std::move(next_live);
        take(j + 1);
    }
    return out;
}

std::vector<std::pair<OutcomeSequence, double>> enumerate_sequences(const FieldScenarios& fs,
                                                                    const InteractionBlocks& blocks,
                                                                    const CVector& psi0, EngineMode mode) {
    if (mode == EngineMode::exact && blocks.order() != BlockOrder::exact)
        throw InvalidInput("exact engine mode requires exact blocks");
    const auto outcomes = allowed_outcomes(blocks, mode);
    std::vector<std::pair<OutcomeSequence, double>> out;
    OutcomeSequence seq;
    std::vector<std::vector<Transition>> trans(fs.bins());
    for (std::size_t j = 0; j < fs.bins(); ++j) trans[j] = fs.transitions(j);

    std::function<void(std::size_t, const ConditionalVectors&)> rec = [&](std::size_t j, const ConditionalVectors& cv) {
        if (j == fs.bins()) {
            out.emplace_back(seq, scenario_trace(fs, j, cv));
            return;
        }
        for (auto eta : outcomes) {
            seq.push_back(eta);
            rec(j + 1, apply_step(trans[j], blocks, cv, eta, mode));
            seq.pop_back();
        }
    };
    rec(0, initial_vectors(fs, psi0));
    return out;
}

}  // namespace twophoton
