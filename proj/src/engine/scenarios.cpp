#include <cmath>

#include "twophoton/engine.hpp"

namespace twophoton {

namespace {

std::vector<std::vector<std::vector<cplx>>> mode_overlaps(const std::vector<PhotonProfile>& modes) {
    const std::size_t k = modes.size();
    std::vector<std::vector<std::vector<cplx>>> s(k, std::vector<std::vector<cplx>>(k));
    for (std::size_t n = 0; n < k; ++n)
        for (std::size_t m = n; m < k; ++m) s[n][m] = tail_sums(modes[n], modes[m]);
    return s;
}

}  // namespace

ChannelMode FieldScenarios::mode() const {
    return (kind_ == FieldKind::separable_uni || kind_ == FieldKind::takagi) ? ChannelMode::unidirectional
                                                                             : ChannelMode::bidirectional;
}

FieldScenarios FieldScenarios::separable_uni(const PhotonProfile& xi, const PhotonProfile& phi) {
    FieldScenarios fs;
    fs.kind_ = FieldKind::separable_uni;
    fs.grid_ = xi.grid();
    fs.weights_.assign(4, 1.0);
    fs.initial_ = {3};
    fs.photons_ = {0, 1, 1, 2};
    fs.a_ = {xi};
    fs.b_ = {phi};
    fs.n_factor_ = normalization_factor_separable(xi, phi);
    fs.saa_ = mode_overlaps(fs.a_);
    fs.sbb_ = mode_overlaps(fs.b_);
    fs.sab_ = tail_sums(xi, phi);
    return fs;
}

FieldScenarios FieldScenarios::separable_bi(const PhotonProfile& xi, const PhotonProfile& phi) {
    FieldScenarios fs = separable_uni(xi, phi);
    fs.kind_ = FieldKind::separable_bi;
    fs.n_factor_ = 1.0;
    fs.sab_.clear();
    return fs;
}

FieldScenarios FieldScenarios::general(const ModeDecomposition& dec) {
    if (dec.weights.empty()) throw InvalidInput("general field: empty decomposition");
    FieldScenarios fs;
    const bool tak = dec.kind == DecompositionKind::takagi_symmetric;
    fs.kind_ = tak ? FieldKind::takagi : FieldKind::schmidt;
    fs.grid_ = dec.first.front().grid();
    fs.dropped_ = dec.dropped_mass;
    double kept = 0.0;
    for (double u : dec.weights) kept += u * u;
    const double scale = std::sqrt((tak ? 0.5 : 1.0) / kept);
    const std::size_t per = tak ? 3 : 4;
    for (std::size_t n = 0; n < dec.weights.size(); ++n) {
        for (std::size_t c = 0; c < per; ++c) fs.weights_.push_back(dec.weights[n] * scale);
        if (tak) {
            fs.photons_.insert(fs.photons_.end(), {0, 1, 2});
            fs.initial_.push_back(static_cast<std::uint32_t>(3 * n + 2));
        } else {
            fs.photons_.insert(fs.photons_.end(), {0, 1, 1, 2});
            fs.initial_.push_back(static_cast<std::uint32_t>(4 * n + 3));
        }
    }
    fs.a_ = dec.first;
    fs.b_ = dec.second;
    fs.saa_ = mode_overlaps(fs.a_);
    if (!tak) fs.sbb_ = mode_overlaps(fs.b_);
    return fs;
}

std::vector<Transition> uni_transitions(cplx xi, cplx phi, double n_factor, double tau) {
    const double st = std::sqrt(tau), rn = 1.0 / std::sqrt(n_factor);
    // labels: 0 vac, 1 one_xi, 2 one_phi, 3 two
    return {
        {0, 0, 0, 0, 1.0},
        {1, 1, 0, 0, 1.0},
        {1, 0, 1, 0, st * xi},
        {2, 2, 0, 0, 1.0},
        {2, 0, 1, 0, st * phi},
        {3, 3, 0, 0, 1.0},
        {3, 1, 1, 0, st * phi * rn},
        {3, 2, 1, 0, st * xi * rn},
        {3, 0, 2, 0, std::sqrt(2.0) * tau * xi * phi * rn},
    };
}

std::vector<Transition> bi_transitions(cplx xi, cplx phi, double tau) {
    const double st = std::sqrt(tau);
    // labels: 0 (00), 1 (1_xi 0), 2 (0 1_phi), 3 (1_xi 1_phi)
    return {
        {0, 0, 0, 0, 1.0},
        {1, 1, 0, 0, 1.0},
        {1, 0, 1, 0, st * xi},
        {2, 2, 0, 0, 1.0},
        {2, 0, 0, 1, st * phi},
        {3, 3, 0, 0, 1.0},
        {3, 2, 1, 0, st * xi},
        {3, 1, 0, 1, st * phi},
        {3, 0, 1, 1, tau * xi * phi},
    };
}

std::vector<Transition> FieldScenarios::transitions(std::size_t j) const {
    const double tau = grid_.tau();
    switch (kind_) {
        case FieldKind::separable_uni: return uni_transitions(a_[0][j], b_[0][j], n_factor_, tau);
        case FieldKind::separable_bi: return bi_transitions(a_[0][j], b_[0][j], tau);
        case FieldKind::takagi: {
            std::vector<Transition> t;
            const double st = std::sqrt(tau);
            for (std::uint32_t n = 0; n < a_.size(); ++n) {
                const cplx x = a_[n][j];
                const std::uint32_t o = 3 * n;
                t.push_back({o, o, 0, 0, 1.0});
                t.push_back({o + 1, o + 1, 0, 0, 1.0});
                t.push_back({o + 1, o, 1, 0, st * x});
                t.push_back({o + 2, o + 2, 0, 0, 1.0});
                t.push_back({o + 2, o + 1, 1, 0, 2.0 * st * x});
                t.push_back({o + 2, o, 2, 0, std::sqrt(2.0) * tau * x * x});
            }
            return t;
        }
        case FieldKind::schmidt: {
            std::vector<Transition> t;
            for (std::uint32_t n = 0; n < a_.size(); ++n) {
                auto local = bi_transitions(a_[n][j], b_[n][j], tau);
                for (auto& tr : local) {
                    tr.from += 4 * n;
                    tr.to += 4 * n;
                    t.push_back(tr);
                }
            }
            return t;
        }
    }
    return {};
}

std::vector<GramEntry> FieldScenarios::gram(std::size_t j) const {
    std::vector<GramEntry> g;
    switch (kind_) {
        case FieldKind::separable_uni: {
            const cplx sxx = saa_[0][0][j], spp = sbb_[0][0][j], sxp = sab_[j];
            g.push_back({0, 0, 1.0});
            g.push_back({1, 1, sxx});
            g.push_back({1, 2, sxp});
            g.push_back({2, 2, spp});
            g.push_back({3, 3, (std::norm(sxp) + sxx.real() * spp.real()) / n_factor_});
            break;
        }
        case FieldKind::separable_bi: {
            const double sxx = saa_[0][0][j].real(), spp = sbb_[0][0][j].real();
            g.push_back({0, 0, 1.0});
            g.push_back({1, 1, sxx});
            g.push_back({2, 2, spp});
            g.push_back({3, 3, sxx * spp});
            break;
        }
        case FieldKind::takagi: {
            const std::uint32_t k = static_cast<std::uint32_t>(a_.size());
            for (std::uint32_t n = 0; n < k; ++n)
                for (std::uint32_t m = n; m < k; ++m) {
                    const cplx s = saa_[n][m][j];
                    g.push_back({3 * n, 3 * m, 1.0});
                    g.push_back({3 * n + 1, 3 * m + 1, s});
                    g.push_back({3 * n + 2, 3 * m + 2, 2.0 * s * s});
                }
            break;
        }
        case FieldKind::schmidt: {
            const std::uint32_t k = static_cast<std::uint32_t>(a_.size());
            for (std::uint32_t n = 0; n < k; ++n)
                for (std::uint32_t m = n; m < k; ++m) {
                    const cplx sx = saa_[n][m][j], sp = sbb_[n][m][j];
                    g.push_back({4 * n, 4 * m, 1.0});
                    g.push_back({4 * n + 1, 4 * m + 1, sx});
                    g.push_back({4 * n + 2, 4 * m + 2, sp});
                    g.push_back({4 * n + 3, 4 * m + 3, sx * sp});
                }
            break;
        }
    }
    return g;
}

}  // namespace twophoton
