#include "twophoton/system.hpp"

#include <cmath>

namespace twophoton {

SystemModel::SystemModel(COperator h, std::vector<COperator> couplings) : h_(std::move(h)), l_(std::move(couplings)) {
    if (h_.dim() == 0) throw InvalidInput("system dimension must be positive");
    if (l_.empty() || l_.size() > 2) throw InvalidInput("system model needs one or two coupling operators");
    if (!h_.is_finite()) throw InvalidInput("Hamiltonian has non-finite entries");
    if (max_abs_diff(h_, h_.adjoint()) > 1e-12) throw InvalidInput("Hamiltonian is not Hermitian");
    for (const auto& l : l_) {
        if (l.dim() != h_.dim()) throw InvalidInput("coupling dimension does not match Hamiltonian");
        if (!l.is_finite()) throw InvalidInput("coupling has non-finite entries");
    }
}

COperator SystemModel::effective_generator() const {
    COperator g = h_;
    for (const auto& l : l_) g -= cplx(0.0, 0.5) * (l.adjoint() * l);
    return g;
}

InteractionBlocks::InteractionBlocks(double tau, std::size_t channels, std::size_t levels, std::size_t dim,
                                     BlockOrder order)
    : tau_(tau), channels_(channels), levels_(levels), dim_(dim), order_(order) {
    const std::size_t c = count_states();
    v_.assign(c * c, COperator(dim));
}

namespace {

void require_channels(const SystemModel& m, std::size_t n) {
    if (m.channels() != n) throw InvalidInput("model has the wrong number of coupling channels");
}

}  // namespace

InteractionBlocks truncated_blocks_uni(const SystemModel& model, double tau) {
    require_channels(model, 1);
    if (!(tau > 0)) throw InvalidInput("tau must be positive");
    const std::size_t d = model.dim();
    const COperator id = COperator::identity(d);
    const COperator& l = model.coupling(0);
    const COperator ld = l.adjoint();
    const double st = std::sqrt(tau);
    InteractionBlocks b(tau, 1, 2, d, BlockOrder::truncated);
    b.at(0, 0) = id - cplx(0, tau) * model.hamiltonian() - (0.5 * tau) * (ld * l);
    b.at(1, 0) = st * l;
    b.at(0, 1) = -st * ld;
    b.at(1, 1) = id;
    return b;
}

InteractionBlocks truncated_blocks_bi(const SystemModel& model, double tau) {
    require_channels(model, 2);
    if (!(tau > 0)) throw InvalidInput("tau must be positive");
    const std::size_t d = model.dim();
    const COperator id = COperator::identity(d);
    const COperator& h = model.hamiltonian();
    const COperator& l1 = model.coupling(0);
    const COperator& l2 = model.coupling(1);
    const COperator l1d = l1.adjoint(), l2d = l2.adjoint();
    const double st = std::sqrt(tau);
    const cplx mit(0, -tau);
    auto diag = [&](const COperator& damp) { return id + mit * (h - cplx(0, 0.5) * damp); };

    InteractionBlocks b(tau, 2, 2, d, BlockOrder::truncated);
    b.at(0, 0, 0, 0) = diag(l1d * l1 + l2d * l2);
    b.at(0, 1, 0, 1) = diag(l1d * l1 + l2 * l2d);
    b.at(1, 0, 1, 0) = diag(l1 * l1d + l2d * l2);
    b.at(1, 1, 1, 1) = diag(l1 * l1d + l2 * l2d);
    b.at(0, 0, 0, 1) = -st * l2d;
    b.at(1, 0, 1, 1) = -st * l2d;
    b.at(0, 0, 1, 0) = -st * l1d;
    b.at(0, 1, 1, 1) = -st * l1d;
    b.at(0, 1, 0, 0) = st * l2;
    b.at(1, 1, 1, 0) = st * l2;
    b.at(1, 0, 0, 0) = st * l1;
    b.at(1, 1, 0, 1) = st * l1;
    b.at(1, 1, 0, 0) = (0.5 * tau) * (l1 * l2 + l2 * l1);
    b.at(0, 0, 1, 1) = (0.5 * tau) * (l1d * l2d + l2d * l1d);
    b.at(0, 1, 1, 0) = (-0.5 * tau) * (l1d * l2 + l2 * l1d);
    b.at(1, 0, 0, 1) = (-0.5 * tau) * (l1 * l2d + l2d * l1);
    return b;
}

COperator exact_unitary(const SystemModel& model, double tau, std::size_t n_max, std::size_t cap) {
    if (n_max < 1) throw InvalidInput("n_max must be at least 1");
    if (!(tau > 0)) throw InvalidInput("tau must be positive");
    const std::size_t lv = n_max + 1;
    const std::size_t d = model.dim();
    const std::size_t ch = model.channels();
    const std::size_t fock = ch == 1 ? lv : lv * lv;
    if (fock > cap / d) throw SizingError("exact_unitary: dimension exceeds cap");

    COperator b(lv);
    for (std::size_t n = 1; n < lv; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
    const COperator idf = COperator::identity(lv);
    std::vector<COperator> bs;
    if (ch == 1) {
        bs.push_back(b);
    } else {
        bs.push_back(kron(b, idf));
        bs.push_back(kron(idf, b));
    }

    // -i tau H_k = -i tau H_S + sqrt(tau) sum_l (b_l^dag L_l - b_l L_l^dag)
    COperator gen = kron(COperator::identity(fock), cplx(0, -tau) * model.hamiltonian(), cap);
    const double st = std::sqrt(tau);
    for (std::size_t c = 0; c < ch; ++c) {
        const COperator& l = model.coupling(c);
        gen += st * (kron(bs[c].adjoint(), l, cap) - kron(bs[c], l.adjoint(), cap));
    }
    return matexp(gen);
}

InteractionBlocks exact_blocks(const SystemModel& model, double tau, std::size_t n_max) {
    const COperator u = exact_unitary(model, tau, n_max);
    const std::size_t d = model.dim();
    InteractionBlocks blocks(tau, model.channels(), n_max + 1, d, BlockOrder::exact);
    const std::size_t cs = blocks.count_states();
    for (std::size_t o = 0; o < cs; ++o)
        for (std::size_t i = 0; i < cs; ++i) {
            COperator& v = blocks.at(o, i);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c) v(r, c) = u(o * d + r, i * d + c);
        }
    return blocks;
}

COperator propagator_T(const SystemModel& model, double t) {
    return matexp(cplx(0, -t) * model.effective_generator());
}

}  // namespace twophoton
