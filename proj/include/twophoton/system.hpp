#pragma once

#include <vector>

#include "twophoton/field.hpp"
#include "twophoton/linalg.hpp"

namespace twophoton {

class SystemModel {
public:
    SystemModel() = default;
    // One coupling: unidirectional. Two couplings: bidirectional.
    SystemModel(COperator h, std::vector<COperator> couplings);

    std::size_t dim() const { return h_.dim(); }
    const COperator& hamiltonian() const { return h_; }
    const std::vector<COperator>& couplings() const { return l_; }
    const COperator& coupling(std::size_t c) const { return l_.at(c); }
    std::size_t channels() const { return l_.size(); }
    ChannelMode mode() const { return l_.size() == 1 ? ChannelMode::unidirectional : ChannelMode::bidirectional; }

    // G = H - (i/2) sum_l L_l^dag L_l
    COperator effective_generator() const;

private:
    COperator h_;
    std::vector<COperator> l_;
};

enum class BlockOrder { truncated, exact };

// V_{out,in} = <out| U_bin |in> system-operator blocks. Photon counts per channel run over
// 0..levels-1; for two channels the combined index is n1 * levels + n2.
class InteractionBlocks {
public:
    InteractionBlocks(double tau, std::size_t channels, std::size_t levels, std::size_t dim, BlockOrder order);

    double tau() const { return tau_; }
    std::size_t channels() const { return channels_; }
    std::size_t levels() const { return levels_; }
    std::size_t dim() const { return dim_; }
    BlockOrder order() const { return order_; }
    std::size_t count_states() const { return channels_ == 1 ? levels_ : levels_ * levels_; }
    std::size_t combine(std::size_t n1, std::size_t n2) const { return n1 * levels_ + n2; }

    const COperator& at(std::size_t out, std::size_t in) const { return v_[out * count_states() + in]; }
    COperator& at(std::size_t out, std::size_t in) { return v_[out * count_states() + in]; }
    const COperator& at(std::size_t o1, std::size_t o2, std::size_t i1, std::size_t i2) const {
        return at(combine(o1, o2), combine(i1, i2));
    }
    COperator& at(std::size_t o1, std::size_t o2, std::size_t i1, std::size_t i2) {
        return at(combine(o1, o2), combine(i1, i2));
    }

private:
    double tau_;
    std::size_t channels_, levels_, dim_;
    BlockOrder order_;
    std::vector<COperator> v_;
};

InteractionBlocks truncated_blocks_uni(const SystemModel& model, double tau);
InteractionBlocks truncated_blocks_bi(const SystemModel& model, double tau);

inline constexpr std::size_t DEFAULT_UNITARY_CAP = 4096;
// exp(-i tau H_k) on (bin Fock space, n_max photons)^channels (x) system.
COperator exact_unitary(const SystemModel& model, double tau, std::size_t n_max = 2,
                        std::size_t cap = DEFAULT_UNITARY_CAP);
InteractionBlocks exact_blocks(const SystemModel& model, double tau, std::size_t n_max = 2);

// T_t = exp(-i G t); any real t.
COperator propagator_T(const SystemModel& model, double t);

}  // namespace twophoton
