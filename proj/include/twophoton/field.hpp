#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "twophoton/linalg.hpp"

namespace twophoton {

class TimeGrid {
public:
    TimeGrid() = default;
    static TimeGrid from_span(double t0, double t_end, std::size_t m);
    static TimeGrid from_step(double t0, double tau, std::size_t m);

    double t0() const { return t0_; }
    double tau() const { return tau_; }
    std::size_t bins() const { return m_; }
    double t_end() const { return t0_ + static_cast<double>(m_) * tau_; }
    double time(std::size_t k) const { return t0_ + static_cast<double>(k) * tau_; }

    bool operator==(const TimeGrid& o) const { return t0_ == o.t0_ && tau_ == o.tau_ && m_ == o.m_; }

private:
    double t0_ = 0.0, tau_ = 1.0;
    std::size_t m_ = 1;
};

enum class ChannelMode { unidirectional, bidirectional };
std::string to_string(ChannelMode m);
ChannelMode channel_mode_from_string(const std::string& s);

using ShapeParams = std::map<std::string, double>;

// Continuous single-photon pulse, unit-normalized over the real line.
class PulseShape {
public:
    PulseShape() = default;
    PulseShape(std::string name, ShapeParams params);

    const std::string& name() const { return name_; }
    const ShapeParams& params() const { return params_; }
    cplx operator()(double t) const;
    // Interval outside of which the remaining mass is below 1e-16.
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }

private:
    std::string name_;
    ShapeParams params_;
    double lo_ = 0.0, hi_ = 0.0;
};

// Window start for a rising exponential peaking at `peak` so that the discarded mass is eps.
double rising_truncation_start(double gamma, double peak, double eps);

class PhotonProfile {
public:
    PhotonProfile() = default;
    // Throws unless sum tau |xi|^2 = 1 within 1e-10.
    PhotonProfile(TimeGrid grid, std::vector<cplx> xi);
    static PhotonProfile normalized(TimeGrid grid, std::vector<cplx> xi);
    static PhotonProfile zero(TimeGrid grid);

    const TimeGrid& grid() const { return grid_; }
    const std::vector<cplx>& samples() const { return xi_; }
    cplx operator[](std::size_t k) const { return xi_[k]; }
    std::size_t bins() const { return xi_.size(); }
    double mass() const;

private:
    TimeGrid grid_;
    std::vector<cplx> xi_;
};

PhotonProfile profile_library(const std::string& name, const ShapeParams& params, const TimeGrid& grid);
PhotonProfile sample_profile(const PulseShape& shape, const TimeGrid& grid);

cplx overlap(const PhotonProfile& xi, const PhotonProfile& phi);
double normalization_factor_separable(const PhotonProfile& xi, const PhotonProfile& phi);
// out[j] = sum_{k >= j} tau conj(a_k) b_k, j = 0..M.
std::vector<cplx> tail_sums(const PhotonProfile& a, const PhotonProfile& b);

class TwoPhotonAmplitude {
public:
    TwoPhotonAmplitude() = default;
    TwoPhotonAmplitude(TimeGrid grid, ChannelMode mode);
    TwoPhotonAmplitude(TimeGrid grid, ChannelMode mode, std::vector<cplx> rowmajor);

    const TimeGrid& grid() const { return grid_; }
    ChannelMode mode() const { return mode_; }
    std::size_t bins() const { return grid_.bins(); }
    // Row index k2 (second photon / channel 2), column index k1.
    cplx& operator()(std::size_t k2, std::size_t k1) { return phi_[k2 * bins() + k1]; }
    cplx operator()(std::size_t k2, std::size_t k1) const { return phi_[k2 * bins() + k1]; }
    const std::vector<cplx>& samples() const { return phi_; }

private:
    TimeGrid grid_;
    ChannelMode mode_ = ChannelMode::unidirectional;
    std::vector<cplx> phi_;
};

// Phi_{k2,k1} = phi_{k2} xi_{k1}.
TwoPhotonAmplitude separable_amplitude(const PhotonProfile& xi, const PhotonProfile& phi, ChannelMode mode);
double two_photon_norm(const TwoPhotonAmplitude& phi);
cplx inner_product(const TwoPhotonAmplitude& phi, const TwoPhotonAmplitude& psi);
TwoPhotonAmplitude normalized(const TwoPhotonAmplitude& phi);
TwoPhotonAmplitude symmetrize(const TwoPhotonAmplitude& phi);
double antisymmetry_defect(const TwoPhotonAmplitude& phi);

enum class DecompositionKind { takagi_symmetric, schmidt_biphoton };
enum class SymmetryPolicy { reject, symmetrize };

struct ModeDecomposition {
    DecompositionKind kind;
    std::vector<double> weights;
    std::vector<PhotonProfile> first;   // takagi modes, or channel-1 (xi) modes
    std::vector<PhotonProfile> second;  // channel-2 (phi) modes; empty for takagi
    double dropped_mass = 0.0;          // sum of squared dropped weights
    double total_mass() const;
};

ModeDecomposition decompose(const TwoPhotonAmplitude& phi, double tol,
                            SymmetryPolicy policy = SymmetryPolicy::reject);
TwoPhotonAmplitude reconstruct(const ModeDecomposition& dec);

void write_amplitude_csv(std::ostream& os, const TwoPhotonAmplitude& phi);
TwoPhotonAmplitude read_amplitude_csv(std::istream& is);
void write_profile_csv(std::ostream& os, const PhotonProfile& p);
PhotonProfile read_profile_csv(std::istream& is);

}  // namespace twophoton
