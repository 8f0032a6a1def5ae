#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "twophoton/field.hpp"
#include "twophoton/system.hpp"

namespace twophoton {

// Ladder atom with levels g (0), e (1), f (2).
struct LadderAtom {
    double omega_eg = 0.0, omega_fe = 0.0;
    double gamma_e = 1.0, gamma_f = 1.0;
    double omega_fg() const { return omega_fe + omega_eg; }
    void validate() const;
};

// H = -w_eg |g><g| + w_fe |f><f|. Unidirectional: L = sqrt(Ge)|g><e| + sqrt(Gf)|e><f|.
// Bidirectional: L1 = sqrt(Ge)|g><e|, L2 = sqrt(Gf)|e><f|.
SystemModel ladder_model(const LadderAtom& atom, ChannelMode mode);

using Profile = std::function<cplx(double)>;
using JointAmplitude = std::function<cplx(double t2, double t1)>;  // (t2, t1)

// Absorption probability at t for the separable state built from xi and phi (both normalized
// on [t0, inf)); n_factor is 1 + |<xi|phi>|^2 for the unidirectional field.
double p_f_uni_separable(const LadderAtom& atom, const Profile& xi, const Profile& phi, double n_factor, double t0,
                         double t, std::size_t panels);
double p_f_bi_separable(const LadderAtom& atom, const Profile& xi, const Profile& phi, double t0, double t,
                        std::size_t panels);

// Joint amplitude given as a function, with its two-photon norm (1 for normalized input).
// Values on the diagonal are taken as the limit from t1 < t2.
double p_f_uni_general(const LadderAtom& atom, const JointAmplitude& phi, double t0, double t, std::size_t panels,
                       double norm = 1.0);
double p_f_bi_general(const LadderAtom& atom, const JointAmplitude& phi, double t0, double t, std::size_t panels,
                      double norm = 1.0);

// Sampled amplitude on its grid nodes; t must coincide with a node. The norm is recomputed by
// quadrature over the whole grid, splitting each row at the diagonal. Diagonal samples hold the
// limit from t1 < t2; the limit from t1 > t2 is extrapolated from off-diagonal samples.
double p_f_general(const LadderAtom& atom, const TwoPhotonAmplitude& phi, double t);
double quadrature_norm(const TwoPhotonAmplitude& phi);

double p_max(const LadderAtom& atom, double delta);
// Bracket of the optimal normalization; equals p_max(delta).
double n_opt_bracket(const LadderAtom& atom, double delta);
// Full normalization constant including exp(Gf t); overflows for large Gf t.
double n_opt(const LadderAtom& atom, double t0, double t, ChannelMode mode);

// Normalized optimal amplitude on t0 <= t1 <= t2 <= t (mirrored for the unidirectional field).
JointAmplitude optimal_amplitude_function(const LadderAtom& atom, double t0, double t, ChannelMode mode);
// Samples on nodes t0 + k h, k = 0..panels, so that the last node is t.
TwoPhotonAmplitude optimal_amplitude(const LadderAtom& atom, double t0, double t, ChannelMode mode,
                                     std::size_t panels);

// Smallest window W with 1 - p_max(W) <= eps.
double optimal_window(const LadderAtom& atom, double eps);

// Closed-form frequency-domain amplitude of the t0 -> -inf optimal state.
cplx optimal_amplitude_frequency(const LadderAtom& atom, double t, ChannelMode mode, double omega2, double omega1);
// Fourier quadrature of the t0 -> -inf optimal state restricted to [t - window, t].
cplx optimal_amplitude_fourier(const LadderAtom& atom, double t, ChannelMode mode, double window, std::size_t panels,
                               double omega2, double omega1);

struct DensityMap {
    std::vector<double> axis;     // shared by both variables
    std::vector<double> density;  // row-major [i2][i1]
    std::vector<double> marginal1, marginal2;
    double mass = 0.0;  // grid integral before normalization
    double at(std::size_t i2, std::size_t i1) const { return density[i2 * axis.size() + i1]; }
};

// |Phi_opt|^2 on a square time grid [t - window, t]^2.
DensityMap time_density_map(const LadderAtom& atom, double t, double window, ChannelMode mode, std::size_t points);
// |Phi~_opt|^2 on a square frequency grid centre +- half_width.
DensityMap frequency_density_map(const LadderAtom& atom, double t, ChannelMode mode, double centre, double half_width,
                                 std::size_t points);
// Axis centre on the step lattice through omega_eg, midway between omega_eg and omega_fe.
double resonance_centre(const LadderAtom& atom, double step);
DensityMap density_map(const std::vector<double>& axis, const std::function<double(double y, double x)>& f);

std::vector<std::size_t> local_maxima(const std::vector<double>& v);

void write_density_csv(std::ostream& os, const DensityMap& m, const char* x_name, const char* y_name);
void write_marginals_csv(std::ostream& os, const DensityMap& m, const char* axis_name);

}  // namespace twophoton
