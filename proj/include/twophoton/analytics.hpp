#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "twophoton/engine.hpp"
#include "twophoton/field.hpp"
#include "twophoton/quadrature.hpp"
#include "twophoton/system.hpp"

namespace twophoton {

struct QuadratureGrid {
    double t0 = 0.0, t = 1.0;
    std::size_t panels = 2000;
    QuadratureRule rule = QuadratureRule::simpson;

    QuadratureGrid() = default;
    QuadratureGrid(double t0, double t, std::size_t panels, QuadratureRule rule = QuadratureRule::simpson);
    double step() const { return (t - t0) / static_cast<double>(panels); }
    double node(std::size_t k) const { return t0 + static_cast<double>(k) * step(); }
};

// 2000 panels per 10 / gamma_ref of window length, at least 2, always even.
std::size_t default_panels(double window, double gamma_ref);

struct FieldTails {
    double xx = 0.0, pp = 0.0;  // int_t^inf |xi|^2, |phi|^2
    cplx xp;                    // int_t^inf conj(xi) phi
};

// Separable two-photon field with continuous profiles, renormalized on [t0, inf).
// Bidirectional: xi travels in channel 1, phi in channel 2.
class ContinuousField {
public:
    ContinuousField(ChannelMode mode, PulseShape xi, PulseShape phi, double t0);

    ChannelMode mode() const { return mode_; }
    double t0() const { return t0_; }
    const PulseShape& xi_shape() const { return xi_; }
    const PulseShape& phi_shape() const { return phi_; }
    cplx xi(double t) const { return t < t0_ ? cplx{} : sx_ * xi_(t); }
    cplx phi(double t) const { return t < t0_ ? cplx{} : sp_ * phi_(t); }
    double support_end() const { return hi_; }
    // 1 + |int conj(xi) phi|^2 for the unidirectional field, 1 otherwise.
    double normalization() const { return n_; }
    FieldTails tails(double t) const;

private:
    ChannelMode mode_;
    PulseShape xi_, phi_;
    double t0_, hi_;
    double sx_ = 1.0, sp_ = 1.0, n_ = 1.0;
};

// -T_{-t} a L_c^dag T_t with a = profile(t).
COperator absorption_operator(const SystemModel& model, cplx amplitude, double t, std::size_t channel = 0);
COperator absorption_operator(const SystemModel& model, const PulseShape& profile, double t, std::size_t channel = 0);
// T_{-t} L_c T_t
COperator emission_operator(const SystemModel& model, double t, std::size_t channel = 0);

// Scenario vectors in the engine's label order: 0 no photon left, 1 xi left, 2 phi left, 3 both left.
struct ContinuousConditional {
    double t = 0.0;
    int counts = 0;
    double t1 = 0.0;
    Detector detector = Detector::single;
    std::array<CVector, 4> v;
};

ContinuousConditional conditional_no_count(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                           const QuadratureGrid& grid);
// Vectors at every node of the grid.
std::vector<ContinuousConditional> no_count_path(const SystemModel& model, const ContinuousField& field,
                                                 const CVector& psi0, const QuadratureGrid& grid);
ContinuousConditional conditional_one_count(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                            double t1, double t, Detector detector, std::size_t panels,
                                            QuadratureRule rule = QuadratureRule::simpson);

COperator conditional_density(const ContinuousField& field, const ContinuousConditional& c);
COperator conditional_density(const ContinuousField& field, const ContinuousConditional& c, const FieldTails& tails);
double exclusive_density(const ContinuousField& field, const ContinuousConditional& c);
double exclusive_density(const ContinuousField& field, const ContinuousConditional& c, const FieldTails& tails);

struct CountingOptions {
    std::size_t panels = 0;  // 0: default_panels
    QuadratureRule rule = QuadratureRule::simpson;
    double engine_tau = 0.0;  // 0: 0.01 / max |L^dag L|
    std::size_t s_max = 4;
    bool multi_count = true;  // run the discrete engine for s >= 2
};

struct CountDistribution {
    double t = 0.0;
    double p0 = 0.0;
    std::vector<double> p1_by_detector;  // single detector, or R then L
    double p1 = 0.0;
    // probabilities[s]: s = 0, 1 from closed forms, s >= 2 from the engine; last entry is s >= s_max.
    std::vector<double> probabilities;
    double multi_count_mass = 0.0;
    double multi_count_error = 0.0;  // |difference| between engine runs at tau and tau/2
    double quadrature_error = 0.0;   // |difference| between N and N/2 panels for P(0) + P(1)
    double engine_tau = 0.0;
    double completeness_defect() const;
};

CountDistribution count_distribution(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                     double t, const CountingOptions& opt = {});

struct AprioriQuadrature {
    COperator sigma;
    double remainder_trace = 0.0;  // engine-estimated s >= 2 contribution
    double remainder_error = 0.0;
};
AprioriQuadrature apriori_state_quadrature(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                           double t, const CountingOptions& opt = {});

// Exclusive one-count density on the quadrature nodes, per detector.
struct OneCountDensity {
    std::vector<double> t1;
    std::vector<std::vector<double>> density;  // [detector][node]
};
OneCountDensity one_count_density(const SystemModel& model, const ContinuousField& field, const CVector& psi0,
                                  const QuadratureGrid& grid);

// Bin-midpoint samples of the field on g, each profile renormalized on the grid.
FieldScenarios discretize(const ContinuousField& field, const TimeGrid& g);

// Engine-side statistics on a grid matching the continuous window: checkpoint at t, field tail included.
std::vector<CountResolvedState> engine_count_statistics(const SystemModel& model, const ContinuousField& field,
                                                        const CVector& psi0, double t, double tau, std::size_t s_max,
                                                        EngineMode mode = EngineMode::reduced);

void write_curve_csv(std::ostream& os, const std::string& x_name, const std::vector<std::string>& y_names,
                     const std::vector<double>& x, const std::vector<std::vector<double>>& y);
void write_matrix_csv(std::ostream& os, const COperator& m);

}  // namespace twophoton
