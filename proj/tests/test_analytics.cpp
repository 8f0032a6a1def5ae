#include <cmath>
#include <sstream>

#include "doctest.h"
#include "twophoton/analytics.hpp"
#include "twophoton/tpa.hpp"

using namespace twophoton;

namespace {

const ChannelMode kModes[] = {ChannelMode::unidirectional, ChannelMode::bidirectional};

ContinuousField desk_field(ChannelMode mode) {
    return ContinuousField(mode, PulseShape("gaussian", {{"center", 5.0}, {"sigma", 0.5}}),
                           PulseShape("gaussian", {{"center", 5.5}, {"sigma", 0.6}}), 0.0);
}

ContinuousField short_field(ChannelMode mode) {
    return ContinuousField(mode, PulseShape("gaussian", {{"center", 1.0}, {"sigma", 0.3}}),
                           PulseShape("gaussian", {{"center", 1.3}, {"sigma", 0.4}, {"omega", 0.7}}), 0.0);
}

SystemModel decoupled(ChannelMode mode) {
    const COperator z(2);
    return SystemModel(z, std::vector<COperator>(mode == ChannelMode::unidirectional ? 1 : 2, z));
}

}  // namespace

TEST_CASE("no-count amplitude of the ladder atom matches the absorption quadrature") {
    const LadderAtom atom{0.0, 0.0, 1.0, 1.0};
    for (ChannelMode mode : kModes) {
        const SystemModel model = ladder_model(atom, mode);
        const ContinuousField field = desk_field(mode);
        const Profile xi = [&](double s) { return field.xi(s); }, phi = [&](double s) { return field.phi(s); };
        for (double t : {1.5, 4.0, 5.5, 8.0}) {
            const std::size_t n = default_panels(t, 1.0);
            const double pa = mode == ChannelMode::unidirectional
                                  ? p_f_uni_separable(atom, xi, phi, field.normalization(), 0.0, t, n)
                                  : p_f_bi_separable(atom, xi, phi, 0.0, t, n);
            const auto c = conditional_no_count(model, field, CVector::basis(3, 0), QuadratureGrid(0.0, t, n));
            INFO(to_string(mode) << " t=" << t);
            CHECK(std::abs(pa - std::norm(c.v[0][2])) < 1e-9);
        }
    }
}

TEST_CASE("decoupled system counts the passing photons") {
    const double t = 1.4;
    for (ChannelMode mode : kModes) {
        const ContinuousField field = short_field(mode);
        const FieldTails late = field.tails(t), all = field.tails(0.0);
        double p0, p2;
        if (mode == ChannelMode::unidirectional) {
            const cplx early = all.xp - late.xp;
            p0 = (late.xx * late.pp + std::norm(late.xp)) / field.normalization();
            p2 = ((1 - late.xx) * (1 - late.pp) + std::norm(early)) / field.normalization();
        } else {
            p0 = late.xx * late.pp;
            p2 = (1 - late.xx) * (1 - late.pp);
        }
        CountingOptions opt;
        opt.panels = 400;
        opt.engine_tau = 0.01;
        const auto cd = count_distribution(decoupled(mode), field, CVector::basis(2, 0), t, opt);
        INFO(to_string(mode));
        CHECK(std::abs(cd.p0 - p0) < 1e-9);
        CHECK(std::abs(cd.p1 - (1 - p0 - p2)) < 1e-8);
        CHECK(std::abs(cd.multi_count_mass - p2) < 1e-3);
        CHECK(cd.completeness_defect() < 1e-3);
        if (mode == ChannelMode::bidirectional) {
            REQUIRE(cd.p1_by_detector.size() == 2);
            CHECK(std::abs(cd.p1_by_detector[0] - (1 - late.xx) * late.pp) < 1e-8);
            CHECK(std::abs(cd.p1_by_detector[1] - late.xx * (1 - late.pp)) < 1e-8);
        }
    }
}

TEST_CASE("counting statistics of the driven ladder atom are complete") {
    const LadderAtom atom{0.0, 0.0, 1.0, 1.0};
    for (ChannelMode mode : kModes) {
        const SystemModel model = ladder_model(atom, mode);
        const ContinuousField field = short_field(mode);
        const CVector g = CVector::basis(3, 0);
        const double t = 2.0;
        const auto cd = count_distribution(model, field, g, t);
        INFO(to_string(mode));
        CHECK(cd.completeness_defect() < 2e-3);
        CHECK(cd.quadrature_error < 1e-8);
        CHECK(cd.multi_count_error < 1e-2);
        double sum = 0.0;
        for (double p : cd.probabilities) sum += p;
        CHECK(std::abs(sum - (cd.p0 + cd.p1 + cd.multi_count_mass)) < 1e-12);

        const auto ap = apriori_state_quadrature(model, field, g, t);
        const auto chk = hermitian_part_checks(ap.sigma);
        CHECK(std::abs(ap.sigma.trace().real() - (cd.p0 + cd.p1 + cd.multi_count_mass)) < 1e-10);
        CHECK(chk.hermiticity_defect < 1e-12);
        CHECK(chk.min_eigenvalue > -1e-6);
        CHECK(std::abs(ap.remainder_trace - cd.multi_count_mass) < 1e-14);
    }
}

TEST_CASE("one-count density agrees with the record-conditioned state and integrates to P1") {
    const LadderAtom atom{0.3, 0.5, 1.0, 2.0};
    for (ChannelMode mode : kModes) {
        const SystemModel model = ladder_model(atom, mode);
        const ContinuousField field = short_field(mode);
        const CVector psi0 = CVector::basis(3, 0);
        const double t = 2.0;
        const std::size_t n = 400;
        const auto dens = one_count_density(model, field, psi0, QuadratureGrid(0.0, t, n));
        const auto w = quadrature_weights(n, t / n);
        CountingOptions opt;
        opt.panels = n;
        opt.multi_count = false;
        const auto cd = count_distribution(model, field, psi0, t, opt);
        REQUIRE(dens.density.size() == cd.p1_by_detector.size());
        const std::vector<Detector> dets = mode == ChannelMode::unidirectional
                                               ? std::vector<Detector>{Detector::single}
                                               : std::vector<Detector>{Detector::right, Detector::left};
        for (std::size_t d = 0; d < dets.size(); ++d) {
            double s = 0.0;
            for (std::size_t k = 0; k <= n; ++k) s += w[k] * dens.density[d][k];
            CHECK(std::abs(s - cd.p1_by_detector[d]) < 1e-13);
            for (std::size_t k : {100u, 200u, 300u}) {
                const auto c = conditional_one_count(model, field, psi0, dens.t1[k], t, dets[d], n);
                CHECK(c.counts == 1);
                CHECK(std::abs(exclusive_density(field, c) - dens.density[d][k]) < 1e-10);
            }
        }
    }
}

TEST_CASE("engine statistics converge to the closed-form counting probabilities") {
    const LadderAtom atom{0.0, 0.0, 1.0, 1.0};
    for (ChannelMode mode : kModes) {
        const SystemModel model = ladder_model(atom, mode);
        const ContinuousField field = short_field(mode);
        const CVector g = CVector::basis(3, 0);
        const double t = 1.4;
        CountingOptions opt;
        opt.multi_count = false;
        const auto cd = count_distribution(model, field, g, t, opt);
        double prev = 1.0;
        for (double tau : {0.02, 0.01, 0.005}) {
            const auto st = engine_count_statistics(model, field, g, t, tau, 3);
            const double err = std::abs(st.front().probability_by_count[0] - cd.p0) +
                               std::abs(st.front().probability_by_count[1] - cd.p1);
            INFO(to_string(mode) << " tau=" << tau);
            CHECK(err < 0.55 * prev);
            CHECK(err < 40 * tau);
            prev = err;
        }
    }
}

TEST_CASE("operators, validation and CSV output") {
    const LadderAtom atom{0.0, 0.0, 1.0, 1.0};
    const SystemModel model = ladder_model(atom, ChannelMode::unidirectional);
    CHECK(max_abs_diff(emission_operator(model, 0.0), model.coupling(0)) < 1e-15);
    CHECK(max_abs_diff(absorption_operator(model, cplx(2.0), 0.0), -2.0 * model.coupling(0).adjoint()) < 1e-15);
    CHECK(default_panels(10.0, 1.0) == 2000);
    CHECK(default_panels(0.0, 1.0) == 2);
    CHECK(default_panels(0.0013, 1.0) == 2);
    CHECK_THROWS_AS(default_panels(1.0, 0.0), InvalidInput);
    const ContinuousField field = short_field(ChannelMode::unidirectional);
    CHECK_THROWS_AS(count_distribution(model, field, CVector::basis(3, 0), -1.0), InvalidInput);
    CHECK(count_distribution(model, field, CVector::basis(3, 0), 0.0).p0 == 1.0);
    CHECK_THROWS_AS(conditional_one_count(model, field, CVector::basis(3, 0), 2.0, 1.0, Detector::single, 10),
                    InvalidInput);

    std::ostringstream os;
    write_curve_csv(os, "t", {"a", "b"}, {0.0, 0.5}, {{1.0, 2.0}, {3.0, 4.0}});
    CHECK(os.str() == "t,a,b\n0,1,3\n0.5,2,4\n");
    CHECK_THROWS_AS(write_curve_csv(os, "t", {"a"}, {0.0}, {}), InvalidInput);
    std::ostringstream om;
    write_matrix_csv(om, COperator::identity(1));
    CHECK(om.str() == "row,col,re,im\n0,0,1,0\n");
}
