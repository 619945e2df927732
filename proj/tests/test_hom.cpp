#include <cmath>

#include "doctest.h"
#include "ramanhom/hom.hpp"
#include "test_fixtures.hpp"

using namespace ramanhom;
using ramanhom::testing::ca_scheme;
using ramanhom::testing::kDefaultDephasing;

namespace {

// Pure-photon emitter: no back decay, no dephasing; rates scaled up so the
// wave packet fits a short grid.
LevelScheme ideal_scheme() { return {0.0, 8.48e7, 9.55e6, 0.0}; }

PulseTrain grid_train(double peak_rabi, std::size_t n_pulses = 1) {
    PulseTrain train;
    train.shape = PulseShape::from_fwhm(15.08e-9, 2.28, peak_rabi, 60e-9);
    train.n_pulses = n_pulses;
    train.t_rep = 104.25e-9;
    return train;
}

CoherenceGrid make_g1(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                      double t_end, double dt = 0.5e-9) {
    SimGrid grid{0.0, t_end, dt, 1e-10, 1e-12};
    return g1(train, scheme, dephasing, Channel::raman854, grid);
}

std::vector<double> default_windows(double t_rep) {
    std::vector<double> w;
    for (double f : {0.02, 0.1, 0.25, 0.5, 0.75, 1.0}) w.push_back(f * t_rep);
    return w;
}

}  // namespace

TEST_SUITE("hom") {

TEST_CASE("beam splitter outputs mix the intensities with t and 1 - t") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ideal_scheme(), 0.0, train.t_rep);
    BeamSplitter bs{0.3};
    const OutputIntensities out = beam_splitter_outputs(a, a, bs);
    const std::vector<double> ia = a.intensity();
    for (std::size_t i = 0; i < ia.size(); i += 17) {
        CHECK(out.out_c[i] == doctest::Approx(ia[i]).epsilon(1e-12));
        CHECK(out.out_d[i] == doctest::Approx(ia[i]).epsilon(1e-12));
    }
}

TEST_CASE("orthogonal polarizations leave only the classical intensity terms") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ca_scheme(), kDefaultDephasing, train.t_rep);
    const double t = 0.436;
    const CorrelationGrid g = g2_hom(a, a, BeamSplitter{t}, M_PI_2, 0.5 * train.t_rep);
    const std::vector<double> ia = a.intensity();
    const long j_mid = (static_cast<long>(g.tau_axis.size()) - 1) / 2;
    for (std::size_t i = 0; i < ia.size(); i += 13) {
        for (long j = -j_mid; j <= j_mid; j += 29) {
            const long k = static_cast<long>(i) + j;
            if (k < 0 || k >= static_cast<long>(ia.size())) continue;
            const double expect = (1.0 - t) * (1.0 - t) * ia[i] * ia[static_cast<std::size_t>(k)] +
                                  t * t * ia[static_cast<std::size_t>(k)] * ia[i];
            CHECK(g.values(static_cast<Eigen::Index>(i), j + j_mid) ==
                  doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("identical pure photons on a balanced splitter suppress all coincidences") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ideal_scheme(), 0.0, train.t_rep);
    const CorrelationGrid g = g2_hom(a, a, BeamSplitter{0.5}, 0.0, 0.5 * train.t_rep);
    const CorrelationGrid ref = g2_hom(a, a, BeamSplitter{0.5}, M_PI_2, 0.5 * train.t_rep);
    const double scale = ref.values.maxCoeff();
    CHECK(scale > 0.0);
    // Suppression is exact up to the g1 integration accuracy.
    CHECK(g.values.cwiseAbs().maxCoeff() < 1e-7 * scale);
}

TEST_CASE("tau = 0 coincidences vanish for identical emitters even when imperfect") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ca_scheme(), kDefaultDephasing, train.t_rep);
    const CorrelationGrid g = g2_hom(a, a, BeamSplitter{0.5}, 0.0, 0.25 * train.t_rep);
    const Eigen::Index j0 = (static_cast<Eigen::Index>(g.tau_axis.size()) - 1) / 2;
    REQUIRE(g.tau_axis[static_cast<std::size_t>(j0)] == 0.0);
    const double scale = g.values.maxCoeff();
    CHECK(g.values.col(j0).cwiseAbs().maxCoeff() < 1e-9 * scale);
}

TEST_CASE("swapping emitters and transmission leaves the correlation invariant") {
    const PulseTrain ta = grid_train(kTwoPi * 40e6);
    const PulseTrain tb = grid_train(kTwoPi * 55e6);
    const CoherenceGrid a = make_g1(ta, ca_scheme(), kDefaultDephasing, ta.t_rep);
    const CoherenceGrid b = make_g1(tb, ca_scheme(), kDefaultDephasing, tb.t_rep);
    const double phi = 0.3;
    const CorrelationGrid g_ab = g2_hom(a, b, BeamSplitter{0.436}, phi, 0.4 * ta.t_rep);
    const CorrelationGrid g_ba = g2_hom(b, a, BeamSplitter{1.0 - 0.436}, phi, 0.4 * ta.t_rep);
    const double scale = g_ab.values.cwiseAbs().maxCoeff();
    CHECK((g_ab.values - g_ba.values).cwiseAbs().maxCoeff() < 1e-12 * scale);
}

TEST_CASE("the polarization angle enters only through cos^2 in the cross term") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ca_scheme(), kDefaultDephasing, train.t_rep);
    const BeamSplitter bs{0.5};
    const double span = 0.3 * train.t_rep;
    const CorrelationGrid base = g2_hom(a, a, bs, M_PI_2, span);
    const CorrelationGrid g1p = g2_hom(a, a, bs, 0.3, span);
    const CorrelationGrid g2p = g2_hom(a, a, bs, 1.0, span);
    const Eigen::MatrixXd d1 = (g1p.values - base.values) / std::pow(std::cos(0.3), 2);
    const Eigen::MatrixXd d2 = (g2p.values - base.values) / std::pow(std::cos(1.0), 2);
    const double scale = d1.cwiseAbs().maxCoeff();
    CHECK((d1 - d2).cwiseAbs().maxCoeff() < 1e-10 * scale);
}

TEST_CASE("unit efficiencies and zero background are the identity") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ca_scheme(), kDefaultDephasing, train.t_rep);
    const BeamSplitter bs{0.5};
    const CorrelationGrid g = g2_hom(a, a, bs, 0.2, 0.3 * train.t_rep);
    const CorrelationGrid gt = apply_imperfections(g, DetectionModel{1.0, 1.0, 0.0, 0.2},
                                                   beam_splitter_outputs(a, a, bs));
    CHECK((g.values - gt.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("signal-free input turns into the constant background floor") {
    CorrelationGrid g;
    g.t_axis = {0.0, 1e-9, 2e-9, 3e-9};
    g.tau_axis = {-1e-9, 0.0, 1e-9};
    g.values = Eigen::MatrixXd::Zero(4, 3);
    OutputIntensities out;
    out.out_c.assign(4, 0.0);
    out.out_d.assign(4, 0.0);
    const double b0 = 2.5e3;
    const CorrelationGrid gt = apply_imperfections(g, DetectionModel{0.7, 0.4, b0, 0.0}, out);
    CHECK(gt.values.minCoeff() == doctest::Approx(b0 * b0).epsilon(1e-15));
    CHECK(gt.values.maxCoeff() == doctest::Approx(b0 * b0).epsilon(1e-15));
}

TEST_CASE("with no background, any efficiency imbalance cancels from V(T)") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ca_scheme(), kDefaultDephasing, train.t_rep);
    const BeamSplitter bs{0.436};
    const std::vector<double> windows = default_windows(train.t_rep);

    const HomArms balanced = hom_arms(a, a, bs, DetectionModel{0.9, 0.9, 0.0, 0.1}, 0.5 * train.t_rep);
    const HomArms skewed = hom_arms(a, a, bs, DetectionModel{0.856, 0.4, 0.0, 0.1}, 0.5 * train.t_rep);
    const VisibilityCurve v1 = visibility_curve(balanced.parallel, balanced.orthogonal, windows);
    const VisibilityCurve v2 = visibility_curve(skewed.parallel, skewed.orthogonal, windows);
    for (std::size_t i = 0; i < windows.size(); ++i)
        CHECK(std::abs(v1.values[i] - v2.values[i]) < 1e-10);
}

TEST_CASE("background level follows from the signal-to-background ratio and back") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ca_scheme(), kDefaultDephasing, train.t_rep);
    const OutputIntensities out = beam_splitter_outputs(a, a, BeamSplitter{0.5});
    const double dt = a.dt();
    const double t_end = a.axis.back();
    const double b0 = b0_from_sbr(35.0, out, dt, 0.8, 0.4, t_end);
    CHECK(b0 > 0.0);
    CHECK(sbr_from_b0(b0, out, dt, 0.8, 0.4, t_end) == doctest::Approx(35.0).epsilon(1e-12));
    CHECK(b0_from_sbr(1e15, out, dt, 0.8, 0.4, t_end) < 1e-12 * b0);
    CHECK_THROWS_AS(b0_from_sbr(0.0, out, dt, 0.8, 0.4, t_end), sim_error);
}

TEST_CASE("ideal interference gives unit visibility at every window") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ideal_scheme(), 0.0, train.t_rep);
    const HomArms arms = hom_arms(a, a, BeamSplitter{0.5}, DetectionModel{1, 1, 0, 0}, 0.5 * train.t_rep);
    const VisibilityCurve v = visibility_curve(arms.parallel, arms.orthogonal, default_windows(train.t_rep));
    for (double val : v.values) CHECK(std::abs(val - 1.0) < 1e-6);
    // Non-increasing over the window range at ideal settings.
    for (std::size_t i = 1; i < v.values.size(); ++i)
        CHECK(v.values[i - 1] >= v.values[i] - 1e-9);
}

TEST_CASE("unbalanced splitter with pure photons matches the two-photon amplitude oracle") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ideal_scheme(), 0.0, train.t_rep);
    const double t = 0.436;
    const HomArms arms = hom_arms(a, a, BeamSplitter{t}, DetectionModel{1, 1, 0, 0}, 0.5 * train.t_rep);
    const double expected = 1.0 - std::pow(2.0 * t - 1.0, 2) / (t * t + (1.0 - t) * (1.0 - t));
    std::vector<double> windows{0.05e-9};
    for (double w : default_windows(train.t_rep)) windows.push_back(w);
    const VisibilityCurve v = visibility_curve(arms.parallel, arms.orthogonal, windows);
    // Pure wave packets keep the ratio constant in T; check V(0+) sharply.
    CHECK(std::abs(v.values.front() - expected) < 1e-4);
    for (double val : v.values) CHECK(std::abs(val - expected) < 1e-4);
}

TEST_CASE("visibility needs coincidences: zero orthogonal mass is undefined") {
    CorrelationGrid par, perp;
    par.t_axis = perp.t_axis = {0.0, 1e-9, 2e-9};
    par.tau_axis = perp.tau_axis = {-1e-9, 0.0, 1e-9};
    par.values = Eigen::MatrixXd::Zero(3, 3);
    perp.values = Eigen::MatrixXd::Zero(3, 3);
    CHECK_THROWS_AS(visibility_curve(par, perp, {1e-9}), undefined_value_error);
}

TEST_CASE("polarization mismatch at or beyond pi/2 violates the model domain") {
    DetectionModel det{1.0, 1.0, 0.0, M_PI_2};
    CHECK_THROWS_AS(det.validate(), config_error);
}

TEST_CASE("fitting the polarization mismatch recovers the generator") {
    const PulseTrain train = grid_train(kTwoPi * 40e6);
    const CoherenceGrid a = make_g1(train, ca_scheme(), kDefaultDephasing, train.t_rep);
    const BeamSplitter bs{0.436};
    const std::vector<double> windows = default_windows(train.t_rep);
    auto generator = [&](double phi) {
        const HomArms arms = hom_arms(a, a, bs, DetectionModel{1.0, 1.0, 0.0, phi}, 0.5 * train.t_rep);
        return visibility_curve(arms.parallel, arms.orthogonal, windows);
    };
    for (double truth : {0.2, 0.0}) {
        const VisibilityCurve measured = generator(truth);
        const double fitted = fit_delta_phi(measured, generator);
        CHECK(std::abs(fitted - truth) < 1e-3);
    }
    // Fits in the physical regime stay below pi/8 for mild mismatch data.
    CHECK(fit_delta_phi(generator(0.25), generator) < M_PI / 8.0);
}

}  // TEST_SUITE
