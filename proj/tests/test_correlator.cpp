#include <cmath>

#include "doctest.h"
#include "ramanhom/correlator.hpp"
#include "ramanhom/trajectory.hpp"
#include "test_fixtures.hpp"

using namespace ramanhom;
using ramanhom::testing::ca_scheme;
using ramanhom::testing::kDefaultDephasing;
using ramanhom::testing::short_pulse_train;

namespace {

// Strong-ish ten-pulse operating point; cheap and feature-rich.
PulseTrain test_train(std::size_t n_pulses = 10) {
    return short_pulse_train(kTwoPi * 25e6, n_pulses);
}

CorrelationRequest fig3_request(const PulseTrain& train, double dt = 0.5e-9) {
    CorrelationRequest req;
    req.t_start = 0.0;
    req.t_end = 3.0 * train.t_rep;
    req.tau_min = -1.5 * train.t_rep;
    req.tau_max = 0.0;
    req.dt = dt;
    return req;
}

std::vector<double> tau_marginal(const CorrelationGrid& g) {
    std::vector<double> m(g.tau_axis.size(), 0.0);
    const double dt = g.dt();
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i + 1 < g.values.rows(); ++i)
            s += 0.5 * (g.values(i, j) + g.values(i + 1, j)) * dt;
        m[static_cast<std::size_t>(j)] = s;
    }
    return m;
}

}  // namespace

TEST_SUITE("correlator") {

TEST_CASE("no back-decay channel means an identically zero correlation") {
    LevelScheme s = ca_scheme();
    s.gamma_back = 0.0;
    const PulseTrain train = test_train(2);
    CorrelationRequest req = fig3_request(train);
    req.t_end = 2.0 * train.t_rep;
    const CorrelationGrid grid = g2_back_decay(train, s, 0.0, req);
    CHECK(grid.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("positive delays are exactly zero and flagged") {
    const PulseTrain train = test_train(2);
    CorrelationRequest req;
    req.t_start = 0.0;
    req.t_end = 2.0 * train.t_rep;
    req.tau_min = -0.5 * train.t_rep;
    req.tau_max = 0.25 * train.t_rep;
    req.dt = 0.5e-9;
    const CorrelationGrid grid = g2_back_decay(train, ca_scheme(), kDefaultDephasing, req);
    CHECK(grid.positive_tau_zeroed);
    double max_positive = 0.0;
    bool any_negative_mass = false;
    for (std::size_t j = 0; j < grid.tau_axis.size(); ++j) {
        const double col_max = grid.values.col(static_cast<Eigen::Index>(j)).cwiseAbs().maxCoeff();
        if (grid.tau_axis[j] > 0.0) max_positive = std::max(max_positive, col_max);
        if (grid.tau_axis[j] < 0.0 && col_max > 0.0) any_negative_mass = true;
    }
    CHECK(max_positive <= 1e-14);
    CHECK(any_negative_mass);
    grid.validate();
}

TEST_CASE("correlation mass sits at small delays with a secondary peak near -t_rep") {
    const PulseTrain train = test_train(3);
    const CorrelationGrid grid = g2_back_decay(train, ca_scheme(), kDefaultDephasing,
                                               fig3_request(train));
    const std::vector<double> m = tau_marginal(grid);
    auto value_near = [&](double tau) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < grid.tau_axis.size(); ++j)
            if (std::abs(grid.tau_axis[j] - tau) < std::abs(grid.tau_axis[best] - tau)) best = j;
        return m[best];
    };
    auto peak_in = [&](double lo, double hi) {
        double peak = 0.0;
        for (std::size_t j = 0; j < grid.tau_axis.size(); ++j)
            if (grid.tau_axis[j] >= lo && grid.tau_axis[j] <= hi) peak = std::max(peak, m[j]);
        return peak;
    };
    const double t_pulse = 15.08e-9;
    const double main_peak = peak_in(-2.0 * t_pulse, 0.0);
    const double echo_peak = peak_in(-train.t_rep - 2.0 * t_pulse, -train.t_rep + 2.0 * t_pulse);
    const double valley = value_near(-0.5 * train.t_rep);
    // Both peaks rise far above the inter-pulse valley: the same-pulse
    // accumulation just below zero delay and the echo of the preceding pulse.
    CHECK(main_peak > 10.0 * valley);
    CHECK(echo_peak > 10.0 * valley);
    // Within the same-pulse window the mass concentrates at |tau| < 2 T_pulse.
    double inner = 0.0, rest = 0.0;
    for (std::size_t j = 0; j < grid.tau_axis.size(); ++j) {
        if (grid.tau_axis[j] < -0.5 * train.t_rep || grid.tau_axis[j] > 0.0) continue;
        (grid.tau_axis[j] >= -2.0 * t_pulse ? inner : rest) += m[j];
    }
    CHECK(inner > 5.0 * rest);
}

TEST_CASE("mean_back_decays fast path matches the direct evaluation") {
    const PulseTrain train = test_train(5);
    MeanBackDecayOptions fast{0.5e-9, 1e-10, false};
    MeanBackDecayOptions direct{0.5e-9, 1e-10, true};
    const double n_fast = mean_back_decays(train, ca_scheme(), kDefaultDephasing, fast);
    const double n_direct = mean_back_decays(train, ca_scheme(), kDefaultDephasing, direct);
    CHECK(n_fast == doctest::Approx(n_direct).epsilon(2e-3));
}

TEST_CASE("mean_back_decays is stable under grid refinement") {
    const PulseTrain train = test_train(10);
    MeanBackDecayOptions coarse{0.5e-9, 1e-10, false};
    MeanBackDecayOptions fine{0.25e-9, 1e-10, false};
    const double a = mean_back_decays(train, ca_scheme(), kDefaultDephasing, coarse);
    const double b = mean_back_decays(train, ca_scheme(), kDefaultDephasing, fine);
    CHECK(std::abs(a - b) / b < 1e-3);
}

TEST_CASE("widening the window beyond t_rep/2 changes a single-pulse <N> negligibly") {
    // Calibrated weak-drive point; the conditional re-excitation tail past
    // t_rep/2 is about 1e-4 of <N> there.
    PulseTrain train = short_pulse_train(kTwoPi * 12.314e6, 1);
    const LevelScheme s = ca_scheme();
    auto n_with_window = [&](double tau_lo) {
        CorrelationRequest req;
        req.t_start = 0.0;
        req.t_end = train.t_rep + 150e-9;
        req.tau_min = tau_lo;
        req.tau_max = 0.0;
        req.dt = 0.5e-9;
        const CorrelationGrid grid = g2_back_decay(train, s, kDefaultDephasing, req);
        const std::vector<double> m = tau_marginal(grid);
        double num = 0.0;
        for (std::size_t j = 0; j + 1 < m.size(); ++j) num += 0.5 * (m[j] + m[j + 1]) * grid.dt();
        // Denominator: single-pulse 854 emission probability.
        const double den = p854_of_train(train, s, kDefaultDephasing);
        return num / den;
    };
    const double narrow = n_with_window(-0.5 * train.t_rep);
    const double wide = n_with_window(-1.5 * train.t_rep);
    CHECK(std::abs(wide - narrow) < 2e-4);
}

TEST_CASE("zero 854 emission leaves <N> undefined") {
    const PulseTrain off = short_pulse_train(0.0, 5);
    CHECK_THROWS_AS(mean_back_decays(off, ca_scheme(), 0.0, {}), undefined_value_error);
    LevelScheme no854 = ca_scheme();
    no854.gamma_854 = 0.0;
    CHECK_THROWS_AS(mean_back_decays(test_train(5), no854, 0.0, {}), undefined_value_error);
}

TEST_CASE("g1 diagonal equals the 854 emission rate") {
    const PulseTrain train = test_train(1);
    const LevelScheme s = ca_scheme();
    SimGrid grid{0.0, train.t_rep, 0.5e-9, 1e-10, 1e-12};
    const CoherenceGrid g = g1(train, s, kDefaultDephasing, Channel::raman854, grid);
    const StateTrajectory traj = propagate(ground_state(), train, s, kDefaultDephasing, grid);
    const std::vector<double> rate = emission_rate(traj, s, Channel::raman854);
    REQUIRE(traj.size() == g.axis.size());
    for (std::size_t i = 0; i < g.axis.size(); ++i) {
        CHECK(std::abs(g.values(i, i).imag()) < 1e-9 * s.gamma_854);
        CHECK(g.values(i, i).real() == doctest::Approx(rate[i]).epsilon(1e-6));
    }
}

TEST_CASE("g1 satisfies Hermitian symmetry and the Cauchy-Schwarz bound") {
    const PulseTrain train = test_train(1);
    SimGrid grid{20e-9, 180e-9, 1e-9, 1e-10, 1e-12};
    const CoherenceGrid g = g1(train, ca_scheme(), kDefaultDephasing, Channel::raman854, grid);
    const std::size_t n = g.axis.size();
    const double scale = g.values.cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < n; i += 7) {
        for (std::size_t j = 0; j < n; j += 7) {
            CHECK(std::abs(g.values(i, j) - std::conj(g.values(j, i))) < 1e-12 * scale);
            const double lhs = std::norm(g.values(i, j));
            const double rhs = g.values(i, i).real() * g.values(j, j).real();
            CHECK(lhs <= rhs * (1.0 + 1e-6) + 1e-12 * scale * scale);
        }
    }
}

TEST_CASE("g1 agrees with the independent full-block evaluation of both orderings") {
    const PulseTrain train = test_train(2);
    const LevelScheme s = ca_scheme();
    SimGrid grid{40e-9, 150e-9, 2e-9, 1e-10, 1e-12};
    const CoherenceGrid g = g1(train, s, kDefaultDephasing, Channel::raman854, grid);
    const double scale = g.values.cwiseAbs().maxCoeff();
    for (std::size_t i : {std::size_t{10}, std::size_t{25}}) {
        for (std::size_t j : {std::size_t{5}, std::size_t{30}, std::size_t{50}}) {
            const auto full = g1_entry_full(train, s, kDefaultDephasing, g.axis[i], g.axis[j]);
            CHECK(std::abs(g.values(i, j) - full) < 1e-7 * scale);
        }
    }
}

TEST_CASE("g1 rejects channels other than raman854") {
    SimGrid grid{0.0, 10e-9, 1e-9, 1e-10, 1e-12};
    CHECK_THROWS_AS(g1(test_train(1), ca_scheme(), 0.0, Channel::back393, grid), sim_error);
}

TEST_CASE("single-pulse restriction is the identity") {
    const PulseTrain train = test_train(1);
    SimGrid grid{0.0, train.t_rep, 1e-9, 1e-10, 1e-12};
    const CoherenceGrid g = g1(train, ca_scheme(), kDefaultDephasing, Channel::raman854, grid);
    const CoherenceGrid r = restrict_to_same_pulse(g, train);
    CHECK((g.values - r.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("restriction zeroes cross-window entries and keeps the diagonal") {
    const PulseTrain train = test_train(3);
    SimGrid grid{0.0, 3 * train.t_rep, 1e-9, 1e-10, 1e-12};
    const CoherenceGrid g = g1(train, ca_scheme(), kDefaultDephasing, Channel::raman854, grid);
    const CoherenceGrid r = restrict_to_same_pulse(g, train);
    bool killed_something = false;
    for (std::size_t i = 0; i < g.axis.size(); i += 11) {
        for (std::size_t j = 0; j < g.axis.size(); j += 11) {
            if (train.window_index(g.axis[i]) != train.window_index(g.axis[j])) {
                CHECK(std::abs(r.values(i, j)) == 0.0);
                if (std::abs(g.values(i, j)) > 0.0) killed_something = true;
            } else {
                CHECK(r.values(i, j) == g.values(i, j));
            }
        }
    }
    CHECK(killed_something);
}

TEST_CASE("correlation amplitudes match the trajectory oracle in coarse bins") {
    const PulseTrain train = test_train(10);
    const LevelScheme s = ca_scheme();
    const double deph = kDefaultDephasing;

    CorrelationRequest req;
    req.t_start = 0.0;
    req.t_end = 10.0 * train.t_rep;
    req.tau_min = -0.5 * train.t_rep;
    req.tau_max = 0.0;
    req.dt = 0.5e-9;
    const CorrelationGrid grid = g2_back_decay(train, s, deph, req);
    const std::vector<double> m = tau_marginal(grid);

    const std::uint64_t n_traj = 20000;
    TrajectoryOptions topt;
    topt.keep_events = true;
    const TrajectoryResult res = run_trajectories(train, s, deph, n_traj, 4242, topt);

    // Expected pair counts per coarse tau bin = n_traj * iint G dt dtau.
    const double bin = 10e-9;
    const int n_bins = 5;
    std::vector<double> expected(n_bins, 0.0), observed(n_bins, 0.0);
    for (std::size_t j = 0; j + 1 < m.size(); ++j) {
        const double tau_mid = 0.5 * (grid.tau_axis[j] + grid.tau_axis[j + 1]);
        const int b = static_cast<int>(std::floor(-tau_mid / bin));
        if (b >= 0 && b < n_bins)
            expected[static_cast<std::size_t>(b)] +=
                0.5 * (m[j] + m[j + 1]) * grid.dt() * static_cast<double>(n_traj);
    }
    std::size_t i = 0;
    while (i < res.events.size()) {
        std::size_t j = i;
        while (j < res.events.size() &&
               res.events[j].trajectory_id == res.events[i].trajectory_id)
            ++j;
        double t854 = -1.0;
        for (std::size_t k = i; k < j; ++k)
            if (res.events[k].channel == Channel::raman854) t854 = res.events[k].time;
        if (t854 >= 0.0) {
            for (std::size_t k = i; k < j; ++k) {
                if (res.events[k].channel != Channel::back393) continue;
                const double tau = res.events[k].time - t854;
                if (tau > 0.0 || tau < -0.5 * train.t_rep) continue;
                const int b = static_cast<int>(std::floor(-tau / bin));
                if (b >= 0 && b < n_bins) observed[static_cast<std::size_t>(b)] += 1.0;
            }
        }
        i = j;
    }
    for (int b = 0; b < n_bins; ++b) {
        const double sigma = std::sqrt(std::max(expected[b], 1.0));
        CHECK(std::abs(observed[b] - expected[b]) < 4.0 * sigma);
    }
}

}  // TEST_SUITE
