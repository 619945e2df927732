#include <cmath>
#include <random>

#include "doctest.h"
#include "ramanhom/pulse.hpp"
#include "ramanhom/rng.hpp"
#include "test_fixtures.hpp"

using namespace ramanhom;

namespace {

std::vector<std::pair<double, double>> synthetic_histogram(const PulseShape& shape, double t0,
                                                           double t1, double bin, bool poisson,
                                                           std::uint64_t seed) {
    std::vector<std::pair<double, double>> out;
    std::mt19937_64 rng = substream(seed, "histogram");
    for (double t = t0; t <= t1; t += bin) {
        double c = intensity_at(shape, t);
        if (poisson) {
            std::poisson_distribution<long> dist(c);
            c = static_cast<double>(dist(rng));
        }
        out.emplace_back(t, c);
    }
    return out;
}

}  // namespace

TEST_SUITE("pulse") {

TEST_CASE("intensity peaks at the center with value A") {
    PulseShape s{3.5, 10e-9, 4e-9, 2.28, 0.0};
    CHECK(intensity_at(s, s.center) == doctest::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("beta = 2 is a Gaussian: half maximum at t0 +- sigma sqrt(2 ln 2)") {
    PulseShape s{2.0, 0.0, 3e-9, 2.0, 0.0};
    const double half_t = s.sigma * std::sqrt(2.0 * std::log(2.0));
    CHECK(intensity_at(s, half_t) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(intensity_at(s, -half_t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("large beta approaches a flat top of half-width sqrt(2) sigma") {
    PulseShape s{1.0, 0.0, 5e-9, 100.0, 0.0};
    const double edge = std::sqrt(2.0) * s.sigma;
    CHECK(intensity_at(s, 0.95 * edge) > 0.99);
    CHECK(intensity_at(s, 1.05 * edge) < 1e-50);
    CHECK(intensity_at(s, edge) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("intensity is even about the center") {
    PulseShape s{1.0, 25e-9, 6.26e-9, 2.28, 0.0};
    for (double dt : {0.1e-9, 1e-9, 5e-9, 14e-9, 40e-9})
        CHECK(intensity_at(s, s.center + dt) ==
              doctest::Approx(intensity_at(s, s.center - dt)).epsilon(1e-14));
}

TEST_CASE("rabi envelope peaks at peak_rabi and vanishes with it") {
    PulseShape s{1.0, 0.0, 6e-9, 2.28, 2e8};
    CHECK(rabi_at(s, 0.0) == doctest::Approx(2e8).epsilon(1e-15));
    s.peak_rabi = 0.0;
    CHECK(rabi_at(s, 3e-9) == 0.0);
}

TEST_CASE("zero-amplitude shape with nonzero drive is invalid") {
    PulseShape s{0.0, 0.0, 6e-9, 2.0, 1e8};
    CHECK_THROWS_AS(rabi_at(s, 0.0), config_error);
}

TEST_CASE("beta = 2 rabi envelope is a Gaussian of width sigma sqrt 2") {
    PulseShape s{1.0, 0.0, 4e-9, 2.0, 1e8};
    // Half maximum of the amplitude envelope at 2 sigma sqrt(ln 2).
    const double t_half = 2.0 * s.sigma * std::sqrt(std::log(2.0));
    CHECK(rabi_at(s, t_half) == doctest::Approx(0.5e8).epsilon(1e-12));
}

TEST_CASE("Gaussian FWHM formula") {
    CHECK(fwhm(1.0, 2.0) == doctest::Approx(2.0 * std::sqrt(2.0 * std::log(2.0))).epsilon(1e-15));
}

TEST_CASE("Table-like inversion: 15.08 ns at beta 2.28 gives sigma near 6.26 ns") {
    const double sigma = sigma_for_fwhm(15.08e-9, 2.28);
    CHECK(sigma == doctest::Approx(6.26e-9).epsilon(1e-3));
    CHECK(fwhm(sigma, 2.28) == doctest::Approx(15.08e-9).epsilon(1e-15));
}

TEST_CASE("fwhm and sigma_for_fwhm are exact inverses over random shapes") {
    std::mt19937_64 rng = substream(7, "roundtrip");
    std::uniform_real_distribution<double> sig(0.5e-9, 10e-9), bet(0.5, 10.0);
    for (int i = 0; i < 200; ++i) {
        const double sigma = sig(rng), beta = bet(rng);
        const double t = fwhm(sigma, beta);
        CHECK(sigma_for_fwhm(t, beta) == doctest::Approx(sigma).epsilon(1e-14));
    }
}

TEST_CASE("nonpositive FWHM inputs are domain errors") {
    CHECK_THROWS_AS(fwhm(-1.0, 2.0), config_error);
    CHECK_THROWS_AS(fwhm(1.0, 0.0), config_error);
    CHECK_THROWS_AS(sigma_for_fwhm(0.0, 2.0), config_error);
    CHECK_THROWS_AS(sigma_for_fwhm(1e-9, -2.0), config_error);
}

TEST_CASE("noiseless fit recovers the generator to 1e-6 relative") {
    PulseShape truth{1e4, 50e-9, 6.26e-9, 2.28, 0.0};
    const auto hist = synthetic_histogram(truth, 0.0, 100e-9, 512e-12, false, 0);
    const PulseFitResult fit = fit_pulse(hist);
    CHECK(fit.shape.amplitude == doctest::Approx(truth.amplitude).epsilon(1e-6));
    CHECK(fit.shape.center == doctest::Approx(truth.center).epsilon(1e-6));
    CHECK(fit.shape.sigma == doctest::Approx(truth.sigma).epsilon(1e-6));
    CHECK(fit.shape.beta == doctest::Approx(truth.beta).epsilon(1e-6));
    CHECK(fit.fwhm_value == doctest::Approx(fwhm(truth.sigma, truth.beta)).epsilon(1e-6));
}

TEST_CASE("Poisson-noise fit recovers beta within 2 percent and FWHM within 1 percent") {
    PulseShape truth{1e4, 50e-9, sigma_for_fwhm(15.08e-9, 2.28), 2.28, 0.0};
    const auto hist = synthetic_histogram(truth, 0.0, 100e-9, 512e-12, true, 42);
    const PulseFitResult fit = fit_pulse(hist);
    CHECK(std::abs(fit.shape.beta - truth.beta) / truth.beta < 0.02);
    CHECK(std::abs(fit.fwhm_value - 15.08e-9) / 15.08e-9 < 0.01);
    CHECK(fit.beta_err > 0.0);
    CHECK(fit.fwhm_err > 0.0);
}

TEST_CASE("short- and long-pulse regimes both fit") {
    for (auto [t_pulse, beta] : {std::pair{6.52e-9, 1.85}, std::pair{56.6e-9, 4.53}}) {
        PulseShape truth{5e3, 80e-9, sigma_for_fwhm(t_pulse, beta), beta, 0.0};
        const auto hist = synthetic_histogram(truth, 0.0, 160e-9, 512e-12, true, 11);
        const PulseFitResult fit = fit_pulse(hist);
        CHECK(std::abs(fit.shape.beta - beta) / beta < 0.05);
        CHECK(std::abs(fit.fwhm_value - t_pulse) / t_pulse < 0.01);
    }
}

TEST_CASE("degenerate histograms are fit failures") {
    CHECK_THROWS_AS(fit_pulse({{0.0, 0.0}, {1e-9, 5.0}, {2e-9, 0.0}, {3e-9, 0.0}, {4e-9, 0.0}}),
                    fit_error);
    CHECK_THROWS_AS(fit_pulse({{0.0, 0.0}, {1e-9, 0.0}, {2e-9, 0.0}, {3e-9, 0.0}, {4e-9, 0.0}}),
                    fit_error);
    CHECK_THROWS_AS(fit_pulse({{0.0, 1.0}, {1e-9, 2.0}}), fit_error);
}

TEST_CASE("train envelope overlap above the truncation threshold is rejected") {
    PulseTrain train;
    train.shape = PulseShape::from_fwhm(60e-9, 2.0, 0.0, 50e-9);
    train.n_pulses = 80;
    train.t_rep = 104.25e-9;
    CHECK_THROWS_AS(train.validate(), config_error);
    train.t_rep = 400e-9;
    CHECK_NOTHROW(train.validate());
}

TEST_CASE("window index tiles repetition periods centered on the pulses") {
    const PulseTrain train = testing::short_pulse_train(0.0, 10);
    CHECK(train.window_index(60e-9) == 0);
    CHECK(train.window_index(60e-9 + 104.25e-9) == 1);
    CHECK(train.window_index(60e-9 + 0.49 * 104.25e-9) == 0);
    CHECK(train.window_index(60e-9 + 0.51 * 104.25e-9) == 1);
    CHECK(train.window_index(0.0) == 0);                 // clamped before the train
    CHECK(train.window_index(2e-6) == 9);                // clamped past the train
}

}  // TEST_SUITE
