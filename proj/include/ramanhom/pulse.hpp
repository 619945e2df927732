#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ramanhom/atomic_model.hpp"
#include "ramanhom/errors.hpp"

namespace ramanhom {

// Generalized-Gaussian excitation pulse,
//   I(t) = A * exp(-(|t - t0| / (sqrt(2) sigma))^beta),
// describing the temporal INTENSITY profile; the Rabi envelope is its square
// root scaled to peak_rabi. beta = 2 is a plain Gaussian, large beta
// approaches a flat top of half-width sqrt(2) sigma.
struct PulseShape {
    double amplitude = 1.0;  // peak intensity (arbitrary units)
    double center = 0.0;     // s
    double sigma = 1.0;      // s
    double beta = 2.0;       // dimensionless shape parameter
    double peak_rabi = 0.0;  // rad/s

    void validate() const;

    // Half-width of the support where intensity >= threshold * amplitude.
    double support_halfwidth(double threshold) const;

    static PulseShape from_fwhm(double t_pulse, double beta, double peak_rabi,
                                double center = 0.0, double amplitude = 1.0);
};

double intensity_at(const PulseShape& shape, double t);
double rabi_at(const PulseShape& shape, double t);

// FWHM of the intensity profile, T = 2*sqrt(2)*(ln 2)^(1/beta)*sigma, and its
// exact inverse.
double fwhm(double sigma, double beta);
double fwhm(const PulseShape& shape);
double sigma_for_fwhm(double t_pulse, double beta);

// Periodic train of identical pulses. Pulse k is centered at
// shape.center + k * t_rep. Envelopes must not overlap above the truncation
// threshold (the same threshold bounds all propagation windows).
struct PulseTrain {
    PulseShape shape;
    std::size_t n_pulses = 1;
    double t_rep = 0.0;                 // s
    double truncation_threshold = 1e-6; // relative intensity cut

    void validate() const;
    double pulse_center(std::size_t k) const { return shape.center + static_cast<double>(k) * t_rep; }
    double support_halfwidth() const { return shape.support_halfwidth(truncation_threshold); }
    // End of the train including the last pulse's envelope support.
    double support_end() const;
    // Index of the repetition-period window centered on the nearest pulse;
    // photons emitted within [center_k - t_rep/2, center_k + t_rep/2) belong
    // to excitation pulse k. Clamped to [0, n_pulses-1].
    std::size_t window_index(double t) const;

    double rabi_at(double t) const;
    double envelope_at(double t) const;  // relative intensity in [0, 1]
};

struct PulseFitResult {
    PulseShape shape;                  // fitted parameters (peak_rabi untouched)
    double amplitude_err = 0.0;
    double center_err = 0.0;
    double sigma_err = 0.0;
    double beta_err = 0.0;
    double fwhm_value = 0.0;           // via the exact FWHM formula
    double fwhm_err = 0.0;
    double chi2 = 0.0;                 // weighted residual sum of squares
    std::size_t dof = 0;
    std::size_t iterations = 0;
};

// Weighted least-squares fit of the generalized Gaussian to a histogram of
// (bin center, count) pairs. Counts are Poisson-weighted (w = 1/max(c,1)).
PulseFitResult fit_pulse(const std::vector<std::pair<double, double>>& samples);

struct CalibrationSettings {
    double omega_max = 2.0e10;  // rad/s; upper bisection bracket
    double tolerance = 1e-4;    // |p854 - target| convergence goal
    double rtol = 1e-10;        // integrator tolerance passed through
};

// Finds the peak Rabi frequency at which one pulse emits an 854-nm photon
// with the requested probability. Bracketed bisection on the monotone map
// peak_rabi -> p854; throws calibration_error when the target exceeds the
// branching ceiling or lies outside the bracket.
double calibrate_peak_rabi(const PulseTrain& train, const LevelScheme& scheme,
                           double dephasing, double target_p854,
                           const CalibrationSettings& settings = {});

}  // namespace ramanhom
