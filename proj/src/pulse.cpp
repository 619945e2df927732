#include "ramanhom/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ramanhom {

void PulseShape::validate() const {
    if (!(sigma > 0.0)) throw config_error("PulseShape: sigma must be positive");
    if (!(beta > 0.0)) throw config_error("PulseShape: beta must be positive");
    if (amplitude < 0.0) throw config_error("PulseShape: amplitude must be nonnegative");
    if (peak_rabi < 0.0) throw config_error("PulseShape: peak_rabi must be nonnegative");
}

double PulseShape::support_halfwidth(double threshold) const {
    if (!(threshold > 0.0) || threshold >= 1.0)
        throw config_error("support_halfwidth: threshold must be in (0, 1)");
    // I(t)/A = exp(-u^beta) = threshold  =>  u = (ln 1/threshold)^(1/beta)
    return std::sqrt(2.0) * sigma * std::pow(-std::log(threshold), 1.0 / beta);
}

PulseShape PulseShape::from_fwhm(double t_pulse, double beta, double peak_rabi,
                                 double center, double amplitude) {
    PulseShape s;
    s.sigma = sigma_for_fwhm(t_pulse, beta);
    s.beta = beta;
    s.peak_rabi = peak_rabi;
    s.center = center;
    s.amplitude = amplitude;
    s.validate();
    return s;
}

double intensity_at(const PulseShape& shape, double t) {
    const double u = std::abs(t - shape.center) / (std::sqrt(2.0) * shape.sigma);
    return shape.amplitude * std::exp(-std::pow(u, shape.beta));
}

double rabi_at(const PulseShape& shape, double t) {
    if (shape.peak_rabi == 0.0) return 0.0;
    if (shape.amplitude <= 0.0)
        throw config_error("rabi_at: zero-amplitude shape cannot carry a Rabi frequency");
    const double u = std::abs(t - shape.center) / (std::sqrt(2.0) * shape.sigma);
    // sqrt of the normalized intensity: halves the exponent.
    return shape.peak_rabi * std::exp(-0.5 * std::pow(u, shape.beta));
}

double fwhm(double sigma, double beta) {
    if (!(sigma > 0.0) || !(beta > 0.0))
        throw config_error("fwhm: sigma and beta must be positive");
    return 2.0 * std::sqrt(2.0) * std::pow(std::log(2.0), 1.0 / beta) * sigma;
}

double fwhm(const PulseShape& shape) { return fwhm(shape.sigma, shape.beta); }

double sigma_for_fwhm(double t_pulse, double beta) {
    if (!(t_pulse > 0.0) || !(beta > 0.0))
        throw config_error("sigma_for_fwhm: t_pulse and beta must be positive");
    return t_pulse / (2.0 * std::sqrt(2.0) * std::pow(std::log(2.0), 1.0 / beta));
}

void PulseTrain::validate() const {
    shape.validate();
    if (n_pulses < 1) throw config_error("PulseTrain: n_pulses must be >= 1");
    if (!(t_rep > 0.0)) throw config_error("PulseTrain: t_rep must be positive");
    if (!(truncation_threshold > 0.0) || truncation_threshold >= 1.0)
        throw config_error("PulseTrain: truncation threshold must be in (0, 1)");
    if (n_pulses > 1 && 2.0 * shape.support_halfwidth(truncation_threshold) >= t_rep)
        throw config_error("PulseTrain: consecutive pulse envelopes overlap above the truncation threshold");
}

double PulseTrain::support_end() const {
    return pulse_center(n_pulses - 1) + support_halfwidth();
}

std::size_t PulseTrain::window_index(double t) const {
    const double x = std::floor((t - shape.center) / t_rep + 0.5);
    const double k = std::clamp(x, 0.0, static_cast<double>(n_pulses - 1));
    return static_cast<std::size_t>(k);
}

double PulseTrain::rabi_at(double t) const {
    const std::size_t k = window_index(t);
    const double tk = t - static_cast<double>(k) * t_rep;
    if (std::abs(tk - shape.center) > support_halfwidth()) return 0.0;
    return ramanhom::rabi_at(shape, tk);
}

double PulseTrain::envelope_at(double t) const {
    const std::size_t k = window_index(t);
    const double tk = t - static_cast<double>(k) * t_rep;
    if (std::abs(tk - shape.center) > support_halfwidth()) return 0.0;
    return intensity_at(shape, tk) / (shape.amplitude > 0 ? shape.amplitude : 1.0);
}

}  // namespace ramanhom
