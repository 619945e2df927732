#include <cmath>
#include <string>

#include "ramanhom/lindblad.hpp"
#include "ramanhom/pulse.hpp"

namespace ramanhom {

double calibrate_peak_rabi(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                           double target_p854, const CalibrationSettings& settings) {
    train.validate();
    scheme.validate();
    if (!(settings.tolerance > 0.0)) throw config_error("calibrate: tolerance must be positive");
    if (!(target_p854 > 0.0)) throw config_error("calibrate: target must be positive");
    const double ceiling = branching_ratio(scheme);
    if (target_p854 >= ceiling)
        throw calibration_error("calibrate: unreachable target " + std::to_string(target_p854) +
                                " at or above the branching ceiling " + std::to_string(ceiling));

    auto p854_at = [&](double omega) {
        PulseTrain probe = train;
        probe.shape.peak_rabi = omega;
        return p854_of_train(probe, scheme, dephasing, settings.rtol);
    };

    double lo = 0.0, hi = settings.omega_max;
    double p_lo = 0.0;
    double p_hi = p854_at(hi);
    if (p_hi + settings.tolerance < target_p854)
        throw calibration_error("calibrate: no bracket; p854(omega_max) = " + std::to_string(p_hi) +
                                " below target " + std::to_string(target_p854));

    // The response is monotone on the bracket; tolerate only rounding-level
    // violations so a genuinely non-monotone configuration fails loudly.
    const double slack = std::max(1e-12, 1e-2 * settings.tolerance);

    double omega = hi, p_mid = p_hi;
    for (int it = 0; it < 200; ++it) {
        omega = 0.5 * (lo + hi);
        p_mid = p854_at(omega);
        if (p_mid < p_lo - slack || p_mid > p_hi + slack)
            throw calibration_error("calibrate: non-monotone p854 response near omega = " +
                                    std::to_string(omega));
        if (std::abs(p_mid - target_p854) <= 0.5 * settings.tolerance) return omega;
        if (p_mid < target_p854) {
            lo = omega;
            p_lo = p_mid;
        } else {
            hi = omega;
            p_hi = p_mid;
        }
    }
    if (std::abs(p_mid - target_p854) <= settings.tolerance) return omega;
    throw calibration_error("calibrate: bisection failed to reach target within tolerance");
}

}  // namespace ramanhom
