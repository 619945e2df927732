#pragma once

#include "ramanhom/atomic_model.hpp"
#include "ramanhom/pulse.hpp"
#include "ramanhom/units.hpp"

namespace ramanhom::testing {

// Default emitter profile used throughout: P-state decay constants with the
// 0.899 Raman branching ratio and 6.92 ns lifetime.
inline LevelScheme ca_scheme() { return {1.350e8, 8.48e6, 9.55e5, 0.0}; }

inline constexpr double kDefaultDephasing = kTwoPi * 50e3;

// The 15.08 ns / beta 2.28 / 104.25 ns operating point.
inline PulseTrain short_pulse_train(double peak_rabi, std::size_t n_pulses = 80) {
    PulseTrain train;
    train.shape = PulseShape::from_fwhm(15.08e-9, 2.28, peak_rabi, 60e-9);
    train.n_pulses = n_pulses;
    train.t_rep = 104.25e-9;
    return train;
}

}  // namespace ramanhom::testing
