#pragma once

#include "ramanhom/errors.hpp"

namespace ramanhom {

// Emission channels of the Lambda emitter. back393 returns population to the
// ground state; the two Raman channels terminate in dark metastable states.
enum class Channel { back393, raman854, raman850 };

const char* channel_name(Channel c);

// Four-level basis used throughout: ground, excited, and the two dark sinks.
enum Level : int { lvl_ground = 0, lvl_excited = 1, lvl_dark854 = 2, lvl_dark850 = 3 };

// Decay rates and laser detuning of the driven Lambda system. Immutable value
// type; all rates are exponential decay constants in 1/s, the detuning is an
// angular frequency in rad/s (laser relative to the g->e transition).
struct LevelScheme {
    double gamma_back = 0.0;  // e -> g, 393 nm
    double gamma_854 = 0.0;   // e -> d854, Raman channel
    double gamma_850 = 0.0;   // e -> d850, parasitic channel
    double detuning = 0.0;

    void validate() const;
    double total_decay_rate() const { return gamma_back + gamma_854 + gamma_850; }
};

// Fraction of Raman decays that end in the 854 sink, the ceiling on the
// useful photon probability per excitation chain.
double branching_ratio(const LevelScheme& scheme);

}  // namespace ramanhom
