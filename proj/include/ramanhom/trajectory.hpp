#pragma once

#include <cstdint>
#include <vector>

#include "ramanhom/atomic_model.hpp"
#include "ramanhom/pulse.hpp"

namespace ramanhom {

struct EmissionEvent {
    double time = 0.0;
    Channel channel = Channel::back393;
    std::uint32_t pulse_index = 0;
    std::uint64_t trajectory_id = 0;
};

struct TrajectoryStats {
    std::uint64_t n_trajectories = 0;
    // Histogram of N: back-decays within [t854 - t_rep/2, t854], conditioned
    // on a raman854 event (the same window the correlation estimator uses).
    std::vector<std::uint64_t> n_histogram;
    std::uint64_t count_back393 = 0;
    std::uint64_t count_raman854 = 0;
    std::uint64_t count_raman850 = 0;
    std::uint64_t seed = 0;

    std::uint64_t histogram_total() const;
};

struct TrajectoryResult {
    TrajectoryStats stats;
    std::vector<EmissionEvent> events;  // ordered by (trajectory_id, time)
};

struct TrajectoryOptions {
    bool keep_events = true;
    double rtol = 1e-10;
    unsigned threads = 1;
};

// Quantum-jump unraveling of the train dynamics: non-Hermitian no-jump
// evolution on the {g, e} amplitudes, jump times located by threshold
// crossing of the squared norm (dense-output bisection inside pulses, closed
// form in the gaps), channels drawn proportionally to the instantaneous
// rates. Each trajectory consumes its own RNG substream, so results are
// bit-identical for a given (seed, n, inputs) regardless of thread count.
TrajectoryResult run_trajectories(const PulseTrain& train, const LevelScheme& scheme,
                                  double dephasing, std::uint64_t n, std::uint64_t seed,
                                  const TrajectoryOptions& options = {});

struct MeanEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

// <N> = sum N * P_N over the conditional histogram, with the multinomial
// standard error of the mean.
MeanEstimate empirical_mean_N(const TrajectoryStats& stats);

// Fraction of trajectories that emitted an 854-nm photon, binomial error.
MeanEstimate empirical_p854(const TrajectoryStats& stats);

}  // namespace ramanhom
