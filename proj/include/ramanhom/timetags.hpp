#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "ramanhom/correlator.hpp"
#include "ramanhom/hom.hpp"
#include "ramanhom/trajectory.hpp"

namespace ramanhom {

// Timestamp resolution of the counting electronics.
constexpr double kTimetagResolution = 625e-12;

enum Detector : int { det_854 = 0, det_393 = 1 };

struct DetectionRecord {
    int detector = det_854;
    std::int64_t timestamp_ps = 0;  // nonnegative multiple of 625 ps
    Channel channel = Channel::raman854;  // nominal label of the stream
    std::uint64_t cycle = 0;
};

struct EfficiencySet {
    double eta_393 = 1.0;
    double eta_854 = 1.0;
    double bg_rate_393 = 0.0;  // detector background rate, 1/s
    double bg_rate_854 = 0.0;

    void validate() const;
};

// Thins oracle emission events by the channel detection efficiencies, adds
// homogeneous background on both detectors over [0, window], quantizes
// timestamps. Deterministic for a given seed; 850-nm photons are not
// detected. Cycle index = trajectory id.
std::vector<DetectionRecord> synthesize_detections(const std::vector<EmissionEvent>& events,
                                                   const EfficiencySet& eff, double window,
                                                   std::uint64_t n_cycles, std::uint64_t seed);

struct CorrelationHistogram {
    std::vector<double> bin_centers;  // tau = t_393 - t_854, seconds
    std::vector<std::uint64_t> counts;
    double bin_width = 0.0;
    bool empty_source = false;  // no 854 records at all
};

// Histogram of detection-time differences t_393 - t_854 over pairs within the
// same cycle. Bins are centered on integer multiples of bin_width so the
// quantization-degenerate tau = 0 pairs sit in their own centered bin.
CorrelationHistogram cross_correlate(const std::vector<DetectionRecord>& records,
                                     double bin_width, double tau_min, double tau_max);

// <N> estimator from the histogram: background-subtracted counts in
// [-t_rep/2, 0] over eta_393 * n854. The tau > 0 sideband of equal width
// provides the background estimate; no eta_854 factor enters.
MeanEstimate estimate_mean_N(const CorrelationHistogram& hist, const EfficiencySet& eff,
                             std::uint64_t n854, double t_rep);

struct Coincidence {
    double tau = 0.0;
    bool parallel = false;
};

// V(T) = 1 - C_par(T) / C_perp(T) from labeled coincidences, with Poisson
// ratio errors.
VisibilityCurve estimate_visibility(const std::vector<Coincidence>& coincidences,
                                    const std::vector<double>& windows);

// Draws synthetic labeled coincidences from a pair of correlation surfaces:
// arm totals are Poisson with means proportional to the surface masses, tau
// is drawn from each surface's tau marginal.
std::vector<Coincidence> sample_coincidences(const CorrelationGrid& parallel,
                                             const CorrelationGrid& orthogonal,
                                             double expected_pairs, std::uint64_t seed);

// CSV forms of the module's external interfaces.
void write_records_csv(std::ostream& os, const std::vector<DetectionRecord>& records);
std::vector<DetectionRecord> read_records_csv(std::istream& is);
void write_events_csv(std::ostream& os, const std::vector<EmissionEvent>& events);
std::vector<EmissionEvent> read_events_csv(std::istream& is);
void write_histogram_csv(std::ostream& os, const CorrelationHistogram& hist);

}  // namespace ramanhom
