#pragma once

#include <functional>
#include <vector>

#include "ramanhom/correlator.hpp"

namespace ramanhom {

struct BeamSplitter {
    double transmission = 0.5;  // power transmission

    void validate() const;
};

struct DetectionModel {
    double eta_c = 1.0;       // detection efficiency, output c
    double eta_d = 1.0;       // detection efficiency, output d
    double b0 = 0.0;          // flat background correlation level (rate units)
    double delta_phi = 0.0;   // polarization mismatch angle (rad)

    void validate() const;
};

struct VisibilityCurve {
    std::vector<double> windows;  // coincidence window sizes T, strictly increasing
    std::vector<double> values;
    std::vector<double> errors;   // optional, empty when not estimated

    void validate() const;
    // Linear interpolation of V at window size T (exact at the nodes).
    double at(double t_window) const;
};

// Beam-splitter output intensities 𝔱 I_a + (1-𝔱) I_b and (1-𝔱) I_a + 𝔱 I_b
// on the common time axis.
struct OutputIntensities {
    std::vector<double> out_c;
    std::vector<double> out_d;
};
OutputIntensities beam_splitter_outputs(const CoherenceGrid& a, const CoherenceGrid& b,
                                        const BeamSplitter& bs);

// Two-emitter HOM cross correlation of the beam-splitter outputs for
// independent single-photon emitters whose polarizations enclose the angle
// phi. Same-emitter two-photon terms vanish for these sources (one Raman
// photon per train); the slots are kept for other source models.
CorrelationGrid g2_hom(const CoherenceGrid& a, const CoherenceGrid& b, const BeamSplitter& bs,
                       double phi, double tau_span,
                       const CorrelationGrid* same_emitter_a = nullptr,
                       const CorrelationGrid* same_emitter_b = nullptr);

// Detection imperfections: efficiencies scale the signal, a flat background
// adds the three uncorrelated product terms.
CorrelationGrid apply_imperfections(const CorrelationGrid& grid, const DetectionModel& det,
                                    const OutputIntensities& outputs);

// Background level from the measured signal-to-background ratio of the full
// wave packet: B0 = (eta_c + eta_d) * int I dt / (2 * SBR * t_end).
double b0_from_sbr(double sbr, const OutputIntensities& outputs, double dt, double eta_c,
                   double eta_d, double t_end);
double sbr_from_b0(double b0, const OutputIntensities& outputs, double dt, double eta_c,
                   double eta_d, double t_end);

// Both polarization arms of the measurement: the parallel projection at the
// mismatch angle delta_phi and the orthogonal one at pi/2 + delta_phi, with
// detection imperfections applied.
struct HomArms {
    CorrelationGrid parallel;
    CorrelationGrid orthogonal;
    OutputIntensities outputs;
};
HomArms hom_arms(const CoherenceGrid& a, const CoherenceGrid& b, const BeamSplitter& bs,
                 const DetectionModel& det, double tau_span);

// V(T) = 1 - [iint_{|tau|<=T/2} G_par] / [iint G_perp]. Both grids must share
// their axes; windows outside the tau span are clipped to it.
VisibilityCurve visibility_curve(const CorrelationGrid& parallel, const CorrelationGrid& orthogonal,
                                 const std::vector<double>& windows);

// Residual visibility from coincidences with |tau| in (t_rep/2, t_rep/2 + T/2]
// only; requires the tau axis to span at least [-3 t_rep/2, 3 t_rep/2].
VisibilityCurve residual_visibility(const CorrelationGrid& parallel,
                                    const CorrelationGrid& orthogonal, double t_rep,
                                    const std::vector<double>& windows);

// Scalar golden-section fit of the polarization mismatch angle in [0, pi/4]
// against a measured curve; the generator maps delta_phi to the model curve
// on the same windows.
double fit_delta_phi(const VisibilityCurve& measured,
                     const std::function<VisibilityCurve(double)>& generator);

}  // namespace ramanhom
