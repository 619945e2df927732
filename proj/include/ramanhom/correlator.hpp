#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ramanhom/lindblad.hpp"

namespace ramanhom {

// Two-time correlation surface on uniform axes sharing one step, so that
// t + tau always lands back on the time comb.
struct CorrelationGrid {
    std::vector<double> t_axis;
    std::vector<double> tau_axis;
    Eigen::MatrixXd values;  // values(i, j) = G(t_i, tau_j)
    bool positive_tau_zeroed = false;

    double dt() const;
    void validate() const;
};

// First-order coherence of one emission channel on a square time comb,
// values(i, j) = G1(t_i, t_j) including the channel rate, so the diagonal is
// the emission rate Gamma_ch * rho_ee(t).
struct CoherenceGrid {
    std::vector<double> axis;
    Eigen::MatrixXcd values;

    double dt() const;
    std::vector<double> intensity() const;  // real diagonal
};

struct CorrelationRequest {
    double t_start = 0.0;
    double t_end = 0.0;
    double tau_min = 0.0;  // <= tau_max; back-decay physics lives at tau <= 0
    double tau_max = 0.0;
    double dt = 0.25e-9;
    double rtol = 1e-10;

    void validate() const;
};

// Back-decay / Raman photon cross correlation G(t, tau): a 393-nm emission at
// t + tau followed by the 854-nm emission at t, evaluated by conditional
// propagation (jump to |g>, renormalize, propagate, read Gamma_854 rho_ee).
// Entries at tau > 0 are identically zero (the emitter is dark after the
// Raman photon) and are flagged via positive_tau_zeroed.
CorrelationGrid g2_back_decay(const PulseTrain& train, const LevelScheme& scheme,
                              double dephasing, const CorrelationRequest& request);

struct MeanBackDecayOptions {
    double dt = 0.25e-9;
    double rtol = 1e-10;
    bool force_direct = false;  // bypass the periodic fast path (tests)
};

// <N> = [iint G(t,tau) dtau dt over tau in [-T_rep/2, 0]] / [int Gamma_854
// rho_ee dt], both over the full train. Trains with >= 5 pulses use the
// identical-pulse structure: the conditional readout kernel is periodic in
// the train interior, so one period of conditional propagations suffices.
double mean_back_decays(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                        const MeanBackDecayOptions& opts = {});

// Quantum-regression first-order coherence of the 854 channel on the comb
// [t_start, t_end] with step dt. Hermitian by construction (upper triangle
// propagated, lower mirrored).
CoherenceGrid g1(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                 Channel channel, const SimGrid& grid);

// Test oracle: evaluates single entries through the full 4x4 operator-block
// propagation, independently for both time orderings.
std::complex<double> g1_entry_full(const PulseTrain& train, const LevelScheme& scheme,
                                   double dephasing, double t1, double t2, double rtol = 1e-10);

// Zeroes entries whose two times fall in different repetition-period windows
// (centered on the pulses). Models the absence of a fixed phase relation
// between the RF pulses that cut the excitation pulses.
CoherenceGrid restrict_to_same_pulse(const CoherenceGrid& grid, const PulseTrain& train);
CorrelationGrid restrict_to_same_pulse(const CorrelationGrid& grid, const PulseTrain& train);

}  // namespace ramanhom
