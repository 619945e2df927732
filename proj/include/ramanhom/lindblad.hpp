#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "ramanhom/atomic_model.hpp"
#include "ramanhom/integrator.hpp"
#include "ramanhom/pulse.hpp"

namespace ramanhom {

// Basis order {g, e, d854, d850}; see atomic_model.hpp. The two dark levels
// are absorbing sinks, kept separate so channel-resolved statistics fall out
// of the populations directly.
using DensityMatrix = Eigen::Matrix4cd;

DensityMatrix ground_state();
DensityMatrix excited_state();

struct DensityMatrixTolerances {
    double hermiticity = 1e-12;
    double trace = 1e-8;
    double eigenvalue_floor = -1e-10;
};

// Throws propagation_error naming the offending time if rho violates the
// Hermiticity / unit-trace / positivity invariants.
void check_density_matrix(const DensityMatrix& rho, double t,
                          const DensityMatrixTolerances& tol = {});

struct SimGrid {
    double t_start = 0.0;
    double t_end = 0.0;
    double dt_output = 0.25e-9;
    double rtol = 1e-10;
    double atol = 1e-12;

    void validate() const;
    std::vector<double> sample_times() const;
};

struct StateTrajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;

    std::size_t size() const { return times.size(); }
};

struct CollapseOp {
    Eigen::Matrix4cd op;
    double rate;
    Channel channel;       // meaningful only for the three emission channels
    bool emits_photon;
};

// Jump operators of the master equation: the three decay channels plus the
// pure-dephasing operator sqrt(2 * dephasing) |e><e|.
std::vector<CollapseOp> collapse_operators(const LevelScheme& scheme, double dephasing);

// Time-dependent generator. apply() is hand-coded for speed and works on any
// 4x4 complex operator block, Hermitian or not, which is what the regression
// theorem propagation needs.
struct LambdaGenerator {
    double gamma_back = 0.0;
    double gamma_854 = 0.0;
    double gamma_850 = 0.0;
    double detuning = 0.0;
    double dephasing = 0.0;

    LambdaGenerator() = default;
    LambdaGenerator(const LevelScheme& s, double deph)
        : gamma_back(s.gamma_back), gamma_854(s.gamma_854), gamma_850(s.gamma_850),
          detuning(s.detuning), dephasing(deph) {}

    double total_rate() const { return gamma_back + gamma_854 + gamma_850; }

    Eigen::Matrix4cd apply(double omega_t, const Eigen::Matrix4cd& x) const;
};

// Integrates the master equation over [t0, t1] with the train's drive,
// splitting at pulse support edges so no pulse can be stepped over, and
// sampling (dense output) at the given times.
Eigen::Matrix4cd propagate_matrix(const Eigen::Matrix4cd& x0, double t0, double t1,
                                  const PulseTrain& train, const LambdaGenerator& gen,
                                  const IntegratorOptions& opt,
                                  const std::vector<double>& sample_times,
                                  const std::function<void(double, const Eigen::Matrix4cd&)>& observer);

StateTrajectory propagate(const DensityMatrix& rho0, const PulseTrain& train,
                          const LevelScheme& scheme, double dephasing, const SimGrid& grid);

// Photon emission rate Gamma_channel * rho_ee(t) on the trajectory samples.
std::vector<double> emission_rate(const StateTrajectory& traj, const LevelScheme& scheme,
                                  Channel channel);

// Per-pulse probabilities for one pulse acting on |g><g|: population
// transferred to the dark sinks, split by channel. The residual excited
// population at the support end is completed in closed form (after the drive
// ends each excited quantum resolves with the static branching fractions).
struct PulseTransfer {
    double p_raman = 0.0;   // transfer out of {g, e}
    double p854 = 0.0;
    double p850 = 0.0;
};
PulseTransfer transfer_per_pulse(const PulseTrain& train, const LevelScheme& scheme,
                                 double dephasing, double rtol = 1e-10);

// Per-pulse 854 emission probability of the train (first pulse on |g><g|).
double p854_of_train(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                     double rtol = 1e-10);

// Probability that the whole train emits an 854-nm photon, |g><g| start.
double p854_full_train(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                       double rtol = 1e-10);

// Exact per-pulse 854 emission areas of a full train from |g><g|: the
// increments of the d854 population across repetition-period windows.
std::vector<double> per_pulse_854_areas(const PulseTrain& train, const LevelScheme& scheme,
                                        double dephasing, double rtol = 1e-10);

struct SurvivalFit {
    double p_raman = 0.0;
    double stderr_p = 0.0;
};

// Least-squares fit of area_k ~ a0 * (1 - p)^k. Throws fit_error for empty,
// all-zero, or significantly growing sequences.
SurvivalFit fit_survival(const std::vector<double>& areas);

}  // namespace ramanhom
