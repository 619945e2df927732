#include "ramanhom/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace ramanhom {

using Eigen::Matrix4cd;
using cplx = std::complex<double>;

DensityMatrix ground_state() {
    DensityMatrix rho = DensityMatrix::Zero();
    rho(lvl_ground, lvl_ground) = 1.0;
    return rho;
}

DensityMatrix excited_state() {
    DensityMatrix rho = DensityMatrix::Zero();
    rho(lvl_excited, lvl_excited) = 1.0;
    return rho;
}

void check_density_matrix(const DensityMatrix& rho, double t, const DensityMatrixTolerances& tol) {
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol.hermiticity)
        throw propagation_error("density matrix not Hermitian (dev " + std::to_string(herm) +
                                ") at t = " + std::to_string(t));
    const double trace_dev = std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag());
    if (trace_dev > tol.trace)
        throw propagation_error("density matrix trace deviates by " + std::to_string(trace_dev) +
                                " at t = " + std::to_string(t));
    Eigen::SelfAdjointEigenSolver<Matrix4cd> eig(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < tol.eigenvalue_floor)
        throw propagation_error("density matrix eigenvalue " +
                                std::to_string(eig.eigenvalues().minCoeff()) +
                                " below floor at t = " + std::to_string(t));
}

void SimGrid::validate() const {
    if (!(t_end > t_start)) throw config_error("SimGrid: t_end must exceed t_start");
    if (!(dt_output > 0.0)) throw config_error("SimGrid: output step must be positive");
    if (!(rtol > 0.0)) throw config_error("SimGrid: tolerance must be positive");
}

std::vector<double> SimGrid::sample_times() const {
    validate();
    std::vector<double> times;
    const auto n = static_cast<std::size_t>(std::floor((t_end - t_start) / dt_output + 1e-9));
    times.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) times.push_back(t_start + static_cast<double>(i) * dt_output);
    return times;
}

std::vector<CollapseOp> collapse_operators(const LevelScheme& scheme, double dephasing) {
    if (dephasing < 0.0) throw config_error("collapse_operators: dephasing must be nonnegative");
    std::vector<CollapseOp> ops;
    auto add = [&ops](int to, int from, double rate, Channel ch, bool emits) {
        if (rate <= 0.0) return;
        Matrix4cd c = Matrix4cd::Zero();
        c(to, from) = std::sqrt(rate);
        ops.push_back({c, rate, ch, emits});
    };
    add(lvl_ground, lvl_excited, scheme.gamma_back, Channel::back393, true);
    add(lvl_dark854, lvl_excited, scheme.gamma_854, Channel::raman854, true);
    add(lvl_dark850, lvl_excited, scheme.gamma_850, Channel::raman850, true);
    if (dephasing > 0.0) {
        Matrix4cd c = Matrix4cd::Zero();
        c(lvl_excited, lvl_excited) = std::sqrt(2.0 * dephasing);
        ops.push_back({c, 2.0 * dephasing, Channel::back393, false});
    }
    return ops;
}

Matrix4cd LambdaGenerator::apply(double omega_t, const Matrix4cd& x) const {
    constexpr int g = lvl_ground, e = lvl_excited, a = lvl_dark854, b = lvl_dark850;
    const double w = 0.5 * omega_t;
    const double gt = total_rate();
    const double damp = 0.5 * gt + dephasing;  // decay of every e-coherence
    const cplx im(0.0, 1.0);
    const double d = detuning;

    Matrix4cd out;
    out(g, g) = -im * w * (x(e, g) - x(g, e)) + gamma_back * x(e, e);
    out(e, e) = -im * w * (x(g, e) - x(e, g)) - gt * x(e, e);
    out(g, e) = -im * w * (x(e, e) - x(g, g)) - im * d * x(g, e) - damp * x(g, e);
    out(e, g) = -im * w * (x(g, g) - x(e, e)) + im * d * x(e, g) - damp * x(e, g);

    out(g, a) = -im * w * x(e, a);
    out(e, a) = -im * w * x(g, a) + (im * d - damp) * x(e, a);
    out(a, g) = im * w * x(a, e);
    out(a, e) = im * w * x(a, g) + (-im * d - damp) * x(a, e);

    out(g, b) = -im * w * x(e, b);
    out(e, b) = -im * w * x(g, b) + (im * d - damp) * x(e, b);
    out(b, g) = im * w * x(b, e);
    out(b, e) = im * w * x(b, g) + (-im * d - damp) * x(b, e);

    out(a, a) = gamma_854 * x(e, e);
    out(b, b) = gamma_850 * x(e, e);
    out(a, b) = 0.0;
    out(b, a) = 0.0;
    return out;
}

namespace {

// Segment boundaries at pulse support edges keep the adaptive stepper from
// striding over an entire pulse.
std::vector<double> segment_boundaries(const PulseTrain& train, double t0, double t1) {
    std::vector<double> cuts;
    cuts.push_back(t0);
    const double w = train.support_halfwidth();
    for (std::size_t k = 0; k < train.n_pulses; ++k) {
        const double c = train.pulse_center(k);
        for (double edge : {c - w, c + w}) {
            if (edge > t0 && edge < t1) cuts.push_back(edge);
        }
        if (c - w > t1) break;
    }
    cuts.push_back(t1);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-15; }),
               cuts.end());
    return cuts;
}

}  // namespace

Matrix4cd propagate_matrix(const Matrix4cd& x0, double t0, double t1, const PulseTrain& train,
                           const LambdaGenerator& gen, const IntegratorOptions& opt,
                           const std::vector<double>& sample_times,
                           const std::function<void(double, const Matrix4cd&)>& observer) {
    auto rhs = [&](double t, const Matrix4cd& x) { return gen.apply(train.rabi_at(t), x); };
    const std::vector<double> cuts = segment_boundaries(train, t0, t1);
    Matrix4cd x = x0;
    auto sample_it = sample_times.begin();
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        auto seg_end_it = sample_it;
        while (seg_end_it != sample_times.end() && *seg_end_it <= cuts[s + 1]) ++seg_end_it;
        x = integrate_sampled(rhs, cuts[s], cuts[s + 1], x, opt, sample_it, seg_end_it, observer);
        sample_it = seg_end_it;
    }
    // Samples at (or within rounding of) t1 that the segment loop left over.
    for (; sample_it != sample_times.end(); ++sample_it) observer(*sample_it, x);
    return x;
}

StateTrajectory propagate(const DensityMatrix& rho0, const PulseTrain& train,
                          const LevelScheme& scheme, double dephasing, const SimGrid& grid) {
    grid.validate();
    train.validate();
    scheme.validate();
    check_density_matrix(rho0, grid.t_start);

    const LambdaGenerator gen(scheme, dephasing);
    IntegratorOptions opt;
    opt.rtol = grid.rtol;
    opt.atol = grid.atol;

    StateTrajectory traj;
    const std::vector<double> times = grid.sample_times();
    traj.times.reserve(times.size());
    traj.states.reserve(times.size());

    double dark = -1.0;
    propagate_matrix(rho0, grid.t_start, grid.t_end, train, gen, opt, times,
                     [&](double t, const Matrix4cd& x) {
                         check_density_matrix(x, t);
                         const double dark_now = x(lvl_dark854, lvl_dark854).real() +
                                                 x(lvl_dark850, lvl_dark850).real();
                         if (dark_now < dark - 1e-10)
                             throw propagation_error("dark population decreased at t = " + std::to_string(t));
                         dark = std::max(dark, dark_now);
                         traj.times.push_back(t);
                         traj.states.push_back(x);
                     });
    return traj;
}

std::vector<double> emission_rate(const StateTrajectory& traj, const LevelScheme& scheme,
                                  Channel channel) {
    double rate = 0.0;
    switch (channel) {
        case Channel::back393: rate = scheme.gamma_back; break;
        case Channel::raman854: rate = scheme.gamma_854; break;
        case Channel::raman850: rate = scheme.gamma_850; break;
        default: throw sim_error("emission_rate: unknown channel");
    }
    std::vector<double> out;
    out.reserve(traj.size());
    for (const auto& rho : traj.states) out.push_back(rate * rho(lvl_excited, lvl_excited).real());
    return out;
}

PulseTransfer transfer_per_pulse(const PulseTrain& train, const LevelScheme& scheme,
                                 double dephasing, double rtol) {
    train.validate();
    scheme.validate();
    PulseTrain single = train;
    single.n_pulses = 1;
    const double w = single.support_halfwidth();
    const double t0 = single.shape.center - w;
    const double t1 = single.shape.center + w;

    const LambdaGenerator gen(scheme, dephasing);
    IntegratorOptions opt;
    opt.rtol = rtol;
    opt.atol = std::min(1e-12, rtol);
    auto rhs = [&](double t, const Matrix4cd& x) { return gen.apply(single.rabi_at(t), x); };
    const Matrix4cd rho = integrate_to(rhs, t0, t1, Matrix4cd(ground_state()), opt);

    // After the drive ends the excited remainder resolves with the static
    // branching fractions; no tail integration needed.
    const double ee = rho(lvl_excited, lvl_excited).real();
    const double gt = gen.total_rate();
    PulseTransfer out;
    out.p854 = rho(lvl_dark854, lvl_dark854).real() + (gt > 0.0 ? ee * scheme.gamma_854 / gt : 0.0);
    out.p850 = rho(lvl_dark850, lvl_dark850).real() + (gt > 0.0 ? ee * scheme.gamma_850 / gt : 0.0);
    out.p_raman = out.p854 + out.p850;
    return out;
}

double p854_of_train(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                     double rtol) {
    return transfer_per_pulse(train, scheme, dephasing, rtol).p854;
}

double p854_full_train(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                       double rtol) {
    train.validate();
    scheme.validate();
    const LambdaGenerator gen(scheme, dephasing);
    IntegratorOptions opt;
    opt.rtol = rtol;
    opt.atol = std::min(1e-12, rtol);
    const double w = train.support_halfwidth();
    const double t0 = train.pulse_center(0) - w;
    const double t1 = train.pulse_center(train.n_pulses - 1) + w;
    const Matrix4cd rho = propagate_matrix(ground_state(), t0, t1, train, gen, opt, {},
                                           [](double, const Matrix4cd&) {});
    const double gt = gen.total_rate();
    const double ee = rho(lvl_excited, lvl_excited).real();
    return rho(lvl_dark854, lvl_dark854).real() + (gt > 0.0 ? ee * scheme.gamma_854 / gt : 0.0);
}

std::vector<double> per_pulse_854_areas(const PulseTrain& train, const LevelScheme& scheme,
                                        double dephasing, double rtol) {
    train.validate();
    scheme.validate();
    const LambdaGenerator gen(scheme, dephasing);
    IntegratorOptions opt;
    opt.rtol = rtol;
    opt.atol = std::min(1e-12, rtol);

    // d854 population increments over repetition-period windows centered on
    // the pulses; the derivative of rho_aa is exactly the 854 emission rate.
    std::vector<double> boundaries;
    const double start = std::min(train.shape.center - 0.5 * train.t_rep, train.shape.center - train.support_halfwidth());
    boundaries.push_back(start);
    for (std::size_t k = 0; k < train.n_pulses; ++k)
        boundaries.push_back(train.pulse_center(k) + 0.5 * train.t_rep);

    std::vector<double> at_boundaries;
    propagate_matrix(ground_state(), boundaries.front(), boundaries.back(), train, gen, opt,
                     boundaries, [&](double, const Matrix4cd& x) {
                         at_boundaries.push_back(x(lvl_dark854, lvl_dark854).real());
                     });
    std::vector<double> areas;
    areas.reserve(train.n_pulses);
    for (std::size_t k = 0; k + 1 < at_boundaries.size(); ++k)
        areas.push_back(at_boundaries[k + 1] - at_boundaries[k]);
    return areas;
}

SurvivalFit fit_survival(const std::vector<double>& areas) {
    if (areas.size() < 3) throw fit_error("fit_survival: need at least 3 per-pulse areas");
    double total = 0.0;
    for (double a : areas) {
        if (a < 0.0) throw fit_error("fit_survival: negative area");
        total += a;
    }
    if (total <= 0.0) throw fit_error("fit_survival: all areas are zero");

    // Log-linear regression ln a_k = ln a0 + k ln r on the positive entries.
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < areas.size(); ++k)
        if (areas[k] > 0.0) pts.emplace_back(static_cast<double>(k), std::log(areas[k]));
    if (pts.size() < 3) throw fit_error("fit_survival: fewer than 3 positive areas");

    const double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw fit_error("fit_survival: degenerate abscissa");
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;

    // Slope variance from the residual scatter.
    double ss_res = 0.0;
    for (const auto& [x, y] : pts) {
        const double r = y - (intercept + slope * x);
        ss_res += r * r;
    }
    const double var_slope = (n > 2) ? ss_res / (n - 2.0) * n / denom : 0.0;

    const double r = std::exp(slope);
    const double p = 1.0 - r;
    const double stderr_p = r * std::sqrt(std::max(var_slope, 0.0));
    if (p < -std::max(1e-9, 3.0 * stderr_p))
        throw fit_error("fit_survival: areas do not decay (fitted ratio " + std::to_string(r) + ")");

    SurvivalFit out;
    out.p_raman = std::clamp(p, 0.0, 1.0);
    out.stderr_p = stderr_p;
    return out;
}

}  // namespace ramanhom
