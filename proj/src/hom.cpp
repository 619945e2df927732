#include "ramanhom/hom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ramanhom {

namespace {

void require_same_axes(const CorrelationGrid& x, const CorrelationGrid& y) {
    if (x.t_axis != y.t_axis || x.tau_axis != y.tau_axis)
        throw sim_error("visibility: correlation grids are on different axes");
}

double trapz(const std::vector<double>& y, double dt) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) s += 0.5 * (y[i] + y[i + 1]) * dt;
    return s;
}

// tau marginal m(tau_j) = int G(t, tau_j) dt by trapezoid over the t axis.
std::vector<double> tau_marginal(const CorrelationGrid& grid) {
    const double dt = grid.dt();
    std::vector<double> m(grid.tau_axis.size(), 0.0);
    const Eigen::Index rows = grid.values.rows();
    for (std::size_t j = 0; j < grid.tau_axis.size(); ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i + 1 < rows; ++i)
            s += 0.5 * (grid.values(i, j) + grid.values(i + 1, j)) * dt;
        m[j] = s;
    }
    return m;
}

// Integral of the piecewise-linear marginal over tau in [lo, hi], clipped to
// the axis. Partial cells interpolate linearly, so windows vary continuously.
double window_integral(const std::vector<double>& marginal, const std::vector<double>& tau_axis,
                       double lo, double hi) {
    if (marginal.size() < 2) throw sim_error("window_integral: marginal too short");
    const double a = std::max(lo, tau_axis.front());
    const double b = std::min(hi, tau_axis.back());
    if (b <= a) return 0.0;
    const double dt = tau_axis[1] - tau_axis[0];
    auto value_at = [&](double tau) {
        const double x = (tau - tau_axis.front()) / dt;
        const auto i = static_cast<std::size_t>(std::clamp(std::floor(x), 0.0,
                                                           static_cast<double>(marginal.size() - 2)));
        const double f = x - static_cast<double>(i);
        return marginal[i] * (1.0 - f) + marginal[i + 1] * f;
    };
    // Integrate the broken line exactly: endpoints plus interior nodes.
    double total = 0.0;
    const auto first_node = static_cast<std::size_t>(std::ceil((a - tau_axis.front()) / dt - 1e-12));
    const auto last_node = static_cast<std::size_t>(std::floor((b - tau_axis.front()) / dt + 1e-12));
    double prev_tau = a, prev_val = value_at(a);
    for (std::size_t k = first_node; k <= last_node && k < marginal.size(); ++k) {
        const double tau = tau_axis[k];
        if (tau <= prev_tau + 1e-300) continue;
        total += 0.5 * (prev_val + marginal[k]) * (tau - prev_tau);
        prev_tau = tau;
        prev_val = marginal[k];
    }
    if (b > prev_tau) total += 0.5 * (prev_val + value_at(b)) * (b - prev_tau);
    return total;
}

}  // namespace

void BeamSplitter::validate() const {
    if (transmission < 0.0 || transmission > 1.0)
        throw config_error("BeamSplitter: transmission must lie in [0, 1]");
}

void DetectionModel::validate() const {
    if (eta_c < 0.0 || eta_c > 1.0 || eta_d < 0.0 || eta_d > 1.0)
        throw config_error("DetectionModel: efficiencies must lie in [0, 1]");
    if (b0 < 0.0) throw config_error("DetectionModel: background level must be nonnegative");
    if (delta_phi < 0.0 || delta_phi >= M_PI_2)
        throw config_error("DetectionModel: delta_phi must lie in [0, pi/2)");
}

void VisibilityCurve::validate() const {
    if (windows.size() != values.size())
        throw sim_error("VisibilityCurve: window/value size mismatch");
    for (std::size_t i = 1; i < windows.size(); ++i)
        if (windows[i] <= windows[i - 1]) throw sim_error("VisibilityCurve: windows not increasing");
    for (double v : values)
        if (v > 1.0 + 1e-12) throw sim_error("VisibilityCurve: visibility above unity");
}

double VisibilityCurve::at(double t_window) const {
    if (windows.empty()) throw sim_error("VisibilityCurve: empty curve");
    if (t_window <= windows.front()) return values.front();
    if (t_window >= windows.back()) return values.back();
    auto it = std::upper_bound(windows.begin(), windows.end(), t_window);
    const auto i = static_cast<std::size_t>(it - windows.begin());
    const double f = (t_window - windows[i - 1]) / (windows[i] - windows[i - 1]);
    return values[i - 1] * (1.0 - f) + values[i] * f;
}

OutputIntensities beam_splitter_outputs(const CoherenceGrid& a, const CoherenceGrid& b,
                                        const BeamSplitter& bs) {
    bs.validate();
    if (a.axis != b.axis) throw sim_error("beam_splitter_outputs: emitter grids on different axes");
    const std::vector<double> ia = a.intensity();
    const std::vector<double> ib = b.intensity();
    OutputIntensities out;
    out.out_c.resize(ia.size());
    out.out_d.resize(ia.size());
    const double t = bs.transmission;
    for (std::size_t i = 0; i < ia.size(); ++i) {
        out.out_c[i] = t * ia[i] + (1.0 - t) * ib[i];
        out.out_d[i] = (1.0 - t) * ia[i] + t * ib[i];
    }
    return out;
}

CorrelationGrid g2_hom(const CoherenceGrid& a, const CoherenceGrid& b, const BeamSplitter& bs,
                       double phi, double tau_span, const CorrelationGrid* same_emitter_a,
                       const CorrelationGrid* same_emitter_b) {
    bs.validate();
    if (a.axis != b.axis) throw sim_error("g2_hom: emitter grids on different axes");
    if (!(tau_span > 0.0)) throw config_error("g2_hom: tau_span must be positive");

    const double dt = a.dt();
    const long n = static_cast<long>(a.axis.size());
    const long j_max = std::min<long>(std::lround(tau_span / dt), n - 1);

    CorrelationGrid grid;
    grid.t_axis = a.axis;
    grid.tau_axis.reserve(static_cast<std::size_t>(2 * j_max + 1));
    for (long j = -j_max; j <= j_max; ++j)
        grid.tau_axis.push_back(static_cast<double>(j) * dt);
    grid.values = Eigen::MatrixXd::Zero(n, 2 * j_max + 1);

    const std::vector<double> ia = a.intensity();
    const std::vector<double> ib = b.intensity();
    const double t = bs.transmission;
    const double cross_coeff = 2.0 * t * (1.0 - t) * std::cos(phi) * std::cos(phi);

    double classical_scale = 0.0;
    for (long i = 0; i < n; ++i) {
        for (long j = -j_max; j <= j_max; ++j) {
            const long k = i + j;  // index of t + tau
            if (k < 0 || k >= n) continue;
            const auto iu = static_cast<std::size_t>(i);
            const auto ku = static_cast<std::size_t>(k);
            // (1-t)^2 I_a(t) I_b(t+tau) + t^2 I_a(t+tau) I_b(t): the two ways
            // the pair can split, from the beam-splitter transform.
            double val = (1.0 - t) * (1.0 - t) * ia[iu] * ib[ku] + t * t * ia[ku] * ib[iu];
            classical_scale = std::max(classical_scale, val);
            // Interference of the two-photon amplitudes, reduced by the
            // polarization overlap cos^2(phi).
            val -= cross_coeff * std::real(a.values(k, i) * b.values(i, k));
            grid.values(i, j + j_max) = val;
        }
    }
    // Same-emitter two-photon terms, each weighted t(1-t); zero for
    // single-Raman-photon sources.
    for (const auto* extra : {same_emitter_a, same_emitter_b}) {
        if (!extra) continue;
        require_same_axes(grid, *extra);
        grid.values += t * (1.0 - t) * extra->values;
    }
    // The surface is nonnegative up to cancellation residue (limited by the
    // g1 integration accuracy relative to the classical products); anything
    // beyond that indicates inconsistent inputs.
    if (grid.values.size() > 0 && classical_scale > 0.0 &&
        grid.values.minCoeff() < -1e-6 * classical_scale)
        throw sim_error("g2_hom: correlation surface negative beyond rounding residue");
    return grid;
}

CorrelationGrid apply_imperfections(const CorrelationGrid& grid, const DetectionModel& det,
                                    const OutputIntensities& outputs) {
    det.validate();
    if (outputs.out_c.size() != grid.t_axis.size() || outputs.out_d.size() != grid.t_axis.size())
        throw sim_error("apply_imperfections: intensity vectors do not match the grid");

    CorrelationGrid out = grid;
    const long n = static_cast<long>(grid.t_axis.size());
    const double dt = grid.dt();
    const long j0 = std::lround(grid.tau_axis.front() / dt);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < static_cast<long>(grid.tau_axis.size()); ++j) {
            const long k = i + (j0 + j);  // index of t + tau
            const double intensity_d =
                (k >= 0 && k < n) ? outputs.out_d[static_cast<std::size_t>(k)] : 0.0;
            const double intensity_c = outputs.out_c[static_cast<std::size_t>(i)];
            out.values(i, j) = det.eta_c * det.eta_d * grid.values(i, j) +
                               det.eta_d * intensity_d * det.b0 +
                               det.eta_c * intensity_c * det.b0 + det.b0 * det.b0;
        }
    }
    return out;
}

double b0_from_sbr(double sbr, const OutputIntensities& outputs, double dt, double eta_c,
                   double eta_d, double t_end) {
    if (!(sbr > 0.0)) throw sim_error("b0_from_sbr: signal-to-background ratio must be positive");
    if (!(t_end > 0.0)) throw config_error("b0_from_sbr: t_end must be positive");
    const double integral = 0.5 * (trapz(outputs.out_c, dt) + trapz(outputs.out_d, dt));
    return (eta_c + eta_d) * integral / (2.0 * sbr * t_end);
}

double sbr_from_b0(double b0, const OutputIntensities& outputs, double dt, double eta_c,
                   double eta_d, double t_end) {
    if (!(b0 > 0.0)) throw sim_error("sbr_from_b0: background level must be positive");
    if (!(t_end > 0.0)) throw config_error("sbr_from_b0: t_end must be positive");
    const double integral = 0.5 * (trapz(outputs.out_c, dt) + trapz(outputs.out_d, dt));
    return (eta_c + eta_d) * integral / (2.0 * b0 * t_end);
}

HomArms hom_arms(const CoherenceGrid& a, const CoherenceGrid& b, const BeamSplitter& bs,
                 const DetectionModel& det, double tau_span) {
    det.validate();
    HomArms arms;
    arms.outputs = beam_splitter_outputs(a, b, bs);
    arms.parallel = apply_imperfections(g2_hom(a, b, bs, det.delta_phi, tau_span), det, arms.outputs);
    arms.orthogonal = apply_imperfections(g2_hom(a, b, bs, M_PI_2 + det.delta_phi, tau_span), det,
                                          arms.outputs);
    return arms;
}

VisibilityCurve visibility_curve(const CorrelationGrid& parallel, const CorrelationGrid& orthogonal,
                                 const std::vector<double>& windows) {
    require_same_axes(parallel, orthogonal);
    if (windows.empty()) throw config_error("visibility_curve: no windows requested");
    for (std::size_t i = 1; i < windows.size(); ++i)
        if (windows[i] <= windows[i - 1])
            throw config_error("visibility_curve: windows must be strictly increasing");

    const std::vector<double> m_par = tau_marginal(parallel);
    const std::vector<double> m_perp = tau_marginal(orthogonal);

    VisibilityCurve curve;
    curve.windows = windows;
    curve.values.reserve(windows.size());
    for (double t_win : windows) {
        if (!(t_win > 0.0)) throw config_error("visibility_curve: windows must be positive");
        // Exact-suppression runs leave rounding residue of either sign in the
        // parallel surface; the physical coincidence count is nonnegative.
        const double num =
            std::max(window_integral(m_par, parallel.tau_axis, -0.5 * t_win, 0.5 * t_win), 0.0);
        const double den = window_integral(m_perp, orthogonal.tau_axis, -0.5 * t_win, 0.5 * t_win);
        if (den <= 0.0)
            throw undefined_value_error("visibility_curve: zero orthogonal coincidences at T = " +
                                        std::to_string(t_win));
        curve.values.push_back(1.0 - num / den);
    }
    curve.validate();
    return curve;
}

VisibilityCurve residual_visibility(const CorrelationGrid& parallel,
                                    const CorrelationGrid& orthogonal, double t_rep,
                                    const std::vector<double>& windows) {
    require_same_axes(parallel, orthogonal);
    if (!(t_rep > 0.0)) throw config_error("residual_visibility: t_rep must be positive");
    if (parallel.tau_axis.front() > -1.5 * t_rep + 1e-15 ||
        parallel.tau_axis.back() < 1.5 * t_rep - 1e-15)
        throw sim_error("residual_visibility: tau axis must span [-3 t_rep/2, 3 t_rep/2]");

    const std::vector<double> m_par = tau_marginal(parallel);
    const std::vector<double> m_perp = tau_marginal(orthogonal);

    auto outer = [&](const std::vector<double>& m, const CorrelationGrid& g, double t_win) {
        // |tau| in (t_rep/2, t_rep/2 + t_win/2], both sides.
        return window_integral(m, g.tau_axis, -0.5 * (t_rep + t_win), 0.5 * (t_rep + t_win)) -
               window_integral(m, g.tau_axis, -0.5 * t_rep, 0.5 * t_rep);
    };

    VisibilityCurve curve;
    curve.windows = windows;
    curve.values.reserve(windows.size());
    for (double t_win : windows) {
        const double den = outer(m_perp, orthogonal, t_win);
        if (den <= 0.0)
            throw undefined_value_error("residual_visibility: empty outer window at T = " +
                                        std::to_string(t_win));
        curve.values.push_back(1.0 - std::max(outer(m_par, parallel, t_win), 0.0) / den);
    }
    curve.validate();
    return curve;
}

double fit_delta_phi(const VisibilityCurve& measured,
                     const std::function<VisibilityCurve(double)>& generator) {
    measured.validate();
    for (double v : measured.values)
        if (!std::isfinite(v)) throw fit_error("fit_delta_phi: non-finite measured visibility");

    auto objective = [&](double phi) {
        const VisibilityCurve model = generator(phi);
        if (model.windows.size() != measured.windows.size())
            throw fit_error("fit_delta_phi: generator windows do not match the measured curve");
        double sse = 0.0;
        for (std::size_t i = 0; i < model.values.size(); ++i) {
            if (!std::isfinite(model.values[i]))
                throw fit_error("fit_delta_phi: non-finite model visibility");
            const double d = model.values[i] - measured.values[i];
            sse += d * d;
        }
        return sse;
    };

    // Golden-section search on [0, pi/4].
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = M_PI / 4.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = objective(x1), f2 = objective(x2);
    while (hi - lo > 1e-7) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = objective(x2);
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace ramanhom
