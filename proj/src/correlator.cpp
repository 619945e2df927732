#include "ramanhom/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ramanhom {

using Eigen::Matrix4cd;
using Eigen::Vector2cd;
using Eigen::Vector4cd;
using cplx = std::complex<double>;

namespace {

constexpr double kOccupationFloor = 1e-30;

// The correlator only ever needs the {g, e} block: the sinks feed from it but
// never back. State vector (rho_gg, rho_ge, rho_eg, rho_ee).
struct BlockGE {
    LambdaGenerator gen;
    const PulseTrain* train;

    Vector4cd operator()(double t, const Vector4cd& x) const {
        const double w = 0.5 * train->rabi_at(t);
        const double damp = 0.5 * gen.total_rate() + gen.dephasing;
        const cplx im(0.0, 1.0);
        Vector4cd out;
        out[0] = -im * w * (x[2] - x[1]) + gen.gamma_back * x[3];
        out[1] = -im * w * (x[3] - x[0]) - (im * gen.detuning + damp) * x[1];
        out[2] = -im * w * (x[0] - x[3]) + (im * gen.detuning - damp) * x[2];
        out[3] = -im * w * (x[1] - x[2]) - gen.total_rate() * x[3];
        return out;
    }
};

// Coherence block (X_{g,d854}, X_{e,d854}) of the regression-theorem
// operator; closed under the generator.
struct CoherenceBlock {
    LambdaGenerator gen;
    const PulseTrain* train;

    Vector2cd operator()(double t, const Vector2cd& v) const {
        const double w = 0.5 * train->rabi_at(t);
        const double damp = 0.5 * gen.total_rate() + gen.dephasing;
        const cplx im(0.0, 1.0);
        Vector2cd out;
        out[0] = -im * w * v[1];
        out[1] = -im * w * v[0] + (im * gen.detuning - damp) * v[1];
        return out;
    }
};

std::vector<double> make_comb(double origin, long j_lo, long j_hi, double dt) {
    std::vector<double> comb;
    comb.reserve(static_cast<std::size_t>(j_hi - j_lo + 1));
    for (long j = j_lo; j <= j_hi; ++j) comb.push_back(origin + static_cast<double>(j) * dt);
    return comb;
}

// Integrates f over train segments sampling the {g,e} block on a comb.
template <class State, class RHS>
void run_sampled(RHS rhs, const PulseTrain& train, double t0, double t1, const State& y0,
                 const IntegratorOptions& opt, const std::vector<double>& samples,
                 const std::function<void(double, const State&)>& obs) {
    // Segment at pulse support edges (same policy as propagate_matrix).
    std::vector<double> cuts{t0};
    const double w = train.support_halfwidth();
    for (std::size_t k = 0; k < train.n_pulses; ++k) {
        const double c = train.pulse_center(k);
        for (double edge : {c - w, c + w})
            if (edge > t0 && edge < t1) cuts.push_back(edge);
        if (c - w > t1) break;
    }
    cuts.push_back(t1);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-15; }),
               cuts.end());
    State y = y0;
    auto it = samples.begin();
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        auto seg_end = it;
        while (seg_end != samples.end() && *seg_end <= cuts[s + 1]) ++seg_end;
        y = integrate_sampled(rhs, cuts[s], cuts[s + 1], y, opt, it, seg_end, obs);
        it = seg_end;
    }
    for (; it != samples.end(); ++it) obs(*it, y);
}

// rho_ee of the train evolution from |g><g| on the comb; zero before the
// first pulse support.
std::vector<double> source_ee_on_comb(const PulseTrain& train, const LambdaGenerator& gen,
                                      const IntegratorOptions& opt,
                                      const std::vector<double>& comb) {
    std::vector<double> ee(comb.size(), 0.0);
    const double start = train.pulse_center(0) - train.support_halfwidth();
    auto first = std::lower_bound(comb.begin(), comb.end(), start);
    if (first == comb.end()) return ee;
    std::size_t base = static_cast<std::size_t>(first - comb.begin());
    std::vector<double> sub(first, comb.end());
    BlockGE rhs{gen, &train};
    std::size_t idx = base;
    run_sampled<Vector4cd>(rhs, train, start, sub.empty() ? start : sub.back(),
                           Vector4cd(1.0, 0.0, 0.0, 0.0), opt, sub,
                           [&](double, const Vector4cd& x) {
                               if (idx < ee.size()) ee[idx++] = x[3].real();
                           });
    return ee;
}

// Integral over s in [0, span] of Gamma_854 * rho_ee(jump_time + s) for the
// conditional state reset to |g> at jump_time, and optionally the sampled
// readout curve itself.
double conditional_kernel(const PulseTrain& train, const LambdaGenerator& gen,
                          const IntegratorOptions& opt, double jump_time,
                          const std::vector<double>& s_comb, double dt,
                          std::vector<double>* readout = nullptr) {
    std::vector<double> samples;
    samples.reserve(s_comb.size());
    for (double s : s_comb) samples.push_back(jump_time + s);
    std::vector<double> vals;
    vals.reserve(s_comb.size());
    BlockGE rhs{gen, &train};
    run_sampled<Vector4cd>(rhs, train, jump_time, samples.empty() ? jump_time : samples.back(),
                           Vector4cd(1.0, 0.0, 0.0, 0.0), opt, samples,
                           [&](double, const Vector4cd& x) {
                               vals.push_back(gen.gamma_854 * x[3].real());
                           });
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) integral += 0.5 * (vals[i] + vals[i + 1]) * dt;
    if (readout) *readout = std::move(vals);
    return integral;
}

double trapz(const std::vector<double>& y, double dt) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) s += 0.5 * (y[i] + y[i + 1]) * dt;
    return s;
}

long floor_div(long a, long b) {
    long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

double CorrelationGrid::dt() const {
    if (t_axis.size() < 2) throw sim_error("CorrelationGrid: axis too short");
    return t_axis[1] - t_axis[0];
}

void CorrelationGrid::validate() const {
    if (static_cast<Eigen::Index>(t_axis.size()) != values.rows() ||
        static_cast<Eigen::Index>(tau_axis.size()) != values.cols())
        throw sim_error("CorrelationGrid: axis/value shape mismatch");
    for (std::size_t i = 1; i < t_axis.size(); ++i)
        if (t_axis[i] <= t_axis[i - 1]) throw sim_error("CorrelationGrid: t axis not increasing");
    for (std::size_t j = 1; j < tau_axis.size(); ++j)
        if (tau_axis[j] <= tau_axis[j - 1]) throw sim_error("CorrelationGrid: tau axis not increasing");
    // Negativity floor is relative to the grid scale (values carry rate^2
    // units, so an absolute floor would be meaningless).
    if (values.size() > 0) {
        const double scale = std::max(values.cwiseAbs().maxCoeff(), 1.0);
        if (values.minCoeff() < -1e-12 * scale)
            throw sim_error("CorrelationGrid: negative correlation value " +
                            std::to_string(values.minCoeff()));
    }
}

double CoherenceGrid::dt() const {
    if (axis.size() < 2) throw sim_error("CoherenceGrid: axis too short");
    return axis[1] - axis[0];
}

std::vector<double> CoherenceGrid::intensity() const {
    std::vector<double> out(axis.size());
    for (std::size_t i = 0; i < axis.size(); ++i) out[i] = values(i, i).real();
    return out;
}

void CorrelationRequest::validate() const {
    if (!(dt > 0.0)) throw config_error("CorrelationRequest: dt must be positive");
    if (!(t_end > t_start)) throw config_error("CorrelationRequest: t_end must exceed t_start");
    if (tau_min > tau_max) throw config_error("CorrelationRequest: tau_min above tau_max");
    if (!(rtol > 0.0)) throw config_error("CorrelationRequest: rtol must be positive");
}

CorrelationGrid g2_back_decay(const PulseTrain& train, const LevelScheme& scheme,
                              double dephasing, const CorrelationRequest& request) {
    request.validate();
    train.validate();
    scheme.validate();
    const LambdaGenerator gen(scheme, dephasing);
    IntegratorOptions opt;
    opt.rtol = request.rtol;
    opt.atol = std::min(1e-12, request.rtol);

    const double dt = request.dt;
    const long nt = std::lround((request.t_end - request.t_start) / dt) + 1;
    const long j_tau_min = std::lround(request.tau_min / dt);
    const long j_tau_max = std::lround(request.tau_max / dt);

    CorrelationGrid grid;
    grid.t_axis = make_comb(request.t_start, 0, nt - 1, dt);
    grid.tau_axis = make_comb(0.0, j_tau_min, j_tau_max, dt);
    grid.values = Eigen::MatrixXd::Zero(nt, j_tau_max - j_tau_min + 1);
    grid.positive_tau_zeroed = j_tau_max > 0;

    // Emission times of the 393 photon: comb offsets m with tau <= 0 reach
    // readouts at index i = m - j_tau in [0, nt).
    const long m_lo = j_tau_min;         // earliest jump index
    const long m_hi = nt - 1;            // latest jump (tau = 0 column is zero anyway)
    const std::vector<double> jump_comb = make_comb(request.t_start, m_lo, m_hi, dt);
    const std::vector<double> ee = source_ee_on_comb(train, gen, opt, jump_comb);

    for (long m = m_lo; m <= m_hi; ++m) {
        const double occupation = ee[static_cast<std::size_t>(m - m_lo)];
        if (occupation <= kOccupationFloor) continue;
        const double t_jump = request.t_start + static_cast<double>(m) * dt;
        // Same-instant pairs (s = 0) vanish: the conditional state is |g>.
        const long s_min = std::max({1L, -j_tau_max, -m});
        const long s_max = std::min(-j_tau_min, (nt - 1) - m);
        if (s_max < s_min) continue;
        std::vector<double> s_comb = make_comb(0.0, 0, s_max, dt);
        std::vector<double> readout;
        conditional_kernel(train, gen, opt, t_jump, s_comb, dt, &readout);
        for (long s = s_min; s <= s_max; ++s) {
            const long i = m + s, j = -s - j_tau_min;
            grid.values(i, j) = gen.gamma_back * occupation * readout[static_cast<std::size_t>(s)];
        }
    }
    return grid;
}

double mean_back_decays(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                        const MeanBackDecayOptions& opts) {
    train.validate();
    scheme.validate();
    if (scheme.gamma_854 <= 0.0)
        throw undefined_value_error("mean_back_decays: no 854 emission channel");
    const LambdaGenerator gen(scheme, dephasing);
    IntegratorOptions opt;
    opt.rtol = opts.rtol;
    opt.atol = std::min(1e-12, opts.rtol);

    // Snap the comb so the repetition period is an integer number of steps.
    const long m_per_period = std::max(2L, std::lround(train.t_rep / opts.dt));
    const double dt = train.t_rep / static_cast<double>(m_per_period);
    const double w = train.support_halfwidth();
    const double gt = gen.total_rate();
    const double tail = gt > 0.0 ? std::min(-std::log(1e-9) / gt, 3.0 * train.t_rep) : train.t_rep;
    const double c0 = train.pulse_center(0);
    const double c_last = train.pulse_center(train.n_pulses - 1);

    const long j_lo = -static_cast<long>(std::ceil(w / dt)) - 1;
    const long j_hi = static_cast<long>(std::ceil((c_last - c0 + w + tail) / dt)) + 1;
    const std::vector<double> comb = make_comb(c0, j_lo, j_hi, dt);
    const std::vector<double> ee = source_ee_on_comb(train, gen, opt, comb);

    // Denominator: total 854 emission of the train.
    std::vector<double> rate854(ee.size());
    for (std::size_t i = 0; i < ee.size(); ++i) rate854[i] = gen.gamma_854 * ee[i];
    const double denominator = trapz(rate854, dt);
    if (denominator <= 0.0)
        throw undefined_value_error("mean_back_decays: zero 854 emission over the train");

    // Readout window [0, T_rep/2] after each back decay.
    const long s_steps = m_per_period / 2;
    const std::vector<double> s_comb = make_comb(0.0, 0, s_steps, dt);

    const long half = m_per_period / 2;
    const long n_last = static_cast<long>(train.n_pulses) - 1;

    double numerator = 0.0;
    const bool fast = !opts.force_direct && train.n_pulses >= 5;
    if (fast) {
        // The readout kernel depends only on the offset within the repetition
        // period: interior periods all see the same upcoming drive. The last
        // period sees no further pulse and gets its own kernel.
        std::vector<double> interior(static_cast<std::size_t>(m_per_period), 0.0);
        for (long u = -half; u < m_per_period - half; ++u)
            interior[static_cast<std::size_t>(u + half)] =
                conditional_kernel(train, gen, opt, c0 + static_cast<double>(u) * dt, s_comb, dt);

        const long u_last_hi = j_hi - n_last * m_per_period;
        std::vector<double> last(static_cast<std::size_t>(u_last_hi + half + 1), 0.0);
        for (long u = -half; u <= u_last_hi; ++u) {
            if (static_cast<double>(u) * dt > w) break;  // no drive left, kernel vanishes
            last[static_cast<std::size_t>(u + half)] = conditional_kernel(
                train, gen, opt, c_last + static_cast<double>(u) * dt, s_comb, dt);
        }

        std::vector<double> integrand(comb.size(), 0.0);
        for (long j = j_lo; j <= j_hi; ++j) {
            const double occ = ee[static_cast<std::size_t>(j - j_lo)];
            if (occ <= kOccupationFloor) continue;
            long k = floor_div(j + half, m_per_period);
            k = std::clamp(k, 0L, n_last);
            const long u = j - k * m_per_period;
            if (u + half < 0) continue;  // before the first pulse; occupation is zero there
            double kernel = 0.0;
            if (k == n_last) {
                const long idx = u + half;
                if (idx < static_cast<long>(last.size())) kernel = last[static_cast<std::size_t>(idx)];
            } else {
                kernel = interior[static_cast<std::size_t>(u + half)];
            }
            integrand[static_cast<std::size_t>(j - j_lo)] = gen.gamma_back * occ * kernel;
        }
        numerator = trapz(integrand, dt);
    } else {
        std::vector<double> integrand(comb.size(), 0.0);
        for (long j = j_lo; j <= j_hi; ++j) {
            const double occ = ee[static_cast<std::size_t>(j - j_lo)];
            if (occ <= kOccupationFloor) continue;
            const double kernel =
                conditional_kernel(train, gen, opt, c0 + static_cast<double>(j) * dt, s_comb, dt);
            integrand[static_cast<std::size_t>(j - j_lo)] = gen.gamma_back * occ * kernel;
        }
        numerator = trapz(integrand, dt);
    }
    return numerator / denominator;
}

CoherenceGrid g1(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                 Channel channel, const SimGrid& grid) {
    if (channel != Channel::raman854)
        throw sim_error("g1: only the raman854 channel is supported");
    grid.validate();
    train.validate();
    scheme.validate();
    const LambdaGenerator gen(scheme, dephasing);
    IntegratorOptions opt;
    opt.rtol = grid.rtol;
    opt.atol = std::min(1e-12, grid.rtol);

    CoherenceGrid out;
    out.axis = grid.sample_times();
    const std::size_t n = out.axis.size();
    out.values = Eigen::MatrixXcd::Zero(n, n);

    // Source run: rho_ge and rho_ee on the comb seed the regression blocks.
    std::vector<cplx> ge(n, cplx(0.0, 0.0));
    std::vector<double> ee(n, 0.0);
    {
        const double start = std::min(out.axis.front(), train.pulse_center(0) - train.support_halfwidth());
        BlockGE rhs{gen, &train};
        std::size_t idx = 0;
        run_sampled<Vector4cd>(rhs, train, start, out.axis.back(), Vector4cd(1.0, 0.0, 0.0, 0.0),
                               opt, out.axis, [&](double, const Vector4cd& x) {
                                   if (idx < n) {
                                       ge[idx] = x[1];
                                       ee[idx] = x[3].real();
                                       ++idx;
                                   }
                               });
    }

    CoherenceBlock rhs{gen, &train};
    for (std::size_t i = 0; i < n; ++i) {
        out.values(i, i) = scheme.gamma_854 * ee[i];
        if (i + 1 >= n) break;
        if (std::abs(ge[i]) <= kOccupationFloor && ee[i] <= kOccupationFloor) continue;
        const Vector2cd v0(ge[i], cplx(ee[i], 0.0));
        std::vector<double> sub(out.axis.begin() + static_cast<long>(i) + 1, out.axis.end());
        std::size_t j = i + 1;
        run_sampled<Vector2cd>(rhs, train, out.axis[i], out.axis.back(), v0, opt, sub,
                               [&](double, const Vector2cd& v) {
                                   if (j < n) {
                                       out.values(i, j) = scheme.gamma_854 * v[1];
                                       out.values(j, i) = std::conj(out.values(i, j));
                                       ++j;
                                   }
                               });
    }
    return out;
}

cplx g1_entry_full(const PulseTrain& train, const LevelScheme& scheme, double dephasing,
                   double t1, double t2, double rtol) {
    const LambdaGenerator gen(scheme, dephasing);
    IntegratorOptions opt;
    opt.rtol = rtol;
    opt.atol = std::min(1e-12, rtol);
    const double t_first = std::min(t1, t2);
    const double start = std::min(t_first, train.pulse_center(0) - train.support_halfwidth());

    const Matrix4cd rho = propagate_matrix(ground_state(), start, t_first, train, gen, opt, {},
                                           [](double, const Matrix4cd&) {});
    Matrix4cd sigma_plus = Matrix4cd::Zero();
    sigma_plus(lvl_excited, lvl_dark854) = 1.0;
    Matrix4cd sigma_minus = Matrix4cd::Zero();
    sigma_minus(lvl_dark854, lvl_excited) = 1.0;

    if (t2 >= t1) {
        const Matrix4cd x1 = propagate_matrix(Matrix4cd(rho * sigma_plus), t1, t2, train, gen, opt,
                                              {}, [](double, const Matrix4cd&) {});
        return scheme.gamma_854 * x1(lvl_excited, lvl_dark854);
    }
    const Matrix4cd y1 = propagate_matrix(Matrix4cd(sigma_minus * rho), t2, t1, train, gen, opt, {},
                                          [](double, const Matrix4cd&) {});
    return scheme.gamma_854 * y1(lvl_dark854, lvl_excited);
}

CoherenceGrid restrict_to_same_pulse(const CoherenceGrid& grid, const PulseTrain& train) {
    CoherenceGrid out = grid;
    const std::size_t n = grid.axis.size();
    std::vector<std::size_t> window(n);
    for (std::size_t i = 0; i < n; ++i) window[i] = train.window_index(grid.axis[i]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (window[i] != window[j]) out.values(i, j) = cplx(0.0, 0.0);
    return out;
}

CorrelationGrid restrict_to_same_pulse(const CorrelationGrid& grid, const PulseTrain& train) {
    CorrelationGrid out = grid;
    for (std::size_t i = 0; i < grid.t_axis.size(); ++i) {
        const std::size_t wi = train.window_index(grid.t_axis[i]);
        for (std::size_t j = 0; j < grid.tau_axis.size(); ++j) {
            if (grid.tau_axis[j] == 0.0) continue;  // intensity diagonal untouched
            if (train.window_index(grid.t_axis[i] + grid.tau_axis[j]) != wi)
                out.values(i, j) = 0.0;
        }
    }
    return out;
}

}  // namespace ramanhom
