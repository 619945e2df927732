#include "ramanhom/trajectory.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <thread>

#include "ramanhom/integrator.hpp"
#include "ramanhom/lindblad.hpp"
#include "ramanhom/rng.hpp"

namespace ramanhom {

using Eigen::Vector2cd;
using cplx = std::complex<double>;

namespace {

double canonical_uniform(std::mt19937_64& rng) {
    // 53-bit mantissa uniform in [0, 1); independent of library distributions
    // so streams are portable and stable.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct JumpChannels {
    double gamma_back, gamma_854, gamma_850, dephasing2;  // 2 * delta_omega
    double total() const { return gamma_back + gamma_854 + gamma_850 + dephasing2; }
};

// No-jump amplitudes (alpha, beta) under H_eff; only beta evolves when the
// drive is off.
struct NoJumpRHS {
    const PulseTrain* train;
    double detuning;
    double half_decay;  // (Gamma_tot + 2 delta_omega) / 2

    Vector2cd operator()(double t, const Vector2cd& psi) const {
        const double w = 0.5 * train->rabi_at(t);
        const cplx im(0.0, 1.0);
        Vector2cd out;
        out[0] = -im * w * psi[1];
        out[1] = -im * w * psi[0] + (im * detuning - half_decay) * psi[1];
        return out;
    }
};

// Sampled no-jump propagator of one pulse window: U(s) maps the window-entry
// amplitudes to the state at offset s. All pulses share it. Jump-free windows
// then cost a single 2x2 apply; threshold crossings are bracketed on the comb
// and refined by integrating just the local stretch.
struct WindowMap {
    double ds = 0.0;
    std::vector<Eigen::Matrix2cd> u;  // u[j] = U(j * ds), j = 0..S

    const Eigen::Matrix2cd& full() const { return u.back(); }
};

struct TrajectoryContext {
    const PulseTrain* train;
    JumpChannels channels;
    double detuning;
    IntegratorOptions opt;
    double support_halfwidth;
    WindowMap window_map;
};

enum class JumpKind { back393, raman854, raman850, dephase };

JumpKind draw_channel(const JumpChannels& ch, std::mt19937_64& rng) {
    const double u = canonical_uniform(rng) * ch.total();
    if (u < ch.gamma_back) return JumpKind::back393;
    if (u < ch.gamma_back + ch.gamma_854) return JumpKind::raman854;
    if (u < ch.gamma_back + ch.gamma_854 + ch.gamma_850) return JumpKind::raman850;
    return JumpKind::dephase;
}

// Evolves through a drive-free stretch. Returns true with the jump time when
// the norm threshold is crossed before gap_end (gap_end may be +inf).
bool gap_evolution(const TrajectoryContext& ctx, Vector2cd& psi, double t0, double gap_end,
                   double r, double& t_jump) {
    const double decay = ctx.channels.total();  // norm^2 rate of the e component
    const double a2 = std::norm(psi[0]);
    const double b2 = std::norm(psi[1]);
    const cplx evolve_rate(-0.5 * decay, ctx.detuning);  // d beta / beta per unit time

    auto advance_to = [&](double t1) {
        psi[1] *= std::exp(evolve_rate * (t1 - t0));
    };

    if (decay <= 0.0 || b2 <= 0.0 || r <= a2) {
        if (std::isfinite(gap_end)) advance_to(gap_end);
        return false;
    }
    const double delta = std::max(std::log(b2 / (r - a2)) / decay, 0.0);
    if (t0 + delta < gap_end) {
        t_jump = t0 + delta;
        advance_to(t_jump);
        return true;
    }
    if (std::isfinite(gap_end)) advance_to(gap_end);
    return false;
}

double span_guard(double t_scale) {
    return std::max(1e-18, 8.0 * 2.220446049250313e-16 * std::abs(t_scale));
}

// Evolves across [t, window_end] by direct integration, locating a threshold
// crossing with dense-output bisection. Returns true when a jump happened.
bool window_evolution(const TrajectoryContext& ctx, Vector2cd& psi, double& t, double window_end,
                      double r) {
    NoJumpRHS rhs{ctx.train, ctx.detuning, 0.5 * ctx.channels.total()};
    Dopri5<Vector2cd> stepper(rhs, t, psi, ctx.opt);
    const double t_eps = span_guard(window_end);
    while (window_end - stepper.time() > t_eps) {
        stepper.step(rhs, window_end);
        if (stepper.state().squaredNorm() < r) {
            double lo = stepper.previous_time();
            double hi = stepper.time();
            for (int it = 0; it < 80 && hi - lo > 1e-16 * std::max(hi, 1.0); ++it) {
                const double mid = 0.5 * (lo + hi);
                if (stepper.dense_eval(mid).squaredNorm() < r)
                    hi = mid;
                else
                    lo = mid;
            }
            t = 0.5 * (lo + hi);
            psi = stepper.dense_eval(t);
            return true;
        }
    }
    t = window_end;
    psi = stepper.state();
    return false;
}

WindowMap build_window_map(const TrajectoryContext& ctx) {
    const PulseTrain& train = *ctx.train;
    const double w = ctx.support_halfwidth;
    const double s0 = train.pulse_center(0) - w;
    const double s1 = train.pulse_center(0) + w;
    const long steps = std::max(8L, std::lround((s1 - s0) / 0.25e-9));
    WindowMap map;
    map.ds = (s1 - s0) / static_cast<double>(steps);
    map.u.assign(static_cast<std::size_t>(steps) + 1, Eigen::Matrix2cd::Identity());

    NoJumpRHS rhs{ctx.train, ctx.detuning, 0.5 * ctx.channels.total()};
    std::vector<double> samples;
    for (long j = 1; j <= steps; ++j) samples.push_back(s0 + static_cast<double>(j) * map.ds);
    for (int basis = 0; basis < 2; ++basis) {
        Vector2cd psi0 = basis == 0 ? Vector2cd(1.0, 0.0) : Vector2cd(0.0, 1.0);
        std::size_t j = 1;
        integrate_sampled(rhs, s0, s1, psi0, ctx.opt, samples.begin(), samples.end(),
                          [&](double, const Vector2cd& v) {
                              if (j < map.u.size()) map.u[j++].col(basis) = v;
                          });
    }
    return map;
}

struct LocalAccumulator {
    std::vector<EmissionEvent> events;
    std::vector<std::uint64_t> histogram;
    std::uint64_t back393 = 0, raman854 = 0, raman850 = 0;

    void bump_histogram(std::size_t n) {
        if (histogram.size() <= n) histogram.resize(n + 1, 0);
        ++histogram[n];
    }
};

void simulate_one(const TrajectoryContext& ctx, std::uint64_t id, std::uint64_t seed,
                  bool keep_events, LocalAccumulator& acc) {
    std::mt19937_64 rng = substream(seed, id);
    const PulseTrain& train = *ctx.train;
    const double w = ctx.support_halfwidth;

    Vector2cd psi(1.0, 0.0);
    double t = train.pulse_center(0) - w;
    double r = canonical_uniform(rng);

    std::vector<EmissionEvent> local;  // this trajectory's emissions, in time order
    bool dark = false;

    auto handle_jump = [&](double t_jump) -> bool {  // returns true when trajectory went dark
        const JumpKind kind = draw_channel(ctx.channels, rng);
        r = canonical_uniform(rng);
        switch (kind) {
            case JumpKind::back393:
                local.push_back({t_jump, Channel::back393,
                                 static_cast<std::uint32_t>(train.window_index(t_jump)), id});
                psi = Vector2cd(1.0, 0.0);
                return false;
            case JumpKind::raman854:
                local.push_back({t_jump, Channel::raman854,
                                 static_cast<std::uint32_t>(train.window_index(t_jump)), id});
                return true;
            case JumpKind::raman850:
                local.push_back({t_jump, Channel::raman850,
                                 static_cast<std::uint32_t>(train.window_index(t_jump)), id});
                return true;
            case JumpKind::dephase:
                psi = Vector2cd(0.0, psi[1] / std::abs(psi[1]));
                return false;
        }
        return false;
    };

    for (std::size_t k = 0; k < train.n_pulses && !dark; ++k) {
        const double win_lo = train.pulse_center(k) - w;
        const double win_hi = train.pulse_center(k) + w;
        // Gap before pulse k (analytic; jumps possible while beta decays).
        while (win_lo - t > span_guard(win_lo) && !dark) {
            double t_jump;
            if (gap_evolution(ctx, psi, t, win_lo, r, t_jump)) {
                t = t_jump;
                dark = handle_jump(t_jump);
            } else {
                t = win_lo;
            }
        }
        if (dark) break;
        t = win_lo;
        // Jump-free windows shortcut through the cached propagator; a
        // crossing is bracketed on the comb and the local stretch integrated.
        const WindowMap& map = ctx.window_map;
        if ((map.full() * psi).squaredNorm() >= r) {
            psi = map.full() * psi;
            t = win_hi;
        } else {
            std::size_t lo = 0, hi = map.u.size() - 1;
            while (hi - lo > 1) {
                const std::size_t mid = (lo + hi) / 2;
                if ((map.u[mid] * psi).squaredNorm() < r)
                    hi = mid;
                else
                    lo = mid;
            }
            t = win_lo + static_cast<double>(lo) * map.ds;
            psi = map.u[lo] * psi;
            while (win_hi - t > span_guard(win_hi) && !dark) {
                if (window_evolution(ctx, psi, t, win_hi, r)) dark = handle_jump(t);
            }
        }
    }
    // Tail after the last pulse: one unbounded drive-free stretch.
    while (!dark && std::norm(psi[1]) > 0.0 && ctx.channels.total() > 0.0) {
        double t_jump;
        if (!gap_evolution(ctx, psi, t, std::numeric_limits<double>::infinity(), r, t_jump)) break;
        t = t_jump;
        dark = handle_jump(t_jump);
    }

    double t854 = -1.0;
    for (const auto& ev : local) {
        switch (ev.channel) {
            case Channel::back393: ++acc.back393; break;
            case Channel::raman854:
                ++acc.raman854;
                t854 = ev.time;
                break;
            case Channel::raman850: ++acc.raman850; break;
        }
    }
    if (t854 >= 0.0) {
        std::size_t n = 0;
        for (const auto& ev : local)
            if (ev.channel == Channel::back393 && ev.time >= t854 - 0.5 * train.t_rep &&
                ev.time <= t854)
                ++n;
        acc.bump_histogram(n);
    }
    if (keep_events)
        acc.events.insert(acc.events.end(), local.begin(), local.end());
}

}  // namespace

std::uint64_t TrajectoryStats::histogram_total() const {
    std::uint64_t total = 0;
    for (auto c : n_histogram) total += c;
    return total;
}

TrajectoryResult run_trajectories(const PulseTrain& train, const LevelScheme& scheme,
                                  double dephasing, std::uint64_t n, std::uint64_t seed,
                                  const TrajectoryOptions& options) {
    if (n < 1) throw config_error("run_trajectories: need at least one trajectory");
    train.validate();
    scheme.validate();
    if (dephasing < 0.0) throw config_error("run_trajectories: dephasing must be nonnegative");

    TrajectoryContext ctx;
    ctx.train = &train;
    ctx.channels = {scheme.gamma_back, scheme.gamma_854, scheme.gamma_850, 2.0 * dephasing};
    ctx.detuning = scheme.detuning;
    ctx.opt.rtol = options.rtol;
    ctx.opt.atol = std::min(1e-12, options.rtol);
    ctx.support_halfwidth = train.support_halfwidth();
    ctx.window_map = build_window_map(ctx);

    const unsigned threads = std::max(1u, options.threads);
    std::vector<LocalAccumulator> parts(threads);
    auto work = [&](unsigned slot) {
        for (std::uint64_t id = slot; id < n; id += threads)
            simulate_one(ctx, id, seed, options.keep_events, parts[slot]);
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned s = 0; s < threads; ++s) pool.emplace_back(work, s);
        for (auto& th : pool) th.join();
    }

    TrajectoryResult out;
    out.stats.n_trajectories = n;
    out.stats.seed = seed;
    for (const auto& p : parts) {
        out.stats.count_back393 += p.back393;
        out.stats.count_raman854 += p.raman854;
        out.stats.count_raman850 += p.raman850;
        if (p.histogram.size() > out.stats.n_histogram.size())
            out.stats.n_histogram.resize(p.histogram.size(), 0);
        for (std::size_t i = 0; i < p.histogram.size(); ++i)
            out.stats.n_histogram[i] += p.histogram[i];
    }
    if (options.keep_events) {
        std::size_t total = 0;
        for (const auto& p : parts) total += p.events.size();
        out.events.reserve(total);
        for (const auto& p : parts) out.events.insert(out.events.end(), p.events.begin(), p.events.end());
        std::sort(out.events.begin(), out.events.end(), [](const EmissionEvent& a, const EmissionEvent& b) {
            if (a.trajectory_id != b.trajectory_id) return a.trajectory_id < b.trajectory_id;
            return a.time < b.time;
        });
    }
    return out;
}

MeanEstimate empirical_mean_N(const TrajectoryStats& stats) {
    const std::uint64_t total = stats.histogram_total();
    if (total == 0) throw undefined_value_error("empirical_mean_N: no 854 events");
    double mean = 0.0, mean_sq = 0.0;
    for (std::size_t n = 0; n < stats.n_histogram.size(); ++n) {
        const double p = static_cast<double>(stats.n_histogram[n]) / static_cast<double>(total);
        mean += static_cast<double>(n) * p;
        mean_sq += static_cast<double>(n) * static_cast<double>(n) * p;
    }
    MeanEstimate est;
    est.value = mean;
    est.stderr_ = std::sqrt(std::max(mean_sq - mean * mean, 0.0) / static_cast<double>(total));
    return est;
}

MeanEstimate empirical_p854(const TrajectoryStats& stats) {
    if (stats.n_trajectories == 0) throw undefined_value_error("empirical_p854: no trajectories");
    const double n = static_cast<double>(stats.n_trajectories);
    const double p = static_cast<double>(stats.count_raman854) / n;
    return {p, std::sqrt(std::max(p * (1.0 - p), 0.0) / n)};
}

}  // namespace ramanhom
