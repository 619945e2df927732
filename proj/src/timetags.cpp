#include "ramanhom/timetags.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "ramanhom/rng.hpp"

namespace ramanhom {

namespace {

double canonical_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::int64_t quantize_ps(double t_seconds) {
    const double ticks = std::floor(t_seconds / kTimetagResolution);
    return static_cast<std::int64_t>(ticks) * 625;
}

std::uint64_t poisson_draw(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
        // Knuth; fine for the small means used here.
        const double limit = std::exp(-mean);
        double p = 1.0;
        std::uint64_t k = 0;
        do {
            ++k;
            p *= canonical_uniform(rng);
        } while (p > limit);
        return k - 1;
    }
    // Normal approximation for large means.
    const double u1 = std::max(canonical_uniform(rng), 1e-300);
    const double u2 = canonical_uniform(rng);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    const double v = mean + std::sqrt(mean) * z;
    return v > 0.0 ? static_cast<std::uint64_t>(std::llround(v)) : 0;
}

Channel channel_from_name(const std::string& name) {
    if (name == "back393") return Channel::back393;
    if (name == "raman854") return Channel::raman854;
    if (name == "raman850") return Channel::raman850;
    throw sim_error("unknown channel label '" + name + "'");
}

}  // namespace

void EfficiencySet::validate() const {
    if (eta_393 < 0.0 || eta_393 > 1.0 || eta_854 < 0.0 || eta_854 > 1.0)
        throw config_error("EfficiencySet: efficiencies must lie in [0, 1]");
    if (bg_rate_393 < 0.0 || bg_rate_854 < 0.0)
        throw config_error("EfficiencySet: background rates must be nonnegative");
}

std::vector<DetectionRecord> synthesize_detections(const std::vector<EmissionEvent>& events,
                                                   const EfficiencySet& eff, double window,
                                                   std::uint64_t n_cycles, std::uint64_t seed) {
    eff.validate();
    if (!(window > 0.0)) throw config_error("synthesize_detections: window must be positive");

    std::vector<DetectionRecord> records;
    std::mt19937_64 thin_rng = substream(seed, "thinning");
    for (const auto& ev : events) {
        if (ev.time < 0.0) throw sim_error("synthesize_detections: negative emission time");
        if (ev.channel == Channel::raman850) continue;  // not routed to a detector
        const bool is854 = ev.channel == Channel::raman854;
        const double eta = is854 ? eff.eta_854 : eff.eta_393;
        if (canonical_uniform(thin_rng) >= eta) continue;
        DetectionRecord rec;
        rec.detector = is854 ? det_854 : det_393;
        rec.timestamp_ps = quantize_ps(ev.time);
        rec.channel = ev.channel;
        rec.cycle = ev.trajectory_id;
        records.push_back(rec);
    }

    std::mt19937_64 bg_rng = substream(seed, "background");
    const double means[2] = {eff.bg_rate_854 * window, eff.bg_rate_393 * window};
    for (std::uint64_t cycle = 0; cycle < n_cycles; ++cycle) {
        for (int det : {det_854, det_393}) {
            const std::uint64_t k = poisson_draw(bg_rng, means[det]);
            for (std::uint64_t i = 0; i < k; ++i) {
                DetectionRecord rec;
                rec.detector = det;
                rec.timestamp_ps = quantize_ps(canonical_uniform(bg_rng) * window);
                rec.channel = det == det_854 ? Channel::raman854 : Channel::back393;
                rec.cycle = cycle;
                records.push_back(rec);
            }
        }
    }
    std::sort(records.begin(), records.end(), [](const DetectionRecord& a, const DetectionRecord& b) {
        if (a.cycle != b.cycle) return a.cycle < b.cycle;
        if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
        return a.detector < b.detector;
    });
    return records;
}

CorrelationHistogram cross_correlate(const std::vector<DetectionRecord>& records,
                                     double bin_width, double tau_min, double tau_max) {
    if (!(bin_width > 0.0)) throw config_error("cross_correlate: bin width must be positive");
    if (!(tau_max > tau_min)) throw config_error("cross_correlate: empty tau range");

    const long b_lo = std::lround(tau_min / bin_width);
    const long b_hi = std::lround(tau_max / bin_width);
    CorrelationHistogram hist;
    hist.bin_width = bin_width;
    hist.bin_centers.reserve(static_cast<std::size_t>(b_hi - b_lo + 1));
    for (long b = b_lo; b <= b_hi; ++b)
        hist.bin_centers.push_back(static_cast<double>(b) * bin_width);
    hist.counts.assign(hist.bin_centers.size(), 0);

    // Per-cycle matching; cross-cycle pairs are excluded.
    std::size_t n854 = 0;
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i;
        while (j < records.size() && records[j].cycle == records[i].cycle) ++j;
        for (std::size_t p = i; p < j; ++p) {
            if (records[p].detector != det_854) continue;
            ++n854;
            for (std::size_t q = i; q < j; ++q) {
                if (records[q].detector != det_393) continue;
                const double tau =
                    static_cast<double>(records[q].timestamp_ps - records[p].timestamp_ps) * 1e-12;
                const long b = std::lround(tau / bin_width);
                if (b < b_lo || b > b_hi) continue;
                ++hist.counts[static_cast<std::size_t>(b - b_lo)];
            }
        }
        i = j;
    }
    hist.empty_source = n854 == 0;
    return hist;
}

MeanEstimate estimate_mean_N(const CorrelationHistogram& hist, const EfficiencySet& eff,
                             std::uint64_t n854, double t_rep) {
    if (eff.eta_393 <= 0.0)
        throw undefined_value_error("estimate_mean_N: eta_393 must be positive");
    if (n854 == 0) throw undefined_value_error("estimate_mean_N: no 854 detections");
    if (!(t_rep > 0.0)) throw config_error("estimate_mean_N: t_rep must be positive");

    double window_counts = 0.0, background_counts = 0.0;
    for (std::size_t b = 0; b < hist.bin_centers.size(); ++b) {
        const double tau = hist.bin_centers[b];
        if (tau >= -0.5 * t_rep && tau <= 0.0)
            window_counts += static_cast<double>(hist.counts[b]);
        else if (tau > 0.0 && tau <= 0.5 * t_rep)
            background_counts += static_cast<double>(hist.counts[b]);
    }
    const double denom = eff.eta_393 * static_cast<double>(n854);
    MeanEstimate est;
    est.value = (window_counts - background_counts) / denom;
    // Poisson counts plus the n854 normalization fluctuation; the count
    // variance is floored at one so empty windows report a finite error.
    const double var_counts =
        std::max(window_counts + background_counts, 1.0) / (denom * denom);
    const double var_norm = est.value * est.value / static_cast<double>(n854);
    est.stderr_ = std::sqrt(var_counts + var_norm);
    return est;
}

VisibilityCurve estimate_visibility(const std::vector<Coincidence>& coincidences,
                                    const std::vector<double>& windows) {
    bool any_par = false, any_perp = false;
    for (const auto& c : coincidences) (c.parallel ? any_par : any_perp) = true;
    if (!any_par && !any_perp)
        throw undefined_value_error("estimate_visibility: no coincidences");
    if (!any_perp)
        throw undefined_value_error("estimate_visibility: no orthogonal coincidences");

    VisibilityCurve curve;
    curve.windows = windows;
    for (double t_win : windows) {
        double c_par = 0.0, c_perp = 0.0;
        for (const auto& c : coincidences) {
            if (std::abs(c.tau) > 0.5 * t_win) continue;
            (c.parallel ? c_par : c_perp) += 1.0;
        }
        if (c_perp <= 0.0)
            throw undefined_value_error("estimate_visibility: zero orthogonal counts at T = " +
                                        std::to_string(t_win));
        const double ratio = c_par / c_perp;
        curve.values.push_back(1.0 - ratio);
        curve.errors.push_back(std::sqrt(c_par / (c_perp * c_perp) + ratio * ratio / c_perp));
    }
    curve.validate();
    return curve;
}

std::vector<Coincidence> sample_coincidences(const CorrelationGrid& parallel,
                                             const CorrelationGrid& orthogonal,
                                             double expected_pairs, std::uint64_t seed) {
    if (parallel.tau_axis != orthogonal.tau_axis)
        throw sim_error("sample_coincidences: grids on different tau axes");
    if (!(expected_pairs > 0.0))
        throw config_error("sample_coincidences: expected_pairs must be positive");

    auto marginal = [](const CorrelationGrid& g) {
        std::vector<double> m(g.tau_axis.size(), 0.0);
        const double dt = g.dt();
        for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
            double s = 0.0;
            for (Eigen::Index i = 0; i + 1 < g.values.rows(); ++i)
                s += 0.5 * (g.values(i, j) + g.values(i + 1, j)) * dt;
            m[static_cast<std::size_t>(j)] = std::max(s, 0.0);
        }
        return m;
    };
    const std::vector<double> m_par = marginal(parallel);
    const std::vector<double> m_perp = marginal(orthogonal);
    auto total = [](const std::vector<double>& m) {
        double s = 0.0;
        for (double v : m) s += v;
        return s;
    };
    const double mass_par = total(m_par), mass_perp = total(m_perp);
    if (mass_par + mass_perp <= 0.0)
        throw undefined_value_error("sample_coincidences: empty correlation surfaces");

    std::mt19937_64 rng = substream(seed, "coincidences");
    const double scale = expected_pairs / (mass_par + mass_perp);

    std::vector<Coincidence> out;
    auto draw_arm = [&](const std::vector<double>& m, double mass, bool parallel_arm,
                        const std::vector<double>& tau_axis, double dtau) {
        const std::uint64_t n = poisson_draw(rng, scale * mass);
        // Inverse-CDF over the discrete tau bins, uniform within a bin.
        std::vector<double> cdf(m.size());
        double acc = 0.0;
        for (std::size_t j = 0; j < m.size(); ++j) {
            acc += m[j];
            cdf[j] = acc;
        }
        for (std::uint64_t k = 0; k < n; ++k) {
            const double u = canonical_uniform(rng) * acc;
            const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
            const auto j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
                it - cdf.begin(), static_cast<std::ptrdiff_t>(m.size()) - 1));
            const double tau = tau_axis[j] + (canonical_uniform(rng) - 0.5) * dtau;
            out.push_back({tau, parallel_arm});
        }
    };
    draw_arm(m_par, mass_par, true, parallel.tau_axis, parallel.dt());
    draw_arm(m_perp, mass_perp, false, orthogonal.tau_axis, orthogonal.dt());
    return out;
}

void write_records_csv(std::ostream& os, const std::vector<DetectionRecord>& records) {
    os << "detector,timestamp_ps,channel,cycle\n";
    for (const auto& r : records)
        os << r.detector << ',' << r.timestamp_ps << ',' << channel_name(r.channel) << ','
           << r.cycle << '\n';
}

std::vector<DetectionRecord> read_records_csv(std::istream& is) {
    std::vector<DetectionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line.rfind("detector", 0) == 0) continue;
        std::istringstream ss(line);
        std::string field;
        DetectionRecord rec;
        try {
            std::getline(ss, field, ',');
            rec.detector = std::stoi(field);
            std::getline(ss, field, ',');
            rec.timestamp_ps = std::stoll(field);
            std::getline(ss, field, ',');
            rec.channel = channel_from_name(field);
            std::getline(ss, field, ',');
            rec.cycle = std::stoull(field);
        } catch (const std::exception&) {
            throw config_error("records csv: malformed line " + std::to_string(line_no));
        }
        if (rec.timestamp_ps < 0 || rec.timestamp_ps % 625 != 0)
            throw config_error("records csv: timestamp not a multiple of 625 ps at line " +
                               std::to_string(line_no));
        out.push_back(rec);
    }
    return out;
}

void write_events_csv(std::ostream& os, const std::vector<EmissionEvent>& events) {
    os << "trajectory,time_s,channel,pulse\n";
    char buf[64];
    for (const auto& ev : events) {
        std::snprintf(buf, sizeof buf, "%.17g", ev.time);
        os << ev.trajectory_id << ',' << buf << ',' << channel_name(ev.channel) << ','
           << ev.pulse_index << '\n';
    }
}

std::vector<EmissionEvent> read_events_csv(std::istream& is) {
    std::vector<EmissionEvent> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line.rfind("trajectory", 0) == 0) continue;
        std::istringstream ss(line);
        std::string field;
        EmissionEvent ev;
        try {
            std::getline(ss, field, ',');
            ev.trajectory_id = std::stoull(field);
            std::getline(ss, field, ',');
            ev.time = std::stod(field);
            std::getline(ss, field, ',');
            ev.channel = channel_from_name(field);
            std::getline(ss, field, ',');
            ev.pulse_index = static_cast<std::uint32_t>(std::stoul(field));
        } catch (const std::exception&) {
            throw config_error("events csv: malformed line " + std::to_string(line_no));
        }
        out.push_back(ev);
    }
    return out;
}

void write_histogram_csv(std::ostream& os, const CorrelationHistogram& hist) {
    os << "tau_s,count\n";
    char buf[64];
    for (std::size_t b = 0; b < hist.bin_centers.size(); ++b) {
        std::snprintf(buf, sizeof buf, "%.17g", hist.bin_centers[b]);
        os << buf << ',' << hist.counts[b] << '\n';
    }
}

}  // namespace ramanhom
