#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "ramanhom/correlator.hpp"
#include "ramanhom/csv.hpp"
#include "ramanhom/hom.hpp"
#include "ramanhom/lindblad.hpp"
#include "ramanhom/scenario.hpp"
#include "ramanhom/timetags.hpp"
#include "ramanhom/trajectory.hpp"

namespace fs = std::filesystem;
using namespace ramanhom;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.2.0";

struct RunContext {
    Scenario scenario;
    fs::path out_dir;
    unsigned threads = 1;
    bool verbose = false;
    json manifest;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    std::string out_path(const std::string& name) {
        outputs.push_back(name);
        return (out_dir / name).string();
    }

    void log(const std::string& msg) const {
        if (verbose) std::cerr << "[ramanhom] " << msg << "\n";
    }

    void finish(const std::string& subcommand) {
        const Scenario& sc = scenario;
        manifest["tool"] = "ramanhom";
        manifest["version"] = kVersion;
        manifest["subcommand"] = subcommand;
        manifest["scenario_file"] = sc.source_path;
        manifest["seed"] = sc.seed;
        manifest["threads"] = threads;
        manifest["outputs"] = outputs;
        manifest["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        manifest["parameters"] = {
            {"gamma_back_per_s", sc.scheme.gamma_back},
            {"gamma_854_per_s", sc.scheme.gamma_854},
            {"gamma_850_per_s", sc.scheme.gamma_850},
            {"detuning_rad_s", sc.scheme.detuning},
            {"dephasing_rad_s", sc.dephasing},
            {"t_pulse_s", sc.t_pulse},
            {"beta", sc.beta},
            {"t_rep_s", sc.t_rep},
            {"n_pulses", sc.n_pulses},
            {"peak_rabi_rad_s", sc.peak_rabi},
            {"dt_s", sc.dt},
            {"rtol", sc.rtol},
            {"hom_windows", sc.hom_windows},
            {"transmission", sc.beam_splitter.transmission},
            {"eta_c", sc.eta_c},
            {"eta_d", sc.eta_d},
            {"sbr", sc.sbr},
            {"delta_phi_rad", sc.delta_phi},
        };
        const fs::path path = out_dir / "manifest.json";
        std::ofstream os(path);
        os << manifest.dump(2) << "\n";
        std::cout << "wrote " << path.string() << "\n";
    }
};

double calibrate_for(const RunContext& ctx, const PulseTrain& train, double target) {
    CalibrationSettings settings;
    settings.omega_max = ctx.scenario.omega_max;
    settings.tolerance = ctx.scenario.calibrate_tolerance;
    settings.rtol = ctx.scenario.rtol;
    return calibrate_peak_rabi(train, ctx.scenario.scheme, ctx.scenario.dephasing, target, settings);
}

// Explicit peak_rabi wins, otherwise calibrate against the scenario target.
double resolve_peak_rabi(RunContext& ctx, const PulseTrain& base) {
    if (ctx.scenario.peak_rabi > 0.0) return ctx.scenario.peak_rabi;
    if (!(ctx.scenario.target_p854 > 0.0))
        throw config_error("scenario: set [pulse] peak_rabi or [calibrate] target_p854");
    ctx.log("calibrating peak Rabi frequency");
    const double omega = calibrate_for(ctx, base, ctx.scenario.target_p854);
    ctx.manifest["calibration"] = {{"omega_peak_rad_s", omega},
                                   {"omega_peak_over_2pi_hz", omega / kTwoPi},
                                   {"target_p854", ctx.scenario.target_p854}};
    return omega;
}

std::vector<double> window_list(double dt, double span, double t_rep) {
    std::vector<double> windows;
    const double step = std::max(span / 240.0, dt);
    for (double t = step; t < span * (1.0 + 1e-12); t += step) windows.push_back(t);
    windows.push_back(t_rep);
    std::sort(windows.begin(), windows.end());
    windows.erase(std::unique(windows.begin(), windows.end(),
                              [](double a, double b) { return std::abs(a - b) < 1e-15; }),
                  windows.end());
    while (!windows.empty() && windows.back() > span * (1.0 + 1e-12)) windows.pop_back();
    return windows;
}

std::vector<double> marginal_of(const CorrelationGrid& g) {
    std::vector<double> m(g.tau_axis.size(), 0.0);
    for (std::size_t j = 0; j < g.tau_axis.size(); ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i + 1 < g.values.rows(); ++i)
            s += 0.5 * (g.values(i, j) + g.values(i + 1, j)) * g.dt();
        m[j] = s;
    }
    return m;
}

struct HomPointResult {
    double p854 = 0.0;
    double n_mean = 0.0;
    double v_trep = 0.0;
    double v_trep_ideal = 0.0;
    VisibilityCurve curve;
    std::vector<double> tau_axis;
    std::vector<double> c_par;
    std::vector<double> c_perp;
};

// One operating point of the two-identical-emitter interference model, plus
// the ideal-optics reference value used for the trend summary.
HomPointResult run_hom_point(RunContext& ctx, const PulseTrain& train) {
    const Scenario& sc = ctx.scenario;
    HomPointResult out;
    out.p854 = p854_of_train(train, sc.scheme, sc.dephasing, sc.rtol);
    out.n_mean = mean_back_decays(train, sc.scheme, sc.dephasing, {sc.dt, sc.rtol, false});

    const double span_t = static_cast<double>(sc.hom_windows) * train.t_rep;
    SimGrid grid{0.0, span_t, sc.dt, sc.rtol, 1e-12};
    ctx.log("computing g1 grid (" + std::to_string(grid.sample_times().size()) + " samples)");
    CoherenceGrid g = g1(train, sc.scheme, sc.dephasing, Channel::raman854, grid);
    g = restrict_to_same_pulse(g, train);

    const double tau_span = 0.5 * span_t;
    const double b0 = sc.sbr > 0.0
                          ? b0_from_sbr(sc.sbr, beam_splitter_outputs(g, g, sc.beam_splitter),
                                        g.dt(), sc.eta_c, sc.eta_d, span_t)
                          : 0.0;
    if (b0 > 0.0) ctx.manifest["background_b0"] = b0;
    const HomArms arms = hom_arms(g, g, sc.beam_splitter, sc.make_detection_model(b0), tau_span);

    const std::vector<double> windows = window_list(sc.dt, 2.0 * tau_span, train.t_rep);
    out.curve = visibility_curve(arms.parallel, arms.orthogonal, windows);
    out.v_trep = out.curve.at(train.t_rep);
    out.tau_axis = arms.parallel.tau_axis;
    out.c_par = marginal_of(arms.parallel);
    out.c_perp = marginal_of(arms.orthogonal);

    // Ideal-optics reference: balanced splitter, matched polarization, no
    // background, no laser dephasing; only back-decays limit it.
    ctx.log("computing ideal-optics reference");
    CoherenceGrid g_ideal = g1(train, sc.scheme, 0.0, Channel::raman854, grid);
    g_ideal = restrict_to_same_pulse(g_ideal, train);
    const HomArms ideal =
        hom_arms(g_ideal, g_ideal, BeamSplitter{0.5}, DetectionModel{1, 1, 0, 0}, tau_span);
    out.v_trep_ideal =
        visibility_curve(ideal.parallel, ideal.orthogonal, {train.t_rep}).values.front();
    return out;
}

void write_hom_point(RunContext& ctx, const HomPointResult& r, const std::string& tag) {
    CsvFile vis(ctx.out_path("hom_visibility" + tag + ".csv"), {"window_s", "visibility"});
    for (std::size_t i = 0; i < r.curve.windows.size(); ++i)
        vis.row({r.curve.windows[i], r.curve.values[i]});
    CsvFile marg(ctx.out_path("hom_coincidences" + tag + ".csv"),
                 {"tau_s", "c_parallel", "c_orthogonal"});
    for (std::size_t j = 0; j < r.tau_axis.size(); ++j)
        marg.row({r.tau_axis[j], r.c_par[j], r.c_perp[j]});
}

int cmd_fit_pulse(RunContext& ctx, const std::string& input_path) {
    const std::string path = input_path.empty() ? ctx.scenario.pulse_histogram : input_path;
    if (path.empty())
        throw config_error("fit-pulse needs --input or [inputs] pulse_histogram in the scenario");
    const auto samples = read_two_column_csv(path);
    const PulseFitResult fit = fit_pulse(samples);

    CsvFile result(ctx.out_path("fit_result.csv"), {"parameter", "value", "stderr"});
    result.raw_row("amplitude," + format_double(fit.shape.amplitude) + "," +
                   format_double(fit.amplitude_err));
    result.raw_row("center_s," + format_double(fit.shape.center) + "," +
                   format_double(fit.center_err));
    result.raw_row("sigma_s," + format_double(fit.shape.sigma) + "," + format_double(fit.sigma_err));
    result.raw_row("beta," + format_double(fit.shape.beta) + "," + format_double(fit.beta_err));
    result.raw_row("fwhm_s," + format_double(fit.fwhm_value) + "," + format_double(fit.fwhm_err));

    CsvFile curve(ctx.out_path("fit_curve.csv"), {"t_s", "count", "model"});
    for (const auto& [t, c] : samples) curve.row({t, c, intensity_at(fit.shape, t)});

    ctx.manifest["fit"] = {{"amplitude", fit.shape.amplitude}, {"center_s", fit.shape.center},
                           {"sigma_s", fit.shape.sigma},       {"beta", fit.shape.beta},
                           {"fwhm_s", fit.fwhm_value},         {"fwhm_stderr_s", fit.fwhm_err},
                           {"chi2", fit.chi2},                 {"dof", fit.dof}};
    std::cout << "fitted: fwhm = " << fit.fwhm_value * 1e9 << " ns, beta = " << fit.shape.beta
              << "\n";
    return 0;
}

int cmd_calibrate(RunContext& ctx) {
    if (!(ctx.scenario.target_p854 > 0.0))
        throw config_error("calibrate needs [calibrate] target_p854");
    PulseTrain train = ctx.scenario.make_train();
    const double omega = calibrate_for(ctx, train, ctx.scenario.target_p854);
    train.shape.peak_rabi = omega;
    const double achieved =
        p854_of_train(train, ctx.scenario.scheme, ctx.scenario.dephasing, ctx.scenario.rtol);

    CsvFile csv(ctx.out_path("calibration.csv"), {"t_pulse_s", "beta", "t_rep_s", "target_p854",
                                                  "omega_peak_rad_s", "achieved_p854"});
    csv.row({ctx.scenario.t_pulse, ctx.scenario.beta, ctx.scenario.t_rep, ctx.scenario.target_p854,
             omega, achieved});
    ctx.manifest["calibration"] = {{"omega_peak_rad_s", omega},
                                   {"omega_peak_over_2pi_hz", omega / kTwoPi},
                                   {"target_p854", ctx.scenario.target_p854},
                                   {"achieved_p854", achieved},
                                   {"error", achieved - ctx.scenario.target_p854}};
    std::cout << "omega_peak/2pi = " << omega / kTwoPi / 1e6 << " MHz, p854 = " << achieved << "\n";
    return 0;
}

int cmd_train(RunContext& ctx) {
    const Scenario& sc = ctx.scenario;
    PulseTrain train = sc.make_train();
    train.shape.peak_rabi = resolve_peak_rabi(ctx, train);

    const double t_end = static_cast<double>(train.n_pulses) * train.t_rep;
    SimGrid grid{0.0, t_end, sc.dt, sc.rtol, 1e-12};
    ctx.log("propagating the full train");
    const StateTrajectory traj = propagate(ground_state(), train, sc.scheme, sc.dephasing, grid);

    const std::vector<double> r393 = emission_rate(traj, sc.scheme, Channel::back393);
    const std::vector<double> r854 = emission_rate(traj, sc.scheme, Channel::raman854);
    CsvFile rates(ctx.out_path("train_rates.csv"), {"t_s", "rate_393", "rate_854", "envelope"});
    CsvFile pops(ctx.out_path("train_populations.csv"),
                 {"t_s", "p_ground", "p_excited", "p_d854", "p_d850", "coherence_abs"});
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& rho = traj.states[i];
        rates.row({traj.times[i], r393[i], r854[i], train.envelope_at(traj.times[i])});
        pops.row({traj.times[i], rho(lvl_ground, lvl_ground).real(),
                  rho(lvl_excited, lvl_excited).real(), rho(lvl_dark854, lvl_dark854).real(),
                  rho(lvl_dark850, lvl_dark850).real(), std::abs(rho(lvl_ground, lvl_excited))});
    }

    const std::vector<double> areas = per_pulse_854_areas(train, sc.scheme, sc.dephasing, sc.rtol);
    CsvFile area_csv(ctx.out_path("per_pulse_areas.csv"), {"pulse", "area_854"});
    for (std::size_t k = 0; k < areas.size(); ++k) area_csv.row({static_cast<double>(k), areas[k]});

    const SurvivalFit fit = fit_survival(areas);
    const double p854 = branching_ratio(sc.scheme) * fit.p_raman;
    ctx.manifest["train"] = {
        {"p_raman_fit", fit.p_raman},
        {"p_raman_fit_stderr", fit.stderr_p},
        {"p854_from_fit", p854},
        {"p854_per_pulse", p854_of_train(train, sc.scheme, sc.dephasing, sc.rtol)}};
    std::cout << "P_Raman = " << fit.p_raman << " -> P854 = " << p854 << "\n";
    return 0;
}

int cmd_backdecay(RunContext& ctx) {
    const Scenario& sc = ctx.scenario;
    PulseTrain train = sc.make_train();
    train.shape.peak_rabi = resolve_peak_rabi(ctx, train);

    CorrelationRequest req;
    req.dt = sc.dt;
    req.rtol = sc.rtol;
    const std::size_t periods = std::min<std::size_t>(train.n_pulses, 3);
    req.t_start = 0.0;
    req.t_end = static_cast<double>(periods) * train.t_rep;
    req.tau_min = train.n_pulses > 1 ? -1.5 * train.t_rep : -0.5 * train.t_rep;
    req.tau_max = 0.0;
    ctx.log("computing the back-decay correlation grid");
    const CorrelationGrid grid = g2_back_decay(train, sc.scheme, sc.dephasing, req);
    grid.validate();

    CsvFile surface(ctx.out_path("g2_backdecay.csv"), {"t_s", "tau_s", "value"});
    for (std::size_t i = 0; i < grid.t_axis.size(); ++i)
        for (std::size_t j = 0; j < grid.tau_axis.size(); ++j)
            surface.row({grid.t_axis[i], grid.tau_axis[j],
                         grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});

    const std::vector<double> m = marginal_of(grid);
    CsvFile marg(ctx.out_path("g2_tau_marginal.csv"), {"tau_s", "integrated"});
    for (std::size_t j = 0; j < grid.tau_axis.size(); ++j) marg.row({grid.tau_axis[j], m[j]});

    const double n_mean = mean_back_decays(train, sc.scheme, sc.dephasing, {sc.dt, sc.rtol, false});
    ctx.manifest["backdecay"] = {
        {"n_mean", n_mean},
        {"p854_per_pulse", p854_of_train(train, sc.scheme, sc.dephasing, sc.rtol)}};
    std::cout << "<N> = " << n_mean << "\n";
    return 0;
}

int cmd_nmean_sweep(RunContext& ctx) {
    const Scenario& sc = ctx.scenario;
    if (sc.sweep.empty()) throw config_error("nmean-sweep needs [sweep] point entries");
    CsvFile csv(ctx.out_path("nmean_sweep.csv"), {"t_pulse_s", "beta", "t_rep_s", "target_p854",
                                                  "omega_peak_rad_s", "p854", "n_mean"});
    json rows = json::array();
    for (const SweepPoint& point : sc.sweep) {
        PulseTrain train = sc.make_train(point);
        ctx.log("calibrating " + std::to_string(point.t_pulse * 1e9) + " ns row");
        train.shape.peak_rabi = calibrate_for(ctx, train, point.target_p854);
        const double p854 = p854_of_train(train, sc.scheme, sc.dephasing, sc.rtol);
        const double n_mean = mean_back_decays(train, sc.scheme, sc.dephasing, {sc.dt, sc.rtol, false});
        csv.row({point.t_pulse, point.beta, point.t_rep, point.target_p854, train.shape.peak_rabi,
                 p854, n_mean});
        rows.push_back({{"t_pulse_s", point.t_pulse},
                        {"omega_peak_rad_s", train.shape.peak_rabi},
                        {"p854", p854},
                        {"n_mean", n_mean}});
        std::cout << point.t_pulse * 1e9 << " ns: p854 = " << p854 << ", <N> = " << n_mean << "\n";
    }
    ctx.manifest["sweep"] = rows;
    return 0;
}

int cmd_trajectories(RunContext& ctx) {
    const Scenario& sc = ctx.scenario;
    PulseTrain train = sc.make_train();
    train.shape.peak_rabi = resolve_peak_rabi(ctx, train);

    TrajectoryOptions opt;
    opt.keep_events = true;
    opt.rtol = sc.rtol;
    opt.threads = ctx.threads;
    ctx.log("running " + std::to_string(sc.trajectories) + " trajectories");
    const TrajectoryResult res =
        run_trajectories(train, sc.scheme, sc.dephasing, sc.trajectories, sc.seed, opt);

    {
        std::ofstream os(fs::path(ctx.out_path("events.csv")));
        write_events_csv(os, res.events);
    }
    CsvFile hist(ctx.out_path("n_histogram.csv"), {"n_backdecays", "count"});
    for (std::size_t n = 0; n < res.stats.n_histogram.size(); ++n)
        hist.row({static_cast<double>(n), static_cast<double>(res.stats.n_histogram[n])});

    const MeanEstimate n_mean =
        res.stats.histogram_total() > 0 ? empirical_mean_N(res.stats) : MeanEstimate{0.0, 0.0};
    const MeanEstimate p854 = empirical_p854(res.stats);
    ctx.manifest["trajectories"] = {{"n", sc.trajectories},
                                    {"count_back393", res.stats.count_back393},
                                    {"count_raman854", res.stats.count_raman854},
                                    {"count_raman850", res.stats.count_raman850},
                                    {"n_mean", n_mean.value},
                                    {"n_mean_stderr", n_mean.stderr_},
                                    {"p854", p854.value},
                                    {"p854_stderr", p854.stderr_}};
    std::cout << "empirical <N> = " << n_mean.value << " +- " << n_mean.stderr_
              << ", p854 = " << p854.value << " +- " << p854.stderr_ << "\n";
    return 0;
}

int cmd_hom(RunContext& ctx) {
    const Scenario& sc = ctx.scenario;
    CsvFile summary(ctx.out_path("hom_summary.csv"),
                    {"t_pulse_s", "beta", "t_rep_s", "p854", "n_mean", "v_trep", "v_trep_ideal"});
    json rows = json::array();

    auto emit = [&](const PulseTrain& train, double t_pulse, double beta, const std::string& tag) {
        const HomPointResult r = run_hom_point(ctx, train);
        write_hom_point(ctx, r, tag);
        summary.row({t_pulse, beta, train.t_rep, r.p854, r.n_mean, r.v_trep, r.v_trep_ideal});
        rows.push_back({{"t_pulse_s", t_pulse},
                        {"p854", r.p854},
                        {"n_mean", r.n_mean},
                        {"v_trep", r.v_trep},
                        {"v_trep_ideal", r.v_trep_ideal}});
        std::cout << t_pulse * 1e9 << " ns: V(T_rep) = " << r.v_trep << " (ideal "
                  << r.v_trep_ideal << "), <N> = " << r.n_mean << "\n";
    };

    if (sc.sweep.empty()) {
        PulseTrain train = sc.make_train();
        train.shape.peak_rabi = resolve_peak_rabi(ctx, train);
        emit(train, sc.t_pulse, sc.beta, "");
    } else {
        int idx = 0;
        for (const SweepPoint& point : sc.sweep) {
            PulseTrain train = sc.make_train(point);
            ctx.log("calibrating " + std::to_string(point.t_pulse * 1e9) + " ns row");
            train.shape.peak_rabi = calibrate_for(ctx, train, point.target_p854);
            emit(train, point.t_pulse, point.beta, "_" + std::to_string(idx));
            ++idx;
        }
    }
    ctx.manifest["hom"] = rows;
    return 0;
}

int cmd_residual(RunContext& ctx) {
    Scenario& sc = ctx.scenario;
    if (sc.hom_windows < 4) sc.hom_windows = 4;
    if (sc.n_pulses < sc.hom_windows) sc.n_pulses = sc.hom_windows;
    PulseTrain train = sc.make_train();
    train.shape.peak_rabi = resolve_peak_rabi(ctx, train);

    const double span_t = static_cast<double>(sc.hom_windows) * train.t_rep;
    SimGrid grid{0.0, span_t, sc.dt, sc.rtol, 1e-12};
    ctx.log("computing multi-pulse g1 grid");
    const CoherenceGrid coherent = g1(train, sc.scheme, sc.dephasing, Channel::raman854, grid);
    const CoherenceGrid restricted = restrict_to_same_pulse(coherent, train);

    const double tau_span = 1.6 * train.t_rep;
    auto curve_for = [&](const CoherenceGrid& gg) {
        const HomArms arms =
            hom_arms(gg, gg, sc.beam_splitter, sc.make_detection_model(0.0), tau_span);
        std::vector<double> windows;
        const double t_max = 2.0 * (tau_span - 0.5 * train.t_rep) * 0.98;
        for (double t = 0.05 * train.t_rep; t <= t_max; t += 0.05 * train.t_rep)
            windows.push_back(t);
        return residual_visibility(arms.parallel, arms.orthogonal, train.t_rep, windows);
    };
    const VisibilityCurve v_restricted = curve_for(restricted);
    const VisibilityCurve v_coherent = curve_for(coherent);

    CsvFile csv(ctx.out_path("residual_visibility.csv"),
                {"window_s", "v_res_restricted", "v_res_coherent"});
    for (std::size_t i = 0; i < v_restricted.windows.size(); ++i)
        csv.row({v_restricted.windows[i], v_restricted.values[i], v_coherent.values[i]});
    ctx.manifest["residual"] = {{"v_res_large_t_restricted", v_restricted.values.back()},
                                {"v_res_large_t_coherent", v_coherent.values.back()}};
    std::cout << "V_res(large T): restricted = " << v_restricted.values.back()
              << ", coherent = " << v_coherent.values.back() << "\n";
    return 0;
}

int cmd_analyze(RunContext& ctx, const std::string& events_path) {
    const Scenario& sc = ctx.scenario;
    if (events_path.empty()) throw config_error("analyze needs --events <events.csv>");
    std::ifstream is(events_path);
    if (!is) throw config_error("cannot open " + events_path);
    const std::vector<EmissionEvent> events = read_events_csv(is);

    std::uint64_t n_cycles = sc.trajectories;
    for (const auto& ev : events) n_cycles = std::max(n_cycles, ev.trajectory_id + 1);
    const PulseTrain train = sc.make_train();
    const double window = static_cast<double>(train.n_pulses) * train.t_rep + 0.3e-6;

    ctx.log("synthesizing detections for " + std::to_string(n_cycles) + " cycles");
    const auto records = synthesize_detections(events, sc.efficiencies, window, n_cycles, sc.seed);
    {
        std::ofstream os(fs::path(ctx.out_path("detections.csv")));
        write_records_csv(os, records);
    }

    std::uint64_t n854 = 0;
    for (const auto& rec : records)
        if (rec.detector == det_854) ++n854;

    const CorrelationHistogram hist =
        cross_correlate(records, kTimetagResolution, -0.55 * train.t_rep, 0.55 * train.t_rep);
    {
        std::ofstream os(fs::path(ctx.out_path("cross_correlation.csv")));
        write_histogram_csv(os, hist);
    }

    const MeanEstimate est = estimate_mean_N(hist, sc.efficiencies, n854, train.t_rep);
    ctx.manifest["analyze"] = {{"n_cycles", n_cycles},
                               {"n854_detected", n854},
                               {"n_mean_estimate", est.value},
                               {"n_mean_stderr", est.stderr_}};
    std::cout << "estimated <N> = " << est.value << " +- " << est.stderr_ << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulsed Raman photon source simulator: back-decay statistics and HOM visibility"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    std::string input_path;
    std::string events_path;
    std::uint64_t seed_override = 0;
    unsigned threads = 1;
    bool verbose = false;

    app.add_option("--scenario", scenario_path, "scenario file")->required();
    app.add_option("--out", out_dir, "output directory");
    CLI::Option* seed_opt = app.add_option("--seed", seed_override, "override the scenario seed");
    app.add_option("--threads", threads, "worker threads");
    app.add_flag("--verbose", verbose, "progress messages on stderr");

    CLI::App* fit = app.add_subcommand("fit-pulse", "fit a measured pulse histogram");
    fit->add_option("--input", input_path, "two-column CSV (bin center s, counts)");
    app.add_subcommand("calibrate", "find the peak Rabi frequency for the target p854");
    app.add_subcommand("train", "propagate the pulse train and extract survival statistics");
    app.add_subcommand("backdecay", "back-decay correlation surface and <N>");
    app.add_subcommand("nmean-sweep", "calibrated <N> and p854 over the sweep points");
    app.add_subcommand("trajectories", "quantum-jump oracle event streams");
    app.add_subcommand("hom", "two-emitter HOM correlations and V(T)");
    app.add_subcommand("residual", "residual visibility outside the central window");
    CLI::App* analyze = app.add_subcommand("analyze", "timestamp estimators on an event stream");
    analyze->add_option("--events", events_path, "oracle events CSV");

    // Global options may follow the subcommand name.
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunContext ctx;
        ctx.scenario = load_scenario(scenario_path);
        if (seed_opt->count() > 0) ctx.scenario.seed = seed_override;
        ctx.threads = std::max(1u, threads);
        ctx.verbose = verbose;
        ctx.out_dir = out_dir;
        fs::create_directories(ctx.out_dir);

        int rc = 1;
        std::string name;
        for (const auto* sub : app.get_subcommands()) {
            name = sub->get_name();
            if (name == "fit-pulse") rc = cmd_fit_pulse(ctx, input_path);
            else if (name == "calibrate") rc = cmd_calibrate(ctx);
            else if (name == "train") rc = cmd_train(ctx);
            else if (name == "backdecay") rc = cmd_backdecay(ctx);
            else if (name == "nmean-sweep") rc = cmd_nmean_sweep(ctx);
            else if (name == "trajectories") rc = cmd_trajectories(ctx);
            else if (name == "hom") rc = cmd_hom(ctx);
            else if (name == "residual") rc = cmd_residual(ctx);
            else if (name == "analyze") rc = cmd_analyze(ctx, events_path);
        }
        if (rc == 0) ctx.finish(name);
        return rc;
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const sim_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
