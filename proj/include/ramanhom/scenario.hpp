#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ramanhom/atomic_model.hpp"
#include "ramanhom/hom.hpp"
#include "ramanhom/pulse.hpp"
#include "ramanhom/timetags.hpp"
#include "ramanhom/units.hpp"

namespace ramanhom {

struct SweepPoint {
    double t_pulse = 0.0;
    double beta = 2.0;
    double t_rep = 0.0;
    double target_p854 = 0.0;
};

// One reproducible run: emitter, drive, grids, optics, seeds. Parsed from the
// sectioned key-value scenario format (see the shipped scenarios/ files);
// every dimensioned value carries an explicit unit suffix.
struct Scenario {
    LevelScheme scheme{1.350e8, 8.48e6, 9.55e5, 0.0};
    double dephasing = kTwoPi * 50e3;

    double t_pulse = 15.08e-9;
    double beta = 2.28;
    double pulse_center = 60e-9;
    double peak_rabi = 0.0;  // 0 means "calibrate first"
    double truncation = 1e-6;
    std::size_t n_pulses = 80;
    double t_rep = 104.25e-9;

    double dt = 0.25e-9;
    double rtol = 1e-10;
    std::size_t hom_windows = 1;  // pulse periods in HOM grids

    double target_p854 = 0.0;
    double calibrate_tolerance = 1e-4;
    double omega_max = kTwoPi * 3.0e9;

    BeamSplitter beam_splitter;
    double eta_c = 1.0;
    double eta_d = 1.0;
    double sbr = 0.0;  // 0 = no background
    double delta_phi = 0.0;

    EfficiencySet efficiencies{3.37e-3, 5.18e-3, 0.0, 0.0};

    std::uint64_t seed = 1;
    std::uint64_t trajectories = 100000;

    std::vector<SweepPoint> sweep;
    std::string pulse_histogram;  // input CSV for fit-pulse

    std::string source_path;

    PulseTrain make_train() const;
    PulseTrain make_train(const SweepPoint& point) const;
    DetectionModel make_detection_model(double b0) const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(std::istream& is, const std::string& path);

}  // namespace ramanhom
