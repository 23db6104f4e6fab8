#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "htrain/config.hpp"

namespace htrain::test {

inline std::filesystem::path config_dir() { return HTRAIN_CONFIG_DIR; }

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::path(HTRAIN_SCRATCH_DIR) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Straight route with stations at both ends.
inline TrackProfile station_route(double length, double limit, double dwell, double gradient = 0.0) {
    TrackProfile track;
    track.length = length;
    track.gradients = {{0.0, gradient}};
    track.speed_limits = {{0.0, limit}};
    track.davis_a = 2000.0;
    track.davis_b = 30.0;
    track.davis_c = 8.0;
    track.stations = {{0.0, dwell}, {length, dwell}};
    return track;
}

inline ComponentSet placeholder_components() { return load_components(config_dir() / "components.json", 0); }

inline ProblemInstance make_instance(const TrackProfile& track, double base_step, const JourneySpec& spec,
                                     const ComponentSet& parts) {
    ProblemInstance inst;
    inst.grid = build_grid(track, base_step, spec);
    inst.spec = spec;
    inst.resistance = {track.davis_a, track.davis_b, track.davis_c};
    inst.vehicle = parts.vehicle;
    inst.battery = parts.battery;
    FitOptions fit;
    fit.speed_max = track.speed_limits.front().value;
    inst.surrogates.motor = fit_motor(parts.motor_map, inst.vehicle, fit);
    inst.surrogates.fuelcell = fit_fuelcell(parts.fuelcell_map, inst.vehicle, fit);
    inst.surrogates.battery = fit_battery(inst.battery);
    return inst;
}

inline JourneySpec journey(double target_time) {
    JourneySpec spec;
    spec.target_time = target_time;
    return spec;
}

inline double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace htrain::test
