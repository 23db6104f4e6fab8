#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>

#include "htrain/components.hpp"
#include "htrain/cone_builder.hpp"
#include "htrain/dp_oracle.hpp"
#include "htrain/solution.hpp"
#include "htrain/surrogate.hpp"
#include "htrain/validator.hpp"

namespace htrain {

inline constexpr int kSchemaVersion = 1;

struct ComponentSet {
    BatteryParams battery;
    VehicleParams vehicle;
    EfficiencyMap motor_map;
    EfficiencyMap fuelcell_map;
};

// Strict JSON parsing: unknown keys are errors, keys starting with '_' are ignored.
// Battery eta_dis/eta_chr default to the exact-model energy-weighted averages.
ComponentSet parse_components(std::istream& in, std::uint64_t seed);
ComponentSet load_components(const std::filesystem::path& path, std::uint64_t seed);

struct RunConfig {
    std::filesystem::path track;
    std::filesystem::path components;
    std::filesystem::path output = "out";
    JourneySpec journey;
    double base_step = 50.0;  // m
    FitOptions fit;
    bool fit_speed_max_from_track = true;
    ModelWeights weights;
    OptimizeOptions optimize;
    TightnessOptions tightness;
    SimulationOptions simulation;
    ValidationThresholds thresholds;
    std::optional<DpConfig> dp;
    bool export_program = false;  // optimize also writes program.txt
    std::uint64_t seed = 0;

    void set_tolerance(double tol);
};

// Relative paths resolve against the directory holding the config file.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

struct Setup {
    TrackProfile track;
    ComponentSet components;
    ProblemInstance instance;
};

// Loads the route and components, fits the surrogates and assembles the instance.
Setup prepare(const RunConfig& config);

}  // namespace htrain
