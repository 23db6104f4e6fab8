#pragma once

#include <optional>
#include <vector>

#include "htrain/cone_builder.hpp"
#include "htrain/solution.hpp"

namespace htrain {

struct DpConfig {
    int speed_points = 41;
    int zeta_points = 41;
    int temperature_points = 21;
    int time_points = 201;
    int cooling_levels = 3;    // F_act levels over [0, F_act_max]
    int regen_levels = 3;      // share of braking carried by the motor
    int interval_cap = 20;
    bool battery_enabled = true;
    std::optional<std::vector<double>> speed_grid;  // overrides the uniform speed grid
    std::optional<Box> zeta_range;                  // defaults to [zeta_min, zeta_max]
    std::optional<Box> temperature_range;           // defaults to [min(T0, T_amb) - 1, T_max]

    void validate() const;
};

struct DpResult {
    bool feasible = false;
    double cost = 0.0;  // exact fuel plus weighted cooling along the recovered path, J
    SolutionTrajectory trajectory;
    double speed_step = 0.0, zeta_step = 0.0, temperature_step = 0.0, time_step = 0.0;
    std::vector<double> speed_grid;
    long long evaluated_states = 0;
};

DpResult dp_solve(const ProblemInstance& instance, const EfficiencyMap& motor_map, const EfficiencyMap& fuelcell_map,
                  const DpConfig& config);

// (J_convex - J_dp) / J_dp, sign preserved.
double gap_report(double convex_objective, const DpResult& dp);

}  // namespace htrain
