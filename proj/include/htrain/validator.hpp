#pragma once

#include <array>
#include <vector>

#include "htrain/cone_builder.hpp"
#include "htrain/solution.hpp"

namespace htrain {

// The seven relaxed constraint families, in the order of the formulation.
enum class Relaxation { speed_time, kinetic_energy, motor_balance, battery_loss, cooling, charge_split, discharge_split };
inline constexpr int kRelaxationCount = 7;
const char* to_string(Relaxation relaxation);

struct RelaxationResidual {
    double residual = 0.0;        // RHS - LHS, physical units
    double relative_slack = 0.0;  // residual normalised by the constraint magnitude
    bool applicable = false;
    bool active = false;          // abs relative slack within tolerance
};

struct TightnessOptions {
    double tol = 1e-5;
    double battery_tol = 1e-3;
    double interior_margin = 1e-6;       // relative distance from the F_batt bounds
    double battery_active_fraction = 0.01;
    double temperature_active_tol = 1e-3;  // K below T_max counts as active
};

struct TightnessReport {
    std::vector<std::array<RelaxationResidual, kRelaxationCount>> intervals;
    std::array<double, kRelaxationCount> max_slack{};
    std::array<int, kRelaxationCount> applicable_count{};
    std::array<bool, kRelaxationCount> passed{};
    bool unconditional_pass = false;  // families 1-4
};

TightnessReport audit_tightness(const SolutionTrajectory& solution, const ProblemInstance& instance,
                                const TightnessOptions& options = {});

struct SimulationOptions {
    int substeps = 10;
    bool zero_stop_speed = false;  // dwell at v = 0 instead of sqrt(z_stop)
};

struct SimulationReport {
    Eigen::VectorXd speed, zeta, temperature, time;  // nodes, exact models
    double fuel = 0.0;        // exact hydrogen energy plus weighted cooling, J
    double max_speed_divergence = 0.0;
    double max_zeta_divergence = 0.0;
    double soc_drift = 0.0;   // |zeta_sim,N - zeta_0|
    double max_temperature_divergence = 0.0;
    // Speed mismatch on arrival at a stop, before the dwell pins v to sqrt(z_stop).
    double max_arrival_residual = 0.0;
    double max_temperature_excess = 0.0;  // max(T_sim - T_max), may be negative
    double journey_time = 0.0;
};

// Integrates the exact models under the solution's forces only.
SimulationReport forward_simulate(const SolutionTrajectory& solution, const ProblemInstance& instance,
                                  const EfficiencyMap& fuelcell_map, const SimulationOptions& options = {});

struct ValidationThresholds {
    double speed_fraction = 0.01;  // of the route's maximum speed limit
    double soc_drift = 0.005;
    double temperature_divergence = 1.0;  // K
    double temperature_excess = 1.0;      // K
};

struct ValidationVerdict {
    bool speed_ok, soc_ok, temperature_ok, bound_ok;
    bool passed() const { return speed_ok && soc_ok && temperature_ok && bound_ok; }
};

ValidationVerdict judge(const SimulationReport& report, const ProblemInstance& instance,
                        const ValidationThresholds& thresholds);

}  // namespace htrain
