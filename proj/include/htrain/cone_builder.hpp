#pragma once

#include <optional>
#include <vector>

#include "htrain/components.hpp"
#include "htrain/cone_program.hpp"
#include "htrain/journey.hpp"
#include "htrain/surrogate.hpp"

namespace htrain {

struct Resistance {
    double a = 0.0;  // N
    double b = 0.0;  // N s/m
    double c = 0.0;  // N s^2/m^2

    double operator()(double speed) const { return a + b * speed + c * speed * speed; }
};

struct Surrogates {
    QuadraticSurrogate motor;
    QuadraticSurrogate fuelcell;
    BatterySurrogate battery;
};

struct ModelWeights {
    double cooling_weight = 1.0;
    // Small penalty on battery throughput and reward on modelled cooling that
    // breaks ties among equally cheap F_dis/F_chr/lambda_T values. Excluded
    // from the reported objective.
    double thermal_tiebreak = 1e-4;
};

struct Box {
    double lo, hi;
};

struct ProblemInstance {
    SpatialGrid grid;
    JourneySpec spec;
    Resistance resistance;
    VehicleParams vehicle;
    BatteryParams battery;
    Surrogates surrogates;
    ModelWeights weights;
    // Optional per-interval lambda_v boxes used by sequential McCormick refinement.
    std::optional<std::vector<Box>> lambda_boxes;

    int intervals() const { return grid.size(); }
    void validate() const;
    // External force on interval i at squared speed z (zero on stop intervals).
    double external_force(int i, double speed) const;
    Box lambda_box(int i) const;
    // State box for T, also the McCormick box.
    Box temperature_box() const;
};

struct BuildOptions {
    bool screen_infeasible = true;
};

// lambda_T <= lambda_coef * lambda_v + temperature_coef * T + constant
struct McCormickRow {
    double lambda_coef, temperature_coef, constant;
};

std::vector<McCormickRow> mccormick_cooling_rows(Box temperature, Box lambda, double heat_transfer);

double min_time_estimate(const ProblemInstance& instance);

ConeProgram build(const ProblemInstance& instance, const BuildOptions& options = {});

// Fuel plus weighted cooling objective of a layout-indexed assignment.
double fuel_objective(const ProblemInstance& instance, const Eigen::VectorXd& x);

}  // namespace htrain
