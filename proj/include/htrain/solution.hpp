#pragma once

#include <Eigen/Dense>

#include <istream>
#include <ostream>
#include <utility>
#include <vector>

#include "htrain/cone_builder.hpp"
#include "htrain/cone_program.hpp"
#include "htrain/socp.hpp"

namespace htrain {

struct SolveReport {
    SolveStatus status = SolveStatus::numerical_failure;
    double objective = 0.0;  // program objective; optimize() replaces it with the fuel objective J
    double duality_gap = 0.0;  // relative
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
    double wall_time = 0.0;  // s
};

std::pair<SolveReport, Eigen::VectorXd> solve(const ConeProgram& program, double tol);
std::pair<SolveReport, Eigen::VectorXd> solve(const ConeProgram& program, const SolverSettings& settings);

// Node quantities have N+1 entries, interval quantities N.
struct SolutionTrajectory {
    std::vector<char> is_stop;  // per interval
    Eigen::VectorXd position;   // node positions along the emulated grid, m
    Eigen::VectorXd width;      // interval widths, m
    Eigen::VectorXd z, zeta, temperature, time;  // nodes
    Eigen::VectorXd speed;  // solved interval speed v_i
    Eigen::VectorXd motor_force, brake_force, fuelcell_force, battery_force, cooling_force;
    Eigen::VectorXd discharge_force, charge_force;
    Eigen::VectorXd lambda_v, lambda_zeta, lambda_t;
    Eigen::VectorXd motor_power, fuelcell_power, battery_power, cooling_power;

    int intervals() const { return static_cast<int>(width.size()); }
    void resize(int intervals);
};

SolutionTrajectory extract(const ConeProgram& program, const Eigen::VectorXd& raw);

void write_solution_csv(const SolutionTrajectory& trajectory, double target_time, std::ostream& out);
SolutionTrajectory read_solution_csv(std::istream& in);

struct OptimizeOptions {
    SolverSettings solver;
    int mccormick_refinements = 0;
    double refinement_width = 0.1;  // relative half-width of the refined lambda_v box
};

struct OptimizeResult {
    SolveReport report;
    ConeProgram program;
    Eigen::VectorXd raw;
    SolutionTrajectory trajectory;
};

// Build, solve and extract, with optional sequential McCormick refinement.
// Throws InfeasibleError on screened or certified infeasibility.
OptimizeResult optimize(const ProblemInstance& instance, const OptimizeOptions& options = {});

}  // namespace htrain
