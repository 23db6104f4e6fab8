#pragma once

#include <Eigen/Dense>

#include "htrain/cone_program.hpp"

namespace htrain {

struct SolverSettings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    int max_iterations = 100;
    double step_fraction = 0.99;
    double static_regularization = 1e-8;
    int refinement_steps = 10;
    int equilibration_passes = 15;
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(SolveStatus status);

struct SolverResult {
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd x, y, z, s;
    double primal_objective = 0.0;  // c'x + c0
    double dual_objective = 0.0;    // -b'y - h'z + c0
    double gap = 0.0;               // s'z
    double relative_gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
};

// Primal-dual interior-point method on the homogeneous self-dual embedding with
// Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
SolverResult solve_cone_program(const ConeProgram& program, const SolverSettings& settings = {});

}  // namespace htrain
