#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "htrain/cone_builder.hpp"
#include "htrain/socp.hpp"
#include "support.hpp"

using namespace htrain;

namespace {

// Layout with no intervals: three node variables, all free.
ProgramAssembler empty_assembler() { return ProgramAssembler(VariableLayout{0}); }

}  // namespace

TEST(Socp, LinearProgramWithBounds) {
    auto a = empty_assembler();
    a.add_objective(var(0) + var(1));
    a.add_inequality(1.0 - var(0), Family::state_bounds);
    a.add_inequality(2.0 - var(1), Family::state_bounds);
    a.add_equality(var(2) - 3.0, Family::initial_state);
    const auto result = solve_cone_program(a.finish());
    ASSERT_EQ(result.status, SolveStatus::optimal);
    EXPECT_NEAR(result.primal_objective, 3.0, 1e-7);
    EXPECT_NEAR(result.x(0), 1.0, 1e-6);
    EXPECT_NEAR(result.x(1), 2.0, 1e-6);
    EXPECT_NEAR(result.x(2), 3.0, 1e-8);
}

TEST(Socp, VacuousBoxProgramHasZeroObjective) {
    auto a = empty_assembler();
    for (int k = 0; k < 3; ++k) {
        a.add_inequality(var(k) - 1.0, Family::state_bounds);
        a.add_inequality(-1.0 - var(k), Family::state_bounds);
    }
    const auto result = solve_cone_program(a.finish());
    ASSERT_EQ(result.status, SolveStatus::optimal);
    EXPECT_NEAR(result.primal_objective, 0.0, 1e-8);
}

TEST(Socp, UnitDiskMinimum) {
    auto a = empty_assembler();
    a.add_objective(var(0) + var(1));
    a.add_cone({AffineExpr(1.0), var(0), var(1)}, Family::speed_time);
    const auto result = solve_cone_program(a.finish());
    ASSERT_EQ(result.status, SolveStatus::optimal);
    EXPECT_NEAR(result.primal_objective, -std::sqrt(2.0), 1e-7);
    EXPECT_NEAR(result.x(0), -1.0 / std::sqrt(2.0), 1e-5);
}

TEST(Socp, RotatedConeHyperbola) {
    // min x + y with x y >= 1.
    auto a = empty_assembler();
    a.add_objective(var(0) + var(1));
    a.add_rotated_cone({AffineExpr(1.0)}, var(0), var(1), Family::speed_time);
    const auto result = solve_cone_program(a.finish());
    ASSERT_EQ(result.status, SolveStatus::optimal);
    EXPECT_NEAR(result.primal_objective, 2.0, 1e-7);
    EXPECT_NEAR(result.x(0), 1.0, 1e-4);
}

TEST(Socp, InfeasibleBoundsCertified) {
    auto a = empty_assembler();
    a.add_objective(var(0));
    a.add_inequality(1.0 - var(0), Family::state_bounds);
    a.add_inequality(var(0), Family::state_bounds);
    EXPECT_EQ(solve_cone_program(a.finish()).status, SolveStatus::infeasible);
}

TEST(Socp, UnboundedCertified) {
    auto a = empty_assembler();
    a.add_objective(var(0));
    a.add_inequality(var(0) - var(1), Family::state_bounds);
    EXPECT_EQ(solve_cone_program(a.finish()).status, SolveStatus::unbounded);
}

TEST(Socp, RandomBallWithAffineSliceMatchesClosedForm) {
    // min c'x  s.t. ||x - centre|| <= r, A x = A centre.
    // Optimum: c'centre - r ||P c|| with P the projector onto null(A).
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int dim = 6, rows = 2;
        VariableLayout layout{0};
        ProgramAssembler a(layout);
        std::vector<int> vars;
        for (int k = 0; k < 3; ++k) vars.push_back(k);
        for (int k = 3; k < dim; ++k) vars.push_back(a.add_variable("x" + std::to_string(k)));
        Eigen::VectorXd c(dim), centre(dim);
        Eigen::MatrixXd A(rows, dim);
        for (int k = 0; k < dim; ++k) {
            c(k) = normal(rng);
            centre(k) = normal(rng);
        }
        for (int r = 0; r < rows; ++r) {
            for (int k = 0; k < dim; ++k) A(r, k) = normal(rng);
        }
        const double radius = 0.5 + std::abs(normal(rng));
        AffineExpr objective;
        for (int k = 0; k < dim; ++k) objective.add(vars[k], c(k));
        a.add_objective(objective);
        std::vector<AffineExpr> cone{AffineExpr(radius)};
        for (int k = 0; k < dim; ++k) cone.push_back(var(vars[k]) - AffineExpr(centre(k)));
        a.add_cone(cone, Family::objective_epigraph);
        const Eigen::VectorXd b = A * centre;
        for (int r = 0; r < rows; ++r) {
            AffineExpr row(-b(r));
            for (int k = 0; k < dim; ++k) row.add(vars[k], A(r, k));
            a.add_equality(row, Family::initial_state);
        }
        const Eigen::MatrixXd projector =
            Eigen::MatrixXd::Identity(dim, dim) - A.transpose() * (A * A.transpose()).ldlt().solve(A);
        const double expected = c.dot(centre) - radius * (projector * c).norm();
        const auto result = solve_cone_program(a.finish());
        ASSERT_EQ(result.status, SolveStatus::optimal) << "trial " << trial;
        EXPECT_NEAR(result.primal_objective, expected, 1e-6 * std::max(1.0, std::abs(expected))) << "trial " << trial;
    }
}

TEST(Socp, TargetBelowMinimumTimeIsCertifiedInfeasible) {
    const auto parts = test::placeholder_components();
    const auto inst = test::make_instance(test::station_route(1000.0, 25.0, 30.0), 100.0, test::journey(30.0), parts);
    EXPECT_THROW(build(inst), InfeasibleError);
    BuildOptions options;
    options.screen_infeasible = false;
    const auto result = solve_cone_program(build(inst, options));
    EXPECT_EQ(result.status, SolveStatus::infeasible);
}
