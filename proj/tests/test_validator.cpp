#include <gtest/gtest.h>

#include <cmath>

#include "htrain/validator.hpp"
#include "support.hpp"

using namespace htrain;

namespace {

struct Coasting {
    ComponentSet parts = test::placeholder_components();
    ProblemInstance inst;
    SolutionTrajectory sol;

    explicit Coasting(double v0) {
        TrackProfile track = test::station_route(1000.0, 25.0, 30.0);
        track.stations.clear();
        inst.grid = build_grid(track, 100.0, test::journey(100.0));
        inst.spec = test::journey(100.0);
        inst.resistance = {track.davis_a, track.davis_b, track.davis_c};
        inst.vehicle = parts.vehicle;
        inst.battery = parts.battery;
        sol.resize(inst.intervals());
        sol.z(0) = v0 * v0;
        sol.zeta(0) = inst.spec.zeta0;
        sol.temperature(0) = inst.spec.temperature0;
        for (int i = 0; i < inst.intervals(); ++i) sol.width(i) = inst.grid[i].width;
    }
};

// Independent oracle: RK4 on dv/ds = -R(v) / (m_eq v).
double coast_speed(const Resistance& r, double mass, double v0, double distance) {
    const int steps = 20000;
    const double h = distance / steps;
    auto slope = [&](double v) { return -r(v) / (mass * v); };
    double v = v0;
    for (int k = 0; k < steps; ++k) {
        const double k1 = slope(v), k2 = slope(v + 0.5 * h * k1), k3 = slope(v + 0.5 * h * k2), k4 = slope(v + h * k3);
        v += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
    }
    return v;
}

const ProblemInstance& flat_instance() {
    static const htrain::Setup setup = prepare(load_run_config(test::config_dir() / "flat.json"));
    return setup.instance;
}

const OptimizeResult& flat_result() {
    static const OptimizeResult result = [] {
        const auto config = load_run_config(test::config_dir() / "flat.json");
        return optimize(flat_instance(), config.optimize);
    }();
    return result;
}

}  // namespace

TEST(ForwardSimulate, CoastingDecaysMonotonically) {
    Coasting c(20.0);
    SimulationOptions options;
    options.substeps = 200;
    const auto rep = forward_simulate(c.sol, c.inst, c.parts.fuelcell_map, options);
    for (int k = 1; k <= c.inst.intervals(); ++k) EXPECT_LT(rep.speed(k), rep.speed(k - 1));
    const double oracle = coast_speed(c.inst.resistance, c.inst.vehicle.equivalent_mass, 20.0, 1000.0);
    EXPECT_NEAR(rep.speed(c.inst.intervals()), oracle, 1e-3 * oracle);
    EXPECT_EQ(rep.fuel, 0.0);
}

TEST(ForwardSimulate, IdleBatteryKeepsSoc) {
    Coasting c(20.0);
    for (int i = 0; i < c.inst.intervals(); ++i) {
        c.sol.fuelcell_force(i) = 5000.0;
        c.sol.motor_force(i) = c.inst.resistance(20.0);
    }
    const auto rep = forward_simulate(c.sol, c.inst, c.parts.fuelcell_map);
    for (int k = 0; k <= c.inst.intervals(); ++k) EXPECT_EQ(rep.zeta(k), c.inst.spec.zeta0);
    EXPECT_NEAR(rep.speed(c.inst.intervals()), 20.0, 1e-9);
    EXPECT_NEAR(rep.journey_time, 50.0, 1e-9);
    // Fuel-cell map is indexed by power: 5 kN at 20 m/s is 100 kW.
    const double eta = c.parts.fuelcell_map.at(5000.0 * 20.0, 20.0);
    EXPECT_NEAR(rep.fuel, 5000.0 * 1000.0 / eta, 1e-9 * rep.fuel);
}

TEST(ForwardSimulate, BatteryDrainMatchesExactModel) {
    Coasting c(20.0);
    const double force = 2000.0;
    for (int i = 0; i < c.inst.intervals(); ++i) {
        c.sol.battery_force(i) = force;
        c.sol.motor_force(i) = c.inst.resistance(20.0);
    }
    const auto rep = forward_simulate(c.sol, c.inst, c.parts.fuelcell_map);
    const double dt = 50.0;
    const double expected = c.inst.spec.zeta0 - exact_delta_zeta(c.inst.battery, force * 20.0, dt);
    EXPECT_NEAR(rep.zeta(c.inst.intervals()), expected, 1e-12);
}

TEST(ForwardSimulate, SpeedCollapseThrows) {
    Coasting c(2.0);
    for (int i = 0; i < c.inst.intervals(); ++i) c.sol.brake_force(i) = -1e5;
    EXPECT_THROW(forward_simulate(c.sol, c.inst, c.parts.fuelcell_map), DomainError);
}

TEST(Audit, FlatSolutionIsTight) {
    const auto& result = flat_result();
    ASSERT_EQ(result.report.status, SolveStatus::optimal);
    const auto audit = audit_tightness(result.trajectory, flat_instance());
    EXPECT_TRUE(audit.unconditional_pass);
    for (int f = 0; f < 4; ++f) {
        EXPECT_TRUE(audit.passed[static_cast<std::size_t>(f)]) << to_string(static_cast<Relaxation>(f));
    }
    EXPECT_GT(audit.applicable_count[0], 0);
    EXPECT_GT(audit.applicable_count[1], 0);
}

TEST(Audit, PerturbationsAreClassified) {
    auto sol = flat_result().trajectory;
    int running = 0;
    while (sol.is_stop[static_cast<std::size_t>(running)]) ++running;
    sol.lambda_v(running) *= 1.01;
    auto audit = audit_tightness(sol, flat_instance());
    EXPECT_FALSE(audit.passed[0]);
    EXPECT_NEAR(audit.max_slack[0], 0.01 / 1.01, 2e-3);
    EXPECT_FALSE(audit.unconditional_pass);
    EXPECT_FALSE(audit.intervals[static_cast<std::size_t>(running)][0].active);

    sol = flat_result().trajectory;
    sol.z(running) *= 1.02;
    audit = audit_tightness(sol, flat_instance());
    EXPECT_FALSE(audit.passed[1]);
    EXPECT_TRUE(audit.passed[0]);
}

TEST(Audit, MismatchedGridRejected) {
    SolutionTrajectory sol;
    sol.resize(3);
    EXPECT_THROW(audit_tightness(sol, flat_instance()), InputError);
}

TEST(Validate, FlatFixturePassesThresholds) {
    const auto& result = flat_result();
    const auto config = load_run_config(test::config_dir() / "flat.json");
    const htrain::Setup setup = prepare(config);
    const auto rep = forward_simulate(result.trajectory, flat_instance(), setup.components.fuelcell_map, config.simulation);
    const auto verdict = judge(rep, flat_instance(), config.thresholds);
    EXPECT_TRUE(verdict.speed_ok) << rep.max_speed_divergence;
    EXPECT_TRUE(verdict.soc_ok) << rep.soc_drift;
    EXPECT_TRUE(verdict.temperature_ok) << rep.max_temperature_divergence;
    EXPECT_TRUE(verdict.bound_ok) << rep.max_temperature_excess;
    EXPECT_NEAR(rep.journey_time, 720.0, 0.01 * 720.0);
}

TEST(Validate, JudgeThresholdEdges) {
    SimulationReport rep;
    rep.max_speed_divergence = 0.2;
    rep.soc_drift = 0.004;
    rep.max_temperature_divergence = 1.5;
    rep.max_temperature_excess = -3.0;
    const auto verdict = judge(rep, flat_instance(), ValidationThresholds{});
    EXPECT_TRUE(verdict.speed_ok);  // 1% of the 25 m/s limit is 0.25
    EXPECT_TRUE(verdict.soc_ok);
    EXPECT_FALSE(verdict.temperature_ok);
    EXPECT_TRUE(verdict.bound_ok);
    EXPECT_FALSE(verdict.passed());
}
