#include "htrain/validator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace htrain {

const char* to_string(Relaxation relaxation) {
    switch (relaxation) {
        case Relaxation::speed_time: return "speed_time";
        case Relaxation::kinetic_energy: return "kinetic_energy";
        case Relaxation::motor_balance: return "motor_balance";
        case Relaxation::battery_loss: return "battery_loss";
        case Relaxation::cooling: return "cooling";
        case Relaxation::charge_split: return "charge_split";
        case Relaxation::discharge_split: return "discharge_split";
    }
    return "unknown";
}

namespace {

RelaxationResidual residual(double slack, double magnitude, bool applicable, double tol) {
    RelaxationResidual r;
    r.residual = slack;
    r.relative_slack = slack / std::max(magnitude, 1e-300);
    r.applicable = applicable;
    r.active = std::abs(r.relative_slack) <= tol;
    return r;
}

double max_speed_limit(const SpatialGrid& grid) {
    double limit = 0.0;
    for (const auto& interval : grid.intervals) {
        if (!interval.is_stop) limit = std::max(limit, interval.speed_limit);
    }
    return limit;
}

}  // namespace

TightnessReport audit_tightness(const SolutionTrajectory& sol, const ProblemInstance& inst,
                                const TightnessOptions& options) {
    const int n = sol.intervals();
    if (n != inst.intervals()) throw InputError("audit: solution does not match the instance grid");
    const auto& bat = inst.battery;
    const auto& qm = inst.surrogates.motor;
    const double alpha = inst.surrogates.battery.alpha;
    TightnessReport report;
    report.intervals.resize(static_cast<std::size_t>(n));
    report.max_slack.fill(0.0);
    report.applicable_count.fill(0);
    for (int i = 0; i < n; ++i) {
        const double v = sol.speed(i), lam = sol.lambda_v(i), z = sol.z(i);
        const double ds = sol.width(i);
        const double fbat = sol.battery_force(i);
        auto& row = report.intervals[static_cast<std::size_t>(i)];
        const double tol = options.tol;

        row[0] = residual(v * lam - 1.0, v * lam, true, tol);
        row[1] = residual(z - v * v, z, true, tol);

        const double demand = qm(sol.motor_force(i), z) + inst.vehicle.aux_power * lam;
        const double supply = sol.fuelcell_force(i) + fbat;
        const double lower = bat.power_min * lam, upper = bat.power_max * lam;
        const double margin = options.interior_margin * (upper - lower);
        const bool interior = fbat > lower + margin && fbat < upper - margin;
        row[2] = residual(supply - demand, std::max({std::abs(supply), std::abs(demand), 1.0}), interior, tol);

        const double bound = fbat >= 0.0 ? upper : -lower;
        const bool loaded = std::abs(fbat) > options.battery_active_fraction * bound;
        const double capacity = sol.lambda_zeta(i) * lam;
        const double loss = alpha * fbat * fbat * ds;
        row[3] = residual(capacity - loss, std::max(capacity, loss), loaded, options.battery_tol);

        const double t_peak = std::max(sol.temperature(i), sol.temperature(i + 1));
        const bool hot = t_peak >= bat.max_temperature - options.temperature_active_tol;
        const double cooling = bat.heat_transfer * sol.temperature(i) * lam;
        row[4] = residual(cooling - sol.lambda_t(i), std::abs(cooling), hot, tol);
        const double scale = std::max(std::abs(fbat), 1.0);
        row[5] = residual(std::min(fbat, 0.0) - sol.charge_force(i), scale, hot, tol);
        row[6] = residual(sol.discharge_force(i) - std::max(fbat, 0.0), scale, hot, tol);

        for (int f = 0; f < kRelaxationCount; ++f) {
            if (!row[static_cast<std::size_t>(f)].applicable) continue;
            ++report.applicable_count[static_cast<std::size_t>(f)];
            report.max_slack[static_cast<std::size_t>(f)] =
                std::max(report.max_slack[static_cast<std::size_t>(f)], std::abs(row[static_cast<std::size_t>(f)].relative_slack));
        }
    }
    report.unconditional_pass = true;
    for (int f = 0; f < kRelaxationCount; ++f) {
        const double tol = f == 3 ? options.battery_tol : options.tol;
        report.passed[static_cast<std::size_t>(f)] = report.max_slack[static_cast<std::size_t>(f)] <= tol;
        if (f < 4) report.unconditional_pass = report.unconditional_pass && report.passed[static_cast<std::size_t>(f)];
    }
    return report;
}

SimulationReport forward_simulate(const SolutionTrajectory& sol, const ProblemInstance& inst,
                                  const EfficiencyMap& fuelcell_map, const SimulationOptions& options) {
    const int n = sol.intervals();
    if (n != inst.intervals()) throw InputError("simulate: solution does not match the instance grid");
    if (options.substeps < 1) throw InputError("simulate: substeps must be positive");
    const auto& veh = inst.vehicle;
    const auto& bat = inst.battery;
    const double heat_capacity = bat.heat_capacity();
    const double stop_speed = options.zero_stop_speed ? 0.0 : std::sqrt(inst.spec.z_stop);

    SimulationReport rep;
    for (auto* nodes : {&rep.speed, &rep.zeta, &rep.temperature, &rep.time}) nodes->setZero(n + 1);
    double z = sol.z(0);
    if (inst.grid[0].is_stop) z = stop_speed * stop_speed;
    double zeta = sol.zeta(0), temp = sol.temperature(0), time = 0.0, fuel = 0.0;

    auto record = [&](int node) {
        rep.speed(node) = std::sqrt(z);
        rep.zeta(node) = zeta;
        rep.temperature(node) = temp;
        rep.time(node) = time;
    };
    auto heat_step = [&](double fbat, double power, double ds, double dt, double fact) {
        const double generated = std::abs(fbat) * (1.0 - exact_battery_efficiency(bat, power)) * ds;
        temp += (generated - bat.heat_transfer * (temp - bat.ambient_temperature) * dt - fact * ds) / heat_capacity;
    };

    for (int i = 0; i < n; ++i) {
        const auto& interval = inst.grid[i];
        if (interval.is_stop) {
            rep.max_arrival_residual = std::max(rep.max_arrival_residual, std::abs(std::sqrt(z) - stop_speed));
            z = stop_speed * stop_speed;
        }
        record(i);
        const double fm = sol.motor_force(i), fb = sol.brake_force(i), ffc = sol.fuelcell_force(i);
        const double fbat = sol.battery_force(i), fact = sol.cooling_force(i);
        const double traction = fm + fb;
        if (interval.is_stop) {
            const double dt = interval.dwell;
            const double power = fbat * interval.width / dt;
            zeta -= exact_delta_zeta(bat, power, dt);
            heat_step(fbat, power, interval.width, dt, fact);
            if (ffc > 0.0) fuel += ffc * interval.width / fuelcell_map.at_force(ffc, interval.width / dt);
            fuel += inst.weights.cooling_weight * fact * interval.width;
            time += dt;
            z = stop_speed * stop_speed + 2.0 * traction * interval.width / veh.equivalent_mass;
            if (z < 0.0) throw DomainError("simulate: speed collapse after stop interval " + std::to_string(i));
            continue;
        }
        const double ds = interval.width / options.substeps;
        for (int k = 0; k < options.substeps; ++k) {
            const double v_a = std::sqrt(z);
            const double external = inst.external_force(i, v_a);
            const double z_b = z + 2.0 * (traction - external) * ds / veh.equivalent_mass;
            if (!(z_b > 0.0)) throw DomainError("simulate: speed collapse on interval " + std::to_string(i));
            const double v_b = std::sqrt(z_b);
            const double dt = 2.0 * ds / (v_a + v_b);
            const double power = fbat * ds / dt;
            zeta -= exact_delta_zeta(bat, power, dt);
            heat_step(fbat, power, ds, dt, fact);
            if (ffc > 0.0) fuel += ffc * ds / fuelcell_map.at_force(ffc, ds / dt);
            fuel += inst.weights.cooling_weight * fact * ds;
            time += dt;
            z = z_b;
        }
    }
    record(n);
    rep.fuel = fuel;
    rep.journey_time = time;
    rep.soc_drift = std::abs(rep.zeta(n) - inst.spec.zeta0);
    rep.max_temperature_excess = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= n; ++k) {
        rep.max_speed_divergence = std::max(rep.max_speed_divergence, std::abs(rep.speed(k) - std::sqrt(std::max(sol.z(k), 0.0))));
        rep.max_zeta_divergence = std::max(rep.max_zeta_divergence, std::abs(rep.zeta(k) - sol.zeta(k)));
        rep.max_temperature_divergence =
            std::max(rep.max_temperature_divergence, std::abs(rep.temperature(k) - sol.temperature(k)));
        rep.max_temperature_excess = std::max(rep.max_temperature_excess, rep.temperature(k) - bat.max_temperature);
    }
    return rep;
}

ValidationVerdict judge(const SimulationReport& report, const ProblemInstance& instance,
                        const ValidationThresholds& thresholds) {
    return {
        report.max_speed_divergence <= thresholds.speed_fraction * max_speed_limit(instance.grid),
        report.soc_drift <= thresholds.soc_drift,
        report.max_temperature_divergence <= thresholds.temperature_divergence,
        report.max_temperature_excess <= thresholds.temperature_excess,
    };
}

}  // namespace htrain
