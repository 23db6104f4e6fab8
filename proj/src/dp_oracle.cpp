#include "htrain/dp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace htrain {

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

struct Control {
    int next_speed;
    int zeta_shift;  // zeta' index = zeta index - shift
    double cost;     // fuel energy, J
    double heat;     // battery heat generated, J
    double motor, brake, fuelcell, battery;
};

struct Grids {
    std::vector<double> speed;
    double zeta_lo, zeta_step;
    double temp_lo, temp_step;
    double time_step;
    int nv, nz, nt_temp, ntime;

    double zeta(int k) const { return zeta_lo + k * zeta_step; }
    double temperature(int k) const { return temp_lo + k * temp_step; }
    double time(int k) const { return k * time_step; }
    std::size_t index(int iv, int it, int iz, int itemp) const {
        return ((static_cast<std::size_t>(iv) * ntime + it) * nz + iz) * nt_temp + itemp;
    }
    std::size_t size() const { return static_cast<std::size_t>(nv) * ntime * nz * nt_temp; }
};

bool dominated(const Control& a, const Control& b) { return b.cost <= a.cost && b.heat <= a.heat; }

// Whether speed grid point `iv` is admissible at node `node`.
bool speed_allowed(const ProblemInstance& inst, const Grids& g, int node, int iv) {
    const double v = g.speed[static_cast<std::size_t>(iv)];
    if (node < inst.intervals()) {
        const auto& interval = inst.grid[node];
        if (interval.is_stop) return iv == 0;
        return v >= inst.spec.v_min - 1e-12 && v <= interval.speed_limit + 1e-12;
    }
    return true;
}

std::vector<Control> stage_controls(const ProblemInstance& inst, const EfficiencyMap& motor_map,
                                    const EfficiencyMap& fuelcell_map, const DpConfig& cfg, const Grids& g,
                                    int stage, int iv) {
    const auto& interval = inst.grid[stage];
    const auto& veh = inst.vehicle;
    const auto& bat = inst.battery;
    const double v = g.speed[static_cast<std::size_t>(iv)];
    const double ds = interval.width;
    const double dt = ds / v;
    const double external = inst.external_force(stage, v);
    const double motor_lo = interval.is_stop ? 0.0 : std::max(veh.motor_force_min, veh.motor_power_min / v);
    const double motor_hi = std::min(veh.motor_force_max, veh.motor_power_max / v);

    std::vector<Control> controls;
    for (int next = 0; next < g.nv; ++next) {
        if (!speed_allowed(inst, g, stage + 1, next)) continue;
        const double v_next = g.speed[static_cast<std::size_t>(next)];
        const double net = veh.equivalent_mass * (v_next * v_next - v * v) / (2.0 * ds) + external;
        if (net > motor_hi) continue;
        std::vector<std::pair<double, double>> splits;  // (motor, brake)
        if (interval.is_stop) {
            if (net >= motor_lo) splits.emplace_back(net, 0.0);
        } else if (net >= 0.0) {
            splits.emplace_back(net, 0.0);
        } else {
            const double regen = std::max(net, motor_lo);
            for (int r = 0; r < cfg.regen_levels; ++r) {
                const double share = cfg.regen_levels == 1 ? 1.0 : 1.0 - static_cast<double>(r) / (cfg.regen_levels - 1);
                const double motor = share * regen;
                const double brake = net - motor;
                if (brake >= veh.brake_force_min) splits.emplace_back(motor, brake);
            }
        }
        // Battery actions move zeta by whole grid cells; the fuel cell covers the rest.
        const double cell_current = g.zeta_step * 3600.0 * bat.capacity_ah / dt;
        const double current_lo = battery_current(bat, bat.power_min);
        const double current_hi = battery_current(bat, bat.power_max);
        const int shift_lo = cfg.battery_enabled ? static_cast<int>(std::ceil(current_lo / cell_current)) : 0;
        const int shift_hi = cfg.battery_enabled ? static_cast<int>(std::floor(current_hi / cell_current)) : 0;
        std::vector<Control> candidates;
        for (const auto& [motor, brake] : splits) {
            const double demand = motor_electrical_force(motor_map, motor, v) + veh.aux_power / v;
            for (int shift = shift_lo; shift <= shift_hi; ++shift) {
                const double current = shift * cell_current;
                const double power = bat.open_circuit_voltage * current - bat.resistance * current * current;
                const double battery = power / v;
                const double fc = demand - battery;
                const double fc_power = fc * v;
                if (fc_power < veh.fuelcell_power_min - 1e-9 || fc_power > veh.fuelcell_power_max + 1e-9) continue;
                Control c;
                c.next_speed = next;
                c.zeta_shift = shift;
                c.cost = (fc > 0.0 ? fc / fuelcell_map.at_force(fc, v) : 0.0) * ds;
                c.heat = shift == 0 ? 0.0 : std::abs(battery) * (1.0 - exact_battery_efficiency(bat, power)) * ds;
                c.motor = motor;
                c.brake = brake;
                c.fuelcell = fc;
                c.battery = battery;
                candidates.push_back(c);
            }
        }
        // Keep the (cost, heat) Pareto front per zeta shift.
        std::sort(candidates.begin(), candidates.end(), [](const Control& a, const Control& b) {
            if (a.zeta_shift != b.zeta_shift) return a.zeta_shift < b.zeta_shift;
            if (a.cost != b.cost) return a.cost < b.cost;
            return a.heat < b.heat;
        });
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            bool keep = true;
            for (std::size_t j = 0; j < candidates.size() && keep; ++j) {
                if (j == k || candidates[j].zeta_shift != candidates[k].zeta_shift) continue;
                const bool strictly = candidates[j].cost < candidates[k].cost || candidates[j].heat < candidates[k].heat ||
                                      j < k;
                if (dominated(candidates[k], candidates[j]) && strictly) keep = false;
            }
            if (keep) controls.push_back(candidates[k]);
        }
    }
    return controls;
}

}  // namespace

void DpConfig::validate() const {
    const bool custom_speed = speed_grid.has_value();
    if ((!custom_speed && speed_points < 2) || zeta_points < 2 || temperature_points < 2 || time_points < 2) {
        throw InputError("dp: all grid sizes must be at least 2");
    }
    if (custom_speed && speed_grid->empty()) throw InputError("dp: empty speed grid");
    if (zeta_range && !(zeta_range->hi > zeta_range->lo)) throw InputError("dp: empty zeta range");
    if (cooling_levels < 1 || regen_levels < 1) throw InputError("dp: control levels must be positive");
    if (interval_cap < 1 || interval_cap > 20) throw InputError("dp: interval cap must lie in [1, 20]");
}

DpResult dp_solve(const ProblemInstance& inst, const EfficiencyMap& motor_map, const EfficiencyMap& fuelcell_map,
                  const DpConfig& cfg) {
    cfg.validate();
    const int n = inst.intervals();
    if (n > cfg.interval_cap) {
        throw InputError("dp: " + std::to_string(n) + " intervals exceed the cap of " + std::to_string(cfg.interval_cap));
    }
    const auto& bat = inst.battery;
    const auto& spec = inst.spec;

    Grids g;
    if (cfg.speed_grid) {
        g.speed = *cfg.speed_grid;
    } else {
        double top = 0.0;
        for (const auto& interval : inst.grid.intervals) {
            if (!interval.is_stop) top = std::max(top, interval.speed_limit);
        }
        const Eigen::VectorXd speeds = Eigen::VectorXd::LinSpaced(cfg.speed_points, std::sqrt(spec.z_stop), top);
        g.speed.assign(speeds.data(), speeds.data() + speeds.size());
    }
    g.nv = static_cast<int>(g.speed.size());
    g.nz = cfg.zeta_points;
    const Box zetas = cfg.zeta_range.value_or(Box{bat.zeta_min, bat.zeta_max});
    g.zeta_lo = std::max(zetas.lo, bat.zeta_min);
    g.zeta_step = (std::min(zetas.hi, bat.zeta_max) - g.zeta_lo) / (g.nz - 1);
    const Box temps = cfg.temperature_range.value_or(
        Box{std::min(spec.temperature0, bat.ambient_temperature) - 1.0, bat.max_temperature});
    g.nt_temp = cfg.temperature_points;
    g.temp_lo = temps.lo;
    g.temp_step = (temps.hi - temps.lo) / (g.nt_temp - 1);
    g.ntime = cfg.time_points;
    g.time_step = spec.target_time / (g.ntime - 1);

    DpResult result;
    result.speed_grid = g.speed;
    result.speed_step = g.nv > 1 ? g.speed[1] - g.speed[0] : 0.0;
    result.zeta_step = g.zeta_step;
    result.temperature_step = g.temp_step;
    result.time_step = g.time_step;

    auto nearest = [](double value, double lo, double step) { return static_cast<int>(std::lround((value - lo) / step)); };
    // Elapsed time rounds up so no path gains time from the grid.
    auto later_cell = [](double value, double step) { return static_cast<int>(std::ceil(value / step - 1e-9)); };
    int start_speed = 0;
    {
        const double v0 = std::sqrt(spec.z0);
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < g.nv; ++k) {
            if (std::abs(g.speed[static_cast<std::size_t>(k)] - v0) < best) {
                best = std::abs(g.speed[static_cast<std::size_t>(k)] - v0);
                start_speed = k;
            }
        }
    }
    const int start_zeta = nearest(spec.zeta0, g.zeta_lo, g.zeta_step);
    const int start_temp = std::clamp(nearest(spec.temperature0, g.temp_lo, g.temp_step), 0, g.nt_temp - 1);

    // Controls per stage and speed index, then forward reachability over (speed, time).
    std::vector<std::vector<std::vector<Control>>> controls(static_cast<std::size_t>(n));
    std::vector<std::vector<char>> reach(static_cast<std::size_t>(n + 1),
                                         std::vector<char>(static_cast<std::size_t>(g.nv) * g.ntime, 0));
    reach[0][static_cast<std::size_t>(start_speed) * g.ntime] = 1;
    for (int i = 0; i < n; ++i) {
        auto& stage = controls[static_cast<std::size_t>(i)];
        stage.resize(static_cast<std::size_t>(g.nv));
        for (int iv = 0; iv < g.nv; ++iv) {
            bool any = false;
            for (int it = 0; it < g.ntime && !any; ++it) any = reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(iv) * g.ntime + it];
            if (!any || !speed_allowed(inst, g, i, iv)) continue;
            stage[static_cast<std::size_t>(iv)] = stage_controls(inst, motor_map, fuelcell_map, cfg, g, i, iv);
            const double dt = inst.grid[i].width / g.speed[static_cast<std::size_t>(iv)];
            for (int it = 0; it < g.ntime; ++it) {
                if (!reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(iv) * g.ntime + it]) continue;
                const int it_next = later_cell(g.time(it) + dt, g.time_step);
                if (it_next >= g.ntime) continue;
                for (const auto& c : stage[static_cast<std::size_t>(iv)]) {
                    reach[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(c.next_speed) * g.ntime + it_next] = 1;
                }
            }
        }
    }

    // Backward induction.
    std::vector<std::vector<float>> value(static_cast<std::size_t>(n + 1));
    value[static_cast<std::size_t>(n)].assign(g.size(), kInf);
    const int goal_zeta = nearest(spec.zeta0, g.zeta_lo, g.zeta_step);
    // Arriving early is allowed: the train waits at the terminus.
    for (int iv = 0; iv < g.nv; ++iv) {
        for (int it = 0; it < g.ntime; ++it) {
            if (!reach[static_cast<std::size_t>(n)][static_cast<std::size_t>(iv) * g.ntime + it]) continue;
            for (int itemp = 0; itemp < g.nt_temp; ++itemp) {
                value[static_cast<std::size_t>(n)][g.index(iv, it, goal_zeta, itemp)] = 0.0f;
            }
        }
    }
    const double heat_capacity = bat.heat_capacity();
    std::vector<double> cooling_forces;
    for (int a = 0; a < cfg.cooling_levels; ++a) {
        cooling_forces.push_back(cfg.cooling_levels == 1 ? 0.0 : bat.cooling_force_max * a / (cfg.cooling_levels - 1));
    }

    struct Choice {
        float cost = kInf;
        int control = -1, cooling = -1;
    };
    // Best control from a state given the next-stage values.
    auto evaluate = [&](int i, int iv, int it, int iz, int itemp, const std::vector<float>& next) {
        Choice best;
        const auto& stage = controls[static_cast<std::size_t>(i)][static_cast<std::size_t>(iv)];
        const double ds = inst.grid[i].width;
        const double dt = ds / g.speed[static_cast<std::size_t>(iv)];
        const int it_next = later_cell(g.time(it) + dt, g.time_step);
        if (it_next >= g.ntime) return best;
        const double temp = g.temperature(itemp);
        const double ambient = bat.heat_transfer * (temp - bat.ambient_temperature) * dt;
        for (std::size_t k = 0; k < stage.size(); ++k) {
            const auto& c = stage[k];
            const int iz_next = iz - c.zeta_shift;
            if (iz_next < 0 || iz_next >= g.nz) continue;
            for (std::size_t a = 0; a < cooling_forces.size(); ++a) {
                const double temp_next = temp + (c.heat - ambient - cooling_forces[a] * ds) / heat_capacity;
                int itemp_next = nearest(temp_next, g.temp_lo, g.temp_step);
                if (itemp_next >= g.nt_temp) continue;
                itemp_next = std::max(itemp_next, 0);
                const float future = next[g.index(c.next_speed, it_next, iz_next, itemp_next)];
                if (future == kInf) continue;
                const float total = static_cast<float>(c.cost + inst.weights.cooling_weight * cooling_forces[a] * ds) + future;
                if (total < best.cost) best = {total, static_cast<int>(k), static_cast<int>(a)};
            }
        }
        return best;
    };

    for (int i = n - 1; i >= 0; --i) {
        auto& current = value[static_cast<std::size_t>(i)];
        current.assign(g.size(), kInf);
        const auto& next = value[static_cast<std::size_t>(i + 1)];
        for (int iv = 0; iv < g.nv; ++iv) {
            if (controls[static_cast<std::size_t>(i)][static_cast<std::size_t>(iv)].empty()) continue;
            for (int it = 0; it < g.ntime; ++it) {
                if (!reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(iv) * g.ntime + it]) continue;
                for (int iz = 0; iz < g.nz; ++iz) {
                    for (int itemp = 0; itemp < g.nt_temp; ++itemp) {
                        current[g.index(iv, it, iz, itemp)] = evaluate(i, iv, it, iz, itemp, next).cost;
                        ++result.evaluated_states;
                    }
                }
            }
        }
        value[static_cast<std::size_t>(i + 2 <= n ? i + 2 : n)].shrink_to_fit();
    }

    if (start_zeta < 0 || start_zeta >= g.nz ||
        value[0][g.index(start_speed, 0, start_zeta, start_temp)] == kInf) {
        return result;
    }

    // Recover the path and its exact cost.
    SolutionTrajectory& traj = result.trajectory;
    traj.resize(n);
    int iv = start_speed, it = 0, iz = start_zeta, itemp = start_temp;
    double position = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double v = g.speed[static_cast<std::size_t>(iv)];
        traj.z(i) = v * v;
        traj.zeta(i) = g.zeta(iz);
        traj.temperature(i) = g.temperature(itemp);
        traj.time(i) = g.time(it);
        if (i == n) {
            traj.position(i) = position;
            break;
        }
        const auto& interval = inst.grid[i];
        position = interval.is_stop ? interval.start : std::max(position, interval.start);
        traj.position(i) = position;
        if (!interval.is_stop) position += interval.width;
        const Choice choice = evaluate(i, iv, it, iz, itemp, value[static_cast<std::size_t>(i + 1)]);
        const auto& c = controls[static_cast<std::size_t>(i)][static_cast<std::size_t>(iv)][static_cast<std::size_t>(choice.control)];
        const double ds = interval.width;
        const double cooling = cooling_forces[static_cast<std::size_t>(choice.cooling)];
        traj.is_stop[static_cast<std::size_t>(i)] = interval.is_stop ? 1 : 0;
        traj.width(i) = ds;
        traj.speed(i) = v;
        traj.motor_force(i) = c.motor;
        traj.brake_force(i) = c.brake;
        traj.fuelcell_force(i) = c.fuelcell;
        traj.battery_force(i) = c.battery;
        traj.cooling_force(i) = cooling;
        traj.discharge_force(i) = std::max(c.battery, 0.0);
        traj.charge_force(i) = std::min(c.battery, 0.0);
        traj.lambda_v(i) = 1.0 / v;
        traj.lambda_zeta(i) = 0.0;
        traj.lambda_t(i) = bat.heat_transfer * g.temperature(itemp) / v;
        traj.motor_power(i) = c.motor * v;
        traj.fuelcell_power(i) = c.fuelcell * v;
        traj.battery_power(i) = c.battery * v;
        traj.cooling_power(i) = cooling * v;
        result.cost += c.cost + inst.weights.cooling_weight * cooling * ds;

        const double dt = ds / v;
        const double temp = g.temperature(itemp);
        const double temp_next = temp + (c.heat - bat.heat_transfer * (temp - bat.ambient_temperature) * dt - cooling * ds) / heat_capacity;
        it = later_cell(g.time(it) + dt, g.time_step);
        iz -= c.zeta_shift;
        itemp = std::max(nearest(temp_next, g.temp_lo, g.temp_step), 0);
        iv = c.next_speed;
    }
    result.feasible = true;
    return result;
}

double gap_report(double convex_objective, const DpResult& dp) {
    return (convex_objective - dp.cost) / dp.cost;
}

}  // namespace htrain
