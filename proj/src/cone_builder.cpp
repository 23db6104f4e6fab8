#include "htrain/cone_builder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace htrain {

namespace {

double stop_speed(const ProblemInstance& inst) { return std::sqrt(inst.spec.z_stop); }

// Typical running speed used only to balance cone encodings.
double nominal_speed(const ProblemInstance& inst, int i) {
    const auto& interval = inst.grid[i];
    if (interval.is_stop) return stop_speed(inst);
    return std::max(inst.spec.v_min, 0.75 * interval.speed_limit);
}

double max_speed_limit(const SpatialGrid& grid) {
    double limit = 0.0;
    for (const auto& interval : grid.intervals) {
        if (!interval.is_stop) limit = std::max(limit, interval.speed_limit);
    }
    return limit;
}

// Upper bound on speed at node k (the start of interval k, or the end of the route).
double node_speed_limit(const ProblemInstance& inst, int node) {
    if (node < inst.intervals() && !inst.grid[node].is_stop) return inst.grid[node].speed_limit;
    return max_speed_limit(inst.grid);
}

// ||(p20 z, p02 F)||-type epigraph: sq_z z^2 + sq_f F^2 <= u, balanced by `scale2` ~ typical u.
void add_quadratic_epigraph(ProgramAssembler& assembler, double sq_z, int z_var, double sq_f, int f_var,
                            const AffineExpr& bound, double scale2, Family family) {
    const double scale = std::sqrt(scale2);
    std::vector<AffineExpr> w;
    if (sq_z > 0.0) w.push_back(var(z_var, std::sqrt(sq_z) / scale));
    if (sq_f > 0.0) w.push_back(var(f_var, std::sqrt(sq_f) / scale));
    if (w.empty()) {
        assembler.add_inequality(-1.0 * bound, family);
        return;
    }
    assembler.add_rotated_cone(w, (1.0 / scale2) * bound, AffineExpr(1.0), family);
}

}  // namespace

void ProblemInstance::validate() const {
    spec.validate();
    vehicle.validate();
    battery.validate();
    if (grid.size() == 0) throw InputError("instance: empty grid");
    if (!grid.ends_at_station()) throw InputError("instance: journey has no terminal station stop");
    for (const auto& interval : grid.intervals) {
        if (!(interval.width > 0.0)) throw InputError("instance: interval widths must be positive");
    }
    if (weights.cooling_weight < 0.0 || weights.thermal_tiebreak < 0.0) {
        throw InputError("instance: weights must be non-negative");
    }
    for (const auto* q : {&surrogates.motor, &surrogates.fuelcell}) {
        if (!hessian_psd_check(*q).psd) throw InputError("instance: surrogate violates convexity");
        if (q->p11 != 0.0) throw InputError("instance: cross term p11 must be zero inside the cone program");
    }
    if (surrogates.battery.alpha < 0.0 || !(surrogates.battery.beta > 0.0)) {
        throw InputError("instance: battery surrogate needs alpha >= 0 and beta > 0");
    }
    if (lambda_boxes && static_cast<int>(lambda_boxes->size()) != grid.size()) {
        throw InputError("instance: lambda box count does not match grid");
    }
}

double ProblemInstance::external_force(int i, double speed) const {
    const auto& interval = grid[i];
    if (interval.is_stop) return 0.0;
    return resistance(speed) + vehicle.mass * vehicle.gravity * std::sin(interval.gradient);
}

Box ProblemInstance::temperature_box() const {
    const double floor = std::min(spec.temperature0, battery.ambient_temperature) - spec.temperature_margin;
    return {std::max(0.0, floor), battery.max_temperature};
}

Box ProblemInstance::lambda_box(int i) const {
    if (lambda_boxes) return (*lambda_boxes)[static_cast<std::size_t>(i)];
    const auto& interval = grid[i];
    if (interval.is_stop) {
        const double value = 1.0 / std::sqrt(spec.z_stop);
        return {value, value};
    }
    return {1.0 / interval.speed_limit, 1.0 / spec.v_min};
}

std::vector<McCormickRow> mccormick_cooling_rows(Box temperature, Box lambda, double heat_transfer) {
    const double h = heat_transfer;
    const bool flat_t = temperature.hi <= temperature.lo;
    const bool flat_l = lambda.hi <= lambda.lo;
    if (flat_l) return {{0.0, h * lambda.lo, 0.0}};
    if (flat_t) return {{h * temperature.lo, 0.0, 0.0}};
    return {
        {h * temperature.lo, h * lambda.lo, -h * temperature.lo * lambda.lo},
        {h * temperature.hi, h * lambda.hi, -h * temperature.hi * lambda.hi},
    };
}

double min_time_estimate(const ProblemInstance& instance) {
    double total = 0.0;
    for (const auto& interval : instance.grid.intervals) {
        total += interval.is_stop ? interval.dwell : interval.width / interval.speed_limit;
    }
    return total;
}

ConeProgram build(const ProblemInstance& inst, const BuildOptions& options) {
    inst.validate();
    const int n = inst.intervals();
    const auto& veh = inst.vehicle;
    const auto& bat = inst.battery;
    const auto& spec = inst.spec;
    const auto& qm = inst.surrogates.motor;
    const auto& qf = inst.surrogates.fuelcell;
    const auto& qb = inst.surrogates.battery;
    const Box temperature = inst.temperature_box();

    if (options.screen_infeasible) {
        const double estimate = min_time_estimate(inst);
        if (spec.target_time < estimate) {
            std::ostringstream msg;
            msg << "target time " << spec.target_time << " s is below the minimum time estimate " << estimate << " s";
            throw InfeasibleError(msg.str());
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!inst.grid[i].is_stop && inst.grid[i].speed_limit < spec.v_min) {
            throw InfeasibleError("speed limit below v_min on interval " + std::to_string(i));
        }
    }
    if (spec.zeta0 < bat.zeta_min || spec.zeta0 > bat.zeta_max) throw InfeasibleError("zeta0 outside battery SOC bounds");
    if (spec.temperature0 > bat.max_temperature) throw InfeasibleError("T0 above the battery temperature bound");
    if (!inst.grid[0].is_stop && spec.z0 < spec.v_min * spec.v_min) {
        throw InfeasibleError("journey starts on a running interval below v_min; add an origin station at 0 m");
    }
    for (int i = 0; i + 1 < n; ++i) {
        const auto& interval = inst.grid[i];
        if (!interval.is_stop || inst.grid[i + 1].is_stop) continue;
        const double launch = spec.z_stop + 2.0 * veh.motor_force_max * interval.width / veh.equivalent_mass;
        if (launch < spec.v_min * spec.v_min) {
            throw InfeasibleError("stop interval " + std::to_string(i) +
                                  " is too short to reach v_min at full motor force; lengthen the dwell");
        }
    }
    if (inst.grid[0].is_stop && spec.z0 != spec.z_stop) {
        throw InputError("journey starts at a station but z0 differs from z_stop");
    }

    VariableLayout layout{n};
    ProgramAssembler asmb(layout);
    const double heat_capacity = bat.heat_capacity();
    const double h = bat.heat_transfer;

    // Boundary conditions.
    if (!inst.grid[0].is_stop) asmb.add_equality(var(layout.z(0)) - spec.z0, Family::initial_state);
    asmb.add_equality(var(layout.zeta(0)) - spec.zeta0, Family::initial_state);
    asmb.add_equality(var(layout.temperature(0)) - spec.temperature0, Family::initial_state);
    asmb.add_equality(var(layout.zeta(n)) - var(layout.zeta(0)), Family::charge_sustaining);
    {
        AffineExpr time(-spec.target_time);
        for (int i = 0; i < n; ++i) time.add(layout.lambda_v(i), inst.grid[i].width);
        asmb.add_equality((1.0 / spec.target_time) * time, Family::journey_time);
    }

    // Node state bounds.
    for (int node = 0; node <= n; ++node) {
        const bool starts_stop = node < n && inst.grid[node].is_stop;
        if (starts_stop) {
            asmb.add_equality(var(layout.z(node)) - spec.z_stop, Family::station_stop);
        } else if (node > 0) {
            const double limit = node_speed_limit(inst, node);
            const double lower = node < n ? spec.v_min * spec.v_min : 0.0;
            asmb.add_inequality(lower - var(layout.z(node)), Family::state_bounds);
            asmb.add_inequality(var(layout.z(node)) - limit * limit, Family::state_bounds);
        }
        if (node > 0) {
            asmb.add_inequality(bat.zeta_min - var(layout.zeta(node)), Family::state_bounds);
            asmb.add_inequality(var(layout.zeta(node)) - bat.zeta_max, Family::state_bounds);
            asmb.add_inequality(temperature.lo - var(layout.temperature(node)), Family::state_bounds);
            asmb.add_inequality(var(layout.temperature(node)) - bat.max_temperature, Family::state_bounds);
        }
    }

    const double tiebreak = inst.weights.thermal_tiebreak;
    for (int i = 0; i < n; ++i) {
        const auto& interval = inst.grid[i];
        const double ds = interval.width;
        const bool stop = interval.is_stop;
        const int z = layout.z(i), z_next = layout.z(i + 1);
        const int fm = layout.motor_force(i), fb = layout.brake_force(i), ffc = layout.fuelcell_force(i);
        const int fbat = layout.battery_force(i), fact = layout.cooling_force(i);
        const int v = layout.speed(i), lam = layout.lambda_v(i), lz = layout.lambda_zeta(i);
        const int lt = layout.lambda_t(i), dz = layout.delta_zeta(i), dt = layout.delta_t(i);
        const int fdis = layout.discharge_force(i), fchr = layout.charge_force(i);
        const double v_nom = nominal_speed(inst, i);

        // (a) kinetic energy balance in z, normalised by m_eq / 2.
        {
            const double k = 2.0 * ds / veh.equivalent_mass;
            AffineExpr row = var(z_next) - var(z);
            row.add(fm, -k).add(fb, -k);
            if (!stop) {
                row.add(v, k * inst.resistance.b).add(z, k * inst.resistance.c);
                row.constant += k * (inst.resistance.a + veh.mass * veh.gravity * std::sin(interval.gradient));
            }
            asmb.add_equality(row, Family::kinetic);
        }
        // (b) SOC chain.
        asmb.add_equality(var(layout.zeta(i + 1)) - var(layout.zeta(i)) + var(dz), Family::soc_update);
        asmb.add_equality(var(lz) - var(dz) + var(fbat, qb.beta * ds), Family::lambda_zeta_definition);
        // (c) temperature chain and compiled heat balance, in kelvin.
        asmb.add_equality(var(layout.temperature(i + 1)) - var(layout.temperature(i)) - var(dt),
                          Family::temperature_update);
        {
            const double k = ds / heat_capacity;
            AffineExpr row = var(dt);
            row.add(fdis, -k * (1.0 - bat.eta_dis)).add(fchr, k * (1.0 - bat.eta_chr));
            row.add(lt, k).add(lam, -k * h * bat.ambient_temperature).add(fact, k);
            asmb.add_equality(row, Family::compiled_thermal);
        }

        // (d) simple bounds.
        if (stop) {
            asmb.add_inequality(-1.0 * var(fm), Family::control_bounds);
            asmb.add_equality(var(fb), Family::stationary_brake);
        } else {
            asmb.add_inequality(veh.motor_force_min - var(fm), Family::control_bounds);
            asmb.add_inequality(var(fb) - 0.0, Family::control_bounds);
            asmb.add_inequality(veh.brake_force_min - var(fb), Family::control_bounds);
        }
        asmb.add_inequality(var(fm) - veh.motor_force_max, Family::control_bounds);
        asmb.add_inequality(-1.0 * var(ffc), Family::control_bounds);
        asmb.add_inequality(-1.0 * var(fact), Family::control_bounds);
        asmb.add_inequality(var(fact) - bat.cooling_force_max, Family::control_bounds);
        asmb.add_inequality(-1.0 * var(fdis), Family::control_bounds);
        asmb.add_inequality(var(fchr), Family::control_bounds);
        if (stop) {
            // Stop-interval forces carry lambda_v = 1/sqrt(z_stop) and dwarf the running ones.
            const double ratio = std::max(spec.v_min, 0.75 * max_speed_limit(inst.grid)) / stop_speed(inst);
            for (int index : {fm, fb, ffc, fbat, fdis, fchr, lt}) asmb.set_variable_scale(index, ratio);
            // v and lambda_v are pinned by z_stop; stating them as equalities keeps the cones strictly feasible.
            asmb.add_equality(var(v) - stop_speed(inst), Family::station_stop);
            asmb.add_equality(var(lam) - 1.0 / stop_speed(inst), Family::station_stop);
        } else {
            asmb.add_inequality(spec.v_min - var(v), Family::speed_bounds);
            asmb.add_inequality(var(v) - interval.speed_limit, Family::speed_bounds);
            const Box box = inst.lambda_box(i);
            asmb.add_inequality(box.lo - var(lam), Family::lambda_bounds);
            asmb.add_inequality(var(lam) - box.hi, Family::lambda_bounds);
        }

        // (e) speed-dependent power bounds, normalised by the force scale.
        {
            const double scale = 1.0 / veh.motor_force_max;
            asmb.add_inequality(scale * (var(lam, veh.motor_power_min) - var(fm)), Family::motor_power);
            asmb.add_inequality(scale * (var(fm) - var(lam, veh.motor_power_max)), Family::motor_power);
            asmb.add_inequality(scale * (var(lam, bat.power_min) - var(fbat)), Family::battery_power);
            asmb.add_inequality(scale * (var(fbat) - var(lam, bat.power_max)), Family::battery_power);
            asmb.add_inequality(scale * (var(lam, veh.fuelcell_power_min) - var(ffc)), Family::fuelcell_power);
            asmb.add_inequality(scale * (var(ffc) - var(lam, veh.fuelcell_power_max)), Family::fuelcell_power);
        }

        // (f) relaxations.
        if (!stop) {
            // 1 <= v lambda_v
            asmb.add_rotated_cone({AffineExpr(1.0)}, var(v, 1.0 / v_nom), var(lam, v_nom), Family::speed_time);
            // v^2 <= z
            asmb.add_rotated_cone({var(v, 1.0 / v_nom)}, var(z, 1.0 / (v_nom * v_nom)), AffineExpr(1.0),
                                  Family::kinetic_energy);
        }
        // motor surrogate balance: p20 z^2 + p02 F_m^2 <= F_fc + F_batt - P_aux lambda - p00 - p10 z - p01 F_m
        {
            AffineExpr slack = var(ffc) + var(fbat);
            slack.add(lam, -veh.aux_power).add(z, -qm.p10).add(fm, -qm.p01);
            slack.constant -= qm.p00;
            const double z_nom = v_nom * v_nom;
            const double f_nom = std::min(veh.motor_force_max, veh.motor_power_max / std::max(v_nom, 1.0));
            const double scale2 = std::max(qm.p20 * z_nom * z_nom + qm.p02 * f_nom * f_nom, 1.0);
            add_quadratic_epigraph(asmb, qm.p20, z, qm.p02, fm, slack, scale2, Family::motor_balance);
        }
        // alpha F_batt^2 ds <= lambda_zeta lambda_v
        if (qb.alpha > 0.0) {
            const double f_nom = 0.5 * bat.power_max / v_nom;
            const double root = std::sqrt(qb.alpha * ds);
            const double lam_nom = 1.0 / v_nom;
            const double lz_nom = qb.alpha * ds * f_nom * f_nom / lam_nom;
            const double balance = std::sqrt(lz_nom / lam_nom);
            const double s = 1.0 / (root * f_nom);
            asmb.add_rotated_cone({var(fbat, root * s)}, var(lz, s / balance), var(lam, s * balance),
                                  Family::battery_loss);
        } else {
            asmb.add_inequality(-1.0 * var(lz), Family::battery_loss);
        }
        // McCormick under-estimators of h T lambda_v.
        for (const auto& row : mccormick_cooling_rows(temperature, inst.lambda_box(i), h)) {
            AffineExpr expr = var(lt);
            expr.add(lam, -row.lambda_coef).add(layout.temperature(i), -row.temperature_coef);
            expr.constant -= row.constant;
            asmb.add_inequality((1.0 / (h * bat.max_temperature * inst.lambda_box(i).hi)) * expr,
                                Family::cooling_mccormick);
        }
        // F_chr <= F_batt <= F_dis
        asmb.add_inequality(var(fchr) - var(fbat), Family::battery_split);
        asmb.add_inequality(var(fbat) - var(fdis), Family::battery_split);

        // Objective: ds (q_fc(F_fc, z) + w F_act).
        {
            AffineExpr linear;
            linear.add(z, ds * qf.p10).add(ffc, ds * qf.p01).add(fact, ds * inst.weights.cooling_weight);
            linear.constant = ds * qf.p00;
            linear.add(fdis, ds * tiebreak).add(fchr, -ds * tiebreak).add(lt, -ds * tiebreak);
            asmb.add_objective(linear);
            if (qf.p20 > 0.0 || qf.p02 > 0.0) {
                const int epi = asmb.add_variable("fuel_quad[" + std::to_string(i) + "]");
                const double z_nom = v_nom * v_nom;
                const double f_nom = 0.5 * veh.fuelcell_power_max / std::max(v_nom, 1.0);
                const double scale2 = std::max(ds * (qf.p20 * z_nom * z_nom + qf.p02 * f_nom * f_nom), 1.0);
                add_quadratic_epigraph(asmb, ds * qf.p20, z, ds * qf.p02, ffc, var(epi), scale2,
                                       Family::objective_epigraph);
                asmb.add_objective(var(epi));
            }
        }
    }
    ConeProgram program = asmb.finish();
    program.grid = inst.grid;
    program.target_time = spec.target_time;
    return program;
}

double fuel_objective(const ProblemInstance& inst, const Eigen::VectorXd& x) {
    const VariableLayout layout{inst.intervals()};
    double total = 0.0;
    for (int i = 0; i < inst.intervals(); ++i) {
        const double ds = inst.grid[i].width;
        total += ds * (inst.surrogates.fuelcell(x(layout.fuelcell_force(i)), x(layout.z(i))) +
                       inst.weights.cooling_weight * x(layout.cooling_force(i)));
    }
    return total;
}

}  // namespace htrain
