#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <utility>

#include "htrain/errors.hpp"

namespace htrain {

struct BatteryParams {
    double open_circuit_voltage = 600.0;  // V
    double resistance = 0.1;              // ohm
    double capacity_ah = 40.0;            // Ah
    double mass = 1500.0;                 // kg
    double specific_heat = 1000.0;        // J/(kg K)
    double heat_transfer = 30.0;          // W/K
    double eta_dis = 0.97;
    double eta_chr = 0.97;
    double ambient_temperature = 293.0;   // K
    double max_temperature = 313.0;       // K
    double power_min = -300e3;            // W
    double power_max = 300e3;             // W
    double zeta_min = 0.3;
    double zeta_max = 0.9;
    double cooling_force_max = 2000.0;    // J/m

    double heat_capacity() const { return mass * specific_heat; }
    double validity_power() const {
        return open_circuit_voltage * open_circuit_voltage / (4.0 * resistance);
    }
    void validate() const;
};

struct VehicleParams {
    double mass = 100e3;             // kg
    double equivalent_mass = 105e3;  // kg
    double gravity = 9.81;           // m/s^2
    double aux_power = 40e3;         // W
    double motor_force_min = -200e3;  // N
    double motor_force_max = 200e3;   // N
    double motor_power_min = -800e3;  // W
    double motor_power_max = 800e3;   // W
    double brake_force_min = -300e3;  // N
    double fuelcell_power_min = 0.0;      // W
    double fuelcell_power_max = 400e3;    // W

    void validate() const;
};

// Tabulated efficiency over (load, speed); load is force in N or power in W.
struct EfficiencyMap {
    enum class LoadAxis { force, power };

    LoadAxis load_axis = LoadAxis::force;
    Eigen::VectorXd axis_load;
    Eigen::VectorXd axis_speed;
    Eigen::MatrixXd efficiency;  // rows follow axis_load, columns axis_speed

    void validate() const;
    // Bilinear interpolation, clamped to the table edges.
    double at(double load, double speed) const;
    // Efficiency for force-per-metre `force` at `speed`, converting to power when needed.
    double at_force(double force, double speed) const {
        return load_axis == LoadAxis::force ? at(force, speed) : at(force * speed, speed);
    }
};

// Concave-in-power efficiency curve used by the synthetic generators:
// rises from zero_power_efficiency to peak at knee_power, then falls to
// rated_efficiency at rated_power. Negative power mirrors positive power.
struct EfficiencyShape {
    double peak_efficiency = 0.95;
    double zero_power_efficiency = 0.95;
    double knee_power = 0.0;        // W
    double rated_power = 800e3;     // W
    double rated_efficiency = 0.93;
    double load_min = -200e3;       // N for motor maps, W for fuel-cell maps
    double load_max = 200e3;
    double speed_max = 30.0;        // m/s
    int load_points = 41;
    int speed_points = 31;
    double noise = 0.0;             // uniform perturbation amplitude, seeded

    void validate() const;
    double operator()(double power) const;
};

EfficiencyMap synth_motor_map(const EfficiencyShape& shape, std::uint64_t seed = 0);
EfficiencyMap synth_fuelcell_map(const EfficiencyShape& shape, std::uint64_t seed = 0);

// Second differences along the load axis are <= tol on the traction
// (load >= 0) and regeneration (load <= 0) branches of every speed column.
bool slices_concave(const EfficiencyMap& map, double tol = 1e-12);

template <typename Scalar>
Scalar terminal_voltage(const BatteryParams& batt, Scalar power) {
    const Scalar discriminant = batt.open_circuit_voltage * batt.open_circuit_voltage -
                                4.0 * power * batt.resistance;
    if (discriminant < Scalar(0)) {
        throw DomainError("battery power exceeds the validity bound U_oc^2/(4R)");
    }
    return (batt.open_circuit_voltage + std::sqrt(discriminant)) / 2.0;
}

// Internal current (A) drawn for terminal power `power`.
template <typename Scalar>
Scalar battery_current(const BatteryParams& batt, Scalar power) {
    const Scalar discriminant = batt.open_circuit_voltage * batt.open_circuit_voltage -
                                4.0 * power * batt.resistance;
    if (discriminant < Scalar(0)) {
        throw DomainError("battery power exceeds the validity bound U_oc^2/(4R)");
    }
    return (batt.open_circuit_voltage - std::sqrt(discriminant)) / (2.0 * batt.resistance);
}

template <typename Scalar>
Scalar exact_delta_zeta(const BatteryParams& batt, Scalar power, Scalar dt) {
    return battery_current(batt, power) / (3600.0 * batt.capacity_ah) * dt;
}

template <typename Scalar>
Scalar exact_battery_efficiency(const BatteryParams& batt, Scalar power) {
    const Scalar voltage = terminal_voltage(batt, power);
    if (power >= Scalar(0)) return voltage / batt.open_circuit_voltage;
    return batt.open_circuit_voltage / voltage;
}

// Energy-weighted mean efficiencies over [0, P_max] and [P_min, 0].
std::pair<double, double> average_battery_efficiencies(const BatteryParams& batt);

// Electrical energy per metre drawn by the motor for mechanical force `force`.
double motor_electrical_force(const EfficiencyMap& motor, double force, double speed);
// Hydrogen energy per metre for fuel-cell output `force`.
double fuel_force(const EfficiencyMap& fuelcell, double force, double speed);

}  // namespace htrain
