#include "htrain/components.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace htrain {

namespace {

void require(bool condition, const std::string& message) {
    if (!condition) throw InputError(message);
}

bool strictly_increasing(const Eigen::VectorXd& axis) {
    for (Eigen::Index k = 1; k < axis.size(); ++k) {
        if (!(axis(k) > axis(k - 1))) return false;
    }
    return true;
}

// Bracketing index and weight for linear interpolation with clamping.
std::pair<Eigen::Index, double> locate(const Eigen::VectorXd& axis, double value) {
    if (axis.size() == 1 || value <= axis(0)) return {0, 0.0};
    const Eigen::Index last = axis.size() - 1;
    if (value >= axis(last)) return {last - 1, 1.0};
    const auto it = std::upper_bound(axis.data(), axis.data() + axis.size(), value);
    const Eigen::Index upper = it - axis.data();
    const Eigen::Index lower = upper - 1;
    return {lower, (value - axis(lower)) / (axis(upper) - axis(lower))};
}

Eigen::VectorXd axis_with_knots(double lo, double hi, int points, std::vector<double> knots) {
    std::vector<double> values;
    for (int k = 0; k < points; ++k) {
        values.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1));
    }
    for (double knot : knots) {
        if (knot > lo && knot < hi) values.push_back(knot);
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end(),
                             [&](double a, double b) { return std::abs(a - b) <= 1e-9 * (hi - lo); }),
                 values.end());
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void perturb(EfficiencyMap& map, double amplitude, std::uint64_t seed) {
    if (amplitude <= 0.0) return;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-amplitude, amplitude);
    for (Eigen::Index c = 0; c < map.efficiency.cols(); ++c) {
        for (Eigen::Index r = 0; r < map.efficiency.rows(); ++r) {
            map.efficiency(r, c) = std::clamp(map.efficiency(r, c) + dist(rng), 1e-3, 1.0);
        }
    }
}

}  // namespace

void BatteryParams::validate() const {
    require(open_circuit_voltage > 0 && resistance > 0 && capacity_ah > 0, "battery: U_oc, R, Q must be positive");
    require(mass > 0 && specific_heat > 0 && heat_transfer > 0, "battery: m_batt, c_batt, h must be positive");
    require(eta_dis > 0 && eta_dis < 1 && eta_chr > 0 && eta_chr < 1, "battery: eta_dis, eta_chr must lie in (0, 1)");
    require(ambient_temperature >= 0 && ambient_temperature <= max_temperature, "battery: need 0 <= T_amb <= T_max");
    require(power_min < 0 && power_max > 0, "battery: need P_min < 0 < P_max");
    require(power_max <= validity_power(), "battery: P_max exceeds U_oc^2/(4R)");
    require(zeta_min >= 0 && zeta_min < zeta_max && zeta_max <= 1, "battery: need 0 <= zeta_min < zeta_max <= 1");
    require(cooling_force_max >= 0, "battery: F_act_max must be non-negative");
}

void VehicleParams::validate() const {
    require(mass > 0 && equivalent_mass >= mass, "vehicle: need m_eq >= m > 0");
    require(gravity > 0, "vehicle: g must be positive");
    require(aux_power >= 0, "vehicle: P_aux must be non-negative");
    require(motor_force_min < 0 && motor_force_max > 0, "vehicle: need F_m_min < 0 < F_m_max");
    require(motor_power_min < 0 && motor_power_max > 0, "vehicle: need P_m_min < 0 < P_m_max");
    require(brake_force_min < 0, "vehicle: F_brk_min must be negative");
    require(fuelcell_power_min >= 0 && fuelcell_power_min < fuelcell_power_max,
            "vehicle: need 0 <= P_fc_min < P_fc_max");
}

void EfficiencyMap::validate() const {
    require(axis_load.size() >= 1 && axis_speed.size() >= 1, "efficiency map: empty axis");
    require(strictly_increasing(axis_load) && strictly_increasing(axis_speed),
            "efficiency map: axes must be strictly increasing");
    require(efficiency.rows() == axis_load.size() && efficiency.cols() == axis_speed.size(),
            "efficiency map: table dimensions do not match axes");
    require(efficiency.allFinite() && (efficiency.array() > 0.0).all() && (efficiency.array() <= 1.0).all(),
            "efficiency map: efficiencies must lie in (0, 1]");
}

double EfficiencyMap::at(double load, double speed) const {
    const auto [r, wr] = locate(axis_load, load);
    const auto [c, wc] = locate(axis_speed, speed);
    const Eigen::Index r1 = std::min<Eigen::Index>(r + 1, efficiency.rows() - 1);
    const Eigen::Index c1 = std::min<Eigen::Index>(c + 1, efficiency.cols() - 1);
    const double low = (1 - wc) * efficiency(r, c) + wc * efficiency(r, c1);
    const double high = (1 - wc) * efficiency(r1, c) + wc * efficiency(r1, c1);
    return (1 - wr) * low + wr * high;
}

void EfficiencyShape::validate() const {
    require(peak_efficiency > 0 && peak_efficiency < 1, "synthetic map: peak efficiency must lie in (0, 1)");
    require(zero_power_efficiency > 0 && zero_power_efficiency <= peak_efficiency,
            "synthetic map: need 0 < zero_power_efficiency <= peak");
    require(rated_efficiency > 0 && rated_efficiency <= peak_efficiency,
            "synthetic map: need 0 < rated_efficiency <= peak");
    require(knee_power >= 0 && rated_power > knee_power, "synthetic map: need 0 <= knee_power < rated_power");
    require(load_max > load_min, "synthetic map: load range empty");
    require(speed_max > 0, "synthetic map: speed_max must be positive");
    require(load_points >= 3 && speed_points >= 2, "synthetic map: too few grid points");
    require(noise >= 0, "synthetic map: noise must be non-negative");
}

double EfficiencyShape::operator()(double power) const {
    const double p = std::abs(power);
    const double span = rated_power - knee_power;
    double eta = 0.0;
    if (knee_power > 0.0 && p <= knee_power) {
        const double u = 1.0 - p / knee_power;
        eta = peak_efficiency - (peak_efficiency - zero_power_efficiency) * u * u;
    } else if (p <= rated_power) {
        const double u = (p - knee_power) / span;
        eta = peak_efficiency - (peak_efficiency - rated_efficiency) * u * u;
    } else {
        // Tangent continuation keeps the curve concave past the rating.
        eta = rated_efficiency - 2.0 * (peak_efficiency - rated_efficiency) * (p - rated_power) / span;
    }
    return std::clamp(eta, 1e-3, 1.0);
}

EfficiencyMap synth_motor_map(const EfficiencyShape& shape, std::uint64_t seed) {
    shape.validate();
    EfficiencyMap map;
    map.load_axis = EfficiencyMap::LoadAxis::force;
    map.axis_load = axis_with_knots(shape.load_min, shape.load_max, shape.load_points, {0.0});
    map.axis_speed = Eigen::VectorXd::LinSpaced(shape.speed_points, 0.0, shape.speed_max);
    map.efficiency.resize(map.axis_load.size(), map.axis_speed.size());
    for (Eigen::Index c = 0; c < map.axis_speed.size(); ++c) {
        for (Eigen::Index r = 0; r < map.axis_load.size(); ++r) {
            map.efficiency(r, c) = shape(map.axis_load(r) * map.axis_speed(c));
        }
    }
    perturb(map, shape.noise, seed);
    return map;
}

EfficiencyMap synth_fuelcell_map(const EfficiencyShape& shape, std::uint64_t seed) {
    shape.validate();
    EfficiencyMap map;
    map.load_axis = EfficiencyMap::LoadAxis::power;
    map.axis_load = axis_with_knots(shape.load_min, shape.load_max, shape.load_points, {shape.knee_power});
    map.axis_speed = Eigen::VectorXd::LinSpaced(shape.speed_points, 0.0, shape.speed_max);
    map.efficiency.resize(map.axis_load.size(), map.axis_speed.size());
    for (Eigen::Index c = 0; c < map.axis_speed.size(); ++c) {
        for (Eigen::Index r = 0; r < map.axis_load.size(); ++r) {
            map.efficiency(r, c) = shape(map.axis_load(r));
        }
    }
    perturb(map, shape.noise, seed);
    return map;
}

bool slices_concave(const EfficiencyMap& map, double tol) {
    const auto& axis = map.axis_load;
    for (Eigen::Index c = 0; c < map.efficiency.cols(); ++c) {
        for (Eigen::Index r = 1; r + 1 < axis.size(); ++r) {
            if (axis(r - 1) < 0.0 && axis(r + 1) > 0.0) continue;
            const double left = (map.efficiency(r, c) - map.efficiency(r - 1, c)) / (axis(r) - axis(r - 1));
            const double right = (map.efficiency(r + 1, c) - map.efficiency(r, c)) / (axis(r + 1) - axis(r));
            if (right - left > tol) return false;
        }
    }
    return true;
}

std::pair<double, double> average_battery_efficiencies(const BatteryParams& batt) {
    constexpr int samples = 2001;
    double delivered = 0.0, drawn = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double power = batt.power_max * static_cast<double>(k) / (samples - 1);
        const double weight = (k == 0 || k == samples - 1) ? 0.5 : 1.0;
        delivered += weight * power;
        drawn += weight * power / exact_battery_efficiency(batt, power);
    }
    double absorbed = 0.0, stored = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double power = batt.power_min * static_cast<double>(k) / (samples - 1);
        const double weight = (k == 0 || k == samples - 1) ? 0.5 : 1.0;
        absorbed += weight * std::abs(power);
        stored += weight * std::abs(power) * exact_battery_efficiency(batt, power);
    }
    return {delivered / drawn, stored / absorbed};
}

double motor_electrical_force(const EfficiencyMap& motor, double force, double speed) {
    const double eta = motor.at_force(force, speed);
    return force >= 0.0 ? force / eta : force * eta;
}

double fuel_force(const EfficiencyMap& fuelcell, double force, double speed) {
    return force / fuelcell.at_force(force, speed);
}

}  // namespace htrain
