#pragma once

#include "htrain/components.hpp"

namespace htrain {

// q(F, z) = p00 + p10 z + p01 F + p11 F v + p20 z^2 + p02 F^2 with v = sqrt(z).
struct QuadraticSurrogate {
    double p00 = 0, p10 = 0, p01 = 0, p11 = 0, p20 = 0, p02 = 0;
    double force_min = 0, force_max = 0;  // fit domain in F
    double z_min = 0, z_max = 0;          // fit domain in z
    double rms_rel_error = 0;
    int sample_count = 0;

    double operator()(double force, double z) const {
        return p00 + p10 * z + p01 * force + p11 * force * std::sqrt(z) + p20 * z * z + p02 * force * force;
    }
};

// Delta zeta per second: alpha P^2 + beta P.
struct BatterySurrogate {
    double alpha = 0, beta = 0;
    double power_min = 0, power_max = 0;
    double rms_rel_error = 0;
    double max_rel_error = 0;  // pointwise, excluding P = 0

    double operator()(double power) const { return alpha * power * power + beta * power; }
};

struct FitOptions {
    double speed_min = 0.0;  // m/s, lower edge of the fitted speed range
    double speed_max = 30.0;
    int speed_points = 31;
    double rms_ceiling = 0.05;
    bool allow_cross_term = false;
};

QuadraticSurrogate fit_motor(const EfficiencyMap& map, const VehicleParams& vehicle, const FitOptions& options);
QuadraticSurrogate fit_fuelcell(const EfficiencyMap& map, const VehicleParams& vehicle, const FitOptions& options);
BatterySurrogate fit_battery(const BatteryParams& batt);

struct PsdCheck {
    bool psd = false;
    double margin = 0.0;  // smallest eigenvalue of [[2 p20, p11], [p11, 2 p02]]
};

PsdCheck hessian_psd_check(const QuadraticSurrogate& surrogate);

// Sample of a surrogate target: force, squared speed and target value.
struct FitSample {
    double force, z, target;
};

// Least-squares fit with convexity projection; exposed for testing.
QuadraticSurrogate fit_quadratic(const std::vector<FitSample>& samples, bool allow_cross_term);

}  // namespace htrain
