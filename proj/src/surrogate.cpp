#include "htrain/surrogate.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace htrain {

namespace {

enum Term { constant, linear_z, linear_f, cross_fv, square_z, square_f };

double term_value(Term term, const FitSample& s) {
    switch (term) {
        case constant: return 1.0;
        case linear_z: return s.z;
        case linear_f: return s.force;
        case cross_fv: return s.force * std::sqrt(s.z);
        case square_z: return s.z * s.z;
        case square_f: return s.force * s.force;
    }
    return 0.0;
}

double& coefficient(QuadraticSurrogate& q, Term term) {
    switch (term) {
        case constant: return q.p00;
        case linear_z: return q.p10;
        case linear_f: return q.p01;
        case cross_fv: return q.p11;
        case square_z: return q.p20;
        case square_f: return q.p02;
    }
    return q.p00;
}

// Least squares over `terms` against target minus the contribution of `fixed`.
void solve_terms(const std::vector<FitSample>& samples, const std::vector<Term>& terms,
                 const QuadraticSurrogate& fixed, QuadraticSurrogate& out) {
    const auto rows = static_cast<Eigen::Index>(samples.size());
    const auto cols = static_cast<Eigen::Index>(terms.size());
    Eigen::MatrixXd design(rows, cols);
    Eigen::VectorXd rhs(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& s = samples[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < cols; ++c) design(r, c) = term_value(terms[static_cast<std::size_t>(c)], s);
        rhs(r) = s.target - fixed(s.force, s.z);
    }
    Eigen::VectorXd scale = design.colwise().lpNorm<Eigen::Infinity>().transpose();
    for (Eigen::Index c = 0; c < cols; ++c) {
        if (scale(c) == 0.0) throw FitError("rank-deficient sample set");
        design.col(c) /= scale(c);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) throw FitError("rank-deficient sample set");
    const Eigen::VectorXd solution = qr.solve(rhs).cwiseQuotient(scale);
    for (Eigen::Index c = 0; c < cols; ++c) coefficient(out, terms[static_cast<std::size_t>(c)]) = solution(c);
}

double relative_rms(const std::vector<FitSample>& samples, const QuadraticSurrogate& q) {
    double err = 0.0, ref = 0.0;
    for (const auto& s : samples) {
        const double d = q(s.force, s.z) - s.target;
        err += d * d;
        ref += s.target * s.target;
    }
    return ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);
}

void check_ceiling(const QuadraticSurrogate& q, double ceiling, const char* name) {
    if (!(q.rms_rel_error <= ceiling)) {
        std::ostringstream msg;
        msg << name << " fit quality below ceiling: rms_rel_error " << q.rms_rel_error << " > " << ceiling;
        throw FitError(msg.str());
    }
}

std::vector<double> fit_speeds(const FitOptions& options) {
    if (options.speed_points < 1 || options.speed_max < options.speed_min || options.speed_min < 0.0) {
        throw FitError("invalid fit speed range");
    }
    std::vector<double> speeds;
    for (int k = 0; k < options.speed_points; ++k) {
        const double w = options.speed_points == 1 ? 0.0 : static_cast<double>(k) / (options.speed_points - 1);
        speeds.push_back(options.speed_min + w * (options.speed_max - options.speed_min));
    }
    return speeds;
}

QuadraticSurrogate finish(const std::vector<FitSample>& samples, const FitOptions& options, const char* name) {
    if (samples.empty()) throw FitError(std::string(name) + ": no samples inside the operating envelope");
    QuadraticSurrogate q = fit_quadratic(samples, options.allow_cross_term);
    check_ceiling(q, options.rms_ceiling, name);
    return q;
}

}  // namespace

QuadraticSurrogate fit_quadratic(const std::vector<FitSample>& samples, bool allow_cross_term) {
    std::vector<Term> terms = {constant, linear_z, linear_f, square_z, square_f};
    if (allow_cross_term) terms.push_back(cross_fv);
    QuadraticSurrogate q;
    solve_terms(samples, terms, QuadraticSurrogate{}, q);

    // Project the quadratic form onto the PSD cone, then refit the remaining terms.
    Eigen::Matrix2d hessian;
    hessian << 2 * q.p20, q.p11, q.p11, 2 * q.p02;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(hessian);
    if (eig.eigenvalues().minCoeff() < 0.0) {
        const Eigen::Vector2d clipped = eig.eigenvalues().cwiseMax(0.0);
        const Eigen::Matrix2d projected = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        QuadraticSurrogate fixed;
        fixed.p20 = projected(0, 0) / 2;
        fixed.p02 = projected(1, 1) / 2;
        fixed.p11 = allow_cross_term ? projected(0, 1) : 0.0;
        q = fixed;
        solve_terms(samples, {constant, linear_z, linear_f}, fixed, q);
    }

    q.force_min = q.force_max = samples.front().force;
    q.z_min = q.z_max = samples.front().z;
    for (const auto& s : samples) {
        q.force_min = std::min(q.force_min, s.force);
        q.force_max = std::max(q.force_max, s.force);
        q.z_min = std::min(q.z_min, s.z);
        q.z_max = std::max(q.z_max, s.z);
    }
    q.sample_count = static_cast<int>(samples.size());
    q.rms_rel_error = relative_rms(samples, q);
    return q;
}

QuadraticSurrogate fit_motor(const EfficiencyMap& map, const VehicleParams& vehicle, const FitOptions& options) {
    map.validate();
    std::vector<FitSample> samples;
    for (double speed : fit_speeds(options)) {
        for (Eigen::Index r = 0; r < map.axis_load.size(); ++r) {
            double force = map.axis_load(r);
            if (map.load_axis == EfficiencyMap::LoadAxis::power) {
                if (speed <= 0.0) continue;
                force /= speed;
            }
            const double power = force * speed;
            if (force < vehicle.motor_force_min || force > vehicle.motor_force_max) continue;
            if (power < vehicle.motor_power_min || power > vehicle.motor_power_max) continue;
            samples.push_back({force, speed * speed, motor_electrical_force(map, force, speed)});
        }
    }
    return finish(samples, options, "motor");
}

QuadraticSurrogate fit_fuelcell(const EfficiencyMap& map, const VehicleParams& vehicle, const FitOptions& options) {
    map.validate();
    std::vector<FitSample> samples;
    for (double speed : fit_speeds(options)) {
        if (speed <= 0.0) continue;
        for (Eigen::Index r = 0; r < map.axis_load.size(); ++r) {
            double force = map.axis_load(r);
            if (map.load_axis == EfficiencyMap::LoadAxis::power) force /= speed;
            const double power = force * speed;
            if (force < 0.0) continue;
            if (power < vehicle.fuelcell_power_min || power > vehicle.fuelcell_power_max) continue;
            samples.push_back({force, speed * speed, fuel_force(map, force, speed)});
        }
    }
    return finish(samples, options, "fuel cell");
}

BatterySurrogate fit_battery(const BatteryParams& batt) {
    if (batt.power_max > batt.validity_power() || batt.power_min > batt.power_max) {
        throw DomainError("battery fit domain exceeds the validity bound U_oc^2/(4R)");
    }
    constexpr int points = 1001;
    Eigen::VectorXd power = Eigen::VectorXd::LinSpaced(points, batt.power_min, batt.power_max);
    Eigen::VectorXd target(points);
    for (int k = 0; k < points; ++k) target(k) = exact_delta_zeta(batt, power(k), 1.0);

    const double scale = std::max(std::abs(batt.power_min), std::abs(batt.power_max));
    const Eigen::VectorXd unit = power / scale;
    Eigen::MatrixXd design(points, 2);
    design.col(0) = unit.array().square();
    design.col(1) = unit;
    Eigen::Vector2d coef = design.colPivHouseholderQr().solve(target);
    BatterySurrogate out;
    out.alpha = coef(0) / (scale * scale);
    out.beta = coef(1) / scale;
    if (out.alpha < 0.0) {
        out.alpha = 0.0;
        out.beta = unit.dot(target) / unit.squaredNorm() / scale;
    }
    out.power_min = batt.power_min;
    out.power_max = batt.power_max;
    double err = 0.0, ref = 0.0;
    for (int k = 0; k < points; ++k) {
        const double fitted = out(power(k));
        err += (fitted - target(k)) * (fitted - target(k));
        ref += target(k) * target(k);
        if (target(k) != 0.0) {
            out.max_rel_error = std::max(out.max_rel_error, std::abs(fitted - target(k)) / std::abs(target(k)));
        }
    }
    out.rms_rel_error = std::sqrt(err / ref);
    return out;
}

PsdCheck hessian_psd_check(const QuadraticSurrogate& surrogate) {
    Eigen::Matrix2d hessian;
    hessian << 2 * surrogate.p20, surrogate.p11, surrogate.p11, 2 * surrogate.p02;
    const double margin = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(hessian).eigenvalues().minCoeff();
    return {margin >= -1e-12 * std::max(1.0, hessian.norm()), margin};
}

}  // namespace htrain
