#include "htrain/solution.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "htrain/errors.hpp"

namespace htrain {

namespace {

constexpr std::array<const char*, 24> kColumns = {
    "kind",     "s_m",      "ds_m",     "z_m2ps2",  "v_mps",       "zeta",       "T_K",      "t_s",
    "F_m_N",    "F_brk_N",  "F_fc_N",   "F_batt_N", "F_act_N",     "F_dis_N",    "F_chr_N",  "lambda_v_spm",
    "lambda_zeta", "lambda_T", "P_m_W", "P_fc_W",   "P_batt_W",    "P_act_W",    "stationary", "interval"};

std::string format_number(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

double parse_field(const std::string& text, int line, const char* column) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw InputError("solution CSV line " + std::to_string(line) + ": column '" + column + "' is not a number");
    }
    return value;
}

}  // namespace

void SolutionTrajectory::resize(int n) {
    is_stop.assign(static_cast<std::size_t>(n), 0);
    for (auto* nodes : {&position, &z, &zeta, &temperature, &time}) nodes->setZero(n + 1);
    for (auto* per : {&width, &speed, &motor_force, &brake_force, &fuelcell_force, &battery_force, &cooling_force,
                      &discharge_force, &charge_force, &lambda_v, &lambda_zeta, &lambda_t, &motor_power,
                      &fuelcell_power, &battery_power, &cooling_power}) {
        per->setZero(n);
    }
}

std::pair<SolveReport, Eigen::VectorXd> solve(const ConeProgram& program, const SolverSettings& settings) {
    const auto start = std::chrono::steady_clock::now();
    const SolverResult result = solve_cone_program(program, settings);
    SolveReport report;
    report.status = result.status;
    report.objective = result.primal_objective;
    report.duality_gap = result.relative_gap;
    report.primal_residual = result.primal_residual;
    report.dual_residual = result.dual_residual;
    report.iterations = result.iterations;
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {report, result.x};
}

std::pair<SolveReport, Eigen::VectorXd> solve(const ConeProgram& program, double tol) {
    SolverSettings settings;
    settings.reltol = tol;
    settings.feastol = tol;
    settings.abstol = tol;
    return solve(program, settings);
}

SolutionTrajectory extract(const ConeProgram& program, const Eigen::VectorXd& raw) {
    const auto& layout = program.layout;
    const int n = layout.intervals;
    if (program.grid.size() != n || raw.size() != program.num_vars) {
        throw InputError("extract: solution vector does not match the program layout");
    }
    SolutionTrajectory out;
    out.resize(n);
    double position = 0.0;
    double elapsed = 0.0;
    for (int node = 0; node <= n; ++node) {
        out.z(node) = raw(layout.z(node));
        out.zeta(node) = raw(layout.zeta(node));
        out.temperature(node) = raw(layout.temperature(node));
        out.time(node) = elapsed;
        if (node == n) {
            out.position(node) = position;
            break;
        }
        const auto& interval = program.grid[node];
        position = interval.is_stop ? interval.start : std::max(position, interval.start);
        out.position(node) = position;
        out.is_stop[static_cast<std::size_t>(node)] = interval.is_stop ? 1 : 0;
        out.width(node) = interval.width;
        const double v = raw(layout.speed(node));
        out.speed(node) = v;
        out.motor_force(node) = raw(layout.motor_force(node));
        out.brake_force(node) = raw(layout.brake_force(node));
        out.fuelcell_force(node) = raw(layout.fuelcell_force(node));
        out.battery_force(node) = raw(layout.battery_force(node));
        out.cooling_force(node) = raw(layout.cooling_force(node));
        out.discharge_force(node) = raw(layout.discharge_force(node));
        out.charge_force(node) = raw(layout.charge_force(node));
        out.lambda_v(node) = raw(layout.lambda_v(node));
        out.lambda_zeta(node) = raw(layout.lambda_zeta(node));
        out.lambda_t(node) = raw(layout.lambda_t(node));
        out.motor_power(node) = out.motor_force(node) * v;
        out.fuelcell_power(node) = out.fuelcell_force(node) * v;
        out.battery_power(node) = out.battery_force(node) * v;
        out.cooling_power(node) = out.cooling_force(node) * v;
        elapsed += interval.width * out.lambda_v(node);
        if (!interval.is_stop) position += interval.width;
    }
    return out;
}

void write_solution_csv(const SolutionTrajectory& t, double target_time, std::ostream& out) {
    for (std::size_t k = 0; k < kColumns.size(); ++k) out << (k ? "," : "") << kColumns[k];
    out << '\n';
    const int n = t.intervals();
    for (int k = 0; k <= n; ++k) {
        const bool end = k == n;
        const bool stop = !end && t.is_stop[static_cast<std::size_t>(k)];
        auto interval_value = [&](const Eigen::VectorXd& column) { return end ? 0.0 : column(k); };
        const double v = end ? std::sqrt(std::max(t.z(k), 0.0)) : t.speed(k);
        const std::array<double, 21> values = {
            t.position(k),
            interval_value(t.width),
            t.z(k),
            v,
            t.zeta(k),
            t.temperature(k),
            t.time(k),
            interval_value(t.motor_force),
            interval_value(t.brake_force),
            interval_value(t.fuelcell_force),
            interval_value(t.battery_force),
            interval_value(t.cooling_force),
            interval_value(t.discharge_force),
            interval_value(t.charge_force),
            interval_value(t.lambda_v),
            interval_value(t.lambda_zeta),
            interval_value(t.lambda_t),
            interval_value(t.motor_power),
            interval_value(t.fuelcell_power),
            interval_value(t.battery_power),
            interval_value(t.cooling_power),
        };
        out << (end ? "end" : stop ? "stop" : "run");
        for (double value : values) out << ',' << format_number(value);
        out << ',' << (stop ? 1 : 0) << ',' << k << '\n';
    }
    out << "# schema_version=1,t_N=" << format_number(t.time(n)) << ",tau=" << format_number(target_time) << '\n';
}

SolutionTrajectory read_solution_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("solution CSV: empty file");
    {
        std::stringstream header(line);
        std::string name;
        std::size_t k = 0;
        while (std::getline(header, name, ',')) {
            if (k >= kColumns.size() || name != kColumns[k]) {
                throw InputError("solution CSV: unexpected column '" + name + "' at position " + std::to_string(k));
            }
            ++k;
        }
        if (k != kColumns.size()) throw InputError("solution CSV: missing columns in header");
    }
    std::vector<std::vector<std::string>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> fields;
        std::stringstream stream(line);
        std::string field;
        while (std::getline(stream, field, ',')) fields.push_back(field);
        if (fields.size() != kColumns.size()) {
            throw InputError("solution CSV line " + std::to_string(line_no) + ": expected " +
                             std::to_string(kColumns.size()) + " fields");
        }
        rows.push_back(std::move(fields));
    }
    if (rows.size() < 2 || rows.back()[0] != "end") throw InputError("solution CSV: missing terminal row");
    const int n = static_cast<int>(rows.size()) - 1;
    SolutionTrajectory t;
    t.resize(n);
    for (int k = 0; k <= n; ++k) {
        const auto& f = rows[static_cast<std::size_t>(k)];
        const int line = k + 2;
        auto num = [&](std::size_t column) { return parse_field(f[column], line, kColumns[column]); };
        const std::string& kind = f[0];
        if ((k == n) != (kind == "end") || (kind != "run" && kind != "stop" && kind != "end")) {
            throw InputError("solution CSV line " + std::to_string(line) + ": invalid kind '" + kind + "'");
        }
        t.position(k) = num(1);
        t.z(k) = num(3);
        t.zeta(k) = num(5);
        t.temperature(k) = num(6);
        t.time(k) = num(7);
        if (k == n) break;
        t.is_stop[static_cast<std::size_t>(k)] = kind == "stop" ? 1 : 0;
        t.width(k) = num(2);
        t.speed(k) = num(4);
        Eigen::VectorXd* columns[] = {&t.motor_force,  &t.brake_force,  &t.fuelcell_force, &t.battery_force,
                                      &t.cooling_force, &t.discharge_force, &t.charge_force, &t.lambda_v,
                                      &t.lambda_zeta,  &t.lambda_t,     &t.motor_power,   &t.fuelcell_power,
                                      &t.battery_power, &t.cooling_power};
        for (std::size_t c = 0; c < std::size(columns); ++c) (*columns[c])(k) = num(8 + c);
    }
    return t;
}

OptimizeResult optimize(const ProblemInstance& instance, const OptimizeOptions& options) {
    ProblemInstance current = instance;
    OptimizeResult result;
    double total_time = 0.0;
    for (int round = 0; round <= options.mccormick_refinements; ++round) {
        result.program = build(current);
        auto [report, raw] = solve(result.program, options.solver);
        total_time += report.wall_time;
        result.report = report;
        result.raw = raw;
        if (report.status != SolveStatus::optimal) break;
        result.trajectory = extract(result.program, raw);
        if (round == options.mccormick_refinements) break;
        std::vector<Box> boxes;
        for (int i = 0; i < current.intervals(); ++i) {
            const Box base = instance.lambda_box(i);
            const double lam = result.trajectory.lambda_v(i);
            if (current.grid[i].is_stop) {
                boxes.push_back(base);
            } else {
                boxes.push_back({std::max(base.lo, lam * (1.0 - options.refinement_width)),
                                 std::min(base.hi, lam * (1.0 + options.refinement_width))});
            }
        }
        current.lambda_boxes = boxes;
    }
    result.report.wall_time = total_time;
    if (result.report.status == SolveStatus::infeasible) throw InfeasibleError("solver certified primal infeasibility");
    if (result.report.status == SolveStatus::optimal) result.report.objective = fuel_objective(current, result.raw);
    return result;
}

}  // namespace htrain
