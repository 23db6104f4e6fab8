#include "htrain/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "htrain/errors.hpp"

namespace htrain {

namespace {

using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

void write_json(const std::filesystem::path& path, const ordered_json& doc) { write_file(path, doc.dump(2) + "\n"); }

void write_sidecar(const RunConfig& config, const std::string& command, double seconds) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream stamp;
    stamp << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    ordered_json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["command"] = command;
    meta["timestamp"] = stamp.str();
    meta["wall_time_s"] = seconds;
    write_json(config.output / (command + ".meta.json"), meta);
}

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

ordered_json to_json(const QuadraticSurrogate& q) {
    const PsdCheck psd = hessian_psd_check(q);
    return {{"p00", q.p00}, {"p10", q.p10}, {"p01", q.p01}, {"p11", q.p11}, {"p20", q.p20}, {"p02", q.p02},
            {"force_domain", {q.force_min, q.force_max}}, {"z_domain", {q.z_min, q.z_max}},
            {"rms_rel_error", q.rms_rel_error}, {"samples", q.sample_count}, {"psd_margin", psd.margin}};
}

ordered_json to_json(const BatterySurrogate& b) {
    return {{"alpha", b.alpha}, {"beta", b.beta}, {"power_domain", {b.power_min, b.power_max}},
            {"rms_rel_error", b.rms_rel_error}, {"max_rel_error", b.max_rel_error}};
}

ordered_json to_json(const Surrogates& s) {
    return {{"motor", to_json(s.motor)}, {"fuelcell", to_json(s.fuelcell)}, {"battery", to_json(s.battery)}};
}

ordered_json to_json(const SolveReport& r) {
    return {{"status", to_string(r.status)}, {"objective", r.objective}, {"duality_gap", r.duality_gap},
            {"primal_residual", r.primal_residual}, {"dual_residual", r.dual_residual}, {"iterations", r.iterations}};
}

ordered_json to_json(const TightnessReport& t) {
    ordered_json families = ordered_json::array();
    for (int f = 0; f < kRelaxationCount; ++f) {
        const auto k = static_cast<std::size_t>(f);
        families.push_back({{"family", to_string(static_cast<Relaxation>(f))},
                            {"applicable_intervals", t.applicable_count[k]},
                            {"max_relative_slack", t.max_slack[k]},
                            {"passed", t.passed[k]}});
    }
    ordered_json intervals = ordered_json::array();
    for (const auto& row : t.intervals) {
        ordered_json entry = ordered_json::array();
        for (const auto& r : row) {
            entry.push_back({{"residual", r.residual}, {"relative_slack", r.relative_slack},
                             {"applicable", r.applicable}, {"active", r.active}});
        }
        intervals.push_back(entry);
    }
    return {{"schema_version", kSchemaVersion}, {"unconditional_pass", t.unconditional_pass},
            {"families", families}, {"intervals", intervals}};
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

ordered_json to_json(const SimulationReport& s, const ValidationVerdict& verdict) {
    return {{"schema_version", kSchemaVersion},
            {"passed", verdict.passed()},
            {"checks", {{"speed", verdict.speed_ok}, {"soc", verdict.soc_ok},
                        {"temperature", verdict.temperature_ok}, {"temperature_bound", verdict.bound_ok}}},
            {"max_speed_divergence", s.max_speed_divergence},
            {"max_zeta_divergence", s.max_zeta_divergence},
            {"soc_drift", s.soc_drift},
            {"max_temperature_divergence", s.max_temperature_divergence},
            {"max_arrival_residual", s.max_arrival_residual},
            {"max_temperature_excess", s.max_temperature_excess},
            {"journey_time", s.journey_time},
            {"fuel", s.fuel},
            {"speed", to_vector(s.speed)},
            {"zeta", to_vector(s.zeta)},
            {"temperature", to_vector(s.temperature)},
            {"time", to_vector(s.time)}};
}

ordered_json to_json(const SolutionTrajectory& t) {
    std::vector<int> stops(t.is_stop.begin(), t.is_stop.end());
    return {{"stationary", stops},
            {"position", to_vector(t.position)},
            {"width", to_vector(t.width)},
            {"z", to_vector(t.z)},
            {"zeta", to_vector(t.zeta)},
            {"temperature", to_vector(t.temperature)},
            {"time", to_vector(t.time)},
            {"speed", to_vector(t.speed)},
            {"motor_force", to_vector(t.motor_force)},
            {"brake_force", to_vector(t.brake_force)},
            {"fuelcell_force", to_vector(t.fuelcell_force)},
            {"battery_force", to_vector(t.battery_force)},
            {"cooling_force", to_vector(t.cooling_force)},
            {"discharge_force", to_vector(t.discharge_force)},
            {"charge_force", to_vector(t.charge_force)},
            {"lambda_v", to_vector(t.lambda_v)},
            {"lambda_zeta", to_vector(t.lambda_zeta)},
            {"lambda_t", to_vector(t.lambda_t)},
            {"motor_power", to_vector(t.motor_power)},
            {"fuelcell_power", to_vector(t.fuelcell_power)},
            {"battery_power", to_vector(t.battery_power)},
            {"cooling_power", to_vector(t.cooling_power)}};
}

std::string solution_csv(const SolutionTrajectory& t, double target_time) {
    std::ostringstream out;
    write_solution_csv(t, target_time, out);
    return out.str();
}

void print_tightness(const TightnessReport& t, std::ostream& log) {
    log << std::left << std::setw(18) << "family" << std::setw(12) << "applicable" << std::setw(14) << "max slack"
        << "result\n";
    for (int f = 0; f < kRelaxationCount; ++f) {
        const auto k = static_cast<std::size_t>(f);
        std::ostringstream slack;
        slack << std::scientific << std::setprecision(2) << t.max_slack[k];
        log << std::left << std::setw(18) << to_string(static_cast<Relaxation>(f)) << std::setw(12)
            << t.applicable_count[k] << std::setw(14) << slack.str() << (t.passed[k] ? "ok" : (f < 4 ? "FAIL" : "loose"))
            << '\n';
    }
}

// Maps library exceptions to the stable exit codes.
template <typename Body>
ExitCode guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const FitError& e) {
        err << "fit quality below ceiling: " << e.what() << '\n';
        return ExitCode::fit_quality;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << '\n';
        return ExitCode::infeasible;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return ExitCode::input_error;
    } catch (const DomainError& e) {
        err << "input error: " << e.what() << '\n';
        return ExitCode::input_error;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "input error: " << e.what() << '\n';
        return ExitCode::input_error;
    }
}

OptimizeResult run_optimizer(const Setup& setup, const RunConfig& config) {
    return optimize(setup.instance, config.optimize);
}

}  // namespace

ExitCode cmd_fit(const RunConfig& config, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        const auto start = Clock::now();
        const Setup setup = prepare(config);
        ordered_json doc = to_json(setup.instance.surrogates);
        doc["schema_version"] = kSchemaVersion;
        doc["seed"] = config.seed;
        write_json(config.output / "surrogates.json", doc);
        write_sidecar(config, "fit", seconds_since(start));
        const auto& s = setup.instance.surrogates;
        log << "motor    rms_rel_error " << s.motor.rms_rel_error << '\n'
            << "fuelcell rms_rel_error " << s.fuelcell.rms_rel_error << '\n'
            << "battery  rms_rel_error " << s.battery.rms_rel_error << '\n';
        return ExitCode::success;
    });
}

ExitCode cmd_optimize(const RunConfig& config, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        const auto start = Clock::now();
        const Setup setup = prepare(config);
        const OptimizeResult result = run_optimizer(setup, config);
        if (result.report.status != SolveStatus::optimal) {
            err << "solver failure: " << to_string(result.report.status) << '\n';
            write_sidecar(config, "optimize", seconds_since(start));
            return ExitCode::solver_failure;
        }
        const TightnessReport tightness = audit_tightness(result.trajectory, setup.instance, config.tightness);
        write_file(config.output / "solution.csv", solution_csv(result.trajectory, config.journey.target_time));
        ordered_json run;
        run["schema_version"] = kSchemaVersion;
        run["intervals"] = setup.instance.intervals();
        run["target_time"] = config.journey.target_time;
        run["report"] = to_json(result.report);
        run["census"] = ordered_json::object();
        for (const auto& [family, count] : result.program.census()) run["census"][to_string(family)] = count;
        run["surrogates"] = to_json(setup.instance.surrogates);
        run["trajectory"] = to_json(result.trajectory);
        write_json(config.output / "run.json", run);
        if (config.export_program) {
            std::ostringstream text;
            write_program_text(result.program, text);
            write_file(config.output / "program.txt", text.str());
        }
        write_json(config.output / "tightness.json", to_json(tightness));
        write_sidecar(config, "optimize", seconds_since(start));

        log << "status " << to_string(result.report.status) << "  objective " << std::setprecision(10)
            << result.report.objective << " J  iterations " << result.report.iterations << '\n';
        print_tightness(tightness, log);
        if (!tightness.unconditional_pass) {
            err << "tightness failure in an unconditional relaxation family\n";
            return ExitCode::validation_failure;
        }
        return ExitCode::success;
    });
}

ExitCode cmd_validate(const RunConfig& config, const std::filesystem::path& solution, std::ostream& log,
                      std::ostream& err) {
    return guarded(err, [&] {
        const auto start = Clock::now();
        std::ifstream in(solution);
        if (!in) throw InputError("cannot open solution file " + solution.string());
        SolutionTrajectory trajectory;
        try {
            trajectory = read_solution_csv(in);
        } catch (const InputError& e) {
            throw InputError(solution.string() + ": " + e.what());
        }
        const Setup setup = prepare(config);
        if (trajectory.intervals() != setup.instance.intervals()) {
            throw InputError(solution.string() + ": interval count does not match the configured route");
        }
        const SimulationReport report =
            forward_simulate(trajectory, setup.instance, setup.components.fuelcell_map, config.simulation);
        const ValidationVerdict verdict = judge(report, setup.instance, config.thresholds);
        write_json(config.output / "simulation.json", to_json(report, verdict));
        write_sidecar(config, "validate", seconds_since(start));
        log << "max speed divergence       " << report.max_speed_divergence << " m/s\n"
            << "soc drift                  " << report.soc_drift << '\n'
            << "max temperature divergence " << report.max_temperature_divergence << " K\n"
            << "max temperature excess     " << report.max_temperature_excess << " K\n"
            << "max stop arrival residual  " << report.max_arrival_residual << " m/s\n";
        if (!verdict.passed()) {
            err << "divergence above threshold\n";
            return ExitCode::validation_failure;
        }
        return ExitCode::success;
    });
}

ExitCode cmd_compare(const RunConfig& config, std::ostream& log, std::ostream& err) {
    return guarded(err, [&] {
        const auto start = Clock::now();
        if (!config.dp) throw InputError("compare requires a 'dp' section in the config");
        const Setup setup = prepare(config);
        if (setup.instance.intervals() > config.dp->interval_cap) {
            throw InputError(std::to_string(setup.instance.intervals()) + " intervals exceed the DP cap of " +
                             std::to_string(config.dp->interval_cap));
        }
        const OptimizeResult convex = run_optimizer(setup, config);
        if (convex.report.status != SolveStatus::optimal) {
            err << "solver failure: " << to_string(convex.report.status) << '\n';
            return ExitCode::solver_failure;
        }
        const DpResult dp =
            dp_solve(setup.instance, setup.components.motor_map, setup.components.fuelcell_map, *config.dp);
        if (!dp.feasible) throw InfeasibleError("DP found no feasible grid path; refine the grids");
        const double gap = gap_report(convex.report.objective, dp);

        ordered_json doc;
        doc["schema_version"] = kSchemaVersion;
        doc["convex_objective"] = convex.report.objective;
        doc["dp_objective"] = dp.cost;
        doc["relative_gap"] = gap;
        doc["dp_grid"] = {{"speed_points", static_cast<int>(dp.speed_grid.size())},
                          {"zeta_points", config.dp->zeta_points},
                          {"temperature_points", config.dp->temperature_points},
                          {"time_points", config.dp->time_points},
                          {"zeta_step", dp.zeta_step},
                          {"temperature_step", dp.temperature_step},
                          {"time_step", dp.time_step}};
        doc["dp_evaluated_states"] = dp.evaluated_states;
        write_json(config.output / "gap.json", doc);
        write_file(config.output / "convex_solution.csv", solution_csv(convex.trajectory, config.journey.target_time));
        write_file(config.output / "dp_solution.csv", solution_csv(dp.trajectory, config.journey.target_time));

        std::ostringstream side;
        side << std::setprecision(17) << "interval,position,convex_speed,dp_speed,convex_zeta,dp_zeta,"
             << "convex_temperature,dp_temperature,convex_fuelcell_force,dp_fuelcell_force\n";
        for (int i = 0; i < setup.instance.intervals(); ++i) {
            side << i << ',' << convex.trajectory.position(i) << ',' << convex.trajectory.speed(i) << ','
                 << dp.trajectory.speed(i) << ',' << convex.trajectory.zeta(i) << ',' << dp.trajectory.zeta(i) << ','
                 << convex.trajectory.temperature(i) << ',' << dp.trajectory.temperature(i) << ','
                 << convex.trajectory.fuelcell_force(i) << ',' << dp.trajectory.fuelcell_force(i) << '\n';
        }
        write_file(config.output / "compare.csv", side.str());
        write_sidecar(config, "compare", seconds_since(start));
        log << "convex " << std::setprecision(10) << convex.report.objective << " J  dp " << dp.cost
            << " J  gap " << gap << '\n';
        return ExitCode::success;
    });
}

}  // namespace htrain
