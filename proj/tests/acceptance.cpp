// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "htrain/commands.hpp"

using namespace htrain;

namespace {

using Clock = std::chrono::steady_clock;

const std::filesystem::path kConfigs = HTRAIN_CONFIG_DIR;
const std::filesystem::path kScratch = std::filesystem::path(HTRAIN_SCRATCH_DIR) / "acceptance";

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* pattern, double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, pattern, value);
    return buffer;
}

struct Case {
    std::string name;
    RunConfig config;
    htrain::Setup setup;
    OptimizeResult result;
    double seconds = 0.0;
};

Case solve_case(const std::string& name) {
    Case c;
    c.name = name;
    c.config = load_run_config(kConfigs / (name + ".json"));
    const auto start = Clock::now();
    c.setup = prepare(c.config);
    c.result = optimize(c.setup.instance, c.config.optimize);
    c.seconds = seconds_since(start);
    return c;
}

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << criterion << ": " << detail << std::endl;
    if (!pass) ++failures;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

}  // namespace

int main() {
    std::vector<Case> cases;
    for (const char* name : {"flat", "hilly", "hot"}) cases.push_back(solve_case(name));

    // 1. Tightness and runtime.
    {
        bool pass = true;
        std::ostringstream detail;
        for (const auto& c : cases) {
            const bool optimal = c.result.report.status == SolveStatus::optimal;
            const auto audit = audit_tightness(c.result.trajectory, c.setup.instance, c.config.tightness);
            int at_bound = 0;
            for (int k = 0; k < c.result.trajectory.temperature.size(); ++k) {
                at_bound += c.result.trajectory.temperature(k) >= c.setup.instance.battery.max_temperature -
                                                                    c.config.tightness.temperature_active_tol;
            }
            const bool bound_needed = c.name == "hot";
            const bool ok = optimal && audit.unconditional_pass && c.seconds <= 60.0 && (!bound_needed || at_bound > 0);
            pass = pass && ok;
            double worst = 0.0;
            for (int f = 0; f < 3; ++f) worst = std::max(worst, audit.max_slack[static_cast<std::size_t>(f)]);
            detail << c.name << " N=" << c.setup.instance.intervals() << " slack(1-3)=" << fmt("%.1e", worst)
                   << " slack(4)=" << fmt("%.1e", audit.max_slack[3]) << " t=" << fmt("%.1f", c.seconds) << "s";
            if (bound_needed) detail << " T_max nodes=" << at_bound;
            detail << "; ";
        }
        report(1, pass, detail.str() + "tol 1e-5 / 1e-3, <= 60 s");
    }

    // 2. Journey time and charge sustaining.
    {
        bool pass = true;
        double worst_time = 0.0, worst_zeta = 0.0;
        for (const auto& c : cases) {
            const auto& t = c.result.trajectory;
            const int n = t.intervals();
            const double tau = c.config.journey.target_time;
            worst_time = std::max(worst_time, std::abs(t.time(n) - tau) / tau);
            worst_zeta = std::max(worst_zeta, std::abs(t.zeta(n) - c.config.journey.zeta0));
        }
        pass = worst_time <= 1e-6 && worst_zeta <= 1e-8;
        report(2, pass, "max |t_N - tau|/tau = " + fmt("%.2e", worst_time) + " (<= 1e-6), max |zeta_N - zeta_0| = " +
                            fmt("%.2e", worst_zeta) + " (<= 1e-8)");
    }

    // 3. Physical validation.
    {
        bool pass = true;
        std::ostringstream detail;
        for (const auto& c : cases) {
            const auto sim = forward_simulate(c.result.trajectory, c.setup.instance, c.setup.components.fuelcell_map,
                                              c.config.simulation);
            const auto verdict = judge(sim, c.setup.instance, c.config.thresholds);
            pass = pass && verdict.passed();
            detail << c.name << " dv=" << fmt("%.3f", sim.max_speed_divergence) << " dzeta_N=" << fmt("%.4f", sim.soc_drift)
                   << " dT=" << fmt("%.2f", sim.max_temperature_divergence)
                   << "K excess=" << fmt("%.2f", sim.max_temperature_excess) << "K; ";
        }
        report(3, pass, detail.str() + "limits 1% of v_max, 0.005, 1 K, 1 K");
    }

    // 4. Surrogate quality.
    {
        bool pass = true;
        double worst = 0.0, min_margin = 1e300;
        for (const auto& c : cases) {
            const auto& s = c.setup.instance.surrogates;
            for (const auto* q : {&s.motor, &s.fuelcell}) {
                worst = std::max(worst, q->rms_rel_error);
                min_margin = std::min(min_margin, hessian_psd_check(*q).margin);
            }
            worst = std::max(worst, s.battery.rms_rel_error);
        }
        pass = worst <= 0.02 && min_margin >= 0.0;
        report(4, pass, "max rms relative error " + fmt("%.4f", worst) + " (<= 0.02), min PSD margin " +
                            fmt("%.3e", min_margin) + " (>= 0)");
    }

    // 5. DP oracle gap on the toy instance.
    {
        const RunConfig config = load_run_config(kConfigs / "toy.json");
        const htrain::Setup setup = prepare(config);
        const auto convex = optimize(setup.instance, config.optimize);
        const auto start = Clock::now();
        const auto dp = dp_solve(setup.instance, setup.components.motor_map, setup.components.fuelcell_map, *config.dp);
        const double dp_seconds = seconds_since(start);
        const bool grids = config.dp->speed_points == 41 && config.dp->zeta_points == 41 &&
                           config.dp->temperature_points == 21 && config.dp->time_points == 201;
        const double gap = dp.feasible ? gap_report(convex.report.objective, dp) : NAN;
        const bool pass = convex.report.status == SolveStatus::optimal && dp.feasible && grids &&
                          setup.instance.intervals() <= 12 && std::abs(gap) <= 0.05 && dp_seconds <= 600.0;
        report(5, pass, "N=" + std::to_string(setup.instance.intervals()) + " J_convex=" +
                            fmt("%.6e", convex.report.objective) + " J_dp=" + fmt("%.6e", dp.cost) + " gap=" +
                            fmt("%+.4f", gap) + " (|gap| <= 0.05) dp time " + fmt("%.0f", dp_seconds) + " s (<= 600)");
    }

    // 6. Monotone fuel in the target time.
    {
        const RunConfig base = cases.front().config;
        std::vector<double> objectives;
        bool all_optimal = true;
        std::ostringstream detail;
        for (double factor : {1.0, 1.1, 1.25}) {
            RunConfig config = base;
            config.journey.target_time = base.journey.target_time * factor;
            const htrain::Setup setup = prepare(config);
            const auto result = optimize(setup.instance, config.optimize);
            all_optimal = all_optimal && result.report.status == SolveStatus::optimal;
            objectives.push_back(result.report.objective);
            detail << "tau=" << fmt("%.0f", config.journey.target_time) << " J=" << fmt("%.6e", result.report.objective)
                   << "; ";
        }
        const bool pass = all_optimal && objectives[1] <= objectives[0] && objectives[2] <= objectives[1];
        report(6, pass, detail.str() + "non-increasing");
    }

    // 7. Zeroing the dwell speed in post-processing.
    {
        bool pass = true;
        std::ostringstream detail;
        for (const auto& c : cases) {
            SimulationOptions zeroed = c.config.simulation;
            zeroed.zero_stop_speed = true;
            const auto base = forward_simulate(c.result.trajectory, c.setup.instance, c.setup.components.fuelcell_map,
                                               c.config.simulation);
            const auto zero = forward_simulate(c.result.trajectory, c.setup.instance, c.setup.components.fuelcell_map, zeroed);
            const double dtime = std::abs(zero.journey_time - base.journey_time) / base.journey_time;
            const double dfuel = std::abs(zero.fuel - base.fuel) / base.fuel;
            pass = pass && dtime <= 1e-3 && dfuel <= 1e-3;
            detail << c.name << " dt=" << fmt("%.2e", dtime) << " dfuel=" << fmt("%.2e", dfuel) << "; ";
        }
        report(7, pass, detail.str() + "<= 1e-3 each");
    }

    // 8. Determinism of repeated optimize runs.
    {
        const Case& flat = cases.front();
        const auto again = optimize(flat.setup.instance, flat.config.optimize);
        const double drift =
            std::abs(again.report.objective - flat.result.report.objective) / std::abs(flat.result.report.objective);
        bool same_files = true;
        std::vector<std::string> csv;
        for (const char* run : {"run_a", "run_b"}) {
            RunConfig config = flat.config;
            config.output = kScratch / run;
            std::filesystem::remove_all(config.output);
            std::ostringstream log, err;
            same_files = same_files && cmd_optimize(config, log, err) == ExitCode::success;
            csv.push_back(slurp(config.output / "solution.csv"));
        }
        same_files = same_files && !csv[0].empty() && csv[0] == csv[1];
        report(8, drift <= 1e-10 && same_files,
               "objective drift " + fmt("%.1e", drift) + " (<= 1e-10), solution.csv byte-identical: " +
                   (same_files ? "yes" : "no"));
    }

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
