#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "htrain/commands.hpp"
#include "support.hpp"

using namespace htrain;

namespace {

struct Run {
    ExitCode code;
    std::string log, err;
};

RunConfig flat_config(const std::string& scratch) {
    RunConfig config = load_run_config(test::config_dir() / "flat.json");
    config.output = test::scratch_dir(scratch);
    return config;
}

template <typename Command>
Run run(Command&& command) {
    std::ostringstream log, err;
    const ExitCode code = command(log, err);
    return {code, log.str(), err.str()};
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

int exit_status(const std::string& args) {
    const std::string command = std::string(HTRAIN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int raw = std::system(command.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

// One optimize run of the flat fixture shared by the tests below.
const std::filesystem::path& flat_optimized() {
    static const std::filesystem::path dir = [] {
        const RunConfig config = flat_config("cli_flat");
        const auto r = run([&](auto& log, auto& err) { return cmd_optimize(config, log, err); });
        EXPECT_EQ(r.code, ExitCode::success) << r.err;
        return config.output;
    }();
    return dir;
}

}  // namespace

TEST(CmdFit, WritesThreeSurrogates) {
    const RunConfig config = flat_config("cli_fit");
    const auto r = run([&](auto& log, auto& err) { return cmd_fit(config, log, err); });
    ASSERT_EQ(r.code, ExitCode::success) << r.err;
    const std::string doc = slurp(config.output / "surrogates.json");
    for (const char* block : {"\"motor\"", "\"fuelcell\"", "\"battery\""}) {
        EXPECT_NE(doc.find(block), std::string::npos) << block;
    }
    EXPECT_TRUE(std::filesystem::exists(config.output / "fit.meta.json"));
}

TEST(CmdFit, MissingComponentsIsInputError) {
    RunConfig config = flat_config("cli_missing");
    config.components = "/nowhere/components.json";
    const auto r = run([&](auto& log, auto& err) { return cmd_fit(config, log, err); });
    EXPECT_EQ(r.code, ExitCode::input_error);
    EXPECT_NE(r.err.find("/nowhere/components.json"), std::string::npos);
}

TEST(CmdFit, CeilingBreachIsFitError) {
    RunConfig config = flat_config("cli_ceiling");
    config.fit.rms_ceiling = 0.0;
    const auto r = run([&](auto& log, auto& err) { return cmd_fit(config, log, err); });
    EXPECT_EQ(r.code, ExitCode::fit_quality);
    EXPECT_NE(r.err.find("fit quality below ceiling"), std::string::npos);
}

TEST(CmdOptimize, ImpossibleTargetIsInfeasible) {
    RunConfig config = flat_config("cli_tau");
    config.journey.target_time = 1.0;
    const auto r = run([&](auto& log, auto& err) { return cmd_optimize(config, log, err); });
    EXPECT_EQ(r.code, ExitCode::infeasible);
    EXPECT_NE(r.err.find("infeasible"), std::string::npos);
}

TEST(CmdOptimize, WritesArtifactsAndRerunsAreByteIdentical) {
    const auto& first = flat_optimized();
    for (const char* name : {"solution.csv", "run.json", "tightness.json", "optimize.meta.json"}) {
        EXPECT_TRUE(std::filesystem::exists(first / name)) << name;
    }
    const RunConfig config = flat_config("cli_flat_again");
    const auto r = run([&](auto& log, auto& err) { return cmd_optimize(config, log, err); });
    ASSERT_EQ(r.code, ExitCode::success) << r.err;
    for (const char* name : {"solution.csv", "run.json", "tightness.json"}) {
        EXPECT_EQ(slurp(first / name), slurp(config.output / name)) << name;
    }
}

TEST(CmdValidate, FlatSolutionPasses) {
    const RunConfig config = flat_config("cli_validate");
    const auto r = run([&](auto& log, auto& err) { return cmd_validate(config, flat_optimized() / "solution.csv", log, err); });
    EXPECT_EQ(r.code, ExitCode::success) << r.err;
    EXPECT_NE(slurp(config.output / "simulation.json").find("\"passed\": true"), std::string::npos);
}

TEST(CmdValidate, ZeroThresholdsFail) {
    RunConfig config = flat_config("cli_thresholds");
    config.thresholds = {0.0, 0.0, 0.0, -100.0};
    const auto r = run([&](auto& log, auto& err) { return cmd_validate(config, flat_optimized() / "solution.csv", log, err); });
    EXPECT_EQ(r.code, ExitCode::validation_failure);
    EXPECT_NE(r.err.find("divergence above threshold"), std::string::npos);
}

TEST(CmdValidate, CorruptSolutionIsInputError) {
    const RunConfig config = flat_config("cli_corrupt");
    std::string text = slurp(flat_optimized() / "solution.csv");
    text.replace(text.find("\nrun,") + 5, 3, "abc");
    const auto bad = config.output / "bad.csv";
    std::ofstream(bad) << text;
    const auto r = run([&](auto& log, auto& err) { return cmd_validate(config, bad, log, err); });
    EXPECT_EQ(r.code, ExitCode::input_error);
    EXPECT_NE(r.err.find("bad.csv"), std::string::npos);
    const auto missing = run([&](auto& log, auto& err) { return cmd_validate(config, config.output / "none.csv", log, err); });
    EXPECT_EQ(missing.code, ExitCode::input_error);
}

TEST(CmdCompare, OversizedGridIsInputError) {
    RunConfig config = flat_config("cli_cap");
    config.dp = DpConfig{};
    const auto r = run([&](auto& log, auto& err) { return cmd_compare(config, log, err); });
    EXPECT_EQ(r.code, ExitCode::input_error);
    EXPECT_NE(r.err.find("exceed the DP cap of 20"), std::string::npos);
    config.dp.reset();
    EXPECT_EQ(run([&](auto& log, auto& err) { return cmd_compare(config, log, err); }).code, ExitCode::input_error);
}

TEST(Binary, ArgumentAndConfigErrors) {
    EXPECT_EQ(exit_status(""), 2);
    EXPECT_EQ(exit_status("optimize"), 2);
    EXPECT_EQ(exit_status("fit --config /nowhere/run.json"), 2);
    const auto dir = test::scratch_dir("cli_binary");
    std::ofstream(dir / "bad.json") << R"({"track": "x", "components": "y", "journey": {"target_time": 5}, "oops": 1})";
    EXPECT_EQ(exit_status("fit --config " + (dir / "bad.json").string()), 2);
    EXPECT_EQ(exit_status("fit --config " + (test::config_dir() / "flat.json").string() + " --out " + dir.string()), 0);
    EXPECT_EQ(exit_status("--help"), 0);
}

TEST(CmdOptimize, RunJsonCarriesTrajectoryAndCsvFooter) {
    const std::string run_json = slurp(flat_optimized() / "run.json");
    for (const char* key : {"\"trajectory\"", "\"lambda_t\"", "\"report\"", "\"surrogates\"", "\"schema_version\""}) {
        EXPECT_NE(run_json.find(key), std::string::npos) << key;
    }
    const std::string csv = slurp(flat_optimized() / "solution.csv");
    const std::string marker = "# schema_version=1,t_N=";
    const auto pos = csv.find(marker);
    ASSERT_NE(pos, std::string::npos);
    EXPECT_NEAR(std::stod(csv.substr(pos + marker.size())), 720.0, 1e-6 * 720.0);
    EXPECT_NE(csv.find(",tau=720\n", pos), std::string::npos);
}

TEST(CmdOptimize, OptionalProgramExport) {
    EXPECT_FALSE(std::filesystem::exists(flat_optimized() / "program.txt"));
    RunConfig config = load_run_config(test::config_dir() / "toy.json");
    config.output = test::scratch_dir("cli_export");
    config.export_program = true;
    const auto r = run([&](auto& log, auto& err) { return cmd_optimize(config, log, err); });
    ASSERT_EQ(r.code, ExitCode::success) << r.err;
    const std::string text = slurp(config.output / "program.txt");
    EXPECT_EQ(text.rfind("cone_program 1\nvariables ", 0), 0u);
    EXPECT_NE(text.find("\nsoc "), std::string::npos);
}

TEST(CmdCompare, DpInfeasibleGridIsInfeasible) {
    RunConfig config = load_run_config(test::config_dir() / "toy.json");
    config.output = test::scratch_dir("cli_dp_infeasible");
    config.dp->time_points = 2;  // every interval rounds up to the full target time
    const auto r = run([&](auto& log, auto& err) { return cmd_compare(config, log, err); });
    EXPECT_EQ(r.code, ExitCode::infeasible);
    EXPECT_NE(r.err.find("DP found no feasible grid path"), std::string::npos);
}
