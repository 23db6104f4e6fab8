#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "htrain/commands.hpp"
#include "htrain/errors.hpp"

int main(int argc, char** argv) {
    using namespace htrain;

    CLI::App app{"Holistic speed, power-split and battery-thermal optimisation for hydrogen hybrid trains"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    std::string solution_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory, overrides the config");
        sub->add_option("--tol", tol, "solver tolerance, overrides the config");
        sub->add_option("--seed", seed, "seed for synthetic component maps");
    };
    auto* fit = app.add_subcommand("fit", "fit the component surrogates");
    auto* opt = app.add_subcommand("optimize", "solve the cone program and audit tightness");
    auto* val = app.add_subcommand("validate", "forward-simulate a solution on the exact models");
    auto* cmp = app.add_subcommand("compare", "compare the convex optimum with the DP oracle");
    for (auto* sub : {fit, opt, val, cmp}) add_common(sub);
    val->add_option("--solution", solution_path, "solution CSV written by optimize")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::input_error);
    }

    RunConfig config;
    try {
        config = load_run_config(config_path);
        if (out_dir) config.output = *out_dir;
        if (tol) config.set_tolerance(*tol);
        if (seed) config.seed = *seed;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::input_error);
    }

    ExitCode code = ExitCode::success;
    if (fit->parsed()) code = cmd_fit(config, std::cout, std::cerr);
    if (opt->parsed()) code = cmd_optimize(config, std::cout, std::cerr);
    if (val->parsed()) code = cmd_validate(config, solution_path, std::cout, std::cerr);
    if (cmp->parsed()) code = cmd_compare(config, std::cout, std::cerr);
    return static_cast<int>(code);
}
