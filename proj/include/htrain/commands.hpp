#pragma once

#include <filesystem>
#include <ostream>

#include "htrain/config.hpp"

namespace htrain {

enum class ExitCode : int {
    success = 0,
    input_error = 2,
    fit_quality = 3,
    infeasible = 4,
    solver_failure = 5,
    validation_failure = 6,
};

// Each command writes its artifacts under config.output, a summary to `log`
// and errors to `err`. Timestamps go to a per-command metadata sidecar only.
ExitCode cmd_fit(const RunConfig& config, std::ostream& log, std::ostream& err);
ExitCode cmd_optimize(const RunConfig& config, std::ostream& log, std::ostream& err);
ExitCode cmd_validate(const RunConfig& config, const std::filesystem::path& solution, std::ostream& log,
                      std::ostream& err);
ExitCode cmd_compare(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace htrain
