#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace semiflow {

struct RunFlags {
    unsigned threads = 0; // 0: all cores
    bool override_strip = false;
};

/// Exit codes of the command line tool.
enum ExitCode : int { exit_ok = 0, exit_error = 1, exit_verdict = 2 };

/// Runs one task on a parsed config, writing outputs and manifest.json into out_dir.
int run_task(const std::string& task, const nlohmann::json& config, const std::filesystem::path& out_dir,
             const RunFlags& flags);

/// semiflow-spectra <task> --config path.json --output dir [--threads N] [--override-strip]
int run_cli(int argc, char** argv);

} // namespace semiflow
