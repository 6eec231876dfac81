// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "alignrank/rank.hpp"

namespace alignrank::app {

// Each command returns the process exit status: 0 on success, 1 when the
// input was read but reported errors, 2 on usage or configuration problems.

int cmd_validate(const std::filesystem::path& corpus_path, bool as_json, std::ostream& out,
                 std::ostream& err);

int cmd_embed(const std::filesystem::path& corpus_path,
              const std::filesystem::path& providers_path,
              const std::filesystem::path& cache_dir, std::ostream& out, std::ostream& err);

struct EvaluateArgs {
    std::filesystem::path corpus_path;
    std::filesystem::path providers_path;
    std::filesystem::path cache_dir;
    std::filesystem::path out_dir;
    rank::ReferencePolicy policy;
    std::string timestamp;
    bool include_baseline = true;
};

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);

struct StatsArgs {
    std::filesystem::path input;
    double alpha = 0.05;
    bool tie_correction = true;
    bool as_json = false;
    std::optional<std::filesystem::path> out_path;  // JSON report file
    std::optional<std::uint64_t> seed;              // recorded in provenance only
    std::string timestamp;
};

int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err);
int cmd_learner(const StatsArgs& args, std::ostream& out, std::ostream& err);

/// CLI entry point: parses argv and dispatches to the commands above.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace alignrank::app
