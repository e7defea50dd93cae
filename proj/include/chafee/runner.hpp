#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chafee/config.hpp"
#include "chafee/output.hpp"

namespace chafee {

enum ExitStatus : int { kOk = 0, kConfigError = 1, kRuntimeError = 2, kPartialFailure = 3 };

struct RunOptions {
  std::size_t workers = 1;
  std::optional<std::filesystem::path> out_dir;  // overrides output.dir
  std::optional<std::uint64_t> seed;             // overrides seed
};

struct RunResult {
  int status = kOk;
  std::filesystem::path out_dir;
  std::vector<ManifestEntry> files;
  std::vector<std::string> member_failures;
};

/// Executes the configured command, writes its CSVs, the normalized config
/// and manifest.json. Member failures are recorded and give kPartialFailure;
/// anything else propagates.
RunResult run(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Maps an exception escaping run() or parse_config() to an exit status.
int exit_status_for(const std::exception& e) noexcept;

}  // namespace chafee
