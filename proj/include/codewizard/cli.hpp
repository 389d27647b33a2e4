/*
 * Copyright 2026 The Code Wizard Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CODEWIZARD_CLI_HPP
#define CODEWIZARD_CLI_HPP

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "codewizard/metrics.hpp"
#include "codewizard/storage.hpp"

namespace codewizard::cli {

/// Exit codes: clean, domain findings (violations, refused metrics,
/// rejected comparisons), operational failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitError = 2;

inline constexpr const char* kProjectEnv = "CODEWIZARD_PROJECT";

/// Resolved settings. Command-line flags win over the config file, which
/// wins over the environment, which wins over built-in defaults.
struct CliConfig {
  std::filesystem::path project;
  std::optional<int> round;
  ExportFormat format = ExportFormat::kJson;
  ShadeThresholds thresholds;
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Reads a JSON config file with any of the keys "project", "round",
/// "format", "shade_thresholds" {"medium", "light"}, "host", "port".
/// Throws StorageError on unreadable or malformed files.
void ApplyConfigFile(const std::filesystem::path& path, CliConfig& config);

/// Entry point of the `codewizard` tool.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace codewizard::cli

#endif  // CODEWIZARD_CLI_HPP
