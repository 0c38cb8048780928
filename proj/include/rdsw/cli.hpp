// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "rdsw/cocycles.hpp"
#include "rdsw/systems.hpp"

namespace rdsw::cli {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // verify: some criterion failed
inline constexpr int kExitConfig = 2;
inline constexpr int kExitLibrary = 3;
inline constexpr int kExitIo = 4;

/// Invalid configuration; `where` is "line L, column C" for syntax errors or
/// a field path such as "system.maps[1].a".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

enum class Format { csv, json };

/// Validated experiment description. `params` holds only keys the command
/// recognizes, with defaults filled in.
struct ExperimentConfig {
  std::string command;
  std::optional<SystemSpec> system;
  std::optional<CocycleSpec> cocycle;
  std::uint64_t seed = 42;
  std::string output = "out";
  Format format = Format::csv;
  int threads = 1;
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json echo;  // resolved config written to the manifest
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"stationary", "sync", "limits",   "lyapunov", "ld",
                                              "cocycle",    "ulam", "verify",   "gallery"};
  return names;
}

/// Strict parse: unknown keys and wrong types are rejected. Values in
/// `overrides` (same schema) win over the document.
ExperimentConfig parse_config(const std::string& text, const nlohmann::json& overrides = {});
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Result files of one run (name -> bytes) before they reach the disk.
struct RunOutput {
  std::map<std::string, std::string> files;
  std::string summary;  // human-readable lines for stdout
  bool ok = true;       // false only when verify saw a failing criterion
};

/// `live`, when given, receives verify lines as each criterion finishes.
RunOutput execute(const ExperimentConfig& cfg, std::ostream* live = nullptr);

/// Writes the files plus manifest.json into `dir` (created if missing).
void write_run(const ExperimentConfig& cfg, const RunOutput& out, const std::filesystem::path& dir,
               double wall_time_seconds);

/// Runs a fixed set of configs twice each into scratch directories and
/// compares every file byte for byte, manifests with the wall time removed.
bool rerun_probe(std::string& detail);

/// Entry point behind the `rdsw` binary.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rdsw::cli
