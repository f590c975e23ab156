#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "edgtyper/driver.hpp"

namespace edgtyper {

// Reads a TOML-style key/value file into `config`. Recognized keys:
//   oracle (rule|http), oracle.url, oracle.model, oracle.token,
//   oracle.timeout, oracle.retries, cluster_bound, attempt_bound,
//   max_iterations, token_budget, checker.path, checker.extra_flags,
//   checker.ignored_codes.
// Throws Error(Config) on unknown keys or bad values, Error(Io) if unreadable.
void load_config_file(const std::filesystem::path& path, RunConfig& config);

// EDG_ORACLE_URL / EDG_ORACLE_TOKEN override the file.
void apply_environment(RunConfig& config);

OracleKind oracle_kind_from_string(const std::string& text);

}  // namespace edgtyper
