#include "edgtyper/config.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>

#include "edgtyper/error.hpp"

namespace edgtyper {

OracleKind oracle_kind_from_string(const std::string& text) {
  if (text == "rule") return OracleKind::Rule;
  if (text == "http") return OracleKind::Http;
  throw Error(ErrorKind::Config, "unknown oracle `" + text + "` (expected rule or http)");
}

namespace {

long to_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long n = std::stol(value, &used);
    if (used == value.size() && n >= 0) return n;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Config, key + ": expected a non-negative integer, got `" + value + "`");
}

const std::string& single(const CLI::ConfigItem& item) {
  if (item.inputs.size() != 1)
    throw Error(ErrorKind::Config, item.fullname() + ": expected a single value");
  return item.inputs.front();
}

}  // namespace

void load_config_file(const std::filesystem::path& path, RunConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config file " + path.string());
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string key = item.fullname();
    if (key == "oracle" || key == "oracle.kind") {
      config.oracle = oracle_kind_from_string(single(item));
    } else if (key == "oracle.url") {
      config.http.url = single(item);
    } else if (key == "oracle.model") {
      config.http.model = single(item);
    } else if (key == "oracle.token") {
      config.http.token = single(item);
    } else if (key == "oracle.timeout") {
      config.http.timeout = std::chrono::seconds(to_number(key, single(item)));
    } else if (key == "oracle.retries") {
      config.http.retries = static_cast<int>(to_number(key, single(item)));
    } else if (key == "cluster_bound") {
      config.cluster_bound = static_cast<std::size_t>(to_number(key, single(item)));
    } else if (key == "attempt_bound") {
      config.attempt_bound = static_cast<int>(to_number(key, single(item)));
    } else if (key == "max_iterations") {
      config.max_iterations = static_cast<int>(to_number(key, single(item)));
    } else if (key == "token_budget") {
      config.token_budget = static_cast<std::size_t>(to_number(key, single(item)));
    } else if (key == "checker.path") {
      config.checker.path = single(item);
    } else if (key == "checker.extra_flags") {
      config.checker.extra_flags = item.inputs;
    } else if (key == "checker.ignored_codes") {
      config.checker.ignored_codes = {item.inputs.begin(), item.inputs.end()};
    } else {
      throw Error(ErrorKind::Config, path.string() + ": unknown key `" + key + "`");
    }
  }
}

void apply_environment(RunConfig& config) {
  if (const char* url = std::getenv("EDG_ORACLE_URL"); url && *url) config.http.url = url;
  if (const char* token = std::getenv("EDG_ORACLE_TOKEN"); token && *token)
    config.http.token = token;
}

}  // namespace edgtyper
