#include <httplib.h>

#include "edgtyper/error.hpp"
#include "edgtyper/inference.hpp"

namespace edgtyper {

namespace assets {
extern const char* const kInferTypesPrompt;
extern const char* const kFindMissingPrompt;
}  // namespace assets

namespace {

void replace_all(std::string& text, std::string_view key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
}

}  // namespace

std::string render_prompt(const OracleRequest& request) {
  const InferenceContext& ctx = request.context;
  std::string text = request.task == OracleTask::InferTypes ? assets::kInferTypesPrompt
                                                            : assets::kFindMissingPrompt;
  std::string defs, deps, feedback, targets;
  for (const auto& [id, code] : ctx.member_definitions) defs += "# " + id + "\n" + code + "\n\n";
  for (const DependencySummary& d : ctx.dependency_summaries)
    deps += d.slot + ": " + d.type + "\n";
  for (const std::string& f : ctx.feedback) feedback += f + "\n";
  for (const std::string& t : ctx.targets) targets += (targets.empty() ? "" : ", ") + t;
  replace_all(text, "{definitions}", defs);
  replace_all(text, "{dependencies}", deps.empty() ? "(none)\n" : deps);
  replace_all(text, "{feedback}", feedback.empty() ? "(none)\n" : feedback);
  replace_all(text, "{targets}", targets);
  return text;
}

HttpOracle::HttpOracle(HttpOracleConfig config) : config_(std::move(config)) {
  const std::string& url = config_.url;
  if (!url.starts_with("http://"))
    throw Error(ErrorKind::Config, "oracle URL must start with http:// : " + url);
  std::size_t slash = url.find('/', 7);
  scheme_host_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

OracleResponse HttpOracle::complete(const OracleRequest& request) {
  nlohmann::json body = to_json(request);
  body["prompt"] = render_prompt(request);
  if (!config_.model.empty()) body["model"] = config_.model;
  httplib::Client client(scheme_host_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  if (!config_.token.empty()) client.set_bearer_token_auth(config_.token);
  std::string last_error;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Error(ErrorKind::OracleUnavailable,
                  "oracle returned HTTP " + std::to_string(res->status));
    nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded())
      throw Error(ErrorKind::MalformedResponse, "oracle response is not JSON");
    return response_from_json(parsed, request.task);
  }
  throw Error(ErrorKind::OracleUnavailable,
              "oracle at " + config_.url + " unreachable: " + last_error);
}

}  // namespace edgtyper
