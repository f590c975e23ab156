#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "edgtyper/inference.hpp"

namespace edgtyper::testing {

// Answers scripted slots from a per-slot list (the n-th request for a slot
// gets entry n, the last entry repeats); everything else goes to RuleOracle.
class ScriptedOracle : public Oracle {
 public:
  explicit ScriptedOracle(std::map<std::string, std::vector<std::string>> answers);

  OracleResponse complete(const OracleRequest& request) override;
  std::string name() const override { return "scripted"; }

  int asked(const std::string& slot) const;
  const std::vector<OracleRequest>& requests() const { return requests_; }

 private:
  RuleOracle rules_;
  std::map<std::string, std::vector<std::string>> answers_;
  std::map<std::string, int> asked_;
  std::vector<OracleRequest> requests_;
};

// A conflict fixture: tests/fixtures/conflicts/<name>/{repo,script.json}.
struct ConflictScript {
  std::string name;
  std::filesystem::path repo;
  std::map<std::string, std::vector<std::string>> answers;
  std::string mis_annotated;  // the slot the script gets wrong
  std::string code;           // checker code the bad answer triggers
  std::string category;       // expected attribution
  bool persistent = false;    // the wrong answer never goes away
};

ConflictScript load_conflict_script(const std::filesystem::path& dir);
std::vector<ConflictScript> all_conflict_scripts();

std::filesystem::path fixtures_dir();

// Fresh, empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

}  // namespace edgtyper::testing
