#pragma once

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace edgtyper::testing {

// A generated type: Any, or a union of distinct members (one member = plain).
// Members are canonical `head` or `head[args]` strings; `text` is how the
// type is written, with typing aliases and Optional/Union/| spellings mixed.
struct GeneratedType {
  bool any = false;
  std::set<std::string> members;
  std::string text;
};

GeneratedType random_type(std::mt19937_64& rng);

// Set arithmetic straight from the catalog file, independent of the library.
class SimOracle {
 public:
  explicit SimOracle(const std::string& catalog_json_path);
  std::set<std::string> attrs(const GeneratedType& t) const;
  double sim(const GeneratedType& pred, const GeneratedType& truth) const;

 private:
  std::map<std::string, std::set<std::string>> types_;
};

}  // namespace edgtyper::testing
