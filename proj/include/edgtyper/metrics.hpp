#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgtyper/frontend.hpp"
#include "edgtyper/type_expr.hpp"
#include "edgtyper/validation.hpp"

namespace edgtyper {

// Attribute sets per head type name, with the members every class inherits
// from object already removed.
struct AttrCatalog {
  std::string interpreter;
  std::set<std::string> object_attrs;
  std::map<std::string, std::set<std::string>> types;
  std::set<std::string> user_classes;  // heads contributed by a repository

  // The catalog shipped with the library.
  static const AttrCatalog& builtin();
  static AttrCatalog from_json(const nlohmann::json& j);

  // Adds every class of the repository: own members plus inherited ones.
  void add_user_classes(const SourceRepo& repo, const EntityIndex& index);
};

// attrs(T): catalog entry of the head; unions intersect their members; Any
// and unknown heads are empty (unknown heads are appended to `warnings`).
std::set<std::string> attrs_of(const NormalizedType& t, const AttrCatalog& catalog,
                               std::vector<std::string>* warnings = nullptr);

// Jaccard over attrs_of; two empty sets score 1 iff the types are equal.
// Throws Error(InvalidTypeExpression).
double type_sim(std::string_view pred, std::string_view truth, const AttrCatalog& catalog);
double type_sim(const NormalizedType& pred, const NormalizedType& truth,
                const AttrCatalog& catalog);
bool type_exact(std::string_view pred, std::string_view truth);

enum class TypeCategory { Basic, Container, Union, UserDefined, Other };
const char* to_string(TypeCategory c);
TypeCategory categorize(const NormalizedType& truth, const std::set<std::string>& user_classes);

struct SlotEval {
  std::string slot;
  std::optional<std::string> predicted;  // absent: left unannotated
  std::string truth;
  double sim = 0;
  bool exact = false;
  TypeCategory category = TypeCategory::Other;
};

struct CategoryStats {
  std::size_t count = 0;
  double mean_sim = 0;
  double exact_rate = 0;
};

struct EvalReport {
  std::vector<SlotEval> records;  // sorted by slot
  double mean_sim = 0;
  double exact_rate = 0;
  std::map<TypeCategory, CategoryStats> categories;
  // Slots annotated on one side whose id does not exist on the other.
  std::vector<std::string> missing_in_pred;
  std::vector<std::string> missing_in_truth;
  std::vector<std::string> warnings;
  std::map<std::string, std::size_t> introduced_errors;  // filled by the caller
};

// Scores every slot annotated in `truth` against `pred`, matched by slot id.
// Orphans are reported, and the intersection is still scored.
EvalReport evaluate_repo_pair(const SourceRepo& pred, const SourceRepo& truth,
                              const AttrCatalog& catalog = AttrCatalog::builtin());

// Recomputes the aggregates from the records.
void summarize(EvalReport& report);

// Buckets for introduced errors: the tracked mypy codes plus `other`.
const std::vector<std::string>& error_buckets();

// Codes counted when measuring introduced errors. `assignment` and
// `var-annotated` stay visible here even though refinement ignores them.
CheckerConfig counting_checker(const CheckerConfig& base);

// Per-bucket count of diagnostics in `annotated` beyond those in
// `baseline`, plus `total`. Throws Error(CheckerCrashed / CheckerMissing).
std::map<std::string, std::size_t> count_introduced_errors(const SourceRepo& baseline,
                                                           const SourceRepo& annotated,
                                                           const CheckerConfig& config);
// Same bucketing over already collected diagnostics.
std::map<std::string, std::size_t> bucket_diagnostics(const std::vector<Diagnostic>& baseline,
                                                      const std::vector<Diagnostic>& annotated);

nlohmann::json to_json(const EvalReport& report);
std::string to_table(const EvalReport& report);
std::string category_csv(const EvalReport& report);

}  // namespace edgtyper
