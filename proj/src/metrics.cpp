#include "edgtyper/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>
#include <sstream>

#include "edgtyper/error.hpp"

namespace edgtyper {

namespace assets {
extern const char* const kBuiltinAttrs;
}  // namespace assets

using nlohmann::json;

const AttrCatalog& AttrCatalog::builtin() {
  static const AttrCatalog catalog = from_json(json::parse(assets::kBuiltinAttrs));
  return catalog;
}

AttrCatalog AttrCatalog::from_json(const json& j) {
  AttrCatalog c;
  c.interpreter = j.value("interpreter", "");
  c.object_attrs = j.at("object_attrs").get<std::set<std::string>>();
  for (const auto& [name, attrs] : j.at("types").items()) {
    std::set<std::string>& dst = c.types[name];
    for (const json& a : attrs)
      if (!c.object_attrs.count(a.get<std::string>())) dst.insert(a.get<std::string>());
  }
  return c;
}

namespace {

std::string last_component(std::string_view dotted) {
  auto dot = dotted.rfind('.');
  return std::string(dot == std::string_view::npos ? dotted : dotted.substr(dot + 1));
}

// Base class names written in a class header, reduced to their heads.
std::vector<std::string> written_bases(const Entity& cls) {
  static const std::regex header(R"((?:^|\n)[ \t]*class\s+\w+\s*\(([^)]*)\))");
  std::smatch m;
  std::vector<std::string> out;
  if (!std::regex_search(cls.definition_text, m, header)) return out;
  std::string list = m[1].str();
  int depth = 0;
  std::string cur;
  auto flush = [&] {
    std::size_t b = cur.find_first_not_of(" \t\n");
    std::size_t e = cur.find_last_not_of(" \t\n");
    if (b != std::string::npos) {
      std::string base = cur.substr(b, e - b + 1);
      if (base.find('=') == std::string::npos)
        out.push_back(last_component(base.substr(0, base.find('['))));
    }
    cur.clear();
  };
  for (char ch : list) {
    if (ch == '[' || ch == '(') ++depth;
    if (ch == ']' || ch == ')') --depth;
    if (ch == ',' && depth == 0) flush();
    else cur += ch;
  }
  flush();
  return out;
}

}  // namespace

void AttrCatalog::add_user_classes(const SourceRepo& repo, const EntityIndex& index) {
  Resolver resolver(repo, index);
  std::map<std::string, std::set<std::string>> own;
  for (const auto& [id, e] : index)
    if (e.enclosing_class) own[*e.enclosing_class].insert(e.short_name);

  std::map<std::string, std::set<std::string>> done;
  std::set<std::string> visiting;
  auto collect = [&](auto&& self, const std::string& cls) -> std::set<std::string> {
    if (auto it = done.find(cls); it != done.end()) return it->second;
    if (!visiting.insert(cls).second) return {};
    std::set<std::string> attrs = own[cls];
    std::vector<std::string> resolved = resolver.bases_of(cls);
    std::set<std::string> resolved_heads;
    for (const std::string& b : resolved) {
      resolved_heads.insert(last_component(b));
      for (const std::string& a : self(self, b)) attrs.insert(a);
    }
    for (const std::string& head : written_bases(index.at(cls))) {
      if (resolved_heads.count(head)) continue;
      if (auto it = types.find(head); it != types.end())
        attrs.insert(it->second.begin(), it->second.end());
    }
    for (const std::string& a : object_attrs) attrs.erase(a);
    visiting.erase(cls);
    return done[cls] = attrs;
  };
  // Short names can collide across modules; merge them. A user class
  // shadows a catalog entry of the same name.
  std::map<std::string, std::set<std::string>> by_name;
  for (const auto& [id, e] : index) {
    if (e.kind != EntityKind::Class) continue;
    std::set<std::string> attrs = collect(collect, id);
    by_name[e.short_name].insert(attrs.begin(), attrs.end());
  }
  for (auto& [name, attrs] : by_name) {
    types[name] = std::move(attrs);
    user_classes.insert(name);
  }
}

std::set<std::string> attrs_of(const NormalizedType& t, const AttrCatalog& catalog,
                               std::vector<std::string>* warnings) {
  if (t.is_any) return {};
  if (t.is_union) {
    std::optional<std::set<std::string>> acc;
    for (const NormalizedType& m : t.args) {
      std::set<std::string> a = attrs_of(m, catalog, warnings);
      if (!acc) {
        acc = std::move(a);
        continue;
      }
      std::set<std::string> both;
      std::set_intersection(acc->begin(), acc->end(), a.begin(), a.end(),
                            std::inserter(both, both.end()));
      acc = std::move(both);
    }
    return acc.value_or(std::set<std::string>{});
  }
  auto it = catalog.types.find(t.head);
  if (it == catalog.types.end()) {
    if (warnings) warnings->push_back("no attribute entry for `" + t.head + "`");
    return {};
  }
  return it->second;
}

double type_sim(const NormalizedType& pred, const NormalizedType& truth,
                const AttrCatalog& catalog) {
  std::set<std::string> a = attrs_of(pred, catalog);
  std::set<std::string> b = attrs_of(truth, catalog);
  if (a.empty() && b.empty()) return pred == truth ? 1.0 : 0.0;
  std::size_t common = 0;
  for (const std::string& x : a) common += b.count(x);
  std::size_t all = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(all);
}

double type_sim(std::string_view pred, std::string_view truth, const AttrCatalog& catalog) {
  return type_sim(normalize_type(pred), normalize_type(truth), catalog);
}

bool type_exact(std::string_view pred, std::string_view truth) {
  return normalize_type(pred) == normalize_type(truth);
}

const char* to_string(TypeCategory c) {
  switch (c) {
    case TypeCategory::Basic: return "basic";
    case TypeCategory::Container: return "container";
    case TypeCategory::Union: return "union";
    case TypeCategory::UserDefined: return "user-defined";
    case TypeCategory::Other: return "other";
  }
  return "?";
}

TypeCategory categorize(const NormalizedType& truth, const std::set<std::string>& user_classes) {
  static const std::set<std::string> basic = {"int", "float", "str", "bytes", "None"};
  static const std::set<std::string> containers = {
      "list",     "dict",          "set",        "frozenset", "tuple",    "defaultdict",
      "deque",    "OrderedDict",   "Counter",    "ChainMap",  "Sequence", "MutableSequence",
      "Mapping",  "MutableMapping", "AbstractSet", "MutableSet", "Iterable", "Iterator",
      "Collection", "bytearray"};
  if (truth.is_union) return TypeCategory::Union;
  if (basic.count(truth.head)) return TypeCategory::Basic;
  if (containers.count(truth.head)) return TypeCategory::Container;
  if (user_classes.count(truth.head)) return TypeCategory::UserDefined;
  return TypeCategory::Other;
}

namespace {

std::map<std::string, std::string> annotated_slots(const EntityIndex& index) {
  std::map<std::string, std::string> out;
  for (const auto& [id, e] : index)
    for (const TypeSlot& s : e.slots)
      if (s.annotation) out[s.slot_id] = *s.annotation;
  return out;
}

std::set<std::string> all_slots(const EntityIndex& index) {
  std::set<std::string> out;
  for (const auto& [id, e] : index)
    for (const TypeSlot& s : e.slots) out.insert(s.slot_id);
  return out;
}

}  // namespace

void summarize(EvalReport& r) {
  r.categories.clear();
  double sim = 0;
  std::size_t exact = 0;
  std::map<TypeCategory, std::pair<double, std::size_t>> acc;
  for (const SlotEval& e : r.records) {
    sim += e.sim;
    exact += e.exact;
    CategoryStats& c = r.categories[e.category];
    ++c.count;
    acc[e.category].first += e.sim;
    acc[e.category].second += e.exact;
  }
  std::size_t n = r.records.size();
  r.mean_sim = n ? sim / static_cast<double>(n) : 0.0;
  r.exact_rate = n ? static_cast<double>(exact) / static_cast<double>(n) : 0.0;
  for (auto& [cat, stats] : r.categories) {
    stats.mean_sim = acc[cat].first / static_cast<double>(stats.count);
    stats.exact_rate = static_cast<double>(acc[cat].second) / static_cast<double>(stats.count);
  }
}

EvalReport evaluate_repo_pair(const SourceRepo& pred, const SourceRepo& truth,
                              const AttrCatalog& base_catalog) {
  EvalReport report;
  EntityIndex truth_index = extract_entities(truth).entities;
  EntityIndex pred_index = extract_entities(pred).entities;
  AttrCatalog catalog = base_catalog;
  catalog.add_user_classes(truth, truth_index);

  std::map<std::string, std::string> truth_types = annotated_slots(truth_index);
  std::map<std::string, std::string> pred_types = annotated_slots(pred_index);
  std::set<std::string> pred_all = all_slots(pred_index);
  std::set<std::string> truth_all = all_slots(truth_index);

  for (const auto& [slot, truth_text] : truth_types) {
    if (!pred_all.count(slot)) {
      report.missing_in_pred.push_back(slot);
      continue;
    }
    SlotEval e;
    e.slot = slot;
    NormalizedType t;
    try {
      t = normalize_type(truth_text);
    } catch (const Error&) {
      report.warnings.push_back(slot + ": ground truth `" + truth_text + "` does not parse");
      continue;
    }
    e.truth = t.text;
    e.category = categorize(t, catalog.user_classes);
    if (auto it = pred_types.find(slot); it != pred_types.end()) {
      try {
        NormalizedType p = normalize_type(it->second);
        e.predicted = p.text;
        e.exact = p == t;
        attrs_of(p, catalog, &report.warnings);
        attrs_of(t, catalog, &report.warnings);
        e.sim = type_sim(p, t, catalog);
      } catch (const Error&) {
        e.predicted = it->second;
        report.warnings.push_back(slot + ": prediction `" + it->second + "` does not parse");
      }
    }
    report.records.push_back(std::move(e));
  }
  for (const auto& [slot, type] : pred_types)
    if (!truth_all.count(slot)) report.missing_in_truth.push_back(slot);
  std::sort(report.warnings.begin(), report.warnings.end());
  report.warnings.erase(std::unique(report.warnings.begin(), report.warnings.end()),
                        report.warnings.end());
  summarize(report);
  return report;
}

const std::vector<std::string>& error_buckets() {
  static const std::vector<std::string> buckets = {
      "arg-type", "assignment", "attr-defined", "return-value", "call-arg",
      "override", "var-annotated", "name-defined", "other"};
  return buckets;
}

CheckerConfig counting_checker(const CheckerConfig& base) {
  CheckerConfig c = base;
  c.ignored_codes = {"has-type"};
  return c;
}

std::map<std::string, std::size_t> bucket_diagnostics(const std::vector<Diagnostic>& baseline,
                                                      const std::vector<Diagnostic>& annotated) {
  auto bucket_of = [](const std::string& code) {
    const auto& b = error_buckets();
    return std::find(b.begin(), b.end(), code) != b.end() ? code : std::string("other");
  };
  std::map<std::string, long> diff;
  for (const std::string& b : error_buckets()) diff[b] = 0;
  for (const Diagnostic& d : annotated) ++diff[bucket_of(d.code)];
  for (const Diagnostic& d : baseline) --diff[bucket_of(d.code)];
  std::map<std::string, std::size_t> out;
  std::size_t total = 0;
  for (const auto& [k, v] : diff) {
    out[k] = v > 0 ? static_cast<std::size_t>(v) : 0;
    total += out[k];
  }
  out["total"] = total;
  return out;
}

std::map<std::string, std::size_t> count_introduced_errors(const SourceRepo& baseline,
                                                           const SourceRepo& annotated,
                                                           const CheckerConfig& config) {
  CheckerConfig c = counting_checker(config);
  WorkingCopy before, after;
  before.sync(baseline);
  after.sync(annotated);
  return bucket_diagnostics(before.check(c), after.check(c));
}

json to_json(const EvalReport& r) {
  json records = json::array();
  for (const SlotEval& e : r.records) {
    json rec = {{"slot", e.slot}, {"truth", e.truth}, {"sim", e.sim}, {"exact", e.exact},
                {"category", to_string(e.category)}};
    rec["predicted"] = e.predicted ? json(*e.predicted) : json(nullptr);
    records.push_back(rec);
  }
  json cats = json::object();
  for (const auto& [c, s] : r.categories)
    cats[to_string(c)] = {{"count", s.count}, {"mean_sim", s.mean_sim},
                          {"exact_rate", s.exact_rate}};
  json j = {{"slots", r.records.size()},
            {"mean_type_sim", r.mean_sim},
            {"type_exact_rate", r.exact_rate},
            {"categories", cats},
            {"records", records},
            {"missing_in_pred", r.missing_in_pred},
            {"missing_in_truth", r.missing_in_truth},
            {"warnings", r.warnings}};
  if (!r.introduced_errors.empty()) j["introduced_errors"] = r.introduced_errors;
  return j;
}

std::string to_table(const EvalReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "slots %zu  TypeSim %.2f  TypeExact %.2f\n", r.records.size(),
                r.mean_sim, r.exact_rate);
  out << line;
  out << "category      count  TypeSim  TypeExact\n";
  for (const auto& [c, s] : r.categories) {
    std::snprintf(line, sizeof line, "%-12s  %5zu  %7.2f  %9.2f\n", to_string(c), s.count,
                  s.mean_sim, s.exact_rate);
    out << line;
  }
  if (!r.introduced_errors.empty()) {
    out << "introduced errors\n";
    for (const std::string& b : error_buckets())
      out << "  " << b << ' ' << r.introduced_errors.at(b) << '\n';
    out << "  total " << r.introduced_errors.at("total") << '\n';
  }
  if (!r.missing_in_pred.empty() || !r.missing_in_truth.empty()) {
    out << "warning: slot universes differ\n";
    for (const std::string& s : r.missing_in_pred) out << "  only in truth: " << s << '\n';
    for (const std::string& s : r.missing_in_truth) out << "  only in pred: " << s << '\n';
  }
  return out.str();
}

std::string category_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "category,count,type_sim,type_exact\n";
  char line[128];
  for (const auto& [c, s] : r.categories) {
    std::snprintf(line, sizeof line, "%s,%zu,%.4f,%.4f\n", to_string(c), s.count, s.mean_sim,
                  s.exact_rate);
    out << line;
  }
  return out.str();
}

}  // namespace edgtyper
