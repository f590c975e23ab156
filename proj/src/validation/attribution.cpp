#include <algorithm>
#include <regex>

#include "edgtyper/error.hpp"
#include "edgtyper/type_expr.hpp"
#include "edgtyper/validation.hpp"

namespace edgtyper {

const char* to_string(ConflictCategory c) {
  switch (c) {
    case ConflictCategory::ParamTooPermissive: return "ParamTooPermissive";
    case ConflictCategory::ParamTooRestrictive: return "ParamTooRestrictive";
    case ConflictCategory::OverrideMismatch: return "OverrideMismatch";
    case ConflictCategory::NameUndefined: return "NameUndefined";
    case ConflictCategory::Other: return "Other";
  }
  return "?";
}

const char* to_string(RepairAction a) {
  switch (a) {
    case RepairAction::Narrow: return "Narrow";
    case RepairAction::InvalidateFunction: return "InvalidateFunction";
    case RepairAction::InvalidateParent: return "InvalidateParent";
    case RepairAction::Refine: return "Refine";
    case RepairAction::Fallback: return "Fallback";
  }
  return "?";
}

namespace {

std::string source_line(const SourceRepo& repo, const std::string& file, int line) {
  const SourceFile* f = repo.find(file);
  if (!f || line < 1) return {};
  std::size_t pos = 0;
  for (int i = 1; i < line; ++i) {
    pos = f->text.find('\n', pos);
    if (pos == std::string::npos) return {};
    ++pos;
  }
  std::size_t end = f->text.find('\n', pos);
  return f->text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

std::set<std::string> identifiers(const std::string& text) {
  static const std::regex ident(R"([A-Za-z_][A-Za-z0-9_]*)");
  std::set<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), ident); it != std::sregex_iterator();
       ++it)
    out.insert(it->str());
  return out;
}

// Line range [first, last] of the generated import block in a file.
std::optional<std::pair<int, int>> import_block_lines(const SourceRepo& repo,
                                                      const std::string& file) {
  const SourceFile* f = repo.find(file);
  if (!f) return std::nullopt;
  int line = 1, begin = 0;
  std::size_t pos = 0;
  while (pos <= f->text.size()) {
    std::size_t nl = f->text.find('\n', pos);
    std::string_view l(f->text.data() + pos,
                       (nl == std::string::npos ? f->text.size() : nl) - pos);
    if (l == kImportBlockBegin) begin = line;
    if (begin && l == kImportBlockEnd) return std::pair{begin, line};
    if (nl == std::string::npos) break;
    pos = nl + 1;
    ++line;
  }
  return std::nullopt;
}

struct Attribution {
  ConflictCategory category = ConflictCategory::Other;
  std::vector<std::string> culprits;
  std::string parent;
  std::string child;
  bool parent_applied = false;
};

class Attributor {
 public:
  Attributor(const std::vector<std::string>& applied,
             const std::map<std::string, std::string>& types, const SourceRepo& repo,
             const EntityIndex& index, const Resolver& resolver)
      : applied_(applied), types_(types), repo_(repo), index_(index), resolver_(resolver) {
    for (std::size_t i = 0; i < applied.size(); ++i) order_[applied[i]] = i;
  }

  Attribution attribute(const Diagnostic& d) const {
    Attribution a;
    if (d.code == "override" && override_rule(d, a)) return a;
    if (import_block_rule(d, a)) return a;
    if (d.code == "name-defined" && name_rule(d, a)) return a;
    if ((d.code == "arg-type" || d.code == "call-arg") && call_site_rule(d, a)) return a;
    if (enclosing_rule(d, a)) return a;
    if (mention_rule(d, a)) return a;
    a.category = ConflictCategory::Other;
    if (!applied_.empty()) a.culprits = {applied_.back()};
    return a;
  }

 private:
  std::vector<std::string> applied_of(const std::string& entity) const {
    std::vector<std::string> out;
    auto it = index_.find(entity);
    if (it == index_.end()) return out;
    for (const TypeSlot& s : it->second.slots)
      if (order_.count(s.slot_id)) out.push_back(s.slot_id);
    return out;
  }

  // The message names one argument ("Argument 2 of ...") or the return type;
  // keep only that slot when it is among the applied ones.
  std::vector<std::string> narrow_override(const std::string& message, const std::string& entity,
                                           std::vector<std::string> applied) const {
    static const std::regex arg_re(R"(^Argument (\d+) of )");
    std::string wanted;
    std::smatch m;
    auto it = index_.find(entity);
    if (it == index_.end()) return applied;
    if (std::regex_search(message, m, arg_re)) {
      std::size_t n = std::stoul(m[1].str()), i = 0;
      for (const TypeSlot& s : it->second.slots)
        if (s.slot_id.find("#param:") != std::string::npos && ++i == n) wanted = s.slot_id;
    } else if (message.rfind("Return type ", 0) == 0) {
      wanted = it->second.id + "#return";
    }
    if (wanted.empty() || !order_.count(wanted)) return applied;
    return {wanted};
  }

  // Entities containing (file, line), innermost first.
  std::vector<const Entity*> entities_at(const std::string& file, int line) const {
    std::vector<const Entity*> out;
    for (const auto& [id, e] : index_)
      if (e.span.contains(file, line)) out.push_back(&e);
    std::sort(out.begin(), out.end(), [](const Entity* a, const Entity* b) {
      int ea = a->span.end_line - a->span.start_line, eb = b->span.end_line - b->span.start_line;
      return ea != eb ? ea < eb : a->id < b->id;
    });
    return out;
  }

  std::string class_name(const Entity& e) const {
    if (!e.enclosing_class) return {};
    auto it = index_.find(*e.enclosing_class);
    return it == index_.end() ? std::string() : it->second.short_name;
  }

  std::optional<std::string> parent_method(const Entity& child) const {
    if (!child.enclosing_class) return std::nullopt;
    std::vector<std::string> queue = resolver_.bases_of(*child.enclosing_class);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      if (!seen.insert(queue[i]).second) continue;
      if (auto m = resolver_.find_member(queue[i], child.short_name)) return m;
      for (const std::string& b : resolver_.bases_of(queue[i])) queue.push_back(b);
    }
    return std::nullopt;
  }

  bool override_rule(const Diagnostic& d, Attribution& a) const {
    for (const Entity* e : entities_at(d.file, d.line)) {
      if (e->kind != EntityKind::Function || !e->enclosing_class) continue;
      auto parent = parent_method(*e);
      if (!parent) continue;
      a.category = ConflictCategory::OverrideMismatch;
      a.parent = *parent;
      a.child = e->id;
      a.culprits = narrow_override(d.message, *parent, applied_of(*parent));
      a.parent_applied = !a.culprits.empty();
      if (!a.parent_applied) a.culprits = narrow_override(d.message, e->id, applied_of(e->id));
      return !a.culprits.empty();
    }
    return false;
  }

  std::set<std::string> type_names(const std::string& slot) const {
    std::set<std::string> out;
    auto it = types_.find(slot);
    if (it == types_.end()) return out;
    try {
      for (const std::string& n : referenced_names(parse_type_expr(it->second))) {
        out.insert(n);
        out.insert(n.substr(0, n.find('.')));
        out.insert(n.substr(n.rfind('.') + 1));
      }
    } catch (const Error&) {
    }
    return out;
  }

  std::vector<std::string> applied_in_file_naming(const std::string& file,
                                                  const std::string& name,
                                                  std::optional<int> line) const {
    std::vector<std::string> out;
    for (const std::string& slot : applied_) {
      auto found = index_.find(slot_entity(slot));
      if (found == index_.end()) continue;
      const Entity& e = found->second;
      if (e.span.file != file) continue;
      const TypeSlot* s = find_slot(index_, slot);
      if (line && (!s || s->line != *line)) continue;
      if (name.empty() || type_names(slot).count(name)) out.push_back(slot);
    }
    return out;
  }

  bool import_block_rule(const Diagnostic& d, Attribution& a) const {
    auto block = import_block_lines(repo_, d.file);
    if (!block || d.line < block->first || d.line > block->second) return false;
    std::string text = source_line(repo_, d.file, d.line);
    std::string name;
    static const std::regex from_re(R"(^from\s+\S+\s+import\s+(\w+))");
    static const std::regex import_re(R"(^import\s+([\w.]+))");
    std::smatch m;
    if (std::regex_search(text, m, from_re)) name = m[1].str();
    else if (std::regex_search(text, m, import_re)) name = m[1].str();
    a.category = ConflictCategory::NameUndefined;
    a.culprits = applied_in_file_naming(d.file, name, std::nullopt);
    return !a.culprits.empty();
  }

  bool name_rule(const Diagnostic& d, Attribution& a) const {
    static const std::regex name_re(R"xx(Name "([^"]+)" is not defined)xx");
    std::smatch m;
    std::string name;
    if (std::regex_search(d.message, m, name_re)) name = m[1].str();
    a.category = ConflictCategory::NameUndefined;
    a.culprits = applied_in_file_naming(d.file, name, d.line);
    if (a.culprits.empty() && !name.empty())
      a.culprits = applied_in_file_naming(d.file, name, std::nullopt);
    return !a.culprits.empty();
  }

  bool call_site_rule(const Diagnostic& d, Attribution& a) const {
    static const std::regex callee_re(R"xx((?:to|for) "([^"]+)"(?: of "([^"]+)")?)xx");
    static const std::regex arg_re(R"xx(^Argument (\d+)|^Argument "([^"]+)")xx");
    std::smatch m;
    if (!std::regex_search(d.message, m, callee_re)) return false;
    std::string callee = m[1].str();
    std::string owner = m[2].matched ? m[2].str() : "";
    std::smatch am;
    int position = 0;
    std::string keyword;
    if (std::regex_search(d.message, am, arg_re)) {
      if (am[1].matched) position = std::stoi(am[1].str());
      else keyword = am[2].str();
    }
    std::vector<std::string> culprits;
    for (const auto& [id, e] : index_) {
      if (e.kind != EntityKind::Function) continue;
      bool match = false;
      if (e.short_name == callee)
        match = owner.empty() || !e.enclosing_class || class_name(e) == owner;
      // Constructor calls are reported against the class name.
      if (e.short_name == "__init__" && class_name(e) == callee) match = true;
      if (!match) continue;
      std::vector<std::string> params;
      for (const TypeSlot& s : e.slots)
        if (s.role != "return") params.push_back(s.slot_id);
      std::string chosen;
      if (position >= 1 && position <= static_cast<int>(params.size()))
        chosen = params[position - 1];
      if (!keyword.empty()) chosen = make_slot_id(id, "param:" + keyword);
      if (!chosen.empty() && order_.count(chosen)) {
        culprits.push_back(chosen);
        continue;
      }
      for (const std::string& p : params)
        if (order_.count(p)) culprits.push_back(p);
    }
    if (culprits.empty()) return false;
    a.category = ConflictCategory::ParamTooRestrictive;
    a.culprits = culprits;
    return true;
  }

  bool enclosing_rule(const Diagnostic& d, Attribution& a) const {
    std::set<std::string> words = identifiers(source_line(repo_, d.file, d.line));
    for (const Entity* e : entities_at(d.file, d.line)) {
      std::vector<std::string> slots = applied_of(e->id);
      if (slots.empty()) continue;
      if (e->kind == EntityKind::Variable) {
        a.category = ConflictCategory::Other;
        a.culprits = slots;
        return true;
      }
      a.category = ConflictCategory::ParamTooPermissive;
      std::string ret = make_slot_id(e->id, "return");
      if (d.code == "return-value" && order_.count(ret)) {
        a.culprits = {ret};
        return true;
      }
      for (const std::string& s : slots) {
        std::string role = slot_role(s);
        if (role.starts_with("param:") && words.count(role.substr(6))) a.culprits.push_back(s);
      }
      if (a.culprits.empty()) a.culprits = slots;
      return true;
    }
    return false;
  }

  bool mention_rule(const Diagnostic& d, Attribution& a) const {
    std::set<std::string> words = identifiers(source_line(repo_, d.file, d.line));
    std::vector<std::string> culprits;
    for (const std::string& slot : applied_) {
      auto found = index_.find(slot_entity(slot));
      if (found == index_.end()) continue;
      const Entity& e = found->second;
      if (!words.count(e.short_name)) continue;
      if (e.kind == EntityKind::Function && slot_role(slot) != "return") continue;
      culprits.push_back(slot);
    }
    if (culprits.empty()) return false;
    a.category = ConflictCategory::Other;
    a.culprits = culprits;
    return true;
  }

  const std::vector<std::string>& applied_;
  const std::map<std::string, std::string>& types_;
  const SourceRepo& repo_;
  const EntityIndex& index_;
  const Resolver& resolver_;
  std::map<std::string, std::size_t> order_;
};

}  // namespace

std::vector<ConflictReport> attribute_conflicts(const std::vector<Diagnostic>& diags,
                                                const std::vector<std::string>& applied,
                                                const std::map<std::string, std::string>& types,
                                                const SourceRepo& repo, const EntityIndex& index,
                                                const Resolver& resolver) {
  Attributor attributor(applied, types, repo, index, resolver);
  std::map<std::tuple<int, std::vector<std::string>, std::string, std::string>, ConflictReport>
      groups;
  for (const Diagnostic& d : diags) {
    Attribution a = attributor.attribute(d);
    std::sort(a.culprits.begin(), a.culprits.end());
    a.culprits.erase(std::unique(a.culprits.begin(), a.culprits.end()), a.culprits.end());
    auto key = std::tuple{static_cast<int>(a.category), a.culprits, a.parent, a.child};
    ConflictReport& r = groups[key];
    r.category = a.category;
    r.culprit_slots = a.culprits;
    r.parent_entity = a.parent;
    r.child_entity = a.child;
    r.parent_applied = a.parent_applied;
    r.diagnostics.push_back(d);
  }
  std::vector<ConflictReport> out;
  for (auto& [k, r] : groups) out.push_back(std::move(r));
  return out;
}

namespace {

// First line of a definition (the `def` line, decorators skipped).
std::string signature_of(const EntityIndex& index, const std::string& entity) {
  auto it = index.find(entity);
  if (it == index.end()) return entity;
  const std::string& text = it->second.definition_text;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    std::size_t first = line.find_first_not_of(" \t");
    if (first != std::string::npos &&
        (line.compare(first, 4, "def ") == 0 || line.compare(first, 10, "async def ") == 0))
      return line.substr(first);
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return entity;
}

}  // namespace

std::vector<Resolution> resolve_conflict(const ConflictReport& report, const SlotTable& slots,
                                         const EntityIndex& index, const SourceRepo& repo,
                                         int attempt_bound) {
  std::string messages;
  for (const Diagnostic& d : report.diagnostics) {
    if (!messages.empty()) messages += "; ";
    messages += to_string(d);
  }
  std::vector<Resolution> out;
  for (const std::string& slot : report.culprit_slots) {
    Resolution r;
    r.slot = slot;
    r.entity = slot_entity(slot);
    auto it = slots.find(slot);
    int attempts = it == slots.end() ? 0 : it->second.attempts;
    std::string tag = "[" + slot + "] ";
    if (attempts >= attempt_bound) {
      r.action = RepairAction::Fallback;
      r.feedback = tag + "fell back to Any after " + std::to_string(attempts) + " attempts: " +
                   messages;
      out.push_back(std::move(r));
      continue;
    }
    switch (report.category) {
      case ConflictCategory::ParamTooPermissive:
        r.action = RepairAction::Narrow;
        r.feedback = tag + "the annotation is too permissive for the function body: " + messages;
        break;
      case ConflictCategory::ParamTooRestrictive: {
        r.action = RepairAction::InvalidateFunction;
        std::string sites;
        for (const Diagnostic& d : report.diagnostics)
          sites += " | call site " + d.file + ":" + std::to_string(d.line) + ": " +
                   source_line(repo, d.file, d.line);
        r.feedback = tag + "the annotation rejects an argument passed at a call site: " +
                     messages + sites;
        break;
      }
      case ConflictCategory::OverrideMismatch:
        if (report.parent_applied) {
          r.action = RepairAction::InvalidateParent;
          r.feedback = tag + "must stay compatible with the overriding method `" +
                       signature_of(index, report.child_entity) + "`: " + messages;
        } else {
          r.action = RepairAction::Refine;
          r.feedback = tag + "must match the overridden method `" +
                       signature_of(index, report.parent_entity) + "`: " + messages;
        }
        break;
      case ConflictCategory::NameUndefined:
      case ConflictCategory::Other:
        r.action = RepairAction::Refine;
        r.feedback = tag + messages;
        break;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace edgtyper
