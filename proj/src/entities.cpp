#include <algorithm>

#include "edgtyper/error.hpp"
#include "edgtyper/frontend.hpp"
#include "frontend_internal.hpp"

namespace edgtyper {

using python::Assignment;
using python::Module;
using python::Stmt;
using python::StmtKind;
using python::TokRange;

const char* to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Variable: return "Variable";
    case EntityKind::Function: return "Function";
    case EntityKind::Class: return "Class";
  }
  return "?";
}

const char* to_string(SlotState state) {
  switch (state) {
    case SlotState::Unannotated: return "Unannotated";
    case SlotState::Inferred: return "Inferred";
    case SlotState::Validated: return "Validated";
    case SlotState::Fallback: return "Fallback";
  }
  return "?";
}

SlotState slot_state_from_string(std::string_view text) {
  if (text == "Inferred") return SlotState::Inferred;
  if (text == "Validated") return SlotState::Validated;
  if (text == "Fallback") return SlotState::Fallback;
  if (text == "Unannotated") return SlotState::Unannotated;
  throw Error(ErrorKind::CorruptCheckpoint, "unknown slot state: " + std::string(text));
}

const char* to_string(RefKind kind) {
  switch (kind) {
    case RefKind::Call: return "call";
    case RefKind::Read: return "read";
    case RefKind::Write: return "write";
    case RefKind::Inherit: return "inherit";
  }
  return "?";
}

std::string make_slot_id(std::string_view entity, std::string_view role) {
  return std::string(entity) + "#" + std::string(role);
}

std::string slot_entity(std::string_view slot_id) {
  return std::string(slot_id.substr(0, slot_id.rfind('#')));
}

std::string slot_role(std::string_view slot_id) {
  auto hash = slot_id.rfind('#');
  return hash == std::string_view::npos ? std::string() : std::string(slot_id.substr(hash + 1));
}

bool CodeSpan::contains(const CodeSpan& o) const {
  if (o.file != file) return false;
  auto before = [](int l1, int c1, int l2, int c2) { return l1 < l2 || (l1 == l2 && c1 <= c2); };
  return before(start_line, start_col, o.start_line, o.start_col) &&
         before(o.end_line, o.end_col, end_line, end_col);
}

const TypeSlot* find_slot(const EntityIndex& index, std::string_view slot_id) {
  auto it = index.find(slot_entity(slot_id));
  if (it == index.end()) return nullptr;
  for (const TypeSlot& s : it->second.slots)
    if (s.slot_id == slot_id) return &s;
  return nullptr;
}

const Entity* entity_at(const EntityIndex& index, std::string_view file, int line) {
  const Entity* best = nullptr;
  auto extent = [](const CodeSpan& s) { return s.end_line - s.start_line; };
  for (const auto& [id, e] : index) {
    if (!e.span.contains(file, line)) continue;
    if (!best || extent(e.span) < extent(best->span) ||
        (extent(e.span) == extent(best->span) && best->span.contains(e.span)))
      best = &e;
  }
  return best;
}

namespace detail {

std::size_t line_start(const std::string& text, std::size_t offset) {
  while (offset > 0 && text[offset - 1] != '\n') --offset;
  return offset;
}

python::Module parse_or_throw(const SourceFile& file) {
  try {
    return python::Module(file.text);
  } catch (const python::SyntaxError& e) {
    throw Error(ErrorKind::Parse,
                file.path + ":" + std::to_string(e.line) + ": " + e.message);
  }
}

std::vector<ParsedFile> parse_repo(const SourceRepo& repo, std::vector<ParseFailure>* errors) {
  std::vector<ParsedFile> out;
  for (const SourceFile& f : repo.files) {
    try {
      out.push_back({f.path, module_name_for(f.path), std::make_unique<Module>(f.text)});
    } catch (const python::SyntaxError& e) {
      if (errors) errors->push_back({f.path, e.line, e.message});
    }
  }
  return out;
}

CodeSpan token_span(const ParsedFile& pf, std::size_t first, std::size_t last) {
  const Module& m = *pf.mod;
  return CodeSpan{pf.path, m.tok(first).line, m.tok(first).col, m.tok(last).end_line,
                  m.tok(last).end_col};
}

std::optional<std::string> implicit_first_param(const Module& m, const Stmt& def,
                                                bool in_class) {
  if (!in_class) return std::nullopt;
  for (TokRange d : def.decorators) {
    std::string_view t = m.text(d);
    if (t == "staticmethod" || t.ends_with(".staticmethod")) return std::nullopt;
  }
  python::DefHeader h = python::parse_def_header(m, def);
  if (h.params.empty() || h.params.front().kind != python::Param::Kind::Positional)
    return std::nullopt;
  return h.params.front().name;
}

namespace {

std::string qualify(const std::string& scope, std::string_view name) {
  return scope.empty() ? std::string(name) : scope + "." + std::string(name);
}

class Extractor {
 public:
  Extractor(const ParsedFile& pf, EntityIndex& index) : pf_(pf), m_(*pf.mod), index_(index) {}

  void run() { module_block(m_.body()); }

 private:
  std::string unique_id(const std::string& base) const {
    if (!index_.count(base)) return base;
    for (int k = 2;; ++k) {
      std::string id = base + "~" + std::to_string(k);
      if (!index_.count(id)) return id;
    }
  }

  Entity& add_entity(std::string id, EntityKind kind, std::size_t first, std::size_t last,
                     std::string_view short_name, std::optional<std::string> cls) {
    Entity e;
    e.id = id;
    e.kind = kind;
    e.module = pf_.module;
    e.span = token_span(pf_, first, last);
    std::size_t begin = line_start(m_.source(), m_.tok(first).begin);
    e.definition_text = m_.source().substr(begin, m_.tok(last).end - begin);
    e.enclosing_class = std::move(cls);
    e.short_name = std::string(short_name);
    return index_.emplace(id, std::move(e)).first->second;
  }

  void add_function(const Stmt& s, const std::string& scope, std::optional<std::string> cls) {
    python::DefHeader h = python::parse_def_header(m_, s);
    std::string id = unique_id(qualify(scope, h.name));
    Entity& e = add_entity(id, EntityKind::Function, m_.first_token(s), m_.last_token(s), h.name,
                           cls);
    std::optional<std::string> implicit = implicit_first_param(m_, s, cls.has_value());
    for (std::size_t i = 0; i < h.params.size(); ++i) {
      const python::Param& p = h.params[i];
      if (i == 0 && implicit) continue;
      TypeSlot slot;
      slot.role = "param:" + p.name;
      slot.slot_id = make_slot_id(id, slot.role);
      slot.insert_at = m_.tok(p.name_tok).end;
      slot.line = m_.tok(p.name_tok).line;
      if (p.annotation && !p.annotation->empty()) {
        slot.annotation = std::string(m_.text(*p.annotation));
        slot.existing = {slot.insert_at, m_.tok(p.annotation->last - 1).end};
      }
      e.slots.push_back(std::move(slot));
    }
    TypeSlot ret;
    ret.role = "return";
    ret.slot_id = make_slot_id(id, ret.role);
    ret.insert_at = m_.tok(h.rparen).end;
    ret.line = m_.tok(h.rparen).line;
    if (h.returns && !h.returns->empty()) {
      ret.annotation = std::string(m_.text(*h.returns));
      ret.existing = {ret.insert_at, m_.tok(h.returns->last - 1).end};
    }
    e.slots.push_back(std::move(ret));
  }

  void add_variable(const Stmt& s, const Assignment& a, const std::string& id,
                    std::string_view name, std::optional<std::string> cls) {
    if (index_.count(id)) return;
    Entity& e = add_entity(id, EntityKind::Variable, s.header.first, s.header.last - 1, name,
                           std::move(cls));
    TypeSlot slot;
    slot.role = "var";
    slot.slot_id = make_slot_id(id, slot.role);
    TokRange target = a.targets.front();
    slot.insert_at = m_.tok(target.last - 1).end;
    slot.line = m_.tok(target.first).line;
    if (a.annotation) {
      slot.annotation = std::string(m_.text(*a.annotation));
      slot.existing = {slot.insert_at, m_.tok(a.annotation->last - 1).end};
      slot.declaration_only = !a.value.has_value();
    }
    e.slots.push_back(std::move(slot));
  }

  // A single-target plain or annotated assignment; returns the target parts.
  std::optional<std::vector<std::string>> simple_target(const Stmt& s, Assignment& out) const {
    auto a = python::parse_assignment(m_, s);
    if (!a || a->augmented || a->targets.size() != 1) return std::nullopt;
    auto parts = python::as_dotted_name(m_, a->targets.front());
    if (!parts) return std::nullopt;
    out = std::move(*a);
    return parts;
  }

  void module_block(const std::vector<Stmt>& body) {
    for (const Stmt& s : body) {
      switch (s.kind) {
        case StmtKind::Def:
          add_function(s, pf_.module, std::nullopt);
          break;
        case StmtKind::Class:
          add_class(s, pf_.module);
          break;
        case StmtKind::Simple: {
          Assignment a;
          auto parts = simple_target(s, a);
          if (parts && parts->size() == 1)
            add_variable(s, a, qualify(pf_.module, parts->front()), parts->front(), std::nullopt);
          break;
        }
        default:
          module_block(s.body);
      }
    }
  }

  void add_class(const Stmt& s, const std::string& scope) {
    python::ClassHeader h = python::parse_class_header(m_, s);
    std::string id = unique_id(qualify(scope, h.name));
    add_entity(id, EntityKind::Class, m_.first_token(s), m_.last_token(s), h.name, std::nullopt);
    std::vector<const Stmt*> methods;
    class_block(s.body, id, methods);
    for (const Stmt* def : methods) {
      auto self = implicit_first_param(m_, *def, true);
      if (self) instance_attributes(def->body, id, *self);
    }
  }

  void class_block(const std::vector<Stmt>& body, const std::string& class_id,
                   std::vector<const Stmt*>& methods) {
    for (const Stmt& s : body) {
      switch (s.kind) {
        case StmtKind::Def:
          add_function(s, class_id, class_id);
          methods.push_back(&s);
          break;
        case StmtKind::Class:
          add_class(s, class_id);
          break;
        case StmtKind::Simple: {
          Assignment a;
          auto parts = simple_target(s, a);
          if (parts && parts->size() == 1)
            add_variable(s, a, qualify(class_id, parts->front()), parts->front(), class_id);
          break;
        }
        default:
          class_block(s.body, class_id, methods);
      }
    }
  }

  void instance_attributes(const std::vector<Stmt>& body, const std::string& class_id,
                           const std::string& self) {
    for (const Stmt& s : body) {
      if (s.kind == StmtKind::Def || s.kind == StmtKind::Class) continue;
      if (s.kind != StmtKind::Simple) {
        instance_attributes(s.body, class_id, self);
        continue;
      }
      Assignment a;
      auto parts = simple_target(s, a);
      if (parts && parts->size() == 2 && parts->front() == self)
        add_variable(s, a, qualify(class_id, (*parts)[1]), (*parts)[1], class_id);
    }
  }

  const ParsedFile& pf_;
  const Module& m_;
  EntityIndex& index_;
};

}  // namespace

void extract_file(const ParsedFile& pf, EntityIndex& index) { Extractor(pf, index).run(); }

}  // namespace detail

ExtractResult extract_entities(const SourceRepo& repo) {
  ExtractResult result;
  for (const detail::ParsedFile& pf : detail::parse_repo(repo, &result.parse_errors))
    detail::extract_file(pf, result.entities);
  return result;
}

}  // namespace edgtyper
