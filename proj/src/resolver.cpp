#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "edgtyper/frontend.hpp"
#include "frontend_internal.hpp"

namespace edgtyper {

using python::Module;
using python::Stmt;
using python::StmtKind;
using python::TokenKind;
using python::TokRange;

namespace {

struct Binding {
  enum class Kind { Entity, Module, FromImport, Unknown };
  Kind kind = Kind::Unknown;
  std::string target;  // entity id / module name / source module
  std::string name;    // FromImport: imported name
};

struct ModuleScope {
  std::map<std::string, Binding> names;
  std::vector<std::string> star_imports;
};

// Result of resolving a name or attribute chain prefix.
struct Resolved {
  enum class Kind { Entity, Module, Instance, Unknown, Local };
  Kind kind = Kind::Unknown;
  std::string target;
};

std::vector<std::string> split_dots(std::string_view s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = s.find('.', start);
    parts.emplace_back(s.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

std::string join_dots(const std::vector<std::string>& parts, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ".";
    out += parts[i];
  }
  return out;
}

// One lexical scope in a chain, innermost first.
struct Scope {
  enum class Kind { Function, Class };
  Kind kind = Kind::Function;
  std::set<std::string> locals;
  std::set<std::string> globals;
  std::optional<std::string> self_name;  // method receiver
  std::string class_id;                  // owning class (Function: of the method)
};

}  // namespace

struct Resolver::Impl {
  const EntityIndex& index;
  std::vector<detail::ParsedFile> files;
  std::set<std::string> modules;  // includes package prefixes
  std::map<std::string, ModuleScope> scopes;
  std::map<std::string, std::vector<std::string>> class_bases;

  Impl(const SourceRepo& repo, const EntityIndex& idx) : index(idx) {
    files = detail::parse_repo(repo, nullptr);
    for (const auto& pf : files) {
      std::vector<std::string> parts = split_dots(pf.module);
      for (std::size_t n = 1; n <= parts.size(); ++n) modules.insert(join_dots(parts, n));
    }
    for (const auto& pf : files) build_module_scope(pf);
    for (const auto& pf : files) collect_bases(pf, *pf.mod, pf.mod->body(), pf.module);
  }

  bool is_module(const std::string& name) const { return modules.count(name) > 0; }

  // ---- module scopes ------------------------------------------------------

  std::string relative_base(const detail::ParsedFile& pf, int level) const {
    std::vector<std::string> parts = pf.module.empty() ? std::vector<std::string>{}
                                                       : split_dots(pf.module);
    bool is_package = pf.path == "__init__.py" || pf.path.ends_with("/__init__.py");
    if (!is_package && !parts.empty()) parts.pop_back();
    for (int i = 1; i < level && !parts.empty(); ++i) parts.pop_back();
    return join_dots(parts, parts.size());
  }

  static void bind(ModuleScope& scope, const std::string& name, Binding b) {
    auto it = scope.names.find(name);
    if (it == scope.names.end() || it->second.kind == Binding::Kind::Unknown) {
      scope.names[name] = std::move(b);
    }
  }

  void bind_import(const detail::ParsedFile& pf, const Module& m, const Stmt& s,
                   std::map<std::string, Binding>& out, std::vector<std::string>* stars) const {
    TokRange r = s.header;
    if (m.is_name(r.first, "import")) {
      for (TokRange part : python::split_top_level(m, {r.first + 1, r.last}, ",")) {
        std::size_t as = part.last;
        for (std::size_t i = part.first; i < part.last; ++i)
          if (m.is_name(i, "as")) as = i;
        auto dotted = python::as_dotted_name(m, {part.first, as});
        if (!dotted) continue;
        if (as < part.last) {
          std::string full = join_dots(*dotted, dotted->size());
          Binding b;
          b.kind = is_module(full) ? Binding::Kind::Module : Binding::Kind::Unknown;
          b.target = full;
          out[std::string(m.text(as + 1))] = b;
        } else {
          Binding b;
          b.kind = is_module(dotted->front()) ? Binding::Kind::Module : Binding::Kind::Unknown;
          b.target = dotted->front();
          out[dotted->front()] = b;
        }
      }
      return;
    }
    if (!m.is_name(r.first, "from")) return;
    std::size_t i = r.first + 1;
    int level = 0;
    while (m.is_op(i, ".") || m.is_op(i, "...")) {
      level += m.is_op(i, ".") ? 1 : 3;
      ++i;
    }
    std::size_t imp = i;
    while (imp < r.last && !m.is_name(imp, "import")) ++imp;
    if (imp >= r.last) return;
    std::string source;
    if (imp > i) {
      auto dotted = python::as_dotted_name(m, {i, imp});
      if (!dotted) return;
      source = join_dots(*dotted, dotted->size());
    }
    if (level > 0) {
      std::string base = relative_base(pf, level);
      source = base.empty() ? source : (source.empty() ? base : base + "." + source);
    }
    std::size_t first = imp + 1, last = r.last;
    if (m.is_op(first, "(")) {
      ++first;
      --last;
    }
    if (m.is_op(first, "*")) {
      if (stars) stars->push_back(source);
      return;
    }
    for (TokRange part : python::split_top_level(m, {first, last}, ",")) {
      if (part.empty() || !m.is_name(part.first)) continue;
      std::string name(m.text(part.first));
      std::string local = name;
      if (part.size() == 3 && m.is_name(part.first + 1, "as")) local = m.text(part.first + 2);
      Binding b;
      b.kind = Binding::Kind::FromImport;
      b.target = source;
      b.name = name;
      out[local] = b;
    }
  }

  // Names bound by assignment targets (tuple unpacking included).
  static void target_names(const Module& m, TokRange r, std::set<std::string>& out) {
    for (std::size_t i = r.first; i < r.last; ++i) {
      if (!m.is_name(i)) continue;
      if (i > r.first && m.is_op(i - 1, ".")) continue;
      if (m.is_op(i + 1, ".") || m.is_op(i + 1, "[") || m.is_op(i + 1, "(")) continue;
      out.insert(std::string(m.text(i)));
    }
  }

  void build_module_scope(const detail::ParsedFile& pf) {
    ModuleScope& scope = scopes[pf.module];
    const Module& m = *pf.mod;
    std::function<void(const std::vector<Stmt>&)> walk = [&](const std::vector<Stmt>& body) {
      for (const Stmt& s : body) {
        switch (s.kind) {
          case StmtKind::Def: {
            std::string name(m.text(s.header.first + (s.is_async ? 2 : 1)));
            std::string id = pf.module.empty() ? name : pf.module + "." + name;
            if (index.count(id)) bind(scope, name, {Binding::Kind::Entity, id, {}});
            break;
          }
          case StmtKind::Class: {
            std::string name(m.text(s.header.first + 1));
            std::string id = pf.module.empty() ? name : pf.module + "." + name;
            if (index.count(id)) bind(scope, name, {Binding::Kind::Entity, id, {}});
            break;
          }
          case StmtKind::Simple: {
            if (m.is_name(s.header.first, "import") || m.is_name(s.header.first, "from")) {
              std::map<std::string, Binding> found;
              bind_import(pf, m, s, found, &scope.star_imports);
              for (auto& [k, v] : found) scope.names[k] = v;
              break;
            }
            auto a = python::parse_assignment(m, s);
            if (!a) break;
            for (TokRange t : a->targets) {
              std::set<std::string> names;
              target_names(m, t, names);
              for (const std::string& n : names) {
                std::string id = pf.module.empty() ? n : pf.module + "." + n;
                if (index.count(id) && index.at(id).kind == EntityKind::Variable)
                  bind(scope, n, {Binding::Kind::Entity, id, {}});
                else
                  bind(scope, n, {Binding::Kind::Unknown, {}, {}});
              }
            }
            break;
          }
          default:
            walk(s.body);
        }
      }
    };
    walk(m.body());
  }

  std::optional<Resolved> lookup(const std::string& module, const std::string& name,
                                 std::set<std::string>& visiting) const {
    std::string key = module + "\n" + name;
    if (!visiting.insert(key).second) return std::nullopt;
    auto sit = scopes.find(module);
    if (sit == scopes.end()) return std::nullopt;
    const ModuleScope& scope = sit->second;
    if (auto it = scope.names.find(name); it != scope.names.end()) {
      const Binding& b = it->second;
      switch (b.kind) {
        case Binding::Kind::Entity:
          return Resolved{Resolved::Kind::Entity, b.target};
        case Binding::Kind::Module:
          return Resolved{Resolved::Kind::Module, b.target};
        case Binding::Kind::Unknown:
          return Resolved{Resolved::Kind::Unknown, {}};
        case Binding::Kind::FromImport: {
          std::string full = b.target.empty() ? b.name : b.target + "." + b.name;
          if (is_module(full)) return Resolved{Resolved::Kind::Module, full};
          if (index.count(full)) return Resolved{Resolved::Kind::Entity, full};
          if (auto r = lookup(b.target, b.name, visiting)) return r;
          return Resolved{Resolved::Kind::Unknown, {}};
        }
      }
    }
    if (!name.starts_with("_")) {
      for (const std::string& star : scope.star_imports)
        if (auto r = lookup(star, name, visiting); r && r->kind != Resolved::Kind::Unknown)
          return r;
    }
    // Submodules are attributes of their package once imported anywhere.
    return std::nullopt;
  }

  std::optional<Resolved> lookup(const std::string& module, const std::string& name) const {
    std::set<std::string> visiting;
    return lookup(module, name, visiting);
  }

  // ---- classes ------------------------------------------------------------

  void collect_bases(const detail::ParsedFile& pf, const Module& m, const std::vector<Stmt>& body,
                     const std::string& scope_id) {
    for (const Stmt& s : body) {
      if (s.kind == StmtKind::Def) continue;
      if (s.kind == StmtKind::Class) {
        python::ClassHeader h = python::parse_class_header(m, s);
        std::string id = scope_id.empty() ? h.name : scope_id + "." + h.name;
        if (!index.count(id)) continue;
        for (TokRange base : h.bases) {
          auto dotted = python::as_dotted_name(m, base);
          if (!dotted) continue;
          auto r = follow_module_chain(pf.module, *dotted);
          if (r && r->first == dotted->size() && index.at(r->second).kind == EntityKind::Class)
            class_bases[id].push_back(r->second);
        }
        collect_bases(pf, m, s.body, id);
        continue;
      }
      collect_bases(pf, m, s.body, scope_id);
    }
  }

  std::optional<std::string> find_member(const std::string& class_id, const std::string& member,
                                         std::set<std::string>& seen) const {
    if (!seen.insert(class_id).second) return std::nullopt;
    std::string id = class_id + "." + member;
    if (index.count(id)) return id;
    if (auto it = class_bases.find(class_id); it != class_bases.end())
      for (const std::string& base : it->second)
        if (auto r = find_member(base, member, seen)) return r;
    return std::nullopt;
  }

  std::optional<std::string> find_member(const std::string& class_id,
                                         const std::string& member) const {
    std::set<std::string> seen;
    return find_member(class_id, member, seen);
  }

  // Follows `parts` from a resolved root. Returns (number of parts consumed
  // by the deepest entity, entity id).
  std::optional<std::pair<std::size_t, std::string>> follow(Resolved cur,
                                                            const std::vector<std::string>& parts,
                                                            std::size_t start) const {
    std::optional<std::pair<std::size_t, std::string>> best;
    if (cur.kind == Resolved::Kind::Entity) best = {start, cur.target};
    for (std::size_t i = start; i < parts.size(); ++i) {
      const std::string& p = parts[i];
      if (cur.kind == Resolved::Kind::Module) {
        std::string sub = cur.target + "." + p;
        if (is_module(sub)) {
          cur = {Resolved::Kind::Module, sub};
        } else if (index.count(sub)) {
          cur = {Resolved::Kind::Entity, sub};
        } else if (auto r = lookup(cur.target, p)) {
          cur = *r;
        } else {
          break;
        }
      } else if (cur.kind == Resolved::Kind::Instance ||
                 (cur.kind == Resolved::Kind::Entity &&
                  index.at(cur.target).kind == EntityKind::Class)) {
        auto member = find_member(cur.target, p);
        if (!member) break;
        cur = {Resolved::Kind::Entity, *member};
      } else {
        break;
      }
      if (cur.kind == Resolved::Kind::Entity) best = {i + 1, cur.target};
      else if (cur.kind != Resolved::Kind::Module) break;
    }
    return best;
  }

  std::optional<std::pair<std::size_t, std::string>> follow_module_chain(
      const std::string& module, const std::vector<std::string>& parts) const {
    auto root = lookup(module, parts.front());
    if (!root) {
      if (!is_module(parts.front())) return std::nullopt;
      root = Resolved{Resolved::Kind::Module, parts.front()};
    }
    return follow(*root, parts, 1);
  }

  // ---- statement walk -----------------------------------------------------

  struct Walk {
    const Impl& impl;
    const detail::ParsedFile& pf;
    const Module& m;
    std::vector<StatementRef>& out;

    std::optional<Resolved> resolve_root(const std::string& name,
                                         const std::vector<const Scope*>& chain) const {
      for (const Scope* sc : chain) {
        if (sc->kind == Scope::Kind::Function) {
          if (sc->globals.count(name)) break;
          if (sc->locals.count(name)) {
            if (sc->self_name && *sc->self_name == name)
              return Resolved{Resolved::Kind::Instance, sc->class_id};
            return Resolved{Resolved::Kind::Local, {}};
          }
        } else if (sc->locals.count(name)) {
          std::string id = sc->class_id + "." + name;
          if (impl.index.count(id)) return Resolved{Resolved::Kind::Entity, id};
          return Resolved{Resolved::Kind::Local, {}};
        }
      }
      return impl.lookup(pf.module, name);
    }

    // Names bound by lambdas and comprehensions inside a range.
    std::set<std::string> expression_locals(TokRange r) const {
      std::set<std::string> names;
      int depth = 0;
      for (std::size_t i = r.first; i < r.last; ++i) {
        if (m.tok(i).kind == TokenKind::Op) {
          std::string_view t = m.text(i);
          if (t == "(" || t == "[" || t == "{") ++depth;
          if (t == ")" || t == "]" || t == "}") --depth;
        }
        if (m.is_name(i, "lambda")) {
          for (std::size_t j = i + 1; j < r.last && !m.is_op(j, ":"); ++j)
            if (m.is_name(j) && !m.is_op(j - 1, "=")) names.insert(std::string(m.text(j)));
        } else if (depth > 0 && m.is_name(i, "for")) {
          for (std::size_t j = i + 1; j < r.last && !m.is_name(j, "in"); ++j)
            if (m.is_name(j)) names.insert(std::string(m.text(j)));
        }
      }
      return names;
    }

    void scan(TokRange r, const std::vector<const Scope*>& chain, std::set<Reference>& refs,
              const std::vector<TokRange>& write_targets = {}, bool augmented = false) const {
      std::set<std::string> extra = expression_locals(r);
      int depth = 0;
      std::size_t i = r.first;
      while (i < r.last) {
        const python::Token& t = m.tok(i);
        if (t.kind == TokenKind::Op) {
          std::string_view op = m.text(i);
          if (op == "(" || op == "[" || op == "{") ++depth;
          if (op == ")" || op == "]" || op == "}") --depth;
          ++i;
          continue;
        }
        if (!m.is_name(i) || (i > r.first && m.is_op(i - 1, "."))) {
          ++i;
          continue;
        }
        if (depth > 0 && m.is_op(i + 1, "=")) {  // keyword argument
          ++i;
          continue;
        }
        std::vector<std::string> parts{std::string(m.text(i))};
        std::size_t end = i + 1;
        while (end + 1 < r.last && m.is_op(end, ".") && m.is_name(end + 1)) {
          parts.emplace_back(m.text(end + 1));
          end += 2;
        }
        std::size_t start = i;
        i = end;
        if (extra.count(parts.front())) continue;
        auto root = resolve_root(parts.front(), chain);
        if (!root) continue;
        auto hit = impl.follow(*root, parts, 1);
        if (!hit) continue;
        bool whole = hit->first == parts.size();
        RefKind kind = RefKind::Read;
        if (whole && m.is_op(end, "(")) kind = RefKind::Call;
        bool is_target = false;
        for (TokRange wt : write_targets)
          if (wt.first == start && wt.last == end) is_target = true;
        if (whole && is_target) {
          refs.insert({hit->second, RefKind::Write});
          if (augmented) refs.insert({hit->second, RefKind::Read});
        } else {
          refs.insert({hit->second, kind});
        }
      }
    }

    void emit(const CodeSpan& span, const std::string& owner, const std::set<Reference>& refs) {
      if (owner.empty() || refs.empty()) return;
      out.push_back({span, owner, std::vector<Reference>(refs.begin(), refs.end())});
    }

    CodeSpan range_span(TokRange r) const { return detail::token_span(pf, r.first, r.last - 1); }

    // Locals of a function body (not descending into nested scopes).
    void collect_locals(const std::vector<Stmt>& body, Scope& sc) const {
      for (const Stmt& s : body) {
        switch (s.kind) {
          case StmtKind::Def:
            sc.locals.insert(std::string(m.text(s.header.first + (s.is_async ? 2 : 1))));
            continue;
          case StmtKind::Class:
            sc.locals.insert(std::string(m.text(s.header.first + 1)));
            continue;
          case StmtKind::Simple: {
            TokRange r = s.header;
            if (m.is_name(r.first, "global")) {
              for (std::size_t i = r.first + 1; i < r.last; ++i)
                if (m.is_name(i)) sc.globals.insert(std::string(m.text(i)));
              continue;
            }
            if (m.is_name(r.first, "nonlocal")) {
              for (std::size_t i = r.first + 1; i < r.last; ++i)
                if (m.is_name(i)) sc.locals.insert(std::string(m.text(i)));
              continue;
            }
            if (m.is_name(r.first, "import") || m.is_name(r.first, "from")) {
              std::map<std::string, Binding> found;
              impl.bind_import(pf, m, s, found, nullptr);
              for (auto& [k, v] : found) sc.locals.insert(k);
              continue;
            }
            if (auto a = python::parse_assignment(m, s))
              for (TokRange t : a->targets) target_names(m, t, sc.locals);
            break;
          }
          case StmtKind::For: {
            std::size_t in = s.header.first + (s.is_async ? 2 : 1);
            std::size_t stop = in;
            while (stop < s.header.last && !m.is_name(stop, "in")) ++stop;
            target_names(m, {in, stop}, sc.locals);
            break;
          }
          case StmtKind::With:
          case StmtKind::Except: {
            for (std::size_t i = s.header.first; i + 1 < s.header.last; ++i) {
              if (!m.is_name(i, "as")) continue;
              std::size_t j = i + 1;
              std::size_t stop = j;
              while (stop < s.header.last && !m.is_op(stop, ",") && !m.is_op(stop, ")")) ++stop;
              if (m.is_op(j, "(")) ++j;
              target_names(m, {j, stop}, sc.locals);
            }
            break;
          }
          default:
            break;
        }
        for (std::size_t i = s.header.first; i + 1 < s.header.last; ++i)
          if (m.is_name(i) && m.is_op(i + 1, ":=")) sc.locals.insert(std::string(m.text(i)));
        collect_locals(s.body, sc);
      }
      for (const Stmt& s : body) {
        if (s.kind != StmtKind::Simple) continue;
        for (std::size_t i = s.header.first; i + 1 < s.header.last; ++i)
          if (m.is_name(i) && m.is_op(i + 1, ":=")) sc.locals.insert(std::string(m.text(i)));
      }
    }

    Scope function_scope(const Stmt& def, const python::DefHeader& h, bool is_method,
                         const std::string& class_id) const {
      Scope sc;
      sc.kind = Scope::Kind::Function;
      sc.class_id = class_id;
      for (const python::Param& p : h.params) sc.locals.insert(p.name);
      if (is_method) sc.self_name = detail::implicit_first_param(m, def, true);
      collect_locals(def.body, sc);
      for (const std::string& g : sc.globals) sc.locals.erase(g);
      return sc;
    }

    // Header of a def: decorators, defaults, annotations (enclosing scope).
    void def_header(const Stmt& s, const python::DefHeader& h, const std::string& owner,
                    const std::vector<const Scope*>& chain) {
      std::set<Reference> refs;
      for (TokRange d : s.decorators) scan(d, chain, refs);
      for (const python::Param& p : h.params) {
        if (p.default_value) scan(*p.default_value, chain, refs);
        if (p.annotation) scan(*p.annotation, chain, refs);
      }
      if (h.returns) scan(*h.returns, chain, refs);
      emit(detail::token_span(pf, m.first_token(s), s.header.last - 1), owner, refs);
    }

    void function(const Stmt& s, const std::string& owner, bool is_method,
                  const std::string& class_id, std::vector<const Scope*> chain) {
      python::DefHeader h = python::parse_def_header(m, s);
      def_header(s, h, owner, chain);
      Scope sc = function_scope(s, h, is_method, class_id);
      chain.insert(chain.begin(), &sc);
      function_body(s.body, owner, chain);
    }

    void class_in_function(const Stmt& s, const std::string& owner,
                           std::vector<const Scope*> chain) {
      python::ClassHeader h = python::parse_class_header(m, s);
      std::set<Reference> refs;
      for (TokRange b : h.bases) scan(b, chain, refs);
      for (TokRange k : h.keywords) scan(k, chain, refs);
      emit(range_span(s.header), owner, refs);
      Scope cls;
      cls.kind = Scope::Kind::Class;
      for (const Stmt& c : s.body) {
        if (auto a = python::parse_assignment(m, c))
          for (TokRange t : a->targets) target_names(m, t, cls.locals);
      }
      std::vector<const Scope*> inner = chain;
      inner.insert(inner.begin(), &cls);
      for (const Stmt& c : s.body) {
        if (c.kind == StmtKind::Def) {
          function(c, owner, false, {}, chain);
        } else if (c.kind == StmtKind::Simple) {
          std::set<Reference> r;
          scan(c.header, inner, r);
          emit(range_span(c.header), owner, r);
        }
      }
    }

    void function_body(const std::vector<Stmt>& body, const std::string& owner,
                       const std::vector<const Scope*>& chain) {
      for (const Stmt& s : body) {
        if (s.kind == StmtKind::Def) {
          function(s, owner, false, {}, chain);
          continue;
        }
        if (s.kind == StmtKind::Class) {
          class_in_function(s, owner, chain);
          continue;
        }
        if (s.kind != StmtKind::Simple) {
          std::set<Reference> refs;
          scan(s.header, chain, refs);
          emit(range_span(s.header), owner, refs);
          function_body(s.body, owner, chain);
          continue;
        }
        simple_statement(s, owner, chain, /*owned_by_target=*/false);
      }
    }

    // Emits refs of a simple statement. Assignments to variable entities also
    // yield a statement owned by the assigned variable (its value's refs).
    void simple_statement(const Stmt& s, const std::string& owner,
                          const std::vector<const Scope*>& chain, bool owned_by_target) {
      auto a = python::parse_assignment(m, s);
      std::set<Reference> refs;
      if (!a) {
        scan(s.header, chain, refs);
        if (!owned_by_target) emit(range_span(s.header), owner, refs);
        return;
      }
      for (TokRange t : a->targets) scan(t, chain, refs, a->targets, a->augmented);
      std::set<Reference> value_refs;
      if (a->value) scan(*a->value, chain, value_refs);
      if (a->annotation) scan(*a->annotation, chain, value_refs);
      std::vector<std::string> written;
      for (const Reference& r : refs)
        if (r.kind == RefKind::Write && impl.index.at(r.entity).kind == EntityKind::Variable)
          written.push_back(r.entity);
      CodeSpan span = range_span(s.header);
      if (owned_by_target) {
        if (written.empty()) return;
        std::set<Reference> all = refs;
        all.insert(value_refs.begin(), value_refs.end());
        for (const std::string& w : written) emit(span, w, all);
        return;
      }
      std::set<Reference> all = refs;
      all.insert(value_refs.begin(), value_refs.end());
      emit(span, owner, all);
      for (const std::string& w : written)
        if (w != owner) emit(span, w, value_refs);
    }

    void class_body(const std::vector<Stmt>& body, const std::string& class_id,
                    const Scope& cls, const std::vector<const Scope*>& outer) {
      std::vector<const Scope*> inner = outer;
      inner.insert(inner.begin(), &cls);
      for (const Stmt& s : body) {
        switch (s.kind) {
          case StmtKind::Def: {
            std::string name(m.text(s.header.first + (s.is_async ? 2 : 1)));
            std::string owner = entity_for(s, class_id + "." + name);
            if (owner.empty()) break;
            python::DefHeader h = python::parse_def_header(m, s);
            def_header(s, h, owner, inner);
            Scope sc = function_scope(s, h, true, class_id);
            std::vector<const Scope*> chain = outer;
            chain.insert(chain.begin(), &sc);
            function_body(s.body, owner, chain);
            break;
          }
          case StmtKind::Class:
            class_def(s, class_id, outer);
            break;
          case StmtKind::Simple:
            simple_statement(s, {}, inner, /*owned_by_target=*/true);
            break;
          default:
            class_body(s.body, class_id, cls, outer);
        }
      }
    }

    // Entity id defined by `s` (accounts for `~N` suffixes of redefinitions).
    std::string entity_for(const Stmt& s, const std::string& base) const {
      int line = m.tok(m.first_token(s)).line;
      for (int k = 1;; ++k) {
        std::string id = k == 1 ? base : base + "~" + std::to_string(k);
        auto it = impl.index.find(id);
        if (it == impl.index.end()) return {};
        if (it->second.span.file == pf.path && it->second.span.start_line == line) return id;
      }
    }

    void class_def(const Stmt& s, const std::string& scope_id,
                   const std::vector<const Scope*>& outer) {
      python::ClassHeader h = python::parse_class_header(m, s);
      std::string id = entity_for(s, scope_id.empty() ? h.name : scope_id + "." + h.name);
      if (id.empty()) return;
      std::set<Reference> refs;
      for (TokRange b : h.bases) {
        std::set<Reference> base_refs;
        scan(b, outer, base_refs);
        for (Reference r : base_refs) {
          if (r.kind != RefKind::Write && impl.index.at(r.entity).kind == EntityKind::Class)
            r.kind = RefKind::Inherit;
          refs.insert(r);
        }
      }
      emit(range_span(s.header), id, refs);
      Scope cls;
      cls.kind = Scope::Kind::Class;
      cls.class_id = id;
      std::function<void(const std::vector<Stmt>&)> names = [&](const std::vector<Stmt>& body) {
        for (const Stmt& c : body) {
          if (c.kind == StmtKind::Def) {
            cls.locals.insert(std::string(m.text(c.header.first + (c.is_async ? 2 : 1))));
          } else if (c.kind == StmtKind::Class) {
            cls.locals.insert(std::string(m.text(c.header.first + 1)));
          } else if (c.kind == StmtKind::Simple) {
            if (auto a = python::parse_assignment(m, c))
              for (TokRange t : a->targets) target_names(m, t, cls.locals);
          } else {
            names(c.body);
          }
        }
      };
      names(s.body);
      class_body(s.body, id, cls, outer);
    }

    void module_body(const std::vector<Stmt>& body) {
      for (const Stmt& s : body) {
        switch (s.kind) {
          case StmtKind::Def: {
            std::string name(m.text(s.header.first + (s.is_async ? 2 : 1)));
            std::string owner = entity_for(s, pf.module.empty() ? name : pf.module + "." + name);
            if (!owner.empty()) function(s, owner, false, {}, {});
            break;
          }
          case StmtKind::Class:
            class_def(s, pf.module, {});
            break;
          case StmtKind::Simple:
            simple_statement(s, {}, {}, /*owned_by_target=*/true);
            break;
          default:
            module_body(s.body);
        }
      }
    }
  };

  std::vector<StatementRef> statement_refs() const {
    std::vector<StatementRef> out;
    for (const auto& pf : files) {
      Walk w{*this, pf, *pf.mod, out};
      w.module_body(pf.mod->body());
    }
    return out;
  }
};

Resolver::Resolver(const SourceRepo& repo, const EntityIndex& index)
    : impl_(std::make_unique<Impl>(repo, index)) {}
Resolver::~Resolver() = default;
Resolver::Resolver(Resolver&&) noexcept = default;
Resolver& Resolver::operator=(Resolver&&) noexcept = default;

std::vector<StatementRef> Resolver::statement_refs() const { return impl_->statement_refs(); }

bool Resolver::has_module(std::string_view module) const {
  return impl_->is_module(std::string(module));
}

std::optional<std::string> Resolver::module_binding(std::string_view module,
                                                    std::string_view name) const {
  auto r = impl_->lookup(std::string(module), std::string(name));
  if (!r) return std::nullopt;
  if (r->kind == Resolved::Kind::Entity) return r->target;
  if (r->kind == Resolved::Kind::Module) return "module:" + r->target;
  return std::string("unknown:");
}

std::vector<std::string> Resolver::bases_of(std::string_view class_id) const {
  auto it = impl_->class_bases.find(std::string(class_id));
  return it == impl_->class_bases.end() ? std::vector<std::string>{} : it->second;
}

std::optional<std::string> Resolver::find_member(std::string_view class_id,
                                                 std::string_view member) const {
  return impl_->find_member(std::string(class_id), std::string(member));
}

std::optional<std::string> Resolver::resolve_reference(std::string_view from_entity,
                                                       std::string_view dotted) const {
  std::string ref(dotted);
  while (!ref.empty() && ref.back() == ' ') ref.pop_back();
  while (!ref.empty() && ref.front() == ' ') ref.erase(ref.begin());
  if (ref.empty()) return std::nullopt;
  if (impl_->index.count(ref)) return ref;
  std::vector<std::string> parts = split_dots(ref);
  for (const std::string& p : parts)
    if (p.empty()) return std::nullopt;
  if (auto from = impl_->index.find(std::string(from_entity)); from != impl_->index.end()) {
    auto hit = impl_->follow_module_chain(from->second.module, parts);
    if (hit && hit->first == parts.size()) return hit->second;
    // `self.x` style references from a method.
    if (from->second.enclosing_class && parts.size() == 2 &&
        (parts[0] == "self" || parts[0] == "cls"))
      if (auto member = impl_->find_member(*from->second.enclosing_class, parts[1]))
        return member;
  }
  std::optional<std::string> unique;
  std::string suffix = "." + ref;
  for (const auto& [id, e] : impl_->index) {
    if (id.size() > suffix.size() && id.ends_with(suffix)) {
      if (unique) return std::nullopt;
      unique = id;
    }
  }
  return unique;
}

std::vector<StatementRef> resolve_statement_refs(const SourceRepo& repo, const EntityIndex& index) {
  return Resolver(repo, index).statement_refs();
}

}  // namespace edgtyper
