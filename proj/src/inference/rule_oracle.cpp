// Deterministic oracle: literal types, arithmetic, and propagation of the
// annotated dependency types it is given. Unknown means `Any`.

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "edgtyper/error.hpp"
#include "edgtyper/inference.hpp"
#include "edgtyper/python/syntax.hpp"
#include "edgtyper/type_expr.hpp"

namespace edgtyper {

using python::Module;
using python::Stmt;
using python::StmtKind;
using python::TokenKind;
using python::TokRange;

namespace {

const std::string kUnknown;  // empty: nothing inferred

std::string last_component(const std::string& dotted) {
  auto dot = dotted.rfind('.');
  return dot == std::string::npos ? dotted : dotted.substr(dot + 1);
}

// "a.b.C.m" -> "C.m"
std::string last_two(const std::string& dotted) {
  auto dot = dotted.rfind('.');
  if (dot == std::string::npos) return dotted;
  auto prev = dotted.rfind('.', dot - 1);
  return prev == std::string::npos ? dotted : dotted.substr(prev + 1);
}

bool is_builtin_head(const std::string& head) {
  static const std::set<std::string> names = {
      "int", "float", "complex", "str", "bytes", "bool", "list", "dict", "set", "frozenset",
      "tuple", "type", "object", "None", "Any", "Optional", "Union", "Callable", "Iterable",
      "Iterator", "Sequence", "Mapping", "ContextVar", "List", "Dict", "Set", "Tuple", "Type"};
  return names.count(head) > 0;
}

// Removes a trailing `| None` / Optional wrapper.
std::string strip_optional(const std::string& type) {
  if (type.empty()) return type;
  try {
    NormalizedType n = normalize_type(type);
    if (!n.is_union) return type;
    std::vector<std::string> rest;
    for (const NormalizedType& a : n.args)
      if (a.text != "None") rest.push_back(a.text);
    if (rest.size() == 1) return rest.front();
  } catch (const Error&) {
  }
  return type;
}

std::string head_of(const std::string& type) {
  try {
    return normalize_type(type).head;
  } catch (const Error&) {
    return {};
  }
}

std::vector<std::string> args_of(const std::string& type) {
  std::vector<std::string> out;
  try {
    for (const NormalizedType& a : normalize_type(type).args) out.push_back(a.text);
  } catch (const Error&) {
  }
  return out;
}

// Joins branch types: equal -> same; with None -> optional; else Any.
std::string join_types(const std::vector<std::string>& types) {
  if (types.empty()) return kUnknown;
  std::set<std::string> distinct;
  for (const std::string& t : types) {
    if (t.empty()) return "Any";
    distinct.insert(t);
  }
  if (distinct.size() == 1) return *distinct.begin();
  if (distinct.count("Any")) return "Any";
  if (distinct.size() <= 3) {
    std::string out;
    bool has_none = distinct.erase("None") > 0;
    for (const std::string& t : distinct) out += (out.empty() ? "" : " | ") + t;
    if (has_none) out += " | None";
    try {
      return normalize_type(out).text;
    } catch (const Error&) {
      return "Any";
    }
  }
  return "Any";
}

// What the dependency summaries tell us, keyed for lookup from code.
struct Knowledge {
  std::map<std::string, std::string> var_types;      // short name / "C.attr" -> type
  std::map<std::string, std::string> returns;        // short name / "C.m" -> type
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> params;
  std::set<std::string> classes;                      // short class names

  explicit Knowledge(const InferenceContext& ctx) {
    for (const DependencySummary& d : ctx.dependency_summaries) {
      std::string role = slot_role(d.slot);
      std::string entity = slot_entity(d.slot);
      if (role == "class") {
        classes.insert(last_component(entity));
      } else if (role == "var") {
        var_types.emplace(last_component(entity), d.type);
        var_types.emplace(last_two(entity), d.type);
      } else if (role == "return") {
        returns.emplace(last_component(entity), d.type);
        returns.emplace(last_two(entity), d.type);
      } else if (role.starts_with("param:")) {
        auto& a = params[last_component(entity)];
        auto& b = params[last_two(entity)];
        std::pair<std::string, std::string> p{role.substr(6), d.type};
        if (std::find(a.begin(), a.end(), p) == a.end()) a.push_back(p);
        if (std::find(b.begin(), b.end(), p) == b.end()) b.push_back(p);
      }
    }
  }
};

class Typer {
 public:
  Typer(const Module& m, const Knowledge& k, std::map<std::string, std::string>& env)
      : m_(m), k_(k), env_(env) {}

  std::string type_of(TokRange r) const {
    if (r.empty()) return kUnknown;
    if (m_.is_name(r.first, "lambda") || m_.is_name(r.first, "await") ||
        m_.is_name(r.first, "yield"))
      return kUnknown;
    // Ternary.
    if (std::size_t i = top_level_name(r, "if"); i < r.last) {
      std::size_t e = top_level_name({i, r.last}, "else");
      if (e < r.last) return join_types({type_of({r.first, i}), type_of({e + 1, r.last})});
    }
    for (const char* op : {"or", "and"}) {
      auto parts = split_name(r, op);
      if (parts.size() > 1) {
        std::vector<std::string> ts;
        for (TokRange p : parts) ts.push_back(type_of(p));
        return join_types(ts);
      }
    }
    if (m_.is_name(r.first, "not")) return "bool";
    for (std::size_t i = r.first; i < r.last; ++i) {
      if (depth_at(r, i) != 0) continue;
      if (m_.tok(i).kind == TokenKind::Op) {
        std::string_view t = m_.text(i);
        if (t == "==" || t == "!=" || t == "<" || t == ">" || t == "<=" || t == ">=")
          return "bool";
      } else if (m_.is_name(i, "in") || m_.is_name(i, "is")) {
        return "bool";
      }
    }
    for (const auto& ops : {std::vector<std::string_view>{"+", "-"},
                            std::vector<std::string_view>{"*", "/", "//", "%"}}) {
      std::size_t split = find_binary(r, ops);
      if (split < r.last) return arithmetic(type_of({r.first, split}), m_.text(split),
                                            type_of({split + 1, r.last}));
    }
    if (m_.is_op(r.first, "-") || m_.is_op(r.first, "+")) {
      std::string t = type_of({r.first + 1, r.last});
      return t == "int" || t == "float" || t == "complex" ? t : kUnknown;
    }
    return primary(r);
  }

  // Bracket depth just before token `at`.
  std::size_t depth_at(TokRange r, std::size_t at) const {
    int depth = 0;
    for (std::size_t i = r.first; i < at; ++i) {
      if (m_.tok(i).kind != TokenKind::Op) continue;
      std::string_view t = m_.text(i);
      if (t == "(" || t == "[" || t == "{") ++depth;
      if (t == ")" || t == "]" || t == "}") --depth;
    }
    return static_cast<std::size_t>(depth);
  }

  // Receiver-qualified name of the callable at [first, end) as a lookup key:
  // "f", "C.m" (receiver of user class C), or empty.
  std::string callee_key(TokRange callee) const {
    if (callee.size() == 1 && m_.is_name(callee.first)) return std::string(m_.text(callee.first));
    if (callee.size() >= 3 && m_.is_op(callee.last - 2, ".") && m_.is_name(callee.last - 1)) {
      std::string recv = strip_optional(type_of({callee.first, callee.last - 2}));
      std::string h = head_of(recv);
      if (!h.empty() && !is_builtin_head(h))
        return last_component(h) + "." + std::string(m_.text(callee.last - 1));
    }
    return {};
  }

 private:
  std::size_t top_level_name(TokRange r, std::string_view name) const {
    int depth = 0;
    for (std::size_t i = r.first; i < r.last; ++i) {
      if (m_.tok(i).kind == TokenKind::Op) {
        std::string_view t = m_.text(i);
        if (t == "(" || t == "[" || t == "{") ++depth;
        if (t == ")" || t == "]" || t == "}") --depth;
      } else if (depth == 0 && i > r.first && m_.is_name(i, name)) {
        return i;
      }
    }
    return r.last;
  }

  std::vector<TokRange> split_name(TokRange r, std::string_view name) const {
    std::vector<TokRange> parts;
    std::size_t start = r.first;
    int depth = 0;
    for (std::size_t i = r.first; i < r.last; ++i) {
      if (m_.tok(i).kind == TokenKind::Op) {
        std::string_view t = m_.text(i);
        if (t == "(" || t == "[" || t == "{") ++depth;
        if (t == ")" || t == "]" || t == "}") --depth;
      } else if (depth == 0 && m_.is_name(i, name)) {
        parts.push_back({start, i});
        start = i + 1;
      }
    }
    parts.push_back({start, r.last});
    return parts;
  }

  // Last top-level binary occurrence of one of `ops` (left associativity).
  std::size_t find_binary(TokRange r, const std::vector<std::string_view>& ops) const {
    std::size_t found = r.last;
    int depth = 0;
    for (std::size_t i = r.first; i < r.last; ++i) {
      if (m_.tok(i).kind != TokenKind::Op) continue;
      std::string_view t = m_.text(i);
      if (t == "(" || t == "[" || t == "{") ++depth;
      if (t == ")" || t == "]" || t == "}") --depth;
      if (depth != 0 || i == r.first) continue;
      if (std::find(ops.begin(), ops.end(), t) == ops.end()) continue;
      // Unary when preceded by an operator other than a closing bracket.
      if (m_.tok(i - 1).kind == TokenKind::Op) {
        std::string_view prev = m_.text(i - 1);
        if (prev != ")" && prev != "]" && prev != "}") continue;
      }
      found = i;
    }
    return found;
  }

  static std::string arithmetic(const std::string& a, std::string_view op, const std::string& b) {
    auto numeric = [](const std::string& t) {
      return t == "int" || t == "float" || t == "complex" || t == "bool";
    };
    if (numeric(a) && numeric(b)) {
      if (a == "complex" || b == "complex") return "complex";
      if (op == "/" || a == "float" || b == "float") return "float";
      return "int";
    }
    if (op == "+" && a == b && (a == "str" || a == "bytes")) return a;
    if (op == "%" && (a == "str" || a == "bytes")) return a;
    if (op == "*" && ((a == "str" && b == "int") || (a == "int" && b == "str"))) return "str";
    if (op == "+" && a == b && (head_of(a) == "list" || head_of(a) == "tuple")) return a;
    return kUnknown;
  }

  std::string literal(std::size_t i) const {
    const python::Token& t = m_.tok(i);
    std::string_view text = m_.text(i);
    if (t.kind == TokenKind::Number) {
      std::string lower(text);
      std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
      if (lower.ends_with("j")) return "complex";
      bool hex = lower.starts_with("0x") || lower.starts_with("0o") || lower.starts_with("0b");
      if (!hex && (lower.find('.') != std::string::npos || lower.find('e') != std::string::npos))
        return "float";
      return "int";
    }
    if (t.kind == TokenKind::String) {
      std::size_t q = text.find_first_of("'\"");
      std::string prefix(text.substr(0, q));
      std::transform(prefix.begin(), prefix.end(), prefix.begin(), ::tolower);
      return prefix.find('b') != std::string::npos ? "bytes" : "str";
    }
    if (text == "True" || text == "False") return "bool";
    if (text == "None") return "None";
    return kUnknown;
  }

  std::string display(std::size_t open, std::size_t close) const {
    std::string_view kind = m_.text(open);
    TokRange inner{open + 1, close};
    bool comprehension = top_level_name(inner, "for") < inner.last;
    std::vector<TokRange> items;
    for (TokRange p : python::split_top_level(m_, inner, ","))
      if (!p.empty()) items.push_back(p);
    if (kind == "[") {
      if (comprehension || items.empty()) return "list[Any]";
      std::string t = uniform(items);
      return "list[" + (t.empty() ? "Any" : t) + "]";
    }
    if (kind == "{") {
      if (items.empty()) return "dict[Any, Any]";
      bool is_dict = python::find_top_level(m_, items.front(), ":") < items.front().last ||
                     m_.is_op(items.front().first, "**");
      if (comprehension) return is_dict ? "dict[Any, Any]" : "set[Any]";
      if (!is_dict) {
        std::string t = uniform(items);
        return "set[" + (t.empty() ? "Any" : t) + "]";
      }
      std::vector<TokRange> keys, values;
      for (TokRange it : items) {
        std::size_t colon = python::find_top_level(m_, it, ":");
        if (colon >= it.last) return "dict[Any, Any]";
        keys.push_back({it.first, colon});
        values.push_back({colon + 1, it.last});
      }
      std::string k = uniform(keys), v = uniform(values);
      return "dict[" + (k.empty() ? "Any" : k) + ", " + (v.empty() ? "Any" : v) + "]";
    }
    // Parenthesized.
    bool tuple = items.empty() || python::find_top_level(m_, inner, ",") < inner.last;
    if (comprehension) return kUnknown;
    if (!tuple) return type_of(inner);
    if (items.empty()) return "tuple[()]";
    std::string out = "tuple[";
    for (std::size_t i = 0; i < items.size(); ++i) {
      std::string t = type_of(items[i]);
      if (t.empty() || t == "None") return "tuple[Any, ...]";
      out += (i ? ", " : "") + t;
    }
    return out + "]";
  }

  std::string uniform(const std::vector<TokRange>& items) const {
    std::set<std::string> ts;
    for (TokRange it : items) {
      if (m_.is_op(it.first, "*") || m_.is_op(it.first, "**")) return kUnknown;
      ts.insert(type_of(it));
    }
    if (ts.size() != 1 || ts.begin()->empty() || *ts.begin() == "None") return kUnknown;
    return *ts.begin();
  }

  std::string name_value(const std::string& name) const {
    if (auto it = env_.find(name); it != env_.end()) return it->second;
    if (auto it = k_.var_types.find(name); it != k_.var_types.end()) return it->second;
    if (k_.classes.count(name)) return "type[" + name + "]";
    return kUnknown;
  }

  std::string call_result(TokRange callee, const std::string& callee_type,
                          TokRange args) const {
    static const std::map<std::string, std::string> builtins = {
        {"int", "int"},       {"str", "str"},           {"float", "float"},
        {"bool", "bool"},     {"bytes", "bytes"},       {"list", "list[Any]"},
        {"dict", "dict[Any, Any]"}, {"set", "set[Any]"}, {"tuple", "tuple[Any, ...]"},
        {"len", "int"},       {"repr", "str"},          {"isinstance", "bool"},
        {"hasattr", "bool"},  {"callable", "bool"},     {"sorted", "list[Any]"},
        {"ContextVar", "ContextVar[Any]"}, {"object", "object"}, {"hash", "int"},
        {"ord", "int"},       {"chr", "str"},           {"format", "str"}};
    if (callee.size() == 1 && m_.is_name(callee.first)) {
      std::string name(m_.text(callee.first));
      if (!env_.count(name)) {
        if (auto it = k_.returns.find(name); it != k_.returns.end()) return it->second;
        if (k_.classes.count(name)) return name;
        // A constructor known only through its summarized __init__.
        if (k_.returns.count(name + ".__init__") || k_.params.count(name + ".__init__"))
          return name;
        if (auto it = builtins.find(name); it != builtins.end()) return it->second;
      }
    }
    std::string ct = strip_optional(callee_type);
    if (head_of(ct) == "type" && args_of(ct).size() == 1) return args_of(ct).front();
    // Method on a typed receiver.
    if (callee.size() >= 3 && m_.is_op(callee.last - 2, ".")) {
      std::string method(m_.text(callee.last - 1));
      std::string recv = strip_optional(type_of({callee.first, callee.last - 2}));
      std::string h = head_of(recv);
      std::vector<std::string> a = args_of(recv);
      if (h == "ContextVar" && method == "get" && a.size() == 1) {
        bool none_default = args.size() == 1 && m_.is_name(args.first, "None");
        if (none_default) return join_types({a.front(), "None"});
        return args.empty() ? a.front() : kUnknown;
      }
      if (h == "str") {
        static const std::set<std::string> to_str = {"upper", "lower", "strip", "lstrip",
                                                     "rstrip", "format", "join", "replace",
                                                     "title", "capitalize"};
        if (to_str.count(method)) return "str";
        if (method == "split" || method == "splitlines") return "list[str]";
        if (method == "startswith" || method == "endswith" || method.starts_with("is"))
          return "bool";
        if (method == "encode") return "bytes";
        if (method == "find" || method == "count" || method == "index") return "int";
      }
      if (h == "list" && a.size() == 1 && method == "pop") return a.front();
      if (h == "dict" && a.size() == 2 && method == "get")
        return args.size() >= 2 ? kUnknown : join_types({a[1], "None"});
      if (!h.empty() && !is_builtin_head(h)) {
        if (auto it = k_.returns.find(last_component(h) + "." + method); it != k_.returns.end())
          return it->second;
      }
    }
    return kUnknown;
  }

  std::string primary(TokRange r) const {
    std::size_t i = r.first;
    std::string type;
    std::size_t callee_end = i;
    const python::Token& t = m_.tok(i);
    if (t.kind == TokenKind::Op && (m_.is_op(i, "(") || m_.is_op(i, "[") || m_.is_op(i, "{"))) {
      std::size_t close = python::matching_bracket(m_, i);
      if (close >= r.last) return kUnknown;
      type = display(i, close);
      i = close + 1;
    } else if (t.kind == TokenKind::String) {
      type = literal(i);
      while (i < r.last && m_.tok(i).kind == TokenKind::String) ++i;
    } else if (t.kind == TokenKind::Number || m_.is_name(i, "True") || m_.is_name(i, "False") ||
               m_.is_name(i, "None")) {
      type = literal(i);
      ++i;
    } else if (m_.is_name(i)) {
      type = name_value(std::string(m_.text(i)));
      ++i;
    } else {
      return kUnknown;
    }
    callee_end = i;
    while (i < r.last) {
      if (m_.is_op(i, ".") && i + 1 < r.last && m_.is_name(i + 1)) {
        std::string recv = strip_optional(type);
        std::string h = head_of(recv);
        type = kUnknown;
        if (!h.empty() && !is_builtin_head(h)) {
          std::string key = last_component(h) + "." + std::string(m_.text(i + 1));
          if (auto it = k_.var_types.find(key); it != k_.var_types.end()) type = it->second;
        }
        i += 2;
      } else if (m_.is_op(i, "(")) {
        std::size_t close = python::matching_bracket(m_, i);
        if (close >= r.last) return kUnknown;
        type = call_result({r.first, i}, type, {i + 1, close});
        i = close + 1;
      } else if (m_.is_op(i, "[")) {
        std::size_t close = python::matching_bracket(m_, i);
        if (close >= r.last) return kUnknown;
        std::string recv = strip_optional(type);
        std::string h = head_of(recv);
        std::vector<std::string> a = args_of(recv);
        bool slice = python::find_top_level(m_, {i + 1, close}, ":") < close;
        if (h == "str" || h == "bytes") type = h;
        else if (slice && h == "list") type = recv;
        else if (h == "list" && a.size() == 1) type = a.front();
        else if (h == "dict" && a.size() == 2) type = a[1];
        else type = kUnknown;
        i = close + 1;
      } else {
        return kUnknown;
      }
      callee_end = i;
    }
    (void)callee_end;
    return type;
  }

  const Module& m_;
  const Knowledge& k_;
  std::map<std::string, std::string>& env_;
};

// Parses a definition slice that may be indented.
std::unique_ptr<Module> parse_member(const std::string& code) {
  std::size_t first = code.find_first_not_of(" \t");
  bool indented = first != std::string::npos && first > 0;
  try {
    return std::make_unique<Module>(indented ? "if 1:\n" + code + "\n" : code + "\n");
  } catch (const python::SyntaxError&) {
    return nullptr;
  }
}

// The outermost def/class/assignment statement of a parsed member.
const Stmt* member_stmt(const Module& m) {
  const std::vector<Stmt>* body = &m.body();
  while (!body->empty()) {
    const Stmt& s = body->front();
    if (s.kind == StmtKind::If) {
      body = &s.body;
      continue;
    }
    return &s;
  }
  return nullptr;
}

// Statements of a function body, skipping nested defs/classes.
void walk_body(const std::vector<Stmt>& body, const std::function<void(const Stmt&)>& fn) {
  for (const Stmt& s : body) {
    if (s.kind == StmtKind::Def || s.kind == StmtKind::Class) continue;
    fn(s);
    walk_body(s.body, fn);
  }
}

struct FunctionFacts {
  std::map<std::string, std::string> env;
  std::vector<python::Param> params;
  std::optional<std::string> implicit;  // self / cls
};

class MemberAnalysis {
 public:
  MemberAnalysis(const std::string& id, const std::string& code, const Knowledge& k)
      : id_(id), k_(k), mod_(parse_member(code)) {
    if (!mod_) return;
    stmt_ = member_stmt(*mod_);
    if (stmt_ && stmt_->kind == StmtKind::Def) analyze_function();
  }

  bool ok() const { return mod_ && stmt_; }
  bool is_function() const { return ok() && stmt_->kind == StmtKind::Def; }

  std::string slot_type(const std::string& role) {
    if (!ok()) return "Any";
    if (role == "var") return variable_type();
    if (!is_function()) return "Any";
    if (role == "return") return return_type();
    if (role.starts_with("param:")) return param_type(role.substr(6));
    return "Any";
  }

  // Attribute chains rooted at names typed as user classes.
  std::vector<MissingRef> missing() const {
    std::vector<MissingRef> out;
    if (!is_function()) return out;
    const Module& m = *mod_;
    Typer typer(m, k_, const_cast<std::map<std::string, std::string>&>(facts_.env));
    std::set<std::string> seen;
    walk_body(stmt_->body, [&](const Stmt& s) {
      for (std::size_t i = s.header.first; i + 2 < s.header.last; ++i) {
        if (!m.is_name(i) || (i > s.header.first && m.is_op(i - 1, "."))) continue;
        if (!m.is_op(i + 1, ".") || !m.is_name(i + 2)) continue;
        std::string name(m.text(i));
        if (facts_.implicit && name == *facts_.implicit) continue;
        auto it = facts_.env.find(name);
        if (it == facts_.env.end()) continue;
        std::string type = strip_optional(it->second);
        std::string h = head_of(type);
        if (h.empty() || is_builtin_head(h) || !args_of(type).empty()) continue;
        std::string attr(m.text(i + 2));
        std::string key = last_component(h) + "." + attr;
        if (k_.var_types.count(key) || k_.returns.count(key)) continue;
        std::string ref = h + "." + attr;
        if (seen.insert(ref).second)
          out.push_back({id_, ref, "attribute `" + attr + "` accessed on `" + name + ": " +
                                       it->second + "`"});
      }
    });
    return out;
  }

 private:
  std::string class_short_name() const {
    auto dot = id_.rfind('.');
    if (dot == std::string::npos) return {};
    return last_component(id_.substr(0, dot));
  }

  void analyze_function() {
    const Module& m = *mod_;
    python::DefHeader h = python::parse_def_header(m, *stmt_);
    facts_.params = h.params;
    bool is_static = false;
    for (TokRange d : stmt_->decorators)
      if (m.text(d) == "staticmethod") is_static = true;
    std::string cls = class_short_name();
    if (!is_static && !h.params.empty() && !cls.empty() &&
        h.params.front().kind == python::Param::Kind::Positional &&
        (h.params.front().name == "self" || h.params.front().name == "cls")) {
      facts_.implicit = h.params.front().name;
      facts_.env[h.params.front().name] =
          h.params.front().name == "cls" ? "type[" + cls + "]" : cls;
    }
    Typer typer(m, k_, facts_.env);
    for (const python::Param& p : h.params) {
      if (facts_.implicit && p.name == *facts_.implicit) continue;
      std::string t;
      if (p.default_value) t = typer.type_of(*p.default_value);
      if (t == "None") t.clear();
      if (!t.empty()) facts_.env[p.name] = t;
    }
    // Local assignments in textual order; conflicting rebinds become Any.
    std::set<std::string> params;
    for (const python::Param& p : h.params) params.insert(p.name);
    walk_body(stmt_->body, [&](const Stmt& s) {
      if (s.kind != StmtKind::Simple) return;
      auto a = python::parse_assignment(m, s);
      if (!a || a->augmented || a->targets.size() != 1 || !a->value) return;
      auto dotted = python::as_dotted_name(m, a->targets.front());
      if (!dotted || dotted->size() != 1) return;
      const std::string& name = dotted->front();
      if (params.count(name)) return;
      std::string t = typer.type_of(*a->value);
      auto it = facts_.env.find(name);
      if (it == facts_.env.end()) facts_.env[name] = t;
      else if (it->second != t) it->second = kUnknown;
    });
  }

  std::string return_type() {
    const Module& m = *mod_;
    std::map<std::string, std::string> env = facts_.env;
    for (const python::Param& p : facts_.params) {
      if (env.count(p.name) || (facts_.implicit && p.name == *facts_.implicit)) continue;
      std::string t = param_type(p.name);
      if (t != "Any") env[p.name] = t;
    }
    Typer typer(m, k_, env);
    std::vector<std::string> types;
    bool generator = false, raises = false, only_stub = true;
    walk_body(stmt_->body, [&](const Stmt& s) {
      if (s.kind != StmtKind::Simple) {
        only_stub = false;
        return;
      }
      for (std::size_t i = s.header.first; i < s.header.last; ++i)
        if (m.is_name(i, "yield")) generator = true;
      if (m.is_name(s.header.first, "raise")) raises = true;
      bool stub = m.is_name(s.header.first, "pass") || m.is_op(s.header.first, "...") ||
                  python::is_string_statement(m, s) || m.is_name(s.header.first, "raise");
      if (!stub) only_stub = false;
      if (!m.is_name(s.header.first, "return")) return;
      if (s.header.size() == 1) types.push_back("None");
      else types.push_back(typer.type_of({s.header.first + 1, s.header.last}));
    });
    if (generator) return "Any";
    if (types.empty()) return only_stub || raises ? "Any" : "None";
    std::string t = join_types(types);
    return t.empty() ? "Any" : t;
  }

  std::string param_type(const std::string& name) {
    const Module& m = *mod_;
    auto known = facts_.env.find(name);
    const python::Param* param = nullptr;
    for (const python::Param& p : facts_.params)
      if (p.name == name) param = &p;
    if (!param) return "Any";
    if (param->kind == python::Param::Kind::VarArgs || param->kind == python::Param::Kind::KwArgs)
      return "Any";
    bool none_default = param->default_value && param->default_value->size() == 1 &&
                        m.is_name(param->default_value->first, "None");
    if (known != facts_.env.end() && !known->second.empty()) return known->second;
    std::string usage = usage_type(name);
    if (usage.empty() || usage == "Any") return "Any";
    return none_default ? join_types({usage, "None"}) : usage;
  }

  // Type implied by how a parameter is passed on: list appends and calls to
  // functions whose parameters are annotated in the dependencies.
  std::string usage_type(const std::string& name) {
    const Module& m = *mod_;
    std::map<std::string, std::string> env = facts_.env;
    env.erase(name);
    Typer typer(m, k_, env);
    std::vector<std::string> found;
    walk_body(stmt_->body, [&](const Stmt& s) {
      TokRange r = s.header;
      for (std::size_t i = r.first; i < r.last; ++i) {
        if (!m.is_op(i, "(") || i == r.first) continue;
        std::size_t close = python::matching_bracket(m, i);
        if (close >= r.last) continue;
        // Callee extent: walk back over NAME(.NAME)* .
        std::size_t start = i - 1;
        if (!m.is_name(start)) continue;
        while (start >= r.first + 2 && m.is_op(start - 1, ".") && m.is_name(start - 2)) start -= 2;
        TokRange callee{start, i};
        std::vector<TokRange> args;
        for (TokRange a : python::split_top_level(m, {i + 1, close}, ","))
          if (!a.empty()) args.push_back(a);
        for (std::size_t ai = 0; ai < args.size(); ++ai) {
          TokRange a = args[ai];
          bool keyword = a.size() >= 3 && m.is_name(a.first) && m.is_op(a.first + 1, "=");
          TokRange value = keyword ? TokRange{a.first + 2, a.last} : a;
          if (!(value.size() == 1 && m.is_name(value.first, name))) continue;
          // list.append(p)
          if (callee.size() >= 3 && m.text(callee.last - 1) == "append" && !keyword) {
            std::string recv = strip_optional(typer.type_of({callee.first, callee.last - 2}));
            if (head_of(recv) == "list" && args_of(recv).size() == 1)
              found.push_back(args_of(recv).front());
            continue;
          }
          std::string key = typer.callee_key(callee);
          if (key.empty()) continue;
          if (k_.classes.count(key)) key += ".__init__";
          auto it = k_.params.find(key);
          if (it == k_.params.end()) continue;
          if (keyword) {
            std::string kw(m.text(a.first));
            for (const auto& [pn, pt] : it->second)
              if (pn == kw) found.push_back(pt);
          } else if (ai < it->second.size()) {
            found.push_back(it->second[ai].second);
          }
        }
      }
    });
    for (const std::string& t : found)
      if (t != "Any") return t;
    return kUnknown;
  }

  std::string variable_type() {
    const Module& m = *mod_;
    if (stmt_->kind != StmtKind::Simple) return "Any";
    auto a = python::parse_assignment(m, *stmt_);
    if (!a || !a->value) return "Any";
    std::map<std::string, std::string> env;
    Typer typer(m, k_, env);
    std::string t = typer.type_of(*a->value);
    // `self.x = name`: copy the type of an annotated parameter of that name
    // from a method of the same class.
    if (t.empty() && a->value->size() == 1 && m.is_name(a->value->first)) {
      std::string name(m.text(a->value->first));
      std::string cls = class_short_name();
      for (const auto& [key, params] : k_.params) {
        if (cls.empty() || !key.starts_with(cls + ".")) continue;
        for (const auto& [pn, pt] : params)
          if (pn == name && t.empty()) t = pt;
      }
    }
    if (t.empty() || t == "None") return "Any";
    return t;
  }

  std::string id_;
  const Knowledge& k_;
  std::unique_ptr<Module> mod_;
  const Stmt* stmt_ = nullptr;
  FunctionFacts facts_;
};

// Slots named in `[slot] ...` feedback lines.
std::set<std::string> slots_with_feedback(const std::vector<std::string>& feedback) {
  std::set<std::string> out;
  for (const std::string& f : feedback) {
    if (f.empty() || f.front() != '[') continue;
    auto close = f.find(']');
    if (close != std::string::npos) out.insert(f.substr(1, close - 1));
  }
  return out;
}

}  // namespace

OracleResponse RuleOracle::complete(const OracleRequest& request) {
  const InferenceContext& ctx = request.context;
  Knowledge knowledge(ctx);
  OracleResponse response;
  std::map<std::string, std::unique_ptr<MemberAnalysis>> members;
  for (const auto& [id, code] : ctx.member_definitions)
    members[id] = std::make_unique<MemberAnalysis>(id, code, knowledge);

  if (request.task == OracleTask::FindMissing) {
    for (const auto& [id, code] : ctx.member_definitions)
      for (MissingRef& r : members[id]->missing()) response.missing.push_back(std::move(r));
    return response;
  }
  std::set<std::string> flagged = slots_with_feedback(ctx.feedback);
  for (const std::string& slot : ctx.targets) {
    auto it = members.find(slot_entity(slot));
    std::string type = "Any";
    if (it != members.end() && !flagged.count(slot)) type = it->second->slot_type(slot_role(slot));
    if (type.empty() || !is_valid_type_expr(type)) type = "Any";
    response.annotations.emplace_back(slot, type);
  }
  return response;
}

}  // namespace edgtyper
