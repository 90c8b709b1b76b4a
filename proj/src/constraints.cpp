#include "potl/constraints.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

#include "potl/errors.hpp"

namespace potl {

namespace dsl {

enum class Kind {
  Or,
  And,
  Not,
  Implies,
  Cmp,
  Number,
  String,
  ItemAttr,
  Pos,
  Row,
  Contains,
  Position,
  Adjacent,
  Attr,
  Count,
  Exists,
  MaxPerRow,
};

enum class Rel { Lt, Le, Eq, Ne, Ge, Gt };

struct Node {
  Kind kind;
  Rel rel = Rel::Eq;
  double number = 0.0;
  std::string text;  // string literal or attribute name
  std::vector<Node> children;
  std::size_t src_pos = 0;
};

}  // namespace dsl

namespace {

using dsl::Kind;
using dsl::Node;
using dsl::Rel;

// ---------------------------------------------------------------------------
// Tokenizer

enum class TokKind { Ident, Number, String, Symbol, End };

struct Token {
  TokKind kind;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& current() const { return current_; }

  void advance() {
    skip_ws();
    current_.pos = pos_;
    if (pos_ >= text_.size()) {
      current_ = {TokKind::End, "", 0.0, pos_};
      return;
    }
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      current_ = {TokKind::Ident, std::string(text_.substr(start, pos_ - start)),
                  0.0, start};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '.')) {
        ++pos_;
      }
      std::string num(text_.substr(start, pos_ - start));
      try {
        current_ = {TokKind::Number, num, std::stod(num), start};
      } catch (const std::exception&) {
        raise(ErrorCode::SyntaxError,
              "bad number '" + num + "' at position " + std::to_string(start));
      }
      return;
    }
    if (c == '"') {
      std::size_t start = pos_++;
      std::string value;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        value += text_[pos_++];
      }
      if (pos_ >= text_.size()) {
        raise(ErrorCode::SyntaxError, "unterminated string literal at position " +
                                          std::to_string(start));
      }
      ++pos_;  // closing quote
      current_ = {TokKind::String, value, 0.0, start};
      return;
    }
    // Multi-char relops first.
    for (std::string_view sym : {"<=", ">=", "!="}) {
      if (text_.substr(pos_, 2) == sym) {
        current_ = {TokKind::Symbol, std::string(sym), 0.0, pos_};
        pos_ += 2;
        return;
      }
    }
    if (std::string_view("()<>=,.").find(c) != std::string_view::npos) {
      current_ = {TokKind::Symbol, std::string(1, c), 0.0, pos_};
      ++pos_;
      return;
    }
    raise(ErrorCode::SyntaxError, std::string("unexpected character '") + c +
                                      "' at position " + std::to_string(pos_));
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token current_;
};

// ---------------------------------------------------------------------------
// Recursive-descent parser following the published grammar:
//   expr := or ; or := and ("or" and)* ; and := unary ("and" unary)*
//   unary := "not" unary | cmp | "(" expr ")"
//   cmp := term (relop term)? ; term := number | string | call
//          | "item" "." ident | "pos" | "row"

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : lexer_(text) {}

  Node parse() {
    Node node = parse_or();
    if (lexer_.current().kind != TokKind::End) {
      raise(ErrorCode::SyntaxError,
            "trailing input at position " + std::to_string(lexer_.current().pos));
    }
    return node;
  }

 private:
  bool at_ident(std::string_view word) const {
    return lexer_.current().kind == TokKind::Ident &&
           lexer_.current().text == word;
  }
  bool at_symbol(std::string_view sym) const {
    return lexer_.current().kind == TokKind::Symbol &&
           lexer_.current().text == sym;
  }
  void expect_symbol(std::string_view sym) {
    if (!at_symbol(sym)) {
      raise(ErrorCode::SyntaxError,
            "expected '" + std::string(sym) + "' at position " +
                std::to_string(lexer_.current().pos));
    }
    lexer_.advance();
  }

  Node parse_or() {
    Node first = parse_and();
    if (!at_ident("or")) return first;
    Node node{Kind::Or};
    node.src_pos = first.src_pos;
    node.children.push_back(std::move(first));
    while (at_ident("or")) {
      lexer_.advance();
      node.children.push_back(parse_and());
    }
    return node;
  }

  Node parse_and() {
    Node first = parse_unary();
    if (!at_ident("and")) return first;
    Node node{Kind::And};
    node.src_pos = first.src_pos;
    node.children.push_back(std::move(first));
    while (at_ident("and")) {
      lexer_.advance();
      node.children.push_back(parse_unary());
    }
    return node;
  }

  Node parse_unary() {
    if (at_ident("not")) {
      Node node{Kind::Not};
      node.src_pos = lexer_.current().pos;
      lexer_.advance();
      node.children.push_back(parse_unary());
      return node;
    }
    if (at_symbol("(")) {
      lexer_.advance();
      Node inner = parse_or();
      expect_symbol(")");
      return inner;
    }
    return parse_cmp();
  }

  static std::optional<Rel> rel_of(const Token& token) {
    if (token.kind != TokKind::Symbol) return std::nullopt;
    if (token.text == "<") return Rel::Lt;
    if (token.text == "<=") return Rel::Le;
    if (token.text == "=") return Rel::Eq;
    if (token.text == "!=") return Rel::Ne;
    if (token.text == ">=") return Rel::Ge;
    if (token.text == ">") return Rel::Gt;
    return std::nullopt;
  }

  Node parse_cmp() {
    Node lhs = parse_term();
    std::optional<Rel> rel = rel_of(lexer_.current());
    if (!rel) return lhs;
    Node node{Kind::Cmp};
    node.src_pos = lexer_.current().pos;
    node.rel = *rel;
    lexer_.advance();
    node.children.push_back(std::move(lhs));
    node.children.push_back(parse_term());
    return node;
  }

  Node parse_term() {
    const Token& token = lexer_.current();
    switch (token.kind) {
      case TokKind::Number: {
        Node node{Kind::Number};
        node.number = token.number;
        node.src_pos = token.pos;
        lexer_.advance();
        return node;
      }
      case TokKind::String: {
        Node node{Kind::String};
        node.text = token.text;
        node.src_pos = token.pos;
        lexer_.advance();
        return node;
      }
      case TokKind::Ident:
        return parse_ident_term();
      default:
        raise(ErrorCode::SyntaxError,
              "expected a term at position " + std::to_string(token.pos));
    }
  }

  Node parse_ident_term() {
    Token token = lexer_.current();
    std::string name = token.text;
    lexer_.advance();

    if (name == "pos") {
      Node node{Kind::Pos};
      node.src_pos = token.pos;
      return node;
    }
    if (name == "row") {
      Node node{Kind::Row};
      node.src_pos = token.pos;
      return node;
    }
    if (name == "item") {
      expect_symbol(".");
      if (lexer_.current().kind != TokKind::Ident) {
        raise(ErrorCode::SyntaxError, "expected attribute name after 'item.' at "
                                      "position " +
                                          std::to_string(lexer_.current().pos));
      }
      Node node{Kind::ItemAttr};
      node.text = lexer_.current().text;
      node.src_pos = token.pos;
      lexer_.advance();
      return node;
    }

    if (!at_symbol("(")) {
      raise(ErrorCode::SyntaxError, "unknown bare identifier '" + name +
                                        "' at position " +
                                        std::to_string(token.pos));
    }
    lexer_.advance();  // "("
    std::vector<Node> args;
    if (!at_symbol(")")) {
      args.push_back(parse_or());
      while (at_symbol(",")) {
        lexer_.advance();
        args.push_back(parse_or());
      }
    }
    expect_symbol(")");

    struct Builtin {
      std::string_view name;
      Kind kind;
      std::size_t arity;
    };
    static constexpr Builtin kBuiltins[] = {
        {"contains", Kind::Contains, 1}, {"position", Kind::Position, 1},
        {"adjacent", Kind::Adjacent, 2}, {"attr", Kind::Attr, 2},
        {"count", Kind::Count, 1},       {"exists", Kind::Exists, 1},
        {"max_per_row", Kind::MaxPerRow, 1}, {"implies", Kind::Implies, 2},
    };
    for (const Builtin& builtin : kBuiltins) {
      if (builtin.name != name) continue;
      if (args.size() != builtin.arity) {
        raise(ErrorCode::SyntaxError,
              "'" + name + "' takes " + std::to_string(builtin.arity) +
                  " argument(s), got " + std::to_string(args.size()) +
                  " at position " + std::to_string(token.pos));
      }
      Node node{builtin.kind};
      node.src_pos = token.pos;
      node.children = std::move(args);
      return node;
    }
    raise(ErrorCode::SyntaxError, "unknown function '" + name +
                                      "' at position " +
                                      std::to_string(token.pos));
  }

  Lexer lexer_;
};

// ---------------------------------------------------------------------------
// Static type check. item.<attr>, pos and row bind per slot and are only
// meaningful inside an aggregate argument; aggregates do not nest.

enum class Type { Bool, Num, Str, Any };

bool bool_compatible(Type t) { return t == Type::Bool || t == Type::Any; }

[[noreturn]] void type_error(const std::string& path, const std::string& what) {
  raise(ErrorCode::TypeError, what, path);
}

Type check_types(const Node& node, bool in_aggregate, const std::string& path) {
  auto child_path = [&](std::size_t i, std::string_view tag) {
    return path + "/" + std::string(tag) + "[" + std::to_string(i) + "]";
  };
  switch (node.kind) {
    case Kind::Or:
    case Kind::And: {
      const char* tag = node.kind == Kind::Or ? "or" : "and";
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (!bool_compatible(
                check_types(node.children[i], in_aggregate, child_path(i, tag)))) {
          type_error(child_path(i, tag), "connective operand is not boolean");
        }
      }
      return Type::Bool;
    }
    case Kind::Not:
      if (!bool_compatible(
              check_types(node.children[0], in_aggregate, path + "/not"))) {
        type_error(path + "/not", "'not' operand is not boolean");
      }
      return Type::Bool;
    case Kind::Implies:
      for (std::size_t i = 0; i < 2; ++i) {
        if (!bool_compatible(check_types(node.children[i], in_aggregate,
                                         child_path(i, "implies")))) {
          type_error(child_path(i, "implies"),
                     "'implies' argument is not boolean");
        }
      }
      return Type::Bool;
    case Kind::Cmp: {
      Type lhs = check_types(node.children[0], in_aggregate, path + "/cmp.lhs");
      Type rhs = check_types(node.children[1], in_aggregate, path + "/cmp.rhs");
      if (lhs != Type::Any && rhs != Type::Any && lhs != rhs) {
        type_error(path + "/cmp", "comparison between different types");
      }
      bool ordering = node.rel != Rel::Eq && node.rel != Rel::Ne;
      if (ordering && (lhs == Type::Bool || rhs == Type::Bool)) {
        type_error(path + "/cmp", "ordering comparison over booleans");
      }
      return Type::Bool;
    }
    case Kind::Number:
      return Type::Num;
    case Kind::String:
      return Type::Str;
    case Kind::ItemAttr:
      if (!in_aggregate) {
        type_error(path + "/item." + node.text,
                   "item.<attr> is only bound inside an aggregate");
      }
      return Type::Any;
    case Kind::Pos:
    case Kind::Row:
      if (!in_aggregate) {
        type_error(path + (node.kind == Kind::Pos ? "/pos" : "/row"),
                   "slot variable is only bound inside an aggregate");
      }
      return Type::Num;
    case Kind::Contains:
    case Kind::Position: {
      Type arg = check_types(node.children[0], in_aggregate, path + "/arg[0]");
      if (arg != Type::Str && arg != Type::Any) {
        type_error(path + "/arg[0]", "item id argument must be a string");
      }
      return node.kind == Kind::Contains ? Type::Bool : Type::Num;
    }
    case Kind::Adjacent:
      for (std::size_t i = 0; i < 2; ++i) {
        Type arg = check_types(node.children[i], in_aggregate,
                               child_path(i, "arg"));
        if (arg != Type::Str && arg != Type::Any) {
          type_error(child_path(i, "arg"),
                     "item id argument must be a string");
        }
      }
      return Type::Bool;
    case Kind::Attr: {
      Type pos_arg = check_types(node.children[0], in_aggregate, path + "/arg[0]");
      if (pos_arg != Type::Num && pos_arg != Type::Any) {
        type_error(path + "/arg[0]", "attr position must be a number");
      }
      Type name_arg =
          check_types(node.children[1], in_aggregate, path + "/arg[1]");
      if (name_arg != Type::Str && name_arg != Type::Any) {
        type_error(path + "/arg[1]", "attr name must be a string");
      }
      return Type::Any;
    }
    case Kind::Count:
    case Kind::Exists:
    case Kind::MaxPerRow: {
      if (in_aggregate) {
        type_error(path, "aggregates do not nest");
      }
      const char* tag = node.kind == Kind::Count ? "count"
                        : node.kind == Kind::Exists ? "exists"
                                                    : "max_per_row";
      Type arg = check_types(node.children[0], true,
                             path + "/" + std::string(tag));
      if (!bool_compatible(arg)) {
        type_error(path + "/" + std::string(tag),
                   "aggregate argument is not a slot predicate");
      }
      return node.kind == Kind::Exists ? Type::Bool : Type::Num;
    }
  }
  return Type::Any;
}

// ---------------------------------------------------------------------------
// Evaluation

struct Value {
  enum class Kind { Num, Str, Bool, Missing } kind = Kind::Missing;
  double num = 0.0;
  std::string str;
  bool b = false;

  static Value number(double v) { return {Kind::Num, v, {}, false}; }
  static Value string(std::string v) { return {Kind::Str, 0.0, std::move(v), false}; }
  static Value boolean(bool v) { return {Kind::Bool, 0.0, {}, v}; }
  static Value missing() { return {}; }
  static Value from_scalar(const Scalar& scalar) {
    if (const auto* s = std::get_if<std::string>(&scalar)) return string(*s);
    if (const auto* d = std::get_if<double>(&scalar)) return number(*d);
    return boolean(std::get<bool>(scalar));
  }
};

// Non-boolean values in a boolean position are strictly false; missing
// attribute values make the touching predicate false.
bool as_bool(const Value& value) {
  return value.kind == Value::Kind::Bool && value.b;
}

int row_of(int position, int columns) {
  return (position + std::max(columns, 1) - 1) / std::max(columns, 1);
}

class Evaluator {
 public:
  Evaluator(const EvalContext& ctx) : ctx_(ctx) {}

  bool evaluate(const Node& node) { return as_bool(eval(node, -1)); }

 private:
  int find_position(const std::string& item_id) const {
    for (std::size_t i = 0; i < ctx_.assignment.size(); ++i) {
      if (ctx_.assignment[i] == item_id) return static_cast<int>(i) + 1;
    }
    return 0;
  }

  Value attr_lookup(const AttrMap* attrs, const std::string& name) const {
    if (!attrs) return Value::missing();
    auto it = attrs->find(name);
    if (it == attrs->end()) return Value::missing();
    return Value::from_scalar(it->second);
  }

  // slot is a 0-based assignment index, -1 outside aggregates.
  Value eval(const Node& node, int slot) {
    switch (node.kind) {
      case Kind::Or: {
        for (const Node& child : node.children) {
          if (as_bool(eval(child, slot))) return Value::boolean(true);
        }
        return Value::boolean(false);
      }
      case Kind::And: {
        for (const Node& child : node.children) {
          if (!as_bool(eval(child, slot))) return Value::boolean(false);
        }
        return Value::boolean(true);
      }
      case Kind::Not:
        return Value::boolean(!as_bool(eval(node.children[0], slot)));
      case Kind::Implies: {
        if (!as_bool(eval(node.children[0], slot))) return Value::boolean(true);
        return Value::boolean(as_bool(eval(node.children[1], slot)));
      }
      case Kind::Cmp:
        return eval_cmp(node, slot);
      case Kind::Number:
        return Value::number(node.number);
      case Kind::String:
        return Value::string(node.text);
      case Kind::ItemAttr: {
        if (slot < 0) return Value::missing();
        const AttrMap* attrs =
            ctx_.attrs_of(ctx_.assignment[static_cast<std::size_t>(slot)]);
        return attr_lookup(attrs, node.text);
      }
      case Kind::Pos:
        return slot < 0 ? Value::missing() : Value::number(slot + 1);
      case Kind::Row:
        return slot < 0 ? Value::missing()
                        : Value::number(row_of(slot + 1, ctx_.columns));
      case Kind::Contains: {
        Value id = eval(node.children[0], slot);
        if (id.kind != Value::Kind::Str) return Value::boolean(false);
        return Value::boolean(find_position(id.str) != 0);
      }
      case Kind::Position: {
        Value id = eval(node.children[0], slot);
        if (id.kind != Value::Kind::Str) return Value::number(0);
        return Value::number(find_position(id.str));
      }
      case Kind::Adjacent: {
        Value a = eval(node.children[0], slot);
        Value b = eval(node.children[1], slot);
        if (a.kind != Value::Kind::Str || b.kind != Value::Kind::Str) {
          return Value::boolean(false);
        }
        int pa = find_position(a.str);
        int pb = find_position(b.str);
        return Value::boolean(pa != 0 && pb != 0 && std::abs(pa - pb) == 1);
      }
      case Kind::Attr: {
        Value pos = eval(node.children[0], slot);
        Value name = eval(node.children[1], slot);
        if (pos.kind != Value::Kind::Num || name.kind != Value::Kind::Str) {
          return Value::missing();
        }
        int p = static_cast<int>(pos.num);
        if (p == 0) return attr_lookup(ctx_.query_attrs, name.str);
        if (p < 1 || p > static_cast<int>(ctx_.assignment.size())) {
          return Value::missing();
        }
        const AttrMap* attrs =
            ctx_.attrs_of(ctx_.assignment[static_cast<std::size_t>(p - 1)]);
        return attr_lookup(attrs, name.str);
      }
      case Kind::Count: {
        int n = 0;
        for (std::size_t i = 0; i < ctx_.assignment.size(); ++i) {
          if (as_bool(eval(node.children[0], static_cast<int>(i)))) ++n;
        }
        return Value::number(n);
      }
      case Kind::Exists: {
        for (std::size_t i = 0; i < ctx_.assignment.size(); ++i) {
          if (as_bool(eval(node.children[0], static_cast<int>(i)))) {
            return Value::boolean(true);
          }
        }
        return Value::boolean(false);
      }
      case Kind::MaxPerRow: {
        std::map<int, int> per_row;
        for (std::size_t i = 0; i < ctx_.assignment.size(); ++i) {
          if (as_bool(eval(node.children[0], static_cast<int>(i)))) {
            ++per_row[row_of(static_cast<int>(i) + 1, ctx_.columns)];
          }
        }
        int best = 0;
        for (const auto& [row, n] : per_row) best = std::max(best, n);
        return Value::number(best);
      }
    }
    return Value::missing();
  }

  Value eval_cmp(const Node& node, int slot) {
    Value lhs = eval(node.children[0], slot);
    Value rhs = eval(node.children[1], slot);
    if (lhs.kind == Value::Kind::Missing || rhs.kind == Value::Kind::Missing) {
      return Value::boolean(false);
    }
    if (lhs.kind != rhs.kind) return Value::boolean(false);
    int cmp;
    if (lhs.kind == Value::Kind::Num) {
      cmp = lhs.num < rhs.num ? -1 : (lhs.num > rhs.num ? 1 : 0);
    } else if (lhs.kind == Value::Kind::Str) {
      cmp = lhs.str.compare(rhs.str);
      cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
    } else {
      if (node.rel != Rel::Eq && node.rel != Rel::Ne) {
        return Value::boolean(false);  // no ordering over booleans
      }
      cmp = lhs.b == rhs.b ? 0 : 1;
    }
    switch (node.rel) {
      case Rel::Lt: return Value::boolean(cmp < 0);
      case Rel::Le: return Value::boolean(cmp <= 0);
      case Rel::Eq: return Value::boolean(cmp == 0);
      case Rel::Ne: return Value::boolean(cmp != 0);
      case Rel::Ge: return Value::boolean(cmp >= 0);
      case Rel::Gt: return Value::boolean(cmp > 0);
    }
    return Value::boolean(false);
  }

  const EvalContext& ctx_;
};

}  // namespace

const AttrMap* EvalContext::attrs_of(const std::string& item_id) const {
  if (!catalog_view) return nullptr;
  auto it = catalog_view->find(item_id);
  return it == catalog_view->end() ? nullptr : &it->second;
}

ConstraintExpr compile_constraint(std::string_view text) {
  ExprParser parser(text);
  Node root = parser.parse();
  Type type = check_types(root, false, "");
  if (!bool_compatible(type)) {
    raise(ErrorCode::TypeError, "expression is not boolean", "/");
  }
  ConstraintExpr expr;
  expr.root_ = std::make_shared<const Node>(std::move(root));
  expr.source_ = std::string(text);
  return expr;
}

bool evaluate(const ConstraintExpr& expr, const EvalContext& ctx) {
  if (!expr.compiled()) {
    raise(ErrorCode::Internal, "evaluating an uncompiled constraint");
  }
  for (const std::string& item_id : ctx.assignment) {
    if (!ctx.attrs_of(item_id)) {
      raise(ErrorCode::MissingItem,
            "assignment references unknown item '" + item_id + "'");
    }
  }
  Evaluator evaluator(ctx);
  return evaluator.evaluate(expr.root());
}

Verdict check_scope(const std::vector<CompiledConstraint>& constraints,
                    const EvalContext& ctx) {
  Verdict verdict;
  for (const CompiledConstraint& constraint : constraints) {
    ++verdict.evaluated;
    if (!evaluate(constraint.expr, ctx)) {
      verdict.ok = false;
      verdict.first_violated = constraint.id;
      return verdict;
    }
  }
  return verdict;
}

std::uint64_t permutation_count(std::uint64_t n, std::uint64_t k,
                                std::uint64_t limit) {
  std::uint64_t total = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    if (i >= n) return 0;  // k > n: no injective assignment
    std::uint64_t factor = n - i;
    if (factor != 0 && total > limit / factor) return limit + 1;
    total *= factor;
  }
  return total;
}

void enumerate_assignments(
    const std::vector<PoolItem>& items, int k,
    const std::vector<CompiledConstraint>& constraints, int columns,
    const AttrMap* query_attrs,
    const std::function<void(const std::vector<std::size_t>&, bool)>& visit) {
  if (k < 0) raise(ErrorCode::DomainError, "negative position count");
  std::uint64_t space = permutation_count(
      items.size(), static_cast<std::uint64_t>(k), kEnumerationGuard);
  if (space > kEnumerationGuard) {
    raise(ErrorCode::TooLarge,
          "P(n, k) exceeds the enumeration guard of 10^6");
  }

  std::map<std::string, AttrMap> view;
  static const AttrMap kEmpty;
  for (const PoolItem& item : items) {
    view[item.id] = item.attrs ? *item.attrs : kEmpty;
  }
  EvalContext ctx;
  ctx.catalog_view = &view;
  ctx.columns = columns;
  ctx.query_attrs = query_attrs;

  std::vector<std::size_t> chosen;
  std::vector<bool> used(items.size(), false);
  std::function<void()> recurse = [&]() {
    if (static_cast<int>(chosen.size()) == k) {
      bool feasible = true;
      for (const CompiledConstraint& constraint : constraints) {
        if (!evaluate(constraint.expr, ctx)) {
          feasible = false;
          break;
        }
      }
      visit(chosen, feasible);
      return;
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      chosen.push_back(i);
      ctx.assignment.push_back(items[i].id);
      recurse();
      ctx.assignment.pop_back();
      chosen.pop_back();
      used[i] = false;
    }
  };
  recurse();
}

std::uint64_t count_feasible(const std::vector<PoolItem>& items, int k,
                             const std::vector<CompiledConstraint>& constraints,
                             int columns, const AttrMap* query_attrs) {
  std::uint64_t count = 0;
  enumerate_assignments(items, k, constraints, columns, query_attrs,
                        [&](const std::vector<std::size_t>&, bool feasible) {
                          if (feasible) ++count;
                        });
  return count;
}

}  // namespace potl
