#pragma once

// LTL formulas over a registered set of atomic propositions.
//
// Surface syntax (ASCII):
//   atoms       identifiers, agent-suffixed by convention (scan_1)
//   constants   true false
//   unary       ! X F G  (also [] for G, <> for F)
//   binary      U R & | -> <->
// Precedence, loosest first: <->, ->, |, &, U/R, unary. -> and U/R are
// right-associative.

#include <secureplan/common.hpp>

#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace secureplan {

/// Ordered set of atomic propositions; atom k is bit k of a Symbol.
class Alphabet {
 public:
  Alphabet() = default;
  Alphabet(std::initializer_list<std::string> names) {
    for (const auto& n : names) add(n);
  }
  explicit Alphabet(const std::vector<std::string>& names) {
    for (const auto& n : names) add(n);
  }

  std::size_t add(const std::string& name) {
    if (auto i = index(name)) return *i;
    if (names_.size() >= 64) throw ConfigError("at most 64 atomic propositions are supported");
    names_.push_back(name);
    return names_.size() - 1;
  }

  std::optional<std::size_t> index(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  Symbol bit(const std::string& name) const {
    auto i = index(name);
    if (!i) throw ConfigError("unknown atomic proposition '" + name + "'");
    return Symbol{1} << *i;
  }

  Symbol symbol(const std::vector<std::string>& atoms) const {
    Symbol s = 0;
    for (const auto& a : atoms) s |= bit(a);
    return s;
  }

  std::vector<std::string> atoms_of(Symbol s) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (s >> i & 1u) out.push_back(names_[i]);
    return out;
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }
  Symbol full_mask() const { return names_.size() == 64 ? ~Symbol{0} : (Symbol{1} << names_.size()) - 1; }

 private:
  std::vector<std::string> names_;
};

namespace ltl {

enum class Op { True, False, Atom, Not, And, Or, Implies, Equiv, Next, Until, Release, Eventually, Globally };

struct Node;
using Formula = std::shared_ptr<const Node>;

struct Node {
  Op op;
  std::size_t atom = 0;  // index into the alphabet when op == Atom
  Formula lhs, rhs;
  std::size_t begin = 0, end = 0;  // source span, [begin, end)
};

inline Formula make(Op op, Formula lhs = nullptr, Formula rhs = nullptr, std::size_t begin = 0, std::size_t end = 0) {
  return std::make_shared<const Node>(Node{op, 0, std::move(lhs), std::move(rhs), begin, end});
}
inline Formula atom(std::size_t index, std::size_t begin = 0, std::size_t end = 0) {
  return std::make_shared<const Node>(Node{Op::Atom, index, nullptr, nullptr, begin, end});
}
inline Formula top() { return make(Op::True); }
inline Formula bottom() { return make(Op::False); }
inline Formula lnot(Formula f) { return make(Op::Not, std::move(f)); }
inline Formula land(Formula a, Formula b) { return make(Op::And, std::move(a), std::move(b)); }
inline Formula lor(Formula a, Formula b) { return make(Op::Or, std::move(a), std::move(b)); }
inline Formula next(Formula f) { return make(Op::Next, std::move(f)); }
inline Formula until(Formula a, Formula b) { return make(Op::Until, std::move(a), std::move(b)); }
inline Formula release(Formula a, Formula b) { return make(Op::Release, std::move(a), std::move(b)); }
inline Formula eventually(Formula f) { return make(Op::Eventually, std::move(f)); }
inline Formula globally(Formula f) { return make(Op::Globally, std::move(f)); }

inline bool is_binary(Op op) {
  return op == Op::And || op == Op::Or || op == Op::Implies || op == Op::Equiv || op == Op::Until ||
         op == Op::Release;
}

inline bool is_temporal(Op op) {
  return op == Op::Next || op == Op::Until || op == Op::Release || op == Op::Eventually || op == Op::Globally;
}

/// Fully parenthesized text; parses back to the same tree.
inline std::string to_string(const Formula& f, const Alphabet& ap) {
  switch (f->op) {
    case Op::True: return "true";
    case Op::False: return "false";
    case Op::Atom: return ap.name(f->atom);
    case Op::Not: return "!" + to_string(f->lhs, ap);
    case Op::Next: return "X " + to_string(f->lhs, ap);
    case Op::Eventually: return "F " + to_string(f->lhs, ap);
    case Op::Globally: return "G " + to_string(f->lhs, ap);
    default: break;
  }
  const char* sym = "";
  switch (f->op) {
    case Op::And: sym = " & "; break;
    case Op::Or: sym = " | "; break;
    case Op::Implies: sym = " -> "; break;
    case Op::Equiv: sym = " <-> "; break;
    case Op::Until: sym = " U "; break;
    case Op::Release: sym = " R "; break;
    default: break;
  }
  return "(" + to_string(f->lhs, ap) + sym + to_string(f->rhs, ap) + ")";
}

inline bool equal(const Formula& a, const Formula& b) {
  if (a->op != b->op) return false;
  if (a->op == Op::Atom) return a->atom == b->atom;
  if (a->lhs && !equal(a->lhs, b->lhs)) return false;
  if (a->rhs && !equal(a->rhs, b->rhs)) return false;
  return true;
}

inline std::size_t temporal_depth_count(const Formula& f) {
  if (!f) return 0;
  return (is_temporal(f->op) ? 1 : 0) + temporal_depth_count(f->lhs) + temporal_depth_count(f->rhs);
}

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, const Alphabet& ap) : text_(text), ap_(ap) {}

  Formula parse() {
    auto f = equiv();
    skip();
    if (pos_ != text_.size()) throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
    return f;
  }

 private:
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip();
    if (text_.substr(pos_, tok.size()) != tok) return false;
    // keyword operators must not run into an identifier
    if (std::isalpha(static_cast<unsigned char>(tok.front()))) {
      const std::size_t after = pos_ + tok.size();
      if (after < text_.size() && is_ident_char(text_[after])) return false;
    }
    pos_ += tok.size();
    return true;
  }

  static bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  Formula equiv() {
    const std::size_t start = (skip(), pos_);
    auto lhs = implies();
    while (accept("<->")) {
      auto rhs = implies();
      lhs = make(Op::Equiv, lhs, rhs, start, pos_);
    }
    return lhs;
  }

  Formula implies() {
    const std::size_t start = (skip(), pos_);
    auto lhs = disj();
    if (accept("->")) {
      auto rhs = implies();
      return make(Op::Implies, lhs, rhs, start, pos_);
    }
    return lhs;
  }

  Formula disj() {
    const std::size_t start = (skip(), pos_);
    auto lhs = conj();
    while (accept("||") || accept("|")) {
      auto rhs = conj();
      lhs = make(Op::Or, lhs, rhs, start, pos_);
    }
    return lhs;
  }

  Formula conj() {
    const std::size_t start = (skip(), pos_);
    auto lhs = binary_temporal();
    while (accept("&&") || accept("&")) {
      auto rhs = binary_temporal();
      lhs = make(Op::And, lhs, rhs, start, pos_);
    }
    return lhs;
  }

  Formula binary_temporal() {
    const std::size_t start = (skip(), pos_);
    auto lhs = unary();
    for (auto [tok, op] : {std::pair{"U", Op::Until}, std::pair{"R", Op::Release}}) {
      if (!accept(tok)) continue;
      auto rhs = binary_temporal();
      return make(op, lhs, rhs, start, pos_);
    }
    return lhs;
  }

  Formula unary() {
    skip();
    const std::size_t start = pos_;
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    std::optional<Op> prefix_op;
    if (accept("!") || accept("~"))
      prefix_op = Op::Not;
    else if (accept("X"))
      prefix_op = Op::Next;
    else if (accept("F") || accept("<>"))
      prefix_op = Op::Eventually;
    else if (accept("G") || accept("[]"))
      prefix_op = Op::Globally;
    if (prefix_op) {
      auto operand = unary();
      return make(*prefix_op, operand, nullptr, start, pos_);
    }
    if (accept("(")) {
      auto f = equiv();
      if (!accept(")")) throw ParseError("expected ')'", (skip(), pos_));
      return f;
    }
    if (is_ident_char(text_[pos_]) && !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      std::size_t end = pos_;
      while (end < text_.size() && is_ident_char(text_[end])) ++end;
      const std::string name(text_.substr(pos_, end - pos_));
      pos_ = end;
      if (name == "true") return make(Op::True, nullptr, nullptr, start, end);
      if (name == "false") return make(Op::False, nullptr, nullptr, start, end);
      if (name == "U" || name == "R") throw ParseError("operator '" + name + "' is missing its left operand", start);
      auto idx = ap_.index(name);
      if (!idx) throw ParseError("unknown atom '" + name + "'", start);
      return atom(*idx, start, end);
    }
    throw ParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
  }

  std::string_view text_;
  const Alphabet& ap_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Formula parse(std::string_view text, const Alphabet& ap) { return detail::Parser(text, ap).parse(); }

/// Negation normal form: negations only on atoms; -> and <-> expanded;
/// F and G are kept (as duals of each other).
inline Formula to_nnf(const Formula& f, bool negate = false) {
  switch (f->op) {
    case Op::True: return negate ? bottom() : top();
    case Op::False: return negate ? top() : bottom();
    case Op::Atom: return negate ? lnot(f) : f;
    case Op::Not: return to_nnf(f->lhs, !negate);
    case Op::And:
      return negate ? lor(to_nnf(f->lhs, true), to_nnf(f->rhs, true)) : land(to_nnf(f->lhs), to_nnf(f->rhs));
    case Op::Or:
      return negate ? land(to_nnf(f->lhs, true), to_nnf(f->rhs, true)) : lor(to_nnf(f->lhs), to_nnf(f->rhs));
    case Op::Implies:
      return negate ? land(to_nnf(f->lhs), to_nnf(f->rhs, true)) : lor(to_nnf(f->lhs, true), to_nnf(f->rhs));
    case Op::Equiv: {
      // a <-> b == (a & b) | (!a & !b);  !(a <-> b) == (a & !b) | (!a & b)
      auto a = to_nnf(f->lhs), na = to_nnf(f->lhs, true);
      auto b = to_nnf(f->rhs), nb = to_nnf(f->rhs, true);
      return negate ? lor(land(a, nb), land(na, b)) : lor(land(a, b), land(na, nb));
    }
    case Op::Next: return next(to_nnf(f->lhs, negate));
    case Op::Until:
      return negate ? release(to_nnf(f->lhs, true), to_nnf(f->rhs, true)) : until(to_nnf(f->lhs), to_nnf(f->rhs));
    case Op::Release:
      return negate ? until(to_nnf(f->lhs, true), to_nnf(f->rhs, true)) : release(to_nnf(f->lhs), to_nnf(f->rhs));
    case Op::Eventually: return negate ? globally(to_nnf(f->lhs, true)) : eventually(to_nnf(f->lhs));
    case Op::Globally: return negate ? eventually(to_nnf(f->lhs, true)) : globally(to_nnf(f->lhs));
  }
  return f;
}

inline bool is_nnf(const Formula& f) {
  switch (f->op) {
    case Op::Not: return f->lhs->op == Op::Atom;
    case Op::Implies:
    case Op::Equiv: return false;
    default: break;
  }
  return (!f->lhs || is_nnf(f->lhs)) && (!f->rhs || is_nnf(f->rhs));
}

/// Exact semantics on ultimately periodic words prefix . cycle^omega.
///
/// Subformulas are flattened children-first. cycle_values() solves the
/// cycle positions (U/F least and R/G greatest fixpoints of their one-step
/// unfolding); step() then walks a prefix backwards one letter at a time,
/// where the unfolding is no longer recursive.
class LassoEvaluator {
 public:
  using Values = std::vector<char>;  // truth per flattened subformula

  explicit LassoEvaluator(const Formula& f) { root_ = flatten(f); }

  std::size_t size() const { return nodes_.size(); }
  bool root(const Values& v) const { return v[root_]; }

  /// Values at the first cycle position.
  Values cycle_values(const std::vector<Symbol>& cycle) const {
    if (cycle.empty()) throw StructuralError("lasso cycle must be non-empty");
    const std::size_t len = cycle.size();
    std::vector<Values> at(len, Values(nodes_.size(), 0));
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const auto& n = nodes_[k];
      const bool greatest = n.op == Op::Release || n.op == Op::Globally;
      const bool fix = greatest || n.op == Op::Until || n.op == Op::Eventually;
      if (!fix) {
        // Next reads the successor's child value, already final
        for (std::size_t i = 0; i < len; ++i) at[i][k] = local(k, cycle[i], at[i], at[(i + 1) % len]);
        continue;
      }
      for (std::size_t i = 0; i < len; ++i) at[i][k] = greatest;
      for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = len; i-- > 0;) {
          const char v = local(k, cycle[i], at[i], at[(i + 1) % len]);
          if (v != at[i][k]) {
            at[i][k] = v;
            changed = true;
          }
        }
      }
    }
    return at[0];
  }

  /// Values at a position reading `letter`, given the values one step later.
  Values step(Symbol letter, const Values& next_values) const {
    Values cur(nodes_.size(), 0);
    for (std::size_t k = 0; k < nodes_.size(); ++k) cur[k] = local(k, letter, cur, next_values);
    return cur;
  }

  bool eval(const std::vector<Symbol>& prefix, const std::vector<Symbol>& cycle) const {
    auto v = cycle_values(cycle);
    for (std::size_t i = prefix.size(); i-- > 0;) v = step(prefix[i], v);
    return root(v);
  }

 private:
  struct Flat {
    Op op;
    std::size_t atom = 0, lhs = 0, rhs = 0;
  };

  std::size_t flatten(const Formula& f) {
    Flat n{f->op, f->atom, 0, 0};
    if (f->lhs) n.lhs = flatten(f->lhs);
    if (f->rhs) n.rhs = flatten(f->rhs);
    nodes_.push_back(n);
    return nodes_.size() - 1;
  }

  // One-step unfolding of node k. `cur` holds final values for children at
  // this position, `nxt` the values (or current estimates) one step later.
  char local(std::size_t k, Symbol letter, const Values& cur, const Values& nxt) const {
    const auto& n = nodes_[k];
    switch (n.op) {
      case Op::True: return 1;
      case Op::False: return 0;
      case Op::Atom: return static_cast<char>(letter >> n.atom & 1u);
      case Op::Not: return !cur[n.lhs];
      case Op::And: return cur[n.lhs] && cur[n.rhs];
      case Op::Or: return cur[n.lhs] || cur[n.rhs];
      case Op::Implies: return !cur[n.lhs] || cur[n.rhs];
      case Op::Equiv: return cur[n.lhs] == cur[n.rhs];
      case Op::Next: return nxt[n.lhs];
      case Op::Eventually: return cur[n.lhs] || nxt[k];
      case Op::Globally: return cur[n.lhs] && nxt[k];
      case Op::Until: return cur[n.rhs] || (cur[n.lhs] && nxt[k]);
      case Op::Release: return cur[n.rhs] && (cur[n.lhs] || nxt[k]);
    }
    return 0;
  }

  std::vector<Flat> nodes_;
  std::size_t root_ = 0;
};

/// Truth of f at position 0 of prefix . cycle^omega.
inline bool eval_on_lasso(const Formula& f, const std::vector<Symbol>& prefix, const std::vector<Symbol>& cycle) {
  return LassoEvaluator(f).eval(prefix, cycle);
}
}  // namespace ltl
}  // namespace secureplan
