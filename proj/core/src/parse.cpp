#include "docalc/parse.hpp"

#include <cctype>
#include <optional>
#include <utility>
#include <vector>

namespace docalc {

// ---------------------------------------------------------------------------
// Surface tree

struct ParsedExpr::Node {
  enum class Kind { Term, Sum, Product, Quotient, One };

  struct Slot {
    std::string name;
    bool intervention = false;
    std::optional<int> fixed;
  };

  Kind kind = Kind::One;
  std::vector<Slot> targets;     // Term
  std::vector<Slot> conditions;  // Term
  std::string binder;            // Sum display name
  std::vector<std::shared_ptr<const Node>> children;
};

namespace {

using PNode = ParsedExpr::Node;
using PNodePtr = std::shared_ptr<const PNode>;

// ---------------------------------------------------------------------------
// Lexer

struct Token {
  enum class Kind {
    Ident,     // identifier, possibly with trailing primes
    TermStart, // P(
    SumBinder, // Σ_name or sum_name; text holds the binder name
    LParen,
    RParen,
    Pipe,
    Comma,
    Slash,
    Equals,
    Number,
    One,
    End,
  };
  Kind kind;
  std::string text;
  long number = 0;
  std::size_t pos = 0;
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }
  Token take() {
    Token t = current_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    current_.pos = pos_;
    if (pos_ >= text_.size()) {
      current_.kind = Token::Kind::End;
      current_.text.clear();
      return;
    }
    char c = text_[pos_];

    // UTF-8 Σ (0xCE 0xA3) introduces a sum binder.
    if (static_cast<unsigned char>(c) == 0xCE && pos_ + 1 < text_.size() &&
        static_cast<unsigned char>(text_[pos_ + 1]) == 0xA3) {
      pos_ += 2;
      lex_binder();
      return;
    }

    if (ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      while (pos_ < text_.size() && text_[pos_] == '\'') ++pos_;
      std::string word(text_.substr(start, pos_ - start));
      if (word == "P" && pos_ < text_.size() && text_[pos_] == '(') {
        ++pos_;
        current_.kind = Token::Kind::TermStart;
        return;
      }
      if (word.rfind("sum_", 0) == 0 && word.size() > 4) {
        current_.kind = Token::Kind::SumBinder;
        current_.text = word.substr(4);
        return;
      }
      if (word == "sum" && pos_ < text_.size() && text_[pos_] == '_') {
        ++pos_;
        lex_binder();
        return;
      }
      current_.kind = Token::Kind::Ident;
      current_.text = std::move(word);
      return;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
      std::string digits(text_.substr(start, pos_ - start));
      if (digits == "1") {
        current_.kind = Token::Kind::One;
        return;
      }
      current_.kind = Token::Kind::Number;
      current_.number = std::stol(digits);
      return;
    }

    ++pos_;
    switch (c) {
      case '(': current_.kind = Token::Kind::LParen; return;
      case ')': current_.kind = Token::Kind::RParen; return;
      case '|': current_.kind = Token::Kind::Pipe; return;
      case ',': current_.kind = Token::Kind::Comma; return;
      case '/': current_.kind = Token::Kind::Slash; return;
      case '=': current_.kind = Token::Kind::Equals; return;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'",
                         pos_ - 1);
    }
  }

  // After Σ or "sum", expect `_name` or `_{name}`.
  void lex_binder() {
    if (pos_ < text_.size() && text_[pos_] == '_') ++pos_;
    bool braced = pos_ < text_.size() && text_[pos_] == '{';
    if (braced) ++pos_;
    if (pos_ >= text_.size() || !ident_start(text_[pos_]))
      throw ParseError("expected a binder name after the summation sign",
                       pos_);
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    while (pos_ < text_.size() && text_[pos_] == '\'') ++pos_;
    current_.kind = Token::Kind::SumBinder;
    current_.text = std::string(text_.substr(start, pos_ - start));
    if (braced) {
      if (pos_ >= text_.size() || text_[pos_] != '}')
        throw ParseError("expected '}' after binder name", pos_);
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token current_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
  explicit Parser(std::string_view text) : lex_(text) {}

  PNodePtr parse() {
    PNodePtr e = expr();
    if (lex_.peek().kind != Token::Kind::End)
      throw ParseError("trailing input after expression", lex_.peek().pos);
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& what) {
    throw ParseError(what, lex_.peek().pos);
  }

  void expect(Token::Kind kind, const char* what) {
    if (lex_.peek().kind != kind) fail(std::string("expected ") + what);
    lex_.take();
  }

  bool starts_factor(Token::Kind k) const {
    return k == Token::Kind::TermStart || k == Token::Kind::SumBinder ||
           k == Token::Kind::LParen || k == Token::Kind::One;
  }

  PNodePtr expr() {
    PNodePtr left = product();
    while (lex_.peek().kind == Token::Kind::Slash) {
      lex_.take();
      PNodePtr right = product();
      auto node = std::make_shared<PNode>();
      node->kind = PNode::Kind::Quotient;
      node->children = {std::move(left), std::move(right)};
      left = std::move(node);
    }
    return left;
  }

  PNodePtr product() {
    std::vector<PNodePtr> factors;
    if (!starts_factor(lex_.peek().kind)) fail("expected an expression");
    while (starts_factor(lex_.peek().kind)) {
      if (lex_.peek().kind == Token::Kind::SumBinder) {
        // A sum absorbs the remainder of the current product as its body.
        Token binder = lex_.take();
        PNodePtr body = product();
        auto node = std::make_shared<PNode>();
        node->kind = PNode::Kind::Sum;
        node->binder = binder.text;
        node->children = {std::move(body)};
        factors.push_back(std::move(node));
        break;
      }
      factors.push_back(factor());
    }
    if (factors.size() == 1) return factors[0];
    auto node = std::make_shared<PNode>();
    node->kind = PNode::Kind::Product;
    node->children = std::move(factors);
    return node;
  }

  PNodePtr factor() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Kind::One) {
      lex_.take();
      auto node = std::make_shared<PNode>();
      node->kind = PNode::Kind::One;
      return node;
    }
    if (t.kind == Token::Kind::LParen) {
      lex_.take();
      PNodePtr inner = expr();
      expect(Token::Kind::RParen, "')'");
      return inner;
    }
    if (t.kind == Token::Kind::TermStart) return term();
    fail("expected a term, sum, or parenthesized expression");
  }

  PNode::Slot slot(bool allow_do) {
    PNode::Slot s;
    if (allow_do && lex_.peek().kind == Token::Kind::Ident &&
        lex_.peek().text == "do") {
      lex_.take();
      expect(Token::Kind::LParen, "'(' after do");
      s = slot(false);
      s.intervention = true;
      expect(Token::Kind::RParen, "')' after do(...)");
      return s;
    }
    if (lex_.peek().kind != Token::Kind::Ident) fail("expected a variable");
    s.name = lex_.take().text;
    if (lex_.peek().kind == Token::Kind::Equals) {
      lex_.take();
      if (lex_.peek().kind == Token::Kind::One) {
        lex_.take();
        s.fixed = 1;
      } else if (lex_.peek().kind == Token::Kind::Number) {
        s.fixed = static_cast<int>(lex_.take().number);
      } else {
        fail("expected a value after '='");
      }
    }
    return s;
  }

  PNodePtr term() {
    lex_.take();  // TermStart already consumed the 'P('
    auto node = std::make_shared<PNode>();
    node->kind = PNode::Kind::Term;
    node->targets.push_back(slot(false));
    while (lex_.peek().kind == Token::Kind::Comma) {
      lex_.take();
      node->targets.push_back(slot(false));
    }
    if (lex_.peek().kind == Token::Kind::Pipe) {
      lex_.take();
      node->conditions.push_back(slot(true));
      while (lex_.peek().kind == Token::Kind::Comma) {
        lex_.take();
        node->conditions.push_back(slot(true));
      }
    }
    expect(Token::Kind::RParen, "')'");
    return node;
  }

  Lexer lex_;
};

// ---------------------------------------------------------------------------
// Binding

std::string strip_primes(const std::string& name) {
  std::size_t end = name.size();
  while (end > 0 && name[end - 1] == '\'') --end;
  return name.substr(0, end);
}

VariableId resolve_observed(const CausalGraph& g, const std::string& name) {
  auto id = g.find(name);
  if (!id) throw NameError("unknown variable: " + name);
  if (!g.observed(*id))
    throw ArgumentError("latent variable may not appear in an expression: " +
                        name);
  return *id;
}

struct Binder {
  const CausalGraph& g;
  std::vector<std::string> displays;  // outermost first

  ValueRef lookup(const std::string& name, VariableId* var_out) const {
    for (std::size_t i = displays.size(); i-- > 0;) {
      if (displays[i] == name) {
        int depth = static_cast<int>(displays.size() - 1 - i);
        *var_out = resolve_observed(g, strip_primes(name));
        return ValueRef::bound(depth);
      }
    }
    *var_out = resolve_observed(g, name);
    return ValueRef::free();
  }

  ExprPtr rec(const PNode& n) {
    switch (n.kind) {
      case PNode::Kind::One:
        return expr_one();
      case PNode::Kind::Quotient:
        return make_quotient(rec(*n.children[0]), rec(*n.children[1]));
      case PNode::Kind::Product: {
        std::vector<ExprPtr> fs;
        fs.reserve(n.children.size());
        for (const auto& c : n.children) fs.push_back(rec(*c));
        return make_product(std::move(fs));
      }
      case PNode::Kind::Sum: {
        resolve_observed(g, strip_primes(n.binder));  // domain must exist
        displays.push_back(n.binder);
        ExprPtr body = rec(*n.children[0]);
        displays.pop_back();
        return make_sum(resolve_observed(g, strip_primes(n.binder)),
                        std::move(body));
      }
      case PNode::Kind::Term: {
        std::vector<TermVar> targets;
        for (const auto& s : n.targets) {
          VariableId var;
          ValueRef ref = lookup(s.name, &var);
          if (s.fixed) ref = ValueRef::fixed(*s.fixed);
          targets.push_back(TermVar{var, ref});
        }
        std::vector<TermCond> conds;
        for (const auto& s : n.conditions) {
          VariableId var;
          ValueRef ref = lookup(s.name, &var);
          if (s.fixed) ref = ValueRef::fixed(*s.fixed);
          conds.push_back(TermCond{
              var,
              s.intervention ? CondMode::Intervention : CondMode::Observation,
              ref});
        }
        return make_term(ProbTerm(std::move(targets), std::move(conds)));
      }
    }
    throw StructureError("corrupt parse tree");
  }
};

}  // namespace

ExprPtr ParsedExpr::bind(const CausalGraph& g) const {
  Binder b{g, {}};
  ExprPtr e = b.rec(*root_);
  validate(e);
  return e;
}

ParsedExpr parse_query(std::string_view text) {
  Parser p(text);
  return ParsedExpr(p.parse());
}

ExprPtr parse_and_bind(std::string_view text, const CausalGraph& g) {
  return canonicalize(parse_query(text).bind(g));
}

Query parse_query_term(std::string_view text, const CausalGraph& g) {
  ExprPtr e = parse_query(text).bind(g);
  const TermNode* t = e->as_term();
  if (!t)
    throw ArgumentError("a query must be a single P(...) term");
  return Query{t->term};
}

}  // namespace docalc
