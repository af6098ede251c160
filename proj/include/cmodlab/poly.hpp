#pragma once

#include <gmpxx.h>

#include <map>
#include <string>
#include <vector>

#include "cmodlab/error.hpp"

namespace cmodlab {

/// Exponent vector over the full variable list (lambda variables first).
using Mono = std::vector<int>;

inline long mono_degree(const Mono& m) {
  long d = 0;
  for (int e : m) d += e;
  return d;
}

struct VarTable {
  std::vector<std::string> names;  // lambda vars first, then fiber vars
  long lambda_count = 0;

  long total() const { return static_cast<long>(names.size()); }
  long fiber_count() const { return total() - lambda_count; }
  bool is_lambda(long idx) const { return idx < lambda_count; }

  long index_of(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<long>(i);
    return -1;
  }
};

/// Sparse polynomial with exact rational coefficients.
class Poly {
 public:
  Poly() : nvars_(0) {}
  explicit Poly(long nvars) : nvars_(nvars) {}

  static Poly constant(long nvars, const mpq_class& c) {
    Poly p(nvars);
    if (c != 0) p.terms_[Mono(static_cast<size_t>(nvars), 0)] = c;
    return p;
  }
  static Poly one(long nvars) { return constant(nvars, 1); }
  static Poly var(long nvars, long idx) {
    Poly p(nvars);
    Mono m(static_cast<size_t>(nvars), 0);
    m[static_cast<size_t>(idx)] = 1;
    p.terms_[m] = 1;
    return p;
  }
  static Poly monomial(const Mono& m, const mpq_class& c) {
    Poly p(static_cast<long>(m.size()));
    if (c != 0) p.terms_[m] = c;
    return p;
  }

  long nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  const std::map<Mono, mpq_class>& terms() const { return terms_; }

  long degree() const {
    long d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, mono_degree(m));
    return d;
  }

  mpq_class coefficient(const Mono& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? mpq_class(0) : it->second;
  }

  mpq_class constant_term() const { return coefficient(Mono(static_cast<size_t>(nvars_), 0)); }

  mpq_class linear_coefficient(long var_idx) const {
    Mono m(static_cast<size_t>(nvars_), 0);
    m[static_cast<size_t>(var_idx)] = 1;
    return coefficient(m);
  }

  void add_term(const Mono& m, const mpq_class& c) {
    if (c == 0) return;
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      terms_[m] = c;
    } else {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  Poly operator+(const Poly& o) const {
    Poly r(*this);
    for (const auto& [m, c] : o.terms_) r.add_term(m, c);
    return r;
  }
  Poly operator-(const Poly& o) const {
    Poly r(*this);
    for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
    return r;
  }
  Poly operator-() const {
    Poly r(nvars_);
    for (const auto& [m, c] : terms_) r.terms_[m] = -c;
    return r;
  }
  Poly operator*(const Poly& o) const {
    Poly r(nvars_);
    for (const auto& [ma, ca] : terms_)
      for (const auto& [mb, cb] : o.terms_) {
        Mono m(ma);
        for (size_t i = 0; i < m.size(); ++i) m[i] += mb[i];
        r.add_term(m, ca * cb);
      }
    return r;
  }
  Poly operator*(const mpq_class& c) const {
    Poly r(nvars_);
    if (c == 0) return r;
    for (const auto& [m, k] : terms_) r.terms_[m] = k * c;
    return r;
  }
  Poly& operator+=(const Poly& o) { return *this = *this + o; }
  Poly& operator-=(const Poly& o) { return *this = *this - o; }
  bool operator==(const Poly& o) const { return terms_ == o.terms_; }

  Poly pow(long e) const {
    Poly r = one(nvars_);
    for (long i = 0; i < e; ++i) r = r * *this;
    return r;
  }

  /// Replace variable idx by the given polynomial.
  Poly substitute(long idx, const Poly& value) const {
    Poly r(nvars_);
    for (const auto& [m, c] : terms_) {
      int e = m[static_cast<size_t>(idx)];
      Mono rest(m);
      rest[static_cast<size_t>(idx)] = 0;
      r += Poly::monomial(rest, c) * value.pow(e);
    }
    return r;
  }

  /// Drop all terms of total degree > bound.
  Poly truncated(long bound) const {
    Poly r(nvars_);
    for (const auto& [m, c] : terms_)
      if (mono_degree(m) <= bound) r.terms_[m] = c;
    return r;
  }

  /// Highest exponent of a single variable across all terms.
  long degree_in(long idx) const {
    long d = 0;
    for (const auto& [m, c] : terms_) d = std::max<long>(d, m[static_cast<size_t>(idx)]);
    return d;
  }

  bool uses_var(long idx) const { return degree_in(idx) > 0; }

  /// Only variables with index < bound appear.
  bool vars_below(long bound) const {
    for (const auto& [m, c] : terms_)
      for (size_t i = static_cast<size_t>(bound); i < m.size(); ++i)
        if (m[i]) return false;
    return true;
  }

  std::string str(const VarTable& vars) const {
    if (terms_.empty()) return "0";
    std::string s;
    for (const auto& [m, c] : terms_) {
      std::string t;
      mpq_class a = c;
      if (a < 0) {
        s += s.empty() ? "-" : " - ";
        a = -a;
      } else if (!s.empty()) {
        s += " + ";
      }
      bool has_vars = mono_degree(m) > 0;
      if (a != 1 || !has_vars) t += a.get_str();
      for (size_t i = 0; i < m.size(); ++i) {
        if (!m[i]) continue;
        if (!t.empty()) t += "*";
        t += vars.names[i];
        if (m[i] > 1) t += "^" + std::to_string(m[i]);
      }
      s += t;
    }
    return s;
  }

 private:
  long nvars_;
  std::map<Mono, mpq_class> terms_;
};

/**
 * Recursive-descent parser for polynomial expressions over a variable table.
 * Accepts + - * ^, parentheses, integer and rational (a/b) coefficients, and
 * juxtaposition as multiplication ("5x", "2 t x^2").
 */
class PolyParser {
 public:
  PolyParser(const std::string& text, const VarTable& vars) : vars_(vars) { tokenize(text); }

  Poly parse() {
    Poly p = parse_expr();
    require(peek().kind == Token::End, ErrKind::Parse, "trailing input after polynomial: '" + peek().text + "'");
    return p;
  }

 private:
  struct Token {
    enum Kind { Num, Ident, Op, End } kind;
    std::string text;
  };

  void tokenize(const std::string& s) {
    size_t i = 0;
    while (i < s.size()) {
      char c = s[i];
      if (isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (isdigit(static_cast<unsigned char>(c))) {
        size_t j = i;
        while (j < s.size() && isdigit(static_cast<unsigned char>(s[j]))) ++j;
        tokens_.push_back({Token::Num, s.substr(i, j - i)});
        i = j;
      } else if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t j = i;
        while (j < s.size() && (isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
        tokens_.push_back({Token::Ident, s.substr(i, j - i)});
        i = j;
      } else if (std::string("+-*^()/").find(c) != std::string::npos) {
        tokens_.push_back({Token::Op, std::string(1, c)});
        ++i;
      } else {
        fail(ErrKind::Parse, std::string("unexpected character '") + c + "' in polynomial");
      }
    }
    tokens_.push_back({Token::End, ""});
  }

  const Token& peek() const { return tokens_[pos_]; }
  Token next() { return tokens_[pos_++]; }
  bool accept_op(const std::string& op) {
    if (peek().kind == Token::Op && peek().text == op) {
      ++pos_;
      return true;
    }
    return false;
  }

  Poly parse_expr() {
    bool neg = false;
    if (accept_op("-")) neg = true;
    else accept_op("+");
    Poly p = parse_term();
    if (neg) p = -p;
    for (;;) {
      if (accept_op("+")) p += parse_term();
      else if (accept_op("-")) p -= parse_term();
      else break;
    }
    return p;
  }

  Poly parse_term() {
    Poly p = parse_factor();
    for (;;) {
      if (accept_op("*")) {
        p = p * parse_factor();
      } else if (peek().kind == Token::Num || peek().kind == Token::Ident ||
                 (peek().kind == Token::Op && peek().text == "(")) {
        p = p * parse_factor();  // juxtaposition
      } else {
        break;
      }
    }
    return p;
  }

  Poly parse_factor() {
    Poly base = parse_atom();
    while (accept_op("^")) {
      require(peek().kind == Token::Num, ErrKind::Parse, "exponent must be a nonnegative integer");
      long e = std::stol(next().text);
      base = base.pow(e);
    }
    return base;
  }

  Poly parse_atom() {
    const long n = vars_.total();
    if (peek().kind == Token::Num) {
      mpq_class num(next().text);
      if (accept_op("/")) {
        require(peek().kind == Token::Num, ErrKind::Parse, "expected denominator after '/'");
        mpq_class den(next().text);
        require(den != 0, ErrKind::Parse, "zero denominator");
        num /= den;
      }
      num.canonicalize();
      return Poly::constant(n, num);
    }
    if (peek().kind == Token::Ident) {
      std::string name = next().text;
      long idx = vars_.index_of(name);
      require(idx >= 0, ErrKind::Parse, "unknown variable '" + name + "'");
      return Poly::var(n, idx);
    }
    if (accept_op("(")) {
      Poly p = parse_expr();
      require(accept_op(")"), ErrKind::Parse, "missing ')'");
      return p;
    }
    if (accept_op("-")) return -parse_atom();
    fail(ErrKind::Parse, "expected number, variable, or '(' but found '" + peek().text + "'");
  }

  const VarTable& vars_;
  std::vector<Token> tokens_;
  size_t pos_ = 0;
};

inline Poly parse_poly(const std::string& text, const VarTable& vars) {
  return PolyParser(text, vars).parse();
}

}  // namespace cmodlab
