#pragma once

#include <cctype>
#include <cstdlib>
#include <string>
#include <string_view>

#include "expr.hpp"

namespace phasekit {

/*
 Grammar (whitespace and newlines are ignored between tokens):

   expr    := term { ('+' | '-') term }
   term    := unary { ('*' | '/') unary }
   unary   := ('-' | '+') unary | power
   power   := primary [ '^' unary ]          right associative
   primary := number | 'pi' | variable | parameter
            | func '(' expr ')' | '(' expr ')'
   variable  := 'x' digits                  x1 is the first variable
   func      := exp | log | sqrt | sin | cos | bump
   parameter := any other identifier [A-Za-z_][A-Za-z0-9_]*

 Exponents must not contain variables.
*/
class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr parse() {
    skip();
    if (at_end()) fail("empty expression");
    Expr e = expr();
    skip();
    if (!at_end()) fail(std::string("unexpected '") + s_[pos_] + "'");
    return e;
  }

 private:
  Expr expr() {
    Expr e = term();
    while (true) {
      skip();
      if (peek('+')) {
        ++pos_;
        e = e + term();
      } else if (peek('-')) {
        ++pos_;
        e = e - term();
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = unary();
    while (true) {
      skip();
      if (peek('*')) {
        ++pos_;
        e = e * unary();
      } else if (peek('/')) {
        ++pos_;
        e = e / unary();
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    skip();
    if (peek('-')) {
      ++pos_;
      return -unary();
    }
    if (peek('+')) {
      ++pos_;
      return unary();
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    skip();
    if (peek('^')) {
      ++pos_;
      skip();
      size_t at = pos_;
      Expr ex = unary();
      if (depends_on_variables(ex)) fail_at(at, "exponent must not contain variables");
      return detail::make(Op::Pow, {base, ex});
    }
    return base;
  }

  Expr primary() {
    skip();
    if (at_end()) fail("unexpected end of expression");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t at = pos_;
      std::string id = ident();
      skip();
      static const char* funcs[] = {"exp", "log", "sqrt", "sin", "cos", "bump"};
      for (const char* f : funcs) {
        if (id == f) {
          if (!peek('(')) fail(std::string("expected '(' after ") + f);
          ++pos_;
          Expr a = expr();
          expect(')');
          if (id == "exp") return exp(a);
          if (id == "log") return log(a);
          if (id == "sqrt") return sqrt(a);
          if (id == "sin") return sin(a);
          if (id == "cos") return cos(a);
          return bump(a);
        }
      }
      if (peek('(')) fail_at(at, "unknown function '" + id + "'");
      if (id == "pi") return constant(std::numbers::pi);
      if (id.size() >= 2 && id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string::npos) {
        int k = std::atoi(id.c_str() + 1);
        if (k < 1 || id[1] == '0') fail_at(at, "variables are numbered from x1");
        return var(k - 1);
      }
      return param(id);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  Expr number() {
    const char* begin = s_.data() + pos_;
    size_t n = 0;
    auto digits = [&] {
      while (pos_ + n < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_ + n]))) ++n;
    };
    digits();
    if (pos_ + n < s_.size() && s_[pos_ + n] == '.') {
      ++n;
      digits();
    }
    if (pos_ + n < s_.size() && (s_[pos_ + n] == 'e' || s_[pos_ + n] == 'E')) {
      size_t save = n;
      ++n;
      if (pos_ + n < s_.size() && (s_[pos_ + n] == '+' || s_[pos_ + n] == '-')) ++n;
      size_t before = n;
      digits();
      if (n == before) n = save;
    }
    std::string tok(begin, n);
    if (tok == ".") fail("malformed number");
    pos_ += n;
    return constant(std::strtod(tok.c_str(), nullptr));
  }

  std::string ident() {
    size_t b = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }

  void expect(char c) {
    skip();
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }
  bool at_end() const { return pos_ >= s_.size(); }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(pos_, msg); }
  [[noreturn]] void fail_at(size_t at, const std::string& msg) const {
    int line = 1, col = 1;
    for (size_t i = 0; i < at && i < s_.size(); ++i) {
      if (s_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ExprParseError(msg, line, col);
  }

  std::string_view s_;
  size_t pos_ = 0;
};

inline Expr parse_expr(std::string_view text) { return Parser(text).parse(); }

}  // namespace phasekit
