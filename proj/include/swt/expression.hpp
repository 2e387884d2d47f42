// expression.hpp — text syntax for scalar expressions in model files:
// `+ - * / ^` with integer exponents, parentheses, decimal literals and identifiers.
// N0, N1, ... are reserved for number operators.

#pragma once

#include <cctype>
#include <functional>
#include <string>
#include <string_view>

#include "swt/errors.hpp"
#include "swt/scalar_field.hpp"

namespace swt {

struct ExpressionOptions {
  // Returns false for identifiers that are not declared; nullptr accepts every identifier.
  std::function<bool(std::string_view)> is_declared;
  // Source position of the first character, used for diagnostics.
  int line = 0;
  int column = 1;
};

namespace detail {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, const ExpressionOptions& opts) : text_(text), opts_(opts) {}

  ScalarRational parse() {
    skip_ws();
    if (at_end()) fail("empty expression");
    ScalarRational value = expr();
    skip_ws();
    if (!at_end()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return value;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw ParseError(msg, opts_.line, opts_.column + static_cast<int>(at));
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(msg, pos_); }

  bool at_end() const { return pos_ >= text_.size(); }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (!at_end() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ScalarRational expr() {
    ScalarRational value = term();
    for (;;) {
      if (accept('+')) {
        value = value + term();
      } else if (accept('-')) {
        value = value - term();
      } else {
        return value;
      }
    }
  }

  ScalarRational term() {
    ScalarRational value = unary();
    for (;;) {
      if (accept('*')) {
        value = value * unary();
      } else if (accept('/')) {
        std::size_t at = pos_;
        ScalarRational divisor = unary();
        if (divisor.is_zero()) fail("division by zero", at);
        value = value / divisor;
      } else {
        return value;
      }
    }
  }

  ScalarRational unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  ScalarRational power() {
    ScalarRational base = primary();
    if (!accept('^')) return base;
    skip_ws();
    bool negative = false;
    if (!at_end() && (text_[pos_] == '-' || text_[pos_] == '+')) negative = text_[pos_++] == '-';
    skip_ws();
    std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("exponent must be an integer literal");
    unsigned e = static_cast<unsigned>(std::stoul(std::string(text_.substr(start, pos_ - start))));
    ScalarRational result = ScalarRational::constant(1);
    for (unsigned k = 0; k < e; ++k) result = result * base;
    if (negative) {
      if (result.is_zero()) fail("zero raised to a negative power", start);
      result = rat_inv(result);
    }
    return result;
  }

  ScalarRational primary() {
    skip_ws();
    if (at_end()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ScalarRational inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  ScalarRational number() {
    std::size_t start = pos_;
    Rational value = 0;
    Rational scale = 1;
    bool seen_digit = false;
    bool fraction = false;
    while (!at_end()) {
      char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        seen_digit = true;
        value = value * 10 + (c - '0');
        if (fraction) scale *= 10;
      } else if (c == '.' && !fraction) {
        fraction = true;
      } else {
        break;
      }
      ++pos_;
    }
    if (!seen_digit) fail("malformed number", start);
    value /= scale;
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      bool negative = false;
      if (!at_end() && (text_[pos_] == '-' || text_[pos_] == '+')) negative = text_[pos_++] == '-';
      std::size_t estart = pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (estart == pos_) fail("malformed exponent", estart);
      int e = std::stoi(std::string(text_.substr(estart, pos_ - estart)));
      Rational p = 1;
      for (int k = 0; k < e; ++k) p *= 10;
      value = negative ? value / p : value * p;
    }
    return ScalarRational::constant(value);
  }

  ScalarRational identifier() {
    std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (opts_.is_declared && !opts_.is_declared(name)) {
      throw ValidationError("undeclared symbol '" + name + "'", opts_.line, opts_.column + static_cast<int>(start));
    }
    return ScalarRational::symbol(std::move(name));
  }

  std::string_view text_;
  const ExpressionOptions& opts_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline ScalarRational parse_expression(std::string_view text, const ExpressionOptions& opts = {}) {
  return detail::ExpressionParser(text, opts).parse();
}

inline Polynomial parse_polynomial(std::string_view text, const ExpressionOptions& opts = {}) {
  ScalarRational r = parse_expression(text, opts);
  if (!r.is_polynomial()) {
    throw ValidationError("expected a polynomial, got '" + std::string(text) + "'", opts.line, opts.column);
  }
  return r.numerator();
}

}  // namespace swt
