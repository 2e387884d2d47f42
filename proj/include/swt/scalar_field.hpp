// scalar_field.hpp — exact coefficient arithmetic: multivariate polynomials over Q in named
// scalar symbols and number operators N0, N1, ..., and rational functions with factored
// denominators.

#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swt/errors.hpp"

namespace swt {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational, boost::multiprecision::et_off>;
using Bindings = std::map<std::string, double, std::less<>>;

inline constexpr double kDefaultSingularEps = 1e-12;

// --------------------------------------------------------------------------- symbols

enum class SymbolKind { RealParameter, NumberOperator };

struct ScalarSymbol {
  std::string name;
  SymbolKind kind = SymbolKind::RealParameter;
  std::optional<int> mode;

  friend bool operator==(const ScalarSymbol&, const ScalarSymbol&) = default;
};

inline std::string number_operator_name(int mode) { return "N" + std::to_string(mode); }

// Returns the mode index if `name` is a reserved number-operator symbol ("N" followed by digits).
inline std::optional<int> number_operator_mode(std::string_view name) {
  if (name.size() < 2 || name[0] != 'N') return std::nullopt;
  int mode = 0;
  auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), mode);
  if (ec != std::errc{} || ptr != name.data() + name.size()) return std::nullopt;
  if (name.size() > 2 && name[1] == '0') return std::nullopt;
  return mode;
}

inline ScalarSymbol make_symbol(std::string name) {
  if (auto mode = number_operator_mode(name)) {
    return {std::move(name), SymbolKind::NumberOperator, *mode};
  }
  return {std::move(name), SymbolKind::RealParameter, std::nullopt};
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline std::string rational_to_string(const Rational& q) { return q.str(); }

// --------------------------------------------------------------------------- monomials

class Monomial {
 public:
  using Power = std::pair<std::string, unsigned>;

  Monomial() = default;

  static Monomial variable(std::string name, unsigned exponent = 1) {
    Monomial m;
    if (exponent > 0) m.powers_.emplace_back(std::move(name), exponent);
    return m;
  }

  const std::vector<Power>& powers() const noexcept { return powers_; }
  bool is_one() const noexcept { return powers_.empty(); }

  unsigned exponent(std::string_view name) const {
    auto it = std::lower_bound(powers_.begin(), powers_.end(), name,
                               [](const Power& p, std::string_view n) { return p.first < n; });
    return (it != powers_.end() && it->first == name) ? it->second : 0u;
  }

  unsigned degree() const {
    unsigned d = 0;
    for (const auto& [_, e] : powers_) d += e;
    return d;
  }

  Monomial without(std::string_view name) const {
    Monomial m;
    for (const auto& p : powers_)
      if (p.first != name) m.powers_.push_back(p);
    return m;
  }

  Monomial operator*(const Monomial& other) const {
    Monomial m;
    auto a = powers_.begin();
    auto b = other.powers_.begin();
    while (a != powers_.end() || b != other.powers_.end()) {
      if (b == other.powers_.end() || (a != powers_.end() && a->first < b->first)) {
        m.powers_.push_back(*a++);
      } else if (a == powers_.end() || b->first < a->first) {
        m.powers_.push_back(*b++);
      } else {
        m.powers_.emplace_back(a->first, a->second + b->second);
        ++a;
        ++b;
      }
    }
    return m;
  }

  // this / other, if other divides this.
  std::optional<Monomial> divide(const Monomial& other) const {
    Monomial m;
    auto a = powers_.begin();
    for (const auto& [name, e] : other.powers_) {
      while (a != powers_.end() && a->first < name) m.powers_.push_back(*a++);
      if (a == powers_.end() || a->first != name || a->second < e) return std::nullopt;
      if (a->second > e) m.powers_.emplace_back(name, a->second - e);
      ++a;
    }
    while (a != powers_.end()) m.powers_.push_back(*a++);
    return m;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& [name, e] : powers_) {
      if (!out.empty()) out += '*';
      out += name;
      if (e > 1) out += '^' + std::to_string(e);
    }
    return out;
  }

  friend bool operator==(const Monomial&, const Monomial&) = default;

 private:
  std::vector<Power> powers_;  // sorted by name, exponents > 0
};

// Lexicographic monomial order; symbols earlier in name order are more significant.
inline int lex_compare(const Monomial& x, const Monomial& y) {
  auto a = x.powers().begin();
  auto b = y.powers().begin();
  while (a != x.powers().end() && b != y.powers().end()) {
    if (a->first != b->first) return a->first < b->first ? 1 : -1;
    if (a->second != b->second) return a->second > b->second ? 1 : -1;
    ++a;
    ++b;
  }
  if (a != x.powers().end()) return 1;
  if (b != y.powers().end()) return -1;
  return 0;
}

struct LeadingFirst {
  bool operator()(const Monomial& a, const Monomial& b) const { return lex_compare(a, b) > 0; }
};

// --------------------------------------------------------------------------- polynomials

class Polynomial {
 public:
  using TermMap = std::map<Monomial, Rational, LeadingFirst>;

  Polynomial() = default;

  static Polynomial constant(const Rational& c) {
    Polynomial p;
    p.add_term(Monomial{}, c);
    return p;
  }
  static Polynomial constant(long c) { return constant(Rational(c)); }

  static Polynomial symbol(std::string name) {
    Polynomial p;
    p.terms_.emplace(Monomial::variable(std::move(name)), Rational(1));
    return p;
  }

  static Polynomial number_operator(int mode) { return symbol(number_operator_name(mode)); }

  static Polynomial term(const Monomial& m, const Rational& c) {
    Polynomial p;
    p.add_term(m, c);
    return p;
  }

  const TermMap& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  bool is_constant() const noexcept {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_one());
  }
  Rational constant_term() const {
    auto it = terms_.find(Monomial{});
    return it == terms_.end() ? Rational(0) : it->second;
  }

  // Leading term in the lexicographic order. Undefined on the zero polynomial.
  const Monomial& leading_monomial() const { return terms_.begin()->first; }
  const Rational& leading_coefficient() const { return terms_.begin()->second; }

  std::set<std::string> symbols() const {
    std::set<std::string> out;
    for (const auto& [m, _] : terms_)
      for (const auto& [name, e] : m.powers()) out.insert(name);
    return out;
  }

  unsigned degree_in(std::string_view name) const {
    unsigned d = 0;
    for (const auto& [m, _] : terms_) d = std::max(d, m.exponent(name));
    return d;
  }

  unsigned total_degree() const {
    unsigned d = 0;
    for (const auto& [m, _] : terms_) d = std::max(d, m.degree());
    return d;
  }

  void add_term(const Monomial& m, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  Polynomial& operator*=(const Rational& s) {
    if (s == 0) {
      terms_.clear();
    } else {
      for (auto& [_, c] : terms_) c *= s;
    }
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(Polynomial a) { return a *= Rational(-1); }
  friend Polynomial operator*(Polynomial a, const Rational& s) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, ca * cb);
    return out;
  }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  Polynomial pow(unsigned e) const {
    Polynomial result = constant(1);
    Polynomial base = *this;
    while (e > 0) {
      if (e & 1u) result *= base;
      e >>= 1;
      if (e > 0) base *= base;
    }
    return result;
  }

  // Exact multivariate division; nullopt unless `divisor` divides this polynomial.
  std::optional<Polynomial> exact_divide(const Polynomial& divisor) const {
    if (divisor.is_zero()) throw ZeroDenominator("exact_divide: zero divisor");
    Polynomial remainder = *this;
    Polynomial quotient;
    const Monomial& lead = divisor.leading_monomial();
    const Rational& lead_coeff = divisor.leading_coefficient();
    while (!remainder.is_zero()) {
      auto m = remainder.leading_monomial().divide(lead);
      if (!m) return std::nullopt;
      Rational c = remainder.leading_coefficient() / lead_coeff;
      Polynomial step = term(*m, c);
      quotient += step;
      remainder -= step * divisor;
    }
    return quotient;
  }

  // Replaces `name` by `value` and expands.
  Polynomial substitute(std::string_view name, const Polynomial& value) const {
    Polynomial out;
    std::vector<Polynomial> powers{constant(1)};
    for (const auto& [m, c] : terms_) {
      unsigned e = m.exponent(name);
      if (e == 0) {
        out.add_term(m, c);
        continue;
      }
      while (powers.size() <= e) powers.push_back(powers.back() * value);
      out += term(m.without(name), c) * powers[e];
    }
    return out;
  }

  Polynomial shift(std::string_view name, const Rational& delta) const {
    if (delta == 0) return *this;
    return substitute(name, symbol(std::string(name)) + constant(delta));
  }

  // Evaluates with `lookup(name)` supplying every symbol value.
  template <class Lookup>
  double evaluate(Lookup&& lookup) const {
    double total = 0.0;
    for (const auto& [m, c] : terms_) {
      double v = to_double(c);
      for (const auto& [name, e] : m.powers()) v *= std::pow(lookup(name), static_cast<int>(e));
      total += v;
    }
    return total;
  }

  // Exact evaluation at rational points.
  template <class Lookup>
  Rational evaluate_exact(Lookup&& lookup) const {
    Rational total = 0;
    for (const auto& [m, c] : terms_) {
      Rational v = c;
      for (const auto& [name, e] : m.powers()) {
        Rational x = lookup(name);
        for (unsigned k = 0; k < e; ++k) v *= x;
      }
      total += v;
    }
    return total;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [m, c] : terms_) {
      Rational mag = abs(c);
      if (first) {
        if (c < 0) out += '-';
      } else {
        out += c < 0 ? " - " : " + ";
      }
      first = false;
      if (m.is_one()) {
        out += rational_to_string(mag);
      } else if (mag == 1) {
        out += m.to_string();
      } else {
        out += rational_to_string(mag) + '*' + m.to_string();
      }
    }
    return out;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

  // Total order used to sort denominator factors canonically.
  friend int compare(const Polynomial& a, const Polynomial& b) {
    auto x = a.terms_.begin();
    auto y = b.terms_.begin();
    for (; x != a.terms_.end() && y != b.terms_.end(); ++x, ++y) {
      if (int c = lex_compare(x->first, y->first); c != 0) return c > 0 ? -1 : 1;
      if (x->second != y->second) return x->second < y->second ? -1 : 1;
    }
    if (x != a.terms_.end()) return 1;
    if (y != b.terms_.end()) return -1;
    return 0;
  }

 private:
  TermMap terms_;
};

// Replaces N_mode by N_mode + delta.
inline Polynomial poly_shift(const Polynomial& p, int mode, int delta) {
  return p.shift(number_operator_name(mode), Rational(delta));
}

// --------------------------------------------------------------------------- rational functions

struct DenominatorFactor {
  Polynomial base;
  unsigned power = 1;

  friend bool operator==(const DenominatorFactor&, const DenominatorFactor&) = default;
};

class ScalarRational {
 public:
  ScalarRational() = default;

  explicit ScalarRational(Polynomial numerator) : numerator_(std::move(numerator)) {}

  ScalarRational(Polynomial numerator, std::vector<DenominatorFactor> denominator)
      : numerator_(std::move(numerator)), factors_(std::move(denominator)) {
    canonicalize();
  }

  static ScalarRational constant(const Rational& c) { return ScalarRational(Polynomial::constant(c)); }
  static ScalarRational symbol(std::string name) { return ScalarRational(Polynomial::symbol(std::move(name))); }

  const Polynomial& numerator() const noexcept { return numerator_; }
  const std::vector<DenominatorFactor>& denominator() const noexcept { return factors_; }

  bool is_zero() const noexcept { return numerator_.is_zero(); }
  bool is_polynomial() const noexcept { return factors_.empty(); }

  Polynomial denominator_product() const {
    Polynomial d = Polynomial::constant(1);
    for (const auto& f : factors_) d *= f.base.pow(f.power);
    return d;
  }

  std::set<std::string> symbols() const {
    auto out = numerator_.symbols();
    for (const auto& f : factors_) {
      auto s = f.base.symbols();
      out.insert(s.begin(), s.end());
    }
    return out;
  }

  ScalarRational substitute(std::string_view name, const Polynomial& value) const {
    std::vector<DenominatorFactor> den;
    den.reserve(factors_.size());
    for (const auto& f : factors_) den.push_back({f.base.substitute(name, value), f.power});
    return ScalarRational(numerator_.substitute(name, value), std::move(den));
  }

  ScalarRational shift(std::string_view name, const Rational& delta) const {
    if (delta == 0) return *this;
    return substitute(name, Polynomial::symbol(std::string(name)) + Polynomial::constant(delta));
  }

  // Shifts every number operator N_j by delta[j].
  ScalarRational shift_modes(std::span<const int> delta) const {
    ScalarRational out = *this;
    for (std::size_t j = 0; j < delta.size(); ++j)
      if (delta[j] != 0) out = out.shift(number_operator_name(static_cast<int>(j)), Rational(delta[j]));
    return out;
  }

  std::string to_string() const {
    if (factors_.empty()) return numerator_.to_string();
    std::string den;
    for (const auto& f : factors_) {
      if (!den.empty()) den += '*';
      den += '(' + f.base.to_string() + ')';
      if (f.power > 1) den += '^' + std::to_string(f.power);
    }
    if (factors_.size() > 1 || factors_.front().power > 1) den = '(' + den + ')';
    return '(' + numerator_.to_string() + ")/" + den;
  }

  friend bool operator==(const ScalarRational&, const ScalarRational&) = default;

 private:
  friend ScalarRational rat_add(const ScalarRational&, const ScalarRational&);
  friend ScalarRational rat_mul(const ScalarRational&, const ScalarRational&);

  void canonicalize() {
    if (numerator_.is_zero()) {
      factors_.clear();
      return;
    }
    std::vector<DenominatorFactor> kept;
    for (auto& f : factors_) {
      if (f.power == 0) continue;
      if (f.base.is_zero()) throw ZeroDenominator("denominator factor is identically zero");
      if (f.base.is_constant()) {
        Rational c = f.base.constant_term();
        Rational scale = 1;
        for (unsigned k = 0; k < f.power; ++k) scale *= c;
        numerator_ *= Rational(1) / scale;
        continue;
      }
      Rational lc = f.base.leading_coefficient();
      if (lc != 1) {
        f.base *= Rational(1) / lc;
        Rational scale = 1;
        for (unsigned k = 0; k < f.power; ++k) scale *= lc;
        numerator_ *= Rational(1) / scale;
      }
      kept.push_back(std::move(f));
    }
    std::sort(kept.begin(), kept.end(),
              [](const DenominatorFactor& a, const DenominatorFactor& b) { return compare(a.base, b.base) < 0; });
    factors_.clear();
    for (auto& f : kept) {
      if (!factors_.empty() && factors_.back().base == f.base) {
        factors_.back().power += f.power;
      } else {
        factors_.push_back(std::move(f));
      }
    }
    for (auto& f : factors_) {
      while (f.power > 0) {
        auto q = numerator_.exact_divide(f.base);
        if (!q) break;
        numerator_ = std::move(*q);
        --f.power;
      }
    }
    std::erase_if(factors_, [](const DenominatorFactor& f) { return f.power == 0; });
    if (numerator_.is_zero()) factors_.clear();
  }

  Polynomial numerator_;
  std::vector<DenominatorFactor> factors_;  // monic, sorted, distinct bases
};

inline ScalarRational rat_add(const ScalarRational& a, const ScalarRational& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  // least common multiple of the factored denominators
  std::vector<DenominatorFactor> lcm = a.factors_;
  for (const auto& f : b.factors_) {
    auto it = std::find_if(lcm.begin(), lcm.end(), [&](const auto& g) { return g.base == f.base; });
    if (it == lcm.end()) {
      lcm.push_back(f);
    } else {
      it->power = std::max(it->power, f.power);
    }
  }
  auto lift = [&](const ScalarRational& x) {
    Polynomial num = x.numerator_;
    for (const auto& g : lcm) {
      auto it = std::find_if(x.factors_.begin(), x.factors_.end(), [&](const auto& f) { return f.base == g.base; });
      unsigned have = it == x.factors_.end() ? 0u : it->power;
      if (g.power > have) num *= g.base.pow(g.power - have);
    }
    return num;
  };
  Polynomial num = lift(a) + lift(b);
  return ScalarRational(std::move(num), std::move(lcm));
}

inline ScalarRational rat_neg(const ScalarRational& a) {
  return ScalarRational(-a.numerator(), a.denominator());
}

inline ScalarRational rat_mul(const ScalarRational& a, const ScalarRational& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<DenominatorFactor> den = a.factors_;
  den.insert(den.end(), b.factors_.begin(), b.factors_.end());
  return ScalarRational(a.numerator_ * b.numerator_, std::move(den));
}

inline ScalarRational rat_inv_poly(const Polynomial& p) {
  if (p.is_zero()) throw ZeroDenominator("rat_inv_poly: polynomial is identically zero");
  return ScalarRational(Polynomial::constant(1), {{p, 1}});
}

inline ScalarRational rat_inv(const ScalarRational& a) {
  if (a.is_zero()) throw ZeroDenominator("rat_inv: value is identically zero");
  return rat_mul(ScalarRational(a.denominator_product()), rat_inv_poly(a.numerator()));
}

inline ScalarRational rat_scale(const ScalarRational& a, const Rational& s) {
  return ScalarRational(a.numerator() * s, a.denominator());
}

inline ScalarRational operator+(const ScalarRational& a, const ScalarRational& b) { return rat_add(a, b); }
inline ScalarRational operator-(const ScalarRational& a, const ScalarRational& b) { return rat_add(a, rat_neg(b)); }
inline ScalarRational operator-(const ScalarRational& a) { return rat_neg(a); }
inline ScalarRational operator*(const ScalarRational& a, const ScalarRational& b) { return rat_mul(a, b); }
inline ScalarRational operator/(const ScalarRational& a, const ScalarRational& b) { return rat_mul(a, rat_inv(b)); }

// Symbol lookup for numeric evaluation: number operators come from `fock`, everything else from `bindings`.
class SymbolValues {
 public:
  SymbolValues(const Bindings& bindings, std::span<const int> fock) : bindings_(bindings), fock_(fock) {}

  double operator()(std::string_view name) const {
    if (auto mode = number_operator_mode(name)) {
      if (*mode >= static_cast<int>(fock_.size()))
        throw PreconditionError("no Fock level supplied for " + std::string(name));
      return fock_[static_cast<std::size_t>(*mode)];
    }
    auto it = bindings_.find(name);
    if (it == bindings_.end()) throw PreconditionError("unbound symbol '" + std::string(name) + "'");
    return it->second;
  }

 private:
  const Bindings& bindings_;
  std::span<const int> fock_;
};

inline std::complex<double> rat_eval(const ScalarRational& a, const Bindings& bindings, std::span<const int> fock = {},
                                     double eps = kDefaultSingularEps) {
  SymbolValues values(bindings, fock);
  double den = 1.0;
  for (const auto& f : a.denominator()) {
    double v = f.base.evaluate(values);
    if (std::abs(v) < eps) {
      throw EvalSingular("denominator factor (" + f.base.to_string() + ") evaluates to " + std::to_string(v));
    }
    den *= std::pow(v, static_cast<int>(f.power));
  }
  return {a.numerator().evaluate(values) / den, 0.0};
}


// Exact counterpart of rat_eval: each bound double is taken at its exact binary value and the
// expression is evaluated in rational arithmetic, rounding once at the end.
inline Rational rat_eval_exact(const ScalarRational& a, const Bindings& bindings, std::span<const int> fock = {},
                               double eps = kDefaultSingularEps) {
  SymbolValues values(bindings, fock);
  auto exact = [&](std::string_view name) { return Rational(values(name)); };
  Rational den = 1;
  for (const auto& f : a.denominator()) {
    Rational v = f.base.evaluate_exact(exact);
    if (std::abs(to_double(v)) < eps) {
      throw EvalSingular("denominator factor (" + f.base.to_string() + ") evaluates to " + std::to_string(to_double(v)));
    }
    for (unsigned k = 0; k < f.power; ++k) den *= v;
  }
  return a.numerator().evaluate_exact(exact) / den;
}

}  // namespace swt
