// operator_algebra.hpp — canonical operators on (finite ⊗ bosonic) Hilbert spaces.
//
// A term is coeff(N⃗) · ∏_j L_j · σ_{bra,ket} · e^{i·harmonic·Ωt}, optionally times i, where L_j is
// a_j^{Δ_j} for Δ_j > 0 and (a_j†)^{-Δ_j} for Δ_j < 0. The coefficient always sits to the left of
// the ladder operators; moving a function of N⃗ through a ladder uses L f(N⃗) = f(N⃗ + Δ⃗) L.

#pragma once

#include <algorithm>
#include <compare>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swt/errors.hpp"
#include "swt/scalar_field.hpp"

namespace swt {

using Index = std::vector<int>;

struct HilbertSignature {
  std::vector<int> finite_dims;
  int bosonic_modes = 0;
  // Block id per flat finite index; empty means every finite basis state is its own block.
  std::vector<int> block_labels;

  int finite_size() const {
    return std::accumulate(finite_dims.begin(), finite_dims.end(), 1, std::multiplies<>());
  }

  int flatten(std::span<const int> mu) const {
    int flat = 0;
    for (std::size_t k = 0; k < finite_dims.size(); ++k) flat = flat * finite_dims[k] + mu[k];
    return flat;
  }

  Index unflatten(int flat) const {
    Index mu(finite_dims.size());
    for (std::size_t k = finite_dims.size(); k-- > 0;) {
      mu[k] = flat % finite_dims[k];
      flat /= finite_dims[k];
    }
    return mu;
  }

  int block_of(std::span<const int> mu) const {
    int flat = flatten(mu);
    return block_labels.empty() ? flat : block_labels[static_cast<std::size_t>(flat)];
  }

  bool valid_finite(std::span<const int> mu) const {
    if (mu.size() != finite_dims.size()) return false;
    for (std::size_t k = 0; k < mu.size(); ++k)
      if (mu[k] < 0 || mu[k] >= finite_dims[k]) return false;
    return true;
  }

  void validate() const {
    for (int d : finite_dims)
      if (d < 2) throw PreconditionError("finite subspace dimensions must be >= 2");
    if (bosonic_modes < 0) throw PreconditionError("bosonic mode count must be >= 0");
    if (!block_labels.empty() && static_cast<int>(block_labels.size()) != finite_size())
      throw PreconditionError("block labels must cover every finite basis state");
  }

  friend bool operator==(const HilbertSignature&, const HilbertSignature&) = default;
};

struct TermKey {
  int order = 0;
  Index bra;
  Index ket;
  Index delta;
  int harmonic = 0;
  bool imaginary = false;

  auto operator<=>(const TermKey&) const = default;
};

struct OperatorTerm {
  TermKey key;
  ScalarRational coeff;
};

class OperatorSum {
 public:
  using TermMap = std::map<TermKey, ScalarRational>;

  OperatorSum() = default;

  static OperatorSum from_term(const TermKey& key, const ScalarRational& coeff) {
    OperatorSum s;
    s.add(key, coeff);
    return s;
  }

  const TermMap& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  void add(const TermKey& key, const ScalarRational& coeff) {
    if (coeff.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(key, coeff);
    if (!inserted) {
      it->second = rat_add(it->second, coeff);
      if (it->second.is_zero()) terms_.erase(it);
    }
  }
  void add(const OperatorTerm& t) { add(t.key, t.coeff); }

  OperatorSum& operator+=(const OperatorSum& o) {
    for (const auto& [k, c] : o.terms_) add(k, c);
    return *this;
  }
  OperatorSum& operator-=(const OperatorSum& o) {
    for (const auto& [k, c] : o.terms_) add(k, rat_neg(c));
    return *this;
  }

  OperatorSum scaled(const ScalarRational& s) const {
    OperatorSum out;
    for (const auto& [k, c] : terms_) out.add(k, rat_mul(c, s));
    return out;
  }
  OperatorSum scaled(const Rational& s) const {
    OperatorSum out;
    for (const auto& [k, c] : terms_) out.add(k, rat_scale(c, s));
    return out;
  }

  template <class Pred>
  OperatorSum filter(Pred&& keep) const {
    OperatorSum out;
    for (const auto& [k, c] : terms_)
      if (keep(k, c)) out.terms_.emplace(k, c);
    return out;
  }

  OperatorSum with_order(int order) const {
    return filter([order](const TermKey& k, const ScalarRational&) { return k.order == order; });
  }
  OperatorSum truncated(int max_order) const {
    return filter([max_order](const TermKey& k, const ScalarRational&) { return k.order <= max_order; });
  }
  OperatorSum with_harmonic(int n) const {
    return filter([n](const TermKey& k, const ScalarRational&) { return k.harmonic == n; });
  }

  // Largest |Δ_j| over all terms and modes.
  int max_abs_delta() const {
    int m = 0;
    for (const auto& [k, _] : terms_)
      for (int d : k.delta) m = std::max(m, std::abs(d));
    return m;
  }

  // Ignores perturbation-order tags: a copy with every term's order set to `order`.
  OperatorSum retagged(int order) const {
    OperatorSum out;
    for (const auto& [key, c] : terms_) {
      TermKey k = key;
      k.order = order;
      out.add(k, c);
    }
    return out;
  }

  friend bool operator==(const OperatorSum&, const OperatorSum&) = default;

 private:
  TermMap terms_;
};

inline OperatorSum operator+(OperatorSum a, const OperatorSum& b) { return a += b; }
inline OperatorSum operator-(OperatorSum a, const OperatorSum& b) { return a -= b; }
inline OperatorSum operator-(const OperatorSum& a) { return a.scaled(Rational(-1)); }

// Checks every index of `A` against the signature.
inline void validate(const OperatorSum& A, const HilbertSignature& sig) {
  for (const auto& [k, _] : A.terms()) {
    if (!sig.valid_finite(k.bra) || !sig.valid_finite(k.ket))
      throw PreconditionError("finite index out of range for the Hilbert signature");
    if (static_cast<int>(k.delta.size()) != sig.bosonic_modes)
      throw PreconditionError("ladder exponent vector does not match the bosonic mode count");
  }
}

inline OperatorSum identity_operator(const HilbertSignature& sig) {
  OperatorSum id;
  for (int flat = 0; flat < sig.finite_size(); ++flat) {
    Index mu = sig.unflatten(flat);
    id.add(TermKey{0, mu, mu, Index(static_cast<std::size_t>(sig.bosonic_modes), 0), 0, false},
           ScalarRational::constant(1));
  }
  return id;
}

// Multiplies by the imaginary unit.
inline OperatorSum times_i(const OperatorSum& A) {
  OperatorSum out;
  for (const auto& [key, c] : A.terms()) {
    TermKey k = key;
    if (k.imaginary) {
      k.imaginary = false;
      out.add(k, rat_neg(c));
    } else {
      k.imaginary = true;
      out.add(k, c);
    }
  }
  return out;
}

namespace detail {

// Reduces L(left) · L(right) for one mode to factor(N) · L(left + right) using only
// a a† = N + 1 and a† a = N.
inline Polynomial contract_ladders(int left, int right, int mode) {
  Polynomial factor = Polynomial::constant(1);
  const Polynomial n = Polynomial::number_operator(mode);
  while ((left > 0 && right < 0) || (left < 0 && right > 0)) {
    if (left > 0) {
      // a^p (a†)^k = a^{p-1} (N+1) (a†)^{k-1} = (N+p) a^{p-1} (a†)^{k-1}
      factor *= n + Polynomial::constant(left);
      --left;
      ++right;
    } else {
      // (a†)^k a^q = (a†)^{k-1} N a^{q-1} = (N-(k-1)) (a†)^{k-1} a^{q-1}
      factor *= n - Polynomial::constant(-left - 1);
      ++left;
      --right;
    }
  }
  return factor;
}

}  // namespace detail

inline OperatorSum normal_order_product(const OperatorTerm& a, const OperatorTerm& b) {
  if (a.key.ket != b.key.bra) return {};
  if (a.key.delta.size() != b.key.delta.size()) throw PreconditionError("operands have different mode counts");
  TermKey key;
  key.order = a.key.order + b.key.order;
  key.bra = a.key.bra;
  key.ket = b.key.ket;
  key.harmonic = a.key.harmonic + b.key.harmonic;
  key.delta.resize(a.key.delta.size());
  Polynomial ladder_factor = Polynomial::constant(1);
  for (std::size_t j = 0; j < key.delta.size(); ++j) {
    ladder_factor *= detail::contract_ladders(a.key.delta[j], b.key.delta[j], static_cast<int>(j));
    key.delta[j] = a.key.delta[j] + b.key.delta[j];
  }
  ScalarRational coeff = rat_mul(a.coeff, b.coeff.shift_modes(a.key.delta));
  coeff = rat_mul(coeff, ScalarRational(ladder_factor));
  key.imaginary = a.key.imaginary != b.key.imaginary;
  if (a.key.imaginary && b.key.imaginary) coeff = rat_neg(coeff);
  return OperatorSum::from_term(key, coeff);
}

// Product A·B; terms of total order above `max_order` are dropped before they are formed.
inline OperatorSum product(const OperatorSum& A, const OperatorSum& B, std::optional<int> max_order = {}) {
  OperatorSum out;
  for (const auto& [ka, ca] : A.terms()) {
    for (const auto& [kb, cb] : B.terms()) {
      if (max_order && ka.order + kb.order > *max_order) continue;
      if (ka.ket != kb.bra) continue;
      out += normal_order_product({ka, ca}, {kb, cb});
    }
  }
  return out;
}

inline OperatorSum operator*(const OperatorSum& A, const OperatorSum& B) { return product(A, B); }

inline OperatorSum commutator(const OperatorSum& A, const OperatorSum& B, std::optional<int> max_order = {}) {
  return product(A, B, max_order) - product(B, A, max_order);
}

inline OperatorSum dagger(const OperatorSum& A) {
  OperatorSum out;
  for (const auto& [k, c] : A.terms()) {
    TermKey d;
    d.order = k.order;
    d.bra = k.ket;
    d.ket = k.bra;
    d.harmonic = -k.harmonic;
    d.imaginary = k.imaginary;
    d.delta.resize(k.delta.size());
    for (std::size_t j = 0; j < k.delta.size(); ++j) d.delta[j] = -k.delta[j];
    // (c(N) L)† = L† c(N) = c(N - Δ) L†
    ScalarRational coeff = c.shift_modes(d.delta);
    out.add(d, k.imaginary ? rat_neg(coeff) : coeff);
  }
  return out;
}

struct Channel {
  Index bra;
  Index ket;
  Index delta;
  int harmonic = 0;
  int order = 0;
  bool imaginary = false;
  ScalarRational coeff;

  friend bool operator==(const Channel&, const Channel&) = default;
};

inline std::vector<Channel> channels(const OperatorSum& A) {
  std::vector<Channel> out;
  out.reserve(A.size());
  for (const auto& [k, c] : A.terms()) out.push_back({k.bra, k.ket, k.delta, k.harmonic, k.order, k.imaginary, c});
  return out;
}

inline OperatorSum from_channels(std::span<const Channel> chans) {
  OperatorSum out;
  for (const auto& ch : chans) out.add(TermKey{ch.order, ch.bra, ch.ket, ch.delta, ch.harmonic, ch.imaginary}, ch.coeff);
  return out;
}

// ∂/∂t acting on e^{inΩt}: multiplies each term by i·n·Ω.
inline OperatorSum time_derivative(const OperatorSum& A, std::string_view fundamental) {
  OperatorSum scaled;
  const Polynomial omega = Polynomial::symbol(std::string(fundamental));
  for (const auto& [k, c] : A.terms()) {
    if (k.harmonic == 0) continue;
    scaled.add(k, rat_mul(c, ScalarRational(omega * Rational(k.harmonic))));
  }
  return times_i(scaled);
}

}  // namespace swt
