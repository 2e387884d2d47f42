// swt_core.hpp — closed-form Schrieffer-Wolff generators and effective Hamiltonians.
//
// For a diagonal H0 = Σ_μ f_μ(N⃗) σ_μμ and a perturbation channel p(N⃗) a⃗^Δ⃗ σ_μν e^{inΩt}, the
// generator coefficient is s = -p / (ω - nħΩ) with the frequency operator
// ω = f_ν(N⃗ + Δ⃗) - f_μ(N⃗). It solves [H0, S] = P + iħ ∂S/∂t channel by channel.

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swt/errors.hpp"
#include "swt/operator_algebra.hpp"
#include "swt/scalar_field.hpp"

namespace swt {

inline constexpr std::string_view kHbar = "hbar";

struct ChannelKey {
  Index bra;
  Index ket;
  Index delta;
  int harmonic = 0;

  auto operator<=>(const ChannelKey&) const = default;
};

inline ChannelKey channel_key(const TermKey& k) { return {k.bra, k.ket, k.delta, k.harmonic}; }

inline ChannelKey conjugate(const ChannelKey& k) {
  ChannelKey c{k.ket, k.bra, k.delta, -k.harmonic};
  for (int& d : c.delta) d = -d;
  return c;
}

inline std::string index_string(const Index& idx) {
  std::string s = "(";
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "," : "") + std::to_string(idx[i]);
  return s + ")";
}

inline std::string to_string(const ChannelKey& k) {
  return "bra=" + index_string(k.bra) + " ket=" + index_string(k.ket) + " delta=" + index_string(k.delta) +
         " harmonic=" + std::to_string(k.harmonic);
}

// Selects the channels that make up P^{(j)}. Must be closed under hermitian conjugation.
class EliminatorMask {
 public:
  EliminatorMask(std::function<bool(const ChannelKey&)> pred, std::string description)
      : pred_(std::move(pred)), description_(std::move(description)) {}

  bool selects(const ChannelKey& k) const { return pred_(k); }
  const std::string& description() const noexcept { return description_; }

  void require_closed(const ChannelKey& k) const {
    if (selects(k) != selects(conjugate(k)))
      throw PreconditionError("eliminator mask is not closed under conjugation at channel " + to_string(k));
  }

 private:
  std::function<bool(const ChannelKey&)> pred_;
  std::string description_;
};

// Default mask: couplings between different blocks of the finite basis.
inline EliminatorMask cross_block_mask(const HilbertSignature& sig) {
  return EliminatorMask([sig](const ChannelKey& k) { return sig.block_of(k.bra) != sig.block_of(k.ket); },
                        "cross_block");
}

// Mask from an explicit channel list. Throws unless the list is conjugation-closed.
inline EliminatorMask explicit_mask(std::set<ChannelKey> keys) {
  for (const auto& k : keys)
    if (!keys.contains(conjugate(k)))
      throw PreconditionError("explicit eliminator mask lacks the conjugate of channel " + to_string(k));
  return EliminatorMask([keys = std::move(keys)](const ChannelKey& k) { return keys.contains(k); }, "explicit");
}

// --------------------------------------------------------------------------- frequency operator

// f_μ(N⃗) per finite multi-index, extracted from a diagonal H0.
inline std::map<Index, Polynomial> diagonal_energies(const OperatorSum& h0) {
  std::map<Index, Polynomial> f;
  for (const auto& [k, c] : h0.terms()) {
    bool diagonal = k.bra == k.ket && k.harmonic == 0 && !k.imaginary &&
                    std::all_of(k.delta.begin(), k.delta.end(), [](int d) { return d == 0; });
    if (!diagonal) throw NotDiagonal("unperturbed Hamiltonian has an off-diagonal or time-dependent term");
    if (!c.is_polynomial()) throw NotDiagonal("unperturbed energies must be polynomials in the number operators");
    f[k.bra] += c.numerator();
  }
  return f;
}

inline Polynomial frequency(const std::map<Index, Polynomial>& energies, const Index& bra, const Index& ket,
                            const Index& delta) {
  auto lookup = [&](const Index& mu) {
    auto it = energies.find(mu);
    return it == energies.end() ? Polynomial{} : it->second;
  };
  Polynomial f_ket = lookup(ket);
  for (std::size_t j = 0; j < delta.size(); ++j) f_ket = poly_shift(f_ket, static_cast<int>(j), delta[j]);
  return f_ket - lookup(bra);
}

// ω_{μν}^{(Δ)} = f_ν(N⃗ + Δ⃗) - f_μ(N⃗)
inline Polynomial frequency(const OperatorSum& h0, const Index& bra, const Index& ket, const Index& delta) {
  return frequency(diagonal_energies(h0), bra, ket, delta);
}

// --------------------------------------------------------------------------- generator solvers

struct ChannelDiagnostic {
  int order = 0;
  ChannelKey key;
  bool imaginary = false;
  Polynomial omega;
  Polynomial denominator;
  std::string status;
};

namespace detail {

// Nonnegative-integer roots of a polynomial in number operators only, restricted to the Fock
// levels on which a coefficient multiplying a⃗^Δ⃗ is actually evaluated (N_j >= max(0, -Δ_j)).
inline std::vector<Index> fock_roots(const Polynomial& den, const Index& delta, int search_limit = 64) {
  std::vector<Index> roots;
  for (const auto& name : den.symbols())
    if (!number_operator_mode(name)) return roots;  // depends on free parameters; undecidable here
  const std::size_t modes = delta.size();
  std::vector<int> lo(modes), hi(modes);
  for (std::size_t j = 0; j < modes; ++j) {
    lo[j] = std::max(0, -delta[j]);
    bool present = den.degree_in(number_operator_name(static_cast<int>(j))) > 0;
    hi[j] = present ? lo[j] + search_limit : lo[j];
  }
  if (modes == 0) return roots;
  Index n(lo.begin(), lo.end());
  for (;;) {
    Rational v = den.evaluate_exact([&](std::string_view name) { return Rational(n[static_cast<std::size_t>(*number_operator_mode(name))]); });
    if (v == 0) {
      roots.push_back(n);
      if (roots.size() >= 16) return roots;
    }
    std::size_t j = 0;
    for (; j < modes; ++j) {
      if (++n[j] <= hi[j]) break;
      n[j] = lo[j];
    }
    if (j == modes) return roots;
  }
}

inline std::string levels_string(const std::vector<Index>& levels) {
  std::string s;
  for (const auto& l : levels) s += (s.empty() ? "" : " ") + index_string(l);
  return s;
}

}  // namespace detail

// Solves [H0, S] = P + iħ∂S/∂t channel by channel. Without a fundamental every channel must be static.
inline OperatorSum solve_generator(const OperatorSum& h0, const OperatorSum& P,
                                   std::optional<std::string_view> fundamental,
                                   std::vector<ChannelDiagnostic>* diagnostics = nullptr) {
  const auto energies = diagonal_energies(h0);
  OperatorSum S;
  for (const auto& [k, p] : P.terms()) {
    if (k.harmonic != 0 && !fundamental)
      throw PreconditionError("time-dependent channel " + to_string(channel_key(k)) + " without a fundamental frequency");
    Polynomial omega = frequency(energies, k.bra, k.ket, k.delta);
    Polynomial den = omega;
    if (k.harmonic != 0) {
      den -= Polynomial::symbol(std::string(kHbar)) * Polynomial::symbol(std::string(*fundamental)) *
             Rational(k.harmonic);
    }
    ChannelDiagnostic diag{k.order, channel_key(k), k.imaginary, omega, den, "ok"};
    if (den.is_zero()) {
      diag.status = "resonance";
      if (diagnostics) diagnostics->push_back(diag);
      throw Resonance("order " + std::to_string(k.order) + " channel " + to_string(channel_key(k)) +
                      ": denominator is identically zero");
    }
    auto roots = detail::fock_roots(den, k.delta);
    if (!roots.empty()) {
      diag.status = "fock_singular";
      if (diagnostics) diagnostics->push_back(diag);
      throw FockSingular("order " + std::to_string(k.order) + " channel " + to_string(channel_key(k)) +
                             ": denominator " + den.to_string() + " vanishes at Fock levels " +
                             detail::levels_string(roots),
                         roots);
    }
    if (diagnostics) diagnostics->push_back(diag);
    S.add(k, rat_neg(rat_mul(p, rat_inv_poly(den))));
  }
  return S;
}

inline OperatorSum solve_generator_static(const OperatorSum& h0, const OperatorSum& P,
                                          std::vector<ChannelDiagnostic>* diagnostics = nullptr) {
  return solve_generator(h0, P, std::nullopt, diagnostics);
}

inline OperatorSum solve_generator_periodic(const OperatorSum& h0, const OperatorSum& P, std::string_view fundamental,
                                            std::vector<ChannelDiagnostic>* diagnostics = nullptr) {
  return solve_generator(h0, P, fundamental, diagnostics);
}

// Fast-drive limit |nħΩ| >> |ω| of the periodic solution: s = p / (nħΩ), i.e. S = (i/ħ)∫P dτ.
inline OperatorSum fast_drive_generator(const OperatorSum& P, std::string_view fundamental) {
  OperatorSum S;
  const Polynomial hbar_omega =
      Polynomial::symbol(std::string(kHbar)) * Polynomial::symbol(std::string(fundamental));
  for (const auto& [k, p] : P.terms()) {
    if (k.harmonic == 0)
      throw StaticComponent("channel " + to_string(channel_key(k)) + " has no time dependence");
    S.add(k, rat_mul(p, rat_inv_poly(hbar_omega * Rational(k.harmonic))));
  }
  return S;
}

// --------------------------------------------------------------------------- effective Hamiltonian

// e^{-S} H e^{S} + iħ (∂_t e^{-S}) e^{S}, truncated at perturbation order `max_order`.
inline OperatorSum rotate(const OperatorSum& H, const OperatorSum& S, int max_order,
                          std::optional<std::string_view> fundamental) {
  OperatorSum result = H.truncated(max_order);
  OperatorSum nested = result;
  for (int k = 1; k <= max_order && !nested.empty() && !S.empty(); ++k) {
    nested = commutator(nested, S, max_order).scaled(Rational(1, k));
    result += nested;
  }
  if (fundamental && !S.empty()) {
    // iħ ∂_t e^{-S} e^{S} = -iħ Σ_l [∂_t S, S]^{(l)} / (l+1)!
    OperatorSum nested_dt = time_derivative(S, *fundamental).truncated(max_order);
    const ScalarRational hbar = ScalarRational::symbol(std::string(kHbar));
    Rational factorial = 1;
    for (int l = 0; l < max_order && !nested_dt.empty(); ++l) {
      factorial *= (l + 1);
      result += times_i(nested_dt.scaled(rat_scale(hbar, Rational(-1) / factorial)));
      nested_dt = commutator(nested_dt, S, max_order);
    }
  }
  return result;
}

// [H0, S] - P - iħ ∂_t S; vanishes identically for a correctly solved generator.
inline OperatorSum defining_residual(const OperatorSum& h0, const OperatorSum& S, const OperatorSum& P,
                                     std::optional<std::string_view> fundamental) {
  OperatorSum r = commutator(h0, S) - P;
  if (fundamental) {
    r -= times_i(time_derivative(S, *fundamental).scaled(ScalarRational::symbol(std::string(kHbar))));
  }
  return r;
}

struct SwtResult {
  int order = 0;
  std::optional<std::string> fundamental;
  OperatorSum h0;
  std::vector<OperatorSum> generators;  // S^{(1)}, ..., S^{(n)}
  std::vector<OperatorSum> defining;    // P^{(1)}, ..., P^{(n)}
  OperatorSum effective;
  std::vector<ChannelDiagnostic> diagnostics;

  OperatorSum generator_total() const {
    OperatorSum s;
    for (const auto& g : generators) s += g;
    return s;
  }
};

inline OperatorSum masked_part(const OperatorSum& A, const EliminatorMask& mask) {
  return A.filter([&](const TermKey& k, const ScalarRational&) {
    ChannelKey ck = channel_key(k);
    mask.require_closed(ck);
    return mask.selects(ck);
  });
}

inline SwtResult effective_hamiltonian(const OperatorSum& h, const EliminatorMask& mask, int order,
                                       std::optional<std::string> fundamental = std::nullopt) {
  if (order < 0) throw PreconditionError("order must be nonnegative");
  SwtResult result;
  result.order = order;
  result.fundamental = fundamental;
  result.h0 = h.with_order(0);
  diagonal_energies(result.h0);  // throws NotDiagonal
  if (!fundamental) {
    for (const auto& [k, _] : h.terms())
      if (k.harmonic != 0) throw PreconditionError("time-dependent Hamiltonian requires a fundamental frequency");
  }
  std::optional<std::string_view> drive;
  if (fundamental) drive = *fundamental;

  OperatorSum s_total;
  for (int j = 1; j <= order; ++j) {
    OperatorSum r_j = rotate(h, s_total, j, drive).with_order(j);
    OperatorSum p_j = -masked_part(r_j, mask);
    // P^{(j)} terms carry order j, so solver errors name the order and the channel.
    OperatorSum s_j = solve_generator(result.h0, p_j, drive, &result.diagnostics);
    s_total += s_j;
    result.generators.push_back(std::move(s_j));
    result.defining.push_back(std::move(p_j));
  }
  result.effective = order == 0 ? result.h0 : rotate(h, s_total, order, drive);
  return result;
}

// --------------------------------------------------------------------------- dispersive shift

// χ(N) = |(ε_{n,0} - ε_{0,0}) - (ε_{n,1} - ε_{0,1})| from the static diagonal part of H_eff.
// The signed expression is kept; the absolute value is applied on evaluation.
struct DispersiveShift {
  ScalarRational signed_value;
  bool absolute = true;

  // Exact evaluation: the combined numerator cancels heavily near the poles.
  double evaluate(const Bindings& bindings, std::span<const int> fock = {}) const {
    double v = to_double(rat_eval_exact(signed_value, bindings, fock));
    return absolute ? std::abs(v) : v;
  }
};

inline DispersiveShift dispersive_shift(const SwtResult& result, const HilbertSignature& sig,
                                        std::optional<int> n = std::nullopt) {
  if (sig.finite_dims.size() != 1 || sig.finite_dims[0] != 2)
    throw NotTwoLevel("dispersive shift needs a single two-level finite subspace");
  if (sig.bosonic_modes != 1) throw PreconditionError("dispersive shift needs exactly one bosonic mode");
  ScalarRational eps[2];
  for (const auto& [k, c] : result.effective.terms()) {
    if (k.bra != k.ket || k.harmonic != 0 || k.delta[0] != 0) continue;
    if (k.imaginary) throw PreconditionError("effective Hamiltonian has an imaginary diagonal term");
    eps[k.bra[0]] = rat_add(eps[k.bra[0]], c);
  }
  const std::string N = number_operator_name(0);
  auto at = [&](const ScalarRational& e, std::optional<int> level) {
    return level ? e.substitute(N, Polynomial::constant(*level)) : e;
  };
  ScalarRational chi = (at(eps[0], n) - at(eps[0], 0)) - (at(eps[1], n) - at(eps[1], 0));
  return {chi, true};
}

}  // namespace swt
