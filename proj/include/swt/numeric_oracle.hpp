// numeric_oracle.hpp — truncated-Fock materialization and the numeric checks that certify the
// symbolic results.
//
// Basis convention: |n_0, ..., n_{M-1}, μ⃗⟩ in lexicographic order, bosonic modes first (mode 0
// most significant), then the flat finite index. Every norm is taken on the interior block, the
// states with n_j <= n_max_j - margin, where truncation edge effects cannot reach.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swt/errors.hpp"
#include "swt/operator_algebra.hpp"
#include "swt/scalar_field.hpp"
#include "swt/swt_core.hpp"

namespace swt {

using Matrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

struct NumericContext {
  HilbertSignature signature;
  std::vector<int> truncation;  // n_max per bosonic mode
  Bindings bindings;
  std::optional<double> time;
  std::optional<std::string> fundamental;
  std::optional<int> margin;  // derived from the operators when unset

  int levels(std::size_t mode) const { return truncation[mode] + 1; }

  int dimension() const {
    int d = signature.finite_size();
    for (std::size_t j = 0; j < truncation.size(); ++j) d *= levels(j);
    return d;
  }

  int index(std::span<const int> fock, int finite_flat) const {
    int idx = 0;
    for (std::size_t j = 0; j < truncation.size(); ++j) idx = idx * levels(j) + fock[j];
    return idx * signature.finite_size() + finite_flat;
  }

  std::pair<Index, int> state(int idx) const {
    const int f = signature.finite_size();
    int finite_flat = idx % f;
    idx /= f;
    Index fock(truncation.size());
    for (std::size_t j = truncation.size(); j-- > 0;) {
      fock[j] = idx % levels(j);
      idx /= levels(j);
    }
    return {fock, finite_flat};
  }

  void validate() const {
    signature.validate();
    if (static_cast<int>(truncation.size()) != signature.bosonic_modes)
      throw PreconditionError("one truncation level per bosonic mode is required");
    for (int t : truncation)
      if (t < 0) throw PreconditionError("truncation levels must be nonnegative");
  }
};

namespace detail {

// Amplitude of L(Δ)|n⟩ = amp |n - Δ⟩ for one mode; nullopt if the target leaves [0, n_max].
inline std::optional<double> ladder_amplitude(int n, int delta, int n_max) {
  int target = n - delta;
  if (target < 0 || target > n_max) return std::nullopt;
  double amp = 1.0;
  if (delta > 0) {
    for (int k = 0; k < delta; ++k) amp *= std::sqrt(static_cast<double>(n - k));
  } else {
    for (int k = 1; k <= -delta; ++k) amp *= std::sqrt(static_cast<double>(n + k));
  }
  return amp;
}

inline Complex harmonic_phase(const TermKey& k, const NumericContext& ctx) {
  if (k.harmonic == 0) return 1.0;
  if (!ctx.fundamental) throw PreconditionError("time-dependent operator needs a fundamental frequency");
  if (!ctx.time) throw PreconditionError("time-dependent operator needs an evaluation time");
  auto it = ctx.bindings.find(*ctx.fundamental);
  if (it == ctx.bindings.end()) throw PreconditionError("unbound fundamental '" + *ctx.fundamental + "'");
  return std::polar(1.0, k.harmonic * it->second * *ctx.time);
}

}  // namespace detail

inline Matrix materialize(const OperatorSum& A, const NumericContext& ctx) {
  ctx.validate();
  validate(A, ctx.signature);
  const int dim = ctx.dimension();
  Matrix M = Matrix::Zero(dim, dim);
  const std::size_t modes = ctx.truncation.size();
  for (const auto& [k, c] : A.terms()) {
    const Complex phase = detail::harmonic_phase(k, ctx) * (k.imaginary ? Complex(0, 1) : Complex(1));
    const int bra = ctx.signature.flatten(k.bra);
    const int ket = ctx.signature.flatten(k.ket);
    for (int col = 0; col < dim; ++col) {
      auto [fock, flat] = ctx.state(col);
      if (flat != ket) continue;
      double amp = 1.0;
      Index target(modes);
      bool inside = true;
      for (std::size_t j = 0; j < modes && inside; ++j) {
        auto a = detail::ladder_amplitude(fock[j], k.delta[j], ctx.truncation[j]);
        if (!a) {
          inside = false;
        } else {
          amp *= *a;
          target[j] = fock[j] - k.delta[j];
        }
      }
      if (!inside) continue;
      double value = to_double(rat_eval_exact(c, ctx.bindings, target));
      M(ctx.index(target, bra), col) += phase * (amp * value);
    }
  }
  return M;
}

inline int interior_margin(std::initializer_list<const OperatorSum*> ops) {
  int m = 0;
  for (const auto* op : ops) m = std::max(m, op->max_abs_delta());
  return m;
}

// Basis indices whose Fock levels all lie at least `margin` below the cutoff.
inline std::vector<int> interior_indices(const NumericContext& ctx, int margin) {
  for (int t : ctx.truncation)
    if (t < margin + 2) throw PreconditionError("truncation must be at least the interior margin + 2");
  std::vector<int> out;
  for (int idx = 0; idx < ctx.dimension(); ++idx) {
    auto [fock, _] = ctx.state(idx);
    bool inside = true;
    for (std::size_t j = 0; j < fock.size(); ++j) inside = inside && fock[j] <= ctx.truncation[j] - margin;
    if (inside) out.push_back(idx);
  }
  return out;
}

inline Matrix restrict_to(const Matrix& M, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = M(rows[r], cols[c]);
  return out;
}

// Largest singular value.
inline double operator_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::BDCSVD<Matrix>(M).singularValues()(0);
}

inline double hbar_value(const NumericContext& ctx) {
  auto it = ctx.bindings.find(kHbar);
  if (it == ctx.bindings.end()) throw PreconditionError("unbound symbol 'hbar'");
  return it->second;
}

// ‖[H0,S] - P - iħ ∂_t S‖ on the interior block. ∂_t is taken symbolically per harmonic.
inline double residual_check(const OperatorSum& h0, const OperatorSum& S, const OperatorSum& P,
                             const NumericContext& ctx, std::optional<std::string_view> fundamental = std::nullopt) {
  OperatorSum dS;
  if (fundamental) dS = time_derivative(S, *fundamental);
  const int margin = ctx.margin.value_or(interior_margin({&h0, &S, &P}));
  Matrix H = materialize(h0, ctx);
  Matrix Sm = materialize(S, ctx);
  Matrix R = H * Sm - Sm * H - materialize(P, ctx) - Complex(0, hbar_value(ctx)) * materialize(dS, ctx);
  auto inner = interior_indices(ctx, margin);
  return operator_norm(restrict_to(R, inner, inner));
}

// Removes co-rotating drives with the frame e^{-iΩt Σ_j N_j}: a term p a⃗^Δ⃗ e^{inΩt} with n = ΣΔ_j
// becomes static, and every diagonal energy gains -ħΩ Σ_j N_j.
inline OperatorSum rotating_frame(const OperatorSum& h, const HilbertSignature& sig, std::string_view fundamental) {
  bool driven = false;
  OperatorSum out;
  for (const auto& [key, c] : h.terms()) {
    int total = 0;
    for (int d : key.delta) total += d;
    if (key.harmonic != total)
      throw NotCoRotating("term " + to_string(channel_key(key)) + " has harmonic " + std::to_string(key.harmonic) +
                          " but total ladder exponent " + std::to_string(total));
    driven = driven || key.harmonic != 0;
    TermKey k = key;
    k.harmonic = 0;
    out.add(k, c);
  }
  if (!driven) return h;
  Polynomial number_sum;
  for (int j = 0; j < sig.bosonic_modes; ++j) number_sum += Polynomial::number_operator(j);
  const Polynomial shift = -(Polynomial::symbol(std::string(kHbar)) * Polynomial::symbol(std::string(fundamental)) * number_sum);
  for (int flat = 0; flat < sig.finite_size(); ++flat) {
    Index mu = sig.unflatten(flat);
    out.add(TermKey{0, mu, mu, Index(static_cast<std::size_t>(sig.bosonic_modes), 0), 0, false}, ScalarRational(shift));
  }
  return out;
}

// χ(n) = |(ε_{n,0} - ε_{0,0}) - (ε_{n,1} - ε_{0,1})| from exact diagonalization in the rotating frame.
inline double dispersive_shift_numeric(const OperatorSum& h, const NumericContext& ctx, int n) {
  const auto& sig = ctx.signature;
  if (sig.finite_dims.size() != 1 || sig.finite_dims[0] != 2)
    throw NotTwoLevel("dispersive shift needs a single two-level finite subspace");
  if (sig.bosonic_modes != 1) throw PreconditionError("dispersive shift needs exactly one bosonic mode");
  if (n < 0 || n > ctx.truncation[0]) throw PreconditionError("Fock level outside the truncated space");
  OperatorSum static_h = h;
  bool driven = std::any_of(h.terms().begin(), h.terms().end(), [](const auto& t) { return t.first.harmonic != 0; });
  if (driven) {
    if (!ctx.fundamental) throw PreconditionError("time-dependent Hamiltonian needs a fundamental frequency");
    static_h = rotating_frame(h, sig, *ctx.fundamental);
  }
  Matrix H = materialize(static_h, ctx);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(H);
  if (solver.info() != Eigen::Success) throw Error("eigensolver failed");
  const auto& vectors = solver.eigenvectors();
  auto energy = [&](int level, int s) {
    int b = ctx.index(std::vector<int>{level}, s);
    Eigen::Index best = 0;
    double overlap = vectors.row(b).cwiseAbs2().maxCoeff(&best);
    if (overlap <= 0.5)
      throw AssignmentAmbiguous("no eigenstate has squared overlap > 0.5 with |" + std::to_string(level) + "," +
                                std::to_string(s) + ">; largest is " + std::to_string(overlap));
    return solver.eigenvalues()(best);
  };
  return std::abs((energy(n, 0) - energy(0, 0)) - (energy(n, 1) - energy(0, 1)));
}

namespace detail {

// Coefficients of the Lagrange basis polynomial ∏_{k≠i} (x - x_k)/(x_i - x_k) in powers of x.
inline std::vector<Rational> lagrange_basis(const std::vector<int>& nodes, std::size_t i) {
  std::vector<Rational> poly{Rational(1)};
  Rational scale = 1;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (k == i) continue;
    std::vector<Rational> next(poly.size() + 1, Rational(0));
    for (std::size_t d = 0; d < poly.size(); ++d) {
      next[d + 1] += poly[d];
      next[d] -= poly[d] * nodes[k];
    }
    poly = std::move(next);
    scale *= Rational(nodes[i] - nodes[k]);
  }
  for (auto& c : poly) c /= scale;
  return poly;
}

// Interpolates samples on a tensor grid of consecutive Fock levels; exact in rational arithmetic.
inline Polynomial interpolate(const std::vector<std::vector<int>>& grids, const std::map<Index, Rational>& samples) {
  const std::size_t modes = grids.size();
  std::vector<std::vector<std::vector<Rational>>> basis(modes);
  for (std::size_t j = 0; j < modes; ++j)
    for (std::size_t i = 0; i < grids[j].size(); ++i) basis[j].push_back(lagrange_basis(grids[j], i));
  Polynomial out;
  for (const auto& [point, value] : samples) {
    if (value == 0) continue;
    Polynomial term = Polynomial::constant(value);
    for (std::size_t j = 0; j < modes; ++j) {
      auto i = static_cast<std::size_t>(point[j] - grids[j].front());
      Polynomial factor;
      const auto& coeffs = basis[j][i];
      for (std::size_t d = 0; d < coeffs.size(); ++d)
        factor.add_term(Monomial::variable(number_operator_name(static_cast<int>(j)), static_cast<unsigned>(d)), coeffs[d]);
      term *= factor;
    }
    out += term;
  }
  return out;
}

}  // namespace detail

// Matrix → canonical terms. Each channel's coefficient is tabulated on the Fock levels where the
// transition fits inside the truncation and interpolated exactly by a polynomial of minimal
// per-mode degree. Entries below 1e-14 of the largest magnitude are treated as zero.
inline OperatorSum decompose_matrix(const Matrix& M, const HilbertSignature& sig, const std::vector<int>& truncation) {
  NumericContext ctx{sig, truncation, {}, {}, {}, {}};
  ctx.validate();
  if (M.rows() != ctx.dimension() || M.cols() != ctx.dimension())
    throw ShapeMismatch("matrix is " + std::to_string(M.rows()) + "x" + std::to_string(M.cols()) + ", basis has " +
                        std::to_string(ctx.dimension()) + " states");
  const double threshold = 1e-14 * M.cwiseAbs().maxCoeff();
  const std::size_t modes = truncation.size();

  struct ChannelSamples {
    std::map<Index, Rational> re, im;
  };
  std::map<std::tuple<int, int, Index>, ChannelSamples> table;
  for (int row = 0; row < ctx.dimension(); ++row) {
    auto [m, mu] = ctx.state(row);
    for (int col = 0; col < ctx.dimension(); ++col) {
      Complex v = M(row, col);
      if (std::abs(v) <= threshold) continue;
      auto [n, nu] = ctx.state(col);
      Index delta(modes);
      double amp = 1.0;
      for (std::size_t j = 0; j < modes; ++j) {
        delta[j] = n[j] - m[j];
        amp *= *detail::ladder_amplitude(n[j], delta[j], truncation[j]);
      }
      auto& s = table[{mu, nu, delta}];
      if (v.real() != 0) s.re[m] = Rational(v.real() / amp);
      if (v.imag() != 0) s.im[m] = Rational(v.imag() / amp);
    }
  }

  OperatorSum out;
  for (const auto& [key, samples] : table) {
    const auto& [mu, nu, delta] = key;
    std::vector<std::vector<int>> grids(modes);
    for (std::size_t j = 0; j < modes; ++j)
      for (int l = std::max(0, -delta[j]); l <= truncation[j] - std::max(0, delta[j]); ++l) grids[j].push_back(l);
    TermKey k{0, sig.unflatten(mu), sig.unflatten(nu), delta, 0, false};
    out.add(k, ScalarRational(detail::interpolate(grids, samples.re)));
    k.imaginary = true;
    out.add(k, ScalarRational(detail::interpolate(grids, samples.im)));
  }
  return out;
}

// max |⟨a|S_n|b⟩(E_a - E_b + nħΩ) - ⟨a|P_n|b⟩| over interior pairs and harmonics n; the static
// case is the matrix-element form of the generator equation.
inline double matrix_element_check(const OperatorSum& h0, const OperatorSum& S, const OperatorSum& P,
                                   const NumericContext& ctx) {
  diagonal_energies(h0);
  NumericContext frozen = ctx;
  frozen.time = 0.0;
  const int margin = ctx.margin.value_or(interior_margin({&h0, &S, &P}));
  const auto inner = interior_indices(ctx, margin);
  const Eigen::VectorXcd E = materialize(h0, frozen).diagonal();
  std::set<int> harmonics;
  for (const auto* op : {&S, &P})
    for (const auto& [k, _] : op->terms()) harmonics.insert(k.harmonic);
  double drive = 0.0;
  if (harmonics.size() > 1 || (harmonics.size() == 1 && *harmonics.begin() != 0)) {
    if (!ctx.fundamental) throw PreconditionError("time-dependent operator needs a fundamental frequency");
    drive = hbar_value(ctx) * ctx.bindings.at(*ctx.fundamental);
  }
  double worst = 0.0;
  std::vector<std::pair<int, int>> degenerate;
  for (int n : harmonics) {
    Matrix Sn = materialize(S.with_harmonic(n), frozen);
    Matrix Pn = materialize(P.with_harmonic(n), frozen);
    for (int a : inner) {
      for (int b : inner) {
        double gap = (E(a) - E(b)).real() + n * drive;
        if (std::abs(gap) <= 1e-9) {
          if (n == 0 && a < b) degenerate.emplace_back(a, b);
          continue;
        }
        worst = std::max(worst, std::abs(Sn(a, b) * gap - Pn(a, b)));
      }
    }
  }
  if (!degenerate.empty())
    throw DegenerateSpectrum(std::to_string(degenerate.size()) + " degenerate interior pairs", degenerate);
  return worst;
}

// e^{-S} H e^{S} by its commutator series truncated after `depth` nested commutators.
inline Matrix similarity_transform(const Matrix& H, const Matrix& S, int depth) {
  Matrix result = H;
  Matrix nested = H;
  for (int k = 1; k <= depth; ++k) {
    nested = (nested * S - S * nested) / static_cast<double>(k);
    result += nested;
  }
  return result;
}

// Operator norm of the couplings between different finite blocks on the interior block.
inline double off_block_norm(const Matrix& M, const NumericContext& ctx, int margin) {
  const auto inner = interior_indices(ctx, margin);
  Matrix off = restrict_to(M, inner, inner);
  for (std::size_t r = 0; r < inner.size(); ++r) {
    int br = ctx.signature.block_of(ctx.signature.unflatten(ctx.state(inner[r]).second));
    for (std::size_t c = 0; c < inner.size(); ++c) {
      int bc = ctx.signature.block_of(ctx.signature.unflatten(ctx.state(inner[c]).second));
      if (br == bc) off(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = 0;
    }
  }
  return operator_norm(off);
}

}  // namespace swt
