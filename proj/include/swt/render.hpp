// render.hpp — deterministic text, LaTeX and JSON renderings of operators and solver diagnostics.
// Terms appear in canonical key order, so output is reproducible across runs.

#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "swt/operator_algebra.hpp"
#include "swt/scalar_field.hpp"
#include "swt/swt_core.hpp"

namespace swt {

using Json = nlohmann::ordered_json;

// --------------------------------------------------------------------------- text

inline std::string ladder_text(const Index& delta) {
  std::string out;
  for (std::size_t j = 0; j < delta.size(); ++j) {
    if (delta[j] == 0) continue;
    if (!out.empty()) out += " * ";
    out += (delta[j] > 0 ? "a" : "adag") + std::to_string(j);
    if (std::abs(delta[j]) > 1) out += '^' + std::to_string(std::abs(delta[j]));
  }
  return out;
}

inline std::string term_text(const TermKey& k, const ScalarRational& c, std::string_view fundamental = "Omega") {
  std::string out = "[" + std::to_string(k.order) + "] (" + c.to_string() + ")";
  if (k.imaginary) out += " * i";
  if (auto l = ladder_text(k.delta); !l.empty()) out += " * " + l;
  out += " * |";
  for (std::size_t i = 0; i < k.bra.size(); ++i) out += (i ? "," : "") + std::to_string(k.bra[i]);
  out += "><";
  for (std::size_t i = 0; i < k.ket.size(); ++i) out += (i ? "," : "") + std::to_string(k.ket[i]);
  out += "|";
  if (k.harmonic != 0) out += " * exp(" + std::to_string(k.harmonic) + "*i*" + std::string(fundamental) + "*t)";
  return out;
}

// One term per line: "[order] (coeff) * ladders * |bra><ket| * exp(n*i*Omega*t)".
inline std::string render_text(const OperatorSum& A, std::string_view fundamental = "Omega") {
  if (A.empty()) return "0\n";
  std::string out;
  for (const auto& [k, c] : A.terms()) out += term_text(k, c, fundamental) + '\n';
  return out;
}

// --------------------------------------------------------------------------- LaTeX

inline std::string latex_symbol(std::string_view name) {
  static constexpr std::array<std::string_view, 24> greek = {
      "alpha", "beta",  "gamma",  "delta", "epsilon", "zeta",  "eta",   "theta",
      "kappa", "lambda", "mu",    "nu",    "xi",      "pi",    "rho",   "sigma",
      "tau",   "phi",    "chi",   "psi",   "omega",   "Omega", "Delta", "Gamma"};
  if (name == kHbar) return "\\hbar";
  if (auto mode = number_operator_mode(name)) return "N_{" + std::to_string(*mode) + "}";
  auto split = name.find('_');
  std::string_view base = name.substr(0, split);
  std::string out(base);
  for (auto g : greek)
    if (base == g) out = "\\" + std::string(base);
  if (split != std::string_view::npos) out += "_{" + std::string(name.substr(split + 1)) + "}";
  return out;
}

inline std::string latex_rational(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return "\\frac{" + numerator(q).str() + "}{" + denominator(q).str() + "}";
}

inline std::string latex_polynomial(const Polynomial& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    Rational mag = abs(c);
    out += first ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ");
    first = false;
    std::string mono;
    for (const auto& [name, e] : m.powers()) {
      if (!mono.empty()) mono += ' ';
      mono += latex_symbol(name);
      if (e > 1) mono += "^{" + std::to_string(e) + "}";
    }
    if (mono.empty()) {
      out += latex_rational(mag);
    } else {
      out += (mag == 1 ? "" : latex_rational(mag) + " ") + mono;
    }
  }
  return out;
}

inline std::string latex_scalar(const ScalarRational& c) {
  if (c.is_polynomial()) return latex_polynomial(c.numerator());
  std::string den;
  for (const auto& f : c.denominator()) {
    if (!den.empty()) den += ' ';
    den += "\\left(" + latex_polynomial(f.base) + "\\right)";
    if (f.power > 1) den += "^{" + std::to_string(f.power) + "}";
  }
  return "\\frac{" + latex_polynomial(c.numerator()) + "}{" + den + "}";
}

inline std::string latex_term(const TermKey& k, const ScalarRational& c, std::string_view fundamental) {
  std::string out = "\\left(" + latex_scalar(c) + "\\right)";
  if (k.imaginary) out += " i";
  for (std::size_t j = 0; j < k.delta.size(); ++j) {
    if (k.delta[j] == 0) continue;
    out += k.delta[j] > 0 ? " a_{" + std::to_string(j) + "}" : " a_{" + std::to_string(j) + "}^{\\dagger}";
    if (std::abs(k.delta[j]) > 1) out = out + "^{" + std::to_string(std::abs(k.delta[j])) + "}";
  }
  std::string bra, ket;
  for (int i : k.bra) bra += std::to_string(i);
  for (int i : k.ket) ket += std::to_string(i);
  out += " \\sigma_{" + bra + "," + ket + "}";
  if (k.harmonic != 0) {
    std::string n = k.harmonic == 1 ? "" : k.harmonic == -1 ? "-" : std::to_string(k.harmonic);
    out += " e^{" + n + "i " + latex_symbol(fundamental) + " t}";
  }
  return out;
}

// Aligned LaTeX: one term per row, rows separated by "+".
inline std::string render_latex(const OperatorSum& A, std::string_view fundamental = "Omega") {
  if (A.empty()) return "0\n";
  std::string out = "\\begin{aligned}\n";
  bool first = true;
  for (const auto& [k, c] : A.terms()) {
    out += first ? "  &" : "  &+ ";
    out += latex_term(k, c, fundamental) + " \\\\\n";
    first = false;
  }
  return out + "\\end{aligned}\n";
}

// --------------------------------------------------------------------------- JSON

inline Json scalar_json(const ScalarRational& c) {
  Json den = Json::array();
  for (const auto& f : c.denominator()) den.push_back({{"base", f.base.to_string()}, {"power", f.power}});
  return {{"text", c.to_string()}, {"numerator", c.numerator().to_string()}, {"denominator", den}};
}

inline Json operator_json(const OperatorSum& A) {
  Json terms = Json::array();
  for (const auto& [k, c] : A.terms()) {
    terms.push_back({{"order", k.order},
                     {"bra", k.bra},
                     {"ket", k.ket},
                     {"delta", k.delta},
                     {"harmonic", k.harmonic},
                     {"imaginary", k.imaginary},
                     {"coeff", scalar_json(c)}});
  }
  return terms;
}

inline Json diagnostics_json(const std::vector<ChannelDiagnostic>& diags) {
  Json out = Json::array();
  for (const auto& d : diags) {
    out.push_back({{"order", d.order},
                   {"bra", d.key.bra},
                   {"ket", d.key.ket},
                   {"delta", d.key.delta},
                   {"harmonic", d.key.harmonic},
                   {"imaginary", d.imaginary},
                   {"omega", d.omega.to_string()},
                   {"denominator", d.denominator.to_string()},
                   {"status", d.status}});
  }
  return out;
}

}  // namespace swt
