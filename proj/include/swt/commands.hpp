// commands.hpp — the derive, verify and sweep drivers behind the command-line tool.

#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "swt/errors.hpp"
#include "swt/model.hpp"
#include "swt/numeric_oracle.hpp"
#include "swt/render.hpp"
#include "swt/swt_core.hpp"

namespace swt {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitSingular = 3, kExitVerification = 4 };

inline SwtResult run_model(const ModelSpec& m, std::optional<int> order = std::nullopt) {
  return effective_hamiltonian(build_hamiltonian(m), build_mask(m), order.value_or(m.order), m.fundamental);
}

// --------------------------------------------------------------------------- derive

inline std::string cmd_derive(const ModelSpec& m, std::optional<int> order, std::string_view format) {
  SwtResult r = run_model(m, order);
  const std::string drive = m.fundamental.value_or("Omega");
  if (format == "json") {
    Json gens = Json::array();
    for (std::size_t j = 0; j < r.generators.size(); ++j)
      gens.push_back({{"order", j + 1}, {"terms", operator_json(r.generators[j])}});
    Json out = {{"order", r.order},
                {"fundamental", m.fundamental ? Json(*m.fundamental) : Json(nullptr)},
                {"generators", gens},
                {"effective", operator_json(r.effective)},
                {"diagnostics", diagnostics_json(r.diagnostics)}};
    return out.dump(2) + "\n";
  }
  if (format != "text" && format != "latex") throw ValidationError("unknown format '" + std::string(format) + "'");
  const bool latex = format == "latex";
  const std::string comment = latex ? "% " : "# ";
  std::string out;
  for (std::size_t j = 0; j < r.generators.size(); ++j) {
    out += comment + "generator order " + std::to_string(j + 1) + "\n";
    out += latex ? render_latex(r.generators[j], drive) : render_text(r.generators[j], drive);
  }
  out += comment + "effective Hamiltonian to order " + std::to_string(r.order) + "\n";
  out += latex ? render_latex(r.effective, drive) : render_text(r.effective, drive);
  return out;
}

// --------------------------------------------------------------------------- verify

// Parses "k=v,k2=v2" against the model's declared parameters.
inline Bindings parse_bindings(std::string_view text, const ModelSpec& m) {
  Bindings out;
  std::stringstream in{std::string(text)};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("binding '" + item + "' is not of the form name=value");
    std::string name = item.substr(0, eq);
    bool known = name == kHbar || std::find(m.parameters.begin(), m.parameters.end(), name) != m.parameters.end();
    if (!known) throw ValidationError("binding for undeclared symbol '" + name + "'");
    char* end = nullptr;
    std::string value = item.substr(eq + 1);
    double v = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0') throw ValidationError("binding '" + item + "' has a malformed value");
    out[name] = v;
  }
  return out;
}

struct VerifyOptions {
  int truncation = 20;
  Bindings overrides;
  unsigned seed = 0;
  int samples = 3;
  double jitter = 0.02;         // relative spread of the sampled bindings
  double tolerance = 1e-10;     // residual and matrix-element checks
  double chi_tolerance = 5e-2;  // relative ED vs symbolic dispersive shift
  int chi_level = 2;
};

struct VerifyReport {
  Json json;
  bool pass = true;
};

namespace detail {

// Raises Resonance when a solved channel's denominator vanishes at the given bindings on a Fock
// level the oracle will evaluate.
inline void check_numeric_resonances(const SwtResult& r, const Bindings& b, const std::vector<int>& truncation) {
  for (const auto& d : r.diagnostics) {
    const std::size_t modes = truncation.size();
    Index n(modes, 0);
    for (;;) {
      SymbolValues values(b, n);
      double v = d.denominator.evaluate(values);
      if (std::abs(v) < kDefaultSingularEps)
        throw Resonance("order " + std::to_string(d.order) + " channel " + to_string(d.key) + ": denominator " +
                        d.denominator.to_string() + " vanishes at Fock level " + index_string(n) +
                        " for the given bindings");
      std::size_t j = 0;
      for (; j < modes; ++j) {
        if (++n[j] <= truncation[j]) break;
        n[j] = 0;
      }
      if (j == modes) break;
    }
  }
}

inline bool co_rotating(const OperatorSum& h) {
  for (const auto& [k, _] : h.terms()) {
    int total = 0;
    for (int d : k.delta) total += d;
    if (k.harmonic != total) return false;
  }
  return true;
}

}  // namespace detail

inline VerifyReport cmd_verify(const ModelSpec& m, const VerifyOptions& opt) {
  VerifyReport report;
  Json checks = Json::array();
  auto record = [&](std::string name, bool pass, Json value, Json tolerance, std::string detail = {}) {
    Json c = {{"name", std::move(name)}, {"pass", pass}, {"value", value}, {"tolerance", tolerance}};
    if (!detail.empty()) c["detail"] = detail;
    checks.push_back(c);
    report.pass = report.pass && pass;
  };

  const OperatorSum H = build_hamiltonian(m);
  SwtResult r = run_model(m);
  const EliminatorMask mask = build_mask(m);
  std::optional<std::string_view> drive;
  if (m.fundamental) drive = *m.fundamental;

  // Symbolic identities.
  std::size_t defining_terms = 0, antihermitian_terms = 0;
  for (std::size_t j = 0; j < r.generators.size(); ++j) {
    defining_terms += defining_residual(r.h0, r.generators[j], r.defining[j], drive).size();
    antihermitian_terms += (dagger(r.generators[j]) + r.generators[j]).size();
  }
  record("symbolic_defining_identity", defining_terms == 0, defining_terms, 0);
  record("generator_antihermitian", antihermitian_terms == 0, antihermitian_terms, 0);
  record("effective_hermitian", (dagger(r.effective) - r.effective).empty(), (dagger(r.effective) - r.effective).size(), 0);
  std::size_t masked = masked_part(r.effective, mask).size();
  record("mask_completeness", masked == 0, masked, 0);

  // Numeric oracle at jittered bindings.
  Bindings base = model_bindings(m);
  for (const auto& [k, v] : opt.overrides) base[k] = v;
  for (const auto& s : r.effective.terms())
    for (const auto& name : s.second.symbols())
      if (!number_operator_mode(name) && !base.contains(name))
        throw ValidationError("symbol '" + name + "' has no binding");
  std::vector<int> truncation(static_cast<std::size_t>(m.signature.bosonic_modes), opt.truncation);
  detail::check_numeric_resonances(r, base, truncation);

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Json samples = Json::array();
  double worst_residual = 0.0, worst_element = 0.0;
  std::string element_note;
  for (int s = 0; s < opt.samples; ++s) {
    Bindings b = base;
    for (auto& [name, v] : b)
      if (name != kHbar) v *= 1.0 + opt.jitter * unit(rng);
    double time = 0.0;
    if (m.fundamental && b.contains(*m.fundamental) && b.at(*m.fundamental) != 0)
      time = std::uniform_real_distribution<double>(0.0, 2 * std::numbers::pi / std::abs(b.at(*m.fundamental)))(rng);
    samples.push_back({{"bindings", b}, {"time", time}});
    detail::check_numeric_resonances(r, b, truncation);
    NumericContext ctx{m.signature, truncation, b, time, m.fundamental, {}};
    for (std::size_t j = 0; j < r.generators.size(); ++j) {
      worst_residual = std::max(worst_residual, residual_check(r.h0, r.generators[j], r.defining[j], ctx, drive));
      try {
        worst_element = std::max(worst_element, matrix_element_check(r.h0, r.generators[j], r.defining[j], ctx));
      } catch (const DegenerateSpectrum& e) {
        element_note = std::string("skipped on degenerate levels: ") + e.what();
      }
    }
  }
  record("numeric_residual", worst_residual < opt.tolerance, worst_residual, opt.tolerance);
  if (element_note.empty()) {
    record("matrix_elements", worst_element < opt.tolerance, worst_element, opt.tolerance);
  } else {
    checks.push_back({{"name", "matrix_elements"}, {"pass", Json(nullptr)}, {"detail", element_note}});
  }

  // Dispersive shift against exact diagonalization, for two-level single-mode models.
  const auto& sig = m.signature;
  bool two_level = sig.finite_dims == std::vector<int>{2} && sig.bosonic_modes == 1;
  if (two_level && r.order >= 2 && detail::co_rotating(H) && opt.chi_level + 2 <= opt.truncation) {
    NumericContext ctx{sig, truncation, base, 0.0, m.fundamental, {}};
    double symbolic = dispersive_shift(r, sig, opt.chi_level).evaluate(base);
    try {
      double numeric = dispersive_shift_numeric(H, ctx, opt.chi_level);
      double rel = std::abs(numeric - symbolic) / std::max(std::abs(symbolic), 1e-300);
      Json c = {{"name", "dispersive_shift"}, {"pass", rel < opt.chi_tolerance}, {"value", rel},
                {"tolerance", opt.chi_tolerance}, {"symbolic", symbolic}, {"numeric", numeric},
                {"level", opt.chi_level}};
      checks.push_back(c);
      report.pass = report.pass && rel < opt.chi_tolerance;
    } catch (const AssignmentAmbiguous& e) {
      record("dispersive_shift", false, nullptr, opt.chi_tolerance, e.what());
    }
  }

  report.json = {{"order", r.order}, {"truncation", opt.truncation}, {"seed", opt.seed},
                 {"samples", samples},   {"checks", checks},           {"pass", report.pass}};
  return report;
}

// --------------------------------------------------------------------------- sweep

struct SweepRange {
  double start = 0;
  double stop = 0;
  double step = 1;

  // Half-open grid start, start + step, ... < stop.
  std::vector<double> points() const {
    std::vector<double> out;
    for (long k = 0;; ++k) {
      double x = start + static_cast<double>(k) * step;
      if (x >= stop - 1e-9 * step) break;
      out.push_back(x);
    }
    return out;
  }
};

inline SweepRange parse_range(std::string_view text) {
  SweepRange r;
  std::string s(text);
  double* fields[] = {&r.start, &r.stop, &r.step};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t next = i < 2 ? s.find(':', pos) : s.size();
    if (next == std::string::npos) throw ValidationError("range must be start:stop:step");
    std::string part = s.substr(pos, next - pos);
    char* end = nullptr;
    *fields[i] = std::strtod(part.c_str(), &end);
    if (part.empty() || *end != '\0') throw ValidationError("malformed range component '" + part + "'");
    pos = next + 1;
  }
  if (!(r.step > 0)) throw ValidationError("range step must be positive");
  return r;
}

namespace detail {

// Real roots of a univariate polynomial given by coefficients c[0] + c[1] x + ...
inline std::vector<double> real_roots(std::vector<double> c) {
  while (!c.empty() && c.back() == 0) c.pop_back();
  const std::size_t deg = c.empty() ? 0 : c.size() - 1;
  if (deg == 0) return {};
  if (deg == 1) return {-c[0] / c[1]};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(deg), static_cast<Eigen::Index>(deg));
  for (std::size_t i = 1; i < deg; ++i) companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1;
  for (std::size_t i = 0; i < deg; ++i)
    companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(deg - 1)) = -c[i] / c[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  std::vector<double> out;
  for (const auto& z : es.eigenvalues())
    if (std::abs(z.imag()) <= 1e-9 * std::max(1.0, std::abs(z.real()))) out.push_back(z.real());
  return out;
}

}  // namespace detail

// Locations in [start, stop) where a denominator factor of `chi` vanishes as a function of `param`.
inline std::vector<double> pole_locations(const ScalarRational& chi, const std::string& param, const Bindings& b,
                                          const SweepRange& range) {
  std::vector<double> poles;
  for (const auto& f : chi.denominator()) {
    Polynomial p = f.base;
    for (const auto& name : p.symbols()) {
      if (name == param) continue;
      auto it = b.find(name);
      if (it == b.end()) throw ValidationError("symbol '" + name + "' has no binding");
      p = p.substitute(name, Polynomial::constant(Rational(it->second)));
    }
    std::vector<double> coeffs(p.degree_in(param) + 1, 0.0);
    for (const auto& [mono, c] : p.terms()) coeffs[mono.exponent(param)] += to_double(c);
    for (double x : detail::real_roots(coeffs))
      if (x >= range.start && x < range.stop) poles.push_back(x);
  }
  std::sort(poles.begin(), poles.end());
  std::vector<double> distinct;
  for (double x : poles)
    if (distinct.empty() || std::abs(x - distinct.back()) > 1e-9 * std::max(1.0, std::abs(x))) distinct.push_back(x);
  return distinct;
}

struct SweepResult {
  std::vector<double> x;
  std::vector<std::optional<double>> chi;  // nullopt at poles
  std::vector<double> poles;
  ScalarRational expression;
};

inline SweepResult sweep_dispersive_shift(const ModelSpec& m, const std::string& param, const SweepRange& range, int n) {
  bool known = std::find(m.parameters.begin(), m.parameters.end(), param) != m.parameters.end();
  if (!known) throw ValidationError("sweep parameter '" + param + "' is not a declared parameter");
  if (n < 0) throw ValidationError("Fock level must be nonnegative");
  SwtResult r = run_model(m, std::max(m.order, 2));
  DispersiveShift chi = dispersive_shift(r, m.signature, n);
  Bindings base = model_bindings(m);

  SweepResult out;
  out.expression = chi.signed_value;
  out.x = range.points();
  out.chi.resize(out.x.size());
  out.poles = pole_locations(chi.signed_value, param, base, range);

  auto work = [&](std::size_t begin, std::size_t end) {
    Bindings b = base;
    for (std::size_t i = begin; i < end; ++i) {
      b[param] = out.x[i];
      try {
        out.chi[i] = chi.evaluate(b);
      } catch (const EvalSingular&) {
        out.chi[i] = std::nullopt;
      }
    }
  };
  const std::size_t threads = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
  const std::size_t chunk = (out.x.size() + threads - 1) / threads;
  std::vector<std::thread> pool;
  for (std::size_t begin = 0; begin < out.x.size(); begin += chunk)
    pool.emplace_back(work, begin, std::min(out.x.size(), begin + chunk));
  for (auto& t : pool) t.join();
  return out;
}

inline std::string sweep_csv(const std::string& param, const SweepResult& s) {
  std::string out = param + ",chi\n";
  char buf[64];
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12e,", s.x[i]);
    out += buf;
    if (s.chi[i]) {
      std::snprintf(buf, sizeof buf, "%.12e", *s.chi[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  return p.replace_extension(".poles.json");
}

// Writes the CSV and its pole sidecar; returns the sweep for callers that want the numbers.
inline SweepResult cmd_sweep(const ModelSpec& m, const std::string& param, std::string_view range_text,
                             std::string_view observable, int n, const std::filesystem::path& out) {
  if (observable != "dispersive_shift")
    throw ValidationError("unknown observable '" + std::string(observable) + "'; only dispersive_shift is available");
  SweepRange range = parse_range(range_text);
  SweepResult s = sweep_dispersive_shift(m, param, range, n);
  std::ofstream csv(out);
  if (!csv) throw Error("cannot write '" + out.string() + "'");
  csv << sweep_csv(param, s);
  Json denominators = Json::array();
  for (const auto& f : s.expression.denominator()) denominators.push_back({{"base", f.base.to_string()}, {"power", f.power}});
  Json sidecar = {{"param", param},
                  {"range", {{"start", range.start}, {"stop", range.stop}, {"step", range.step}}},
                  {"observable", observable},
                  {"n", n},
                  {"poles", s.poles},
                  {"denominators", denominators}};
  std::ofstream js(sidecar_path(out));
  if (!js) throw Error("cannot write '" + sidecar_path(out).string() + "'");
  js << sidecar.dump(2) << "\n";
  return s;
}

}  // namespace swt
