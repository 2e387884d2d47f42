// model.hpp — TOML model files: Hilbert signature, symbols, drive, diagonal H0, perturbations,
// solver settings and default bindings. Parsing validates everything up front and reports
// line:column positions; render_model writes a file that parses back to the same ModelSpec.

#pragma once

#include <toml.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "swt/errors.hpp"
#include "swt/expression.hpp"
#include "swt/operator_algebra.hpp"
#include "swt/swt_core.hpp"

namespace swt {

struct H0Entry {
  Index state;
  std::string energy;

  friend bool operator==(const H0Entry&, const H0Entry&) = default;
};

// Either a projector term (bra/ket) or Pauli sugar acting on one two-level subspace:
// sigma_x, sigma_y, sigma_z = σ_00 - σ_11, sigma_plus = σ_01, sigma_minus = σ_10.
struct PerturbationSpec {
  int order = 1;
  std::string coeff;
  Index delta;
  Index bra;
  Index ket;
  std::string pauli;
  int subspace = 0;
  int harmonic = 0;
  bool hermitian_conjugate = false;
  bool imaginary = false;

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

struct ModelSpec {
  HilbertSignature signature;
  std::vector<std::string> parameters;
  std::optional<std::string> fundamental;
  std::vector<H0Entry> h0;
  std::vector<PerturbationSpec> perturbations;
  int order = 2;
  std::string mask = "cross_block";
  std::vector<ChannelKey> eliminate;
  double hbar = 1.0;
  Bindings bindings;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

namespace detail {

inline ValidationError invalid(const std::string& what, const toml::source_region& at) {
  return ValidationError(what, static_cast<int>(at.begin.line), static_cast<int>(at.begin.column));
}

inline void reject_unknown_keys(const toml::table& t, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  for (auto&& [key, node] : t) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key.str() == a;
    if (!ok) throw invalid("unknown key '" + std::string(key.str()) + "' in " + std::string(where), key.source());
  }
}

inline const toml::table& require_table(const toml::table& t, std::string_view key, const toml::source_region& at) {
  const toml::node* n = t.get(key);
  if (!n) throw invalid("missing table [" + std::string(key) + "]", at);
  if (!n->is_table()) throw invalid("'" + std::string(key) + "' must be a table", n->source());
  return *n->as_table();
}

inline long long get_int(const toml::table& t, std::string_view key, long long fallback) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (!n->is_integer()) throw invalid("'" + std::string(key) + "' must be an integer", n->source());
  return n->as_integer()->get();
}

inline bool get_bool(const toml::table& t, std::string_view key, bool fallback) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (!n->is_boolean()) throw invalid("'" + std::string(key) + "' must be a boolean", n->source());
  return n->as_boolean()->get();
}

inline double get_number(const toml::node& n, std::string_view key) {
  if (n.is_floating_point()) return n.as_floating_point()->get();
  if (n.is_integer()) return static_cast<double>(n.as_integer()->get());
  throw invalid("'" + std::string(key) + "' must be a number", n.source());
}

inline std::optional<std::string> get_string(const toml::table& t, std::string_view key) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_string()) throw invalid("'" + std::string(key) + "' must be a string", n->source());
  return n->as_string()->get();
}

inline Index get_index(const toml::table& t, std::string_view key, std::optional<Index> fallback,
                       const toml::source_region& at) {
  const toml::node* n = t.get(key);
  if (!n) {
    if (fallback) return *fallback;
    throw invalid("missing key '" + std::string(key) + "'", at);
  }
  if (!n->is_array()) throw invalid("'" + std::string(key) + "' must be an array of integers", n->source());
  Index out;
  for (const auto& e : *n->as_array()) {
    if (!e.is_integer()) throw invalid("'" + std::string(key) + "' must be an array of integers", e.source());
    out.push_back(static_cast<int>(e.as_integer()->get()));
  }
  return out;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

inline void check_finite_index(const ModelSpec& m, const Index& idx, std::string_view what, const toml::node& at) {
  if (!m.signature.valid_finite(idx))
    throw invalid(std::string(what) + " " + index_string(idx) + " is out of range for finite dimensions " +
                      index_string(m.signature.finite_dims),
                  at.source());
}

inline void check_delta(const ModelSpec& m, const Index& delta, const toml::node& at) {
  if (static_cast<int>(delta.size()) != m.signature.bosonic_modes)
    throw invalid("delta needs one entry per bosonic mode (" + std::to_string(m.signature.bosonic_modes) + ")",
                  at.source());
}

// Accepts hbar, the model's parameters and N_j for existing modes.
inline ExpressionOptions declared_only(const ModelSpec& m) {
  ExpressionOptions opts;
  opts.is_declared = [&m](std::string_view name) {
    if (name == kHbar) return true;
    if (auto mode = number_operator_mode(name)) return *mode < m.signature.bosonic_modes;
    return std::find(m.parameters.begin(), m.parameters.end(), name) != m.parameters.end();
  };
  return opts;
}

inline ExpressionOptions expression_options(const ModelSpec& m, const toml::node& at) {
  ExpressionOptions opts = declared_only(m);
  opts.line = static_cast<int>(at.source().begin.line);
  // string values start after the opening quote
  opts.column = static_cast<int>(at.source().begin.column) + 1;
  return opts;
}

}  // namespace detail

inline ModelSpec parse_model_string(std::string_view text, std::string_view source = "model") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ParseError(std::string(e.description()), static_cast<int>(e.source().begin.line),
                     static_cast<int>(e.source().begin.column));
  }
  using namespace detail;
  const toml::source_region top = root.source();
  reject_unknown_keys(root, {"hilbert", "symbols", "drive", "h0", "perturbation", "swt", "bindings"}, "model");
  ModelSpec m;

  const toml::table& hilbert = require_table(root, "hilbert", top);
  reject_unknown_keys(hilbert, {"finite_dims", "bosonic_modes", "blocks"}, "[hilbert]");
  m.signature.finite_dims = get_index(hilbert, "finite_dims", std::nullopt, hilbert.source());
  for (int d : m.signature.finite_dims)
    if (d < 2) throw invalid("finite subspace dimensions must be >= 2", hilbert.get("finite_dims")->source());
  m.signature.bosonic_modes = static_cast<int>(get_int(hilbert, "bosonic_modes", 0));
  if (m.signature.bosonic_modes < 0) throw invalid("bosonic_modes must be >= 0", hilbert.get("bosonic_modes")->source());
  m.signature.block_labels = get_index(hilbert, "blocks", Index{}, hilbert.source());
  if (!m.signature.block_labels.empty() &&
      static_cast<int>(m.signature.block_labels.size()) != m.signature.finite_size())
    throw invalid("blocks needs one label per finite basis state (" + std::to_string(m.signature.finite_size()) + ")",
                  hilbert.get("blocks")->source());

  if (const toml::node* sym = root.get("symbols")) {
    if (!sym->is_table()) throw invalid("'symbols' must be a table", sym->source());
    reject_unknown_keys(*sym->as_table(), {"parameters"}, "[symbols]");
    if (const toml::node* params = sym->as_table()->get("parameters")) {
      if (!params->is_array()) throw invalid("'parameters' must be an array of names", params->source());
      std::set<std::string> seen;
      for (const auto& e : *params->as_array()) {
        if (!e.is_string()) throw invalid("parameter names must be strings", e.source());
        std::string name = e.as_string()->get();
        if (!is_identifier(name)) throw invalid("'" + name + "' is not a valid identifier", e.source());
        if (number_operator_mode(name)) throw invalid("'" + name + "' is reserved for a number operator", e.source());
        if (name == kHbar) continue;  // always declared
        if (!seen.insert(name).second) throw invalid("parameter '" + name + "' declared twice", e.source());
        m.parameters.push_back(name);
      }
    }
  }
  auto declared = [&](std::string_view name) {
    return name == kHbar || std::find(m.parameters.begin(), m.parameters.end(), name) != m.parameters.end();
  };

  if (const toml::node* drive = root.get("drive")) {
    if (!drive->is_table()) throw invalid("'drive' must be a table", drive->source());
    reject_unknown_keys(*drive->as_table(), {"fundamental"}, "[drive]");
    m.fundamental = get_string(*drive->as_table(), "fundamental");
    if (m.fundamental && !declared(*m.fundamental))
      throw invalid("fundamental '" + *m.fundamental + "' is not a declared parameter",
                    drive->as_table()->get("fundamental")->source());
  }

  const Index zero_delta(static_cast<std::size_t>(m.signature.bosonic_modes), 0);

  if (const toml::node* h0 = root.get("h0")) {
    if (!h0->is_array_of_tables()) throw invalid("'h0' must be an array of tables [[h0]]", h0->source());
    std::set<Index> seen;
    for (const auto& entry : *h0->as_array()) {
      const toml::table& t = *entry.as_table();
      reject_unknown_keys(t, {"state", "energy"}, "[[h0]]");
      H0Entry e;
      e.state = get_index(t, "state", std::nullopt, t.source());
      check_finite_index(m, e.state, "state", *t.get("state"));
      if (!seen.insert(e.state).second) throw invalid("state " + index_string(e.state) + " listed twice", t.get("state")->source());
      auto energy = get_string(t, "energy");
      if (!energy) throw invalid("missing key 'energy'", t.source());
      e.energy = *energy;
      parse_polynomial(e.energy, expression_options(m, *t.get("energy")));
      m.h0.push_back(std::move(e));
    }
  }

  if (const toml::node* perts = root.get("perturbation")) {
    if (!perts->is_array_of_tables()) throw invalid("'perturbation' must be an array of tables [[perturbation]]", perts->source());
    for (const auto& entry : *perts->as_array()) {
      const toml::table& t = *entry.as_table();
      reject_unknown_keys(t, {"order", "coeff", "delta", "bra", "ket", "operator", "subspace", "harmonic",
                              "hermitian_conjugate", "imaginary"},
                          "[[perturbation]]");
      PerturbationSpec p;
      p.order = static_cast<int>(get_int(t, "order", 1));
      if (p.order < 1) throw invalid("perturbation order must be >= 1", t.get("order")->source());
      auto coeff = get_string(t, "coeff");
      if (!coeff) throw invalid("missing key 'coeff'", t.source());
      p.coeff = *coeff;
      parse_expression(p.coeff, expression_options(m, *t.get("coeff")));
      p.delta = get_index(t, "delta", zero_delta, t.source());
      if (t.get("delta")) check_delta(m, p.delta, *t.get("delta"));
      p.harmonic = static_cast<int>(get_int(t, "harmonic", 0));
      if (p.harmonic != 0 && !m.fundamental)
        throw invalid("harmonic drive needs [drive] fundamental", t.get("harmonic")->source());
      p.hermitian_conjugate = get_bool(t, "hermitian_conjugate", false);
      p.imaginary = get_bool(t, "imaginary", false);
      if (auto op = get_string(t, "operator")) {
        static const std::set<std::string> paulis{"sigma_x", "sigma_y", "sigma_z", "sigma_plus", "sigma_minus"};
        if (!paulis.contains(*op)) throw invalid("unknown operator '" + *op + "'", t.get("operator")->source());
        if (t.get("bra") || t.get("ket")) throw invalid("use either operator or bra/ket, not both", t.get("operator")->source());
        p.pauli = *op;
        p.subspace = static_cast<int>(get_int(t, "subspace", 0));
        if (p.subspace < 0 || p.subspace >= static_cast<int>(m.signature.finite_dims.size()))
          throw invalid("subspace index out of range", (t.get("subspace") ? t.get("subspace") : t.get("operator"))->source());
        if (m.signature.finite_dims[static_cast<std::size_t>(p.subspace)] != 2)
          throw invalid("Pauli operators need a two-level subspace", t.get("operator")->source());
      } else {
        if (t.get("subspace")) throw invalid("'subspace' only applies to Pauli operators", t.get("subspace")->source());
        p.bra = get_index(t, "bra", std::nullopt, t.source());
        p.ket = get_index(t, "ket", std::nullopt, t.source());
        check_finite_index(m, p.bra, "bra", *t.get("bra"));
        check_finite_index(m, p.ket, "ket", *t.get("ket"));
      }
      m.perturbations.push_back(std::move(p));
    }
  }

  if (const toml::node* swt = root.get("swt")) {
    if (!swt->is_table()) throw invalid("'swt' must be a table", swt->source());
    const toml::table& t = *swt->as_table();
    reject_unknown_keys(t, {"order", "mask", "hbar", "eliminate"}, "[swt]");
    m.order = static_cast<int>(get_int(t, "order", 2));
    if (m.order < 0) throw invalid("order must be >= 0", t.get("order")->source());
    m.mask = get_string(t, "mask").value_or("cross_block");
    if (m.mask != "cross_block" && m.mask != "explicit")
      throw invalid("mask must be 'cross_block' or 'explicit'", t.get("mask")->source());
    if (const toml::node* h = t.get("hbar")) m.hbar = get_number(*h, "hbar");
    if (const toml::node* elim = t.get("eliminate")) {
      if (m.mask != "explicit") throw invalid("[[swt.eliminate]] requires mask = \"explicit\"", elim->source());
      if (!elim->is_array_of_tables()) throw invalid("'eliminate' must be an array of tables", elim->source());
      for (const auto& entry : *elim->as_array()) {
        const toml::table& e = *entry.as_table();
        reject_unknown_keys(e, {"bra", "ket", "delta", "harmonic"}, "[[swt.eliminate]]");
        ChannelKey k;
        k.bra = get_index(e, "bra", std::nullopt, e.source());
        k.ket = get_index(e, "ket", std::nullopt, e.source());
        check_finite_index(m, k.bra, "bra", *e.get("bra"));
        check_finite_index(m, k.ket, "ket", *e.get("ket"));
        k.delta = get_index(e, "delta", zero_delta, e.source());
        if (e.get("delta")) check_delta(m, k.delta, *e.get("delta"));
        k.harmonic = static_cast<int>(get_int(e, "harmonic", 0));
        m.eliminate.push_back(std::move(k));
      }
      std::set<ChannelKey> keys(m.eliminate.begin(), m.eliminate.end());
      for (const auto& k : keys)
        if (!keys.contains(conjugate(k)))
          throw invalid("eliminator mask is not closed under conjugation: missing conjugate of " + to_string(k),
                        elim->source());
    }
  }

  if (const toml::node* b = root.get("bindings")) {
    if (!b->is_table()) throw invalid("'bindings' must be a table", b->source());
    for (auto&& [key, node] : *b->as_table()) {
      std::string name(key.str());
      if (name == kHbar) throw invalid("bind hbar through [swt] hbar", key.source());
      if (!declared(name)) throw invalid("binding for undeclared symbol '" + name + "'", key.source());
      m.bindings[name] = get_number(node, name);
    }
  }
  return m;
}

inline ModelSpec parse_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model_string(buffer.str(), path.string());
}

// --------------------------------------------------------------------------- rendering

namespace detail {

inline std::string toml_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

inline std::string toml_array(const Index& idx) {
  std::string out = "[";
  for (std::size_t i = 0; i < idx.size(); ++i) out += (i ? ", " : "") + std::to_string(idx[i]);
  return out + "]";
}

// Shortest decimal that round-trips, always written as a TOML float.
inline std::string toml_float(double v) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace detail

inline std::string render_model(const ModelSpec& m) {
  using namespace detail;
  std::ostringstream out;
  out << "[hilbert]\n"
      << "finite_dims = " << toml_array(m.signature.finite_dims) << "\n"
      << "bosonic_modes = " << m.signature.bosonic_modes << "\n";
  if (!m.signature.block_labels.empty()) out << "blocks = " << toml_array(m.signature.block_labels) << "\n";

  out << "\n[symbols]\nparameters = [";
  for (std::size_t i = 0; i < m.parameters.size(); ++i) out << (i ? ", " : "") << toml_string(m.parameters[i]);
  out << "]\n";

  if (m.fundamental) out << "\n[drive]\nfundamental = " << toml_string(*m.fundamental) << "\n";

  for (const auto& e : m.h0)
    out << "\n[[h0]]\nstate = " << toml_array(e.state) << "\nenergy = " << toml_string(e.energy) << "\n";

  for (const auto& p : m.perturbations) {
    out << "\n[[perturbation]]\norder = " << p.order << "\ncoeff = " << toml_string(p.coeff) << "\n"
        << "delta = " << toml_array(p.delta) << "\n";
    if (p.pauli.empty()) {
      out << "bra = " << toml_array(p.bra) << "\nket = " << toml_array(p.ket) << "\n";
    } else {
      out << "operator = " << toml_string(p.pauli) << "\nsubspace = " << p.subspace << "\n";
    }
    out << "harmonic = " << p.harmonic << "\n"
        << "hermitian_conjugate = " << (p.hermitian_conjugate ? "true" : "false") << "\n"
        << "imaginary = " << (p.imaginary ? "true" : "false") << "\n";
  }

  out << "\n[swt]\norder = " << m.order << "\nmask = " << toml_string(m.mask) << "\nhbar = " << toml_float(m.hbar)
      << "\n";
  for (const auto& k : m.eliminate) {
    out << "\n[[swt.eliminate]]\nbra = " << toml_array(k.bra) << "\nket = " << toml_array(k.ket)
        << "\ndelta = " << toml_array(k.delta) << "\nharmonic = " << k.harmonic << "\n";
  }

  if (!m.bindings.empty()) {
    out << "\n[bindings]\n";
    for (const auto& [name, v] : m.bindings) out << name << " = " << toml_float(v) << "\n";
  }
  return out.str();
}

// --------------------------------------------------------------------------- operators

inline OperatorSum build_h0(const ModelSpec& m) {
  OperatorSum h0;
  const Index zero(static_cast<std::size_t>(m.signature.bosonic_modes), 0);
  for (const auto& e : m.h0)
    h0.add(TermKey{0, e.state, e.state, zero, 0, false}, ScalarRational(parse_polynomial(e.energy, detail::declared_only(m))));
  return h0;
}

namespace detail {

struct PauliElement {
  int bra;
  int ket;
  int sign;
  bool imaginary;
};

inline std::vector<PauliElement> pauli_elements(std::string_view name) {
  if (name == "sigma_x") return {{0, 1, 1, false}, {1, 0, 1, false}};
  if (name == "sigma_y") return {{0, 1, -1, true}, {1, 0, 1, true}};
  if (name == "sigma_z") return {{0, 0, 1, false}, {1, 1, -1, false}};
  if (name == "sigma_plus") return {{0, 1, 1, false}};
  if (name == "sigma_minus") return {{1, 0, 1, false}};
  throw PreconditionError("unknown Pauli operator '" + std::string(name) + "'");
}

}  // namespace detail

inline OperatorSum build_perturbation(const ModelSpec& m) {
  OperatorSum v;
  const auto& sig = m.signature;
  for (const auto& p : m.perturbations) {
    const ScalarRational coeff = parse_expression(p.coeff, detail::declared_only(m));
    OperatorSum term;
    if (p.pauli.empty()) {
      term.add(TermKey{p.order, p.bra, p.ket, p.delta, p.harmonic, p.imaginary}, coeff);
    } else {
      const auto k = static_cast<std::size_t>(p.subspace);
      for (int flat = 0; flat < sig.finite_size(); ++flat) {
        Index rest = sig.unflatten(flat);
        if (rest[k] != 0) continue;  // enumerate the other subspaces once
        for (const auto& e : detail::pauli_elements(p.pauli)) {
          Index bra = rest, ket = rest;
          bra[k] = e.bra;
          ket[k] = e.ket;
          ScalarRational c = rat_scale(coeff, Rational(e.sign));
          if (e.imaginary && p.imaginary) c = rat_neg(c);
          term.add(TermKey{p.order, bra, ket, p.delta, p.harmonic, e.imaginary != p.imaginary}, c);
        }
      }
    }
    v += term;
    if (p.hermitian_conjugate) v += dagger(term);
  }
  return v;
}

inline OperatorSum build_hamiltonian(const ModelSpec& m) { return build_h0(m) + build_perturbation(m); }

inline EliminatorMask build_mask(const ModelSpec& m) {
  if (m.mask == "explicit") return explicit_mask(std::set<ChannelKey>(m.eliminate.begin(), m.eliminate.end()));
  return cross_block_mask(m.signature);
}

// Default bindings with ħ included.
inline Bindings model_bindings(const ModelSpec& m) {
  Bindings b = m.bindings;
  b[std::string(kHbar)] = m.hbar;
  return b;
}

}  // namespace swt
