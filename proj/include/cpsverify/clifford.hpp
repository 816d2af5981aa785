// Copyright 2026 The cpsverify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cpsverify/errors.hpp"
#include "cpsverify/pauli.hpp"
#include "cpsverify/random.hpp"

namespace cpsverify {

enum class GateKind : std::uint8_t { H, S, Sdg, X, Y, Z, CNOT, CZ, SWAP };

inline constexpr GateKind kAllGateKinds[] = {GateKind::H, GateKind::S,    GateKind::Sdg, GateKind::X,   GateKind::Y,
                                             GateKind::Z, GateKind::CNOT, GateKind::CZ,  GateKind::SWAP};

constexpr bool is_two_qubit(GateKind k) { return k == GateKind::CNOT || k == GateKind::CZ || k == GateKind::SWAP; }

constexpr std::string_view gate_name(GateKind k) {
  constexpr std::string_view kNames[] = {"H", "S", "SDG", "X", "Y", "Z", "CNOT", "CZ", "SWAP"};
  return kNames[static_cast<int>(k)];
}

struct CliffordGate {
  GateKind kind;
  std::uint32_t a;
  std::uint32_t b = 0;  // second operand for two-qubit gates (CNOT: a = control, b = target)

  std::string str() const {
    std::string out(gate_name(kind));
    out += ' ' + std::to_string(a);
    if (is_two_qubit(kind)) out += ' ' + std::to_string(b);
    return out;
  }

  /// The gate implementing the adjoint unitary.
  CliffordGate dagger() const {
    if (kind == GateKind::S) return {GateKind::Sdg, a, b};
    if (kind == GateKind::Sdg) return {GateKind::S, a, b};
    return *this;
  }

  friend bool operator==(const CliffordGate&, const CliffordGate&) = default;
};

inline void validate_gate(const CliffordGate& g, std::size_t width) {
  if (g.a >= width || (is_two_qubit(g.kind) && g.b >= width)) {
    throw DimensionError("gate '" + g.str() + "' addresses a qubit outside width " + std::to_string(width));
  }
  if (is_two_qubit(g.kind) && g.a == g.b) {
    throw ValidationError("gate '" + g.str() + "' needs two distinct qubits");
  }
}

/// Gates applied in list order (gates.front() acts first).
struct CliffordCircuit {
  std::size_t width = 0;
  std::vector<CliffordGate> gates;

  void validate() const {
    for (const auto& g : gates) validate_gate(g, width);
  }

  CliffordCircuit inverse() const {
    CliffordCircuit inv{width, {}};
    inv.gates.reserve(gates.size());
    for (auto it = gates.rbegin(); it != gates.rend(); ++it) inv.gates.push_back(it->dagger());
    return inv;
  }

  std::string str() const {
    std::string out = "QUBITS " + std::to_string(width) + "\n";
    for (const auto& g : gates) out += g.str() + "\n";
    return out;
  }

  friend bool operator==(const CliffordCircuit&, const CliffordCircuit&) = default;
};

/// Conjugates p in place by a single gate: p <- G p G^dagger.
inline void conjugate_by_gate(PauliString& p, const CliffordGate& g) {
  const std::size_t a = g.a, b = g.b;
  const bool xa = p.x(a), za = p.z(a);
  switch (g.kind) {
    case GateKind::H:
      if (xa && za) p.negate();
      p.set_x(a, za);
      p.set_z(a, xa);
      return;
    case GateKind::S:
      if (xa && za) p.negate();
      p.set_z(a, za ^ xa);
      return;
    case GateKind::Sdg:
      if (xa && !za) p.negate();
      p.set_z(a, za ^ xa);
      return;
    case GateKind::X:
      if (za) p.negate();
      return;
    case GateKind::Y:
      if (xa ^ za) p.negate();
      return;
    case GateKind::Z:
      if (xa) p.negate();
      return;
    default:
      break;
  }
  const bool xb = p.x(b), zb = p.z(b);
  switch (g.kind) {
    case GateKind::CNOT:
      if (xa && zb && !(xb ^ za)) p.negate();
      p.set_x(b, xb ^ xa);
      p.set_z(a, za ^ zb);
      return;
    case GateKind::CZ:
      if (xa && xb && (za ^ zb)) p.negate();
      p.set_z(a, za ^ xb);
      p.set_z(b, zb ^ xa);
      return;
    case GateKind::SWAP:
      p.set_x(a, xb);
      p.set_z(a, zb);
      p.set_x(b, xa);
      p.set_z(b, za);
      return;
    default:
      return;
  }
}

/// Clifford unitary C stored as the images C X_j C^dagger and C Z_j C^dagger
/// of the 2n generators.
class CliffordTableau {
 public:
  CliffordTableau() = default;

  /// Identity tableau on n qubits.
  explicit CliffordTableau(std::size_t n) {
    xs_.reserve(n);
    zs_.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
      xs_.push_back(embed_single(PauliAxis::X, j, n));
      zs_.push_back(embed_single(PauliAxis::Z, j, n));
    }
  }

  static CliffordTableau identity(std::size_t n) { return CliffordTableau(n); }

  std::size_t size() const { return xs_.size(); }

  const PauliString& x_image(std::size_t j) const { return xs_[j]; }
  const PauliString& z_image(std::size_t j) const { return zs_[j]; }

  /// Post-composes a gate: the tableau of C becomes the tableau of G C.
  void append(const CliffordGate& g) {
    validate_gate(g, size());
    for (auto& row : xs_) conjugate_by_gate(row, g);
    for (auto& row : zs_) conjugate_by_gate(row, g);
  }

  /// C p C^dagger for Hermitian p.
  PauliString conjugate(const PauliString& p) const {
    if (p.size() != size()) {
      throw DimensionError("conjugate: tableau has " + std::to_string(size()) + " qubits, Pauli has " +
                           std::to_string(p.size()));
    }
    if (!p.is_hermitian()) throw ValidationError("conjugate: Pauli '" + p.str() + "' is not Hermitian");
    // p = i^(phase + #Y) * prod_j X_j^x_j Z_j^z_j, with Y_j = i X_j Z_j.
    PauliString out(size());
    out.set_phase(p.phase() + static_cast<unsigned>(p.y_count() & 3U));
    for (std::size_t w = 0; w < p.x_words().size(); ++w) {
      std::uint64_t bits = p.x_words()[w] | p.z_words()[w];
      while (bits != 0) {
        const std::size_t j = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
        bits &= bits - 1;
        if (p.x(j)) out *= xs_[j];
        if (p.z(j)) out *= zs_[j];
      }
    }
    return out;
  }

  /// Tableau of C^dagger. Bits come from the symplectic inverse, signs are
  /// fixed by pushing each candidate back through C.
  CliffordTableau inverse() const {
    const std::size_t n = size();
    CliffordTableau inv;
    inv.xs_.assign(n, PauliString(n));
    inv.zs_.assign(n, PauliString(n));
    for (std::size_t k = 0; k < n; ++k) {
      PauliString& qx = inv.xs_[k];  // C^dagger X_k C
      PauliString& qz = inv.zs_[k];  // C^dagger Z_k C
      for (std::size_t j = 0; j < n; ++j) {
        qx.set_x(j, zs_[j].z(k));
        qx.set_z(j, xs_[j].z(k));
        qz.set_x(j, zs_[j].x(k));
        qz.set_z(j, xs_[j].x(k));
      }
      if (conjugate(qx).sign() < 0) qx.negate();
      if (conjugate(qz).sign() < 0) qz.negate();
    }
    return inv;
  }

  /// Checks the commutation relations of the generator images and Hermiticity.
  bool is_symplectic() const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!xs_[i].is_hermitian() || !zs_[i].is_hermitian()) return false;
      for (std::size_t j = 0; j < n; ++j) {
        if (xs_[i].commutes(zs_[j]) != (i != j)) return false;
        if (j > i && (!xs_[i].commutes(xs_[j]) || !zs_[i].commutes(zs_[j]))) return false;
      }
    }
    return true;
  }

  std::string str() const {
    std::string out;
    for (std::size_t j = 0; j < size(); ++j) {
      out += "X" + std::to_string(j) + " -> " + xs_[j].str() + "\n";
      out += "Z" + std::to_string(j) + " -> " + zs_[j].str() + "\n";
    }
    return out;
  }

  friend bool operator==(const CliffordTableau&, const CliffordTableau&) = default;

  /// Tableau of "apply b, then a".
  friend CliffordTableau compose(const CliffordTableau& a, const CliffordTableau& b) {
    if (a.size() != b.size()) throw DimensionError("compose: tableau widths differ");
    CliffordTableau out = b;
    for (auto& row : out.xs_) row = a.conjugate(row);
    for (auto& row : out.zs_) row = a.conjugate(row);
    return out;
  }

 private:
  std::vector<PauliString> xs_;
  std::vector<PauliString> zs_;
};

inline CliffordTableau tableau_from_circuit(const CliffordCircuit& circuit) {
  CliffordTableau t(circuit.width);
  for (const auto& g : circuit.gates) t.append(g);
  return t;
}

inline PauliString conjugate(const CliffordTableau& t, const PauliString& p) { return t.conjugate(p); }

/// C^dagger p C. Builds the inverse tableau on every call; callers issuing many
/// queries against one C should keep `inverse(t)` around instead.
inline PauliString conjugate_inverse(const CliffordTableau& t, const PauliString& p) {
  return t.inverse().conjugate(p);
}

inline CliffordTableau inverse(const CliffordTableau& t) { return t.inverse(); }

/// Random gate sequence: each of the `depth` layers is one gate drawn uniformly
/// from the gate set (two-qubit kinds only when n >= 2) on uniform qubits.
inline CliffordCircuit random_circuit(std::size_t n, std::size_t depth, Rng& rng) {
  if (n == 0) throw DimensionError("random_circuit: need at least one qubit");
  CliffordCircuit c{n, {}};
  c.gates.reserve(depth);
  const std::size_t kinds = n >= 2 ? std::size(kAllGateKinds) : 6;
  for (std::size_t layer = 0; layer < depth; ++layer) {
    const GateKind kind = kAllGateKinds[rng.below(kinds)];
    const auto a = static_cast<std::uint32_t>(rng.below(n));
    std::uint32_t b = 0;
    if (is_two_qubit(kind)) {
      b = static_cast<std::uint32_t>(rng.below(n - 1));
      if (b >= a) ++b;
    }
    c.gates.push_back({kind, a, b});
  }
  return c;
}

namespace detail {

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::uint32_t parse_index(std::string_view tok, std::size_t line) {
  std::uint32_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("expected a qubit index, got '" + std::string(tok) + "'", line);
  }
  return v;
}

inline std::optional<GateKind> clifford_kind(const std::string& mnemonic) {
  if (mnemonic == "H") return GateKind::H;
  if (mnemonic == "S") return GateKind::S;
  if (mnemonic == "SDG" || mnemonic == "S_DAG" || mnemonic == "SDAG") return GateKind::Sdg;
  if (mnemonic == "X") return GateKind::X;
  if (mnemonic == "Y") return GateKind::Y;
  if (mnemonic == "Z") return GateKind::Z;
  if (mnemonic == "CNOT" || mnemonic == "CX") return GateKind::CNOT;
  if (mnemonic == "CZ") return GateKind::CZ;
  if (mnemonic == "SWAP") return GateKind::SWAP;
  return std::nullopt;
}

/// One tokenized, comment-stripped line of circuit text.
struct TextLine {
  std::size_t number;
  std::string mnemonic;  // upper-cased
  std::vector<std::string_view> args;
};

/// Splits circuit text into non-empty lines. Views point into `text`.
inline std::vector<TextLine> tokenize_circuit(std::string_view text) {
  std::vector<TextLine> out;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++number;
    pos = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    out.push_back({number, upper(toks.front()), {toks.begin() + 1, toks.end()}});
  }
  return out;
}

/// Parses a Clifford gate line, or returns nullopt if the mnemonic is not a Clifford gate.
inline std::optional<CliffordGate> parse_clifford_line(const TextLine& line) {
  const auto kind = clifford_kind(line.mnemonic);
  if (!kind) return std::nullopt;
  const std::size_t arity = is_two_qubit(*kind) ? 2 : 1;
  if (line.args.size() != arity) {
    throw ParseError(line.mnemonic + " takes " + std::to_string(arity) + " qubit index(es)", line.number);
  }
  CliffordGate g{*kind, parse_index(line.args[0], line.number), 0};
  if (arity == 2) {
    g.b = parse_index(line.args[1], line.number);
    if (g.a == g.b) throw ParseError(line.mnemonic + " needs two distinct qubits", line.number);
  }
  return g;
}

/// Handles an optional leading `QUBITS n`; returns the declared width if present.
inline std::optional<std::size_t> declared_width(std::vector<TextLine>& lines) {
  if (lines.empty() || lines.front().mnemonic != "QUBITS") return std::nullopt;
  const TextLine& l = lines.front();
  if (l.args.size() != 1) throw ParseError("QUBITS takes one argument", l.number);
  const std::size_t w = parse_index(l.args[0], l.number);
  lines.erase(lines.begin());
  return w;
}

}  // namespace detail

/// Parses the one-gate-per-line circuit format. Width comes from a leading
/// `QUBITS n` line, otherwise 1 + the largest index used.
inline CliffordCircuit parse_clifford_circuit(std::string_view text) {
  auto lines = detail::tokenize_circuit(text);
  const auto declared = detail::declared_width(lines);
  CliffordCircuit c;
  std::size_t max_index = 0;
  bool any = false;
  for (const auto& line : lines) {
    if (line.mnemonic == "QUBITS") throw ParseError("QUBITS must be the first statement", line.number);
    const auto g = detail::parse_clifford_line(line);
    if (!g) throw ParseError("unsupported gate '" + line.mnemonic + "'", line.number);
    const std::size_t top = std::max<std::size_t>(g->a, is_two_qubit(g->kind) ? g->b : 0);
    if (declared && top >= *declared) {
      throw ParseError("qubit " + std::to_string(top) + " exceeds declared width " + std::to_string(*declared),
                       line.number);
    }
    max_index = std::max(max_index, top);
    any = true;
    c.gates.push_back(*g);
  }
  c.width = declared ? *declared : (any ? max_index + 1 : 0);
  return c;
}

}  // namespace cpsverify
