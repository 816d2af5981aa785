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

#include <bit>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "cpsverify/errors.hpp"

namespace cpsverify {

/// Single-qubit Pauli axis. The enumerator values are not the symplectic bits;
/// use x_bit()/z_bit() for those.
enum class PauliAxis : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline constexpr PauliAxis kAllAxes[4] = {PauliAxis::I, PauliAxis::X, PauliAxis::Y, PauliAxis::Z};

constexpr bool x_bit(PauliAxis a) { return a == PauliAxis::X || a == PauliAxis::Y; }
constexpr bool z_bit(PauliAxis a) { return a == PauliAxis::Z || a == PauliAxis::Y; }

constexpr PauliAxis axis_from_bits(bool x, bool z) {
  return x ? (z ? PauliAxis::Y : PauliAxis::X) : (z ? PauliAxis::Z : PauliAxis::I);
}

constexpr char axis_char(PauliAxis a) {
  constexpr char kChars[4] = {'I', 'X', 'Y', 'Z'};
  return kChars[static_cast<int>(a)];
}

inline PauliAxis parse_axis(char c) {
  switch (c) {
    case 'I': case 'i': case '_': return PauliAxis::I;
    case 'X': case 'x': return PauliAxis::X;
    case 'Y': case 'y': return PauliAxis::Y;
    case 'Z': case 'z': return PauliAxis::Z;
    default: throw ParseError(std::string("unknown Pauli axis '") + c + "'");
  }
}

/// n-qubit Pauli operator i^phase * (sigma_0 (x) sigma_1 (x) ...), where qubit j
/// carries I/X/Z/Y for (x_j, z_j) = (0,0)/(1,0)/(0,1)/(1,1). Y is the Hermitian
/// Pauli Y, so the operator is Hermitian exactly when the phase is even.
///
/// Bits are packed 64 per word; unused high bits of the last word stay zero.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::size_t num_qubits)
      : n_(num_qubits), xs_(word_count(num_qubits), 0), zs_(word_count(num_qubits), 0) {}

  std::size_t size() const { return n_; }

  bool x(std::size_t q) const { return (xs_[q >> 6] >> (q & 63)) & 1U; }
  bool z(std::size_t q) const { return (zs_[q >> 6] >> (q & 63)) & 1U; }
  void set_x(std::size_t q, bool v) { set_bit(xs_, q, v); }
  void set_z(std::size_t q, bool v) { set_bit(zs_, q, v); }

  PauliAxis axis(std::size_t q) const { return axis_from_bits(x(q), z(q)); }
  void set_axis(std::size_t q, PauliAxis a) {
    set_x(q, x_bit(a));
    set_z(q, z_bit(a));
  }

  /// Exponent of i, in {0,1,2,3}.
  std::uint8_t phase() const { return phase_; }
  void set_phase(unsigned p) { phase_ = static_cast<std::uint8_t>(p & 3U); }
  void add_phase(unsigned p) { phase_ = static_cast<std::uint8_t>((phase_ + p) & 3U); }
  void negate() { add_phase(2); }

  bool is_hermitian() const { return (phase_ & 1U) == 0; }

  /// +1 or -1; only meaningful for Hermitian strings.
  int sign() const { return phase_ == 2 ? -1 : +1; }

  std::size_t weight() const {
    std::size_t w = 0;
    for (std::size_t k = 0; k < xs_.size(); ++k) w += std::popcount(xs_[k] | zs_[k]);
    return w;
  }

  std::size_t y_count() const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < xs_.size(); ++k) c += std::popcount(xs_[k] & zs_[k]);
    return c;
  }

  /// True when every qubit carries I (phase ignored).
  bool is_identity() const { return weight() == 0; }

  const std::vector<std::uint64_t>& x_words() const { return xs_; }
  const std::vector<std::uint64_t>& z_words() const { return zs_; }

  /// In-place right multiplication: *this = *this * rhs, with exact phase.
  PauliString& operator*=(const PauliString& rhs) {
    check_same_size(rhs, "multiply");
    int log_i = phase_ + rhs.phase_;
    for (std::size_t k = 0; k < xs_.size(); ++k) {
      const std::uint64_t x1 = xs_[k], z1 = zs_[k], x2 = rhs.xs_[k], z2 = rhs.zs_[k];
      // sigma_a sigma_b = +i sigma_c for (a,b) in {XY, YZ, ZX}; -i for the reverse.
      const std::uint64_t plus = (x1 & ~z1 & x2 & z2) | (x1 & z1 & ~x2 & z2) | (~x1 & z1 & x2 & ~z2);
      const std::uint64_t minus = (x1 & z1 & x2 & ~z2) | (~x1 & z1 & x2 & z2) | (x1 & ~z1 & ~x2 & z2);
      log_i += std::popcount(plus) - std::popcount(minus);
      xs_[k] = x1 ^ x2;
      zs_[k] = z1 ^ z2;
    }
    phase_ = static_cast<std::uint8_t>(((log_i % 4) + 4) % 4);
    return *this;
  }

  friend PauliString operator*(PauliString lhs, const PauliString& rhs) { return lhs *= rhs; }

  /// Symplectic inner product parity.
  bool commutes(const PauliString& other) const {
    check_same_size(other, "commutes");
    std::size_t anti = 0;
    for (std::size_t k = 0; k < xs_.size(); ++k) {
      anti += std::popcount((xs_[k] & other.zs_[k]) ^ (zs_[k] & other.xs_[k]));
    }
    return (anti & 1U) == 0;
  }

  /// `[sign]AXES`: sign omitted for +1, "-" for -1, "+i"/"-i" for imaginary phases.
  std::string str() const {
    static constexpr const char* kPrefix[4] = {"", "+i", "-", "-i"};
    std::string out = kPrefix[phase_];
    out.reserve(out.size() + n_);
    for (std::size_t q = 0; q < n_; ++q) out.push_back(axis_char(axis(q)));
    return out;
  }

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.n_ == b.n_ && a.phase_ == b.phase_ && a.xs_ == b.xs_ && a.zs_ == b.zs_;
  }

  friend std::ostream& operator<<(std::ostream& os, const PauliString& p) { return os << p.str(); }

 private:
  static std::size_t word_count(std::size_t n) { return (n + 63) / 64; }

  static void set_bit(std::vector<std::uint64_t>& words, std::size_t q, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (q & 63);
    if (v) {
      words[q >> 6] |= mask;
    } else {
      words[q >> 6] &= ~mask;
    }
  }

  void check_same_size(const PauliString& other, const char* op) const {
    if (other.n_ != n_) {
      throw DimensionError(std::string(op) + ": qubit counts differ (" + std::to_string(n_) + " vs " +
                           std::to_string(other.n_) + ")");
    }
  }

  std::size_t n_ = 0;
  std::uint8_t phase_ = 0;
  std::vector<std::uint64_t> xs_;
  std::vector<std::uint64_t> zs_;
};

inline PauliString multiply(const PauliString& p, const PauliString& q) { return p * q; }

inline bool commutes(const PauliString& p, const PauliString& q) { return p.commutes(q); }

/// P acting on qubit i of an n-qubit register, identity elsewhere.
inline PauliString embed_single(PauliAxis axis, std::size_t i, std::size_t n) {
  if (i >= n) {
    throw DimensionError("embed_single: qubit " + std::to_string(i) + " out of range for " + std::to_string(n) +
                         " qubits");
  }
  PauliString p(n);
  p.set_axis(i, axis);
  return p;
}

/// Parses the grammar produced by PauliString::str(). A leading "+" is accepted.
inline PauliString parse_pauli(std::string_view text) {
  unsigned phase = 0;
  std::size_t pos = 0;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    if (text[pos] == '-') phase = 2;
    ++pos;
    if (pos < text.size() && text[pos] == 'i') {
      // Lowercase 'i' right after a sign is always the imaginary unit.
      phase += 1;
      ++pos;
    }
  }
  if (pos >= text.size()) throw ParseError("empty Pauli string '" + std::string(text) + "'");
  PauliString p(text.size() - pos);
  for (std::size_t q = 0; pos < text.size(); ++pos, ++q) p.set_axis(q, parse_axis(text[pos]));
  p.set_phase(phase);
  return p;
}

/// Like parse_pauli but rejects non-Hermitian (imaginary-phase) strings.
inline PauliString parse_observable(std::string_view text) {
  PauliString p = parse_pauli(text);
  if (!p.is_hermitian()) {
    throw ParseError("observable '" + std::string(text) + "' has an imaginary phase");
  }
  return p;
}

}  // namespace cpsverify
