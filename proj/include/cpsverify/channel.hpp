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

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cpsverify/errors.hpp"
#include "cpsverify/pauli.hpp"

namespace cpsverify {

/// rho -> (1 - p) rho + p I/2 on one qubit.
struct Depolarizing {
  double p;
  std::size_t qubit;
};

/// rho -> (1 - p/2) rho + (p/2) Z rho Z; p = 1 removes all coherence.
struct Dephasing {
  double p;
  std::size_t qubit;
};

struct AmplitudeDamping {
  double gamma;
  std::size_t qubit;
};

/// exp(-i angle sigma_axis / 2).
struct UnitaryRotation {
  PauliAxis axis;
  double angle;
  std::size_t qubit;
};

/// rho -> (1 - sum p_k) rho + sum_k p_k P_k rho P_k.
struct PauliChannel {
  std::vector<std::pair<PauliString, double>> terms;

  double total_probability() const {
    double s = 0;
    for (const auto& [p, prob] : terms) s += prob;
    return s;
  }
};

using Channel = std::variant<Depolarizing, Dephasing, AmplitudeDamping, UnitaryRotation, PauliChannel>;

using Complex = std::complex<double>;
/// Row-major 2x2 complex matrix.
using Mat2 = std::array<Complex, 4>;

namespace detail {

inline void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
}

inline void check_qubit(std::size_t q, std::size_t n) {
  if (q >= n) throw DimensionError("channel addresses qubit " + std::to_string(q) + " of " + std::to_string(n));
}

}  // namespace detail

inline void validate_channel(const Channel& ch, std::size_t n) {
  std::visit(
      [n](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PauliChannel>) {
          double total = 0;
          for (const auto& [p, prob] : c.terms) {
            if (p.size() != n) throw DimensionError("Pauli channel term '" + p.str() + "' has the wrong width");
            if (!p.is_hermitian()) throw ValidationError("Pauli channel term '" + p.str() + "' is not Hermitian");
            detail::check_probability(prob, "Pauli channel probability");
            total += prob;
          }
          if (total > 1.0 + 1e-12) throw ValidationError("Pauli channel probabilities sum above 1");
        } else {
          detail::check_qubit(c.qubit, n);
          if constexpr (std::is_same_v<T, Depolarizing> || std::is_same_v<T, Dephasing>) {
            detail::check_probability(c.p, "channel probability");
          } else if constexpr (std::is_same_v<T, AmplitudeDamping>) {
            detail::check_probability(c.gamma, "damping rate");
          } else {
            if (!std::isfinite(c.angle)) throw ValidationError("rotation angle is not finite");
          }
        }
      },
      ch);
}

inline bool is_single_qubit(const Channel& ch) { return !std::holds_alternative<PauliChannel>(ch); }

inline std::size_t channel_qubit(const Channel& ch) {
  return std::visit(
      [](const auto& c) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, PauliChannel>) {
          throw ValidationError("Pauli channels act on the whole register");
        } else {
          return c.qubit;
        }
      },
      ch);
}

/// Affine action r -> A r + c of a single-qubit channel on Bloch vectors.
struct BlochMap {
  std::array<std::array<double, 3>, 3> a{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  std::array<double, 3> c{0, 0, 0};

  std::array<double, 3> operator()(const std::array<double, 3>& r) const {
    std::array<double, 3> out = c;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out[i] += a[i][j] * r[j];
    }
    return out;
  }

  /// Map of "apply *this, then next".
  BlochMap then(const BlochMap& next) const {
    BlochMap out;
    for (int i = 0; i < 3; ++i) {
      out.c[i] = next.c[i];
      for (int j = 0; j < 3; ++j) {
        out.a[i][j] = 0;
        for (int k = 0; k < 3; ++k) out.a[i][j] += next.a[i][k] * a[k][j];
        out.c[i] += next.a[i][j] * c[j];
      }
    }
    return out;
  }
};

inline BlochMap bloch_map(const Channel& ch) {
  BlochMap m;
  std::visit(
      [&m](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Depolarizing>) {
          for (int i = 0; i < 3; ++i) m.a[i][i] = 1 - c.p;
        } else if constexpr (std::is_same_v<T, Dephasing>) {
          m.a[0][0] = m.a[1][1] = 1 - c.p;
        } else if constexpr (std::is_same_v<T, AmplitudeDamping>) {
          m.a[0][0] = m.a[1][1] = std::sqrt(1 - c.gamma);
          m.a[2][2] = 1 - c.gamma;
          m.c[2] = c.gamma;
        } else if constexpr (std::is_same_v<T, UnitaryRotation>) {
          if (c.axis == PauliAxis::I) return;
          // Right-handed rotation by `angle` about the axis.
          const double co = std::cos(c.angle), si = std::sin(c.angle);
          const int k = c.axis == PauliAxis::X ? 0 : c.axis == PauliAxis::Y ? 1 : 2;
          const int i = (k + 1) % 3, j = (k + 2) % 3;
          m.a[i][i] = co;
          m.a[i][j] = -si;
          m.a[j][i] = si;
          m.a[j][j] = co;
        } else {
          throw ValidationError("Pauli channels have no single-qubit Bloch map");
        }
      },
      ch);
  return m;
}

inline Mat2 pauli_matrix(PauliAxis a) {
  const Complex i(0, 1);
  switch (a) {
    case PauliAxis::X: return {0, 1, 1, 0};
    case PauliAxis::Y: return {0, -i, i, 0};
    case PauliAxis::Z: return {1, 0, 0, -1};
    default: return {1, 0, 0, 1};
  }
}

/// Kraus operators of a single-qubit channel.
inline std::vector<Mat2> kraus_operators(const Channel& ch) {
  return std::visit(
      [](const auto& c) -> std::vector<Mat2> {
        using T = std::decay_t<decltype(c)>;
        auto scaled = [](double s, PauliAxis a) {
          Mat2 m = pauli_matrix(a);
          for (auto& v : m) v *= s;
          return m;
        };
        if constexpr (std::is_same_v<T, Depolarizing>) {
          const double q = std::sqrt(c.p / 4);
          return {scaled(std::sqrt(1 - 3 * c.p / 4), PauliAxis::I), scaled(q, PauliAxis::X), scaled(q, PauliAxis::Y),
                  scaled(q, PauliAxis::Z)};
        } else if constexpr (std::is_same_v<T, Dephasing>) {
          return {scaled(std::sqrt(1 - c.p / 2), PauliAxis::I), scaled(std::sqrt(c.p / 2), PauliAxis::Z)};
        } else if constexpr (std::is_same_v<T, AmplitudeDamping>) {
          return {Mat2{1, 0, 0, std::sqrt(1 - c.gamma)}, Mat2{0, std::sqrt(c.gamma), 0, 0}};
        } else if constexpr (std::is_same_v<T, UnitaryRotation>) {
          const Complex i(0, 1);
          Mat2 u = scaled(std::cos(c.angle / 2), PauliAxis::I);
          const Mat2 s = pauli_matrix(c.axis);
          for (int k = 0; k < 4; ++k) u[k] -= i * std::sin(c.angle / 2) * s[k];
          return {u};
        } else {
          throw ValidationError("Pauli channels have no single-qubit Kraus form");
        }
      },
      ch);
}

}  // namespace cpsverify
