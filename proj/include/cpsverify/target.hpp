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
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cpsverify/clifford.hpp"
#include "cpsverify/errors.hpp"
#include "cpsverify/pauli.hpp"
#include "cpsverify/random.hpp"

namespace cpsverify {

inline constexpr double kPurityTolerance = 1e-9;
/// Axes with |chi| below this are left out of the sampling support.
inline constexpr double kSupportCutoff = 1e-12;

/// Pure single-qubit state given by its Bloch vector.
class SingleQubitState {
 public:
  /// Throws ValidationError unless |r| == 1 within kPurityTolerance.
  static SingleQubitState from_bloch(double rx, double ry, double rz) {
    if (!std::isfinite(rx) || !std::isfinite(ry) || !std::isfinite(rz)) {
      throw ValidationError("Bloch vector has non-finite components");
    }
    const double norm2 = rx * rx + ry * ry + rz * rz;
    if (std::abs(norm2 - 1.0) > kPurityTolerance) {
      throw ValidationError("Bloch vector is not normalized (|r|^2 = " + std::to_string(norm2) + ")");
    }
    return SingleQubitState({rx, ry, rz});
  }

  /// cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>.
  static SingleQubitState from_angles(double theta, double phi) {
    return SingleQubitState({std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)});
  }

  /// One of 0, 1, +, -, +i, -i, T (T means T|+>).
  static SingleQubitState from_token(std::string_view token) {
    constexpr double h = std::numbers::sqrt2 / 2;
    if (token == "0") return SingleQubitState({0, 0, 1});
    if (token == "1") return SingleQubitState({0, 0, -1});
    if (token == "+") return SingleQubitState({1, 0, 0});
    if (token == "-") return SingleQubitState({-1, 0, 0});
    if (token == "+i") return SingleQubitState({0, 1, 0});
    if (token == "-i") return SingleQubitState({0, -1, 0});
    if (token == "T" || token == "t") return SingleQubitState({h, h, 0});
    throw ParseError("unknown state token '" + std::string(token) + "'");
  }

  static SingleQubitState zero() { return from_token("0"); }
  static SingleQubitState magic() { return from_token("T"); }

  const std::array<double, 3>& bloch() const { return r_; }

  /// Tr[|psi><psi| P]; 1 for the identity.
  double expectation(PauliAxis a) const {
    switch (a) {
      case PauliAxis::X: return r_[0];
      case PauliAxis::Y: return r_[1];
      case PauliAxis::Z: return r_[2];
      default: return 1.0;
    }
  }

  /// Polar angles (theta, phi) of the Bloch vector.
  std::pair<double, double> angles() const {
    return {std::acos(std::clamp(r_[2], -1.0, 1.0)), std::atan2(r_[1], r_[0])};
  }

 private:
  explicit SingleQubitState(std::array<double, 3> r) : r_(r) {}
  std::array<double, 3> r_;
};

/// Pauli coefficients of |psi><psi| = sum_P chi(P) P, i.e. chi(P) = Tr[|psi><psi| P] / 2,
/// together with the l1 weight of the non-identity part.
struct ChiTable {
  std::array<double, 4> values{};  // indexed by PauliAxis
  double w = 0;

  double operator[](PauliAxis a) const { return values[static_cast<int>(a)]; }
};

inline ChiTable chi(const SingleQubitState& state) {
  ChiTable t;
  t.values[static_cast<int>(PauliAxis::I)] = 0.5;
  for (PauliAxis a : {PauliAxis::X, PauliAxis::Y, PauliAxis::Z}) {
    t.values[static_cast<int>(a)] = state.expectation(a) / 2;
    t.w += std::abs(state.expectation(a)) / 2;
  }
  return t;
}

/// The six Pauli eigenstates are exactly the states with chi weight 1/2.
inline bool is_stabilizer_state(const SingleQubitState& state, double tol = 1e-9) {
  return std::abs(chi(state).w - 0.5) <= tol;
}

/// C (psi_0 (x) ... (x) psi_{n-1}) with C a known Clifford circuit.
class CpsTarget {
 public:
  CpsTarget(std::vector<SingleQubitState> states, CliffordCircuit circuit)
      : states_(std::move(states)), circuit_(std::move(circuit)) {
    if (circuit_.width != states_.size()) {
      throw DimensionError("target has " + std::to_string(states_.size()) + " states but the circuit has width " +
                           std::to_string(circuit_.width));
    }
    circuit_.validate();
    tableau_ = tableau_from_circuit(circuit_);
    inverse_tableau_ = tableau_.inverse();
  }

  std::size_t n() const { return states_.size(); }
  const std::vector<SingleQubitState>& states() const { return states_; }
  const SingleQubitState& state(std::size_t i) const { return states_.at(i); }
  const CliffordCircuit& circuit() const { return circuit_; }
  const CliffordTableau& tableau() const { return tableau_; }
  const CliffordTableau& inverse_tableau() const { return inverse_tableau_; }

 private:
  std::vector<SingleQubitState> states_;
  CliffordCircuit circuit_;
  CliffordTableau tableau_;
  CliffordTableau inverse_tableau_;
};

enum class SamplingMode { exclude_identity, include_identity };

inline std::string_view mode_name(SamplingMode m) {
  return m == SamplingMode::exclude_identity ? "exclude" : "include";
}

inline SamplingMode parse_mode(std::string_view s) {
  if (s == "exclude" || s == "exclude_identity") return SamplingMode::exclude_identity;
  if (s == "include" || s == "include_identity") return SamplingMode::include_identity;
  throw ParseError("unknown sampling mode '" + std::string(s) + "' (expected exclude|include)");
}

/// One measurement setting: single-qubit axis on qubit `qubit`, with sign(chi).
struct Setting {
  std::size_t qubit;
  PauliAxis axis;
  int sign;

  friend bool operator==(const Setting&, const Setting&) = default;
};

/// Joint distribution D(i, P) = |chi_i(P)| / m_eff over settings.
class SamplingPlan {
 public:
  struct Entry {
    std::size_t qubit;
    PauliAxis axis;
    double probability;  // D(i, P)
    int sign;
  };

  SamplingPlan(const CpsTarget& target, SamplingMode mode) : mode_(mode), n_(target.n()) {
    if (n_ == 0) throw DimensionError("sampling plan needs at least one qubit");
    weights_.resize(n_);
    axis_begin_.resize(n_ + 1);
    for (std::size_t i = 0; i < n_; ++i) {
      const ChiTable t = chi(target.state(i));
      weights_[i] = t.w;
      m_ += t.w;
    }
    big_m_ = 0.5 * static_cast<double>(n_) + m_;
    m_eff_ = mode == SamplingMode::exclude_identity ? m_ : big_m_;
    if (!(m_ > 0)) throw ValidationError("sampling plan has zero total weight");

    double acc = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      const ChiTable t = chi(target.state(i));
      axis_begin_[i] = entries_.size();
      double qubit_mass = 0;
      for (PauliAxis a : kAllAxes) {
        if (a == PauliAxis::I && mode == SamplingMode::exclude_identity) continue;
        const double c = t[a];
        if (std::abs(c) < kSupportCutoff) continue;
        entries_.push_back({i, a, std::abs(c) / m_eff_, c > 0 ? +1 : -1});
        qubit_mass += std::abs(c);
      }
      if (entries_.size() == axis_begin_[i]) throw ValidationError("qubit " + std::to_string(i) + " has no support");
      // Conditional cdf of the axis given the qubit.
      double cum = 0;
      for (std::size_t e = axis_begin_[i]; e < entries_.size(); ++e) {
        cum += std::abs(t[entries_[e].axis]) / qubit_mass;
        axis_cdf_.push_back(cum);
      }
      axis_cdf_.back() = 1.0;
      acc += qubit_mass / m_eff_;
      qubit_cdf_.push_back(acc);
    }
    axis_begin_[n_] = entries_.size();
    qubit_cdf_.back() = 1.0;
  }

  SamplingMode mode() const { return mode_; }
  std::size_t n() const { return n_; }

  /// Per-qubit chi weight w_i (identity excluded, independent of mode).
  double weight(std::size_t i) const { return weights_.at(i); }
  /// m = sum_i w_i.
  double m() const { return m_; }
  /// M = n/2 + m.
  double big_m() const { return big_m_; }
  /// Normalizer of D: m in exclude mode, M in include mode.
  double m_eff() const { return m_eff_; }

  /// Marginal probability of picking qubit i.
  double mu(std::size_t i) const {
    const double lo = i == 0 ? 0.0 : qubit_cdf_.at(i - 1);
    return qubit_cdf_.at(i) - lo;
  }

  /// D(i, P); zero off the support.
  double probability(std::size_t i, PauliAxis a) const {
    for (std::size_t e = axis_begin_.at(i); e < axis_begin_.at(i + 1); ++e) {
      if (entries_[e].axis == a) return entries_[e].probability;
    }
    return 0.0;
  }

  const std::vector<Entry>& support() const { return entries_; }

  /// Affine map from the mean signed outcome to the witness estimate.
  double witness_from_mean(double x_bar) const {
    const double n = static_cast<double>(n_);
    return mode_ == SamplingMode::exclude_identity ? 1.0 - n / 2 + m_ * x_bar : 1.0 - n + big_m_ * x_bar;
  }

  /// Draws (i, P) ~ D: qubit from mu, then axis from D_{psi_i}.
  Setting sample(Rng& rng) const { return setting(sample_index(rng)); }

  /// Index into support() of a fresh draw.
  std::size_t sample_index(Rng& rng) const {
    const double u = rng.uniform();
    std::size_t i = static_cast<std::size_t>(std::upper_bound(qubit_cdf_.begin(), qubit_cdf_.end(), u) -
                                             qubit_cdf_.begin());
    i = std::min(i, n_ - 1);
    const double v = rng.uniform();
    const std::size_t lo = axis_begin_[i], hi = axis_begin_[i + 1];
    for (std::size_t e = lo; e + 1 < hi; ++e) {
      if (v < axis_cdf_[e]) return e;
    }
    return hi - 1;
  }

  Setting setting(std::size_t index) const {
    const Entry& e = entries_.at(index);
    return {e.qubit, e.axis, e.sign};
  }

 private:
  SamplingMode mode_;
  std::size_t n_;
  std::vector<double> weights_;
  double m_ = 0, big_m_ = 0, m_eff_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::size_t> axis_begin_;  // entries of qubit i: [axis_begin_[i], axis_begin_[i+1])
  std::vector<double> axis_cdf_;         // parallel to entries_, conditional on the qubit
  std::vector<double> qubit_cdf_;
};

inline SamplingPlan build_plan(const CpsTarget& target, SamplingMode mode) { return SamplingPlan(target, mode); }

inline Setting sample_setting(const SamplingPlan& plan, Rng& rng) { return plan.sample(rng); }

/// C P^(i) C^dagger.
inline PauliString backprop_observable(const CpsTarget& target, const Setting& s) {
  return target.tableau().conjugate(embed_single(s.axis, s.qubit, target.n()));
}

namespace detail {

inline double parse_real(std::string_view tok, std::size_t line) {
  // std::from_chars for double is available in libstdc++ 11.
  double v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("expected a number, got '" + std::string(tok) + "'", line);
  }
  return v;
}

}  // namespace detail

/// State-spec text: one qubit per line, `0 | 1 | + | - | +i | -i | T`,
/// `bloch rx ry rz`, or `angles theta phi`. `#` starts a comment.
inline std::vector<SingleQubitState> parse_state_spec(std::string_view text) {
  std::vector<SingleQubitState> out;
  for (const auto& line : detail::tokenize_circuit(text)) {
    try {
      if (line.mnemonic == "BLOCH") {
        if (line.args.size() != 3) throw ParseError("bloch takes three components", line.number);
        out.push_back(SingleQubitState::from_bloch(detail::parse_real(line.args[0], line.number),
                                                   detail::parse_real(line.args[1], line.number),
                                                   detail::parse_real(line.args[2], line.number)));
      } else if (line.mnemonic == "ANGLES") {
        if (line.args.size() != 2) throw ParseError("angles takes theta and phi", line.number);
        out.push_back(SingleQubitState::from_angles(detail::parse_real(line.args[0], line.number),
                                                    detail::parse_real(line.args[1], line.number)));
      } else {
        if (!line.args.empty()) throw ParseError("unexpected tokens after state", line.number);
        std::string token = line.mnemonic;
        if (token == "+I") token = "+i";
        if (token == "-I") token = "-i";
        out.push_back(SingleQubitState::from_token(token));
      }
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(e.what(), line.number);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line.number);
    }
  }
  return out;
}

}  // namespace cpsverify
