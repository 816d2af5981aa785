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
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "cpsverify/channel.hpp"
#include "cpsverify/dense.hpp"
#include "cpsverify/errors.hpp"
#include "cpsverify/pauli.hpp"
#include "cpsverify/random.hpp"
#include "cpsverify/target.hpp"

namespace cpsverify {

/// Independent copies of Lambda_post(C (x)_j Lambda_j(psi_j) C^dagger), where
/// Lambda_j are the single-qubit `pre_channels` (applied in list order) and
/// Lambda_post is a Pauli channel acting after the Clifford.
struct HonestIid {
  std::shared_ptr<const CpsTarget> target;
  std::vector<Channel> pre_channels;
  PauliChannel post_pauli;
};

/// Shared classical randomness: one strategy is drawn per session and then
/// governs every copy of that session.
struct CorrelatedClassical {
  std::vector<std::pair<double, HonestIid>> strategies;
};

/// Every copy is the given dense state.
struct FixedAlternative {
  dense::DenseDensity rho;
};

using ProverSpec = std::variant<HonestIid, CorrelatedClassical, FixedAlternative>;

inline void validate_prover(const HonestIid& h) {
  if (!h.target) throw ValidationError("honest prover has no target");
  const std::size_t n = h.target->n();
  for (const auto& ch : h.pre_channels) {
    if (!is_single_qubit(ch)) throw ValidationError("pre-Clifford channels must be single-qubit");
    validate_channel(ch, n);
  }
  validate_channel(Channel{h.post_pauli}, n);
}

inline void validate_prover(const ProverSpec& spec) {
  if (const auto* h = std::get_if<HonestIid>(&spec)) {
    validate_prover(*h);
  } else if (const auto* c = std::get_if<CorrelatedClassical>(&spec)) {
    if (c->strategies.empty()) throw ValidationError("correlated prover has no strategies");
    double total = 0;
    for (const auto& [prob, s] : c->strategies) {
      if (!(prob >= 0 && prob <= 1)) throw ValidationError("strategy probability outside [0, 1]");
      validate_prover(s);
      if (s.target->n() != c->strategies.front().second.target->n()) {
        throw DimensionError("correlated strategies have different widths");
      }
      total += prob;
    }
    if (std::abs(total - 1) > 1e-9) throw ValidationError("strategy probabilities must sum to 1");
  } else {
    const auto& f = std::get<FixedAlternative>(spec);
    dense::qubits_of(f.rho.rows());
    if (f.rho.rows() != f.rho.cols()) throw DimensionError("fixed prover density is not square");
  }
}

inline std::size_t prover_width(const ProverSpec& spec) {
  if (const auto* h = std::get_if<HonestIid>(&spec)) return h->target->n();
  if (const auto* c = std::get_if<CorrelatedClassical>(&spec)) return c->strategies.front().second.target->n();
  return dense::qubits_of(std::get<FixedAlternative>(spec).rho.rows());
}

/// Bloch vectors of Lambda_j(psi_j) for every qubit.
inline std::vector<std::array<double, 3>> noisy_bloch_vectors(const HonestIid& spec) {
  std::vector<BlochMap> maps(spec.target->n());
  for (const auto& ch : spec.pre_channels) {
    const std::size_t q = channel_qubit(ch);
    maps.at(q) = maps[q].then(bloch_map(ch));
  }
  std::vector<std::array<double, 3>> out;
  out.reserve(maps.size());
  for (std::size_t j = 0; j < maps.size(); ++j) out.push_back(maps[j](spec.target->state(j).bloch()));
  return out;
}

/// Honest prover with the per-qubit noise folded into Bloch vectors, for
/// repeated expectation queries.
class CompiledHonest {
 public:
  explicit CompiledHonest(const HonestIid& spec) : spec_(spec), bloch_(noisy_bloch_vectors(spec)) {
    validate_prover(spec_);
  }

  const HonestIid& spec() const { return spec_; }

  /// Tr[rho q] by back-propagation: P' = C^dagger q C, evaluated on the
  /// product of noisy single-qubit states, times the post-Clifford Pauli-noise
  /// factor 1 - 2 sum_{k: P_k anticommutes with q} p_k.
  double expectation(const PauliString& q) const {
    const PauliString back = spec_.target->inverse_tableau().conjugate(q);
    double value = back.sign();
    for (std::size_t w = 0; w < back.x_words().size() && value != 0; ++w) {
      std::uint64_t bits = back.x_words()[w] | back.z_words()[w];
      while (bits != 0) {
        const std::size_t j = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
        bits &= bits - 1;
        const auto& r = bloch_[j];
        switch (back.axis(j)) {
          case PauliAxis::X: value *= r[0]; break;
          case PauliAxis::Y: value *= r[1]; break;
          case PauliAxis::Z: value *= r[2]; break;
          default: break;
        }
      }
    }
    double anti = 0;
    for (const auto& [p, prob] : spec_.post_pauli.terms) {
      if (!p.commutes(q)) anti += prob;
    }
    return value * (1 - 2 * anti);
  }

 private:
  HonestIid spec_;
  std::vector<std::array<double, 3>> bloch_;
};

inline double honest_expectation(const HonestIid& spec, const PauliString& q) {
  if (q.size() != spec.target->n()) throw DimensionError("honest_expectation: width mismatch");
  return CompiledHonest(spec).expectation(q);
}

/// Dense per-copy state of an honest prover, built with Kraus operators (independent of
/// the Bloch-vector fast path).
inline dense::DenseDensity honest_density(const HonestIid& spec) {
  validate_prover(spec);
  dense::check_width(spec.target->n());
  dense::DenseDensity rho = dense::density_of(dense::product_state(spec.target->states()));
  for (const auto& ch : spec.pre_channels) dense::apply_channel(rho, ch);
  dense::conjugate_density(rho, [&](dense::DenseDensity& m) { dense::apply_circuit(m, spec.target->circuit()); });
  dense::apply_channel(rho, Channel{spec.post_pauli});
  return rho;
}

/// Single-copy marginal state (mixture over strategies for correlated provers).
inline dense::DenseDensity prover_density(const ProverSpec& spec) {
  if (const auto* h = std::get_if<HonestIid>(&spec)) return honest_density(*h);
  if (const auto* c = std::get_if<CorrelatedClassical>(&spec)) {
    dense::DenseDensity rho;
    for (const auto& [prob, s] : c->strategies) {
      dense::DenseDensity part = prob * honest_density(s);
      rho = rho.size() == 0 ? part : dense::DenseDensity(rho + part);
    }
    return rho;
  }
  return std::get<FixedAlternative>(spec).rho;
}

enum class SessionMode { single_shot, adaptive };

/// One copy held as a dense state; measurements collapse it. A mixed copy is
/// unravelled into one of its eigenvectors at the first measurement, so every
/// later step is a pure-state update.
class KeptRegister {
 public:
  KeptRegister(dense::DenseDensity rho, std::uint64_t seed)
      : source_(std::make_shared<Source>(Source{std::move(rho), std::nullopt})), rng_(seed) {}

  std::size_t width() const { return dense::qubits_of(source_->rho.rows()); }

  /// Current state (the prepared copy before any measurement).
  dense::DenseDensity state() const { return psi_ ? dense::density_of(*psi_) : source_->rho; }

  int measure(const PauliString& q) {
    if (!psi_) {
      if (!source_->ensemble) source_->ensemble = dense::decompose(source_->rho);
      psi_ = source_->ensemble->draw(rng_);
    }
    auto [outcome, post] = dense::measure_pauli(*psi_, q, rng_);
    psi_ = std::move(post);
    return outcome;
  }

  /// Copy of the current state with an independent measurement stream. Forks
  /// share the eigendecomposition of the prepared copy.
  KeptRegister fork(std::uint64_t seed) const {
    KeptRegister r = *this;
    r.rng_ = Rng(seed);
    return r;
  }

 private:
  struct Source {
    dense::DenseDensity rho;
    std::optional<dense::PureEnsemble> ensemble;
  };

  std::shared_ptr<Source> source_;
  std::optional<dense::DenseState> psi_;
  Rng rng_;
};

/// Receive-and-measure view of a prover's N copies.
///
/// Single-shot mode: each copy is measured at most once and outcomes are drawn
/// from the exact expectation (fast back-propagation path for honest strategies).
/// Adaptive mode: the current copy is materialized densely and every
/// measurement collapses it.
class MeasurementSession {
 public:
  MeasurementSession(ProverSpec spec, std::uint64_t n_copies, std::uint64_t seed,
                     SessionMode mode = SessionMode::single_shot)
      : spec_(std::move(spec)), copies_(n_copies), mode_(mode), rng_(seed) {
    if (n_copies == 0) throw ValidationError("a session needs at least one copy");
    validate_prover(spec_);
    width_ = prover_width(spec_);
    if (const auto* h = std::get_if<HonestIid>(&spec_)) {
      honest_.emplace(*h);
    } else if (const auto* c = std::get_if<CorrelatedClassical>(&spec_)) {
      // Drawn once: this is the shared randomness correlating all copies.
      const double u = rng_.uniform();
      double acc = 0;
      strategy_ = c->strategies.size() - 1;
      for (std::size_t s = 0; s < c->strategies.size(); ++s) {
        acc += c->strategies[s].first;
        if (u < acc) {
          strategy_ = s;
          break;
        }
      }
      honest_.emplace(c->strategies[*strategy_].second);
    }
    if (mode_ == SessionMode::adaptive) dense::check_width(width_);
  }

  std::size_t width() const { return width_; }
  std::uint64_t copies() const { return copies_; }
  SessionMode mode() const { return mode_; }
  std::uint64_t consumed() const { return used_.size(); }

  /// Index of the strategy drawn by a correlated prover.
  std::optional<std::size_t> strategy() const { return strategy_; }

  /// Advances to the next copy in arrival order.
  void next_copy() {
    const std::uint64_t next = cursor_ ? *cursor_ + 1 : 0;
    if (next >= copies_) throw SessionError("all " + std::to_string(copies_) + " copies have been used");
    cursor_ = next;
    current_measured_ = false;
    if (mode_ == SessionMode::adaptive) {
      used_.insert(next);
      if (!adaptive_template_) adaptive_template_.emplace(copy_density(), 0);
      current_ = adaptive_template_->fork(rng_.next());
    }
  }

  /// Measures the current copy.
  int measure(const PauliString& q) {
    if (!cursor_) throw SessionError("measure called before next_copy");
    if (mode_ == SessionMode::adaptive) {
      check_width(q);
      return current_->measure(q);
    }
    if (current_measured_) throw SessionError("copy " + std::to_string(*cursor_) + " was already measured");
    current_measured_ = true;
    return measure_copy(*cursor_, q);
  }

  /// Single-shot measurement of an arbitrary unused copy.
  int measure_copy(std::uint64_t index, const PauliString& q) {
    if (mode_ != SessionMode::single_shot) throw SessionError("measure_copy requires a single-shot session");
    claim(index);
    return rng_.sign_with_mean(copy_expectation(q));
  }

  /// Hands out an unused copy for adaptive measurement.
  KeptRegister keep_copy(std::uint64_t index) {
    claim(index);
    if (!adaptive_template_) adaptive_template_.emplace(copy_density(), 0);
    return adaptive_template_->fork(rng_.next());
  }

  /// Exact mean of a +-1 outcome on one copy (given the drawn strategy).
  double copy_expectation(const PauliString& q) const {
    check_width(q);
    if (!q.is_hermitian()) throw ValidationError("observable '" + q.str() + "' is not Hermitian");
    if (honest_) return honest_->expectation(q);
    return dense::expectation(std::get<FixedAlternative>(spec_).rho, q);
  }

  /// Dense state of one copy (given the drawn strategy).
  const dense::DenseDensity& copy_density() const {
    if (!density_) {
      density_ = honest_ ? honest_density(honest_->spec()) : std::get<FixedAlternative>(spec_).rho;
    }
    return *density_;
  }

 private:
  void check_width(const PauliString& q) const {
    if (q.size() != width_) {
      throw DimensionError("observable has " + std::to_string(q.size()) + " qubits, session has " +
                           std::to_string(width_));
    }
  }

  void claim(std::uint64_t index) {
    if (index >= copies_) throw SessionError("copy index " + std::to_string(index) + " out of range");
    if (!used_.insert(index).second) throw SessionError("copy " + std::to_string(index) + " was already used");
  }

  ProverSpec spec_;
  std::uint64_t copies_;
  SessionMode mode_;
  Rng rng_;
  std::size_t width_ = 0;
  std::optional<std::size_t> strategy_;
  std::optional<CompiledHonest> honest_;
  mutable std::optional<dense::DenseDensity> density_;
  std::optional<std::uint64_t> cursor_;
  bool current_measured_ = false;
  std::optional<KeptRegister> current_;
  std::optional<KeptRegister> adaptive_template_;
  std::unordered_set<std::uint64_t> used_;
};

inline MeasurementSession open_session(const ProverSpec& spec, std::uint64_t n_copies, Rng& rng,
                                       SessionMode mode = SessionMode::single_shot) {
  return MeasurementSession(spec, n_copies, rng.next(), mode);
}

}  // namespace cpsverify
