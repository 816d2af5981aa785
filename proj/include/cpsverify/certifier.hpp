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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cpsverify/errors.hpp"
#include "cpsverify/pauli.hpp"
#include "cpsverify/prover.hpp"
#include "cpsverify/random.hpp"
#include "cpsverify/target.hpp"

namespace cpsverify {

struct CertConfig {
  double epsilon = 0.1;
  double delta = 0.05;
  unsigned k = 3;
  SamplingMode mode = SamplingMode::exclude_identity;
  std::uint64_t seed = 0;
  /// Number of copies to measure; sample_size_iid when unset.
  std::optional<std::uint64_t> samples;

  /// Accept iff the witness estimate is at least this.
  double threshold() const { return 1.0 - (1.0 - 1.0 / k) * epsilon; }
  /// Hoeffding slack used to size the sample.
  double lambda() const { return epsilon / k; }

  void validate() const {
    if (!(epsilon > 0)) throw ValidationError("epsilon must be positive");
    if (!(delta > 0 && delta < 1)) throw ValidationError("delta must lie in (0, 1)");
    if (k < 3) throw ValidationError("k must be at least 3");
    if (samples && *samples == 0) throw ValidationError("sample count must be positive");
  }

  friend bool operator==(const CertConfig&, const CertConfig&) = default;
};

struct SettingTally {
  std::size_t qubit;
  PauliAxis axis;
  std::uint64_t count = 0;
  std::int64_t signed_sum = 0;  // sum of sgn(chi) * outcome
};

struct CertResult {
  std::size_t n = 0;
  SamplingMode mode = SamplingMode::exclude_identity;
  double epsilon = 0, delta = 0;
  unsigned k = 3;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;  // N used
  double x_bar = 0;
  double w_bar = 0;
  double threshold = 0;
  bool accept = false;
  std::vector<SettingTally> tallies;  // one per support entry of the plan
};

/// Two-sided Hoeffding tail 2 exp(-N lambda^2 / (2 m_eff^2)) for |W_bar - W| >= lambda.
inline double hoeffding_tail(std::uint64_t samples, double lambda, double m_eff) {
  return 2.0 * std::exp(-static_cast<double>(samples) * lambda * lambda / (2.0 * m_eff * m_eff));
}

/// ceil(2 m_eff^2 (k/eps)^2 ln(2/delta)).
inline std::uint64_t sample_size_iid(const SamplingPlan& plan, const CertConfig& cfg) {
  cfg.validate();
  if (plan.mode() != cfg.mode) throw ValidationError("sampling plan and config use different modes");
  const long double m = plan.m_eff();
  const long double ratio = static_cast<long double>(cfg.k) / cfg.epsilon;
  const long double n = 2.0L * m * m * ratio * ratio * std::log(2.0L / cfg.delta);
  return static_cast<std::uint64_t>(std::ceil(n - 1e-9L));
}

/// ceil(c n ln 2 / (delta^2 eps^2) * N_iid^2 * ln^2(N_iid / delta)).
inline std::uint64_t sample_size_noniid(std::uint64_t n_iid, std::size_t n, const CertConfig& cfg,
                                        double c_noniid = 1.0) {
  cfg.validate();
  if (n_iid == 0) throw ValidationError("N_iid must be at least 1");
  if (!(c_noniid > 0)) throw ValidationError("non-i.i.d. constant must be positive");
  const long double log_d = static_cast<long double>(n) * std::log(2.0L);
  const long double e = cfg.epsilon, d = cfg.delta, niid = static_cast<long double>(n_iid);
  const long double lg = std::log(niid / d);
  const long double value = c_noniid * log_d / (d * d * e * e) * niid * niid * lg * lg;
  if (value >= static_cast<long double>(std::numeric_limits<std::uint64_t>::max())) {
    throw ValidationError("non-i.i.d. sample size overflows 64 bits");
  }
  return static_cast<std::uint64_t>(std::ceil(value));
}

/// Exact E[W_bar] for a source whose single-copy Pauli expectations are given:
/// the sampled mean is averaged over D analytically, with no sampling noise.
inline double expected_witness(const CpsTarget& target, const SamplingPlan& plan,
                               const std::function<double(const PauliString&)>& expectation) {
  double x = 0;
  for (const auto& e : plan.support()) {
    x += e.probability * e.sign * expectation(backprop_observable(target, {e.qubit, e.axis, e.sign}));
  }
  return plan.witness_from_mean(x);
}

namespace detail {

/// Shared certification loop. `measure(j, observable)` returns the +-1 outcome of round j.
template <typename MeasureRound>
CertResult run_certification(const CpsTarget& target, const SamplingPlan& plan, const CertConfig& cfg,
                             std::uint64_t rounds, Rng& rng, MeasureRound&& measure) {
  std::vector<PauliString> observables;
  CertResult r;
  r.n = target.n();
  r.mode = plan.mode();
  r.epsilon = cfg.epsilon;
  r.delta = cfg.delta;
  r.k = cfg.k;
  r.seed = cfg.seed;
  r.samples = rounds;
  r.threshold = cfg.threshold();
  for (const auto& e : plan.support()) {
    observables.push_back(backprop_observable(target, {e.qubit, e.axis, e.sign}));
    r.tallies.push_back({e.qubit, e.axis});
  }
  std::int64_t total = 0;
  for (std::uint64_t j = 0; j < rounds; ++j) {
    const std::size_t idx = plan.sample_index(rng);
    const int x = measure(j, observables[idx]);
    const int f = plan.support()[idx].sign * x;
    total += f;
    r.tallies[idx].count += 1;
    r.tallies[idx].signed_sum += f;
  }
  r.x_bar = static_cast<double>(total) / static_cast<double>(rounds);
  r.w_bar = plan.witness_from_mean(r.x_bar);
  r.accept = r.w_bar >= r.threshold;
  return r;
}

inline void check_plan(const CpsTarget& target, const SamplingPlan& plan, const CertConfig& cfg) {
  cfg.validate();
  if (plan.n() != target.n()) throw DimensionError("plan and target widths differ");
  if (plan.mode() != cfg.mode) throw ValidationError("sampling plan and config use different modes");
}

}  // namespace detail

/// i.i.d. certification: measure one back-propagated single-qubit Pauli per copy and
/// threshold the witness estimate.
inline CertResult certify_iid(const CpsTarget& target, const SamplingPlan& plan, MeasurementSession& session,
                              const CertConfig& cfg, Rng& rng) {
  detail::check_plan(target, plan, cfg);
  if (session.mode() != SessionMode::single_shot) throw SessionError("certification needs a single-shot session");
  if (session.width() != target.n()) throw DimensionError("session and target widths differ");
  const std::uint64_t rounds = cfg.samples.value_or(sample_size_iid(plan, cfg));
  if (session.copies() - session.consumed() < rounds) {
    throw SessionError("session offers " + std::to_string(session.copies() - session.consumed()) +
                       " copies, certification needs " + std::to_string(rounds));
  }
  return detail::run_certification(target, plan, cfg, rounds, rng, [&](std::uint64_t, const PauliString& q) {
    session.next_copy();
    return session.measure(q);
  });
}

struct VerifyConfig {
  CertConfig cert;
  std::uint64_t n1 = 0;  // copies received
  std::uint64_t n2 = 0;  // test-set size
  double c_noniid = 1.0;

  void validate(const SamplingPlan& plan) const {
    cert.validate();
    if (n1 <= n2) throw ValidationError("need N1 > N2");
    if (n2 < sample_size_iid(plan, cert)) {
      throw ValidationError("test set N2 = " + std::to_string(n2) + " is below N_iid = " +
                            std::to_string(sample_size_iid(plan, cert)));
    }
    if (!(c_noniid > 0)) throw ValidationError("c_noniid must be positive");
  }

  std::uint64_t discard_size() const { return n1 - n2 - 1; }
};

struct Partition {
  std::vector<std::uint64_t> test;
  std::uint64_t keep = 0;
};

/// Test/discard/keep split of {0..n1-1} read off a uniform permutation drawn by
/// forward Fisher-Yates: positions [0, n2) are the test set and position n2 is
/// kept. Only the first n2 + 1 positions are materialized (sparse swaps), so
/// memory is O(n2) regardless of n1.
inline Partition random_partition(std::uint64_t n1, std::uint64_t n2, Rng& rng) {
  if (n1 <= n2) throw ValidationError("need N1 > N2");
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;
  auto at = [&](std::uint64_t i) {
    const auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  Partition p;
  p.test.reserve(n2);
  for (std::uint64_t i = 0; i <= n2; ++i) {
    const std::uint64_t j = i + rng.below(n1 - i);
    const std::uint64_t vi = at(i), vj = at(j);
    swapped[j] = vi;
    swapped[i] = vj;
    if (i < n2) {
      p.test.push_back(vj);
    } else {
      p.keep = vj;
    }
  }
  return p;
}

struct VerifyResult {
  CertResult cert;
  Partition partition;
  KeptRegister kept;
};

/// Non-i.i.d. verification: random partition, certification on the test set, one kept copy.
inline VerifyResult verify_noniid(const CpsTarget& target, const SamplingPlan& plan, MeasurementSession& session,
                                  const VerifyConfig& vcfg, Rng& rng) {
  detail::check_plan(target, plan, vcfg.cert);
  vcfg.validate(plan);
  if (session.copies() < vcfg.n1) throw SessionError("session exposes fewer than N1 copies");
  if (session.width() != target.n()) throw DimensionError("session and target widths differ");
  Partition part = random_partition(vcfg.n1, vcfg.n2, rng);
  CertResult cert = detail::run_certification(target, plan, vcfg.cert, vcfg.n2, rng,
                                              [&](std::uint64_t j, const PauliString& q) {
                                                return session.measure_copy(part.test[j], q);
                                              });
  KeptRegister kept = session.keep_copy(part.keep);
  return {std::move(cert), std::move(part), std::move(kept)};
}

}  // namespace cpsverify
