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

#include "cpsverify/certifier.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace cpsverify;

namespace {

std::shared_ptr<const CpsTarget> make_target(std::vector<SingleQubitState> s, CliffordCircuit c) {
  return std::make_shared<const CpsTarget>(std::move(s), std::move(c));
}

std::shared_ptr<const CpsTarget> magic_target(std::size_t n, Rng& rng) {
  return make_target(std::vector<SingleQubitState>(n, SingleQubitState::magic()), random_circuit(n, 4 * n, rng));
}

CertConfig config(double eps, double delta, SamplingMode mode = SamplingMode::exclude_identity) {
  CertConfig c;
  c.epsilon = eps;
  c.delta = delta;
  c.mode = mode;
  return c;
}

HonestIid depolarized(std::shared_ptr<const CpsTarget> t, double p) {
  HonestIid h{t, {}, {}};
  for (std::size_t q = 0; q < t->n(); ++q) h.pre_channels.push_back(Depolarizing{p, q});
  return h;
}

}  // namespace

TEST(Config, ThresholdAndValidation) {
  CertConfig c = config(0.3, 0.1);
  EXPECT_NEAR(c.threshold(), 0.8, 1e-15);
  EXPECT_NEAR(c.lambda(), 0.1, 1e-15);
  c.k = 5;
  EXPECT_NEAR(c.threshold(), 1 - 0.8 * 0.3, 1e-15);
  c.k = 2;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_THROW(config(0, 0.1).validate(), ValidationError);
  EXPECT_THROW(config(0.1, 1).validate(), ValidationError);
}

TEST(SampleSize, SingleZeroQubitIs150) {
  const CpsTarget t({SingleQubitState::zero()}, {1, {}});
  EXPECT_EQ(sample_size_iid(build_plan(t, SamplingMode::exclude_identity), config(0.3, 0.1)), 150u);
  // include mode: M = 1.
  EXPECT_EQ(sample_size_iid(build_plan(t, SamplingMode::include_identity),
                            config(0.3, 0.1, SamplingMode::include_identity)),
            static_cast<std::uint64_t>(std::ceil(2 * 1.0 * 100 * std::log(20.0))));
  EXPECT_THROW(sample_size_iid(build_plan(t, SamplingMode::include_identity), config(0.3, 0.1)), ValidationError);
}

TEST(SampleSize, QuadraticInWidthForMagicTargets) {
  Rng rng(1);
  std::vector<double> sizes;
  for (std::size_t n : {2, 4, 8}) {
    const auto t = magic_target(n, rng);
    sizes.push_back(static_cast<double>(sample_size_iid(build_plan(*t, SamplingMode::exclude_identity), config(0.1, 0.05))));
  }
  EXPECT_NEAR(sizes[1] / sizes[0], 4.0, 1e-3);
  EXPECT_NEAR(sizes[2] / sizes[1], 4.0, 1e-3);
}

TEST(SampleSize, LogarithmicInDelta) {
  Rng rng(2);
  const auto t = magic_target(6, rng);
  const SamplingPlan p = build_plan(*t, SamplingMode::exclude_identity);
  const double delta = 0.05;
  const double a = static_cast<double>(sample_size_iid(p, config(0.05, delta)));
  const double b = static_cast<double>(sample_size_iid(p, config(0.05, delta / std::exp(1.0))));
  EXPECT_NEAR(b / a, std::log(2 * std::exp(1.0) / delta) / std::log(2 / delta), 1e-4);
}

TEST(SampleSize, NonIidFormula) {
  // value from an independent evaluation of the closed form: 926793101.0076...
  EXPECT_EQ(sample_size_noniid(150, 1, config(0.3, 0.1)), 926793102u);
  const double one = static_cast<double>(sample_size_noniid(1000, 3, config(0.3, 0.1)));
  const double two = static_cast<double>(sample_size_noniid(2000, 3, config(0.3, 0.1)));
  const double logs = std::pow(std::log(2000 / 0.1) / std::log(1000 / 0.1), 2);
  EXPECT_NEAR(two / one, 4 * logs, 1e-6);
  EXPECT_EQ(sample_size_noniid(150, 1, config(0.3, 0.1), 2.0), 2u * 926793101u + 1u);
  EXPECT_THROW(sample_size_noniid(0, 1, config(0.3, 0.1)), ValidationError);
  EXPECT_THROW(sample_size_noniid(1u << 30, 60, config(0.01, 0.001)), ValidationError);
}

TEST(Certify, PerfectProverAlwaysAccepts) {
  Rng rng(3);
  for (SamplingMode mode : {SamplingMode::exclude_identity, SamplingMode::include_identity}) {
    const auto t = magic_target(3, rng);
    const SamplingPlan plan = build_plan(*t, mode);
    const CertConfig cfg = config(0.3, 0.1, mode);
    for (int run = 0; run < 20; ++run) {
      MeasurementSession s = open_session(HonestIid{t, {}, {}}, sample_size_iid(plan, cfg), rng);
      const CertResult r = certify_iid(*t, plan, s, cfg, rng);
      EXPECT_TRUE(r.accept);
      EXPECT_EQ(r.samples, sample_size_iid(plan, cfg));
      EXPECT_DOUBLE_EQ(r.w_bar, plan.witness_from_mean(r.x_bar));
      std::uint64_t total = 0;
      for (const auto& tally : r.tallies) total += tally.count;
      EXPECT_EQ(total, r.samples);
    }
  }
}

TEST(Certify, ExpectedWitnessEqualsExactWitnessInBothModes) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    std::vector<SingleQubitState> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(SingleQubitState::from_angles(3 * rng.uniform(), 6 * rng.uniform()));
    const auto t = make_target(s, random_circuit(n, 10, rng));
    HonestIid h = depolarized(t, 0.2 * rng.uniform());
    h.pre_channels.push_back(AmplitudeDamping{0.3, 0});
    h.post_pauli.terms = {{embed_single(PauliAxis::Y, n - 1, n), 0.05}};
    const double exact = dense::exact_witness(honest_density(h), *t);
    const CompiledHonest ch(h);
    for (SamplingMode mode : {SamplingMode::exclude_identity, SamplingMode::include_identity}) {
      const double e = expected_witness(*t, build_plan(*t, mode), [&](const PauliString& q) { return ch.expectation(q); });
      EXPECT_NEAR(e, exact, 1e-9);
    }
  }
}

TEST(Certify, DepolarizedMeanIsNinetyPercent) {
  Rng rng(5);
  const auto t = magic_target(2, rng);
  const HonestIid h = depolarized(t, 0.1);
  const double w = dense::exact_witness(honest_density(h), *t);
  EXPECT_NEAR(w, 0.9, 1e-12);
  const SamplingPlan plan = build_plan(*t, SamplingMode::exclude_identity);
  CertConfig cfg = config(0.3, 0.1);
  cfg.samples = 400;
  const int runs = 2000;
  double sum = 0, sum2 = 0;
  for (int run = 0; run < runs; ++run) {
    MeasurementSession s = open_session(h, 400, rng);
    const double wb = certify_iid(*t, plan, s, cfg, rng).w_bar;
    sum += wb;
    sum2 += wb * wb;
  }
  const double mean = sum / runs, var = sum2 / runs - mean * mean;
  EXPECT_LT(std::abs(mean - w), 4 * std::sqrt(var / runs));
}

TEST(Certify, OrthogonalFlipIsRejected) {
  Rng rng(6);
  const auto t = magic_target(2, rng);
  // Flip qubit 0's Bloch vector: fidelity 0.
  const HonestIid flip{t, {UnitaryRotation{PauliAxis::Z, M_PI, 0}}, {}};
  const dense::DenseDensity rho = honest_density(flip);
  EXPECT_LT(dense::fidelity(rho, dense::build_cps_dense(*t)), 0.7);
  const SamplingPlan plan = build_plan(*t, SamplingMode::exclude_identity);
  const CertConfig cfg = config(0.3, 0.1);
  int rejects = 0;
  for (int run = 0; run < 50; ++run) {
    MeasurementSession s(FixedAlternative{rho}, sample_size_iid(plan, cfg), rng.next());
    rejects += !certify_iid(*t, plan, s, cfg, rng).accept;
  }
  EXPECT_GE(rejects, 45);
}

TEST(Certify, Errors) {
  Rng rng(7);
  const auto t = magic_target(2, rng);
  const SamplingPlan plan = build_plan(*t, SamplingMode::exclude_identity);
  const CertConfig cfg = config(0.3, 0.1);
  MeasurementSession small = open_session(HonestIid{t, {}, {}}, 10, rng);
  EXPECT_THROW(certify_iid(*t, plan, small, cfg, rng), SessionError);
  MeasurementSession adaptive = open_session(HonestIid{t, {}, {}}, 100000, rng, SessionMode::adaptive);
  EXPECT_THROW(certify_iid(*t, plan, adaptive, cfg, rng), SessionError);
  MeasurementSession ok = open_session(HonestIid{t, {}, {}}, 100000, rng);
  EXPECT_THROW(certify_iid(*t, plan, ok, config(0.3, 0.1, SamplingMode::include_identity), rng), ValidationError);
}

TEST(Certify, TieAtThresholdAccepts) {
  // n=1 |0>, exclude mode: W_bar = 1/2 + x_bar/2. With eps=0.75, k=3 the threshold is 0.5, hit by x_bar = 0.
  const auto t = make_target({SingleQubitState::zero()}, {1, {}});
  const SamplingPlan plan = build_plan(*t, SamplingMode::exclude_identity);
  CertConfig cfg = config(0.75, 0.1);
  cfg.samples = 2;
  EXPECT_DOUBLE_EQ(cfg.threshold(), 0.5);
  Rng rng(8);
  bool saw_tie = false;
  for (int run = 0; run < 200 && !saw_tie; ++run) {
    MeasurementSession s(FixedAlternative{dense::DenseDensity::Identity(2, 2) / 2.0}, 2, rng.next());
    const CertResult r = certify_iid(*t, plan, s, cfg, rng);
    if (r.x_bar == 0) {
      saw_tie = true;
      EXPECT_TRUE(r.accept);
    }
  }
  EXPECT_TRUE(saw_tie);
}

TEST(Hoeffding, EnvelopeHoldsForSmallRuns) {
  Rng rng(9);
  const auto t = magic_target(2, rng);
  const HonestIid h = depolarized(t, 0.05);
  const double w = dense::exact_witness(honest_density(h), *t);
  const SamplingPlan plan = build_plan(*t, SamplingMode::exclude_identity);
  CertConfig cfg = config(0.3, 0.1);
  cfg.samples = 200;
  const int runs = 2000;
  int far = 0;
  for (int run = 0; run < runs; ++run) {
    MeasurementSession s = open_session(h, 200, rng);
    far += std::abs(certify_iid(*t, plan, s, cfg, rng).w_bar - w) >= 0.2;
  }
  EXPECT_LE(double(far) / runs, hoeffding_tail(200, 0.2, plan.m_eff()));
}

TEST(Partition, SizesDisjointAndUniform) {
  Rng rng(10);
  const Partition p = random_partition(1000, 300, rng);
  std::set<std::uint64_t> seen(p.test.begin(), p.test.end());
  EXPECT_EQ(seen.size(), 300u);
  EXPECT_FALSE(seen.count(p.keep));
  for (auto v : p.test) EXPECT_LT(v, 1000u);
  EXPECT_THROW(random_partition(5, 5, rng), ValidationError);

  // Every index is equally likely to be kept and to be tested.
  std::vector<int> kept(6, 0), tested(6, 0);
  const int draws = 60000;
  for (int k = 0; k < draws; ++k) {
    const Partition q = random_partition(6, 2, rng);
    ++kept[q.keep];
    for (auto v : q.test) ++tested[v];
  }
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(kept[i], draws / 6.0, 4 * std::sqrt(draws / 6.0));
    EXPECT_NEAR(tested[i], draws / 3.0, 4 * std::sqrt(draws / 3.0));
  }
}

TEST(Partition, HugeN1UsesLittleMemory) {
  Rng rng(11);
  const Partition p = random_partition(std::uint64_t{1} << 60, 1000, rng);
  EXPECT_EQ(p.test.size(), 1000u);
}

TEST(Verify, PerfectProverAcceptsAndKeepsPerfectCopy) {
  Rng rng(12);
  const auto t = magic_target(2, rng);
  const SamplingPlan plan = build_plan(*t, SamplingMode::exclude_identity);
  VerifyConfig v{config(0.3, 0.1), 0, 0};
  v.n2 = sample_size_iid(plan, v.cert);
  v.n1 = 3 * v.n2;
  const dense::DenseState psi = dense::build_cps_dense(*t);
  for (int run = 0; run < 5; ++run) {
    MeasurementSession s = open_session(HonestIid{t, {}, {}}, v.n1, rng);
    const VerifyResult r = verify_noniid(*t, plan, s, v, rng);
    EXPECT_TRUE(r.cert.accept);
    EXPECT_NEAR(dense::fidelity(r.kept.state(), psi), 1, 1e-12);
    EXPECT_EQ(s.consumed(), v.n2 + 1);
  }
}

TEST(Verify, DeterministicAndValidated) {
  Rng rng(13);
  const auto t = magic_target(2, rng);
  const SamplingPlan plan = build_plan(*t, SamplingMode::exclude_identity);
  VerifyConfig v{config(0.3, 0.1), 0, 0};
  v.n2 = sample_size_iid(plan, v.cert);
  v.n1 = v.n2 + 50;
  EXPECT_EQ(v.discard_size(), 49u);
  auto run = [&](std::uint64_t seed) {
    Rng r(seed);
    MeasurementSession s = open_session(depolarized(t, 0.2), v.n1, r);
    return verify_noniid(*t, plan, s, v, r);
  };
  const VerifyResult a = run(5), b = run(5);
  EXPECT_EQ(a.partition.test, b.partition.test);
  EXPECT_EQ(a.partition.keep, b.partition.keep);
  EXPECT_EQ(a.cert.accept, b.cert.accept);
  EXPECT_EQ(a.cert.x_bar, b.cert.x_bar);

  VerifyConfig bad = v;
  bad.n1 = bad.n2;
  MeasurementSession s = open_session(HonestIid{t, {}, {}}, v.n1, rng);
  EXPECT_THROW(verify_noniid(*t, plan, s, bad, rng), ValidationError);
  bad = v;
  bad.n2 = v.n2 - 1;
  EXPECT_THROW(verify_noniid(*t, plan, s, bad, rng), ValidationError);
}
