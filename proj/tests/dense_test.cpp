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

#include "cpsverify/dense.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "kron_oracle.hpp"

using namespace cpsverify;
using namespace cpsverify::dense;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

SingleQubitState random_state(Rng& rng) {
  return SingleQubitState::from_angles(std::acos(2 * rng.uniform() - 1), 2 * M_PI * rng.uniform());
}

CpsTarget random_target(std::size_t n, Rng& rng) {
  std::vector<SingleQubitState> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(random_state(rng));
  return CpsTarget(s, random_circuit(n, 5 * n, rng));
}

PauliString random_hermitian(std::size_t n, Rng& rng) {
  PauliString p(n);
  for (std::size_t q = 0; q < n; ++q) p.set_axis(q, kAllAxes[rng.below(4)]);
  if (rng.bernoulli(0.5)) p.negate();
  return p;
}

DenseDensity bell_density() {
  const CpsTarget bell({SingleQubitState::zero(), SingleQubitState::zero()},
                       {2, {{GateKind::H, 0}, {GateKind::CNOT, 0, 1}}});
  return density_of(build_cps_dense(bell));
}

std::vector<Channel> sample_channels() {
  return {Depolarizing{0.3, 0},        Dephasing{0.4, 0},
          AmplitudeDamping{0.25, 0},   UnitaryRotation{PauliAxis::X, 0.7, 0},
          UnitaryRotation{PauliAxis::Y, -1.2, 0}, UnitaryRotation{PauliAxis::Z, 2.1, 0},
          Depolarizing{1.0, 0},        Dephasing{1.0, 0}};
}

}  // namespace

TEST(BuildCps, Examples) {
  const DenseState zero = build_cps_dense(CpsTarget({SingleQubitState::zero()}, {1, {}}));
  EXPECT_NEAR(std::abs(zero(0) - Complex(1, 0)), 0, 1e-15);
  EXPECT_NEAR(std::abs(zero(1)), 0, 1e-15);

  const CpsTarget bell({SingleQubitState::zero(), SingleQubitState::zero()},
                       {2, {{GateKind::H, 0}, {GateKind::CNOT, 0, 1}}});
  const DenseState b = build_cps_dense(bell);
  EXPECT_NEAR(std::abs(b(0) - kInvSqrt2), 0, 1e-15);
  EXPECT_NEAR(std::abs(b(1)), 0, 1e-15);
  EXPECT_NEAR(std::abs(b(2)), 0, 1e-15);
  EXPECT_NEAR(std::abs(b(3) - kInvSqrt2), 0, 1e-15);

  // T|+> up to global phase: amplitudes (1, e^{i pi/4})/sqrt2.
  const DenseState m = build_cps_dense(CpsTarget({SingleQubitState::magic()}, {1, {}}));
  const Complex ratio = m(1) / m(0);
  EXPECT_NEAR(std::abs(m(0)), kInvSqrt2, 1e-15);
  EXPECT_NEAR(std::abs(ratio - std::polar(1.0, M_PI / 4)), 0, 1e-14);
}

TEST(BuildCps, RejectsOversizeWidth) {
  std::vector<SingleQubitState> s(13, SingleQubitState::zero());
  EXPECT_THROW(build_cps_dense(CpsTarget(s, {13, {}})), DimensionError);
  Rng rng(1);
  EXPECT_THROW(random_pure_state(13, rng), DimensionError);
}

TEST(BuildCps, AgreesWithKroneckerOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    const CpsTarget t = random_target(n, rng);
    oracle::Matrix prod = oracle::Matrix::Ones(1, 1);
    for (std::size_t i = 0; i < n; ++i) prod = oracle::kron(single_qubit_vector(t.state(i)), prod);
    const oracle::Matrix expect = oracle::circuit(t.circuit()) * prod;
    EXPECT_LT((expect - build_cps_dense(t)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Expectation, Examples) {
  const DenseDensity zero = density_of(basis_state(1, 0));
  EXPECT_NEAR(expectation(zero, parse_pauli("Z")), 1, 1e-15);
  const DenseDensity mixed = DenseDensity::Identity(8, 8) / 8.0;
  for (std::uint64_t k = 1; k < 64; ++k) EXPECT_NEAR(expectation(mixed, pauli_from_index(3, k)), 0, 1e-15);
  const DenseDensity bell = bell_density();
  EXPECT_NEAR(expectation(bell, parse_pauli("XX")), 1, 1e-14);
  EXPECT_NEAR(expectation(bell, parse_pauli("ZZ")), 1, 1e-14);
  EXPECT_NEAR(expectation(bell, parse_pauli("YY")), -1, 1e-14);
  EXPECT_NEAR(expectation(bell, parse_pauli("XZ")), 0, 1e-14);
  EXPECT_THROW(expectation(bell, parse_pauli("X")), DimensionError);
  EXPECT_THROW(expectation(bell, parse_pauli("+iXX")), ValidationError);
}

TEST(Expectation, MatchesTraceOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    const DenseDensity rho = random_density(n, 1 + rng.below(3), rng);
    const DenseState psi = random_pure_state(n, rng);
    const PauliString p = random_hermitian(n, rng);
    EXPECT_NEAR(expectation(rho, p), (rho * oracle::pauli(p)).trace().real(), 1e-12);
    EXPECT_NEAR(expectation(psi, p), (psi.adjoint() * oracle::pauli(p) * psi)(0).real(), 1e-12);
    EXPECT_TRUE(pauli_matrix(p).isApprox(oracle::pauli(p), 1e-14));
  }
}

TEST(Expectation, Cyclicity) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    const CliffordCircuit c = random_circuit(n, 6 * n, rng);
    const DenseDensity rho = random_density(n, 2, rng);
    const PauliString p = random_hermitian(n, rng);
    DenseDensity back = rho;
    const CliffordCircuit inv = c.inverse();
    conjugate_density(back, [&](DenseDensity& m) { apply_circuit(m, inv); });
    EXPECT_NEAR(expectation(rho, conjugate(tableau_from_circuit(c), p)), expectation(back, p), 1e-10);
  }
}

TEST(Metrics, Examples) {
  Rng rng(5);
  const DenseState psi = random_pure_state(3, rng);
  EXPECT_NEAR(fidelity(density_of(psi), psi), 1, 1e-12);
  EXPECT_NEAR(trace_distance(density_of(psi), density_of(psi)), 0, 1e-12);
  const DenseDensity zero = density_of(basis_state(2, 0)), three = density_of(basis_state(2, 3));
  EXPECT_NEAR(fidelity(zero, basis_state(2, 3)), 0, 1e-15);
  EXPECT_NEAR(trace_distance(zero, three), 1, 1e-12);
  EXPECT_THROW(fidelity(zero, basis_state(1, 0)), DimensionError);
  EXPECT_THROW(trace_distance(zero, DenseDensity::Identity(2, 2)), DimensionError);
}

TEST(Metrics, DepolarizedFidelity) {
  Rng rng(6);
  for (double p : {0.0, 0.1, 0.37, 1.0}) {
    const DenseState psi = random_pure_state(1, rng);
    DenseDensity rho = density_of(psi);
    apply_channel(rho, Depolarizing{p, 0});
    EXPECT_NEAR(fidelity(rho, psi), 1 - p / 2, 1e-12);
  }
}

TEST(Channels, KrausAndBlochRoutesAgree) {
  Rng rng(7);
  for (const Channel& ch : sample_channels()) {
    for (int trial = 0; trial < 20; ++trial) {
      const SingleQubitState s = random_state(rng);
      DenseDensity rho = density_of(single_qubit_vector(s));
      apply_channel(rho, ch);
      EXPECT_TRUE(is_valid_density(rho));
      const auto r = bloch_map(ch)(s.bloch());
      const auto got = reduced_bloch(rho, 0);
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(got[k], r[k], 1e-12) << ch.index();
    }
  }
}

TEST(Channels, BlochComposition) {
  Rng rng(8);
  const auto chans = sample_channels();
  for (int trial = 0; trial < 50; ++trial) {
    const Channel& a = chans[rng.below(chans.size())];
    const Channel& b = chans[rng.below(chans.size())];
    const SingleQubitState s = random_state(rng);
    DenseDensity rho = density_of(single_qubit_vector(s));
    apply_channel(rho, a);
    apply_channel(rho, b);
    const auto r = bloch_map(a).then(bloch_map(b))(s.bloch());
    const auto got = reduced_bloch(rho, 0);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(got[k], r[k], 1e-12);
  }
}

TEST(Channels, PreserveTraceAndPositivityOnRegisters) {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    DenseDensity rho = random_density(n, 1 + rng.below(3), rng);
    const std::size_t q = rng.below(n);
    apply_channel(rho, Depolarizing{rng.uniform(), q});
    apply_channel(rho, AmplitudeDamping{rng.uniform(), q});
    apply_channel(rho, UnitaryRotation{PauliAxis::Y, rng.uniform() * 6, q});
    PauliChannel pc;
    pc.terms = {{random_hermitian(n, rng), 0.2}, {random_hermitian(n, rng), 0.1}};
    apply_channel(rho, pc);
    EXPECT_TRUE(is_valid_density(rho));
  }
}

TEST(Channels, PauliChannelMatchesOracle) {
  Rng rng(10);
  const DenseDensity rho = random_density(2, 2, rng);
  PauliChannel pc;
  pc.terms = {{parse_pauli("XZ"), 0.2}, {parse_pauli("-YI"), 0.15}};
  DenseDensity got = rho;
  apply_channel(got, pc);
  oracle::Matrix expect = 0.65 * rho;
  for (const auto& [p, prob] : pc.terms) expect += prob * oracle::pauli(p) * rho * oracle::pauli(p);
  EXPECT_LT((got - expect).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Channels, Validation) {
  DenseDensity rho = density_of(basis_state(2, 0));
  EXPECT_THROW(apply_channel(rho, Depolarizing{1.5, 0}), ValidationError);
  EXPECT_THROW(apply_channel(rho, Dephasing{0.1, 2}), DimensionError);
  PauliChannel pc;
  pc.terms = {{parse_pauli("XX"), 0.6}, {parse_pauli("ZZ"), 0.6}};
  EXPECT_THROW(apply_channel(rho, pc), ValidationError);
  pc.terms = {{parse_pauli("X"), 0.1}};
  EXPECT_THROW(apply_channel(rho, pc), DimensionError);
}

TEST(Witness, PureTargetGivesOne) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CpsTarget t = random_target(1 + rng.below(5), rng);
    EXPECT_NEAR(exact_witness(density_of(build_cps_dense(t)), t), 1, 1e-12);
  }
}

TEST(Witness, PerQubitDepolarizingBeforeCircuit) {
  Rng rng(12);
  const CpsTarget t = random_target(2, rng);
  DenseDensity rho = density_of(product_state(t.states()));
  apply_channel(rho, Depolarizing{0.1, 0});
  apply_channel(rho, Depolarizing{0.1, 1});
  apply_circuit_density(rho, t.circuit());
  EXPECT_NEAR(exact_witness(rho, t), 0.9, 1e-12);
}

TEST(WitnessProperty, RobustnessAndFuchsVanDeGraaf) {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    const CpsTarget t = random_target(n, rng);
    const DenseState psi = build_cps_dense(t);
    DenseDensity rho = 0.7 * density_of(psi) + 0.3 * random_density(n, 1 + rng.below(4), rng);
    apply_channel(rho, Depolarizing{0.2 * rng.uniform(), rng.below(n)});
    const double f = fidelity(rho, psi), w = exact_witness(rho, t);
    EXPECT_LE(1 - n * (1 - f), w + 1e-9);
    EXPECT_LE(w, f + 1e-9);
    const double d = trace_distance(rho, density_of(psi));
    EXPECT_LE(1 - std::sqrt(f), d + 1e-9);
    EXPECT_LE(d, std::sqrt(1 - f) + 1e-9);
  }
}

TEST(Measure, Examples) {
  Rng rng(14);
  const auto [o0, post0] = measure_pauli(basis_state(1, 0), parse_pauli("Z"), rng);
  EXPECT_EQ(o0, 1);
  EXPECT_NEAR((post0 - basis_state(1, 0)).norm(), 0, 1e-15);

  const DenseState plus = single_qubit_vector(SingleQubitState::from_token("+"));
  int ups = 0;
  const int shots = 20000;
  for (int k = 0; k < shots; ++k) {
    const auto [o, post] = measure_pauli(plus, parse_pauli("Z"), rng);
    ups += o == 1;
    EXPECT_NEAR(std::abs(post(o == 1 ? 0 : 1)), 1, 1e-12);
  }
  EXPECT_NEAR(ups, shots / 2, 4 * std::sqrt(shots / 4.0));

  const DenseDensity bell = bell_density();
  for (int k = 0; k < 200; ++k) {
    const auto [a, post] = measure_pauli(bell, parse_pauli("ZI"), rng);
    const auto [b, post2] = measure_pauli(post, parse_pauli("IZ"), rng);
    EXPECT_EQ(a, b);
    EXPECT_TRUE(is_valid_density(post2));
  }
}

TEST(Measure, ProjectionProbabilitiesSumToOne) {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    const DenseDensity rho = random_density(n, 2, rng);
    PauliString p = random_hermitian(n, rng);
    if (p.is_identity()) continue;
    const auto [pp, post_p] = project_density(rho, p, +1);
    const auto [pm, post_m] = project_density(rho, p, -1);
    EXPECT_NEAR(pp + pm, 1, 1e-12);
    EXPECT_NEAR(pp, plus_probability(rho, p), 1e-12);
    EXPECT_NEAR(expectation(post_p, p), 1, 1e-10);
    EXPECT_NEAR(expectation(post_m, p), -1, 1e-10);
  }
}

TEST(Dfe, PerfectStateEstimatesOne) {
  Rng rng(16);
  const DenseState psi = random_pure_state(2, rng);
  const DfeResult r = dfe_global(psi, density_of(psi), 0.1, 0.05, rng);
  EXPECT_NEAR(r.estimate, 1, 0.1);
}

TEST(Dfe, BellWithGlobalDepolarizing) {
  Rng rng(17);
  const DenseDensity bell = bell_density();
  const DenseState psi = build_cps_dense(CpsTarget({SingleQubitState::zero(), SingleQubitState::zero()},
                                                   {2, {{GateKind::H, 0}, {GateKind::CNOT, 0, 1}}}));
  for (double p : {0.1, 0.4}) {
    const DenseDensity rho = (1 - p) * bell + p * DenseDensity::Identity(4, 4) / 4.0;
    const double eps = 0.1;
    int within = 0;
    for (int run = 0; run < 20; ++run) {
      within += std::abs(dfe_global(psi, rho, eps, 0.05, rng).estimate - fidelity(rho, psi)) <= 2 * eps;
    }
    EXPECT_GE(within, 19);
  }
}

TEST(Dfe, MagicStateNormAndVariance) {
  Rng rng(18);
  const DenseState psi = single_qubit_vector(SingleQubitState::magic());
  const DfeResult r = dfe_global(psi, density_of(psi), 0.05, 0.05, rng);
  // identity included: 1/2 + 2 * 1/(2 sqrt2).
  EXPECT_NEAR(r.l1_norm, 0.5 + kInvSqrt2, 1e-12);
  EXPECT_LE(r.sample_variance, r.l1_norm * r.l1_norm + 1e-9);
  EXPECT_NEAR(r.estimate, 1, 0.05);
  EXPECT_THROW(dfe_global(random_pure_state(7, rng), random_density(7, 1, rng), 0.1, 0.1, rng), DimensionError);
}
