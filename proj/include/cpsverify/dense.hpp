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

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cpsverify/channel.hpp"
#include "cpsverify/clifford.hpp"
#include "cpsverify/errors.hpp"
#include "cpsverify/pauli.hpp"
#include "cpsverify/random.hpp"
#include "cpsverify/target.hpp"

// Exact dense reference for small registers. Basis index bit j is qubit j.

namespace cpsverify::dense {

using DenseState = Eigen::VectorXcd;
using DenseDensity = Eigen::MatrixXcd;

inline constexpr std::size_t kMaxQubits = 12;
inline constexpr std::size_t kMaxDfeQubits = 6;
inline constexpr double kPositivityTolerance = 1e-9;

inline void check_width(std::size_t n, std::size_t cap = kMaxQubits) {
  if (n > cap) {
    throw DimensionError("dense simulation is capped at " + std::to_string(cap) + " qubits, got " + std::to_string(n));
  }
}

inline std::size_t qubits_of(Eigen::Index dim) {
  const auto d = static_cast<std::uint64_t>(dim);
  if (d == 0 || !std::has_single_bit(d)) throw DimensionError("dense dimension is not a power of two");
  return static_cast<std::size_t>(std::countr_zero(d));
}

inline void check_dims(Eigen::Index dim, const PauliString& p) {
  if (qubits_of(dim) != p.size()) {
    throw DimensionError("dense register has " + std::to_string(qubits_of(dim)) + " qubits, Pauli has " +
                         std::to_string(p.size()));
  }
}

/// (cos(theta/2), e^{i phi} sin(theta/2)).
inline DenseState single_qubit_vector(const SingleQubitState& s) {
  const auto [theta, phi] = s.angles();
  DenseState v(2);
  v << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
  return v;
}

inline DenseState basis_state(std::size_t n, std::uint64_t index) {
  check_width(n);
  DenseState v = DenseState::Zero(Eigen::Index{1} << n);
  v(static_cast<Eigen::Index>(index)) = 1;
  return v;
}

inline DenseState product_state(const std::vector<SingleQubitState>& states) {
  check_width(states.size());
  DenseState v = DenseState::Ones(1);
  for (std::size_t q = 0; q < states.size(); ++q) {
    const DenseState s = single_qubit_vector(states[q]);
    DenseState next(v.size() * 2);
    // Qubit q becomes the new most significant bit.
    next.head(v.size()) = v * s(0);
    next.tail(v.size()) = v * s(1);
    v = std::move(next);
  }
  return v;
}

/// Applies a 2x2 matrix to qubit q of every column of `m` (a vector or a matrix).
template <typename Derived>
void apply_1q(Eigen::MatrixBase<Derived>& m, const Mat2& u, std::size_t q) {
  const Eigen::Index stride = Eigen::Index{1} << q;
  const Eigen::Index dim = m.rows();
  for (Eigen::Index col = 0; col < m.cols(); ++col) {
    for (Eigen::Index b = 0; b < dim; ++b) {
      if (b & stride) continue;
      const Complex v0 = m(b, col), v1 = m(b | stride, col);
      m(b, col) = u[0] * v0 + u[1] * v1;
      m(b | stride, col) = u[2] * v0 + u[3] * v1;
    }
  }
}

inline Mat2 gate_matrix(GateKind k) {
  const double h = std::numbers::sqrt2 / 2;
  const Complex i(0, 1);
  switch (k) {
    case GateKind::H: return {h, h, h, -h};
    case GateKind::S: return {1, 0, 0, i};
    case GateKind::Sdg: return {1, 0, 0, -i};
    case GateKind::X: return pauli_matrix(PauliAxis::X);
    case GateKind::Y: return pauli_matrix(PauliAxis::Y);
    case GateKind::Z: return pauli_matrix(PauliAxis::Z);
    default: throw ValidationError("gate_matrix: not a single-qubit gate");
  }
}

/// diag(1, e^{i pi/4}), or its adjoint.
inline Mat2 t_matrix(bool dagger = false) {
  return {1, 0, 0, std::polar(1.0, (dagger ? -1 : 1) * std::numbers::pi / 4)};
}

template <typename Derived>
void apply_gate(Eigen::MatrixBase<Derived>& m, const CliffordGate& g) {
  const Eigen::Index dim = m.rows();
  const Eigen::Index ma = Eigen::Index{1} << g.a, mb = Eigen::Index{1} << g.b;
  switch (g.kind) {
    case GateKind::CNOT:
      for (Eigen::Index b = 0; b < dim; ++b) {
        if ((b & ma) && !(b & mb)) m.row(b).swap(m.row(b | mb));
      }
      return;
    case GateKind::CZ:
      for (Eigen::Index b = 0; b < dim; ++b) {
        if ((b & ma) && (b & mb)) m.row(b) *= -1;
      }
      return;
    case GateKind::SWAP:
      for (Eigen::Index b = 0; b < dim; ++b) {
        if ((b & ma) && !(b & mb)) m.row(b).swap(m.row((b ^ ma) | mb));
      }
      return;
    default:
      apply_1q(m, gate_matrix(g.kind), g.a);
  }
}

template <typename Derived>
void apply_circuit(Eigen::MatrixBase<Derived>& m, const CliffordCircuit& c) {
  if (qubits_of(m.rows()) != c.width) throw DimensionError("circuit width does not match dense register");
  for (const auto& g : c.gates) apply_gate(m, g);
}

/// rho -> A rho A^dagger where `apply_left` applies A to every column.
template <typename F>
void conjugate_density(DenseDensity& rho, F&& apply_left) {
  apply_left(rho);
  rho.adjointInPlace();
  apply_left(rho);
  rho.adjointInPlace();
}

inline DenseDensity density_of(const DenseState& psi) { return psi * psi.adjoint(); }

/// rho -> C rho C^dagger.
inline void apply_circuit_density(DenseDensity& rho, const CliffordCircuit& c) {
  conjugate_density(rho, [&](DenseDensity& m) { apply_circuit(m, c); });
}

/// Full unitary of a circuit, column b = C|b>.
inline Eigen::MatrixXcd unitary(const CliffordCircuit& c) {
  check_width(c.width);
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(Eigen::Index{1} << c.width, Eigen::Index{1} << c.width);
  apply_circuit(u, c);
  return u;
}

/// C (psi_0 (x) ... (x) psi_{n-1}).
inline DenseState build_cps_dense(const CpsTarget& target) {
  check_width(target.n());
  DenseState v = product_state(target.states());
  apply_circuit(v, target.circuit());
  return v;
}

/// P|b> = i^(phase + #Y) (-1)^{|b & z|} |b ^ x>, for registers of at most 64 qubits.
struct PauliMasks {
  std::uint64_t x = 0, z = 0;
  Complex scalar = 1;

  explicit PauliMasks(const PauliString& p) {
    if (p.size() > 64) throw DimensionError("dense Pauli action supports at most 64 qubits");
    if (p.size() > 0) {
      x = p.x_words()[0];
      z = p.z_words()[0];
    }
    constexpr Complex kPowers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    scalar = kPowers[(p.phase() + p.y_count()) & 3U];
  }

  Complex coefficient(std::uint64_t b) const { return (std::popcount(b & z) & 1) ? -scalar : scalar; }
};

template <typename Derived>
Eigen::MatrixXcd apply_pauli(const Eigen::MatrixBase<Derived>& m, const PauliString& p) {
  check_dims(m.rows(), p);
  const PauliMasks pm(p);
  Eigen::MatrixXcd out(m.rows(), m.cols());
  for (Eigen::Index b = 0; b < m.rows(); ++b) {
    out.row(static_cast<Eigen::Index>(static_cast<std::uint64_t>(b) ^ pm.x)) =
        pm.coefficient(static_cast<std::uint64_t>(b)) * m.row(b);
  }
  return out;
}

inline Eigen::MatrixXcd pauli_matrix(const PauliString& p) {
  check_width(p.size());
  const Eigen::Index d = Eigen::Index{1} << p.size();
  return apply_pauli(Eigen::MatrixXcd::Identity(d, d), p);
}

/// Tr[rho P], real for Hermitian P.
inline double expectation(const DenseDensity& rho, const PauliString& p) {
  check_dims(rho.rows(), p);
  if (!p.is_hermitian()) throw ValidationError("expectation: Pauli '" + p.str() + "' is not Hermitian");
  const PauliMasks pm(p);
  Complex acc = 0;
  for (Eigen::Index b = 0; b < rho.rows(); ++b) {
    const auto ub = static_cast<std::uint64_t>(b);
    acc += rho(b, static_cast<Eigen::Index>(ub ^ pm.x)) * pm.coefficient(ub);
  }
  return acc.real();
}

/// <psi|P|psi>.
inline double expectation(const DenseState& psi, const PauliString& p) {
  check_dims(psi.size(), p);
  if (!p.is_hermitian()) throw ValidationError("expectation: Pauli '" + p.str() + "' is not Hermitian");
  const PauliMasks pm(p);
  Complex acc = 0;
  for (Eigen::Index b = 0; b < psi.size(); ++b) {
    const auto ub = static_cast<std::uint64_t>(b);
    acc += std::conj(psi(static_cast<Eigen::Index>(ub ^ pm.x))) * pm.coefficient(ub) * psi(b);
  }
  return acc.real();
}

inline void apply_channel(DenseDensity& rho, const Channel& ch) {
  const std::size_t n = qubits_of(rho.rows());
  validate_channel(ch, n);
  if (const auto* pc = std::get_if<PauliChannel>(&ch)) {
    DenseDensity out = (1 - pc->total_probability()) * rho;
    for (const auto& [p, prob] : pc->terms) {
      if (prob == 0) continue;
      DenseDensity t = apply_pauli(rho, p);
      out += prob * apply_pauli(DenseDensity(t.adjoint()), p).adjoint();
    }
    rho = std::move(out);
    return;
  }
  const std::size_t q = channel_qubit(ch);
  DenseDensity out = DenseDensity::Zero(rho.rows(), rho.cols());
  for (const Mat2& k : kraus_operators(ch)) {
    DenseDensity t = rho;
    conjugate_density(t, [&](DenseDensity& m) { apply_1q(m, k, q); });
    out += t;
  }
  rho = std::move(out);
}

/// <psi|rho|psi>.
inline double fidelity(const DenseDensity& rho, const DenseState& psi) {
  if (rho.rows() != psi.size()) throw DimensionError("fidelity: dimension mismatch");
  return (psi.adjoint() * rho * psi)(0).real();
}

/// Half the sum of absolute eigenvalues of rho - sigma.
inline double trace_distance(const DenseDensity& rho, const DenseDensity& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
    throw DimensionError("trace_distance: dimension mismatch");
  }
  const DenseDensity diff = rho - sigma;
  Eigen::SelfAdjointEigenSolver<DenseDensity> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Hermitian, unit trace, eigenvalues >= -kPositivityTolerance.
inline bool is_valid_density(const DenseDensity& rho, double tol = 1e-9) {
  if (rho.rows() != rho.cols()) return false;
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(rho.trace() - Complex(1, 0)) > tol) return false;
  Eigen::SelfAdjointEigenSolver<DenseDensity> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -kPositivityTolerance;
}

/// Bloch vector of the reduced state of qubit q.
inline std::array<double, 3> reduced_bloch(const DenseDensity& rho, std::size_t q) {
  const std::size_t n = qubits_of(rho.rows());
  return {expectation(rho, embed_single(PauliAxis::X, q, n)), expectation(rho, embed_single(PauliAxis::Y, q, n)),
          expectation(rho, embed_single(PauliAxis::Z, q, n))};
}

/// 1 - sum_i (1 - F_i), F_i the fidelity of qubit i of C^dagger rho C with psi_i.
inline double exact_witness(const DenseDensity& rho, const CpsTarget& target) {
  check_width(target.n());
  if (qubits_of(rho.rows()) != target.n()) throw DimensionError("exact_witness: dimension mismatch");
  DenseDensity back = rho;
  apply_circuit_density(back, target.circuit().inverse());
  double w = 1.0;
  for (std::size_t i = 0; i < target.n(); ++i) {
    const auto r = reduced_bloch(back, i);
    const auto& t = target.state(i).bloch();
    const double fi = 0.5 * (1 + r[0] * t[0] + r[1] * t[1] + r[2] * t[2]);
    w -= 1 - fi;
  }
  return w;
}

/// Probability of outcome +1 when measuring P.
inline double plus_probability(const DenseDensity& rho, const PauliString& p) {
  return std::clamp(0.5 * (1 + expectation(rho, p)), 0.0, 1.0);
}

/// (I + outcome P)/2 applied to the columns of m.
template <typename Derived>
Eigen::MatrixXcd project(const Eigen::MatrixBase<Derived>& m, const PauliString& p, int outcome) {
  return 0.5 * (m + static_cast<double>(outcome) * apply_pauli(m, p));
}

/// Projective measurement of P on rho with the given outcome; returns the
/// (unnormalized -> normalized) post-measurement state and its probability.
inline std::pair<double, DenseDensity> project_density(const DenseDensity& rho, const PauliString& p, int outcome) {
  DenseDensity t = project(rho, p, outcome);
  t = project(DenseDensity(t.adjoint()), p, outcome).adjoint();
  const double prob = t.trace().real();
  if (prob > 0) t /= prob;
  return {std::max(prob, 0.0), std::move(t)};
}

inline std::pair<int, DenseState> measure_pauli(const DenseState& psi, const PauliString& p, Rng& rng) {
  if (!p.is_hermitian()) throw ValidationError("measure_pauli: Pauli '" + p.str() + "' is not Hermitian");
  const double p_plus = std::clamp(0.5 * (1 + expectation(psi, p)), 0.0, 1.0);
  const int outcome = rng.uniform() < p_plus ? +1 : -1;
  DenseState post = project(psi, p, outcome);
  post.normalize();
  return {outcome, std::move(post)};
}

inline std::pair<int, DenseDensity> measure_pauli(const DenseDensity& rho, const PauliString& p, Rng& rng) {
  if (!p.is_hermitian()) throw ValidationError("measure_pauli: Pauli '" + p.str() + "' is not Hermitian");
  const int outcome = rng.uniform() < plus_probability(rho, p) ? +1 : -1;
  auto [prob, post] = project_density(rho, p, outcome);
  return {outcome, std::move(post)};
}

/// Haar-random pure state (normalized complex Gaussian vector).
inline DenseState random_pure_state(std::size_t n, Rng& rng) {
  check_width(n);
  DenseState v(Eigen::Index{1} << n);
  for (auto& a : v) a = Complex(rng.normal(), rng.normal());
  v.normalize();
  return v;
}

/// Random mixed state G G^dagger / Tr with G a d x rank complex Gaussian matrix.
inline DenseDensity random_density(std::size_t n, std::size_t rank, Rng& rng) {
  check_width(n);
  const Eigen::Index d = Eigen::Index{1} << n;
  Eigen::MatrixXcd g(d, static_cast<Eigen::Index>(rank));
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = Complex(rng.normal(), rng.normal());
  DenseDensity rho = g * g.adjoint();
  return rho / rho.trace().real();
}

/// rho as a mixture of orthonormal pure states (its eigenvectors). Measuring a
/// component drawn with probability p_k reproduces the statistics of rho.
struct PureEnsemble {
  DenseDensity rho;
  std::vector<double> cdf;
  std::vector<DenseState> states;

  const DenseState& draw(Rng& rng) const {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform());
    return states[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), states.size() - 1)];
  }
};

inline PureEnsemble decompose(const DenseDensity& rho, double cutoff = 1e-13) {
  if (!is_valid_density(rho)) throw ValidationError("decompose: not a density matrix");
  Eigen::SelfAdjointEigenSolver<DenseDensity> es(rho);
  PureEnsemble e{rho, {}, {}};
  double acc = 0;
  for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) {
    const double lam = es.eigenvalues()(k);
    if (lam <= cutoff) continue;
    acc += lam;
    e.cdf.push_back(acc);
    e.states.push_back(es.eigenvectors().col(k));
  }
  for (auto& v : e.cdf) v /= acc;
  e.cdf.back() = 1.0;
  return e;
}

/// All 4^n Paulis (phase +1), index k encodes qubit j's axis in bits 2j..2j+1.
inline PauliString pauli_from_index(std::size_t n, std::uint64_t k) {
  PauliString p(n);
  for (std::size_t j = 0; j < n; ++j) p.set_axis(j, kAllAxes[(k >> (2 * j)) & 3U]);
  return p;
}

struct DfeResult {
  double estimate;
  std::uint64_t samples;
  /// sum over all Paulis (identity included) of |chi(P)|, with chi(P) = <psi|P|psi>/d.
  double l1_norm;
  /// empirical variance of the single-sample estimator.
  double sample_variance;
};

/// Global direct fidelity estimate of F(rho, psi): draw P with probability
/// |chi(P)|/l1 over all 4^n Paulis, then average l1 * sgn(chi(P)) * x where x
/// is a +-1 outcome with mean Tr[rho P]. The identity stays in the support so
/// the estimator is unbiased. Sample count is the two-sided Hoeffding bound
/// ceil(2 l1^2 ln(2/delta) / eps^2).
inline DfeResult dfe_global(const DenseState& psi, const DenseDensity& rho, double epsilon, double delta, Rng& rng) {
  const std::size_t n = qubits_of(psi.size());
  check_width(n, kMaxDfeQubits);
  if (rho.rows() != psi.size()) throw DimensionError("dfe_global: dimension mismatch");
  if (!(epsilon > 0) || !(delta > 0 && delta < 1)) throw ValidationError("dfe_global: need eps > 0, 0 < delta < 1");
  const double d = static_cast<double>(psi.size());
  const std::uint64_t count = std::uint64_t{1} << (2 * n);
  std::vector<double> chis, means, cdf;
  chis.reserve(count);
  double l1 = 0;
  for (std::uint64_t k = 0; k < count; ++k) {
    const PauliString p = pauli_from_index(n, k);
    const double c = expectation(psi, p) / d;
    chis.push_back(c);
    means.push_back(std::abs(c) < kSupportCutoff ? 0.0 : expectation(rho, p));
    l1 += std::abs(c);
    cdf.push_back(l1);
  }
  for (auto& v : cdf) v /= l1;
  cdf.back() = 1.0;
  const auto samples = static_cast<std::uint64_t>(std::ceil(2 * l1 * l1 * std::log(2 / delta) / (epsilon * epsilon)));
  double sum = 0, sum2 = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), rng.uniform()) - cdf.begin());
    const std::size_t idx = std::min<std::size_t>(k, count - 1);
    const int x = rng.sign_with_mean(means[idx]);
    const double f = l1 * (chis[idx] > 0 ? 1 : -1) * x;
    sum += f;
    sum2 += f * f;
  }
  const double mean = sum / static_cast<double>(samples);
  const double var = samples > 1 ? (sum2 - samples * mean * mean) / static_cast<double>(samples - 1) : 0.0;
  return {mean, samples, l1, var};
}

}  // namespace cpsverify::dense
