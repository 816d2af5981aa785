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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cpsverify/certifier.hpp"
#include "cpsverify/clifford.hpp"
#include "cpsverify/dense.hpp"
#include "cpsverify/errors.hpp"
#include "cpsverify/pauli.hpp"
#include "cpsverify/prover.hpp"
#include "cpsverify/random.hpp"
#include "cpsverify/target.hpp"

namespace cpsverify {

struct TGate {
  std::uint32_t qubit;
  friend bool operator==(const TGate&, const TGate&) = default;
};

using UniversalGate = std::variant<CliffordGate, TGate>;

/// Clifford+T circuit on `width` data wires. Wire q starts in inputs[q]
/// (|0> when `inputs` is empty) and is read out in the Z basis at the end.
struct UniversalCircuit {
  std::size_t width = 0;
  std::vector<UniversalGate> gates;
  std::vector<SingleQubitState> inputs;

  std::size_t t_count() const {
    std::size_t c = 0;
    for (const auto& g : gates) c += std::holds_alternative<TGate>(g);
    return c;
  }

  SingleQubitState input(std::size_t q) const { return inputs.empty() ? SingleQubitState::zero() : inputs.at(q); }

  void validate() const {
    if (!inputs.empty() && inputs.size() != width) throw DimensionError("input state count differs from width");
    for (const auto& g : gates) {
      if (const auto* c = std::get_if<CliffordGate>(&g)) {
        validate_gate(*c, width);
      } else if (std::get<TGate>(g).qubit >= width) {
        throw DimensionError("T gate addresses a qubit outside width " + std::to_string(width));
      }
    }
  }
};

/// Parses the Clifford circuit format extended with `T q` and `INIT q <state token>`.
inline UniversalCircuit parse_universal_circuit(std::string_view text) {
  auto lines = detail::tokenize_circuit(text);
  const auto declared = detail::declared_width(lines);
  UniversalCircuit c;
  std::vector<std::pair<std::size_t, SingleQubitState>> inits;
  std::size_t top = 0;
  bool any = false;
  auto touch = [&](std::size_t q, std::size_t line) {
    if (declared && q >= *declared) {
      throw ParseError("qubit " + std::to_string(q) + " exceeds declared width " + std::to_string(*declared), line);
    }
    top = std::max(top, q);
    any = true;
  };
  for (const auto& line : lines) {
    if (line.mnemonic == "QUBITS") throw ParseError("QUBITS must be the first statement", line.number);
    if (line.mnemonic == "T") {
      if (line.args.size() != 1) throw ParseError("T takes one qubit index", line.number);
      const auto q = detail::parse_index(line.args[0], line.number);
      touch(q, line.number);
      c.gates.emplace_back(TGate{q});
    } else if (line.mnemonic == "INIT") {
      if (line.args.size() != 2) throw ParseError("INIT takes a qubit index and a state token", line.number);
      const auto q = detail::parse_index(line.args[0], line.number);
      touch(q, line.number);
      try {
        inits.emplace_back(q, SingleQubitState::from_token(line.args[1]));
      } catch (const ParseError& e) {
        throw ParseError(e.what(), line.number);
      }
    } else if (const auto g = detail::parse_clifford_line(line)) {
      touch(std::max<std::size_t>(g->a, is_two_qubit(g->kind) ? g->b : 0), line.number);
      c.gates.emplace_back(*g);
    } else {
      throw ParseError("unsupported gate '" + line.mnemonic + "'", line.number);
    }
  }
  c.width = declared ? *declared : (any ? top + 1 : 0);
  if (!inits.empty()) {
    c.inputs.assign(c.width, SingleQubitState::zero());
    for (const auto& [q, s] : inits) c.inputs[q] = s;
  }
  return c;
}

/// One injected T gate: measure `base` (through the current frame); on outcome
/// -1 the frame absorbs `correction`, the conjugated conditional S.
struct ScheduledMeasurement {
  PauliString base;
  CliffordTableau correction;
  CliffordTableau correction_inverse;
  std::size_t data_qubit;
  std::size_t ancilla;
};

/// A Clifford+T circuit rewritten as a CPS resource state plus an adaptive
/// Pauli measurement schedule. Qubits [0, data_width) are the data wires,
/// qubit data_width + k is the ancilla of the k-th T gate.
struct MsiProgram {
  std::size_t data_width = 0;
  CpsTarget cps;
  std::vector<ScheduledMeasurement> schedule;
  std::vector<PauliString> outputs;  // Z on each data wire

  std::size_t ancillas() const { return schedule.size(); }
  std::size_t width() const { return cps.n(); }
};

/// Accumulated conditional Clifford F. Measuring O on F|phi> is realized as
/// measuring F^dagger O F on |phi>.
class PauliFrame {
 public:
  explicit PauliFrame(std::size_t n) : frame_(n), inverse_(n) {}

  PauliString observe(const PauliString& base) const { return inverse_.conjugate(base); }

  /// F <- G F.
  void apply(const CliffordTableau& g, const CliffordTableau& g_inverse) {
    frame_ = compose(g, frame_);
    inverse_ = compose(inverse_, g_inverse);
  }

  const CliffordTableau& tableau() const { return frame_; }

 private:
  CliffordTableau frame_;
  CliffordTableau inverse_;
};

/// Replaces each T on wire q by CNOT(q -> fresh T|+> ancilla), a Z measurement
/// of the ancilla and a conditional S on q. All Cliffords move to the front to
/// form the CPS circuit; each conditional S becomes W S W^dagger with W the
/// Cliffords that follow its gadget.
inline MsiProgram compile_msi(const UniversalCircuit& circ) {
  circ.validate();
  const std::size_t w = circ.width;
  const std::size_t t = circ.t_count();
  const std::size_t total = w + t;
  CliffordCircuit cps_circuit{total, {}};
  std::vector<std::pair<std::size_t, std::size_t>> gadgets;  // (data qubit, index of its CNOT)
  for (const auto& g : circ.gates) {
    if (const auto* c = std::get_if<CliffordGate>(&g)) {
      cps_circuit.gates.push_back(*c);
    } else {
      const std::size_t q = std::get<TGate>(g).qubit;
      const auto ancilla = static_cast<std::uint32_t>(w + gadgets.size());
      gadgets.emplace_back(q, cps_circuit.gates.size());
      cps_circuit.gates.push_back({GateKind::CNOT, static_cast<std::uint32_t>(q), ancilla});
    }
  }
  std::vector<SingleQubitState> states;
  states.reserve(total);
  for (std::size_t q = 0; q < w; ++q) states.push_back(circ.input(q));
  for (std::size_t k = 0; k < t; ++k) states.push_back(SingleQubitState::magic());

  MsiProgram prog{w, CpsTarget(std::move(states), cps_circuit), {}, {}};
  for (std::size_t k = 0; k < gadgets.size(); ++k) {
    const auto [q, pos] = gadgets[k];
    CliffordCircuit later{total, {cps_circuit.gates.begin() + static_cast<std::ptrdiff_t>(pos) + 1,
                                  cps_circuit.gates.end()}};
    const CliffordTableau after = tableau_from_circuit(later);
    const CliffordTableau after_inv = after.inverse();
    CliffordTableau s(total), sdg(total);
    s.append({GateKind::S, static_cast<std::uint32_t>(q)});
    sdg.append({GateKind::Sdg, static_cast<std::uint32_t>(q)});
    prog.schedule.push_back({after.conjugate(embed_single(PauliAxis::Z, w + k, total)),
                             compose(after, compose(s, after_inv)), compose(after, compose(sdg, after_inv)), q,
                             w + k});
  }
  for (std::size_t q = 0; q < w; ++q) prog.outputs.push_back(embed_single(PauliAxis::Z, q, total));
  return prog;
}

/// Output bit string: bit q is 1 when data wire q read -1.
using OutputBits = std::vector<std::uint8_t>;

inline std::uint64_t bits_to_index(const OutputBits& bits) {
  std::uint64_t v = 0;
  for (std::size_t q = 0; q < bits.size(); ++q) v |= static_cast<std::uint64_t>(bits[q] & 1U) << q;
  return v;
}

/// Runs the schedule against any +-1 measurement oracle on a width-(n+t) state.
template <typename Measure>
OutputBits run_msi_with(const MsiProgram& program, Measure&& measure) {
  PauliFrame frame(program.width());
  for (const auto& step : program.schedule) {
    const PauliString obs = frame.observe(step.base);
    if (!obs.is_hermitian()) throw Error("frame produced a non-Hermitian observable");
    if (measure(obs) < 0) frame.apply(step.correction, step.correction_inverse);
  }
  OutputBits bits;
  bits.reserve(program.outputs.size());
  for (const auto& z : program.outputs) bits.push_back(measure(frame.observe(z)) < 0 ? 1 : 0);
  return bits;
}

inline OutputBits run_msi(const MsiProgram& program, KeptRegister& reg) {
  if (reg.width() != program.width()) throw DimensionError("register width does not match the program");
  return run_msi_with(program, [&](const PauliString& q) { return reg.measure(q); });
}

/// Uses the next copy of an adaptive session.
inline OutputBits run_msi(const MsiProgram& program, MeasurementSession& session) {
  if (session.mode() != SessionMode::adaptive) throw SessionError("MSI execution needs an adaptive session");
  if (session.width() != program.width()) throw DimensionError("session width does not match the program");
  session.next_copy();
  return run_msi_with(program, [&](const PauliString& q) { return session.measure(q); });
}

/// Exact output distribution of the compiled program on `rho`, by enumerating
/// every measurement branch of each eigenvector of rho. Branches whose
/// probability falls to `prune` or below are dropped. Index bit q is data wire q.
inline std::vector<double> msi_branch_distribution(const MsiProgram& program, const dense::DenseDensity& rho,
                                                   double prune = 0.0) {
  if (dense::qubits_of(rho.rows()) != program.width()) throw DimensionError("state width does not match program");
  std::vector<double> dist(std::size_t{1} << program.data_width, 0.0);
  const std::size_t n_sched = program.schedule.size();
  // `state` is unnormalized; its squared norm is the branch probability.
  std::function<void(std::size_t, const dense::DenseState&, const PauliFrame&, std::uint64_t)> walk;
  walk = [&](std::size_t step, const dense::DenseState& state, const PauliFrame& frame, std::uint64_t bits) {
    if (step == n_sched + program.outputs.size()) {
      dist[bits] += state.squaredNorm();
      return;
    }
    const bool scheduled = step < n_sched;
    const PauliString obs = frame.observe(scheduled ? program.schedule[step].base : program.outputs[step - n_sched]);
    const dense::DenseState flipped = dense::apply_pauli(state, obs);
    for (int outcome : {+1, -1}) {
      dense::DenseState post = 0.5 * (state + static_cast<double>(outcome) * flipped);
      if (post.squaredNorm() <= prune) continue;
      if (scheduled) {
        if (outcome > 0) {
          walk(step + 1, post, frame, bits);
        } else {
          PauliFrame next = frame;
          next.apply(program.schedule[step].correction, program.schedule[step].correction_inverse);
          walk(step + 1, post, next, bits);
        }
      } else {
        walk(step + 1, post, frame, outcome < 0 ? bits | (std::uint64_t{1} << (step - n_sched)) : bits);
      }
    }
  };
  const dense::PureEnsemble ens = dense::decompose(rho);
  for (std::size_t k = 0; k < ens.states.size(); ++k) {
    const double weight = ens.cdf[k] - (k == 0 ? 0.0 : ens.cdf[k - 1]);
    walk(0, std::sqrt(weight) * ens.states[k], PauliFrame(program.width()), 0);
  }
  return dist;
}

/// Z-basis output distribution of the original circuit by dense statevector simulation.
inline std::vector<double> ideal_output_distribution(const UniversalCircuit& circ) {
  circ.validate();
  dense::check_width(circ.width);
  std::vector<SingleQubitState> inputs;
  for (std::size_t q = 0; q < circ.width; ++q) inputs.push_back(circ.input(q));
  dense::DenseState psi = dense::product_state(inputs);
  for (const auto& g : circ.gates) {
    if (const auto* c = std::get_if<CliffordGate>(&g)) {
      dense::apply_gate(psi, *c);
    } else {
      dense::apply_1q(psi, dense::t_matrix(), std::get<TGate>(g).qubit);
    }
  }
  std::vector<double> dist(static_cast<std::size_t>(psi.size()));
  for (Eigen::Index b = 0; b < psi.size(); ++b) dist[static_cast<std::size_t>(b)] = std::norm(psi(b));
  return dist;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw DimensionError("distributions have different sizes");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

/// Random Clifford+T circuit: each layer is a T with probability t_fraction
/// (until max_t is reached), otherwise a random Clifford gate.
inline UniversalCircuit random_universal_circuit(std::size_t width, std::size_t depth, std::size_t max_t,
                                                 double t_fraction, Rng& rng) {
  UniversalCircuit c{width, {}, {}};
  std::size_t t = 0;
  for (std::size_t layer = 0; layer < depth; ++layer) {
    if (t < max_t && rng.bernoulli(t_fraction)) {
      c.gates.emplace_back(TGate{static_cast<std::uint32_t>(rng.below(width))});
      ++t;
    } else {
      c.gates.emplace_back(random_circuit(width, 1, rng).gates.front());
    }
  }
  return c;
}

struct MsiRunResult {
  bool accept = false;
  CertResult cert;
  std::optional<OutputBits> output;  // empty on abort
  double trace_distance_bound = 0;   // sqrt(epsilon)
};

/// Verify the resource state (non-i.i.d. verification with the given partition
/// sizes; N1 = N2 + 1 is plain certification plus one kept copy), then run the
/// adaptive schedule on the kept register if accepted.
inline MsiRunResult verify_and_run(const MsiProgram& program, const ProverSpec& prover, const VerifyConfig& vcfg,
                                   Rng& rng) {
  if (prover_width(prover) != program.width()) throw DimensionError("prover width does not match the program");
  const SamplingPlan plan(program.cps, vcfg.cert.mode);
  MeasurementSession session = open_session(prover, vcfg.n1, rng);
  VerifyResult v = verify_noniid(program.cps, plan, session, vcfg, rng);
  MsiRunResult r;
  r.accept = v.cert.accept;
  r.cert = std::move(v.cert);
  r.trace_distance_bound = std::sqrt(vcfg.cert.epsilon);
  if (r.accept) r.output = run_msi(program, v.kept);
  return r;
}

}  // namespace cpsverify
