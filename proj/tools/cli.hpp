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

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cpsverify/experiment.hpp"

namespace cpsverify::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitReject = 2;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string config;
  std::string out;
  unsigned jobs = 1;
};

/// --seed, then the config's seed, then CPSVERIFY_SEED, then 0.
inline std::uint64_t pick_seed(const GlobalOptions& g, std::optional<std::uint64_t> from_config = std::nullopt) {
  if (g.seed) return *g.seed;
  if (from_config) return *from_config;
  if (const char* env = std::getenv("CPSVERIFY_SEED"); env != nullptr && *env != '\0') {
    std::uint64_t v = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError("CPSVERIFY_SEED is not an integer");
    return v;
  }
  return 0;
}

inline std::string fixed6(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << (std::abs(v) < 5e-7 ? 0.0 : v);
  return s.str();
}

inline std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

inline std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : " ") + p;
  return out;
}

inline ExperimentConfig load_config(const GlobalOptions& g, const std::string& positional) {
  const std::string path = !positional.empty() ? positional : g.config;
  if (path.empty()) throw ValidationError("no config given (positional argument or --config)");
  ExperimentConfig c = load_experiment(path);
  c.seed = pick_seed(g, c.seed);
  if (!g.mode.empty()) c.cert.mode = parse_mode(g.mode);
  return c;
}

/// --out wins; a path from the config resolves against the config's directory.
inline std::string output_path(const GlobalOptions& g, const ExperimentConfig& c, const std::string& from_config) {
  if (!g.out.empty()) return g.out;
  return from_config.empty() ? std::string() : detail::resolve(c.base_dir, from_config).string();
}

/// Writes to the file if one is given; `echo` also copies it to stdout.
inline void emit(const std::string& text, const std::string& path, std::ostream& out, bool echo = false) {
  if (!path.empty()) write_file(path, text);
  if (path.empty() || echo) out << text;
}

inline int cmd_chi(const std::vector<std::string>& tokens, std::ostream& out) {
  const auto states = parse_state_spec(join(tokens));
  if (states.size() != 1) throw ValidationError("chi takes exactly one state");
  const ChiTable t = chi(states[0]);
  const auto& r = states[0].bloch();
  out << "bloch=(" << fixed6(r[0]) << ", " << fixed6(r[1]) << ", " << fixed6(r[2]) << ")\n";
  for (PauliAxis a : kAllAxes) out << "chi(" << axis_char(a) << ")=" << fixed6(t[a]) << '\n';
  out << "w=" << fixed6(t.w) << '\n';
  return kExitOk;
}

inline std::shared_ptr<const CpsTarget> target_from_path(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") return load_target(load_experiment(path));
  // A bare circuit file: the input states do not affect C P C^dagger.
  const CliffordCircuit c = parse_clifford_circuit(detail::read_file(path));
  return std::make_shared<const CpsTarget>(std::vector<SingleQubitState>(c.width, SingleQubitState::zero()), c);
}

inline int cmd_backprop(const std::string& path, std::size_t qubit, const std::string& axis, std::ostream& out) {
  const auto t = target_from_path(path);
  if (qubit >= t->n()) throw DimensionError("qubit " + std::to_string(qubit) + " outside width " + std::to_string(t->n()));
  if (axis.size() != 1) throw ParseError("axis must be one of I, X, Y, Z");
  out << backprop_observable(*t, {qubit, parse_axis(axis[0]), 1}).str() << '\n';
  return kExitOk;
}

struct SampleSizeOptions {
  std::string config;
  std::string states;
  std::optional<double> epsilon, delta, c_noniid;
  std::optional<unsigned> k;
};

inline int cmd_sample_size(const GlobalOptions& g, const SampleSizeOptions& o, std::ostream& out) {
  std::shared_ptr<const CpsTarget> target;
  CertConfig cfg;
  double c_noniid = 1.0;
  if (!o.states.empty()) {
    std::string text = o.states;
    for (char& ch : text) {
      if (ch == ';' || ch == ',') ch = '\n';
    }
    // "T T 0" lists one token per qubit.
    if (text.find('\n') == std::string::npos) {
      for (char& ch : text) {
        if (ch == ' ') ch = '\n';
      }
    }
    auto states = parse_state_spec(text);
    const std::size_t n = states.size();
    target = std::make_shared<const CpsTarget>(std::move(states), CliffordCircuit{n, {}});
  } else {
    const ExperimentConfig c = load_config(g, o.config);
    target = load_target(c);
    cfg = c.cert;
    if (c.verify) c_noniid = c.verify->c_noniid;
  }
  if (!g.mode.empty()) cfg.mode = parse_mode(g.mode);
  if (o.epsilon) cfg.epsilon = *o.epsilon;
  if (o.delta) cfg.delta = *o.delta;
  if (o.k) cfg.k = *o.k;
  if (o.c_noniid) c_noniid = *o.c_noniid;
  const SamplingPlan plan(*target, cfg.mode);
  const std::uint64_t n_iid = sample_size_iid(plan, cfg);
  out << "n=" << target->n() << " mode=" << mode_name(cfg.mode) << " m=" << fixed6(plan.m())
      << " m_eff=" << fixed6(plan.m_eff()) << '\n';
  out << "N_iid=" << n_iid << '\n';
  try {
    out << "N_noniid=" << sample_size_noniid(n_iid, target->n(), cfg, c_noniid) << '\n';
  } catch (const ValidationError&) {
    out << "N_noniid=overflow\n";
  }
  return kExitOk;
}

inline int cmd_certify(const GlobalOptions& g, const std::string& path, std::optional<std::uint64_t> samples,
                       const std::string& tallies, std::ostream& out) {
  ExperimentConfig c = load_config(g, path);
  if (samples) c.cert.samples = *samples;
  const CertResult r = run_certify(c);
  emit(to_json(r).dump(2) + "\n", output_path(g, c, c.outputs.result), out, true);
  const std::string tpath =
      !tallies.empty() ? tallies
                       : (c.outputs.tallies.empty() ? "" : detail::resolve(c.base_dir, c.outputs.tallies).string());
  if (!tpath.empty()) write_file(tpath, tallies_csv(r));
  return r.accept ? kExitOk : kExitReject;
}

inline int cmd_verify(const GlobalOptions& g, const std::string& path, std::ostream& out) {
  const ExperimentConfig c = load_config(g, path);
  const VerifyReport r = run_verify(c);
  emit(to_json(r).dump(2) + "\n", output_path(g, c, c.outputs.result), out, true);
  return r.cert.accept ? kExitOk : kExitReject;
}

inline int cmd_msi_compile(const GlobalOptions& g, const std::string& path, std::ostream& out) {
  const MsiProgram p = compile_msi(parse_universal_circuit(detail::read_file(path)));
  emit(to_json(p).dump(2) + "\n", g.out, out);
  return kExitOk;
}

struct MsiRunOptions {
  std::string circuit;
  std::uint64_t shots = 1;
  double epsilon = 0.2;
  double delta = 0.1;
  double depolarizing = 0.0;
  std::optional<std::uint64_t> n1;
};

inline int cmd_msi_run(const GlobalOptions& g, const MsiRunOptions& o, std::ostream& out) {
  const UniversalCircuit circ = parse_universal_circuit(detail::read_file(o.circuit));
  const MsiProgram p = compile_msi(circ);
  const auto target = std::make_shared<const CpsTarget>(p.cps);
  HonestIid prover{target, {}, {}};
  if (o.depolarizing > 0) {
    for (std::size_t q = 0; q < p.width(); ++q) prover.pre_channels.push_back(Depolarizing{o.depolarizing, q});
  }
  VerifyConfig v;
  v.cert.epsilon = o.epsilon;
  v.cert.delta = o.delta;
  if (!g.mode.empty()) v.cert.mode = parse_mode(g.mode);
  const SamplingPlan plan(p.cps, v.cert.mode);
  v.n2 = sample_size_iid(plan, v.cert);
  v.n1 = o.n1.value_or(v.n2 + 1);
  v.cert.seed = pick_seed(g);
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t aborted = 0;
  for (std::uint64_t s = 0; s < o.shots; ++s) {
    Rng rng(derive_seed(v.cert.seed, "msi-run", s));
    const MsiRunResult r = verify_and_run(p, prover, v, rng);
    if (!r.accept) {
      ++aborted;
      continue;
    }
    std::string bits;
    for (auto b : *r.output) bits += b ? '1' : '0';
    ++counts[bits];
  }
  out << "width=" << p.width() << " ancillas=" << p.ancillas() << " N_test=" << v.n2 << " N1=" << v.n1 << '\n';
  out << "accepted=" << (o.shots - aborted) << " aborted=" << aborted << '\n';
  out << "trace_distance_bound=" << fixed6(std::sqrt(o.epsilon)) << '\n';
  const bool ideal_ok = circ.width <= dense::kMaxQubits;
  const std::vector<double> ideal = ideal_ok ? ideal_output_distribution(circ) : std::vector<double>{};
  out << "bits(wire0..),count" << (ideal_ok ? ",ideal_probability" : "") << '\n';
  for (const auto& [bits, n] : counts) {
    out << bits << ',' << n;
    if (ideal_ok) {
      std::uint64_t idx = 0;
      for (std::size_t q = 0; q < bits.size(); ++q) idx |= static_cast<std::uint64_t>(bits[q] == '1') << q;
      out << ',' << fixed6(ideal[idx]);
    }
    out << '\n';
  }
  return aborted == o.shots ? kExitReject : kExitOk;
}

inline int cmd_sweep(const GlobalOptions& g, const std::string& path, std::ostream& out) {
  const ExperimentConfig c = load_config(g, path);
  const std::string csv = sweep_csv(run_sweep(c, g.jobs));
  emit(csv, output_path(g, c, c.outputs.sweep), out);
  return kExitOk;
}

/// Quick oracle-backed invariant checks.
inline int cmd_selftest(const GlobalOptions& g, std::ostream& out) {
  Rng rng(pick_seed(g));
  int failures = 0;
  auto report = [&](const char* name, bool ok, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    failures += !ok;
  };

  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(5);
    const CliffordCircuit c = random_circuit(n, 6 * n, rng);
    const dense::DenseDensity u = dense::unitary(c);
    PauliString p(n);
    for (std::size_t q = 0; q < n; ++q) p.set_axis(q, kAllAxes[rng.below(4)]);
    const Eigen::MatrixXcd diff = dense::pauli_matrix(conjugate(tableau_from_circuit(c), p)) - u * dense::pauli_matrix(p) * u.adjoint();
    worst = std::max(worst, diff.cwiseAbs().maxCoeff());
  }
  report("tableau-vs-dense", worst < 1e-10, "max entry error " + sci(worst));

  const ChiTable t = chi(SingleQubitState::magic());
  report("chi-magic", std::abs(t.w - 1 / std::sqrt(2.0)) < 1e-12, "w=" + fixed6(t.w));

  worst = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    std::vector<SingleQubitState> s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(SingleQubitState::from_angles(3 * rng.uniform(), 6 * rng.uniform()));
    const auto target = std::make_shared<const CpsTarget>(s, random_circuit(n, 8, rng));
    HonestIid h{target, {Depolarizing{0.3 * rng.uniform(), rng.below(n)}}, {}};
    const CompiledHonest ch(h);
    const double exact = dense::exact_witness(honest_density(h), *target);
    for (SamplingMode m : {SamplingMode::exclude_identity, SamplingMode::include_identity}) {
      const double e = expected_witness(*target, SamplingPlan(*target, m), [&](const PauliString& q) { return ch.expectation(q); });
      worst = std::max(worst, std::abs(e - exact));
    }
  }
  report("witness-identity", worst < 1e-9, "max error " + sci(worst));

  worst = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const UniversalCircuit c = random_universal_circuit(2, 10, 3, 0.3, rng);
    const MsiProgram p = compile_msi(c);
    worst = std::max(worst, total_variation(msi_branch_distribution(p, dense::density_of(dense::build_cps_dense(p.cps))),
                                            ideal_output_distribution(c)));
  }
  report("msi-branches", worst < 1e-9, "max TVD " + sci(worst));

  out << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? kExitOk : kExitError;
}

/// Entry point shared by the executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certification and verification of Clifford-enhanced product states"};
  app.name("cpsverify");
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "master seed (falls back to the config, then CPSVERIFY_SEED)");
  app.add_option("--mode", g.mode, "sampling mode: exclude | include")->check(CLI::IsMember({"exclude", "include"}));
  app.add_option("--config", g.config, "experiment config (JSON)");
  app.add_option("--out", g.out, "write the main output here instead of stdout");
  app.add_option("--jobs", g.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);

  int code = kExitOk;

  std::vector<std::string> chi_tokens;
  auto* chi_cmd = app.add_subcommand("chi", "print the characteristic function of one qubit state");
  chi_cmd->add_option("state", chi_tokens, "0 1 + - +i -i T | bloch rx ry rz | angles theta phi")->required();
  chi_cmd->callback([&] { code = cmd_chi(chi_tokens, out); });

  std::string bp_target, bp_axis;
  std::size_t bp_qubit = 0;
  auto* bp = app.add_subcommand("backprop", "print C P_i C^dagger");
  bp->add_option("target", bp_target, "circuit file or experiment config")->required();
  bp->add_option("qubit", bp_qubit, "qubit index")->required();
  bp->add_option("axis", bp_axis, "I, X, Y or Z")->required();
  bp->callback([&] { code = cmd_backprop(bp_target, bp_qubit, bp_axis, out); });

  SampleSizeOptions ss;
  auto* ss_cmd = app.add_subcommand("sample-size", "print N_iid and N_noniid");
  ss_cmd->add_option("config", ss.config, "experiment config");
  ss_cmd->add_option("--states", ss.states, "state tokens, e.g. \"T T 0\" (instead of a config)");
  ss_cmd->add_option("--epsilon", ss.epsilon);
  ss_cmd->add_option("--delta", ss.delta);
  ss_cmd->add_option("--k", ss.k);
  ss_cmd->add_option("--c-noniid", ss.c_noniid);
  ss_cmd->callback([&] { code = cmd_sample_size(g, ss, out); });

  std::string cert_path, cert_tallies;
  std::optional<std::uint64_t> cert_samples;
  auto* cert = app.add_subcommand("certify", "one i.i.d. certification run");
  cert->add_option("config", cert_path, "experiment config");
  cert->add_option("--samples", cert_samples, "override N");
  cert->add_option("--tallies", cert_tallies, "per-setting tallies CSV");
  cert->callback([&] { code = cmd_certify(g, cert_path, cert_samples, cert_tallies, out); });

  std::string verify_path;
  auto* ver = app.add_subcommand("verify", "one non-i.i.d. verification run");
  ver->add_option("config", verify_path, "experiment config");
  ver->callback([&] { code = cmd_verify(g, verify_path, out); });

  auto* msi = app.add_subcommand("msi", "magic-state-injection programs");
  msi->require_subcommand(1);
  std::string compile_path;
  auto* compile = msi->add_subcommand("compile", "print the compiled program as JSON");
  compile->add_option("circuit", compile_path, "Clifford+T circuit file")->required();
  compile->callback([&] { code = cmd_msi_compile(g, compile_path, out); });
  MsiRunOptions mr;
  auto* run = msi->add_subcommand("run", "verify the resource state, then run the program");
  run->add_option("circuit", mr.circuit, "Clifford+T circuit file")->required();
  run->add_option("--shots", mr.shots, "independent verify-and-run repetitions")->check(CLI::PositiveNumber);
  run->add_option("--epsilon", mr.epsilon);
  run->add_option("--delta", mr.delta);
  run->add_option("--depolarizing", mr.depolarizing, "per-qubit depolarizing noise of the prover");
  run->add_option("--n1", mr.n1, "copies received (default: test set + 1)");
  run->callback([&] { code = cmd_msi_run(g, mr, out); });

  std::string sweep_path;
  auto* sweep = app.add_subcommand("sweep", "acceptance rate across a noise grid, as CSV");
  sweep->add_option("config", sweep_path, "experiment config with a sweep section");
  sweep->callback([&] { code = cmd_sweep(g, sweep_path, out); });

  auto* self = app.add_subcommand("selftest", "oracle-backed invariant checks");
  self->callback([&] { code = cmd_selftest(g, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    app.exit(e, err, err);
    return kExitError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return code;
}

}  // namespace cpsverify::cli
