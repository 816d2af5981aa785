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

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cpsverify/certifier.hpp"
#include "cpsverify/dense.hpp"
#include "cpsverify/errors.hpp"
#include "cpsverify/msi.hpp"
#include "cpsverify/prover.hpp"
#include "cpsverify/target.hpp"

namespace cpsverify {

using Json = nlohmann::ordered_json;

/// Target files, or inline text (inline wins when both are given).
struct TargetConfig {
  std::string states_path;
  std::string circuit_path;
  std::string states_text;
  std::string circuit_text;

  friend bool operator==(const TargetConfig&, const TargetConfig&) = default;
};

struct RotationConfig {
  std::size_t qubit = 0;
  PauliAxis axis = PauliAxis::Z;
  double angle = 0;

  friend bool operator==(const RotationConfig&, const RotationConfig&) = default;
};

/// Noise of an honest prover. A one-element rate list applies to every qubit.
struct HonestConfig {
  std::vector<double> depolarizing;
  std::vector<double> dephasing;
  std::vector<double> amplitude_damping;
  std::vector<RotationConfig> rotations;
  std::vector<std::pair<std::string, double>> post_pauli;

  friend bool operator==(const HonestConfig&, const HonestConfig&) = default;
};

struct ProverConfig {
  std::string kind = "honest";  // honest | correlated | fixed
  HonestConfig honest;
  std::vector<std::pair<double, HonestConfig>> strategies;
  // fixed: product state from `fixed_states`, optionally pushed through the
  // target circuit, mixed with white noise.
  std::string fixed_states;
  bool fixed_apply_circuit = true;
  double fixed_white_noise = 0;

  friend bool operator==(const ProverConfig&, const ProverConfig&) = default;
};

struct VerifyOptions {
  std::optional<std::uint64_t> n1;  // default 10 * n2
  std::optional<std::uint64_t> n2;  // default N_iid
  double c_noniid = 1.0;

  friend bool operator==(const VerifyOptions&, const VerifyOptions&) = default;
};

struct SweepConfig {
  std::string parameter = "depolarizing";  // depolarizing | dephasing | amplitude_damping | white_noise
  std::vector<double> grid;
  std::uint64_t trials = 100;

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct OutputConfig {
  std::string result;
  std::string tallies;
  std::string sweep;

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct ExperimentConfig {
  TargetConfig target;
  ProverConfig prover;
  CertConfig cert;
  std::optional<VerifyOptions> verify;
  std::optional<SweepConfig> sweep;
  std::optional<std::uint64_t> seed;
  OutputConfig outputs;
  /// Directory relative paths resolve against; not serialized.
  std::string base_dir;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.target == b.target && a.prover == b.prover && a.cert == b.cert && a.verify == b.verify &&
           a.sweep == b.sweep && a.seed == b.seed && a.outputs == b.outputs;
  }
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path resolve(const std::string& base, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative() && !base.empty()) p = std::filesystem::path(base) / p;
  return p;
}

inline std::vector<double> rate_list(const Json& j, const char* what) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) throw ValidationError(std::string(what) + ": expected numbers");
      out.push_back(v.get<double>());
    }
  } else {
    throw ValidationError(std::string(what) + ": expected a number or a list");
  }
  return out;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ValidationError(std::string(where) + ": unknown key '" + k + "'");
  }
}

inline HonestConfig honest_from_json(const Json& j) {
  check_keys(j, {"kind", "depolarizing", "dephasing", "amplitude_damping", "rotations", "post_pauli"}, "prover");
  HonestConfig h;
  if (j.contains("depolarizing")) h.depolarizing = rate_list(j["depolarizing"], "depolarizing");
  if (j.contains("dephasing")) h.dephasing = rate_list(j["dephasing"], "dephasing");
  if (j.contains("amplitude_damping")) h.amplitude_damping = rate_list(j["amplitude_damping"], "amplitude_damping");
  for (const auto& r : j.value("rotations", Json::array())) {
    check_keys(r, {"qubit", "axis", "angle"}, "rotation");
    h.rotations.push_back({r.at("qubit").get<std::size_t>(), parse_axis(r.at("axis").get<std::string>().at(0)),
                           r.at("angle").get<double>()});
  }
  for (const auto& t : j.value("post_pauli", Json::array())) {
    if (!t.is_array() || t.size() != 2) throw ValidationError("post_pauli entries are [pauli, probability] pairs");
    h.post_pauli.emplace_back(t[0].get<std::string>(), t[1].get<double>());
  }
  return h;
}

inline Json honest_to_json(const HonestConfig& h) {
  Json j;
  j["kind"] = "honest";
  if (!h.depolarizing.empty()) j["depolarizing"] = h.depolarizing;
  if (!h.dephasing.empty()) j["dephasing"] = h.dephasing;
  if (!h.amplitude_damping.empty()) j["amplitude_damping"] = h.amplitude_damping;
  if (!h.rotations.empty()) {
    j["rotations"] = Json::array();
    for (const auto& r : h.rotations) {
      j["rotations"].push_back({{"qubit", r.qubit}, {"axis", std::string(1, axis_char(r.axis))}, {"angle", r.angle}});
    }
  }
  if (!h.post_pauli.empty()) {
    j["post_pauli"] = Json::array();
    for (const auto& [p, prob] : h.post_pauli) j["post_pauli"].push_back({p, prob});
  }
  return j;
}

}  // namespace detail

inline ExperimentConfig experiment_from_json(const Json& j, std::string base_dir = {}) {
  detail::check_keys(j, {"target", "prover", "cert", "verify", "sweep", "seed", "outputs"}, "config");
  ExperimentConfig c;
  c.base_dir = std::move(base_dir);
  if (!j.contains("target")) throw ValidationError("config: missing 'target'");
  const Json& t = j["target"];
  detail::check_keys(t, {"states", "circuit", "states_text", "circuit_text"}, "target");
  c.target = {detail::get_or<std::string>(t, "states", ""), detail::get_or<std::string>(t, "circuit", ""),
              detail::get_or<std::string>(t, "states_text", ""), detail::get_or<std::string>(t, "circuit_text", "")};
  if (c.target.states_path.empty() && c.target.states_text.empty()) {
    throw ValidationError("target: need 'states' or 'states_text'");
  }

  const Json p = j.value("prover", Json{{"kind", "honest"}});
  c.prover.kind = p.value("kind", "honest");
  if (c.prover.kind == "honest") {
    c.prover.honest = detail::honest_from_json(p);
  } else if (c.prover.kind == "correlated") {
    detail::check_keys(p, {"kind", "strategies"}, "prover");
    for (const auto& s : p.at("strategies")) {
      detail::check_keys(s, {"probability", "prover"}, "strategy");
      c.prover.strategies.emplace_back(s.at("probability").get<double>(),
                                       detail::honest_from_json(s.value("prover", Json::object())));
    }
    if (c.prover.strategies.empty()) throw ValidationError("correlated prover needs strategies");
  } else if (c.prover.kind == "fixed") {
    detail::check_keys(p, {"kind", "states", "apply_circuit", "white_noise"}, "prover");
    c.prover.fixed_states = p.at("states").get<std::string>();
    c.prover.fixed_apply_circuit = p.value("apply_circuit", true);
    c.prover.fixed_white_noise = p.value("white_noise", 0.0);
  } else {
    throw ValidationError("prover kind must be honest, correlated or fixed");
  }

  const Json cert = j.value("cert", Json::object());
  detail::check_keys(cert, {"epsilon", "delta", "k", "mode", "samples"}, "cert");
  c.cert.epsilon = cert.value("epsilon", c.cert.epsilon);
  c.cert.delta = cert.value("delta", c.cert.delta);
  c.cert.k = cert.value("k", c.cert.k);
  c.cert.mode = parse_mode(cert.value("mode", std::string("exclude")));
  if (cert.contains("samples")) c.cert.samples = cert["samples"].get<std::uint64_t>();
  c.cert.validate();

  if (j.contains("verify")) {
    const Json& v = j["verify"];
    detail::check_keys(v, {"n1", "n2", "c_noniid"}, "verify");
    VerifyOptions o;
    if (v.contains("n1")) o.n1 = v["n1"].get<std::uint64_t>();
    if (v.contains("n2")) o.n2 = v["n2"].get<std::uint64_t>();
    o.c_noniid = v.value("c_noniid", 1.0);
    c.verify = o;
  }
  if (j.contains("sweep")) {
    const Json& s = j["sweep"];
    detail::check_keys(s, {"parameter", "grid", "trials"}, "sweep");
    SweepConfig sw;
    sw.parameter = s.value("parameter", sw.parameter);
    sw.grid = s.at("grid").get<std::vector<double>>();
    sw.trials = s.value("trials", sw.trials);
    if (sw.grid.empty()) throw ValidationError("sweep grid is empty");
    if (sw.trials == 0) throw ValidationError("sweep needs at least one trial");
    if (sw.parameter != "depolarizing" && sw.parameter != "dephasing" && sw.parameter != "amplitude_damping" &&
        sw.parameter != "white_noise") {
      throw ValidationError("unknown sweep parameter '" + sw.parameter + "'");
    }
    c.sweep = sw;
  }
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  const Json o = j.value("outputs", Json::object());
  detail::check_keys(o, {"result", "tallies", "sweep"}, "outputs");
  c.outputs = {o.value("result", ""), o.value("tallies", ""), o.value("sweep", "")};
  return c;
}

inline Json experiment_to_json(const ExperimentConfig& c) {
  Json j;
  Json t = Json::object();
  if (!c.target.states_path.empty()) t["states"] = c.target.states_path;
  if (!c.target.circuit_path.empty()) t["circuit"] = c.target.circuit_path;
  if (!c.target.states_text.empty()) t["states_text"] = c.target.states_text;
  if (!c.target.circuit_text.empty()) t["circuit_text"] = c.target.circuit_text;
  j["target"] = t;
  if (c.prover.kind == "honest") {
    j["prover"] = detail::honest_to_json(c.prover.honest);
  } else if (c.prover.kind == "correlated") {
    Json s = Json::array();
    for (const auto& [prob, h] : c.prover.strategies) {
      s.push_back({{"probability", prob}, {"prover", detail::honest_to_json(h)}});
    }
    j["prover"] = {{"kind", "correlated"}, {"strategies", s}};
  } else {
    j["prover"] = {{"kind", "fixed"},
                   {"states", c.prover.fixed_states},
                   {"apply_circuit", c.prover.fixed_apply_circuit},
                   {"white_noise", c.prover.fixed_white_noise}};
  }
  j["cert"] = {{"epsilon", c.cert.epsilon}, {"delta", c.cert.delta}, {"k", c.cert.k}, {"mode", mode_name(c.cert.mode)}};
  if (c.cert.samples) j["cert"]["samples"] = *c.cert.samples;
  if (c.verify) {
    Json v = Json::object();
    if (c.verify->n1) v["n1"] = *c.verify->n1;
    if (c.verify->n2) v["n2"] = *c.verify->n2;
    v["c_noniid"] = c.verify->c_noniid;
    j["verify"] = v;
  }
  if (c.sweep) j["sweep"] = {{"parameter", c.sweep->parameter}, {"grid", c.sweep->grid}, {"trials", c.sweep->trials}};
  if (c.seed) j["seed"] = *c.seed;
  Json o = Json::object();
  if (!c.outputs.result.empty()) o["result"] = c.outputs.result;
  if (!c.outputs.tallies.empty()) o["tallies"] = c.outputs.tallies;
  if (!c.outputs.sweep.empty()) o["sweep"] = c.outputs.sweep;
  if (!o.empty()) j["outputs"] = o;
  return j;
}

inline ExperimentConfig parse_experiment(std::string_view text, std::string base_dir = {}) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return experiment_from_json(j, std::move(base_dir));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_experiment(const std::string& path) {
  return parse_experiment(detail::read_file(path), std::filesystem::path(path).parent_path().string());
}

inline std::shared_ptr<const CpsTarget> load_target(const ExperimentConfig& c) {
  const std::string states = !c.target.states_text.empty()
                                 ? c.target.states_text
                                 : detail::read_file(detail::resolve(c.base_dir, c.target.states_path));
  std::vector<SingleQubitState> s = parse_state_spec(states);
  if (s.empty()) throw ValidationError("target has no qubits");
  CliffordCircuit circ{s.size(), {}};
  std::string text = c.target.circuit_text;
  if (text.empty() && !c.target.circuit_path.empty()) {
    text = detail::read_file(detail::resolve(c.base_dir, c.target.circuit_path));
  }
  if (!text.empty()) {
    circ = parse_clifford_circuit(text);
    if (circ.width < s.size()) circ.width = s.size();  // idle trailing wires
  }
  return std::make_shared<const CpsTarget>(std::move(s), std::move(circ));
}

namespace detail {

inline void add_rates(std::vector<Channel>& out, const std::vector<double>& rates, std::size_t n, int which) {
  if (rates.empty()) return;
  if (rates.size() != 1 && rates.size() != n) {
    throw DimensionError("noise list has " + std::to_string(rates.size()) + " entries for " + std::to_string(n) +
                         " qubits");
  }
  for (std::size_t q = 0; q < n; ++q) {
    const double r = rates.size() == 1 ? rates[0] : rates[q];
    if (r == 0) continue;
    if (which == 0) out.push_back(Depolarizing{r, q});
    if (which == 1) out.push_back(Dephasing{r, q});
    if (which == 2) out.push_back(AmplitudeDamping{r, q});
  }
}

}  // namespace detail

inline HonestIid build_honest(const HonestConfig& h, std::shared_ptr<const CpsTarget> target) {
  const std::size_t n = target->n();
  HonestIid out{target, {}, {}};
  detail::add_rates(out.pre_channels, h.depolarizing, n, 0);
  detail::add_rates(out.pre_channels, h.dephasing, n, 1);
  detail::add_rates(out.pre_channels, h.amplitude_damping, n, 2);
  for (const auto& r : h.rotations) out.pre_channels.push_back(UnitaryRotation{r.axis, r.angle, r.qubit});
  for (const auto& [p, prob] : h.post_pauli) out.post_pauli.terms.emplace_back(parse_observable(p), prob);
  validate_prover(out);
  return out;
}

inline ProverSpec build_prover(const ProverConfig& p, const std::shared_ptr<const CpsTarget>& target) {
  if (p.kind == "honest") return build_honest(p.honest, target);
  if (p.kind == "correlated") {
    CorrelatedClassical c;
    for (const auto& [prob, h] : p.strategies) c.strategies.emplace_back(prob, build_honest(h, target));
    validate_prover(ProverSpec{c});
    return c;
  }
  const auto states = parse_state_spec(p.fixed_states);
  if (states.size() != target->n()) throw DimensionError("fixed prover state count differs from target width");
  dense::check_width(target->n());
  dense::DenseDensity rho = dense::density_of(dense::product_state(states));
  if (p.fixed_apply_circuit) dense::apply_circuit_density(rho, target->circuit());
  if (!(p.fixed_white_noise >= 0 && p.fixed_white_noise <= 1)) throw ValidationError("white_noise must lie in [0, 1]");
  const auto d = static_cast<double>(rho.rows());
  rho = (1 - p.fixed_white_noise) * rho +
        p.fixed_white_noise * dense::DenseDensity::Identity(rho.rows(), rho.cols()) / d;
  return FixedAlternative{std::move(rho)};
}

/// Prover with the sweep parameter set to `value` on every qubit.
inline ProverConfig with_sweep_value(ProverConfig p, const std::string& parameter, double value) {
  if (parameter == "white_noise") {
    if (p.kind != "fixed") throw ValidationError("white_noise sweeps need a fixed prover");
    p.fixed_white_noise = value;
    return p;
  }
  if (p.kind != "honest") throw ValidationError(parameter + " sweeps need an honest prover");
  if (parameter == "depolarizing") p.honest.depolarizing = {value};
  if (parameter == "dephasing") p.honest.dephasing = {value};
  if (parameter == "amplitude_damping") p.honest.amplitude_damping = {value};
  return p;
}

inline Json to_json(const CertResult& r) {
  return {{"n", r.n},          {"mode", mode_name(r.mode)}, {"epsilon", r.epsilon}, {"delta", r.delta},
          {"k", r.k},          {"N", r.samples},            {"X_bar", r.x_bar},     {"W_bar", r.w_bar},
          {"threshold", r.threshold}, {"accept", r.accept}, {"seed", r.seed}};
}

inline std::string tallies_csv(const CertResult& r) {
  std::ostringstream out;
  out << "qubit,axis,count,signed_sum\n";
  for (const auto& t : r.tallies) out << t.qubit << ',' << axis_char(t.axis) << ',' << t.count << ',' << t.signed_sum << '\n';
  return out.str();
}

inline std::string state_token(const SingleQubitState& s) {
  const auto& r = s.bloch();
  std::ostringstream out;
  out.precision(17);
  out << "bloch " << r[0] << ' ' << r[1] << ' ' << r[2];
  return out.str();
}

inline Json to_json(const MsiProgram& p) {
  Json states = Json::array();
  for (const auto& s : p.cps.states()) states.push_back(state_token(s));
  Json schedule = Json::array();
  for (const auto& m : p.schedule) {
    schedule.push_back({{"base", m.base.str()},
                        {"data_qubit", m.data_qubit},
                        {"ancilla", m.ancilla},
                        {"on_minus", "S " + std::to_string(m.data_qubit) + " conjugated by the later Cliffords"},
                        {"correction_x_images", Json::array()},
                        {"correction_z_images", Json::array()}});
    for (std::size_t q = 0; q < p.width(); ++q) {
      schedule.back()["correction_x_images"].push_back(m.correction.x_image(q).str());
      schedule.back()["correction_z_images"].push_back(m.correction.z_image(q).str());
    }
  }
  Json outputs = Json::array();
  for (const auto& o : p.outputs) outputs.push_back(o.str());
  return {{"data_width", p.data_width}, {"ancillas", p.ancillas()},  {"width", p.width()},
          {"cps_states", states},       {"cps_circuit", p.cps.circuit().str()},
          {"schedule", schedule},       {"outputs", outputs}};
}

/// Copies N for one certification run of the config.
inline std::uint64_t certification_samples(const ExperimentConfig& c, const SamplingPlan& plan) {
  return c.cert.samples.value_or(sample_size_iid(plan, c.cert));
}

inline std::uint64_t resolved_seed(const ExperimentConfig& c) { return c.seed.value_or(0); }

/// One i.i.d. certification run as described by the config.
inline CertResult run_certify(const ExperimentConfig& c) {
  const auto target = load_target(c);
  const ProverSpec prover = build_prover(c.prover, target);
  const SamplingPlan plan(*target, c.cert.mode);
  CertConfig cfg = c.cert;
  cfg.seed = resolved_seed(c);
  Rng rng(derive_seed(cfg.seed, "certify", 0));
  MeasurementSession session = open_session(prover, certification_samples(c, plan), rng);
  return certify_iid(*target, plan, session, cfg, rng);
}

inline VerifyConfig verify_config(const ExperimentConfig& c, const SamplingPlan& plan) {
  VerifyConfig v;
  v.cert = c.cert;
  v.cert.seed = resolved_seed(c);
  const VerifyOptions o = c.verify.value_or(VerifyOptions{});
  v.n2 = o.n2.value_or(sample_size_iid(plan, c.cert));
  v.n1 = o.n1.value_or(10 * v.n2);
  v.c_noniid = o.c_noniid;
  return v;
}

struct VerifyReport {
  VerifyConfig config;
  CertResult cert;
  std::uint64_t kept_index = 0;
  double kept_fidelity = 0;     // dense fidelity of the kept copy with the target
  std::uint64_t n_noniid = 0;   // non-i.i.d. sample size for comparison (0 on overflow)
};

inline VerifyReport run_verify(const ExperimentConfig& c) {
  const auto target = load_target(c);
  const ProverSpec prover = build_prover(c.prover, target);
  const SamplingPlan plan(*target, c.cert.mode);
  VerifyReport rep;
  rep.config = verify_config(c, plan);
  Rng rng(derive_seed(rep.config.cert.seed, "verify", 0));
  MeasurementSession session = open_session(prover, rep.config.n1, rng);
  VerifyResult r = verify_noniid(*target, plan, session, rep.config, rng);
  rep.cert = r.cert;
  rep.kept_index = r.partition.keep;
  rep.kept_fidelity = dense::fidelity(r.kept.state(), dense::build_cps_dense(*target));
  try {
    rep.n_noniid = sample_size_noniid(sample_size_iid(plan, c.cert), target->n(), c.cert, rep.config.c_noniid);
  } catch (const ValidationError&) {
    rep.n_noniid = 0;
  }
  return rep;
}

inline Json to_json(const VerifyReport& r) {
  return {{"result", to_json(r.cert)},
          {"N1", r.config.n1},
          {"N2", r.config.n2},
          {"discarded", r.config.discard_size()},
          {"kept_index", r.kept_index},
          {"kept_fidelity", r.kept_fidelity},
          {"N_noniid", r.n_noniid}};
}

struct SweepRow {
  double param = 0;
  std::uint64_t trials = 0;
  std::uint64_t n_per_trial = 0;
  double mean_w = 0;
  double stderr_w = 0;
  double accept_rate = 0;
  double exact_w = 0;  // oracle witness of the single-copy state (not in the CSV)
};

/// Shortest round-trip text of a double, used to tag grid points.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Acceptance vs noise. Trial t at grid value p uses the seed
/// derive_seed(seed, "sweep/<p>", t), so adding grid points leaves other rows unchanged.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& c, unsigned jobs = 1) {
  if (!c.sweep) throw ValidationError("config has no sweep section");
  const SweepConfig& sw = *c.sweep;
  const auto target = load_target(c);
  const SamplingPlan plan(*target, c.cert.mode);
  const std::uint64_t n = certification_samples(c, plan);
  const std::uint64_t seed = resolved_seed(c);
  std::vector<ProverSpec> provers;
  std::vector<SweepRow> rows;
  for (double p : sw.grid) {
    provers.push_back(build_prover(with_sweep_value(c.prover, sw.parameter, p), target));
    SweepRow row;
    row.param = p;
    row.trials = sw.trials;
    row.n_per_trial = n;
    row.exact_w = target->n() <= dense::kMaxQubits ? dense::exact_witness(prover_density(provers.back()), *target)
                                                   : std::nan("");
    rows.push_back(row);
  }
  const std::uint64_t total = sw.grid.size() * sw.trials;
  std::vector<double> w(total);
  std::vector<std::uint8_t> acc(total);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&]() {
    for (std::uint64_t job = next++; job < total; job = next++) {
      const std::size_t g = job / sw.trials;
      const std::uint64_t t = job % sw.trials;
      Rng rng(derive_seed(seed, "sweep/" + format_double(sw.grid[g]), t));
      MeasurementSession session = open_session(provers[g], n, rng);
      CertConfig cfg = c.cert;
      cfg.seed = seed;
      cfg.samples = n;
      const CertResult r = certify_iid(*target, plan, session, cfg, rng);
      w[job] = r.w_bar;
      acc[job] = r.accept;
    }
  };
  jobs = std::max(1U, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex m;
    for (unsigned k = 0; k < jobs; ++k) {
      pool.emplace_back([&]() {
        try {
          worker();
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          failure = std::current_exception();
          next = total;
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (std::size_t g = 0; g < rows.size(); ++g) {
    double sum = 0, sum2 = 0, a = 0;
    for (std::uint64_t t = 0; t < sw.trials; ++t) {
      const double v = w[g * sw.trials + t];
      sum += v;
      sum2 += v * v;
      a += acc[g * sw.trials + t];
    }
    const double k = static_cast<double>(sw.trials);
    rows[g].mean_w = sum / k;
    const double var = sw.trials > 1 ? std::max(0.0, (sum2 - k * rows[g].mean_w * rows[g].mean_w) / (k - 1)) : 0.0;
    rows[g].stderr_w = std::sqrt(var / k);
    rows[g].accept_rate = a / k;
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "param,trials,N_per_trial,mean_W,stderr_W,accept_rate\n";
  for (const auto& r : rows) {
    out << format_double(r.param) << ',' << r.trials << ',' << r.n_per_trial << ',' << format_double(r.mean_w) << ','
        << format_double(r.stderr_w) << ',' << format_double(r.accept_rate) << '\n';
  }
  return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

}  // namespace cpsverify
