#pragma once

// JSON scenario files (schema 1). Every object is checked for unknown keys so
// that a typo fails loudly instead of silently falling back to a default.

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sgbc/controllers.hpp"
#include "sgbc/simulation.hpp"

namespace sgbc {

class scenario_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One f-term or controller term as written in the file.
struct TermSpec {
  double A = 0.0;
  double omega = 1.0;
  std::string shape = "auto";
  std::optional<double> beta;
  Shape resolved_shape;
  Functional functional;
};

struct Scenario {
  std::string name;
  SimConfig sim;
  std::vector<TermSpec> nonlocal_terms;
  std::string controller_kind = "open";
  std::vector<TermSpec> controller_terms;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw scenario_error(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto a : allowed) ok = ok || it.key() == a;
    if (!ok) throw scenario_error("unknown key '" + (path.empty() ? "" : path + ".") + it.key() + "'");
  }
}

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline double get_number(const json& j, const std::string& path, const std::string& key,
                         std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw scenario_error("missing key '" + join(path, key) + "'");
  }
  const json& v = j.at(key);
  if (!v.is_number()) throw scenario_error("'" + join(path, key) + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw scenario_error("'" + join(path, key) + "' must be finite");
  return d;
}

inline std::size_t get_count(const json& j, const std::string& path, const std::string& key,
                             std::optional<std::size_t> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw scenario_error("missing key '" + join(path, key) + "'");
  }
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw scenario_error("'" + join(path, key) + "' must be a positive integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

inline std::string get_string(const json& j, const std::string& path, const std::string& key,
                              std::optional<std::string> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw scenario_error("missing key '" + join(path, key) + "'");
  }
  const json& v = j.at(key);
  if (!v.is_string()) throw scenario_error("'" + join(path, key) + "' must be a string");
  return v.get<std::string>();
}

inline Shape explicit_shape(const std::string& kind, double beta, const std::string& where) {
  if (kind == "sine") return Sine{beta};
  if (kind == "sinh") {
    if (beta > kSinhRateLimit) throw scenario_error(where + ": sinh rate too large");
    return Sinh{beta};
  }
  if (kind == "linear") return Linear{};
  throw scenario_error(where + ": shape must be one of auto, sine, sinh, linear");
}

inline Functional parse_functional(const json& j, const std::string& path, double A) {
  if (j.is_string()) {
    if (j.get<std::string>() == "norm") return NormScaled{A};
    throw scenario_error("'" + path + "' must be \"norm\" or an inner-product object");
  }
  check_keys(j, path, {"kind", "shape", "beta"});
  const std::string kind = get_string(j, path, "kind");
  if (kind == "norm") {
    if (j.contains("shape") || j.contains("beta")) {
      throw scenario_error("'" + path + "': norm functional takes no shape");
    }
    return NormScaled{A};
  }
  if (kind != "inner") throw scenario_error("'" + join(path, "kind") + "' must be norm or inner");
  const std::string shape = get_string(j, path, "shape");
  const double beta = shape == "linear" ? 0.0 : get_number(j, path, "beta");
  if (shape != "linear" && !(beta > 0.0)) throw scenario_error("'" + join(path, "beta") + "' must be positive");
  return InnerProduct{A, explicit_shape(shape, beta, path)};
}

inline TermSpec parse_term(const json& j, const std::string& path, const PlantParams& plant) {
  check_keys(j, path, {"A", "omega", "shape", "beta", "functional"});
  TermSpec t;
  t.A = get_number(j, path, "A");
  t.omega = get_number(j, path, "omega");
  if (!(t.omega > 0.0)) throw scenario_error("'" + join(path, "omega") + "' must be positive");
  t.shape = get_string(j, path, "shape", std::string("auto"));
  if (j.contains("beta")) t.beta = get_number(j, path, "beta");
  if (t.shape == "auto") {
    if (t.beta) throw scenario_error("'" + join(path, "beta") + "' is not used with shape auto");
    try {
      t.resolved_shape = canonical_shape(plant.p, plant.q, t.omega);
    } catch (const std::exception& e) {
      throw scenario_error(path + ": " + e.what());
    }
  } else {
    const double beta = t.beta.value_or(t.omega);
    if (t.shape != "linear" && !(beta > 0.0)) throw scenario_error("'" + join(path, "beta") + "' must be positive");
    t.resolved_shape = explicit_shape(t.shape, beta, path);
  }
  t.functional = j.contains("functional") ? parse_functional(j.at("functional"), join(path, "functional"), t.A)
                                          : Functional{NormScaled{t.A}};
  return t;
}

inline std::vector<TermSpec> parse_terms(const json& j, const std::string& path, const PlantParams& plant) {
  if (!j.is_array()) throw scenario_error("'" + path + "' must be an array");
  std::vector<TermSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(parse_term(j[i], path + "[" + std::to_string(i) + "]", plant));
  }
  return out;
}

inline Disturbance parse_disturbance(const json& j, const std::string& path) {
  if (!j.is_object()) throw scenario_error("'" + path + "' must be an object");
  const std::string kind = get_string(j, path, "kind");
  Disturbance d;
  if (kind == "constant") {
    check_keys(j, path, {"kind", "level"});
    d = ConstantSignal{get_number(j, path, "level", 1.0)};
  } else if (kind == "square") {
    check_keys(j, path, {"kind", "period", "levels"});
    SquareSignal s;
    s.period = get_number(j, path, "period");
    if (j.contains("levels")) {
      const json& lv = j.at("levels");
      if (!lv.is_array() || lv.size() != 2 || !lv[0].is_number() || !lv[1].is_number()) {
        throw scenario_error("'" + join(path, "levels") + "' must be a pair of numbers");
      }
      s.high = lv[0].get<double>();
      s.low = lv[1].get<double>();
    }
    d = s;
  } else if (kind == "sinusoid") {
    check_keys(j, path, {"kind", "freq", "phase"});
    d = SinusoidSignal{get_number(j, path, "freq"), get_number(j, path, "phase", 0.0)};
  } else {
    throw scenario_error("'" + join(path, "kind") + "' must be constant, square or sinusoid");
  }
  try {
    validate(d);
  } catch (const std::invalid_argument& e) {
    throw scenario_error(path + ": " + e.what());
  }
  return d;
}

inline ModalProfile parse_modes(const json& j, const std::string& path, std::size_t N) {
  check_keys(j, path, {"modes"});
  const json& m = j.contains("modes") ? j.at("modes") : json::array();
  if (!m.is_array()) throw scenario_error("'" + join(path, "modes") + "' must be an array");
  std::vector<std::pair<int, double>> modes;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::string p = join(path, "modes") + "[" + std::to_string(i) + "]";
    check_keys(m[i], p, {"n", "c"});
    const std::size_t n = get_count(m[i], p, "n");
    if (n > N) throw scenario_error("'" + join(p, "n") + "' exceeds sim.N");
    modes.emplace_back(static_cast<int>(n), get_number(m[i], p, "c"));
  }
  return ModalProfile::from_modes(N, modes);
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::get_number;
  using detail::get_string;
  check_keys(j, "", {"schema", "name", "plant", "nonlocal", "controller", "sim"});
  if (!j.contains("schema")) throw scenario_error("missing key 'schema'");
  if (!j.at("schema").is_number_integer() || j.at("schema").get<int>() != 1) {
    throw scenario_error("'schema' must be 1");
  }
  Scenario sc;
  sc.name = get_string(j, "", "name", std::string("scenario"));

  if (!j.contains("plant")) throw scenario_error("missing key 'plant'");
  check_keys(j.at("plant"), "plant", {"p", "q"});
  sc.sim.plant.p = get_number(j.at("plant"), "plant", "p", 1.0);
  sc.sim.plant.q = get_number(j.at("plant"), "plant", "q", 0.0);
  if (!(sc.sim.plant.p > 0.0)) throw scenario_error("'plant.p' must be positive");

  if (j.contains("nonlocal")) {
    const auto& nl = j.at("nonlocal");
    check_keys(nl, "nonlocal", {"terms", "remainder_bound", "disturbance"});
    if (nl.contains("terms")) sc.nonlocal_terms = detail::parse_terms(nl.at("terms"), "nonlocal.terms", sc.sim.plant);
    sc.sim.nonlocal.remainder_bound = get_number(nl, "nonlocal", "remainder_bound", 0.0);
    if (!(sc.sim.nonlocal.remainder_bound >= 0.0)) {
      throw scenario_error("'nonlocal.remainder_bound' must be >= 0");
    }
    if (nl.contains("disturbance")) {
      sc.sim.nonlocal.disturbance = detail::parse_disturbance(nl.at("disturbance"), "nonlocal.disturbance");
    }
    for (const auto& t : sc.nonlocal_terms) {
      sc.sim.nonlocal.terms.push_back({t.resolved_shape, t.functional});
    }
  }

  nlohmann::json simj = j.contains("sim") ? j.at("sim") : nlohmann::json::object();
  check_keys(simj, "sim", {"N", "dt", "T", "record_stride", "snapshots", "initial", "xi0", "forcing"});
  sc.sim.N = detail::get_count(simj, "sim", "N", std::size_t{64});
  sc.sim.dt = get_number(simj, "sim", "dt", 1e-4);
  sc.sim.T = get_number(simj, "sim", "T", 1.0);
  sc.sim.record_stride = detail::get_count(simj, "sim", "record_stride", std::size_t{1});
  if (simj.contains("snapshots")) {
    if (!simj.at("snapshots").is_boolean()) throw scenario_error("'sim.snapshots' must be a boolean");
    sc.sim.record_snapshots = simj.at("snapshots").get<bool>();
  }
  if (!(sc.sim.dt > 0.0)) throw scenario_error("'sim.dt' must be positive");
  if (!(sc.sim.T >= sc.sim.dt)) throw scenario_error("'sim.T' must be >= sim.dt");
  sc.sim.initial = simj.contains("initial") ? detail::parse_modes(simj.at("initial"), "sim.initial", sc.sim.N)
                                            : ModalProfile::zeros(sc.sim.N);
  if (simj.contains("forcing")) sc.sim.forcing = detail::parse_modes(simj.at("forcing"), "sim.forcing", sc.sim.N);

  nlohmann::json cj = j.contains("controller") ? j.at("controller") : nlohmann::json{{"kind", "open"}};
  check_keys(cj, "controller", {"kind", "kernel", "r", "modes", "terms"});
  sc.controller_kind = get_string(cj, "controller", "kind");
  if (sc.controller_kind == "open") {
    for (const char* k : {"kernel", "r", "modes", "terms"}) {
      if (cj.contains(k)) throw scenario_error(std::string("'controller.") + k + "' is not used by an open loop");
    }
    sc.sim.controller = OpenLoop{};
  } else if (sc.controller_kind == "static" || sc.controller_kind == "dynamic") {
    const std::string kname = get_string(cj, "controller", "kernel", std::string("zero"));
    const double r = get_number(cj, "controller", "r", 0.0);
    if (!(r >= 0.0)) throw scenario_error("'controller.r' must be >= 0");
    const std::size_t modes = detail::get_count(cj, "controller", "modes", sc.sim.N);
    StaticKernel k;
    try {
      if (kname == "zero") {
        k = zero_kernel();
      } else if (kname == "single_mode") {
        k = single_mode(r);
      } else if (kname == "backstepping") {
        k = backstepping(r, sc.sim.plant.p, sc.sim.plant.q, modes);
      } else {
        throw scenario_error("'controller.kernel' must be zero, single_mode or backstepping");
      }
    } catch (const scenario_error&) {
      throw;
    } catch (const std::exception& e) {
      throw scenario_error(std::string("controller: ") + e.what());
    }
    if (sc.controller_kind == "static") {
      if (cj.contains("terms")) throw scenario_error("'controller.terms' is only used by a dynamic controller");
      if (simj.contains("xi0")) throw scenario_error("'sim.xi0' is only used by a dynamic controller");
      sc.sim.controller = k;
    } else {
      const nlohmann::json terms = cj.contains("terms") ? cj.at("terms") : nlohmann::json("nonlocal");
      if (terms.is_string()) {
        if (terms.get<std::string>() != "nonlocal") {
          throw scenario_error("'controller.terms' must be \"nonlocal\" or an array");
        }
        sc.controller_terms = sc.nonlocal_terms;
      } else {
        sc.controller_terms = detail::parse_terms(terms, "controller.terms", sc.sim.plant);
      }
      std::vector<ControllerTerm> ct;
      for (const auto& t : sc.controller_terms) ct.push_back({t.resolved_shape, t.functional, t.omega});
      std::vector<double> xi0;
      if (simj.contains("xi0")) {
        const auto& x = simj.at("xi0");
        if (!x.is_array()) throw scenario_error("'sim.xi0' must be an array");
        for (const auto& v : x) {
          if (!v.is_number()) throw scenario_error("'sim.xi0' entries must be numbers");
          xi0.push_back(v.get<double>());
        }
        if (xi0.size() != ct.size()) throw scenario_error("'sim.xi0' needs one entry per controller term");
      }
      try {
        sc.sim.controller = DynamicController(k, std::move(ct), std::move(xi0));
      } catch (const std::exception& e) {
        throw scenario_error(std::string("controller: ") + e.what());
      }
    }
  } else {
    throw scenario_error("'controller.kind' must be open, static or dynamic");
  }
  try {
    validate(sc.sim);
  } catch (const std::invalid_argument& e) {
    throw scenario_error(e.what());
  }
  return sc;
}

inline Scenario parse_scenario_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw scenario_error(std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(j);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

// ---------------------------------------------------------------------------
// Built-in scenarios for the reference experiments. The files under
// scenarios/ carry the same content.

namespace builtin {

inline constexpr const char* kCaptionInitial = R"("initial": {"modes": [
      {"n": 1, "c": 1.0}, {"n": 2, "c": 2.0}, {"n": 3, "c": 0.1},
      {"n": 37, "c": 0.01}, {"n": 38, "c": 0.01}, {"n": 39, "c": 0.01},
      {"n": 40, "c": 0.01}, {"n": 41, "c": 0.01}, {"n": 42, "c": 0.01}]})";

inline std::string open_loop(const std::string& name, double A) {
  return std::string(R"({
  "schema": 1,
  "name": ")") + name + R"(",
  "plant": {"p": 1.0, "q": 0.0},
  "nonlocal": {"terms": [{"A": )" + std::to_string(A) + R"(, "omega": 20.0, "shape": "auto"}]},
  "controller": {"kind": "open"},
  "sim": {"N": 64, "dt": 1e-4, "T": 1.0, "record_stride": 10,
    )" + kCaptionInitial + R"(}
})";
}

inline std::string dynamic_loop(const std::string& name, double r, double A, double T) {
  return std::string(R"({
  "schema": 1,
  "name": ")") + name + R"(",
  "plant": {"p": 1.0, "q": 0.0},
  "nonlocal": {"terms": [{"A": )" + std::to_string(A) + R"(, "omega": 20.0, "shape": "auto"}]},
  "controller": {"kind": "dynamic", "kernel": "single_mode", "r": )" + std::to_string(r) +
         R"(, "terms": "nonlocal"},
  "sim": {"N": 64, "dt": 1e-4, "T": )" + std::to_string(T) + R"(, "record_stride": 10,
    )" + kCaptionInitial + R"(, "xi0": [0.0]}
})";
}

inline std::string fig1() { return open_loop("fig1", 500.0); }
inline std::string fig3() { return dynamic_loop("fig3", 0.0, 500.0, 5.0); }
inline std::string fig4() { return dynamic_loop("fig4", 0.9, 500.0, 5.0); }

}  // namespace builtin

}  // namespace sgbc
