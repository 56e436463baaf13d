#pragma once

// Output formats for the command-line tool: CSV traces and JSON design reports.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgbc/gain_analysis.hpp"
#include "sgbc/scenario.hpp"
#include "sgbc/simulation.hpp"

namespace sgbc {

inline std::string format_number(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// `t,norm_u,U,xi_1,...,xi_n`, then one row per sample; a blow-up adds a
/// trailing `# blowup t=<time>` comment.
inline void write_trace_csv(std::ostream& out, const Trace& tr, std::size_t n_xi) {
  out << "t,norm_u,U";
  for (std::size_t i = 1; i <= n_xi; ++i) out << ",xi_" << i;
  out << '\n';
  for (std::size_t s = 0; s < tr.size(); ++s) {
    out << format_number(tr.times[s]) << ',' << format_number(tr.norm_u[s]) << ','
        << format_number(tr.control[s]);
    for (double x : tr.xi[s]) out << ',' << format_number(x);
    out << '\n';
  }
  if (tr.blowup_time) out << "# blowup t=" << format_number(*tr.blowup_time) << '\n';
}

/// Rounds every floating-point value to `digits` significant digits.
inline void round_json(nlohmann::json& j, int digits) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v)) j = std::stod(format_number(v, digits));
  } else if (j.is_structured()) {
    for (auto& el : j) round_json(el, digits);
  }
}

// ---------------------------------------------------------------------------
// Growth bounds of separable maps u -> sum_i phi_i K_i(u)

namespace detail {

inline bool same_shape(const Shape& a, const Shape& b) {
  if (a.index() != b.index()) return false;
  if (const auto* s = std::get_if<Sine>(&a)) return s->beta == std::get<Sine>(b).beta;
  if (const auto* s = std::get_if<Sinh>(&a)) return s->beta == std::get<Sinh>(b).beta;
  if (std::holds_alternative<Linear>(a)) return true;
  return std::get<TableQuadrature>(a).fn == std::get<TableQuadrature>(b).fn;
}

inline bool same_form(const Functional& a, const Functional& b) {
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<NormScaled>(a)) return true;
  return same_shape(std::get<InnerProduct>(a).psi, std::get<InnerProduct>(b).psi);
}

inline double amplitude(const Functional& f) {
  return std::visit([](const auto& v) { return v.A; }, f);
}

inline Functional with_amplitude(Functional f, double A) {
  std::visit([A](auto& v) { v.A = A; }, f);
  return f;
}

}  // namespace detail

struct SignedComponent {
  NonlocalComponent component;
  double sign = 1.0;
};

/// A constant M with ||sum_i s_i phi_i K_i(u)|| <= M ||u||. Terms sharing
/// shape and functional form are merged first, so an exact cancellation gives
/// M = 0. Norm-scaled terms are combined exactly; inner-product terms by
/// Cauchy-Schwarz.
inline double growth_bound(const std::vector<SignedComponent>& items) {
  std::vector<NonlocalComponent> groups;
  for (const auto& it : items) {
    const double A = it.sign * detail::amplitude(it.component.functional);
    bool merged = false;
    for (auto& g : groups) {
      if (detail::same_shape(g.shape, it.component.shape) &&
          detail::same_form(g.functional, it.component.functional)) {
        g.functional = detail::with_amplitude(g.functional, detail::amplitude(g.functional) + A);
        merged = true;
        break;
      }
    }
    if (!merged) groups.push_back({it.component.shape, detail::with_amplitude(it.component.functional, A)});
  }
  std::vector<std::pair<double, Shape>> norm_terms;
  double bound = 0.0;
  for (const auto& g : groups) {
    const double A = detail::amplitude(g.functional);
    if (A == 0.0) continue;
    if (std::holds_alternative<NormScaled>(g.functional)) {
      norm_terms.emplace_back(A, g.shape);
    } else {
      bound += functional_bound(g.functional) * shape_l2_norm(g.shape);
    }
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < norm_terms.size(); ++i) {
    const double ni = shape_l2_norm(norm_terms[i].second);
    sq += norm_terms[i].first * norm_terms[i].first * ni * ni;
    for (std::size_t j = i + 1; j < norm_terms.size(); ++j) {
      sq += 2.0 * norm_terms[i].first * norm_terms[j].first *
            shape_inner(norm_terms[i].second, norm_terms[j].second);
    }
  }
  return bound + std::sqrt(std::max(0.0, sq));
}

/// ISS gain (input sup to state) certified for a static kernel, if known:
/// 1 / (p pi^2 + q) for the zero kernel, b(r, mu) / (p pi^2 + q) for the
/// single-mode law with q >= 0.
inline std::optional<double> certified_static_gain(const StaticKernel& k, double p, double q,
                                                   const AchievableOptions& opt = {}) {
  const double lambda1 = p * kPi * kPi + q;
  if (k.kind == KernelKind::Zero && lambda1 > 0.0) return 1.0 / lambda1;
  if (k.kind == KernelKind::SingleMode && q >= 0.0) {
    return b_achievable(k.r, mu_of(p, q), opt).value / lambda1;
  }
  return std::nullopt;
}

namespace detail {

inline nlohmann::json condition(bool applicable, double lhs, bool hypothetical = false) {
  nlohmann::json c;
  c["applicable"] = applicable;
  if (applicable) {
    c["lhs"] = lhs;
    c["pass"] = lhs < 1.0;
  } else {
    c["lhs"] = nullptr;
    c["pass"] = nullptr;
  }
  if (hypothetical) c["hypothetical"] = true;
  return c;
}

}  // namespace detail

/// Evaluates every small-gain condition that applies to a scenario.
/// "pass" reflects the condition belonging to the configured controller.
inline nlohmann::json design_report(const Scenario& sc, const AchievableOptions& opt = {}) {
  using nlohmann::json;
  const double p = sc.sim.plant.p;
  const double q = sc.sim.plant.q;
  const double lambda1 = p * kPi * kPi + q;
  const double remainder = sc.sim.nonlocal.remainder_bound;

  std::vector<SignedComponent> f_items;
  for (const auto& c : sc.sim.nonlocal.terms) f_items.push_back({c, 1.0});
  const double M_f = remainder + growth_bound(f_items);

  json rep;
  rep["name"] = sc.name;
  rep["plant"] = {{"p", p}, {"q", q}, {"mu", q >= 0.0 ? json(mu_of(p, q)) : json(nullptr)}};
  rep["growth_bound"] = M_f;

  const StaticKernel* kernel = nullptr;
  const DynamicController* dyn = nullptr;
  if (const auto* k = std::get_if<StaticKernel>(&sc.sim.controller)) kernel = k;
  if (const auto* d = std::get_if<DynamicController>(&sc.sim.controller)) {
    dyn = d;
    kernel = &d->kernel();
  }
  std::optional<double> gain;
  if (kernel) gain = certified_static_gain(*kernel, p, q, opt);
  json ctrl;
  ctrl["kind"] = sc.controller_kind;
  ctrl["kernel"] = kernel ? json(to_string(kernel->kind)) : json(nullptr);
  ctrl["r"] = kernel ? json(kernel->r) : json(nullptr);
  ctrl["gain"] = gain ? json(*gain) : json(nullptr);
  ctrl["gamma"] = gain ? json(*gain * p * kPi * kPi) : json(nullptr);
  rep["controller"] = ctrl;

  json cond;
  // Zero kernel, i.e. the uncontrolled plant.
  cond["open_loop"] = detail::condition(lambda1 > 0.0, M_f / lambda1);
  // The configured static kernel.
  cond["static_kernel"] = detail::condition(gain.has_value(), gain ? M_f * *gain : 0.0);
  // Necessary for every static kernel: the lower bound on the gain.
  double g1 = 0.0;
  if (q >= 0.0) g1 = gamma_lower(mu_of(p, q), 1).value;
  cond["static_limit"] = detail::condition(q >= 0.0, M_f * g1 / lambda1);

  // Dynamic loop: the configured one, or a hypothetical one reusing f's terms.
  std::vector<TermSpec> terms = dyn ? sc.controller_terms : sc.nonlocal_terms;
  DesignCheck chk;
  chk.p = p;
  chk.q = q;
  if (gain) chk.gamma = *gain * p * kPi * kPi;
  std::vector<SignedComponent> mismatch = f_items;
  bool residuals_known = true;
  for (const auto& t : terms) {
    mismatch.push_back({{t.resolved_shape, t.functional}, -1.0});
    DesignTerm dt;
    dt.P = functional_bound(t.functional);
    dt.omega = t.omega;
    dt.shape_norm = shape_l2_norm(t.resolved_shape);
    if (has_second_derivative(t.resolved_shape)) {
      dt.residual_norm = residual_shape(t.resolved_shape, p, q, t.omega).norm;
    } else {
      residuals_known = false;
    }
    chk.terms.push_back(dt);
  }
  chk.M = remainder + growth_bound(mismatch);
  bool dyn_applicable = residuals_known && !terms.empty();
  double dyn_lhs = 0.0;
  if (dyn_applicable) {
    try {
      dyn_lhs = small_gain_dynamic(chk).lhs;
    } catch (const std::invalid_argument&) {
      dyn_applicable = false;  // gain needed but unknown
    }
  }
  cond["dynamic"] = detail::condition(dyn_applicable, dyn_lhs, dyn == nullptr);
  cond["dynamic"]["M"] = chk.M;
  rep["conditions"] = cond;

  json thresholds = json::array();
  for (const auto& t : sc.nonlocal_terms) {
    if (!std::holds_alternative<NormScaled>(t.functional)) continue;
    json th;
    th["A"] = t.A;
    th["omega"] = t.omega;
    th["shape_norm"] = shape_l2_norm(t.resolved_shape);
    th["open_loop"] = lambda1 > 0.0 ? json(static_amplitude_threshold(1.0 / lambda1, t.resolved_shape))
                                    : json(nullptr);
    th["static_limit"] = q >= 0.0 ? json(static_limit_amplitude_threshold(p, q, t.resolved_shape, 1))
                                  : json(nullptr);
    const bool canonical = has_second_derivative(t.resolved_shape) &&
                           residual_shape(t.resolved_shape, p, q, t.omega).norm <= 1e-9;
    th["dynamic"] = canonical ? json(dynamic_amplitude_threshold(t.omega, t.resolved_shape)) : json(nullptr);
    thresholds.push_back(th);
  }
  rep["thresholds"] = thresholds;
  rep["crossover_frequency"] = crossover_frequency(p);

  std::string checked = "open_loop";
  if (sc.controller_kind == "static") checked = "static_kernel";
  if (sc.controller_kind == "dynamic") checked = "dynamic";
  rep["checked"] = checked;
  rep["pass"] = cond[checked]["pass"].is_boolean() && cond[checked]["pass"].get<bool>();
  return rep;
}

}  // namespace sgbc
