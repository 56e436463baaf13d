#pragma once

// Modal (Fourier-sine Galerkin) simulation of
//
//   u_t = p u_xx - q u + d(t) f(u) + v(x),   u(t,0) = 0,  u(t,1) = U(t),
//
// with f(u) = sum_i phi_i K_i(u). Integrating the boundary value by parts gives
//
//   c_n' = -(p n^2 pi^2 + q) c_n - sqrt(2) p n pi (-1)^n U + d(t) f_n + v_n.
//
// Time stepping is exponential Euler: the diagonal is integrated exactly and
// the coupling (control, nonlocal term, forcing) is frozen at the step start.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "sgbc/controllers.hpp"
#include "sgbc/spectral.hpp"

namespace sgbc {

inline constexpr double kBlowupNorm = 1e12;

struct PlantParams {
  double p = 1.0;
  double q = 0.0;
};

// Disturbance signals d(t) with values in [-1, 1].

struct ConstantSignal {
  double level = 1.0;
};

/// `high` on the first half of each period, `low` on the second.
struct SquareSignal {
  double period = 1.0;
  double high = 1.0;
  double low = -1.0;
};

/// sin(2 pi freq t + phase); freq in cycles per unit time.
struct SinusoidSignal {
  double freq = 1.0;
  double phase = 0.0;
};

using Disturbance = std::variant<ConstantSignal, SquareSignal, SinusoidSignal>;

inline double disturbance_value(const Disturbance& d, double t) {
  return std::visit(overloaded{
                        [](const ConstantSignal& s) { return s.level; },
                        [t](const SquareSignal& s) {
                          const double phase = t / s.period - std::floor(t / s.period);
                          return phase < 0.5 ? s.high : s.low;
                        },
                        [t](const SinusoidSignal& s) {
                          return std::sin(2.0 * kPi * s.freq * t + s.phase);
                        },
                    },
                    d);
}

inline void validate(const Disturbance& d) {
  auto in_range = [](double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; };
  std::visit(overloaded{
                 [&](const ConstantSignal& s) {
                   if (!in_range(s.level)) throw std::invalid_argument("disturbance level outside [-1, 1]");
                 },
                 [&](const SquareSignal& s) {
                   if (!(s.period > 0.0) || !std::isfinite(s.period)) {
                     throw std::invalid_argument("square disturbance: period must be positive");
                   }
                   if (!in_range(s.high) || !in_range(s.low)) {
                     throw std::invalid_argument("square disturbance: levels outside [-1, 1]");
                   }
                 },
                 [&](const SinusoidSignal& s) {
                   if (!std::isfinite(s.freq) || !std::isfinite(s.phase)) {
                     throw std::invalid_argument("sinusoid disturbance: non-finite parameter");
                   }
                 },
             },
             d);
}

struct NonlocalComponent {
  Shape shape;
  Functional functional;
};

struct NonlocalTerm {
  std::vector<NonlocalComponent> terms;
  /// Growth bound of any unmodelled part of f; used by the design checks only.
  double remainder_bound = 0.0;
  Disturbance disturbance = ConstantSignal{};
};

struct OpenLoop {};

using Controller = std::variant<OpenLoop, StaticKernel, DynamicController>;

struct SimConfig {
  PlantParams plant;
  NonlocalTerm nonlocal;
  Controller controller = OpenLoop{};
  std::size_t N = 64;
  double dt = 1e-4;
  double T = 1.0;
  ModalProfile initial = ModalProfile::zeros(1);
  std::size_t record_stride = 1;
  bool record_snapshots = false;
  /// Constant-in-time source v(x), as sine coefficients.
  std::optional<ModalProfile> forcing;
};

inline void validate(const SimConfig& cfg) {
  if (!(cfg.plant.p > 0.0) || !std::isfinite(cfg.plant.p)) {
    throw std::invalid_argument("plant: p must be positive");
  }
  if (!std::isfinite(cfg.plant.q)) throw std::invalid_argument("plant: q must be finite");
  if (cfg.N < 1) throw std::invalid_argument("sim: N must be >= 1");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw std::invalid_argument("sim: dt must be positive");
  if (!(cfg.T >= cfg.dt) || !std::isfinite(cfg.T)) throw std::invalid_argument("sim: T must be >= dt");
  if (cfg.record_stride < 1) throw std::invalid_argument("sim: record_stride must be >= 1");
  if (cfg.initial.size() > cfg.N) {
    throw std::invalid_argument("sim: initial profile has more modes than N");
  }
  if (cfg.forcing && cfg.forcing->size() > cfg.N) {
    throw std::invalid_argument("sim: forcing has more modes than N");
  }
  if (!(cfg.nonlocal.remainder_bound >= 0.0)) {
    throw std::invalid_argument("nonlocal: remainder bound must be >= 0");
  }
  validate(cfg.nonlocal.disturbance);
}

struct SimState {
  std::vector<double> c;
  std::vector<double> xi;
};

struct StateDerivative {
  std::vector<double> dc;
  std::vector<double> dxi;
};

struct Trace {
  std::vector<double> times;
  std::vector<double> norm_u;
  std::vector<double> control;
  std::vector<std::vector<double>> xi;
  std::vector<ModalProfile> snapshots;
  std::optional<double> blowup_time;

  bool blew_up() const noexcept { return blowup_time.has_value(); }
  std::size_t size() const noexcept { return times.size(); }
};

/// (1 - exp(-lambda dt)) / lambda, with the removable singularity at 0.
inline double phi1(double lambda, double dt) {
  const double x = lambda * dt;
  if (std::abs(x) < 1e-6) return dt * (1.0 - x / 2.0 + x * x / 6.0);
  return -std::expm1(-x) / lambda;
}

/// A SimConfig with every per-mode constant precomputed. Immutable.
class ModalSystem {
 public:
  explicit ModalSystem(const SimConfig& cfg) : cfg_(cfg) {
    validate(cfg_);
    const std::size_t N = cfg_.N;
    const double p = cfg_.plant.p;
    const double q = cfg_.plant.q;
    lambda_.resize(N);
    decay_.resize(N);
    psi_.resize(N);
    boundary_.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      const double npi = static_cast<double>(i + 1) * kPi;
      lambda_[i] = p * npi * npi + q;
      decay_[i] = std::exp(-lambda_[i] * cfg_.dt);
      psi_[i] = phi1(lambda_[i], cfg_.dt);
      const double sign = (i % 2 == 0) ? -1.0 : 1.0;  // (-1)^n with n = i + 1
      boundary_[i] = -kSqrt2 * p * npi * sign;
    }
    for (const auto& t : cfg_.nonlocal.terms) {
      shapes_.push_back(to_vec(project(t.shape, N).coeffs()));
      functionals_.push_back(prepare(t.functional));
    }
    forcing_.assign(N, 0.0);
    if (cfg_.forcing) {
      for (std::size_t i = 0; i < cfg_.forcing->size(); ++i) forcing_[i] = (*cfg_.forcing)[i];
    }
    std::visit(overloaded{
                   [](const OpenLoop&) {},
                   [&](const StaticKernel& k) { kernel_ = truncate(k.modal, N); },
                   [&](const DynamicController& d) {
                     kernel_ = truncate(d.kernel().modal, N);
                     for (std::size_t i = 0; i < d.size(); ++i) {
                       const auto& term = d.terms()[i];
                       const double w2 = term.omega * term.omega;
                       xi_rate_.push_back(w2);
                       xi_decay_.push_back(std::exp(-w2 * cfg_.dt));
                       xi_psi_.push_back(phi1(w2, cfg_.dt));
                       xi_gain_.push_back(d.boundary_values()[i] - d.kernel_overlaps()[i]);
                       ctrl_functionals_.push_back(prepare(term.functional));
                     }
                   },
               },
               cfg_.controller);
  }

  const SimConfig& config() const noexcept { return cfg_; }
  std::size_t modes() const noexcept { return cfg_.N; }
  std::size_t controller_states() const noexcept { return xi_decay_.size(); }

  SimState initial_state() const {
    SimState s;
    s.c = to_vec(cfg_.initial.padded(cfg_.N).coeffs());
    if (const auto* d = std::get_if<DynamicController>(&cfg_.controller)) {
      s.xi.assign(d->states().begin(), d->states().end());
    }
    return s;
  }

  double control(const SimState& s) const {
    double U = dot(kernel_, s.c);
    for (std::size_t i = 0; i < xi_gain_.size(); ++i) U += xi_gain_[i] * s.xi[i];
    return U;
  }

  /// Full right-hand side, diagonal included.
  StateDerivative rhs(const SimState& s, double t) const {
    StateDerivative d = coupling(s, t);
    for (std::size_t i = 0; i < cfg_.N; ++i) d.dc[i] -= lambda_[i] * s.c[i];
    for (std::size_t i = 0; i < d.dxi.size(); ++i) {
      d.dxi[i] -= xi_rate_[i] * s.xi[i];
    }
    return d;
  }

  /// Everything except the diagonal decay terms.
  StateDerivative coupling(const SimState& s, double t) const {
    check_dims(s);
    StateDerivative d;
    d.dc.assign(cfg_.N, 0.0);
    const double U = control(s);
    double norm = -1.0;
    auto norm_u = [&] {
      if (norm < 0.0) norm = l2_norm(s.c);
      return norm;
    };
    const double dist = shapes_.empty() ? 0.0 : disturbance_value(cfg_.nonlocal.disturbance, t);
    std::vector<double> weights(shapes_.size());
    for (std::size_t j = 0; j < shapes_.size(); ++j) {
      weights[j] = dist * apply(functionals_[j], s.c, norm_u);
    }
    for (std::size_t i = 0; i < cfg_.N; ++i) {
      double g = boundary_[i] * U + forcing_[i];
      for (std::size_t j = 0; j < shapes_.size(); ++j) g += weights[j] * shapes_[j][i];
      d.dc[i] = g;
    }
    d.dxi.resize(ctrl_functionals_.size());
    for (std::size_t i = 0; i < ctrl_functionals_.size(); ++i) {
      d.dxi[i] = apply(ctrl_functionals_[i], s.c, norm_u);
    }
    return d;
  }

  SimState step(const SimState& s, double t) const {
    const StateDerivative g = coupling(s, t);
    SimState next;
    next.c.resize(cfg_.N);
    for (std::size_t i = 0; i < cfg_.N; ++i) next.c[i] = decay_[i] * s.c[i] + psi_[i] * g.dc[i];
    next.xi.resize(s.xi.size());
    for (std::size_t i = 0; i < s.xi.size(); ++i) {
      next.xi[i] = xi_decay_[i] * s.xi[i] + xi_psi_[i] * g.dxi[i];
    }
    return next;
  }

 private:
  static std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

  // NormScaled: weight A, empty psi. InnerProduct: weight A, psi coefficients.
  struct PreparedFunctional {
    double A = 0.0;
    std::vector<double> psi;
  };

  PreparedFunctional prepare(const Functional& f) const {
    return std::visit(overloaded{
                          [](const NormScaled& v) { return PreparedFunctional{v.A, {}}; },
                          [&](const InnerProduct& v) {
                            return PreparedFunctional{v.A, to_vec(project(v.psi, cfg_.N).coeffs())};
                          },
                      },
                      f);
  }

  template <typename NormFn>
  static double apply(const PreparedFunctional& f, const std::vector<double>& c, NormFn&& norm) {
    if (f.psi.empty()) return f.A * norm();
    return f.A * dot(f.psi, c);
  }

  static std::vector<double> truncate(const std::vector<double>& v, std::size_t N) {
    return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(v.size(), N))};
  }

  void check_dims(const SimState& s) const {
    if (s.c.size() != cfg_.N || s.xi.size() != xi_gain_.size()) {
      throw std::invalid_argument("ModalSystem: state dimensions do not match the configuration");
    }
  }

  SimConfig cfg_;
  std::vector<double> lambda_, decay_, psi_, boundary_, forcing_, kernel_;
  std::vector<std::vector<double>> shapes_;
  std::vector<PreparedFunctional> functionals_;
  std::vector<double> xi_rate_, xi_decay_, xi_psi_, xi_gain_;
  std::vector<PreparedFunctional> ctrl_functionals_;
};

inline StateDerivative modal_rhs(const SimState& s, const SimConfig& cfg, double t) {
  return ModalSystem(cfg).rhs(s, t);
}

inline SimState step(const SimState& s, const SimConfig& cfg, double t) {
  return ModalSystem(cfg).step(s, t);
}

inline Trace simulate(const SimConfig& cfg) {
  const ModalSystem sys(cfg);
  Trace tr;
  auto record = [&](const SimState& s, double t) {
    tr.times.push_back(t);
    tr.norm_u.push_back(l2_norm(s.c));
    tr.control.push_back(sys.control(s));
    tr.xi.push_back(s.xi);
    if (cfg.record_snapshots) tr.snapshots.emplace_back(s.c);
  };
  SimState s = sys.initial_state();
  record(s, 0.0);
  const auto steps = static_cast<std::size_t>(std::llround(cfg.T / cfg.dt));
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    SimState next = sys.step(s, t);
    const double t_next = static_cast<double>(k + 1) * cfg.dt;
    bool finite = true;
    for (double v : next.c) finite = finite && std::isfinite(v);
    for (double v : next.xi) finite = finite && std::isfinite(v);
    if (!finite || l2_norm(next.c) > kBlowupNorm) {
      tr.blowup_time = t_next;
      return tr;
    }
    s = std::move(next);
    if ((k + 1) % cfg.record_stride == 0 || k + 1 == steps) record(s, t_next);
  }
  return tr;
}

/// Negated least-squares slope of log ||u|| over samples with t in [t0, t1].
inline double decay_rate(const Trace& tr, double t0, double t1) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    if (t < t0 || t > t1) continue;
    if (!(tr.norm_u[i] > 0.0)) throw std::domain_error("decay_rate: nonpositive norm in window");
    const double y = std::log(tr.norm_u[i]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("decay_rate: fewer than two samples in window");
  const double den = static_cast<double>(n) * stt - st * st;
  if (!(den > 0.0)) throw std::invalid_argument("decay_rate: degenerate window");
  return -(static_cast<double>(n) * sty - st * sy) / den;
}

/// max ||u(t)|| / ||u(0)||
inline double overshoot(const Trace& tr) {
  if (tr.size() == 0) throw std::invalid_argument("overshoot: empty trace");
  if (!(tr.norm_u.front() > 0.0)) throw std::domain_error("overshoot: zero initial norm");
  double m = 0.0;
  for (double v : tr.norm_u) m = std::max(m, v);
  return m / tr.norm_u.front();
}

/// Checks the boundary identity of the target variable w = u - sum_i phi_i xi_i:
/// w(t,1) = U(t) - sum_i phi_i(1) xi_i must equal <k, w> = <k, u> - sum_i xi_i <k, phi_i>.
/// Returns the largest violation over the recorded samples.
inline double verify_transformation(const Trace& tr, const DynamicController& ctrl) {
  if (tr.snapshots.size() != tr.size()) {
    throw std::invalid_argument("verify_transformation: trace carries no modal snapshots");
  }
  double worst = 0.0;
  for (std::size_t s = 0; s < tr.size(); ++s) {
    const auto& xi = tr.xi[s];
    if (xi.size() != ctrl.size()) {
      throw std::invalid_argument("verify_transformation: controller state size mismatch");
    }
    double w1 = tr.control[s];
    double kw = control_static(ctrl.kernel(), tr.snapshots[s]);
    for (std::size_t i = 0; i < xi.size(); ++i) {
      w1 -= ctrl.boundary_values()[i] * xi[i];
      kw -= ctrl.kernel_overlaps()[i] * xi[i];
    }
    worst = std::max(worst, std::abs(w1 - kw));
  }
  return worst;
}

inline double verify_transformation(const Trace& tr, const StaticKernel& k) {
  return verify_transformation(tr, DynamicController(k, {}));
}

}  // namespace sgbc
