#pragma once

// Gain computations for boundary-controlled reaction-diffusion loops:
//   - the kernel-independent lower bound sqrt(g_m(mu)) on any ISS gain numerator,
//   - the achievable bound b(r, mu) of the single-mode law and its closed-form
//     upper estimate ub(r),
//   - exact steady-state gains of a given static kernel,
//   - static and dynamic small-gain checks and the amplitude thresholds they imply.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sgbc/controllers.hpp"
#include "sgbc/spectral.hpp"

namespace sgbc {

class degenerate_kernel_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// mu = sqrt(q / p) / pi, for q >= 0.
inline double mu_of(double p, double q) {
  if (!(p > 0.0)) throw std::invalid_argument("mu_of: p must be positive");
  if (!(q >= 0.0)) throw std::invalid_argument("mu_of: q must be >= 0");
  return std::sqrt(q / p) / kPi;
}

// ---------------------------------------------------------------------------
// Lower bound g_m(mu): largest eigenvalue of diag(d) - c h h^T

struct LowerBoundMatrix {
  std::vector<double> d;
  double c = 0.0;
  std::vector<double> h;
};

inline LowerBoundMatrix lower_bound_matrix(int m, double mu) {
  if (m < 1) throw std::invalid_argument("g_lower: m must be >= 1");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("g_lower: mu must be >= 0");
  LowerBoundMatrix M;
  M.d.resize(m);
  M.h.resize(m);
  if (mu == 0.0) {
    M.c = 6.0 / (kPi * kPi);
    for (int n = 1; n <= m; ++n) {
      const double n2 = static_cast<double>(n) * n;
      M.d[n - 1] = 1.0 / (n2 * n2);
      M.h[n - 1] = ((n % 2) ? -1.0 : 1.0) / (n2 * n);
    }
    return M;
  }
  const double x = mu * kPi;
  if (x > kSinhRateLimit) throw std::overflow_error("g_lower: mu pi exceeds the sinh range");
  // sinh 2x - 2x via its series for small x.
  const double sh = std::sinh(x);
  M.c = 8.0 / (kPi * kPi) * x * sh * sh / detail::sinh_two_b_minus(x);
  const double mu2 = mu * mu;
  for (int n = 1; n <= m; ++n) {
    const double n2 = static_cast<double>(n) * n;
    const double ratio = (1.0 + mu2) / (n2 + mu2);
    M.d[n - 1] = ratio * ratio;
    M.h[n - 1] = ((n % 2) ? -1.0 : 1.0) * (1.0 + mu2) * n / ((n2 + mu2) * (n2 + mu2));
  }
  return M;
}

/// Dense symmetric eigensolve.
inline double g_lower_dense(int m, double mu) {
  const LowerBoundMatrix L = lower_bound_matrix(m, mu);
  Eigen::MatrixXd A(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) A(i, j) = -L.c * L.h[i] * L.h[j];
    A(i, i) += L.d[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("g_lower_dense: eigensolver failed");
  return es.eigenvalues().maxCoeff();
}

/// Secular equation 1 - c sum h_n^2 / (d_n - lambda) = 0 for the root in
/// (d_2, d_1). Solved for delta = d_1 - lambda by bisection; the function is
/// increasing in delta with poles at both ends.
inline double g_lower_secular(int m, double mu) {
  const LowerBoundMatrix L = lower_bound_matrix(m, mu);
  if (m == 1) return L.d[0] - L.c * L.h[0] * L.h[0];
  const double d1 = L.d[0];
  auto f = [&](double delta) {
    double s = L.h[0] * L.h[0] / delta;
    for (int n = 1; n < m; ++n) s += L.h[n] * L.h[n] / (L.d[n] - d1 + delta);
    return 1.0 - L.c * s;
  };
  double lo = 0.0;
  double hi = d1 - L.d[1];
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return d1 - 0.5 * (lo + hi);
}

inline constexpr double kLowerBoundAgreement = 1e-10;

/// g_m(mu), computed by both routes; they must agree.
inline double g_lower(int m, double mu) {
  const double dense = g_lower_dense(m, mu);
  const double secular = g_lower_secular(m, mu);
  if (!(std::abs(dense - secular) <= kLowerBoundAgreement)) {
    throw std::runtime_error("g_lower: eigensolver and secular equation disagree (" +
                             std::to_string(dense) + " vs " + std::to_string(secular) + ")");
  }
  return dense;
}

struct GammaLower {
  double value = 0.0;
  /// g_{m_max} - g_{m_max - 1}; 0 when m_max = 1.
  double last_increment = 0.0;
  std::vector<double> g;
};

/// max over m <= m_max of sqrt(g_m(mu)).
inline GammaLower gamma_lower(double mu, int m_max) {
  if (m_max < 1) throw std::invalid_argument("gamma_lower: m_max must be >= 1");
  GammaLower out;
  for (int m = 1; m <= m_max; ++m) out.g.push_back(g_lower(m, mu));
  double best = 0.0;
  for (double g : out.g) best = std::max(best, g);
  out.value = std::sqrt(best);
  if (m_max > 1) out.last_increment = out.g[m_max - 1] - out.g[m_max - 2];
  return out;
}

// ---------------------------------------------------------------------------
// Achievable bound of the single-mode law

struct Bracket {
  double lower = 0.0;
  double upper = 0.0;
};

namespace detail {

/// Integral over [X, inf) of c / (x^2 - c), X > sqrt(max(c, 0)).
inline double tail_integral(double c, double X) {
  if (c > 0.0) return std::sqrt(c) * std::atanh(std::sqrt(c) / X);
  if (c < 0.0) return -std::sqrt(-c) * std::atan(std::sqrt(-c) / X);
  return 0.0;
}

inline void check_L_domain(double r, double w, double lambda) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw std::domain_error("L: r must be >= 0");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::domain_error("L: lambda must lie in (0, 1)");
  if (!(w < std::min(4.0, 1.0 + r)) || !std::isfinite(w)) {
    throw std::domain_error("L: omega must be below min(4, 1 + r)");
  }
}

}  // namespace detail

/// Bracket on S = sum_{n>=2} n^2 / ((n^2 - w)(n^2 - w - lambda (4 - w))).
/// Terms 2..N are summed; the tail is bounded by the integrals of the
/// (eventually decreasing) summand over [N + 1, inf) and [N, inf).
inline Bracket series_S(double w, double lambda, int N_series) {
  const double a2 = w + lambda * (4.0 - w);
  const int need = static_cast<int>(std::ceil(std::sqrt(std::abs(w) + std::abs(a2)))) + 3;
  const int N = std::max({N_series, need, 3});
  double partial = 0.0;
  for (int n = 2; n <= N; ++n) {
    const double n2 = static_cast<double>(n) * n;
    partial += n2 / ((n2 - w) * (n2 - a2));
  }
  // n^2 / ((n^2 - w)(n^2 - a2)) = (w / (n^2 - w) - a2 / (n^2 - a2)) / (w - a2)
  auto tail = [&](double X) {
    return (detail::tail_integral(w, X) - detail::tail_integral(a2, X)) / (w - a2);
  };
  return {partial + tail(N + 1.0), partial + tail(static_cast<double>(N))};
}

/// L(r, w, lambda) = lambda^-1 max(lambda (4 - w) / (1 + r - w) (1 + r^2 S), 1).
inline Bracket L_series(double r, double w, double lambda, int N_series = 2000) {
  detail::check_L_domain(r, w, lambda);
  const double pre = lambda * (4.0 - w) / (1.0 + r - w);
  if (r == 0.0) {
    const double v = std::max(pre, 1.0) / lambda;
    return {v, v};
  }
  const Bracket S = series_S(w, lambda, N_series);
  return {std::max(pre * (1.0 + r * r * S.lower), 1.0) / lambda,
          std::max(pre * (1.0 + r * r * S.upper), 1.0) / lambda};
}

/// Closed-form majorant of L, valid for w in [0, min(4, 1 + r)).
inline double L_tilde(double r, double w, double lambda) {
  detail::check_L_domain(r, w, lambda);
  if (!(w >= 0.0)) throw std::domain_error("L_tilde: omega must be >= 0");
  const double S = 8.0 * (kPi * kPi - 6.0) / (3.0 * (4.0 - w) * (4.0 - w) * (1.0 - lambda));
  const double pre = lambda * (4.0 - w) / (1.0 + r - w);
  return std::max(pre * (1.0 + r * r * S), 1.0) / lambda;
}

struct AchievableOptions {
  int grid = 200;
  int N_series = 2000;
  bool use_ub = false;
  bool refine = true;
  double refine_tol = 1e-8;
  /// 0: SGBC_THREADS, else hardware concurrency.
  unsigned threads = 0;
};

struct AchievableBound {
  double value = 0.0;
  double omega_star = 0.0;
  double lambda_star = 0.0;
};

namespace detail {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SGBC_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct GoldenResult {
  double x;
  double fx;
};

template <typename F>
GoldenResult golden_min(F&& f, double a, double b, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? GoldenResult{c, fc} : GoldenResult{d, fd};
}

}  // namespace detail

/// b(r, mu) = (1 + mu^2)/2 sqrt(min L / ((mu^2 + w)(4 - w))) over
/// lambda in (0, 1), w in (-mu^2, min(4, 1 + r)). With use_ub (mu = 0 only),
/// L is replaced by L_tilde, giving ub(r).
inline AchievableBound b_achievable(double r, double mu, const AchievableOptions& opt = {}) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("b_achievable: r must be >= 0");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("b_achievable: mu must be >= 0");
  if (opt.use_ub && mu != 0.0) throw std::invalid_argument("b_achievable: ub is defined for mu = 0");
  if (opt.grid < 3) throw std::invalid_argument("b_achievable: grid must be >= 3");
  constexpr double shrink = 1e-6;
  const double mu2 = mu * mu;
  const double w_lo = -mu2 + shrink;
  const double w_hi = std::min(4.0, 1.0 + r) - shrink;
  const double l_lo = shrink;
  const double l_hi = 1.0 - shrink;

  auto F = [&](double w, double lambda) {
    const double L = opt.use_ub ? L_tilde(r, w, lambda) : L_series(r, w, lambda, opt.N_series).upper;
    return L / ((mu2 + w) * (4.0 - w));
  };

  const int G = opt.grid;
  auto w_at = [&](int i) { return i == G - 1 ? w_hi : w_lo + (w_hi - w_lo) * i / (G - 1); };
  auto l_at = [&](int j) { return j == G - 1 ? l_hi : l_lo + (l_hi - l_lo) * j / (G - 1); };

  // Row minima in parallel; reduction below is in index order.
  std::vector<double> row_min(G, std::numeric_limits<double>::infinity());
  std::vector<int> row_arg(G, 0);
  auto do_rows = [&](int begin, int stride) {
    for (int i = begin; i < G; i += stride) {
      const double w = w_at(i);
      for (int j = 0; j < G; ++j) {
        const double v = F(w, l_at(j));
        if (v < row_min[i]) {
          row_min[i] = v;
          row_arg[i] = j;
        }
      }
    }
  };
  const unsigned T = std::min<unsigned>(detail::resolve_threads(opt.threads), G);
  if (T <= 1) {
    do_rows(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < T; ++t) pool.emplace_back(do_rows, static_cast<int>(t), static_cast<int>(T));
    for (auto& th : pool) th.join();
  }
  int bi = 0;
  for (int i = 1; i < G; ++i) {
    if (row_min[i] < row_min[bi]) bi = i;
  }
  double best = row_min[bi];
  double w_star = w_at(bi);
  double l_star = l_at(row_arg[bi]);

  if (opt.refine) {
    // The objective is quasi-convex in lambda (max of an increasing and a
    // decreasing term), so the inner search covers the whole lambda range.
    auto inner = [&](double w) {
      return detail::golden_min([&](double l) { return F(w, l); }, l_lo, l_hi, opt.refine_tol);
    };
    const double a = w_at(std::max(bi - 1, 0));
    const double b = w_at(std::min(bi + 1, G - 1));
    const auto outer = detail::golden_min([&](double w) { return inner(w).fx; }, a, b, opt.refine_tol);
    const auto in = inner(outer.x);
    if (in.fx < best) {
      best = in.fx;
      w_star = outer.x;
      l_star = in.x;
    }
  }
  const double scale = opt.use_ub ? 0.5 : 0.5 * (1.0 + mu2);
  return {scale * std::sqrt(best), w_star, l_star};
}

/// ub(r): b with the closed-form majorant L_tilde at mu = 0.
inline AchievableBound ub(double r, AchievableOptions opt = {}) {
  opt.use_ub = true;
  return b_achievable(r, 0.0, opt);
}

// ---------------------------------------------------------------------------
// Exact steady-state gains of a static kernel
//
// For q >= 0 the equilibrium of p w'' - q w + v = 0, w(0) = 0, w(1) = <k, w>
// with v = sum v_n phi_n is w = A h + sum e_n v_n phi_n, where
// h = x (q = 0) or sinh(mu pi x), e_n = 1 / (p n^2 pi^2 + q) and
// A = sum e_n k_n v_n / (h(1) - <k, h>).

namespace detail {

struct SteadyStateForm {
  Eigen::MatrixXd G;
};

inline SteadyStateForm steady_state_form(const StaticKernel& k, double p, double q, int m) {
  if (!(p > 0.0)) throw std::invalid_argument("static gain: p must be positive");
  if (!(q >= 0.0)) throw std::invalid_argument("static gain: q must be >= 0");
  if (m < 1) throw std::invalid_argument("static gain: m must be >= 1");
  const double beta = std::sqrt(q / p);
  const Shape h = (q == 0.0) ? Shape{Linear{}} : Shape{Sinh{beta}};
  const double h1 = value(h, 1.0);
  const double D = h1 - kernel_inner(k, h);
  if (!(std::abs(D) > 1e-12 * std::max(1.0, std::abs(h1)))) {
    throw degenerate_kernel_error("kernel admits a nonzero equilibrium");
  }
  const ModalProfile hc = project(h, static_cast<std::size_t>(m));
  const double hn = shape_l2_norm(h);
  Eigen::VectorXd a(m), e(m), s(m);
  for (int n = 1; n <= m; ++n) {
    const double npi = n * kPi;
    e(n - 1) = 1.0 / (p * npi * npi + q);
    a(n - 1) = e(n - 1) * k.coefficient(static_cast<std::size_t>(n)) / D;
    s(n - 1) = e(n - 1) * hc[n - 1];
  }
  SteadyStateForm out;
  out.G = hn * hn * a * a.transpose() + a * s.transpose() + s * a.transpose();
  out.G.diagonal() += e.cwiseProduct(e);
  return out;
}

}  // namespace detail

/// sup ||w|| / ||v|| over sources spanned by the first m sine modes.
inline double static_gain_exact(const StaticKernel& k, double p, double q, int m) {
  const auto form = detail::steady_state_form(k, p, q, m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(form.G, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("static_gain_exact: eigensolver failed");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// ||w|| for one particular constant source.
inline double steady_state_norm(const StaticKernel& k, double p, double q, const ModalProfile& v) {
  const int m = static_cast<int>(v.size());
  const auto form = detail::steady_state_form(k, p, q, m);
  Eigen::Map<const Eigen::VectorXd> vv(v.coeffs().data(), m);
  return std::sqrt(std::max(0.0, vv.dot(form.G * vv)));
}

// ---------------------------------------------------------------------------
// Small-gain conditions

struct Verdict {
  bool pass = false;
  /// Left-hand side of "... < 1".
  double lhs = 0.0;
};

/// M < gamma^-1 p pi^2, reported as M gamma / (p pi^2) < 1.
inline Verdict small_gain_static(double gamma, double p, double M) {
  if (!(gamma > 0.0)) throw std::invalid_argument("small_gain_static: gamma must be positive");
  if (!(p > 0.0)) throw std::invalid_argument("small_gain_static: p must be positive");
  if (!(M >= 0.0)) throw std::invalid_argument("small_gain_static: M must be >= 0");
  const double lhs = M * gamma / (p * kPi * kPi);
  return {lhs < 1.0, lhs};
}

struct DesignTerm {
  double P = 0.0;
  double omega = 1.0;
  double shape_norm = 0.0;
  double residual_norm = 0.0;
};

struct DesignCheck {
  /// Gain numerator of the static loop; may be absent when it does not matter.
  std::optional<double> gamma;
  double p = 1.0;
  double q = 0.0;
  double M = 0.0;
  std::vector<DesignTerm> terms;
};

/// gamma/(p pi^2) (M + sum P_i |res_i| / w_i^2) + sum P_i ||phi_i|| / w_i^2 < 1.
/// When the gamma-weighted part vanishes the verdict does not need gamma.
inline Verdict small_gain_dynamic(const DesignCheck& chk) {
  if (!(chk.p > 0.0)) throw std::invalid_argument("small_gain_dynamic: p must be positive");
  if (!(chk.M >= 0.0)) throw std::invalid_argument("small_gain_dynamic: M must be >= 0");
  double weighted = chk.M;
  double direct = 0.0;
  for (const auto& t : chk.terms) {
    if (!(t.omega > 0.0)) throw std::invalid_argument("small_gain_dynamic: omega must be positive");
    if (!(t.P >= 0.0 && t.shape_norm >= 0.0 && t.residual_norm >= 0.0)) {
      throw std::invalid_argument("small_gain_dynamic: norms must be nonnegative");
    }
    const double w2 = t.omega * t.omega;
    weighted += t.P * t.residual_norm / w2;
    direct += t.P * t.shape_norm / w2;
  }
  double lhs = direct;
  if (weighted > 0.0) {
    if (!chk.gamma) {
      throw std::invalid_argument("small_gain_dynamic: gain required when M or residuals are nonzero");
    }
    lhs += *chk.gamma / (chk.p * kPi * kPi) * weighted;
  }
  return {lhs < 1.0, lhs};
}

// ---------------------------------------------------------------------------
// Amplitude thresholds for f(u) = A ||u|| phi(x)

/// Static loop with ISS gain `gain` (input sup to state): |A| < 1 / (gain ||phi||).
inline double static_amplitude_threshold(double gain, const Shape& phi) {
  return 1.0 / (gain * shape_l2_norm(phi));
}

/// Dynamic loop with a canonical shape: |A| < w^2 / ||phi||.
inline double dynamic_amplitude_threshold(double omega, const Shape& phi) {
  return omega * omega / shape_l2_norm(phi);
}

/// Best any static kernel could do, from the lower bound with m modes:
/// |A| < (p pi^2 + q) / (sqrt(g_m(mu)) ||phi||).
inline double static_limit_amplitude_threshold(double p, double q, const Shape& phi, int m = 1) {
  return (p * kPi * kPi + q) / (gamma_lower(mu_of(p, q), m).value * shape_l2_norm(phi));
}

/// Frequency above which the dynamic threshold exceeds the best static one
/// (q = 0, sine shapes): w^2 = p pi^3 / sqrt(pi^2 - 6).
inline double crossover_frequency(double p = 1.0) {
  if (!(p > 0.0)) throw std::invalid_argument("crossover_frequency: p must be positive");
  return std::sqrt(p * kPi * kPi * kPi / std::sqrt(kPi * kPi - 6.0));
}

}  // namespace sgbc
