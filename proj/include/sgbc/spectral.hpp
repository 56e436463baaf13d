#pragma once

// Fourier-sine representation of profiles on [0, 1].
//
// The orthonormal basis is phi_n(x) = sqrt(2) sin(n pi x), n = 1, 2, ...
// A profile u is stored through its coefficients c_n = <u, phi_n>, so the L2
// norm is the Euclidean norm of the coefficient vector.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sgbc/quadrature.hpp"

namespace sgbc {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;

/// Largest hyperbolic rate accepted anywhere sinh(2 beta) must stay finite.
inline constexpr double kSinhRateLimit = 350.0;

class ModalProfile {
 public:
  ModalProfile() : coeffs_(1, 0.0) {}

  explicit ModalProfile(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("ModalProfile: at least one mode required");
    for (double c : coeffs_) {
      if (!std::isfinite(c)) throw std::invalid_argument("ModalProfile: non-finite coefficient");
    }
  }

  static ModalProfile zeros(std::size_t n) {
    if (n == 0) throw std::invalid_argument("ModalProfile: at least one mode required");
    return ModalProfile(std::vector<double>(n, 0.0));
  }

  /// Builds a profile of `n` modes from sparse (mode index, coefficient) pairs.
  /// Mode indices are 1-based.
  static ModalProfile from_modes(std::size_t n, std::span<const std::pair<int, double>> modes) {
    auto p = zeros(n);
    for (auto [k, c] : modes) {
      if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw std::out_of_range("ModalProfile: mode " + std::to_string(k) + " outside 1.." +
                                std::to_string(n));
      }
      if (!std::isfinite(c)) throw std::invalid_argument("ModalProfile: non-finite coefficient");
      p.coeffs_[static_cast<std::size_t>(k) - 1] += c;
    }
    return p;
  }

  std::size_t size() const noexcept { return coeffs_.size(); }
  /// 0-based access; coefficient of mode n is at index n - 1.
  double operator[](std::size_t i) const { return coeffs_[i]; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }

  /// Zero-pads (or rejects truncation of) the profile to exactly `n` modes.
  ModalProfile padded(std::size_t n) const {
    if (n < coeffs_.size()) throw std::invalid_argument("ModalProfile: cannot pad to fewer modes");
    std::vector<double> c(coeffs_);
    c.resize(n, 0.0);
    return ModalProfile(std::move(c));
  }

  friend bool operator==(const ModalProfile&, const ModalProfile&) = default;

 private:
  std::vector<double> coeffs_;
};

/// Parseval norm: sqrt(sum c_n^2).
inline double l2_norm(std::span<const double> coeffs) {
  double s = 0.0;
  for (double c : coeffs) s += c * c;
  return std::sqrt(s);
}

inline double l2_norm(const ModalProfile& p) { return l2_norm(p.coeffs()); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

/// Pointwise value sum_n c_n sqrt(2) sin(n pi x).
inline double evaluate(const ModalProfile& p, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("evaluate: x must lie in [0, 1]");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += p[i] * std::sin(static_cast<double>(i + 1) * kPi * x);
  }
  return kSqrt2 * s;
}

/// Integral over [0,1] of sin(w x) sin(n pi x).
inline double sine_overlap(double w, int n) {
  if (!(w > 0.0)) throw std::domain_error("sine_overlap: w must be positive");
  if (n < 1) throw std::domain_error("sine_overlap: n must be positive");
  const double npi = n * kPi;
  const double minus = w - npi;
  const double plus = w + npi;
  const double first = std::abs(minus) < 1e-9 ? 0.5 : std::sin(minus) / (2.0 * minus);
  return first - std::sin(plus) / (2.0 * plus);
}

// ---------------------------------------------------------------------------
// Shapes

/// sin(beta x)
struct Sine {
  double beta = 0.0;
};

/// sinh(beta x)
struct Sinh {
  double beta = 0.0;
};

/// x
struct Linear {};

/// An arbitrary function on [0, 1], represented by its samples at the nodes of
/// the fixed composite Gauss-Legendre rule. The generating function is kept for
/// pointwise evaluation (boundary values).
struct TableQuadrature {
  std::shared_ptr<const std::function<double(double)>> fn;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> samples;

  static TableQuadrature sample(std::function<double(double)> f, int panels = kDefaultPanels) {
    TableQuadrature t;
    for_each_gl_node(
        [&](double x, double w) {
          t.nodes.push_back(x);
          t.weights.push_back(w);
          t.samples.push_back(f(x));
        },
        panels);
    t.fn = std::make_shared<const std::function<double(double)>>(std::move(f));
    return t;
  }
};

using Shape = std::variant<Sine, Sinh, Linear, TableQuadrature>;

namespace detail {

inline void check_rate(double beta, const char* what) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument(std::string(what) + ": rate must be finite and nonnegative");
  }
}

inline void check_sinh_rate(double beta) {
  check_rate(beta, "Sinh");
  if (beta > kSinhRateLimit) throw std::overflow_error("Sinh: rate exceeds overflow guard (350)");
}

/// 2b - sin(2b) without cancellation for small b.
inline double two_b_minus_sin(double b) {
  const double x = 2.0 * b;
  if (x < 1.0) {
    // x^3/3! - x^5/5! + x^7/7! - ...
    double term = x * x * x / 6.0, sum = 0.0;
    for (int k = 1; k < 12; ++k) {
      sum += term;
      term *= -x * x / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    }
    return sum;
  }
  return x - std::sin(x);
}

/// sinh(2b) - 2b without cancellation for small b.
inline double sinh_two_b_minus(double b) {
  const double x = 2.0 * b;
  if (x < 1.0) {
    double term = x * x * x / 6.0, sum = 0.0;
    for (int k = 1; k < 12; ++k) {
      sum += term;
      term *= x * x / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    }
    return sum;
  }
  return std::sinh(x) - x;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

using detail::overloaded;

inline double value(const Shape& s, double x) {
  return std::visit(overloaded{
                        [x](const Sine& v) { return std::sin(v.beta * x); },
                        [x](const Sinh& v) { return std::sinh(v.beta * x); },
                        [x](const Linear&) { return x; },
                        [x](const TableQuadrature& t) { return (*t.fn)(x); },
                    },
                    s);
}

inline bool has_second_derivative(const Shape& s) {
  return !std::holds_alternative<TableQuadrature>(s);
}

inline double second_derivative(const Shape& s, double x) {
  return std::visit(overloaded{
                        [x](const Sine& v) { return -v.beta * v.beta * std::sin(v.beta * x); },
                        [x](const Sinh& v) { return v.beta * v.beta * std::sinh(v.beta * x); },
                        [](const Linear&) { return 0.0; },
                        [](const TableQuadrature&) -> double {
                          throw std::invalid_argument(
                              "second_derivative: tabulated shapes carry no derivative");
                        },
                    },
                    s);
}

/// Coefficients <s, phi_n> for n = 1..N.
inline ModalProfile project(const Shape& s, std::size_t N) {
  if (N < 1) throw std::invalid_argument("project: N must be >= 1");
  std::vector<double> c(N, 0.0);
  std::visit(overloaded{
                 [&](const Sine& v) {
                   detail::check_rate(v.beta, "Sine");
                   if (v.beta == 0.0) return;
                   for (std::size_t i = 0; i < N; ++i) {
                     c[i] = kSqrt2 * sine_overlap(v.beta, static_cast<int>(i + 1));
                   }
                 },
                 [&](const Sinh& v) {
                   detail::check_sinh_rate(v.beta);
                   const double sh = std::sinh(v.beta);
                   for (std::size_t i = 0; i < N; ++i) {
                     const double npi = static_cast<double>(i + 1) * kPi;
                     const double sign = (i % 2 == 0) ? 1.0 : -1.0;
                     c[i] = kSqrt2 * npi * sign * sh / (v.beta * v.beta + npi * npi);
                   }
                 },
                 [&](const Linear&) {
                   for (std::size_t i = 0; i < N; ++i) {
                     const double sign = (i % 2 == 0) ? 1.0 : -1.0;
                     c[i] = kSqrt2 * sign / (static_cast<double>(i + 1) * kPi);
                   }
                 },
                 [&](const TableQuadrature& t) {
                   for (std::size_t i = 0; i < N; ++i) {
                     const double npi = static_cast<double>(i + 1) * kPi;
                     double s = 0.0;
                     for (std::size_t j = 0; j < t.nodes.size(); ++j) {
                       s += t.weights[j] * t.samples[j] * std::sin(npi * t.nodes[j]);
                     }
                     c[i] = kSqrt2 * s;
                   }
                 },
             },
             s);
  return ModalProfile(std::move(c));
}

/// Closed-form L2 norm on [0, 1] (quadrature for tabulated shapes).
inline double shape_l2_norm(const Shape& s) {
  return std::visit(overloaded{
                        [](const Sine& v) {
                          detail::check_rate(v.beta, "Sine");
                          if (v.beta == 0.0) return 0.0;
                          return std::sqrt(detail::two_b_minus_sin(v.beta) / (4.0 * v.beta));
                        },
                        [](const Sinh& v) {
                          detail::check_sinh_rate(v.beta);
                          if (v.beta == 0.0) return 0.0;
                          return std::sqrt(detail::sinh_two_b_minus(v.beta) / (4.0 * v.beta));
                        },
                        [](const Linear&) { return 1.0 / std::sqrt(3.0); },
                        [](const TableQuadrature& t) {
                          double s = 0.0;
                          for (std::size_t j = 0; j < t.nodes.size(); ++j) {
                            s += t.weights[j] * t.samples[j] * t.samples[j];
                          }
                          return std::sqrt(s);
                        },
                    },
                    s);
}

/// Inner product of two shapes on [0, 1], by the fixed Gauss-Legendre rule.
inline double shape_inner(const Shape& a, const Shape& b, int panels = 4 * kDefaultPanels) {
  return integrate_gl([&](double x) { return value(a, x) * value(b, x); }, 0.0, 1.0, panels);
}

/// p s'' - (q - w^2) s. For closed-form shapes this is a multiple of s itself.
struct ResidualShape {
  double scale = 0.0;
  Shape shape;
  double norm = 0.0;

  double operator()(double x) const { return scale * value(shape, x); }
};

inline ResidualShape residual_shape(const Shape& s, double p, double q, double w) {
  if (!(p > 0.0)) throw std::invalid_argument("residual_shape: p must be positive");
  if (!(w > 0.0)) throw std::invalid_argument("residual_shape: w must be positive");
  // With s'' = kappa s, the residual is (p kappa - (q - w^2)) s; grouping the
  // terms as (w^2 - q) - p beta^2 keeps canonical shapes at rounding level.
  const double scale = std::visit(
      overloaded{
          [&](const Sine& v) { return (w * w - q) - p * v.beta * v.beta; },
          [&](const Sinh& v) { return (w * w - q) + p * v.beta * v.beta; },
          [&](const Linear&) { return w * w - q; },
          [](const TableQuadrature&) -> double {
            throw std::invalid_argument("residual_shape: tabulated shapes carry no derivative");
          },
      },
      s);
  return ResidualShape{scale, s, std::abs(scale) * shape_l2_norm(s)};
}

}  // namespace sgbc
