#pragma once

// Boundary feedback laws for u(t,1) = U(t).
//
// Static kernels act as U = <k, u>. Kernels are stored through their sine
// coefficients k_n = <k, phi_n>, because every use in the closed loop is an
// inner product with the modal state. The dynamic controller adds integrator
// states xi_i with xi_i' = -omega_i^2 xi_i + K_i(u) and outputs
//
//   U = sum_i phi_i(1) xi_i + <k, u> - sum_i xi_i <k, phi_i>.

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sgbc/quadrature.hpp"
#include "sgbc/special_functions.hpp"
#include "sgbc/spectral.hpp"

namespace sgbc {

class resolution_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Truncation bound accepted when <k, phi> is formed from sine coefficients.
inline constexpr double kKernelTailTolerance = 1e-8;

enum class KernelKind { Zero, SingleMode, Backstepping, Custom };

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::Zero: return "zero";
    case KernelKind::SingleMode: return "single_mode";
    case KernelKind::Backstepping: return "backstepping";
    case KernelKind::Custom: return "custom";
  }
  return "?";
}

struct StaticKernel {
  KernelKind kind = KernelKind::Zero;
  /// Design amplitude r for SingleMode / Backstepping.
  double r = 0.0;
  /// k_n for n = 1..modal.size().
  std::vector<double> modal;
  /// True when the coefficients describe the kernel exactly (finite sine sum).
  bool finite_modal = true;
  /// Closed-form pointwise kernel, when one exists.
  std::function<double(double)> pointwise;
  /// ||k||; NaN when unknown.
  double norm = 0.0;

  /// <k, phi_n>, 1-based. Beyond the stored coefficients this is 0 for finite
  /// kernels and a quadrature of the pointwise form otherwise.
  double coefficient(std::size_t n) const {
    if (n < 1) throw std::out_of_range("StaticKernel::coefficient: n is 1-based");
    if (n <= modal.size()) return modal[n - 1];
    if (finite_modal) return 0.0;
    if (!pointwise) throw resolution_error("StaticKernel: coefficient beyond stored modes");
    const double npi = static_cast<double>(n) * kPi;
    return kSqrt2 *
           integrate_gl([&](double x) { return pointwise(x) * std::sin(npi * x); }, 0.0, 1.0,
                        4 * kDefaultPanels);
  }
};

inline StaticKernel zero_kernel() {
  StaticKernel k;
  k.kind = KernelKind::Zero;
  k.pointwise = [](double) { return 0.0; };
  return k;
}

/// k(x) = -pi r sin(pi x), i.e. U = -pi r <u, sin(pi .)>.
inline StaticKernel single_mode(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("single_mode: r must be finite and >= 0");
  }
  if (r == 0.0) return zero_kernel();
  StaticKernel k;
  k.kind = KernelKind::SingleMode;
  k.r = r;
  k.modal = {-kPi * r / kSqrt2};
  k.pointwise = [r](double x) { return -kPi * r * std::sin(kPi * x); };
  k.norm = kPi * r / kSqrt2;
  return k;
}

/// Backstepping kernel for q < 0:
///   k(x) = -a x I1(sqrt(a (1 - x^2))) / sqrt(a (1 - x^2)),  a = (r - q) / p.
/// Coefficients for n = 1..N by composite Gauss-Legendre quadrature.
inline StaticKernel backstepping(double r, double p, double q, std::size_t N,
                                 int panels = kDefaultPanels) {
  if (!(r >= 0.0)) throw std::invalid_argument("backstepping: r must be >= 0");
  if (!(p > 0.0)) throw std::invalid_argument("backstepping: p must be positive");
  if (!(q < 0.0)) throw std::invalid_argument("backstepping: requires q < 0");
  if (!(r - q > 0.0)) throw std::invalid_argument("backstepping: requires r - q > 0");
  if (N < 1) throw std::invalid_argument("backstepping: N must be >= 1");
  const double a = (r - q) / p;
  if (std::sqrt(a) > kBesselMaxArg) {
    throw std::domain_error("backstepping: sqrt((r - q)/p) exceeds the Bessel series range");
  }
  StaticKernel k;
  k.kind = KernelKind::Backstepping;
  k.r = r;
  k.finite_modal = false;
  k.pointwise = [a](double x) {
    const double s = std::max(0.0, 1.0 - x * x);
    return -a * x * i1_ratio(std::sqrt(a * s));
  };
  k.modal.resize(N);
  for (std::size_t n = 1; n <= N; ++n) {
    const double npi = static_cast<double>(n) * kPi;
    k.modal[n - 1] = kSqrt2 * integrate_gl([&](double x) { return k.pointwise(x) * std::sin(npi * x); },
                                           0.0, 1.0, panels);
  }
  k.norm = std::sqrt(
      integrate_gl([&](double x) { return k.pointwise(x) * k.pointwise(x); }, 0.0, 1.0, panels));
  return k;
}

/// Kernel given only by its (complete) sine coefficients.
inline StaticKernel custom_kernel(std::vector<double> modal) {
  for (double c : modal) {
    if (!std::isfinite(c)) throw std::invalid_argument("custom_kernel: non-finite coefficient");
  }
  StaticKernel k;
  k.kind = KernelKind::Custom;
  k.norm = l2_norm(modal);
  k.modal = std::move(modal);
  return k;
}

/// U = <k, u> = sum over shared modes of k_n c_n.
inline double control_static(const StaticKernel& k, const ModalProfile& u) {
  return dot(k.modal, u.coeffs());
}

/// <k, s> on [0, 1]. Finite kernels use the exact modal sum. Otherwise the
/// modal sum is accepted only when its Cauchy-Schwarz tail bound is below
/// kKernelTailTolerance; failing that, the pointwise kernel is integrated
/// directly, and without one a resolution_error is raised.
inline double kernel_inner(const StaticKernel& k, const Shape& s) {
  if (k.modal.empty()) {
    if (k.finite_modal) return 0.0;
  }
  const std::size_t nk = std::max<std::size_t>(k.modal.size(), 1);
  const ModalProfile sh = project(s, nk);
  const double modal = dot(k.modal, sh.coeffs());
  if (k.finite_modal) return modal;

  const double k_tail_sq = k.norm * k.norm - [&] {
    double t = 0.0;
    for (double c : k.modal) t += c * c;
    return t;
  }();
  const double s_norm = shape_l2_norm(s);
  const double s_tail_sq = s_norm * s_norm - [&] {
    double t = 0.0;
    for (double c : sh.coeffs()) t += c * c;
    return t;
  }();
  const double tail = std::sqrt(std::max(0.0, k_tail_sq)) * std::sqrt(std::max(0.0, s_tail_sq));
  if (std::isfinite(tail) && tail <= kKernelTailTolerance) return modal;
  if (!k.pointwise) {
    throw resolution_error("kernel_inner: modal truncation tail " + std::to_string(tail) +
                           " exceeds tolerance and no pointwise kernel is available");
  }
  return integrate_gl([&](double x) { return k.pointwise(x) * value(s, x); }, 0.0, 1.0,
                      4 * kDefaultPanels);
}

// ---------------------------------------------------------------------------
// Functionals K(u) with |K(u)| <= P ||u||

/// K(u) = A ||u||
struct NormScaled {
  double A = 0.0;
};

/// K(u) = A <psi, u>
struct InnerProduct {
  double A = 0.0;
  Shape psi = Sine{kPi};
};

using Functional = std::variant<NormScaled, InnerProduct>;

/// The linear-growth constant P.
inline double functional_bound(const Functional& f) {
  return std::visit(overloaded{
                        [](const NormScaled& v) { return std::abs(v.A); },
                        [](const InnerProduct& v) { return std::abs(v.A) * shape_l2_norm(v.psi); },
                    },
                    f);
}

inline double functional_value(const Functional& f, const ModalProfile& u) {
  return std::visit(overloaded{
                        [&](const NormScaled& v) { return v.A * l2_norm(u); },
                        [&](const InnerProduct& v) {
                          return v.A * dot(project(v.psi, u.size()).coeffs(), u.coeffs());
                        },
                    },
                    f);
}

// ---------------------------------------------------------------------------
// Dynamic controller

struct ControllerTerm {
  Shape shape;
  Functional functional;
  double omega = 1.0;
};

class DynamicController {
 public:
  DynamicController(StaticKernel kernel, std::vector<ControllerTerm> terms,
                    std::vector<double> xi = {})
      : kernel_(std::move(kernel)), terms_(std::move(terms)), xi_(std::move(xi)) {
    if (xi_.empty()) xi_.assign(terms_.size(), 0.0);
    if (xi_.size() != terms_.size()) {
      throw std::invalid_argument("DynamicController: need one state per term");
    }
    for (const auto& t : terms_) {
      if (!(t.omega > 0.0) || !std::isfinite(t.omega)) {
        throw std::invalid_argument("DynamicController: every omega must be positive");
      }
      if (std::abs(value(t.shape, 0.0)) > 1e-12) {
        throw std::invalid_argument("DynamicController: every shape must vanish at x = 0");
      }
      boundary_values_.push_back(value(t.shape, 1.0));
      kernel_overlaps_.push_back(kernel_inner(kernel_, t.shape));
    }
    for (double v : xi_) {
      if (!std::isfinite(v)) throw std::invalid_argument("DynamicController: non-finite state");
    }
  }

  const StaticKernel& kernel() const noexcept { return kernel_; }
  const std::vector<ControllerTerm>& terms() const noexcept { return terms_; }
  std::span<const double> states() const noexcept { return xi_; }
  /// phi_i(1)
  std::span<const double> boundary_values() const noexcept { return boundary_values_; }
  /// <k, phi_i>
  std::span<const double> kernel_overlaps() const noexcept { return kernel_overlaps_; }
  std::size_t size() const noexcept { return terms_.size(); }

  DynamicController with_states(std::vector<double> xi) const {
    if (xi.size() != terms_.size()) {
      throw std::invalid_argument("DynamicController: need one state per term");
    }
    DynamicController c = *this;
    c.xi_ = std::move(xi);
    return c;
  }

 private:
  StaticKernel kernel_;
  std::vector<ControllerTerm> terms_;
  std::vector<double> xi_;
  std::vector<double> boundary_values_;
  std::vector<double> kernel_overlaps_;
};

inline double control_dynamic(const DynamicController& ctrl, const ModalProfile& u,
                              std::span<const double> xi) {
  if (xi.size() != ctrl.size()) throw std::invalid_argument("control_dynamic: state size mismatch");
  double U = control_static(ctrl.kernel(), u);
  for (std::size_t i = 0; i < xi.size(); ++i) {
    U += (ctrl.boundary_values()[i] - ctrl.kernel_overlaps()[i]) * xi[i];
  }
  return U;
}

inline double control_dynamic(const DynamicController& ctrl, const ModalProfile& u) {
  return control_dynamic(ctrl, u, ctrl.states());
}

/// xi_i' = -omega_i^2 xi_i + K_i(u)
inline std::vector<double> ctrl_state_derivative(const DynamicController& ctrl,
                                                 const ModalProfile& u,
                                                 std::span<const double> xi) {
  if (xi.size() != ctrl.size()) {
    throw std::invalid_argument("ctrl_state_derivative: state size mismatch");
  }
  std::vector<double> d(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const auto& t = ctrl.terms()[i];
    d[i] = -t.omega * t.omega * xi[i] + functional_value(t.functional, u);
  }
  return d;
}

inline std::vector<double> ctrl_state_derivative(const DynamicController& ctrl,
                                                 const ModalProfile& u) {
  return ctrl_state_derivative(ctrl, u, ctrl.states());
}

/// The shape annihilated by p phi'' - (q - w^2) phi with phi(0) = 0.
inline Shape canonical_shape(double p, double q, double w) {
  if (!(p > 0.0)) throw std::invalid_argument("canonical_shape: p must be positive");
  if (!(w > 0.0)) throw std::invalid_argument("canonical_shape: w must be positive");
  const double gap = w * w - q;
  if (std::abs(gap) <= 1e-12 * std::max(1.0, std::abs(q))) return Linear{};
  if (gap > 0.0) return Sine{std::sqrt(gap / p)};
  return Sinh{std::sqrt(-gap / p)};
}

}  // namespace sgbc
