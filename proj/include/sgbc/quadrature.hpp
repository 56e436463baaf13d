#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>

namespace sgbc {

/// Fixed composite Gauss-Legendre rule on [a, b]: `panels` equal panels with
/// 8 nodes each. Deterministic, so repeated integrals are bit-reproducible.
namespace gl8 {

inline constexpr std::array<double, 8> nodes{
    -0.96028985649753623168, -0.79666647741362673959, -0.52553240991632898582,
    -0.18343464249564980494, 0.18343464249564980494,  0.52553240991632898582,
    0.79666647741362673959,  0.96028985649753623168};

inline constexpr std::array<double, 8> weights{
    0.10122853629037625915, 0.22238103445337447054, 0.31370664587788728734,
    0.36268378337836198297, 0.36268378337836198297, 0.31370664587788728734,
    0.22238103445337447054, 0.10122853629037625915};

}  // namespace gl8

inline constexpr int kDefaultPanels = 64;

template <typename F>
double integrate_gl(F&& f, double a, double b, int panels = kDefaultPanels) {
  if (panels < 1) throw std::invalid_argument("integrate_gl: panels must be >= 1");
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double mid = a + (k + 0.5) * h;
    double panel = 0.0;
    for (std::size_t j = 0; j < gl8::nodes.size(); ++j) {
      panel += gl8::weights[j] * f(mid + 0.5 * h * gl8::nodes[j]);
    }
    sum += panel * 0.5 * h;
  }
  return sum;
}

/// Visits every (node, weight) pair of the composite rule on [0, 1].
template <typename Visitor>
void for_each_gl_node(Visitor&& visit, int panels = kDefaultPanels) {
  if (panels < 1) throw std::invalid_argument("for_each_gl_node: panels must be >= 1");
  const double h = 1.0 / panels;
  for (int k = 0; k < panels; ++k) {
    const double mid = (k + 0.5) * h;
    for (std::size_t j = 0; j < gl8::nodes.size(); ++j) {
      visit(mid + 0.5 * h * gl8::nodes[j], 0.5 * h * gl8::weights[j]);
    }
  }
}

}  // namespace sgbc
