#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

#include "oracles.hpp"
#include "sgbc/special_functions.hpp"

using namespace sgbc;
using Catch::Approx;

TEST_CASE("bessel I1 values", "[special]") {
  CHECK(bessel_i1(0.0) == 0.0);
  CHECK(bessel_i1(1.0) == Approx(oracle::bessel_i1(1.0)).epsilon(1e-12));
  CHECK(bessel_i1(10.0) == Approx(oracle::bessel_i1(10.0)).epsilon(1e-12));
  for (double x : {0.01, 0.5, 2.0, 5.0, 20.0, 35.0, 59.9}) {
    CHECK(bessel_i1(x) == Approx(boost::math::cyl_bessel_i(1, x)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(bessel_i1(-0.1), std::domain_error);
  CHECK_THROWS_AS(bessel_i1(60.5), std::domain_error);
}

TEST_CASE("bessel I1 is strictly increasing", "[special][invariant]") {
  double prev = bessel_i1(0.0);
  for (int i = 1; i <= 6000; ++i) {
    const double v = bessel_i1(i * 0.01);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("bessel I1 derivative matches I0 - I1/x", "[special][invariant]") {
  // d/dx I1 = I0 - I1/x; I0 from its own series here so the check stays
  // independent of the library.
  auto i0 = [](double x) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= (x / 2) * (x / 2) / (k * k);
      sum += term;
    }
    return sum;
  };
  for (double x : {0.5, 1.0, 5.0, 20.0}) {
    const double h = 1e-5 * std::max(1.0, x);
    const double fd = (bessel_i1(x + h) - bessel_i1(x - h)) / (2 * h);
    const double exact = i0(x) - bessel_i1(x) / x;
    CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("I1(z)/z ratio", "[special]") {
  CHECK(i1_ratio(0.0) == 0.5);
  CHECK(i1_ratio(2.0) == bessel_i1(2.0) / 2.0);
  CHECK(std::abs(i1_ratio(1e-9) - 0.5) <= 1e-15);
  CHECK_THROWS_AS(i1_ratio(-1.0), std::domain_error);
}

TEST_CASE("I1 ratio is continuous across the series switch", "[special][invariant]") {
  const double tol = kI1RatioSwitch;
  for (double z : {tol * 0.5, tol * 1.5}) {
    CHECK(std::abs(i1_ratio(z) - (0.5 + z * z / 16 + std::pow(z, 4) / 384)) <= 1e-15);
  }
  CHECK(std::abs(i1_ratio(tol * (1 + 1e-9)) - i1_ratio(tol)) <= 1e-15);
}
