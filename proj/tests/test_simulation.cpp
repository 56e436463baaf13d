#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sgbc/simulation.hpp"

using namespace sgbc;
using Catch::Approx;

namespace {

ModalProfile caption_profile(std::size_t N = 64) {
  std::vector<std::pair<int, double>> m{{1, 1.0}, {2, 2.0}, {3, 0.1}};
  for (int n = 37; n <= 42; ++n) m.emplace_back(n, 0.01);
  return ModalProfile::from_modes(N, m);
}

SimConfig figure_config(double A, double T) {
  SimConfig c;
  c.N = 64;
  c.dt = 1e-4;
  c.T = T;
  c.record_stride = 10;
  c.initial = caption_profile();
  c.nonlocal.terms.push_back({Sine{20.0}, NormScaled{A}});
  return c;
}

SimConfig closed_loop(double r, double T, std::size_t N = 64) {
  SimConfig c = figure_config(500.0, T);
  c.N = N;
  c.initial = caption_profile(N);
  c.controller = DynamicController(single_mode(r), {{Sine{20.0}, NormScaled{500.0}, 20.0}});
  return c;
}

SimState state_of(const ModalSystem& sys, const std::vector<double>& c) {
  SimState s = sys.initial_state();
  s.c = c;
  return s;
}

}  // namespace

TEST_CASE("modal right-hand side", "[simulation]") {
  SimConfig cfg;
  cfg.N = 8;
  cfg.plant = {1.3, 0.4};
  cfg.initial = ModalProfile::from_modes(8, std::vector<std::pair<int, double>>{{1, 1.0}});
  const ModalSystem sys(cfg);
  auto d = sys.rhs(sys.initial_state(), 0.0);
  CHECK(d.dc[0] == Approx(-(1.3 * kPi * kPi + 0.4)).epsilon(1e-15));
  for (std::size_t i = 1; i < 8; ++i) CHECK(d.dc[i] == 0.0);

  SECTION("single-mode feedback reproduces the closed-form modal coupling") {
    const double r = 0.73, p = 1.3, q = 0.4;
    cfg.controller = single_mode(r);
    const ModalSystem fb(cfg);
    std::vector<double> c{0.3, -1.2, 0.5, 0.8, -0.1, 0.0, 0.0, 0.0};
    d = fb.rhs(state_of(fb, c), 0.0);
    for (int n = 1; n <= 5; ++n) {
      const double lam = n * n * kPi * kPi * p + q;
      const double expect = -lam * c[n - 1] + std::pow(-1.0, n) * n * kPi * kPi * p * r * c[0];
      CHECK(d.dc[n - 1] == Approx(expect).epsilon(1e-13));
    }
  }

  SECTION("nonlocal term projects onto the modes") {
    SimConfig f = figure_config(500.0, 1.0);
    const ModalSystem fs(f);
    d = fs.coupling(fs.initial_state(), 0.0);
    const double nrm = l2_norm(caption_profile());
    for (int n = 1; n <= 6; ++n) {
      const double proj = oracle::sine_coeff([](double x) { return std::sin(20 * x); }, n);
      CHECK(d.dc[n - 1] == Approx(500.0 * nrm * proj).epsilon(1e-10));
      CHECK(d.dc[n - 1] == Approx(500.0 * nrm * std::sqrt(2.0) * sine_overlap(20.0, n)).epsilon(1e-14));
    }
  }

  SECTION("free function wrappers") {
    const auto w = modal_rhs(sys.initial_state(), cfg, 0.0);
    CHECK(w.dc[0] == d.dc[0]);
    const auto s = step(sys.initial_state(), cfg, 0.0);
    CHECK(s.c[0] == Approx(std::exp(-(1.3 * kPi * kPi + 0.4) * cfg.dt)).epsilon(1e-15));
  }
}

TEST_CASE("exponential Euler is exact on the diagonal", "[simulation][invariant]") {
  for (double dt : {1e-5, 1e-3, 0.05}) {
    SimConfig cfg;
    cfg.N = 6;
    cfg.dt = dt;
    cfg.T = 0.2;
    cfg.initial = ModalProfile(std::vector<double>{1.0, -0.5, 0.25, 0.0, 0.1, 2.0});
    const Trace tr = simulate(cfg);
    const ModalSystem sys(cfg);
    SimState s = sys.initial_state();
    const auto steps = static_cast<int>(std::llround(cfg.T / dt));
    for (int k = 0; k < steps; ++k) s = sys.step(s, k * dt);
    for (int n = 1; n <= 6; ++n) {
      const double exact = cfg.initial[n - 1] * std::exp(-n * n * kPi * kPi * steps * dt);
      CHECK(s.c[n - 1] == Approx(exact).epsilon(1e-12).margin(1e-300));
    }
    CHECK(tr.times.back() == Approx(0.2).epsilon(1e-14));
  }
}

TEST_CASE("removable singularity of the step weight", "[simulation]") {
  CHECK(phi1(0.0, 0.01) == 0.01);
  CHECK(phi1(1e-9, 0.01) == Approx(0.01).epsilon(1e-10));
  CHECK(phi1(5.0, 0.1) == Approx((1 - std::exp(-0.5)) / 5.0).epsilon(1e-15));
  // q = -p pi^2: mode 1 is neutral, a unit source raises it by dt per step.
  SimConfig cfg;
  cfg.N = 2;
  cfg.plant = {1.0, -kPi * kPi};
  cfg.dt = 0.01;
  cfg.T = 1.0;
  cfg.initial = ModalProfile::zeros(2);
  cfg.forcing = ModalProfile(std::vector<double>{1.0, 0.0});
  const Trace tr = simulate(cfg);
  CHECK(tr.norm_u.back() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("one exponential Euler step against RK4", "[simulation]") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int N = 24;
  const double dt = 1e-5;
  SimConfig cfg;
  cfg.N = N;
  cfg.dt = dt;
  cfg.T = dt;
  std::vector<double> c0(N);
  for (int i = 0; i < N; ++i) c0[i] = u(rng) / (1 + i);
  cfg.initial = ModalProfile(c0);
  const double r = 0.5 + 0.5 * u(rng), w = 12.0 + 4 * u(rng), A = 30 * u(rng);
  cfg.nonlocal.terms.push_back({Sine{w}, NormScaled{A}});
  cfg.controller = DynamicController(single_mode(r), {{Sine{w}, NormScaled{A}, w}}, {0.3});
  const ModalSystem sys(cfg);
  const SimState s1 = sys.step(sys.initial_state(), 0.0);

  oracle::ModalLoop ref;
  ref.N = N;
  ref.k = {-kPi * r / std::sqrt(2.0)};
  std::vector<double> proj(N);
  for (int n = 1; n <= N; ++n) proj[n - 1] = oracle::sine_coeff([&](double x) { return std::sin(w * x); }, n);
  ref.f_proj = {proj};
  ref.f_amp = {A};
  ref.omega = {w};
  ref.ctrl_amp = {A};
  ref.phi_at_1 = {std::sin(w)};
  ref.k_phi = {oracle::quad([&](double x) { return -kPi * r * std::sin(kPi * x) * std::sin(w * x); })};
  std::vector<double> c = c0, xi{0.3};
  ref.rk4(c, xi, dt, 1);
  double diff = 0.0, nrm = 0.0;
  for (int i = 0; i < N; ++i) {
    diff += (c[i] - s1.c[i]) * (c[i] - s1.c[i]);
    nrm += c[i] * c[i];
  }
  CHECK(std::sqrt(diff) <= 1e-8 * std::sqrt(nrm));
  CHECK(std::abs(xi[0] - s1.xi[0]) <= 1e-8 * std::abs(xi[0]));
}

TEST_CASE("open-loop reference runs", "[simulation]") {
  const Trace grow = simulate(figure_config(500.0, 1.0));
  REQUIRE_FALSE(grow.blew_up());
  CHECK(grow.norm_u.back() > grow.norm_u.front());
  for (std::size_t i = 1; i < grow.size(); ++i) {
    if (grow.times[i - 1] >= 0.2) CHECK(grow.norm_u[i] > grow.norm_u[i - 1]);
  }
  CHECK(overshoot(grow) == Approx(grow.norm_u.back() / grow.norm_u.front()).epsilon(1e-15));

  SimConfig heat = figure_config(0.0, 1.0);
  const Trace tr = simulate(heat);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    CHECK(tr.norm_u[i] <= tr.norm_u[0] * std::exp(-kPi * kPi * tr.times[i]) * (1 + 1e-9));
  }
  CHECK(overshoot(tr) == 1.0);
}

TEST_CASE("closed-loop reference runs", "[simulation]") {
  SimConfig cfg = closed_loop(0.0, 5.0);
  cfg.record_snapshots = true;
  const Trace r0 = simulate(cfg);
  const Trace r9 = simulate(closed_loop(0.9, 5.0));
  REQUIRE_FALSE(r0.blew_up());
  REQUIRE_FALSE(r9.blew_up());
  CHECK(r0.norm_u.back() < 1e-3 * r0.norm_u.front());
  CHECK(r9.norm_u.back() < 1e-3 * r9.norm_u.front());
  CHECK(decay_rate(r9, 0.5, 2.0) > decay_rate(r0, 0.5, 2.0));
  CHECK(overshoot(r9) > overshoot(r0));

  const auto& ctrl = std::get<DynamicController>(cfg.controller);
  CHECK(verify_transformation(r0, ctrl) < 1e-8);

  Trace bad = r0;
  bad.control[bad.size() / 2] += 0.1;
  CHECK(verify_transformation(bad, ctrl) == Approx(0.1).epsilon(1e-6));
  CHECK_THROWS_AS(verify_transformation(r9, ctrl), std::invalid_argument);
}

TEST_CASE("static loop satisfies the boundary identity", "[simulation]") {
  SimConfig cfg = figure_config(5.0, 0.2);
  cfg.controller = single_mode(0.6);
  cfg.record_snapshots = true;
  const Trace tr = simulate(cfg);
  CHECK(verify_transformation(tr, single_mode(0.6)) == 0.0);
}

TEST_CASE("decay rate and overshoot", "[simulation]") {
  SimConfig cfg;
  cfg.N = 4;
  cfg.plant = {1.0, 0.7};
  cfg.dt = 1e-3;
  cfg.T = 2.0;
  cfg.initial = ModalProfile(std::vector<double>{1.0});
  const Trace one = simulate(cfg);
  CHECK(decay_rate(one, 0.0, 2.0) == Approx(kPi * kPi + 0.7).margin(1e-6));
  cfg.initial = ModalProfile(std::vector<double>{1.0, 3.0});
  const Trace two = simulate(cfg);
  CHECK(decay_rate(two, 1.0, 2.0) == Approx(kPi * kPi + 0.7).margin(1e-6));
  CHECK(overshoot(two) == 1.0);
  CHECK_THROWS(decay_rate(two, 5.0, 6.0));
  Trace empty;
  CHECK_THROWS_AS(overshoot(empty), std::invalid_argument);
}

TEST_CASE("first-order convergence in the step size", "[simulation][invariant]") {
  auto final_norm = [](double dt) {
    SimConfig cfg = closed_loop(0.5, 0.1);
    cfg.nonlocal.terms[0].functional = NormScaled{60.0};
    cfg.controller = DynamicController(single_mode(0.5), {{Sine{20.0}, NormScaled{60.0}, 20.0}});
    cfg.dt = dt;
    cfg.record_stride = 1000000;
    return simulate(cfg).norm_u.back();
  };
  const double a = final_norm(4e-4), b = final_norm(2e-4), c = final_norm(1e-4);
  const double order = std::log2(std::abs(a - b) / std::abs(b - c));
  INFO("observed order " << order);
  CHECK(order >= 0.8);
  CHECK(order <= 1.2);
}

TEST_CASE("mode-count convergence on the closed-loop reference runs", "[simulation][invariant]") {
  for (double r : {0.0, 0.9}) {
    const double n64 = simulate(closed_loop(r, 5.0, 64)).norm_u.back();
    const double n128 = simulate(closed_loop(r, 5.0, 128)).norm_u.back();
    const double rel = std::abs(n64 - n128) / std::abs(n128);
    INFO("r = " << r << ", relative difference " << rel);
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("superposition without the nonlocal term", "[simulation][invariant]") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  for (int t = 0; t < 5; ++t) {
    std::vector<double> a(16), b(16), s(16);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    const double al = g(rng), be = g(rng);
    for (int i = 0; i < 16; ++i) s[i] = al * a[i] + be * b[i];
    SimConfig cfg;
    cfg.N = 16;
    cfg.dt = 1e-4;
    cfg.T = 0.05;
    cfg.controller = single_mode(1.5);
    cfg.record_snapshots = true;
    cfg.record_stride = 500;
    auto run = [&](const std::vector<double>& c) {
      cfg.initial = ModalProfile(c);
      return simulate(cfg).snapshots.back();
    };
    const auto ra = run(a), rb = run(b), rs = run(s);
    for (int i = 0; i < 16; ++i) CHECK(rs[i] == Approx(al * ra[i] + be * rb[i]).margin(1e-12));
  }
}

TEST_CASE("bounded disturbances keep an exponential envelope under the small-gain condition",
          "[simulation][invariant]") {
  // Zero kernel, f = A ||u|| sin(20 x) with A ||sin 20x|| = 7 < pi^2.
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double A = 10.0;
  const double M = A * shape_l2_norm(Sine{20.0});
  REQUIRE(M < kPi * kPi);
  const double rate = 0.5 * (kPi * kPi - M);
  for (int t = 0; t < 10; ++t) {
    SimConfig cfg = figure_config(A, 2.0);
    switch (t % 3) {
      case 0: cfg.nonlocal.disturbance = ConstantSignal{2 * u(rng) - 1}; break;
      case 1: cfg.nonlocal.disturbance = SquareSignal{0.05 + u(rng), 2 * u(rng) - 1, 2 * u(rng) - 1}; break;
      default: cfg.nonlocal.disturbance = SinusoidSignal{10 * u(rng), 6 * u(rng)}; break;
    }
    const Trace tr = simulate(cfg);
    double R = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      R = std::max(R, tr.norm_u[i] * std::exp(rate * tr.times[i]) / tr.norm_u[0]);
    }
    INFO("signal " << t << " envelope constant " << R);
    CHECK(R < 3.0);
  }
}

TEST_CASE("blow-up is reported and not propagated", "[simulation]") {
  SimConfig cfg = figure_config(5000.0, 1.0);
  const Trace tr = simulate(cfg);
  REQUIRE(tr.blew_up());
  CHECK(*tr.blowup_time > 0.0);
  CHECK(*tr.blowup_time <= 1.0);
  for (double v : tr.norm_u) CHECK(std::isfinite(v));
  for (double v : tr.norm_u) CHECK(v <= kBlowupNorm);
}

TEST_CASE("configuration validation", "[simulation]") {
  SimConfig cfg;
  cfg.N = 4;
  cfg.initial = ModalProfile::zeros(5);
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.initial = ModalProfile::zeros(4);
  cfg.dt = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.dt = 0.1;
  cfg.T = 0.01;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.T = 1.0;
  cfg.nonlocal.disturbance = ConstantSignal{1.5};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.nonlocal.disturbance = SquareSignal{0.0, 1, -1};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.nonlocal.disturbance = ConstantSignal{};
  cfg.plant.p = -1;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("disturbance signals", "[simulation]") {
  CHECK(disturbance_value(ConstantSignal{0.3}, 7.0) == 0.3);
  const SquareSignal sq{0.5, 1.0, -0.5};
  CHECK(disturbance_value(sq, 0.1) == 1.0);
  CHECK(disturbance_value(sq, 0.3) == -0.5);
  CHECK(disturbance_value(sq, 0.6) == 1.0);
  CHECK(disturbance_value(SinusoidSignal{2.0}, 0.125) == Approx(1.0));
}
