#include <doctest.h>

#include "hyperflow/error.hpp"
#include "hyperflow/flow_engine.hpp"
#include "hyperflow/functionals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

using namespace hyperflow;

namespace {

std::shared_ptr<const SphereGrid> grid_of(GridMode mode, int n, int count) {
  return std::make_shared<const SphereGrid>(build_grid(mode, n, {count, 2 * count}));
}

GraphHypersurface shape(const std::shared_ptr<const SphereGrid>& grid, const std::function<double(double, double)>& r) {
  return GraphHypersurface(grid, sample(*grid, r));
}

RadialProfile linear_profile(int n = 2) { return profile_from_fhat(Expression::parse("r - 1", "r"), n, {0.2, 3.0}); }

// Classical RK4 for dr/dt = -sinh(r) fhat(r) with a fixed small step.
double oracle_radius(const RadialProfile& p, double r0, double t, double h) {
  auto f = [&](double r) { return -std::sinh(r) * p.fhat(r); };
  const int steps = static_cast<int>(std::lround(t / h));
  double r = r0;
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(r), k2 = f(r + 0.5 * h * k1), k3 = f(r + 0.5 * h * k2), k4 = f(r + h * k3);
    r += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return r;
}

double max_abs(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("spheres: equality profile and inverse flow are stationary") {
  for (auto mode : {GridMode::Radial, GridMode::Axisymmetric}) {
    const auto grid = grid_of(mode, 2, 32);
    const auto st = make_state(shape(grid, [](double, double) { return 1.0; }),
                               FlowLawSpec::mcf(equality_profile(2, {0.1, 5.0})));
    CHECK(max_abs(flow_velocity(st)) < 1e-14);
  }
  for (int n : {2, 3, 4}) {
    for (double R : {0.5, 1.0, 2.0}) {
      const auto grid = grid_of(GridMode::Axisymmetric, n, 32);
      for (int k = 2; k <= n; ++k) {
        const auto st = make_state(shape(grid, [R](double, double) { return R; }), FlowLawSpec::icf(k));
        CHECK(max_abs(flow_velocity(st)) < 1e-13);
      }
    }
  }
}

TEST_CASE("radial stationarity identity F = -lambda fhat") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> slope(0.2, 2.0), zero(0.6, 1.8), radius(0.4, 2.8);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const auto rgrid = grid_of(GridMode::Radial, n, 8);
    char text[96];
    std::snprintf(text, sizeof text, "%.17g * (r - %.17g)", slope(rng), zero(rng));
    const auto p = profile_from_fhat(Expression::parse(text, "r"), n, {0.3, 3.0}, Normalization{std::nullopt, 50.0});
    const double R = radius(rng);
    const auto st = make_state(shape(rgrid, [R](double, double) { return R; }), FlowLawSpec::mcf(p));
    const double F = flow_velocity(st)[0];
    const double expected = -std::sinh(R) * p.fhat(R);
    const double scale = std::abs(p.d1(R)) * n / (n - 1.0) + n * p.value(R) * std::cosh(R) / std::sinh(R);
    CHECK(std::abs(F - expected) <= 1e-12 * scale);
  }
}

TEST_CASE("cone violation for the inverse flow") {
  const auto grid = grid_of(GridMode::Axisymmetric, 2, 64);
  const auto surface = shape(grid, [](double t, double) { return 1.0 + 0.3 * std::cos(8 * t); });
  CHECK_THROWS_WITH_AS(make_state(surface, FlowLawSpec::icf(2)), doctest::Contains("cone violation"),
                       InvariantViolation);
  FlowState raw{0.0, surface, graph_geometry(surface), FlowLawSpec::icf(2)};
  CHECK_THROWS_WITH_AS(flow_velocity(raw), doctest::Contains("cone violation"), InvariantViolation);
  CHECK_THROWS_AS(make_state(surface, FlowLawSpec::icf(3)), InvalidArgument);
  CHECK_THROWS_AS(make_state(surface, FlowLawSpec::icf(1)), InvalidArgument);
}

TEST_CASE("radial, phi and divergence forms agree") {
  struct Case {
    GridMode mode;
    int n;
  };
  for (auto c : {Case{GridMode::Axisymmetric, 2}, Case{GridMode::Axisymmetric, 3}, Case{GridMode::Full2D, 2}}) {
    const auto grid = grid_of(c.mode, c.n, 32);
    const auto st = make_state(
        shape(grid, [](double t, double s) { return 1.2 + 0.1 * std::cos(2 * t) + 0.05 * std::sin(t) * std::cos(s); }),
        FlowLawSpec::mcf(linear_profile(c.n)));
    const auto rates = mcf_phi_rates(st);
    const double scale = max_abs(rates.radial);
    for (std::size_t i = 0; i < rates.radial.size(); ++i) {
      CHECK(std::abs(rates.phi[i] - rates.radial[i]) <= 1e-10 * scale);
      CHECK(std::abs(rates.divergence[i] - rates.radial[i]) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("advance") {
  SUBCASE("fixed point") {
    const auto grid = grid_of(GridMode::Axisymmetric, 2, 32);
    const auto st = make_state(shape(grid, [](double, double) { return 1.0; }), FlowLawSpec::mcf(linear_profile()));
    const auto next = advance(st, 1e-4);
    for (std::size_t i = 0; i < grid->size(); ++i) CHECK(std::abs(next.surface.r()[i] - 1.0) <= 1e-15);
    CHECK(next.t == doctest::Approx(1e-4));
  }
  SUBCASE("radial sign") {
    const auto grid = grid_of(GridMode::Radial, 2, 8);
    const auto st = make_state(shape(grid, [](double, double) { return 1.5; }), FlowLawSpec::mcf(linear_profile()));
    CHECK(advance(st, 1e-3).surface.r()[0] < 1.5);
  }
  SUBCASE("oversized step is rejected") {
    const auto grid = grid_of(GridMode::Axisymmetric, 2, 32);
    const auto st = make_state(shape(grid, [](double t, double) { return 1.2 + 0.1 * std::cos(2 * t); }),
                               FlowLawSpec::mcf(linear_profile()));
    CHECK_THROWS_AS(advance(st, 1e3), StepRejected);
    CHECK_THROWS_AS(advance(st, -1.0), InvalidArgument);
  }
  SUBCASE("fourth order in time on the radial reduction") {
    const auto p = linear_profile();
    const auto grid = grid_of(GridMode::Radial, 2, 8);
    const double ref = oracle_radius(p, 1.5, 1.0, 1e-4);
    auto run = [&](int steps) {
      auto st = make_state(shape(grid, [](double, double) { return 1.5; }), FlowLawSpec::mcf(p));
      for (int i = 0; i < steps; ++i) st = advance(st, 1.0 / steps);
      return std::abs(st.surface.r()[0] - ref);
    };
    const double e1 = run(10), e2 = run(20);
    CHECK(std::log2(e1 / e2) > 3.8);
  }
}

TEST_CASE("radial reduction oracle") {
  const auto p = linear_profile();
  const auto law = FlowLawSpec::mcf(p);
  std::vector<double> times;
  for (int i = 0; i <= 40; ++i) times.push_back(0.25 * i);
  const auto r = radial_reduction_run(law, 1.5, times);
  REQUIRE(r.size() == times.size());
  CHECK(r[0] == 1.5);
  for (std::size_t i = 1; i < r.size(); ++i) {
    CHECK(r[i] < r[i - 1]);
    CHECK(r[i] > 1.0);
  }
  CHECK(std::abs(r[8] - oracle_radius(p, 1.5, 2.0, 1e-4)) < 1e-10);
  // Linearized decay rate lambda(1) fhat'(1) = sinh 1.
  const double rate = -std::log((r[40] - 1.0) / (r[36] - 1.0)) / (times[40] - times[36]);
  CHECK(rate == doctest::Approx(std::sinh(1.0)).epsilon(1e-3));
  for (double x : radial_reduction_run(law, 1.0, times)) CHECK(std::abs(x - 1.0) < 1e-14);
  for (double x : radial_reduction_run(FlowLawSpec::icf(2), 0.7, times)) CHECK(x == 0.7);
  CHECK_THROWS_AS(radial_reduction_run(law, 0.0, times), InvalidArgument);
  const auto wide = profile_from_fhat(Expression::parse("-1", "r"), 2, {0.2, 30.0}, Normalization{std::nullopt, 1e30});
  CHECK_THROWS_AS(radial_reduction_run(FlowLawSpec::mcf(wide), 1.0, {0.0, 100.0}), InvariantViolation);
}

TEST_CASE("evolution equations against finite differences in time") {
  const auto p = linear_profile();
  auto errors = [&](int count, double dt) {
    const auto grid = grid_of(GridMode::Axisymmetric, 2, count);
    const auto st = make_state(shape(grid, [](double t, double) { return 1.2 + 0.1 * std::cos(2 * t); }),
                               FlowLawSpec::mcf(p));
    const auto F = flow_velocity(st);
    const auto rates = evolution_rates(st, F);
    // Richardson combination of forward differences, second order in dt.
    const auto half = advance(st, 0.5 * dt);
    const auto full = advance(st, dt);
    auto rate = [&](auto&& q) { return 2.0 * (q(half) - q(st)) / (0.5 * dt) - (q(full) - q(st)) / dt; };
    auto area = [](const FlowState& s) { return curvature_integrals(s.geometry, 1).area; };
    auto volume = [](const FlowState& s) { return weighted_volume(s.geometry); };
    double lp_err = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const auto lp = [i](const FlowState& s) { return s.geometry.lambda_prime[i]; };
      lp_err = std::max(lp_err, std::abs(rate(lp) - rates.lambda_prime_graph[i]));
    }
    return std::array<double, 3>{std::abs(rate(area) - rates.area) / std::abs(rates.area),
                                 std::abs(rate(volume) - rates.weighted_volume) / std::abs(rates.weighted_volume),
                                 lp_err / max_abs(rates.lambda_prime_graph)};
  };
  const auto coarse = errors(32, 2e-5);
  const auto fine = errors(64, 1e-5);
  for (int j = 0; j < 3; ++j) CHECK(coarse[j] < 1e-3);
  // The area rate carries the O(h^2) quadrature error of the curvature.
  CHECK(std::log2(coarse[0] / fine[0]) > 1.8);
  CHECK(fine[1] < 1e-8);
  CHECK(fine[2] < 1e-8);

  // On spheres the normal and fixed-xi rates of lambda' coincide.
  const auto grid = grid_of(GridMode::Radial, 2, 8);
  const auto st = make_state(shape(grid, [](double, double) { return 1.4; }), FlowLawSpec::mcf(p));
  const auto rates = evolution_rates(st, flow_velocity(st));
  CHECK(rates.lambda_prime_normal[0] == doctest::Approx(rates.lambda_prime_graph[0]).epsilon(1e-15));
}

TEST_CASE("run_flow: sphere at the target radius needs no steps") {
  const auto grid = grid_of(GridMode::Axisymmetric, 2, 32);
  const auto st = make_state(shape(grid, [](double, double) { return 1.0; }), FlowLawSpec::mcf(linear_profile()));
  const auto res = run_flow(st);
  CHECK(res.steps == 0);
  CHECK(res.stop_reason == "converged");
  CHECK(res.series.rows.size() == 1);
  REQUIRE(res.target_radius.has_value());
  CHECK(*res.target_radius == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("run_flow: mean curvature type flow converges to the target sphere") {
  const auto grid = grid_of(GridMode::Axisymmetric, 2, 24);
  const auto st = make_state(shape(grid, [](double t, double) { return 1.2 + 0.1 * std::cos(2 * t); }),
                             FlowLawSpec::mcf(linear_profile()));
  RunOptions opt;
  opt.t_max = 20.0;
  const auto res = run_flow(st, opt);
  CHECK(res.stop_reason == "converged");
  for (double r : res.final_state.geometry.r) CHECK(std::abs(r - 1.0) < 1e-4);
  REQUIRE(res.decay_rate.has_value());
  CHECK(*res.decay_rate < 0.0);
  CHECK(res.barrier_excess <= 1e-6);
  CHECK(res.gradient_bound_excess <= 0.0);
  CHECK(res.invariants_preserved);
  const auto& rows = res.series.rows;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].t > rows[i - 1].t);
    CHECK(rows[i].int_f_pow <= rows[i - 1].int_f_pow * (1 + 1e-8));
  }
}

TEST_CASE("run_flow: inverse flow converges and increases W0") {
  const auto grid = grid_of(GridMode::Axisymmetric, 2, 24);
  const auto st = make_state(shape(grid, [](double t, double) { return 1.0 + 0.05 * std::cos(2 * t); }),
                             FlowLawSpec::icf(2));
  RunOptions opt;
  opt.t_max = 15.0;
  const auto res = run_flow(st, opt);
  const auto& r = res.final_state.geometry.r;
  CHECK(*std::max_element(r.begin(), r.end()) - *std::min_element(r.begin(), r.end()) < 1e-4);
  CHECK(res.invariants_preserved);
  const auto audit = monotonicity_audit(res.series, st.law);
  CHECK(audit.w0_nondecreasing);
}

TEST_CASE("run_flow results do not depend on the thread count") {
  const auto grid = grid_of(GridMode::Axisymmetric, 2, 32);
  const auto st = make_state(shape(grid, [](double t, double) { return 1.2 + 0.1 * std::cos(2 * t); }),
                             FlowLawSpec::mcf(linear_profile()));
  RunOptions a;
  a.t_max = 0.05;
  RunOptions b = a;
  b.threads = 3;
  const auto ra = run_flow(st, a), rb = run_flow(st, b);
  REQUIRE(ra.series.rows.size() == rb.series.rows.size());
  for (std::size_t i = 0; i < ra.series.rows.size(); ++i) {
    CHECK(ra.series.rows[i].int_f_pow == rb.series.rows[i].int_f_pow);
    CHECK(ra.series.rows[i].max_grad_sq == rb.series.rows[i].max_grad_sq);
  }
  CHECK(ra.final_state.geometry.r == rb.final_state.geometry.r);
}

TEST_CASE("decay rate fit and series columns") {
  TimeSeries s;
  for (int i = 0; i < 20; ++i) {
    SeriesRow row;
    row.t = 0.5 * i;
    row.max_grad_sq = 4.0 * std::exp(-2.0 * row.t);
    s.rows.push_back(row);
  }
  REQUIRE(fit_decay_rate(s, 1e-8).has_value());
  CHECK(*fit_decay_rate(s, 1e-8) == doctest::Approx(-2.0).epsilon(1e-12));
  // Rows after the gradient reaches the tolerance are excluded.
  s.rows[15].max_grad_sq = 0.0;
  CHECK(*fit_decay_rate(s, 1e-8) == doctest::Approx(-2.0).epsilon(1e-12));
  s.rows.resize(4);
  CHECK_FALSE(fit_decay_rate(s, 1e-8).has_value());
  CHECK(TimeSeries::columns().size() == 13);
  CHECK(TimeSeries::columns().front() == "t");
  CHECK(TimeSeries::columns().back() == "gap");
}
