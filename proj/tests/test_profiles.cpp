#include <doctest.h>

#include "hyperflow/error.hpp"
#include "hyperflow/expression.hpp"
#include "hyperflow/profiles.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <thread>

using namespace hyperflow;

namespace {

// Antiderivative of (1/2) sinh^2(s) (s - 1), the n = 2 integrand for fhat = r - 1.
double h_primitive(double s) {
  return 0.25 * ((s - 1.0) * std::sinh(2 * s) / 2.0 - std::cosh(2 * s) / 4.0 - (s - 1.0) * (s - 1.0) / 2.0);
}

double central(const auto& f, double x, double e) { return (f(x + e) - f(x - e)) / (2 * e); }

}  // namespace

TEST_CASE("expression parser") {
  auto e = Expression::parse("pow(cosh(r), 2) - sinh(r)^2", "r");
  for (double r : {0.1, 1.0, 2.5}) CHECK(e(r) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(Expression::parse("-2^2", "x")(0.0) == -4.0);
  CHECK(Expression::parse("2^3^2", "x")(0.0) == 512.0);
  CHECK(Expression::parse("1 - 2 - 3", "x")(0.0) == -4.0);
  CHECK(Expression::parse("8 / 4 / 2", "x")(0.0) == 1.0);
  CHECK(Expression::parse("2 * pi", "x")(0.0) == doctest::Approx(2 * std::numbers::pi));
  CHECK(Expression::parse("sqrt(lp) * exp(0) + log(1) + tanh(0)", "lp")(4.0) == 2.0);
  CHECK(Expression::parse("const(3) * x", "x")(2.0) == 6.0);
  CHECK(Expression::parse("1.5e1", "x").is_constant());
  CHECK_FALSE(Expression::parse("x", "x").is_constant());
  CHECK_THROWS_AS(Expression::parse("r +", "r"), InvalidArgument);
  CHECK_THROWS_AS(Expression::parse("foo(r)", "r"), InvalidArgument);
  CHECK_THROWS_AS(Expression::parse("s", "r"), InvalidArgument);
  CHECK_THROWS_AS(Expression::parse("(r", "r"), InvalidArgument);
  CHECK_THROWS_AS(Expression::parse("const(r)", "r"), InvalidArgument);
  try {
    Expression::parse("r * $", "r");
    FAIL("expected a parse error");
  } catch (const InvalidArgument& err) {
    CHECK(std::string(err.what()).find("column 5") != std::string::npos);
  }
}

TEST_CASE("profile from fhat round trip") {
  const auto fhat = Expression::parse("r - 1", "r");
  const auto p = profile_from_fhat(fhat, 2, {0.2, 3.0});
  double worst_fhat = 0.0, worst_value = 0.0;
  for (int i = 0; i <= 560; ++i) {
    const double r = 0.2 + 2.8 * i / 560.0;
    worst_fhat = std::max(worst_fhat, std::abs(p.fhat(r) - (r - 1.0)));
    const double h = 1.0 + h_primitive(r) - h_primitive(0.2);
    worst_value = std::max(worst_value, std::abs(p.value(r) - h / std::sinh(r)) / (h / std::sinh(r)));
  }
  CHECK(worst_fhat < 1e-10);
  CHECK(worst_value < 1e-12);
}

TEST_CASE("profile from fhat with general n and normalization") {
  const auto fhat = Expression::parse("tanh(r) - 0.5", "r");
  for (int n : {3, 4}) {
    const auto p = profile_from_fhat(fhat, n, {0.3, 2.5}, Normalization{1.0, 2.0});
    CHECK(std::pow(std::sinh(1.0), n - 1) * p.value(1.0) == doctest::Approx(2.0).epsilon(1e-13));
    for (double r = 0.3; r <= 2.5; r += 0.01) CHECK(std::abs(p.fhat(r) - fhat(r)) < 1e-10);
  }
}

TEST_CASE("derivative evaluators agree with finite differences") {
  const auto pa = profile_from_fhat(Expression::parse("r - 1", "r"), 2, {0.2, 3.0});
  const auto pb = profile_from_fbar(Expression::parse("exp(-r) + 0.1 * r^2", "r"), 3, {0.1, 4.0});
  const auto pc = equality_profile(3, {0.1, 5.0});
  for (const auto* p : {&pa, &pb, &pc}) {
    for (double r = 0.4; r <= 2.8; r += 0.05) {
      const double fd1 = central([&](double x) { return p->value(x); }, r, 1e-5);
      const double fd2 = central([&](double x) { return p->d1(x); }, r, 1e-5);
      CHECK(p->d1(r) == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(p->d2(r) == doctest::Approx(fd2).epsilon(1e-6));
      CHECK(p->evaluate(r).f == p->value(r));
    }
  }
  // Closed forms for the direct expression.
  for (double r = 0.5; r <= 3.5; r += 0.25) {
    CHECK(pb.d1(r) == doctest::Approx(-std::exp(-r) + 0.2 * r).epsilon(1e-10));
    CHECK(pb.d2(r) == doctest::Approx(std::exp(-r) + 0.2).epsilon(1e-9));
  }
}

TEST_CASE("equality profile has vanishing fhat") {
  for (int n : {2, 3, 5}) {
    const auto p = equality_profile(n, {0.05, 6.0});
    for (double r = 0.05; r <= 6.0; r += 0.05) {
      const double scale = n * std::pow(std::sinh(r), -n - 1) * std::cosh(r);
      CHECK(std::abs(p.fhat(r)) <= 1e-14 * scale);
    }
  }
}

TEST_CASE("profile errors") {
  const auto fhat = Expression::parse("r - 1", "r");
  CHECK_THROWS_AS(profile_from_fhat(fhat, 2, {1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(profile_from_fhat(fhat, 1, {0.2, 3.0}), InvalidArgument);
  try {
    profile_from_fhat(fhat, 2, {0.2, 3.0}, Normalization{std::nullopt, -0.1});
    FAIL("expected positivity error");
  } catch (const InvalidArgument& err) {
    CHECK(std::string(err.what()).find("positivity violated") != std::string::npos);
  }
  // h decreases below zero in the interior.
  CHECK_THROWS_WITH_AS(profile_from_fhat(Expression::parse("-5", "r"), 2, {0.2, 3.0}),
                       doctest::Contains("positivity violated"), InvalidArgument);
  const auto p = constant_profile(1.0, 2, {0.5, 2.0});
  CHECK_THROWS_AS(p.value(2.5), InvariantViolation);
  CHECK_THROWS_AS(constant_profile(0.0, 2, {0.5, 2.0}), InvalidArgument);
}

TEST_CASE("constant profile fhat") {
  const auto p = constant_profile(1.0, 3, {0.2, 4.0});
  for (double r = 0.2; r <= 4.0; r += 0.1) {
    const double lam = std::sinh(r);
    CHECK(p.fhat(r) == doctest::Approx(3.0 * std::cosh(r) / (lam * lam)).epsilon(1e-15));
  }
}

TEST_CASE("verify assumption reports") {
  const auto p = profile_from_fhat(Expression::parse("r - 1", "r"), 2, {0.2, 3.0});
  auto rep = verify_assumption(p, {0.2, 3.0});
  CHECK(rep.monotone);
  REQUIRE(rep.zero_bracketed);
  CHECK(*rep.zero == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rep.flags.empty());

  const auto eq = equality_profile(2, {0.2, 3.0});
  rep = verify_assumption(eq, {0.2, 3.0}, 64);
  CHECK(rep.monotone);
  CHECK_FALSE(rep.zero_bracketed);
  REQUIRE(rep.flags.size() == 1);
  CHECK(rep.flags[0] == "zero-point condition not strictly met");

  const auto bump = profile_from_fhat(Expression::parse("sinh(r - 1.5)^2 - 0.5", "r"), 2, {0.2, 3.0}, Normalization{std::nullopt, 20.0});
  rep = verify_assumption(bump, {0.2, 3.0});
  CHECK_FALSE(rep.monotone);
  CHECK(rep.first_decrease.has_value());

  const auto w = weight_from_g(Expression::parse("lp^2", "lp"), 3, 2, {1.0, 10.0});
  rep = verify_assumption(w, {1.0, 10.0});
  CHECK(rep.monotone);
  const auto dec = weight_from_g(Expression::parse("sqrt(lp)", "lp"), 3, 2, {1.0, 10.0});
  CHECK_FALSE(verify_assumption(dec, {1.0, 10.0}).monotone);
  CHECK_THROWS_AS(verify_assumption(p, {0.2, 3.0}, 32), InvalidArgument);
}

TEST_CASE("weights from expressions") {
  const auto w = weight_from_g(Expression::parse("lp^2", "lp"), 3, 2, {1.0, 10.0});
  CHECK(w.source() == WeightSource::Expression);
  for (double lp = 1.0; lp <= 10.0; lp += 0.5) {
    CHECK(w.g(lp) == doctest::Approx(lp * lp));
    CHECK(w.dg(lp) == doctest::Approx(2 * lp).epsilon(1e-10));
    CHECK(w.f(lp) == doctest::Approx(std::pow(lp * lp, 0.5)).epsilon(1e-14));
    CHECK(w.df(lp) == doctest::Approx(1.0).epsilon(1e-10));
  }
  const auto wf = weight_from_f(Expression::parse("lp", "lp"), 4, 2, {1.0, 10.0});
  CHECK(wf.g(2.0) == doctest::Approx(std::pow(2.0, 1.5)));
  CHECK(wf.dg(2.0) == doctest::Approx(1.5 * std::sqrt(2.0)).epsilon(1e-10));
  const auto d = default_weight(3, 3);
  CHECK(d.source() == WeightSource::Default);
  CHECK(d.g(2.5) == 2.5);
  CHECK(d.dg(2.5) == 1.0);
  CHECK_FALSE(d.has_f());
  CHECK_THROWS_AS(d.f(2.0), InvalidArgument);
  CHECK_THROWS_AS(weight_from_f(Expression::parse("lp", "lp"), 3, 3, {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(weight_from_g(Expression::parse("1 - lp", "lp"), 3, 2, {1.0, 2.0}).g(1.5), InvariantViolation);
}

TEST_CASE("homogeneous ODE reproduces cosh(sqrt(n) s)") {
  for (int n : {2, 3}) {
    const double c = std::sqrt(static_cast<double>(n));
    const Interval s{0.5, 2.0};
    const auto w = weight_from_ode(2, n, {std::cosh(c * s.lo), std::cosh(c * s.hi)}, s, {800, true});
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = s.lo + (s.hi - s.lo) * i / 1000.0;
      worst = std::max(worst, std::abs(w.g_of_s(x) - std::cosh(c * x)));
      CHECK(w.dg_ds(x) == doctest::Approx(c * std::sinh(c * x)).epsilon(1e-7));
    }
    CHECK(worst < 1e-8);
    CHECK(w.ode_residual() < 1e-8);
  }
}

TEST_CASE("constraint ODE residual for k=2, n=3") {
  const Interval s{0.5, 2.0};
  const auto w = weight_from_ode(2, 3, {std::pow(std::cosh(s.lo), 2), std::pow(std::cosh(s.hi), 2)}, s);
  CHECK(w.source() == WeightSource::Ode);
  CHECK(w.ode_residual() < 1e-8);
  // Independent check at off-node points from the interpolant and finite differences in lambda'.
  for (double x = 0.7; x <= 1.8; x += 0.0137) {
    const double lp = std::cosh(x);
    CHECK(w.g(lp) == doctest::Approx(w.g_of_s(x)).epsilon(1e-14));
    CHECK(w.dg(lp) == doctest::Approx(w.dg_ds(x) / std::sinh(x)).epsilon(1e-12));
    // Step well above the table spacing so the interpolant's kinks do not matter.
    const double e = 0.01;
    auto g = [&](double y) { return w.g_of_s(y); };
    const double g2 = (-g(x + 2 * e) + 16 * g(x + e) - 30 * g(x) + 16 * g(x - e) - g(x - 2 * e)) / (12 * e * e);
    const double rhs = lp * w.dg(lp) / (2 - 1);
    CHECK(std::abs(g2 / 3.0 - w.g_of_s(x) - rhs) < 1e-5);
  }
}

TEST_CASE("ODE weight errors") {
  CHECK_THROWS_WITH_AS(weight_from_ode(1, 3, {1.0, 2.0}, {0.5, 2.0}), doctest::Contains("degenerate coefficient"),
                       InvalidArgument);
  CHECK_THROWS_AS(weight_from_ode(2, 3, {1.0, 2.0}, {0.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(weight_from_ode(2, 3, {1.0, 2.0}, {-1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(weight_from_ode(2, 3, {1.0, 2.0}, {2.0, 1.0}), InvalidArgument);
}

TEST_CASE("profiles are safe to evaluate concurrently") {
  const auto p = profile_from_fhat(Expression::parse("r - 1", "r"), 2, {0.2, 3.0});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.2, 3.0);
  std::vector<double> rs(200);
  for (auto& r : rs) r = unit(rng);
  std::vector<double> a(rs.size()), b(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) a[i] = p.value(rs[i]);
  std::thread t([&] {
    for (std::size_t i = 0; i < rs.size(); ++i) b[i] = p.value(rs[i]);
  });
  t.join();
  CHECK(a == b);
}
