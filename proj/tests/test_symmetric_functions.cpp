#include <doctest.h>

#include "hyperflow/error.hpp"
#include "hyperflow/symmetric_functions.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

using namespace hyperflow;

TEST_CASE("normalized elementary values") {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const std::vector<double> k123{1.0, 2.0, 3.0};
  CHECK(normalized_elementary(ones, 2) == doctest::Approx(1.0));
  CHECK(normalized_elementary(k123, 2) == doctest::Approx(11.0 / 3.0).epsilon(1e-15));
  CHECK(normalized_elementary(k123, 2) == doctest::Approx(oracle::normalized_by_subsets(k123, 2)).epsilon(1e-15));
  CHECK(normalized_elementary(k123, 4) == 0.0);
  CHECK(normalized_elementary(k123, 0) == 1.0);
  CHECK(normalized_elementary(k123, 3) == doctest::Approx(6.0));
  CHECK_THROWS_AS(normalized_elementary(k123, -1), InvalidArgument);
}

TEST_CASE("recursion agrees with subset enumeration") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + trial % 6;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& xi : x) xi = unit(rng);
    for (int l = 0; l <= n + 1; ++l) {
      const double ref = oracle::normalized_by_subsets(x, l);
      const double got = normalized_elementary(x, l);
      // Relative to the magnitude of the terms being summed.
      std::vector<double> ax(x.size());
      std::transform(x.begin(), x.end(), ax.begin(), [](double v) { return std::abs(v); });
      const double scale = std::max(1e-300, oracle::normalized_by_subsets(ax, l));
      CHECK(std::abs(got - ref) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("symmetry and homogeneity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-1.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(5);
    for (auto& xi : x) xi = unit(rng);
    auto y = x;
    std::shuffle(y.begin(), y.end(), rng);
    const double c = 0.5 + (trial % 7) * 0.3;
    std::vector<double> cx(x.size());
    std::transform(x.begin(), x.end(), cx.begin(), [c](double v) { return c * v; });
    for (int l = 0; l <= 5; ++l) {
      const double e = normalized_elementary(x, l);
      CHECK(normalized_elementary(y, l) == doctest::Approx(e).epsilon(1e-12).scale(1.0));
      CHECK(normalized_elementary(cx, l) == doctest::Approx(std::pow(c, l) * e).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("gradient against subset oracle and finite differences") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  auto g = normalized_gradient(x, 2);
  CHECK(g[0] == doctest::Approx(5.0 / 3.0));
  CHECK(g[1] == doctest::Approx(4.0 / 3.0));
  CHECK(g[2] == doctest::Approx(1.0));
  std::vector<double> y{0.3, -1.2, 2.5, 0.7};
  for (int l = 1; l <= 4; ++l) {
    auto grad = normalized_gradient(y, l);
    for (std::size_t i = 0; i < y.size(); ++i) {
      auto yp = y, ym = y;
      yp[i] += 1e-6;
      ym[i] -= 1e-6;
      const double fd = (oracle::normalized_by_subsets(yp, l) - oracle::normalized_by_subsets(ym, l)) / 2e-6;
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-7).scale(1.0));
    }
  }
}

TEST_CASE("derivative identities on diag(1,2,3)") {
  Eigen::MatrixXd A = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  auto chk = elementary_derivative_checks(A, 2);
  CHECK(chk.edot(0, 0) == doctest::Approx(5.0 / 3.0));
  CHECK(chk.edot(1, 1) == doctest::Approx(4.0 / 3.0));
  CHECK(chk.edot(2, 2) == doctest::Approx(1.0));
  CHECK(chk.trace == doctest::Approx(4.0));
  CHECK(chk.linear == doctest::Approx(22.0 / 3.0));
  CHECK(chk.quadratic == doctest::Approx(16.0));
  CHECK(chk.trace_residual < 1e-14);
  CHECK(chk.linear_residual < 1e-14);
  CHECK(chk.quadratic_residual < 1e-14);
}

TEST_CASE("derivative identities on random symmetric matrices") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 5;
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = unit(rng);
    Eigen::MatrixXd A = 0.5 * (B + B.transpose());
    for (int l = 1; l <= n; ++l) {
      auto chk = elementary_derivative_checks(A, l);
      CHECK(chk.trace_residual < 1e-10);
      CHECK(chk.linear_residual < 1e-10);
      CHECK(chk.quadratic_residual < 1e-10);
      // Edot is the matrix derivative: check one directional derivative against the
      // characteristic-polynomial coefficients by finite differences.
      Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(n, n);
      dA(0, n - 1) += 0.5;
      dA(n - 1, 0) += 0.5;
      auto value = [&](const Eigen::MatrixXd& M) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
        return oracle::normalized_by_subsets(ev, l);
      };
      const double fd = (value(A + 1e-6 * dA) - value(A - 1e-6 * dA)) / 2e-6;
      CHECK(chk.edot.cwiseProduct(dA).sum() == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("derivative check errors") {
  Eigen::MatrixXd A(2, 2);
  A << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(elementary_derivative_checks(A, 1), InvalidArgument);
  CHECK_THROWS_AS(elementary_derivative_checks(Eigen::MatrixXd::Identity(2, 2), 3), InvalidArgument);
}

TEST_CASE("cone membership and Newton-MacLaurin examples") {
  const std::vector<double> k123{1.0, 2.0, 3.0};
  CHECK(in_garding_cone(k123, 3));
  CHECK(newton_maclaurin_gap(k123, 1, 1) == doctest::Approx(1.0 / 3.0));
  const std::vector<double> mixed{-1.0, 5.0, 5.0};
  CHECK(normalized_elementary(mixed, 3) == doctest::Approx(-25.0));
  CHECK_FALSE(in_garding_cone(mixed, 3));
  CHECK(in_garding_cone(mixed, 2));
  auto rep = cone_and_maclaurin(k123, 2, 1, 2);
  CHECK(rep.member);
  CHECK(rep.gap > 0.0);
  CHECK_THROWS_AS(newton_maclaurin_gap(k123, 1, 3), InvalidArgument);
  CHECK_THROWS_AS(newton_maclaurin_gap(k123, 2, 1), InvalidArgument);
  CHECK_THROWS_AS(in_garding_cone(k123, 0), InvalidArgument);
}

TEST_CASE("Newton-MacLaurin on random cone samples") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-1.0, 3.0);
  int tested = 0;
  while (tested < 2000) {
    const int n = 2 + tested % 4;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& xi : x) xi = unit(rng);
    for (int m = 1; m <= n - 1; ++m) {
      if (!in_garding_cone(x, m)) continue;
      for (int l = 1; l <= m; ++l) CHECK(newton_maclaurin_gap(x, l, m) >= -1e-12);
      ++tested;
    }
  }
  for (double c = 0.1; c <= 2.0; c += 0.1) {
    std::vector<double> x(4, c);
    for (int m = 1; m <= 3; ++m)
      for (int l = 1; l <= m; ++l) CHECK(std::abs(newton_maclaurin_gap(x, l, m)) < 1e-12);
  }
}
