#include "hyperflow/symmetric_functions.hpp"

#include "hyperflow/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace hyperflow {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return std::round(b);
}

std::vector<double> elementary_all(std::span<const double> x) {
  std::vector<double> e(x.size() + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j >= 1; --j) e[j] += x[i] * e[j - 1];
  }
  return e;
}

double elementary(std::span<const double> x, int l) {
  if (l < 0) throw InvalidArgument("elementary symmetric index must be >= 0");
  if (l == 0) return 1.0;
  if (static_cast<std::size_t>(l) > x.size()) return 0.0;
  return elementary_all(x)[static_cast<std::size_t>(l)];
}

double normalized_elementary(std::span<const double> x, int l) {
  if (l < 0) throw InvalidArgument("elementary symmetric index must be >= 0");
  const int n = static_cast<int>(x.size());
  if (l == 0) return 1.0;
  if (l > n) return 0.0;
  return elementary(x, l) / binomial(n, l);
}

std::vector<double> normalized_gradient(std::span<const double> x, int l) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size(), 0.0);
  if (l < 1 || l > n) return out;
  std::vector<double> rest;
  rest.reserve(x.size());
  const double c = binomial(n, l);
  for (std::size_t i = 0; i < x.size(); ++i) {
    rest.clear();
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j != i) rest.push_back(x[j]);
    }
    out[i] = elementary(rest, l - 1) / c;
  }
  return out;
}

DerivativeChecks elementary_derivative_checks(const Eigen::MatrixXd& A, int l) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != A.rows() || n < 1) throw InvalidArgument("matrix must be square and non-empty");
  if (l < 1 || l > n) throw InvalidArgument("index l=" + std::to_string(l) + " out of range [1, n]");
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + A.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (A + A.transpose()));
  const Eigen::VectorXd lam = eig.eigenvalues();
  const Eigen::MatrixXd Q = eig.eigenvectors();
  std::vector<double> kappa(lam.data(), lam.data() + n);
  const auto grad = normalized_gradient(kappa, l);

  DerivativeChecks out;
  out.eigenvalues = lam;
  out.edot = Q * Eigen::Map<const Eigen::VectorXd>(grad.data(), n).asDiagonal() * Q.transpose();
  out.trace = out.edot.trace();
  out.linear = out.edot.cwiseProduct(A).sum();
  out.quadratic = out.edot.cwiseProduct(A * A).sum();

  const double rho = std::max(1.0, lam.cwiseAbs().maxCoeff());
  const double e_prev = normalized_elementary(kappa, l - 1);
  const double e_l = normalized_elementary(kappa, l);
  const double e_next = normalized_elementary(kappa, l + 1);
  const double e_1 = normalized_elementary(kappa, 1);
  auto relative = [](double value, double target, double scale) {
    return std::abs(value - target) / std::max(std::abs(target), scale);
  };
  out.trace_residual = relative(out.trace, l * e_prev, std::pow(rho, l - 1));
  out.linear_residual = relative(out.linear, l * e_l, std::pow(rho, l));
  out.quadratic_residual = relative(out.quadratic, n * e_1 * e_l - (n - l) * e_next, std::pow(rho, l + 1));
  return out;
}

bool in_garding_cone(std::span<const double> kappa, int k) {
  const int n = static_cast<int>(kappa.size());
  if (k < 1 || k > n) throw InvalidArgument("cone index k=" + std::to_string(k) + " out of range [1, n]");
  const auto e = elementary_all(kappa);
  for (int i = 1; i <= k; ++i) {
    if (!(e[static_cast<std::size_t>(i)] > 0.0)) return false;
  }
  return true;
}

double newton_maclaurin_gap(std::span<const double> kappa, int l, int m) {
  const int n = static_cast<int>(kappa.size());
  if (l < 1 || m < l || m > n - 1) {
    throw InvalidArgument("Newton-MacLaurin indices need 1 <= l <= m <= n-1 (l=" + std::to_string(l) +
                          ", m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")");
  }
  const auto e = elementary_all(kappa);
  auto E = [&](int j) { return e[static_cast<std::size_t>(j)] / binomial(n, j); };
  return E(l) * E(m) - E(m + 1) * E(l - 1);
}

ConeReport cone_and_maclaurin(std::span<const double> kappa, int k, int l, int m) {
  return {in_garding_cone(kappa, k), newton_maclaurin_gap(kappa, l, m)};
}

}  // namespace hyperflow
