#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace hyperflow {

double binomial(int n, int k);

/// sigma_0..sigma_n of x by the product recursion prod (1 + x_i t).
std::vector<double> elementary_all(std::span<const double> x);

/// sigma_l(x); 1 for l = 0 and 0 for l > n.
double elementary(std::span<const double> x, int l);

/// E_l = sigma_l / C(n, l); E_0 = 1 and E_l = 0 for l > n.
double normalized_elementary(std::span<const double> x, int l);

/// dE_l / dx_i = sigma_{l-1}(x without x_i) / C(n, l), for every i.
std::vector<double> normalized_gradient(std::span<const double> x, int l);

struct DerivativeChecks {
  Eigen::MatrixXd edot;        // dE_l / dA_ij in the frame of A
  Eigen::VectorXd eigenvalues;
  double trace = 0.0;          // sum Edot^ij delta_ij
  double linear = 0.0;         // sum Edot^ij A_ij
  double quadratic = 0.0;      // sum Edot^ij (A^2)_ij
  // Relative residuals against l E_{l-1}, l E_l, n E_1 E_l - (n-l) E_{l+1}.
  double trace_residual = 0.0;
  double linear_residual = 0.0;
  double quadratic_residual = 0.0;
};

/// Derivative of E_l with respect to a symmetric matrix, evaluated in its
/// eigenframe and rotated back, plus the three contraction identities.
/// Throws InvalidArgument for asymmetric A or l outside [1, n].
DerivativeChecks elementary_derivative_checks(const Eigen::MatrixXd& A, int l);

/// kappa in Gamma_k^+, i.e. E_1..E_k all positive. Requires 1 <= k <= n.
bool in_garding_cone(std::span<const double> kappa, int k);

/// E_l E_m - E_{m+1} E_{l-1}. Requires 1 <= l <= m <= n - 1.
double newton_maclaurin_gap(std::span<const double> kappa, int l, int m);

struct ConeReport {
  bool member = false;
  double gap = 0.0;
};

ConeReport cone_and_maclaurin(std::span<const double> kappa, int k, int l, int m);

}  // namespace hyperflow
