#include "hyperflow/hyperbolic_geometry.hpp"

#include "hyperflow/error.hpp"
#include "hyperflow/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace hyperflow {

namespace {

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 16, 16>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 16, 1>;

std::string node_message(const char* what, std::size_t node, double value) {
  std::ostringstream out;
  out.precision(17);
  out << what << " at node " << node << " (r = " << value << ")";
  return out.str();
}

void check_radius(double r, std::size_t node) {
  if (!std::isfinite(r)) throw InvariantViolation(node_message("non-finite radius", node, r));
  if (r <= 0.0) throw InvariantViolation(node_message("degenerate radius", node, r));
  if (r > kMaxRadius) throw InvariantViolation(node_message("radius exceeds the supported maximum 25", node, r));
}

}  // namespace

WarpFactors warp_factors(double r) {
  if (!(r >= 0.0)) throw InvalidArgument("warp factors need r >= 0");
  const double lp = std::cosh(r);
  // cosh r - 1 = 2 sinh^2(r/2) keeps Gamma accurate for small r.
  const double s = std::sinh(0.5 * r);
  return {std::sinh(r), lp, 2.0 * s * s};
}

double phi_of_r(double r) { return std::log(std::tanh(0.5 * r)); }

double r_of_phi(double phi) { return 2.0 * std::atanh(std::exp(phi)); }

GraphHypersurface::GraphHypersurface(std::shared_ptr<const SphereGrid> grid, ScalarField r)
    : grid_(std::move(grid)), r_(std::move(r)) {
  if (!grid_) throw InvalidArgument("graph needs a grid");
  if (r_.size() != grid_->size()) {
    throw InvalidArgument("radius field has " + std::to_string(r_.size()) + " values but the grid has " +
                          std::to_string(grid_->size()) + " nodes");
  }
  std::vector<double> phi(r_.size());
  for (std::size_t i = 0; i < r_.size(); ++i) {
    check_radius(r_[i], i);
    phi[i] = phi_of_r(r_[i]);
  }
  phi_ = ScalarField(std::move(phi));
}

Eigen::Map<const Eigen::VectorXd> GeometryData::curvatures(std::size_t i) const {
  if (kappa.empty()) throw InvalidArgument("principal curvatures were not computed");
  return vec(kappa, i);
}

GeometryData graph_geometry(const GraphHypersurface& surface, const GeometryOptions& options) {
  const auto& grid = surface.grid();
  const std::size_t count = grid.size();
  const int n = grid.dim();
  const auto nn = static_cast<std::size_t>(n * n);

  GeometryData geo;
  geo.grid = surface.grid_ptr();
  geo.n = n;
  geo.r.assign(surface.r().values().begin(), surface.r().values().end());
  for (std::size_t i = 0; i < count; ++i) check_radius(geo.r[i], i);

  auto deriv = differentiate(surface.phi(), grid);
  geo.dphi = std::move(deriv.gradient);
  geo.phi_hessian = std::move(deriv.hessian);

  for (auto* field : {&geo.lambda, &geo.lambda_prime, &geo.gamma, &geo.v, &geo.u, &geo.mean_curvature,
                      &geo.area_weight, &geo.grad_phi_sq}) {
    field->assign(count, 0.0);
  }
  geo.metric.assign(count * nn, 0.0);
  geo.metric_inv.assign(count * nn, 0.0);
  geo.second_form.assign(count * nn, 0.0);
  geo.weingarten.assign(count * nn, 0.0);

  parallel_for(count, options.threads, [&](std::size_t i) {
    const auto w = warp_factors(geo.r[i]);
    const double lam = w.lambda;
    const double lp = w.lambda_prime;
    Eigen::Map<const Eigen::VectorXd> p(geo.dphi.data() + i * static_cast<std::size_t>(n), n);
    Eigen::Map<const Eigen::MatrixXd> P(geo.phi_hessian.data() + i * nn, n, n);
    if (!p.allFinite() || !P.allFinite()) {
      throw InvariantViolation(node_message("non-finite derivative data", i, geo.r[i]));
    }
    const double s = p.squaredNorm();
    const double v = std::sqrt(1.0 + s);
    const double lam2 = lam * lam;

    Eigen::Map<Eigen::MatrixXd> g(geo.metric.data() + i * nn, n, n);
    Eigen::Map<Eigen::MatrixXd> gi(geo.metric_inv.data() + i * nn, n, n);
    Eigen::Map<Eigen::MatrixXd> h(geo.second_form.data() + i * nn, n, n);
    Eigen::Map<Eigen::MatrixXd> W(geo.weingarten.data() + i * nn, n, n);

    const double a = lp / (lam * v);
    const double b = lam / v;
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < n; ++r) {
        const double delta = r == c ? 1.0 : 0.0;
        g(r, c) = lam2 * (delta + p(r) * p(c));
        gi(r, c) = (delta - p(r) * p(c) / (v * v)) / lam2;
        h(r, c) = a * g(r, c) - b * P(r, c);
      }
    }
    W.noalias() = gi * h;

    geo.lambda[i] = lam;
    geo.lambda_prime[i] = lp;
    geo.gamma[i] = w.gamma;
    geo.v[i] = v;
    geo.u[i] = lam / v;
    geo.mean_curvature[i] = W.trace();
    geo.area_weight[i] = std::pow(lam, n) * v;
    geo.grad_phi_sq[i] = s;
  });

  if (options.principal_curvatures) geo.kappa = principal_curvatures(geo);
  return geo;
}

std::vector<double> principal_curvatures(const GeometryData& geometry) {
  const int n = geometry.n;
  const std::size_t count = geometry.size();
  std::vector<double> kappa(count * static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < count; ++i) {
    SmallMatrix g = geometry.g(i);
    SmallMatrix h = geometry.h(i);
    Eigen::LLT<SmallMatrix> llt(g);
    if (llt.info() != Eigen::Success) {
      throw InvariantViolation("metric is not positive definite at node " + std::to_string(i));
    }
    // Reduce h x = k g x to the standard problem L^{-1} h L^{-T} y = k y.
    SmallMatrix lower = llt.matrixL();
    SmallMatrix reduced = lower.triangularView<Eigen::Lower>().solve(h);
    reduced = lower.triangularView<Eigen::Lower>().solve(reduced.transpose()).transpose();
    reduced = 0.5 * (reduced + reduced.transpose());
    Eigen::SelfAdjointEigenSolver<SmallMatrix> eig(reduced, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
      throw InvariantViolation("curvature eigensolver failed at node " + std::to_string(i));
    }
    SmallVector values = eig.eigenvalues();
    for (int a = 0; a < n; ++a) kappa[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(a)] = values(a);
  }
  return kappa;
}

IdentityResiduals geometry_identity_residuals(const GeometryData& geometry) {
  const auto& grid = *geometry.grid;
  const int n = geometry.n;
  const std::size_t count = geometry.size();
  auto d = differentiate(ScalarField(geometry.lambda_prime), grid);

  IdentityResiduals out;
  out.gradient_field.assign(count, 0.0);
  out.hessian_field.assign(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const double lam = geometry.lambda[i];
    const double lp = geometry.lambda_prime[i];
    const double v = geometry.v[i];
    auto p = geometry.grad(i);
    auto P = geometry.hess(i);
    auto psi1 = d.grad(i);
    auto psi2 = d.hess(i);

    SmallVector grad_res = psi1 - lam * lam * p;
    out.gradient_field[i] = grad_res.cwiseAbs().maxCoeff();

    // Difference of the Levi-Civita connections of g and sigma, contracted with D lambda'.
    const double pdpsi = p.dot(psi1);
    SmallMatrix conn = lp * (p * psi1.transpose() + psi1 * p.transpose());
    SmallMatrix sigma_plus = SmallMatrix::Identity(n, n) + p * p.transpose();
    conn -= (lp / (v * v)) * pdpsi * sigma_plus;
    conn += (pdpsi / (v * v)) * P;

    SmallMatrix hess_g = psi2 - conn;
    SmallMatrix expected = lp * geometry.g(i) - geometry.u[i] * geometry.h(i);
    out.hessian_field[i] = (hess_g - expected).cwiseAbs().maxCoeff();
  }
  for (std::size_t i = 0; i < count; ++i) {
    out.gradient = std::max(out.gradient, out.gradient_field[i]);
    out.hessian = std::max(out.hessian, out.hessian_field[i]);
  }
  return out;
}

}  // namespace hyperflow
