#pragma once

// Extrinsic geometry of a starshaped radial graph r(xi) over S^n in H^{n+1},
// the warped product dr^2 + sinh^2(r) sigma.
//
// Tensors are stored per node as flattened column-major n x n blocks in the
// orthonormal frame of the round sphere (see sphere_domain.hpp).

#include "hyperflow/sphere_domain.hpp"

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace hyperflow {

/// Radii beyond this are rejected; sinh/cosh stay far from overflow.
inline constexpr double kMaxRadius = 25.0;

struct WarpFactors {
  double lambda;        // sinh r
  double lambda_prime;  // cosh r
  double gamma;         // cosh r - 1
};

WarpFactors warp_factors(double r);

/// The graph coordinate phi with d phi / dr = 1 / sinh r, i.e. phi = log tanh(r/2).
double phi_of_r(double r);
double r_of_phi(double phi);

/// A radial graph over the sphere. Holds r and the derived phi.
class GraphHypersurface {
 public:
  GraphHypersurface(std::shared_ptr<const SphereGrid> grid, ScalarField r);

  const SphereGrid& grid() const { return *grid_; }
  const std::shared_ptr<const SphereGrid>& grid_ptr() const { return grid_; }
  const ScalarField& r() const { return r_; }
  const ScalarField& phi() const { return phi_; }

 private:
  std::shared_ptr<const SphereGrid> grid_;
  ScalarField r_;
  ScalarField phi_;
};

struct GeometryOptions {
  bool principal_curvatures = true;
  int threads = 1;
};

/// Per-node geometry of a graph. Immutable snapshot of its input.
struct GeometryData {
  std::shared_ptr<const SphereGrid> grid;
  int n = 0;

  std::vector<double> r;
  std::vector<double> lambda;
  std::vector<double> lambda_prime;
  std::vector<double> gamma;
  std::vector<double> v;               // sqrt(1 + |D phi|^2)
  std::vector<double> u;               // support function lambda / v
  std::vector<double> mean_curvature;  // trace of the Weingarten map
  std::vector<double> area_weight;     // lambda^n v, so d mu = area_weight d sigma
  std::vector<double> grad_phi_sq;     // |D phi|^2

  std::vector<double> dphi;            // n per node
  std::vector<double> phi_hessian;     // n*n per node
  std::vector<double> metric;          // g_ij
  std::vector<double> metric_inv;      // g^ij
  std::vector<double> second_form;     // h_ij
  std::vector<double> weingarten;      // h^i_j = g^ik h_kj
  std::vector<double> kappa;           // n per node ascending; empty unless requested

  std::size_t size() const { return r.size(); }
  bool has_curvatures() const { return !kappa.empty(); }

  Eigen::Map<const Eigen::VectorXd> grad(std::size_t i) const { return vec(dphi, i); }
  Eigen::Map<const Eigen::MatrixXd> hess(std::size_t i) const { return mat(phi_hessian, i); }
  Eigen::Map<const Eigen::MatrixXd> g(std::size_t i) const { return mat(metric, i); }
  Eigen::Map<const Eigen::MatrixXd> g_inv(std::size_t i) const { return mat(metric_inv, i); }
  Eigen::Map<const Eigen::MatrixXd> h(std::size_t i) const { return mat(second_form, i); }
  Eigen::Map<const Eigen::MatrixXd> shape(std::size_t i) const { return mat(weingarten, i); }
  Eigen::Map<const Eigen::VectorXd> curvatures(std::size_t i) const;

 private:
  Eigen::Map<const Eigen::VectorXd> vec(const std::vector<double>& data, std::size_t i) const {
    return {data.data() + i * static_cast<std::size_t>(n), n};
  }
  Eigen::Map<const Eigen::MatrixXd> mat(const std::vector<double>& data, std::size_t i) const {
    return {data.data() + i * static_cast<std::size_t>(n * n), n, n};
  }
};

/// Computes every GeometryData field. Throws InvariantViolation with
/// "degenerate radius" for r <= 0, and for r > kMaxRadius or non-finite data.
GeometryData graph_geometry(const GraphHypersurface& surface, const GeometryOptions& options = {});

/// Principal curvatures from h x = kappa g x, ascending, n per node.
/// Throws InvariantViolation naming the node if g is not positive definite.
std::vector<double> principal_curvatures(const GeometryData& geometry);

/// Max-norm residuals of grad(lambda') = lambda^2 D phi and
/// Hess_g(lambda') = lambda' g - u h, with derivatives of lambda' taken numerically.
struct IdentityResiduals {
  double gradient = 0.0;
  double hessian = 0.0;
  std::vector<double> gradient_field;  // per node
  std::vector<double> hessian_field;   // per node
};

IdentityResiduals geometry_identity_residuals(const GeometryData& geometry);

}  // namespace hyperflow
