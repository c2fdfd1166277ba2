#pragma once

// Discretization of the round sphere S^n: nodes, quadrature weights and
// covariant derivatives with respect to the standard metric.
//
// Derivatives are reported in the orthonormal frame of the coordinate chart:
//   Axisymmetric: e_1 = d/dtheta, e_2..e_n the (equivalent) angular directions
//   Full2D:       e_1 = d/dtheta, e_2 = (1/sin theta) d/dpsi
// so sigma_ij = delta_ij and index placement does not matter.

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hyperflow {

enum class GridMode { Radial, Axisymmetric, Full2D };

std::string to_string(GridMode mode);
GridMode grid_mode_from_string(const std::string& name);

/// Node counts per coordinate. `psi` is only used by Full2D.
struct GridResolution {
  int theta = 0;
  int psi = 0;
};

/// Area of the unit sphere S^n, 2 pi^{(n+1)/2} / Gamma((n+1)/2).
double sphere_area(int n);

class SphereGrid {
 public:
  GridMode mode() const { return mode_; }
  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  int theta_count() const { return theta_count_; }
  int psi_count() const { return psi_count_; }

  /// Latitude of every node (Radial: pi/2 by convention).
  std::span<const double> theta() const { return theta_; }
  /// Azimuth of every node (zero outside Full2D).
  std::span<const double> psi() const { return psi_; }
  std::span<const double> weights() const { return weights_; }

  /// Latitude spacing h (zero on a Radial grid).
  double spacing() const { return spacing_; }
  /// Smallest geodesic distance between neighbouring nodes; governs explicit
  /// time-step limits. Equals spacing() except on Full2D near the poles.
  double min_spacing() const { return min_spacing_; }

  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(psi_count_) +
           static_cast<std::size_t>(j);
  }

 private:
  friend SphereGrid build_grid(GridMode mode, int n, GridResolution resolution);

  GridMode mode_ = GridMode::Radial;
  int dim_ = 2;
  int theta_count_ = 1;
  int psi_count_ = 1;
  double spacing_ = 0.0;
  double min_spacing_ = 0.0;
  std::vector<double> theta_;
  std::vector<double> psi_;
  std::vector<double> weights_;
};

/// Builds a grid. Requires n >= 2, at least 8 nodes per coordinate, Full2D
/// only for n = 2 with an even azimuthal count.
SphereGrid build_grid(GridMode mode, int n, GridResolution resolution);

/// Quadrature weights of the latitude rule for integrals of axisymmetric
/// functions over S^n at the cell-centred nodes (i + 1/2) pi / count.
/// Interpolatory in cos(j theta), j < count; for n = 2 this is Fejer's first rule.
std::vector<double> latitude_weights(int n, int count);

/// Nodal samples of a scalar quantity on a grid.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(std::vector<double> values) : values_(std::move(values)) {}
  ScalarField(std::size_t size, double value) : values_(size, value) {}

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }

  double min() const;
  double max() const;
  bool all_finite() const;

 private:
  std::vector<double> values_;
};

/// Samples fn(theta, psi) at every node.
ScalarField sample(const SphereGrid& grid,
                   const std::function<double(double, double)>& fn);

/// Frame components of the covariant gradient and Hessian at every node.
struct FieldDerivatives {
  int dim = 0;
  std::vector<double> gradient;  // node-major, dim entries per node
  std::vector<double> hessian;   // node-major, dim*dim entries per node (column-major)

  std::size_t size() const { return dim == 0 ? 0 : gradient.size() / static_cast<std::size_t>(dim); }

  Eigen::Map<const Eigen::VectorXd> grad(std::size_t node) const {
    return {gradient.data() + node * static_cast<std::size_t>(dim), dim};
  }
  Eigen::Map<const Eigen::MatrixXd> hess(std::size_t node) const {
    return {hessian.data() + node * static_cast<std::size_t>(dim * dim), dim, dim};
  }
};

/// Second-order covariant derivatives with respect to the round metric.
/// Radial fields are constant and get zero derivatives.
FieldDerivatives differentiate(const ScalarField& field, const SphereGrid& grid);

/// Quadrature of a field over S^n, summed in node order.
double integrate(const ScalarField& field, const SphereGrid& grid);

/// Quadrature of per-node values produced by fn(node), summed in node order.
template <class Fn>
double integrate_nodes(const SphereGrid& grid, Fn&& fn) {
  const auto w = grid.weights();
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += w[i] * fn(i);
  return total;
}

}  // namespace hyperflow
