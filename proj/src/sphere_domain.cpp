#include "hyperflow/sphere_domain.hpp"

#include "hyperflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hyperflow {

namespace {

constexpr int kMinResolution = 8;
constexpr int kMaxDim = 16;

void check_field(const ScalarField& field, const SphereGrid& grid) {
  if (field.size() != grid.size()) {
    throw InvalidArgument("field has " + std::to_string(field.size()) +
                          " values but the grid has " + std::to_string(grid.size()) + " nodes");
  }
}

// int_0^pi cos(j t) sin^p(t) dt for even j = 0, 2, ..., by the exact recurrence
// I(j + 2) = I(j) (j - p) / (j + p + 2), I(0) = sqrt(pi) Gamma((p+1)/2) / Gamma(p/2 + 1).
std::vector<double> latitude_moments(int count, int p) {
  std::vector<double> out(static_cast<std::size_t>(count), 0.0);
  double value = std::exp(0.5 * std::log(std::numbers::pi) + std::lgamma(0.5 * (p + 1)) - std::lgamma(0.5 * p + 1));
  for (int j = 0; j < count; j += 2) {
    out[static_cast<std::size_t>(j)] = value;
    value *= static_cast<double>(j - p) / (j + p + 2);
  }
  return out;
}

}  // namespace

std::string to_string(GridMode mode) {
  switch (mode) {
    case GridMode::Radial: return "radial";
    case GridMode::Axisymmetric: return "axisymmetric";
    case GridMode::Full2D: return "full2d";
  }
  return "unknown";
}

GridMode grid_mode_from_string(const std::string& name) {
  if (name == "radial") return GridMode::Radial;
  if (name == "axisymmetric") return GridMode::Axisymmetric;
  if (name == "full2d") return GridMode::Full2D;
  throw InvalidArgument("unknown grid mode '" + name + "'");
}

double sphere_area(int n) {
  if (n < 0) throw InvalidArgument("sphere dimension must be non-negative");
  const double half = 0.5 * (n + 1);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

std::vector<double> latitude_weights(int n, int count) {
  if (n < 2) throw InvalidArgument("latitude rule needs n >= 2");
  if (count < 1) throw InvalidArgument("latitude rule needs at least one node");
  const double h = std::numbers::pi / count;
  // Odd moments vanish by symmetry about the equator.
  const auto moments = latitude_moments(count, n - 1);
  const double ring = sphere_area(n - 1);
  std::vector<double> weights(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = (i + 0.5) * h;
    double w = moments[0];
    for (int j = 2; j < count; j += 2) w += 2.0 * moments[static_cast<std::size_t>(j)] * std::cos(j * t);
    weights[static_cast<std::size_t>(i)] = ring * w / count;
  }
  return weights;
}

SphereGrid build_grid(GridMode mode, int n, GridResolution resolution) {
  if (n < 2) throw InvalidArgument("unsupported: hypersurface dimension must be >= 2");
  if (n > kMaxDim) throw InvalidArgument("unsupported: hypersurface dimension above " + std::to_string(kMaxDim));
  SphereGrid grid;
  grid.mode_ = mode;
  grid.dim_ = n;
  switch (mode) {
    case GridMode::Radial: {
      grid.theta_count_ = 1;
      grid.psi_count_ = 1;
      grid.theta_ = {0.5 * std::numbers::pi};
      grid.psi_ = {0.0};
      grid.weights_ = {sphere_area(n)};
      break;
    }
    case GridMode::Axisymmetric: {
      const int count = resolution.theta;
      if (count < kMinResolution) {
        throw InvalidArgument("resolution too small: need at least " + std::to_string(kMinResolution) +
                              " latitude nodes, got " + std::to_string(count));
      }
      grid.theta_count_ = count;
      grid.psi_count_ = 1;
      grid.spacing_ = std::numbers::pi / count;
      grid.min_spacing_ = grid.spacing_;
      grid.theta_.resize(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) grid.theta_[static_cast<std::size_t>(i)] = (i + 0.5) * grid.spacing_;
      grid.psi_.assign(static_cast<std::size_t>(count), 0.0);
      grid.weights_ = latitude_weights(n, count);
      break;
    }
    case GridMode::Full2D: {
      if (n != 2) throw InvalidArgument("unsupported: Full2D grids require n = 2");
      const int nt = resolution.theta;
      const int np = resolution.psi;
      if (nt < kMinResolution || np < kMinResolution) {
        throw InvalidArgument("resolution too small: need at least " + std::to_string(kMinResolution) +
                              " nodes per coordinate");
      }
      if (np % 2 != 0) throw InvalidArgument("unsupported: Full2D needs an even azimuthal node count");
      grid.theta_count_ = nt;
      grid.psi_count_ = np;
      grid.spacing_ = std::numbers::pi / nt;
      const double hpsi = 2.0 * std::numbers::pi / np;
      grid.min_spacing_ = std::min(grid.spacing_, std::sin(0.5 * grid.spacing_) * hpsi);
      const auto lat = latitude_weights(2, nt);
      const auto total = static_cast<std::size_t>(nt) * static_cast<std::size_t>(np);
      grid.theta_.resize(total);
      grid.psi_.resize(total);
      grid.weights_.resize(total);
      for (int i = 0; i < nt; ++i) {
        for (int j = 0; j < np; ++j) {
          const auto k = grid.index(i, j);
          grid.theta_[k] = (i + 0.5) * grid.spacing_;
          grid.psi_[k] = j * hpsi;
          grid.weights_[k] = lat[static_cast<std::size_t>(i)] / np;
        }
      }
      break;
    }
  }
  return grid;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

ScalarField sample(const SphereGrid& grid, const std::function<double(double, double)>& fn) {
  std::vector<double> values(grid.size());
  const auto theta = grid.theta();
  const auto psi = grid.psi();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = fn(theta[i], psi[i]);
  return ScalarField(std::move(values));
}

namespace {

void differentiate_axisymmetric(const ScalarField& f, const SphereGrid& grid, FieldDerivatives& out) {
  const int count = grid.theta_count();
  const int n = grid.dim();
  const double h = grid.spacing();
  const auto theta = grid.theta();
  for (int i = 0; i < count; ++i) {
    // Even reflection across the poles: axisymmetric functions are even in theta there.
    const double left = f[static_cast<std::size_t>(i == 0 ? 0 : i - 1)];
    const double right = f[static_cast<std::size_t>(i == count - 1 ? count - 1 : i + 1)];
    const double centre = f[static_cast<std::size_t>(i)];
    const double d1 = (right - left) / (2.0 * h);
    const double d2 = (right - 2.0 * centre + left) / (h * h);
    const double t = theta[static_cast<std::size_t>(i)];
    const double angular = d1 * std::cos(t) / std::sin(t);
    const auto node = static_cast<std::size_t>(i);
    double* g = out.gradient.data() + node * static_cast<std::size_t>(n);
    double* H = out.hessian.data() + node * static_cast<std::size_t>(n * n);
    g[0] = d1;
    H[0] = d2;
    for (int a = 1; a < n; ++a) H[a * n + a] = angular;
  }
}

void differentiate_full2d(const ScalarField& f, const SphereGrid& grid, FieldDerivatives& out) {
  const int nt = grid.theta_count();
  const int np = grid.psi_count();
  const double ht = grid.spacing();
  const double hp = 2.0 * std::numbers::pi / np;
  const int half = np / 2;
  // Value at latitude index i (possibly one step past a pole) and azimuth index j.
  auto at = [&](int i, int j) {
    if (i < 0) {
      i = -1 - i;
      j += half;
    } else if (i >= nt) {
      i = 2 * nt - 1 - i;
      j += half;
    }
    j = ((j % np) + np) % np;
    return f[grid.index(i, j)];
  };
  for (int i = 0; i < nt; ++i) {
    const double t = (i + 0.5) * ht;
    const double s = std::sin(t);
    const double c = std::cos(t);
    for (int j = 0; j < np; ++j) {
      const double centre = at(i, j);
      const double ft = (at(i + 1, j) - at(i - 1, j)) / (2.0 * ht);
      const double fp = (at(i, j + 1) - at(i, j - 1)) / (2.0 * hp);
      const double ftt = (at(i + 1, j) - 2.0 * centre + at(i - 1, j)) / (ht * ht);
      const double fpp = (at(i, j + 1) - 2.0 * centre + at(i, j - 1)) / (hp * hp);
      const double ftp =
          (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * ht * hp);
      // Coordinate Hessian with Christoffel symbols of d theta^2 + sin^2 theta d psi^2:
      // Gamma^theta_{psi psi} = -sin cos, Gamma^psi_{theta psi} = cot.
      const double h_tt = ftt;
      const double h_tp = ftp - (c / s) * fp;
      const double h_pp = fpp + s * c * ft;
      const auto node = grid.index(i, j);
      double* g = out.gradient.data() + node * 2;
      double* H = out.hessian.data() + node * 4;
      g[0] = ft;
      g[1] = fp / s;
      H[0] = h_tt;
      H[1] = h_tp / s;
      H[2] = h_tp / s;
      H[3] = h_pp / (s * s);
    }
  }
}

}  // namespace

FieldDerivatives differentiate(const ScalarField& field, const SphereGrid& grid) {
  check_field(field, grid);
  FieldDerivatives out;
  out.dim = grid.dim();
  const auto n = static_cast<std::size_t>(grid.dim());
  out.gradient.assign(grid.size() * n, 0.0);
  out.hessian.assign(grid.size() * n * n, 0.0);
  switch (grid.mode()) {
    case GridMode::Radial: break;
    case GridMode::Axisymmetric: differentiate_axisymmetric(field, grid, out); break;
    case GridMode::Full2D: differentiate_full2d(field, grid, out); break;
  }
  return out;
}

double integrate(const ScalarField& field, const SphereGrid& grid) {
  check_field(field, grid);
  if (!field.all_finite()) throw InvalidArgument("cannot integrate a field with non-finite values");
  return integrate_nodes(grid, [&](std::size_t i) { return field[i]; });
}

}  // namespace hyperflow
