#pragma once

// Integral quantities of closed starshaped graphs: curvature integrals and the
// Minkowski residual, the weighted volume W0 = int u dmu, the Michael-Simon
// type inequalities, and monotonicity audits of flow time series.

#include "hyperflow/hyperbolic_geometry.hpp"
#include "hyperflow/profiles.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hyperflow {

/// omega_n = |S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2).
double omega(int n);

struct CurvatureIntegrals {
  double area = 0.0;
  double int_em = 0.0;             // int E_m dmu
  double int_lp_em1 = 0.0;         // int lambda' E_{m-1} dmu
  double int_u_em = 0.0;           // int u E_m dmu
  double minkowski_residual = 0.0; // int lambda' E_{m-1} - int u E_m
};

/// Requires 1 <= m <= n. E_1 uses H/n; higher m need principal curvatures,
/// which are computed here if the geometry lacks them.
CurvatureIntegrals curvature_integrals(const GeometryData& geometry, int m);

/// E_0..E_m per node, node-major with stride m + 1.
std::vector<double> normalized_curvatures(const GeometryData& geometry, int m);

/// W0 = int u dmu.
double weighted_volume(const GeometryData& geometry);
/// h0(R) = omega_n sinh^{n+1} R, the weighted volume of the geodesic ball.
double h0(double R, int n);
/// Closed-form inverse asinh((W / omega_n)^{1/(n+1)}); W > 0.
double h0_inverse(double W, int n);
/// p_k(R) = omega_n f^{(n+1-k)/(n-k)} lambda'^{k-1} lambda^{n-k+1}(R); 1 <= k <= n-1.
double p_k(double R, int k, int n, double f_const);

struct EnclosedQuantities {
  double weighted_volume = 0.0;
  double radius = 0.0;  // h0^{-1}(W0)
  double h0 = 0.0;      // h0(radius), equals W0
  double p_k = 0.0;
  double omega = 0.0;
};

EnclosedQuantities enclosed_quantities(const GeometryData& geometry, int k, double f_const);

/// A function f on the hypersurface extended radially, f = f(r).
struct RadialExtension {
  std::string description;
  std::function<double(double)> f;   // f(r)
  std::function<double(double)> df;  // df/dr

  static RadialExtension constant(double c);
  /// f = fbar(r).
  static RadialExtension from_profile(const RadialProfile& profile);
  /// f = ftilde(cosh r); requires k <= n - 1.
  static RadialExtension from_weight(const WeightProfile& weight);
};

struct InequalityReport {
  int k = 1;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;            // lhs - rhs
  double relative_gap = 0.0;   // gap / rhs
  double curvature_term = 0.0; // int lambda' sqrt(f^2 E_k^2 + |grad f|^2 E_{k-1}^2)
  double gradient_term = 0.0;  // int <grad(f lambda'), nu> E_{k-1}
  double boundary_term = 0.0;  // closed hypersurfaces
  double f_integral = 0.0;     // int f^{n/(n-1)} (k = 1) or int f^{(n-k+1)/(n-k)} E_{k-1} (k >= 2)
  double weighted_volume = 0.0;
  double radius = 0.0;         // h0^{-1}(W0)
  double f_const = 0.0;        // constant used in p_k
  double volume_chain = 0.0;   // p_k(h0^{-1}(W0)) for k >= 2, omega_n for k = 1
  std::string extension;
};

/// LHS and RHS of the weighted Michael-Simon inequality for 1 <= k <= n-1.
/// For k >= 2 the curvatures must lie in Gamma_k^+ at every node. f_const
/// defaults to f at radius h0^{-1}(W0).
InequalityReport michael_simon_report(const GeometryData& geometry, int k, const RadialExtension& f,
                                      std::optional<double> f_const = std::nullopt);

struct TimeSeries;
struct FlowLawSpec;

struct AuditReport {
  bool passed = true;
  std::vector<std::string> flags;  // each names the check and the record index
  // Mcf
  bool f_pow_nonincreasing = true;
  double rate_error_stated = 0.0;  // max |discrete derivative - stated rate| / max |rate|
  double rate_error_exact = 0.0;   // same against the rate including the tangential term
  // Icf
  bool w0_nondecreasing = true;
  std::string weight_status;       // "certified", "empirical" or "not applicable"
  std::optional<bool> weighted_curvature_nonincreasing;
  // Both
  bool gap_nonnegative = true;
  double final_relative_gap = 0.0;
  std::optional<double> decay_rate;
};

/// Checks the monotone quantities of a recorded run with per-record relative
/// slack. Throws InvalidArgument for fewer than 3 records.
AuditReport monotonicity_audit(const TimeSeries& series, const FlowLawSpec& law, double slack = 1e-8,
                               double grad_tol = 1e-8);

/// Whether a weight supports the monotonicity of int E_{k-1} gtilde on
/// lambda' in `range`: "certified" for ODE weights, "empirical" when
/// lambda' gtilde' >= gtilde on samples, else "not applicable".
std::string weight_status(const WeightProfile& weight, Interval range);

}  // namespace hyperflow
