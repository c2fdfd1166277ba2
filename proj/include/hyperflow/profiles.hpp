#pragma once

// Weight functions of the two flows.
//
//   RadialProfile: fbar(r) for the mean curvature type flow, with the constraint
//     function fhat(r) = n/(n-1) fbar'(r)/lambda + n fbar lambda'/lambda^2.
//   WeightProfile: gtilde(lambda') for the inverse curvature type flow, with
//     ftilde = gtilde^{(n-k)/(n-k+1)} when k <= n-1.

#include "hyperflow/expression.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hyperflow {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

class RadialProfile {
 public:
  struct Values {
    double f;
    double df;  // d fbar / dr
  };
  struct Impl;

  int n() const;
  Interval domain() const;
  const std::string& description() const;

  double value(double r) const;
  double d1(double r) const;
  double d2(double r) const;
  /// fbar and its first derivative in one call; throws outside the domain.
  Values evaluate(double r) const;
  double fhat(double r) const;

  explicit RadialProfile(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<const Impl> impl_;
};

/// h(r_ref) = h_ref fixes the additive constant in fbar = lambda^{1-n} h.
struct Normalization {
  std::optional<double> r_ref;  // defaults to the lower end of the domain
  double h_ref = 1.0;
};

/// Recovers fbar from a prescribed fhat via h' = ((n-1)/n) lambda^n fhat.
/// Throws InvalidArgument "positivity violated at r = ..." if h <= 0 somewhere.
RadialProfile profile_from_fhat(const Expression& fhat, int n, Interval domain, Normalization normalization = {});

/// fbar given directly as an expression in r; derivatives by finite differences.
RadialProfile profile_from_fbar(const Expression& fbar, int n, Interval domain);

/// fbar = lambda^{1-n}, for which fhat vanishes identically.
RadialProfile equality_profile(int n, Interval domain);

/// fbar = c.
RadialProfile constant_profile(double c, int n, Interval domain);

enum class WeightSource { Expression, Ode, Default };

class WeightProfile {
 public:
  struct Impl;

  int n() const;
  int k() const;
  Interval domain() const;  // in lambda'
  WeightSource source() const;
  const std::string& description() const;

  double g(double lp) const;
  double dg(double lp) const;
  /// ftilde = g^{(n-k)/(n-k+1)}; requires k <= n - 1.
  bool has_f() const;
  double f(double lp) const;
  double df(double lp) const;

  /// For ODE weights: g and dg/ds in the arc parameter with lambda' = cosh s.
  double g_of_s(double s) const;
  double dg_ds(double s) const;
  /// For ODE weights: max plug-in residual of the ODE over interior table nodes.
  double ode_residual() const;

  explicit WeightProfile(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<const Impl> impl_;
};

/// gtilde(lambda') = lambda', used when no weight is configured.
WeightProfile default_weight(int n, int k, Interval domain = {1.0, 1e10});

/// gtilde given as an expression in `lp`.
WeightProfile weight_from_g(const Expression& g, int n, int k, Interval domain);

/// ftilde given as an expression in `lp`; gtilde = ftilde^{(n-k+1)/(n-k)}.
WeightProfile weight_from_f(const Expression& f, int n, int k, Interval domain);

struct OdeBoundary {
  double g_lo = 1.0;
  double g_hi = 1.0;
};

struct OdeOptions {
  int intervals = 800;
  bool homogeneous = false;  // drop the first-order term
};

/// Solves (1/n) g'' - g = coth(s)/(k-1) g' on s_domain with Dirichlet data,
/// the constraint ODE written in the arc parameter s with lambda' = cosh s.
WeightProfile weight_from_ode(int k, int n, OdeBoundary boundary, Interval s_domain, OdeOptions options = {});

struct AssumptionReport {
  bool monotone = false;
  std::optional<std::size_t> first_decrease;  // sample index of the first decreasing pair
  bool zero_bracketed = false;
  std::optional<double> zero;
  std::vector<std::string> flags;
  int samples = 0;
};

/// Monotonicity of fhat and the location of its zero on `range`.
AssumptionReport verify_assumption(const RadialProfile& profile, Interval range, int samples = 256);

/// Monotonicity of gtilde / lambda' on `range` (in lambda'); zero fields unused.
AssumptionReport verify_assumption(const WeightProfile& weight, Interval range, int samples = 256);

}  // namespace hyperflow
