#pragma once

// Time integration of the two locally constrained flows of radial graphs.
//
//   Mcf: F = -(fbar H / v + n/(n-1) dfbar/dr), the mean curvature type flow.
//   Icf: F = E_{k-2}/E_{k-1} - u/lambda', the inverse curvature type flow.
//
// The graph moves with dr/dt = F v, integrated by classical RK4.

#include "hyperflow/hyperbolic_geometry.hpp"
#include "hyperflow/profiles.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hyperflow {

enum class FlowLaw { Mcf, Icf };

std::string to_string(FlowLaw law);

struct FlowLawSpec {
  FlowLaw law = FlowLaw::Mcf;
  std::optional<RadialProfile> profile;  // Mcf
  int k = 2;                             // Icf
  std::optional<WeightProfile> weight;   // Icf, used by the monitored functionals only

  static FlowLawSpec mcf(RadialProfile profile);
  static FlowLawSpec icf(int k, std::optional<WeightProfile> weight = std::nullopt);
};

struct FlowState {
  double t = 0.0;
  GraphHypersurface surface;
  GeometryData geometry;
  FlowLawSpec law;
};

/// Builds a state and checks its invariants: u > 0, radii inside the profile
/// domain (Mcf), and kappa in Gamma_k^+ at every node (Icf).
FlowState make_state(GraphHypersurface surface, FlowLawSpec law, double t = 0.0, int threads = 1);

/// Normal speed per node. Icf throws InvariantViolation "cone violation" when E_{k-1} <= 0.
std::vector<double> flow_velocity(const FlowState& state, int threads = 1);

/// d phi / dt for the Mcf law in three algebraically equal forms: the radial
/// form divided by lambda, the phi form, and the divergence form.
struct PhiRates {
  std::vector<double> radial;
  std::vector<double> phi;
  std::vector<double> divergence;
};
PhiRates mcf_phi_rates(const FlowState& state);

/// Explicit step bound: c h^2 min(lambda^2) / max(n max fbar, 1) for Mcf and
/// c h^2 min(lambda^2) / max(n max |dF/dkappa| v, 1) for Icf; h = 1 on Radial grids.
double stable_time_step(const FlowState& state, double c_cfl);

struct StepOptions {
  double c_cfl = 0.2;
  int threads = 1;
};

/// One RK4 step. Throws StepRejected when dt exceeds twice the stable bound,
/// values go non-finite, or an invariant of the new state fails.
FlowState advance(const FlowState& state, double dt, const StepOptions& options = {});

/// Time derivatives of global quantities and lambda' under the normal speed F.
struct EvolutionRates {
  double area = 0.0;                       // int H F dmu
  double weighted_volume = 0.0;            // (n+1) int lambda' F dmu
  std::vector<double> lambda_prime_normal; // u F, along the normal parametrization
  std::vector<double> lambda_prime_graph;  // lambda v F, at fixed xi
};
EvolutionRates evolution_rates(const FlowState& state, const std::vector<double>& F);

struct SeriesRow {
  double t = 0.0;
  double dt = 0.0;
  double area = 0.0;
  double int_f_pow = 0.0;
  double W0 = 0.0;
  double int_Ek1_g = 0.0;
  double max_grad_sq = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  double minkowski_resid = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  // Not emitted as CSV columns.
  double max_speed = 0.0;
  double rate_stated = 0.0;  // -int fbar^{1/(n-1)} (q fbar' v + fbar H)^2 / v dmu
  double rate_exact = 0.0;   // -int fbar^{1/(n-1)} (q fbar'/v + fbar H)(q fbar' v + fbar H) / v dmu
};

struct TimeSeries {
  std::vector<SeriesRow> rows;
  static const std::vector<std::string>& columns();
};

/// Monitored quantities of a state. int_f_pow is the power integral of the
/// inequality (int fbar^{n/(n-1)} for Mcf, int ftilde^{(n-k+1)/(n-k)} E_{k-1} for
/// Icf with k <= n-1, else 0); int_Ek1_g is int E_{k-1} gtilde for Icf, else 0.
SeriesRow measure(const FlowState& state, double dt, int threads = 1);

struct RunOptions {
  double t_max = 20.0;
  double grad_tol = 1e-8;
  double c_cfl = 0.2;
  int record_every = 10;
  int max_halvings = 40;
  long max_steps = 10'000'000;
  int threads = 1;
};

struct FlowResult {
  FlowState final_state;
  TimeSeries series;
  long steps = 0;
  long rejections = 0;
  std::string stop_reason;               // "converged" or "t_max"
  std::optional<double> decay_rate;      // slope of log max|D phi|^2 on the trailing half
  std::optional<double> target_radius;   // zero of fhat (Mcf)
  double barrier_excess = 0.0;           // worst excursion beyond the barrier hull
  double gradient_bound_excess = 0.0;    // worst max|D phi|^2 beyond max(initial, 1)
  bool invariants_preserved = true;      // starshaped, and Gamma_k^+ for Icf, at every step
};

/// Integrates until max|D phi| < grad_tol and max|F| < grad_tol, or t >= t_max.
FlowResult run_flow(const FlowState& initial, const RunOptions& options = {});

/// Least-squares slope of log(max_grad_sq) over the trailing half of the rows
/// recorded before max_grad_sq first drops below grad_tol^2.
std::optional<double> fit_decay_rate(const TimeSeries& series, double grad_tol);

/// Radius of a geodesic sphere under the law, dr/dt = -lambda fhat (Mcf) or 0 (Icf),
/// integrated by adaptive Dormand-Prince at tolerance 1e-12 and reported at `times`.
std::vector<double> radial_reduction_run(const FlowLawSpec& law, double r0, const std::vector<double>& times);

}  // namespace hyperflow
