#include "hyperflow/flow_engine.hpp"

#include "hyperflow/error.hpp"
#include "hyperflow/functionals.hpp"
#include "hyperflow/parallel.hpp"
#include "hyperflow/symmetric_functions.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <sstream>

namespace hyperflow {

namespace {

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(10);
  out << x;
  return out.str();
}

std::string kappa_text(std::span<const double> kappa) {
  std::ostringstream out;
  out.precision(6);
  out << "(";
  for (std::size_t i = 0; i < kappa.size(); ++i) out << (i ? ", " : "") << kappa[i];
  out << ")";
  return out.str();
}

std::span<const double> node_kappa(const GeometryData& geo, std::size_t i) {
  return {geo.kappa.data() + i * static_cast<std::size_t>(geo.n), static_cast<std::size_t>(geo.n)};
}

GeometryOptions geometry_options(const FlowLawSpec& law, int threads) {
  GeometryOptions opt;
  opt.principal_curvatures = law.law == FlowLaw::Icf;
  opt.threads = threads;
  return opt;
}

void check_law(const FlowLawSpec& law, int n) {
  if (law.law == FlowLaw::Mcf) {
    if (!law.profile) throw InvalidArgument("mean curvature type flow needs a radial profile");
    if (law.profile->n() != n) throw InvalidArgument("profile dimension does not match the grid");
  } else {
    if (law.k < 2 || law.k > n) throw InvalidArgument("flow index k=" + std::to_string(law.k) + " out of range [2, n]");
    if (law.weight && (law.weight->n() != n || law.weight->k() != law.k)) {
      throw InvalidArgument("weight (n, k) does not match the flow");
    }
  }
}

// Normal speed at every node of a geometry.
std::vector<double> velocity(const GeometryData& geo, const FlowLawSpec& law, int threads) {
  const std::size_t count = geo.size();
  std::vector<double> F(count);
  const int n = geo.n;
  if (law.law == FlowLaw::Mcf) {
    const auto& profile = *law.profile;
    const double q = static_cast<double>(n) / (n - 1);
    parallel_for(count, threads, [&](std::size_t i) {
      const auto fv = profile.evaluate(geo.r[i]);
      F[i] = -(fv.f * geo.mean_curvature[i] / geo.v[i] + q * fv.df);
    });
  } else {
    const int k = law.k;
    parallel_for(count, threads, [&](std::size_t i) {
      const auto kappa = node_kappa(geo, i);
      const auto sigma = elementary_all(kappa);
      const double e1 = sigma[static_cast<std::size_t>(k - 1)] / binomial(n, k - 1);
      const double e2 = sigma[static_cast<std::size_t>(k - 2)] / binomial(n, k - 2);
      if (!(e1 > 0.0)) {
        throw InvariantViolation("cone violation at node " + std::to_string(i) + ": E_" + std::to_string(k - 1) +
                                 " = " + fmt(e1) + " <= 0, kappa = " + kappa_text(kappa));
      }
      F[i] = e2 / e1 - geo.u[i] / geo.lambda_prime[i];
    });
  }
  return F;
}

void check_cone(const GeometryData& geo, int k) {
  for (std::size_t i = 0; i < geo.size(); ++i) {
    const auto kappa = node_kappa(geo, i);
    if (!in_garding_cone(kappa, k)) {
      throw InvariantViolation("cone violation at node " + std::to_string(i) + ": kappa = " + kappa_text(kappa) +
                               " is not in Gamma_" + std::to_string(k) + "^+");
    }
  }
}

}  // namespace

std::string to_string(FlowLaw law) { return law == FlowLaw::Mcf ? "mcf" : "icf"; }

FlowLawSpec FlowLawSpec::mcf(RadialProfile profile) {
  FlowLawSpec s;
  s.law = FlowLaw::Mcf;
  s.profile = std::move(profile);
  return s;
}

FlowLawSpec FlowLawSpec::icf(int k, std::optional<WeightProfile> weight) {
  FlowLawSpec s;
  s.law = FlowLaw::Icf;
  s.k = k;
  s.weight = std::move(weight);
  return s;
}

FlowState make_state(GraphHypersurface surface, FlowLawSpec law, double t, int threads) {
  const int n = surface.grid().dim();
  check_law(law, n);
  auto geo = graph_geometry(surface, geometry_options(law, threads));
  for (std::size_t i = 0; i < geo.size(); ++i) {
    if (!(geo.u[i] > 0.0)) throw InvariantViolation("support function not positive at node " + std::to_string(i));
  }
  if (law.law == FlowLaw::Mcf) {
    const auto d = law.profile->domain();
    for (std::size_t i = 0; i < geo.size(); ++i) {
      if (!d.contains(geo.r[i])) {
        throw InvariantViolation("radius " + fmt(geo.r[i]) + " at node " + std::to_string(i) +
                                 " outside profile domain [" + fmt(d.lo) + ", " + fmt(d.hi) + "]");
      }
    }
  } else {
    check_cone(geo, law.k);
  }
  return FlowState{t, std::move(surface), std::move(geo), std::move(law)};
}

std::vector<double> flow_velocity(const FlowState& state, int threads) {
  return velocity(state.geometry, state.law, threads);
}

PhiRates mcf_phi_rates(const FlowState& state) {
  if (state.law.law != FlowLaw::Mcf) throw InvalidArgument("phi forms exist for the mean curvature type flow only");
  const auto& geo = state.geometry;
  const auto& profile = *state.law.profile;
  const int n = geo.n;
  const double q = static_cast<double>(n) / (n - 1);
  PhiRates out;
  const std::size_t count = geo.size();
  out.radial.resize(count);
  out.phi.resize(count);
  out.divergence.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto fv = profile.evaluate(geo.r[i]);
    const double lam = geo.lambda[i];
    const double lp = geo.lambda_prime[i];
    const double v = geo.v[i];
    const double f = fv.f;
    const double fphi = lam * fv.df;  // d fbar / d phi
    const auto p = geo.grad(i);
    const auto P = geo.hess(i);
    const double lap = P.trace();
    const double pPp = p.dot(P * p);
    const double p2 = p.squaredNorm();

    out.radial[i] = (-f * geo.mean_curvature[i] - q * fv.df * v) / lam;

    const double H = n * lp / (lam * v) - (lap - pPp / (v * v)) / (lam * v);
    out.phi[i] = -f * H / lam - q * fphi * v / (lam * lam);

    // div(a D phi) with a = fbar / (lambda^2 v), expanded by the chain rule.
    const double a = f / (lam * lam * v);
    const double da_dphi = (fphi - 2.0 * f * lp) / (lam * lam * v);
    const double da_dv = -f / (lam * lam * v * v);
    const double div = a * lap + da_dphi * p2 + da_dv * pPp / v;
    out.divergence[i] = div + p2 / (lam * lam * v) * (2.0 * f * lp - fphi) - n * f * lp / (lam * lam * v) -
                        q * fphi * v / (lam * lam);
  }
  return out;
}

double stable_time_step(const FlowState& state, double c_cfl) {
  if (!(c_cfl > 0.0)) throw InvalidArgument("c_cfl must be positive");
  const auto& geo = state.geometry;
  const auto& grid = state.surface.grid();
  const int n = geo.n;
  const double h = grid.mode() == GridMode::Radial ? 1.0 : grid.min_spacing();
  double min_lam2 = *std::min_element(geo.lambda.begin(), geo.lambda.end());
  min_lam2 *= min_lam2;
  double scale = 0.0;
  if (state.law.law == FlowLaw::Mcf) {
    for (std::size_t i = 0; i < geo.size(); ++i) scale = std::max(scale, n * state.law.profile->value(geo.r[i]));
  } else {
    const int k = state.law.k;
    for (std::size_t i = 0; i < geo.size(); ++i) {
      const auto kappa = node_kappa(geo, i);
      const double e1 = normalized_elementary(kappa, k - 1);
      const double e2 = normalized_elementary(kappa, k - 2);
      if (!(e1 > 0.0)) throw InvariantViolation("cone violation at node " + std::to_string(i));
      const auto g1 = normalized_gradient(kappa, k - 1);
      const auto g2 = normalized_gradient(kappa, k - 2);
      double worst = 0.0;
      for (int j = 0; j < n; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        worst = std::max(worst, std::abs((g2[jj] - e2 / e1 * g1[jj]) / e1));
      }
      scale = std::max(scale, n * worst * geo.v[i]);
    }
  }
  return c_cfl * h * h * min_lam2 / std::max(scale, 1.0);
}

FlowState advance(const FlowState& state, double dt, const StepOptions& options) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
  const double bound = stable_time_step(state, options.c_cfl);
  if (dt > 2.0 * bound) {
    throw StepRejected("time step " + fmt(dt) + " exceeds the stability bound " + fmt(bound));
  }
  const auto grid = state.surface.grid_ptr();
  const auto& law = state.law;
  const auto gopt = geometry_options(law, options.threads);
  const auto& r0 = state.surface.r();
  const std::size_t count = r0.size();

  auto rate = [&](const GeometryData& geo) {
    auto F = velocity(geo, law, options.threads);
    for (std::size_t i = 0; i < count; ++i) F[i] *= geo.v[i];
    return F;
  };
  auto shifted = [&](const std::vector<double>& k, double c) {
    std::vector<double> r(count);
    for (std::size_t i = 0; i < count; ++i) {
      r[i] = r0[i] + c * k[i];
      if (!std::isfinite(r[i])) throw StepRejected("non-finite radius at node " + std::to_string(i));
    }
    return graph_geometry(GraphHypersurface(grid, ScalarField(std::move(r))), gopt);
  };

  try {
    const auto k1 = rate(state.geometry);
    const auto k2 = rate(shifted(k1, 0.5 * dt));
    const auto k3 = rate(shifted(k2, 0.5 * dt));
    const auto k4 = rate(shifted(k3, dt));
    std::vector<double> r(count);
    for (std::size_t i = 0; i < count; ++i) {
      r[i] = r0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(r[i])) throw StepRejected("non-finite radius at node " + std::to_string(i));
    }
    return make_state(GraphHypersurface(grid, ScalarField(std::move(r))), law, state.t + dt, options.threads);
  } catch (const StepRejected&) {
    throw;
  } catch (const InvariantViolation& e) {
    throw StepRejected(std::string("step rejected: ") + e.what());
  }
}

EvolutionRates evolution_rates(const FlowState& state, const std::vector<double>& F) {
  const auto& geo = state.geometry;
  if (F.size() != geo.size()) throw InvalidArgument("speed field does not match the grid");
  const auto& grid = *geo.grid;
  EvolutionRates out;
  out.area = integrate_nodes(grid, [&](std::size_t i) { return geo.area_weight[i] * geo.mean_curvature[i] * F[i]; });
  out.weighted_volume =
      (geo.n + 1) * integrate_nodes(grid, [&](std::size_t i) { return geo.area_weight[i] * geo.lambda_prime[i] * F[i]; });
  out.lambda_prime_normal.resize(F.size());
  out.lambda_prime_graph.resize(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) {
    out.lambda_prime_normal[i] = geo.u[i] * F[i];
    out.lambda_prime_graph[i] = geo.lambda[i] * geo.v[i] * F[i];
  }
  return out;
}

const std::vector<std::string>& TimeSeries::columns() {
  static const std::vector<std::string> names{"t",         "dt",          "area",  "int_f_pow", "W0",
                                              "int_Ek1_g", "max_grad_sq", "r_min", "r_max",     "minkowski_resid",
                                              "lhs",       "rhs",         "gap"};
  return names;
}

SeriesRow measure(const FlowState& state, double dt, int threads) {
  const auto& geo = state.geometry;
  const auto& grid = *geo.grid;
  const int n = geo.n;
  SeriesRow row;
  row.t = state.t;
  row.dt = dt;
  row.area = integrate_nodes(grid, [&](std::size_t i) { return geo.area_weight[i]; });
  row.W0 = weighted_volume(geo);
  row.max_grad_sq = *std::max_element(geo.grad_phi_sq.begin(), geo.grad_phi_sq.end());
  row.r_min = *std::min_element(geo.r.begin(), geo.r.end());
  row.r_max = *std::max_element(geo.r.begin(), geo.r.end());
  const auto F = velocity(geo, state.law, threads);
  for (double f : F) row.max_speed = std::max(row.max_speed, std::abs(f));

  if (state.law.law == FlowLaw::Mcf) {
    const auto& profile = *state.law.profile;
    row.minkowski_resid = curvature_integrals(geo, 1).minkowski_residual;
    const auto rep = michael_simon_report(geo, 1, RadialExtension::from_profile(profile));
    row.lhs = rep.lhs;
    row.rhs = rep.rhs;
    row.gap = rep.gap;
    row.int_f_pow = rep.f_integral;
    const double q = static_cast<double>(n) / (n - 1);
    std::vector<double> stated(geo.size()), exact(geo.size());
    for (std::size_t i = 0; i < geo.size(); ++i) {
      const auto fv = profile.evaluate(geo.r[i]);
      const double v = geo.v[i];
      const double H = geo.mean_curvature[i];
      const double w = std::pow(fv.f, 1.0 / (n - 1)) / v;
      const double a = q * fv.df * v + fv.f * H;
      const double b = q * fv.df / v + fv.f * H;
      stated[i] = -w * a * a;
      exact[i] = -w * a * b;
    }
    row.rate_stated = integrate_nodes(grid, [&](std::size_t i) { return geo.area_weight[i] * stated[i]; });
    row.rate_exact = integrate_nodes(grid, [&](std::size_t i) { return geo.area_weight[i] * exact[i]; });
  } else {
    const int k = state.law.k;
    row.minkowski_resid = curvature_integrals(geo, k).minkowski_residual;
    const auto weight = state.law.weight ? *state.law.weight : default_weight(n, k);
    const auto e = normalized_curvatures(geo, k - 1);
    const auto stride = static_cast<std::size_t>(k);
    row.int_Ek1_g = integrate_nodes(grid, [&](std::size_t i) {
      return geo.area_weight[i] * e[i * stride + static_cast<std::size_t>(k - 1)] * weight.g(geo.lambda_prime[i]);
    });
    if (k <= n - 1) {
      const auto rep = michael_simon_report(geo, k, RadialExtension::from_weight(weight));
      row.lhs = rep.lhs;
      row.rhs = rep.rhs;
      row.gap = rep.gap;
      row.int_f_pow = rep.f_integral;
    }
  }
  return row;
}

std::optional<double> fit_decay_rate(const TimeSeries& series, double grad_tol) {
  std::vector<double> ts, ys;
  for (const auto& row : series.rows) {
    if (row.max_grad_sq < grad_tol * grad_tol || !(row.max_grad_sq > 0.0)) break;
    ts.push_back(row.t);
    ys.push_back(std::log(row.max_grad_sq));
  }
  const std::size_t m = ts.size();
  const std::size_t first = m / 2;
  if (m - first < 3) return std::nullopt;
  double st = 0.0, sy = 0.0;
  for (std::size_t i = first; i < m; ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const double cnt = static_cast<double>(m - first);
  st /= cnt;
  sy /= cnt;
  double num = 0.0, den = 0.0;
  for (std::size_t i = first; i < m; ++i) {
    num += (ts[i] - st) * (ys[i] - sy);
    den += (ts[i] - st) * (ts[i] - st);
  }
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

FlowResult run_flow(const FlowState& initial, const RunOptions& options) {
  if (!(options.t_max >= initial.t)) throw InvalidArgument("t_max must not precede the initial time");
  if (!(options.grad_tol > 0.0)) throw InvalidArgument("grad_tol must be positive");
  if (options.record_every < 1) throw InvalidArgument("record_every must be at least 1");
  if (options.max_halvings < 0) throw InvalidArgument("max_halvings must be non-negative");

  FlowResult result{initial, {}, 0, 0, "", std::nullopt, std::nullopt, 0.0, 0.0, true};
  FlowState state = initial;
  const auto& geo0 = initial.geometry;
  double lo = *std::min_element(geo0.r.begin(), geo0.r.end());
  double hi = *std::max_element(geo0.r.begin(), geo0.r.end());
  if (initial.law.law == FlowLaw::Mcf) {
    const auto& profile = *initial.law.profile;
    const auto rep = verify_assumption(profile, profile.domain(), 256);
    if (rep.zero) {
      result.target_radius = rep.zero;
      lo = std::min(lo, *rep.zero);
      hi = std::max(hi, *rep.zero);
    }
  }
  const double grad_cap = std::max(*std::max_element(geo0.grad_phi_sq.begin(), geo0.grad_phi_sq.end()), 1.0);

  StepOptions step;
  step.c_cfl = options.c_cfl;
  step.threads = options.threads;
  result.series.rows.push_back(measure(state, 0.0, options.threads));
  double last_dt = 0.0;
  bool last_recorded = true;

  for (;;) {
    const auto F = flow_velocity(state, options.threads);
    double max_speed = 0.0;
    for (double f : F) max_speed = std::max(max_speed, std::abs(f));
    const double max_grad = std::sqrt(*std::max_element(state.geometry.grad_phi_sq.begin(),
                                                        state.geometry.grad_phi_sq.end()));
    if (max_grad < options.grad_tol && max_speed < options.grad_tol) {
      result.stop_reason = "converged";
      break;
    }
    if (state.t >= options.t_max) {
      result.stop_reason = "t_max";
      break;
    }
    if (result.steps >= options.max_steps) throw InvariantViolation("step budget exhausted before t_max");

    double dt = std::min(stable_time_step(state, options.c_cfl), options.t_max - state.t);
    std::optional<FlowState> next;
    std::string last_error;
    for (int attempt = 0; attempt <= options.max_halvings; ++attempt) {
      try {
        next = advance(state, dt, step);
        break;
      } catch (const StepRejected& e) {
        last_error = e.what();
        ++result.rejections;
        dt *= 0.5;
      }
    }
    if (!next) {
      throw InvariantViolation("step rejected after " + std::to_string(options.max_halvings) +
                               " halvings at t = " + fmt(state.t) + ": " + last_error);
    }
    // Land exactly on t_max when the remaining interval was taken in one step.
    if (options.t_max - next->t < 1e-14 * std::max(1.0, options.t_max)) next->t = options.t_max;
    state = std::move(*next);
    ++result.steps;
    last_dt = dt;

    const auto& geo = state.geometry;
    const double rmin = *std::min_element(geo.r.begin(), geo.r.end());
    const double rmax = *std::max_element(geo.r.begin(), geo.r.end());
    result.barrier_excess = std::max({result.barrier_excess, lo - rmin, rmax - hi});
    const double gmax = *std::max_element(geo.grad_phi_sq.begin(), geo.grad_phi_sq.end());
    result.gradient_bound_excess = std::max(result.gradient_bound_excess, gmax - grad_cap);
    for (std::size_t i = 0; i < geo.size(); ++i) {
      if (!(geo.u[i] > 0.0)) result.invariants_preserved = false;
    }
    if (state.law.law == FlowLaw::Icf) {
      for (std::size_t i = 0; i < geo.size(); ++i) {
        if (!in_garding_cone(node_kappa(geo, i), state.law.k)) result.invariants_preserved = false;
      }
    }
    last_recorded = result.steps % options.record_every == 0;
    if (last_recorded) result.series.rows.push_back(measure(state, dt, options.threads));
  }
  if (!last_recorded) result.series.rows.push_back(measure(state, last_dt, options.threads));
  result.decay_rate = fit_decay_rate(result.series, options.grad_tol);
  result.final_state = std::move(state);
  return result;
}

std::vector<double> radial_reduction_run(const FlowLawSpec& law, double r0, const std::vector<double>& times) {
  if (!(r0 > 0.0)) throw InvalidArgument("initial radius must be positive");
  if (times.empty()) return {};
  if (times.front() < 0.0 || !std::is_sorted(times.begin(), times.end())) {
    throw InvalidArgument("output times must be non-negative and sorted");
  }
  if (law.law == FlowLaw::Icf) return std::vector<double>(times.size(), r0);
  if (!law.profile) throw InvalidArgument("mean curvature type flow needs a radial profile");
  const auto& profile = *law.profile;

  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 1>;
  auto rhs = [&](const State& x, State& dxdt, double) {
    const double r = x[0];
    if (!(r > 0.0 && r < kMaxRadius)) throw InvariantViolation("radius " + fmt(r) + " left (0, 25)");
    dxdt[0] = -std::sinh(r) * profile.fhat(r);
  };
  std::vector<double> grid_times;
  grid_times.reserve(times.size() + 1);
  if (times.front() > 0.0) grid_times.push_back(0.0);
  grid_times.insert(grid_times.end(), times.begin(), times.end());
  std::vector<double> out;
  out.reserve(grid_times.size());
  State x{r0};
  auto stepper = odeint::make_dense_output(1e-12, 1e-12, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_times(stepper, rhs, x, grid_times.begin(), grid_times.end(), 1e-3,
                          [&](const State& s, double) { out.push_back(s[0]); });
  if (times.front() > 0.0) out.erase(out.begin());
  return out;
}

}  // namespace hyperflow
