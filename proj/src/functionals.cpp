#include "hyperflow/functionals.hpp"

#include "hyperflow/error.hpp"
#include "hyperflow/flow_engine.hpp"
#include "hyperflow/symmetric_functions.hpp"

#include <cmath>
#include <span>
#include <sstream>

namespace hyperflow {

namespace {

std::string kappa_text(std::span<const double> kappa) {
  std::ostringstream out;
  out.precision(6);
  out << "(";
  for (std::size_t i = 0; i < kappa.size(); ++i) out << (i ? ", " : "") << kappa[i];
  out << ")";
  return out.str();
}

}  // namespace

double omega(int n) { return sphere_area(n); }

std::vector<double> normalized_curvatures(const GeometryData& geo, int m) {
  const int n = geo.n;
  if (m < 0 || m > n) throw InvalidArgument("curvature index m=" + std::to_string(m) + " out of range [0, n]");
  const std::size_t stride = static_cast<std::size_t>(m) + 1;
  std::vector<double> out(geo.size() * stride);
  std::vector<double> kappa;
  if (m >= 2) kappa = geo.has_curvatures() ? geo.kappa : principal_curvatures(geo);
  for (std::size_t i = 0; i < geo.size(); ++i) {
    double* e = out.data() + i * stride;
    e[0] = 1.0;
    if (m == 1) e[1] = geo.mean_curvature[i] / n;
    if (m >= 2) {
      const std::span<const double> k(kappa.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n));
      const auto sigma = elementary_all(k);
      for (int l = 1; l <= m; ++l) e[l] = sigma[static_cast<std::size_t>(l)] / binomial(n, l);
    }
  }
  return out;
}

CurvatureIntegrals curvature_integrals(const GeometryData& geo, int m) {
  if (m < 1 || m > geo.n) throw InvalidArgument("curvature index m=" + std::to_string(m) + " out of range [1, n]");
  const auto e = normalized_curvatures(geo, m);
  const std::size_t stride = static_cast<std::size_t>(m) + 1;
  const auto& grid = *geo.grid;
  CurvatureIntegrals out;
  out.area = integrate_nodes(grid, [&](std::size_t i) { return geo.area_weight[i]; });
  out.int_em = integrate_nodes(grid, [&](std::size_t i) { return geo.area_weight[i] * e[i * stride + m]; });
  out.int_lp_em1 = integrate_nodes(
      grid, [&](std::size_t i) { return geo.area_weight[i] * geo.lambda_prime[i] * e[i * stride + m - 1]; });
  out.int_u_em = integrate_nodes(grid, [&](std::size_t i) { return geo.area_weight[i] * geo.u[i] * e[i * stride + m]; });
  // Integrate the difference directly so the residual keeps full relative precision.
  out.minkowski_residual = integrate_nodes(grid, [&](std::size_t i) {
    return geo.area_weight[i] * (geo.lambda_prime[i] * e[i * stride + m - 1] - geo.u[i] * e[i * stride + m]);
  });
  return out;
}

double weighted_volume(const GeometryData& geo) {
  return integrate_nodes(*geo.grid, [&](std::size_t i) { return geo.area_weight[i] * geo.u[i]; });
}

double h0(double R, int n) {
  if (R < 0.0) throw InvalidArgument("radius must be non-negative");
  return omega(n) * std::pow(std::sinh(R), n + 1);
}

double h0_inverse(double W, int n) {
  if (!(W > 0.0)) throw InvalidArgument("h0 inverse needs W > 0");
  return std::asinh(std::pow(W / omega(n), 1.0 / (n + 1)));
}

double p_k(double R, int k, int n, double f_const) {
  if (k == n) throw InvalidArgument("k=n unsupported in the weighted inequality: exponent 1/(n-k) is undefined");
  if (k < 1 || k > n) throw InvalidArgument("index k=" + std::to_string(k) + " out of range [1, n-1]");
  const double e = static_cast<double>(n + 1 - k) / (n - k);
  return omega(n) * std::pow(f_const, e) * std::pow(std::cosh(R), k - 1) * std::pow(std::sinh(R), n - k + 1);
}

EnclosedQuantities enclosed_quantities(const GeometryData& geo, int k, double f_const) {
  EnclosedQuantities out;
  out.weighted_volume = weighted_volume(geo);
  out.radius = h0_inverse(out.weighted_volume, geo.n);
  out.h0 = h0(out.radius, geo.n);
  out.p_k = p_k(out.radius, k, geo.n, f_const);
  out.omega = omega(geo.n);
  return out;
}

RadialExtension RadialExtension::constant(double c) {
  std::ostringstream d;
  d.precision(17);
  d << "f = " << c;
  return {d.str(), [c](double) { return c; }, [](double) { return 0.0; }};
}

RadialExtension RadialExtension::from_profile(const RadialProfile& profile) {
  return {"f = fbar(r), " + profile.description(), [profile](double r) { return profile.value(r); },
          [profile](double r) { return profile.d1(r); }};
}

RadialExtension RadialExtension::from_weight(const WeightProfile& weight) {
  if (!weight.has_f()) throw InvalidArgument("k=n unsupported in the weighted inequality: ftilde is undefined");
  return {"f = ftilde(lambda'), " + weight.description(), [weight](double r) { return weight.f(std::cosh(r)); },
          [weight](double r) { return weight.df(std::cosh(r)) * std::sinh(r); }};
}

InequalityReport michael_simon_report(const GeometryData& geo, int k, const RadialExtension& ext,
                                      std::optional<double> f_const) {
  const int n = geo.n;
  if (k == n) throw InvalidArgument("k=n unsupported in the weighted inequality: exponent 1/(n-k) is undefined");
  if (k < 1 || k > n) throw InvalidArgument("index k=" + std::to_string(k) + " out of range [1, n-1]");
  const auto e = normalized_curvatures(geo, k);
  const std::size_t stride = static_cast<std::size_t>(k) + 1;
  if (k >= 2) {
    const auto kappa = geo.has_curvatures() ? geo.kappa : principal_curvatures(geo);
    for (std::size_t i = 0; i < geo.size(); ++i) {
      const std::span<const double> ki(kappa.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n));
      if (!in_garding_cone(ki, k)) {
        throw InvariantViolation("cone violation at node " + std::to_string(i) + ": kappa = " + kappa_text(ki) +
                                 " is not in Gamma_" + std::to_string(k) + "^+");
      }
    }
  }

  const std::size_t count = geo.size();
  std::vector<double> f(count), df(count);
  for (std::size_t i = 0; i < count; ++i) {
    f[i] = ext.f(geo.r[i]);
    df[i] = ext.df(geo.r[i]);
  }
  const auto& grid = *geo.grid;

  InequalityReport rep;
  rep.k = k;
  rep.extension = ext.description;
  // |grad^M f|^2 = f'^2 |D phi|^2 / v^2 and <grad(f lambda'), nu> = (f' lambda' + f lambda) / v.
  rep.curvature_term = integrate_nodes(grid, [&](std::size_t i) {
    const double ek = e[i * stride + k];
    const double ek1 = e[i * stride + k - 1];
    const double v = geo.v[i];
    const double grad_sq = df[i] * df[i] * geo.grad_phi_sq[i] / (v * v);
    return geo.area_weight[i] * geo.lambda_prime[i] * std::sqrt(f[i] * f[i] * ek * ek + grad_sq * ek1 * ek1);
  });
  rep.gradient_term = integrate_nodes(grid, [&](std::size_t i) {
    const double normal = (df[i] * geo.lambda_prime[i] + f[i] * geo.lambda[i]) / geo.v[i];
    return geo.area_weight[i] * normal * e[i * stride + k - 1];
  });
  rep.boundary_term = 0.0;
  rep.lhs = rep.curvature_term - rep.gradient_term;
  rep.weighted_volume = weighted_volume(geo);
  rep.radius = h0_inverse(rep.weighted_volume, n);
  rep.f_const = f_const.value_or(ext.f(rep.radius));

  if (k == 1) {
    const double q = static_cast<double>(n) / (n - 1);
    rep.f_integral = integrate_nodes(grid, [&](std::size_t i) { return geo.area_weight[i] * std::pow(f[i], q); });
    rep.volume_chain = omega(n);
    rep.rhs = std::pow(omega(n), 1.0 / n) * std::pow(rep.f_integral, 1.0 / q);
  } else {
    const double q = static_cast<double>(n - k + 1) / (n - k);
    rep.f_integral = integrate_nodes(
        grid, [&](std::size_t i) { return geo.area_weight[i] * std::pow(f[i], q) * e[i * stride + k - 1]; });
    rep.volume_chain = p_k(rep.radius, k, n, rep.f_const);
    rep.rhs = std::pow(rep.volume_chain, 1.0 / (n - k + 1)) * std::pow(rep.f_integral, 1.0 / q);
  }
  rep.gap = rep.lhs - rep.rhs;
  rep.relative_gap = rep.gap / rep.rhs;
  if (!std::isfinite(rep.lhs) || !std::isfinite(rep.rhs)) throw InvariantViolation("inequality terms are not finite");
  return rep;
}

std::string weight_status(const WeightProfile& weight, Interval range) {
  if (weight.source() == WeightSource::Ode) return "certified";
  const auto d = weight.domain();
  const double lo = std::max(range.lo, d.lo);
  const double hi = std::min(range.hi, d.hi);
  if (!(lo <= hi)) return "not applicable";
  constexpr int samples = 256;
  for (int i = 0; i <= samples; ++i) {
    const double lp = lo + (hi - lo) * i / samples;
    const double g = weight.g(lp);
    if (lp * weight.dg(lp) < g - 1e-12 * std::max(1.0, std::abs(g))) return "not applicable";
  }
  return "empirical";
}

AuditReport monotonicity_audit(const TimeSeries& series, const FlowLawSpec& law, double slack, double grad_tol) {
  const auto& rows = series.rows;
  if (rows.size() < 3) throw InvalidArgument("audit needs at least 3 records, got " + std::to_string(rows.size()));
  AuditReport rep;
  auto flag = [&](const std::string& what, std::size_t i) {
    rep.flags.push_back(what + " at record " + std::to_string(i));
  };
  auto increases = [&](double a, double b) { return b > a + slack * std::abs(a); };

  if (law.law == FlowLaw::Mcf) {
    double scale = 0.0;
    for (const auto& row : rows) scale = std::max({scale, std::abs(row.rate_stated), std::abs(row.rate_exact)});
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      if (increases(rows[i].int_f_pow, rows[i + 1].int_f_pow)) {
        rep.f_pow_nonincreasing = false;
        flag("int_f_pow increased", i + 1);
      }
    }
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
      const double span = rows[i + 1].t - rows[i - 1].t;
      if (!(span > 0.0)) continue;
      const double d = (rows[i + 1].int_f_pow - rows[i - 1].int_f_pow) / span;
      if (scale > 0.0) {
        rep.rate_error_stated = std::max(rep.rate_error_stated, std::abs(d - rows[i].rate_stated) / scale);
        rep.rate_error_exact = std::max(rep.rate_error_exact, std::abs(d - rows[i].rate_exact) / scale);
      }
    }
  } else {
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      if (increases(rows[i + 1].W0, rows[i].W0)) {
        rep.w0_nondecreasing = false;
        flag("W0 decreased", i + 1);
      }
    }
    double rmin = rows[0].r_min, rmax = rows[0].r_max;
    for (const auto& row : rows) {
      rmin = std::min(rmin, row.r_min);
      rmax = std::max(rmax, row.r_max);
    }
    if (law.weight) {
      rep.weight_status = weight_status(*law.weight, {std::cosh(rmin), std::cosh(rmax)});
    } else {
      // The default gtilde = lambda' satisfies lambda' gtilde' = gtilde.
      rep.weight_status = "empirical";
    }
    if (rep.weight_status != "not applicable") {
      bool ok = true;
      for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        if (increases(rows[i].int_Ek1_g, rows[i + 1].int_Ek1_g)) {
          ok = false;
          flag("int_Ek1_g increased", i + 1);
        }
      }
      rep.weighted_curvature_nonincreasing = ok;
    }
  }

  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].rhs == 0.0 && rows[i].lhs == 0.0) continue;  // inequality not defined for this law
    if (rows[i].gap < -slack * std::abs(rows[i].rhs)) {
      rep.gap_nonnegative = false;
      flag("negative inequality gap", i);
    }
  }
  if (rows.back().rhs != 0.0) rep.final_relative_gap = rows.back().gap / rows.back().rhs;
  rep.decay_rate = fit_decay_rate(series, grad_tol);
  rep.passed = rep.flags.empty();
  return rep;
}

}  // namespace hyperflow
