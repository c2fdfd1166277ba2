#include "hyperflow/profiles.hpp"

#include "hyperflow/error.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hyperflow {

namespace {

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(10);
  out << x;
  return out.str();
}

void check_dimension(int n) {
  if (n < 2) throw InvalidArgument("profile dimension must satisfy n >= 2");
}

void check_radial_domain(Interval d) {
  if (!(d.lo < d.hi)) throw InvalidArgument("empty domain [" + fmt(d.lo) + ", " + fmt(d.hi) + "]");
  if (d.lo <= 0.0) throw InvalidArgument("radial domain must lie in r > 0");
}

// Fourth-order central differences.
template <class Fn>
double fd1(const Fn& f, double x, double e) {
  return (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * e);
}

template <class Fn>
double fd2(const Fn& f, double x, double e) {
  return (-f(x + 2 * e) + 16 * f(x + e) - 30 * f(x) + 16 * f(x - e) - f(x - 2 * e)) / (12 * e * e);
}

constexpr double kStep1 = 1e-3;
constexpr double kStep2 = 5e-3;

}  // namespace

struct RadialProfile::Impl {
  int n = 2;
  Interval domain;
  std::string description;
  std::function<Values(double)> eval;
  std::function<double(double)> second;
  std::function<double(double)> exact_fhat;  // closed form when known

  void check(double r) const {
    if (!(r >= domain.lo && r <= domain.hi)) {
      throw InvariantViolation("radius " + fmt(r) + " outside profile domain [" + fmt(domain.lo) + ", " +
                               fmt(domain.hi) + "]");
    }
  }
};

int RadialProfile::n() const { return impl_->n; }
Interval RadialProfile::domain() const { return impl_->domain; }
const std::string& RadialProfile::description() const { return impl_->description; }

RadialProfile::Values RadialProfile::evaluate(double r) const {
  impl_->check(r);
  return impl_->eval(r);
}

double RadialProfile::value(double r) const { return evaluate(r).f; }
double RadialProfile::d1(double r) const { return evaluate(r).df; }

double RadialProfile::d2(double r) const {
  impl_->check(r);
  return impl_->second(r);
}

double RadialProfile::fhat(double r) const {
  if (impl_->exact_fhat) {
    impl_->check(r);
    return impl_->exact_fhat(r);
  }
  const auto v = evaluate(r);
  const int n = impl_->n;
  const double lam = std::sinh(r);
  const double lp = std::cosh(r);
  return (static_cast<double>(n) / (n - 1)) * v.df / lam + n * v.f * lp / (lam * lam);
}

namespace {

// Cumulative integral of ((n-1)/n) lambda^n fhat on a uniform table.
struct HTable {
  int n;
  Expression fhat;
  double lo;
  double step;
  std::vector<double> cumulative;  // integral from lo to node j
  double offset;                    // h = offset + integral from lo

  double integrand(double s) const {
    return (n - 1.0) / n * std::pow(std::sinh(s), n) * fhat(s);
  }

  double integral(double a, double b) const {
    using boost::math::quadrature::gauss;
    return gauss<double, 8>::integrate([this](double s) { return integrand(s); }, a, b);
  }

  double h(double r) const {
    const auto last = static_cast<long>(cumulative.size()) - 1;
    const long j = std::clamp(std::lround((r - lo) / step), 0L, last);
    const double node = lo + static_cast<double>(j) * step;
    return offset + cumulative[static_cast<std::size_t>(j)] + integral(node, r);
  }
};

}  // namespace

RadialProfile profile_from_fhat(const Expression& fhat, int n, Interval domain, Normalization normalization) {
  check_dimension(n);
  check_radial_domain(domain);
  auto table = std::make_shared<HTable>();
  table->n = n;
  table->fhat = fhat;
  table->lo = domain.lo;
  const int panels = std::max(8, static_cast<int>(std::ceil((domain.hi - domain.lo) * 256.0)));
  table->step = (domain.hi - domain.lo) / panels;
  table->cumulative.assign(static_cast<std::size_t>(panels) + 1, 0.0);
  for (int j = 0; j < panels; ++j) {
    const double a = domain.lo + j * table->step;
    const double b = domain.lo + (j + 1) * table->step;
    table->cumulative[static_cast<std::size_t>(j) + 1] = table->cumulative[static_cast<std::size_t>(j)] + table->integral(a, b);
  }
  const double r_ref = normalization.r_ref.value_or(domain.lo);
  if (!domain.contains(r_ref)) throw InvalidArgument("normalization radius outside the profile domain");
  table->offset = 0.0;
  table->offset = normalization.h_ref - table->h(r_ref);

  // h > 0 on the table nodes and panel midpoints.
  for (int j = 0; j <= 2 * panels; ++j) {
    const double r = std::min(domain.hi, domain.lo + 0.5 * j * table->step);
    const double h = table->h(r);
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw InvalidArgument("positivity violated at r = " + fmt(r) + " (h = " + fmt(h) + ")");
    }
  }

  auto impl = std::make_shared<RadialProfile::Impl>();
  impl->n = n;
  impl->domain = domain;
  impl->description = "fhat(r) = " + fhat.text();
  impl->eval = [table, n](double r) {
    const double lam = std::sinh(r);
    const double lp = std::cosh(r);
    const double h = table->h(r);
    const double fh = table->fhat(r);
    const double f = std::pow(lam, 1 - n) * h;
    const double df = (1 - n) * std::pow(lam, -n) * lp * h + (n - 1.0) / n * lam * fh;
    return RadialProfile::Values{f, df};
  };
  impl->second = [table, n](double r) {
    const double lam = std::sinh(r);
    const double lp = std::cosh(r);
    const double h = table->h(r);
    const double fh = table->fhat(r);
    const double dfh = fd1(table->fhat, r, kStep1);
    const double q = (n - 1.0) / n;
    const double h1 = q * std::pow(lam, n) * fh;
    const double h2 = q * (n * std::pow(lam, n - 1) * lp * fh + std::pow(lam, n) * dfh);
    return (1 - n) * std::pow(lam, -n - 1) * (lam * lam - n * lp * lp) * h +
           2.0 * (1 - n) * std::pow(lam, -n) * lp * h1 + std::pow(lam, 1 - n) * h2;
  };
  impl->exact_fhat = [table](double r) { return table->fhat(r); };
  return RadialProfile(impl);
}

RadialProfile profile_from_fbar(const Expression& fbar, int n, Interval domain) {
  check_dimension(n);
  check_radial_domain(domain);
  auto impl = std::make_shared<RadialProfile::Impl>();
  impl->n = n;
  impl->domain = domain;
  impl->description = "fbar(r) = " + fbar.text();
  impl->eval = [fbar](double r) { return RadialProfile::Values{fbar(r), fd1(fbar, r, kStep1)}; };
  impl->second = [fbar](double r) { return fd2(fbar, r, kStep2); };
  return RadialProfile(impl);
}

RadialProfile equality_profile(int n, Interval domain) {
  check_dimension(n);
  check_radial_domain(domain);
  auto impl = std::make_shared<RadialProfile::Impl>();
  impl->n = n;
  impl->domain = domain;
  impl->description = "fbar(r) = sinh(r)^(1-n)";
  impl->eval = [n](double r) {
    const double lam = std::sinh(r);
    return RadialProfile::Values{std::pow(lam, 1 - n), (1 - n) * std::pow(lam, -n) * std::cosh(r)};
  };
  impl->second = [n](double r) {
    const double lam = std::sinh(r);
    const double lp = std::cosh(r);
    return (1 - n) * std::pow(lam, -n - 1) * (lam * lam - n * lp * lp);
  };
  impl->exact_fhat = [](double) { return 0.0; };
  return RadialProfile(impl);
}

RadialProfile constant_profile(double c, int n, Interval domain) {
  check_dimension(n);
  check_radial_domain(domain);
  if (!(c > 0.0)) throw InvalidArgument("constant profile must be positive");
  auto impl = std::make_shared<RadialProfile::Impl>();
  impl->n = n;
  impl->domain = domain;
  impl->description = "fbar(r) = " + fmt(c);
  impl->eval = [c](double) { return RadialProfile::Values{c, 0.0}; };
  impl->second = [](double) { return 0.0; };
  return RadialProfile(impl);
}

// ---------------------------------------------------------------------------

namespace {

struct OdeTable {
  int n = 2;
  int k = 2;
  bool homogeneous = false;
  double s0 = 0.0;
  double step = 0.0;
  std::vector<double> g;
  std::vector<double> dg;

  double coefficient(double s) const { return homogeneous ? 0.0 : 1.0 / (std::tanh(s) * (k - 1)); }

  std::size_t segment(double s) const {
    const auto last = g.size() - 2;
    const double x = (s - s0) / step;
    if (x <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(x), last);
  }

  double value(double s) const {
    const std::size_t i = segment(s);
    const double t = (s - (s0 + static_cast<double>(i) * step)) / step;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    return h00 * g[i] + h10 * step * dg[i] + h01 * g[i + 1] + h11 * step * dg[i + 1];
  }

  double derivative(double s) const {
    const std::size_t i = segment(s);
    const double t = (s - (s0 + static_cast<double>(i) * step)) / step;
    const double d00 = 6 * t * t - 6 * t;
    const double d10 = 3 * t * t - 4 * t + 1;
    const double d01 = -6 * t * t + 6 * t;
    const double d11 = 3 * t * t - 2 * t;
    return (d00 * g[i] + d01 * g[i + 1]) / step + d10 * dg[i] + d11 * dg[i + 1];
  }

  double residual() const {
    const std::size_t m = g.size();
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < m; ++i) {
      const double s = s0 + static_cast<double>(i) * step;
      const double g2 = (-g[i + 2] + 16 * g[i + 1] - 30 * g[i] + 16 * g[i - 1] - g[i - 2]) / (12 * step * step);
      const double r = g2 / n - g[i] - coefficient(s) * dg[i];
      worst = std::max(worst, std::abs(r));
    }
    return worst;
  }
};

// Second-order central scheme for (1/n) g'' - c(s) g' - g = 0 with Dirichlet data.
std::vector<double> solve_two_point(const OdeTable& ode, double s_hi, int intervals, OdeBoundary bc) {
  const double h = (s_hi - ode.s0) / intervals;
  const auto m = static_cast<std::size_t>(intervals - 1);
  std::vector<double> lower(m), diag(m), upper(m), rhs(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double s = ode.s0 + static_cast<double>(j + 1) * h;
    const double c = ode.coefficient(s);
    lower[j] = 1.0 / (ode.n * h * h) + c / (2 * h);
    diag[j] = -2.0 / (ode.n * h * h) - 1.0;
    upper[j] = 1.0 / (ode.n * h * h) - c / (2 * h);
  }
  rhs[0] -= lower[0] * bc.g_lo;
  rhs[m - 1] -= upper[m - 1] * bc.g_hi;
  // Thomas algorithm; the matrix is strictly diagonally dominant for small h.
  for (std::size_t j = 1; j < m; ++j) {
    const double w = lower[j] / diag[j - 1];
    diag[j] -= w * upper[j - 1];
    rhs[j] -= w * rhs[j - 1];
  }
  std::vector<double> out(m + 2);
  out[0] = bc.g_lo;
  out[m + 1] = bc.g_hi;
  out[m] = rhs[m - 1] / diag[m - 1];
  for (std::size_t j = m - 1; j-- > 0;) out[j + 1] = (rhs[j] - upper[j] * out[j + 2]) / diag[j];
  return out;
}

}  // namespace

struct WeightProfile::Impl {
  int n = 2;
  int k = 2;
  Interval domain;
  WeightSource source = WeightSource::Expression;
  std::string description;
  std::function<double(double)> g;
  std::function<double(double)> dg;
  std::shared_ptr<const OdeTable> ode;

  void check(double lp) const {
    if (!(lp >= domain.lo && lp <= domain.hi)) {
      throw InvariantViolation("lambda' = " + fmt(lp) + " outside weight domain [" + fmt(domain.lo) + ", " +
                               fmt(domain.hi) + "]");
    }
  }
};

namespace {

void check_weight_indices(int n, int k) {
  check_dimension(n);
  if (k < 1 || k > n) throw InvalidArgument("weight index k=" + std::to_string(k) + " out of range [1, n]");
}

void check_weight_domain(Interval d) {
  if (!(d.lo < d.hi)) throw InvalidArgument("empty domain [" + fmt(d.lo) + ", " + fmt(d.hi) + "]");
  if (d.lo < 1.0) throw InvalidArgument("weight domain must lie in lambda' >= 1");
}

}  // namespace

int WeightProfile::n() const { return impl_->n; }
int WeightProfile::k() const { return impl_->k; }
Interval WeightProfile::domain() const { return impl_->domain; }
WeightSource WeightProfile::source() const { return impl_->source; }
const std::string& WeightProfile::description() const { return impl_->description; }

double WeightProfile::g(double lp) const {
  impl_->check(lp);
  const double value = impl_->g(lp);
  if (!(value > 0.0)) throw InvariantViolation("weight is not positive at lambda' = " + fmt(lp));
  return value;
}

double WeightProfile::dg(double lp) const {
  impl_->check(lp);
  return impl_->dg(lp);
}

bool WeightProfile::has_f() const { return impl_->k <= impl_->n - 1; }

double WeightProfile::f(double lp) const {
  if (!has_f()) throw InvalidArgument("ftilde needs k <= n-1");
  const double e = static_cast<double>(impl_->n - impl_->k) / (impl_->n - impl_->k + 1);
  return std::pow(g(lp), e);
}

double WeightProfile::df(double lp) const {
  if (!has_f()) throw InvalidArgument("ftilde needs k <= n-1");
  const double e = static_cast<double>(impl_->n - impl_->k) / (impl_->n - impl_->k + 1);
  return e * std::pow(g(lp), e - 1.0) * dg(lp);
}

double WeightProfile::g_of_s(double s) const {
  if (!impl_->ode) throw InvalidArgument("not an ODE weight");
  return impl_->ode->value(s);
}

double WeightProfile::dg_ds(double s) const {
  if (!impl_->ode) throw InvalidArgument("not an ODE weight");
  return impl_->ode->derivative(s);
}

double WeightProfile::ode_residual() const {
  if (!impl_->ode) throw InvalidArgument("not an ODE weight");
  return impl_->ode->residual();
}

WeightProfile default_weight(int n, int k, Interval domain) {
  check_weight_indices(n, k);
  auto impl = std::make_shared<WeightProfile::Impl>();
  impl->n = n;
  impl->k = k;
  impl->domain = domain;
  impl->source = WeightSource::Default;
  impl->description = "gtilde(lp) = lp";
  impl->g = [](double lp) { return lp; };
  impl->dg = [](double) { return 1.0; };
  return WeightProfile(impl);
}

WeightProfile weight_from_g(const Expression& g, int n, int k, Interval domain) {
  check_weight_indices(n, k);
  check_weight_domain(domain);
  auto impl = std::make_shared<WeightProfile::Impl>();
  impl->n = n;
  impl->k = k;
  impl->domain = domain;
  impl->description = "gtilde(lp) = " + g.text();
  impl->g = [g](double lp) { return g(lp); };
  impl->dg = [g](double lp) { return fd1(g, lp, kStep1 * std::max(1.0, lp)); };
  return WeightProfile(impl);
}

WeightProfile weight_from_f(const Expression& f, int n, int k, Interval domain) {
  check_weight_indices(n, k);
  check_weight_domain(domain);
  if (k > n - 1) throw InvalidArgument("ftilde weights need k <= n-1");
  const double p = static_cast<double>(n - k + 1) / (n - k);
  auto impl = std::make_shared<WeightProfile::Impl>();
  impl->n = n;
  impl->k = k;
  impl->domain = domain;
  impl->description = "ftilde(lp) = " + f.text();
  impl->g = [f, p](double lp) { return std::pow(f(lp), p); };
  impl->dg = [f, p](double lp) { return p * std::pow(f(lp), p - 1.0) * fd1(f, lp, kStep1 * std::max(1.0, lp)); };
  return WeightProfile(impl);
}

WeightProfile weight_from_ode(int k, int n, OdeBoundary boundary, Interval s_domain, OdeOptions options) {
  if (k == 1) throw InvalidArgument("degenerate coefficient: the constraint ODE divides by k - 1 = 0");
  check_weight_indices(n, k);
  if (!(s_domain.lo < s_domain.hi)) throw InvalidArgument("empty s domain");
  if (s_domain.lo <= 0.0) {
    throw InvalidArgument("singular lambda(s) = 0: the s domain must lie in (0, inf)");
  }
  if (s_domain.hi > 25.0) throw InvalidArgument("s domain too large");
  if (options.intervals < 16) throw InvalidArgument("ODE solver needs at least 16 intervals");

  auto table = std::make_shared<OdeTable>();
  table->n = n;
  table->k = k;
  table->homogeneous = options.homogeneous;
  table->s0 = s_domain.lo;
  const int m = options.intervals;
  table->step = (s_domain.hi - s_domain.lo) / m;
  const auto coarse = solve_two_point(*table, s_domain.hi, m, boundary);
  const auto fine = solve_two_point(*table, s_domain.hi, 2 * m, boundary);
  table->g.resize(coarse.size());
  for (std::size_t i = 0; i < coarse.size(); ++i) table->g[i] = (4.0 * fine[2 * i] - coarse[i]) / 3.0;

  const auto& g = table->g;
  const double h = table->step;
  const std::size_t last = g.size() - 1;
  table->dg.resize(g.size());
  table->dg[0] = (-25 * g[0] + 48 * g[1] - 36 * g[2] + 16 * g[3] - 3 * g[4]) / (12 * h);
  table->dg[1] = (-3 * g[0] - 10 * g[1] + 18 * g[2] - 6 * g[3] + g[4]) / (12 * h);
  for (std::size_t i = 2; i + 2 <= last; ++i) {
    table->dg[i] = (-g[i + 2] + 8 * g[i + 1] - 8 * g[i - 1] + g[i - 2]) / (12 * h);
  }
  table->dg[last - 1] = (3 * g[last] + 10 * g[last - 1] - 18 * g[last - 2] + 6 * g[last - 3] - g[last - 4]) / (12 * h);
  table->dg[last] = (25 * g[last] - 48 * g[last - 1] + 36 * g[last - 2] - 16 * g[last - 3] + 3 * g[last - 4]) / (12 * h);

  for (double value : g) {
    if (!(value > 0.0)) throw InvariantViolation("ODE weight is not positive; check the boundary data");
  }

  auto impl = std::make_shared<WeightProfile::Impl>();
  impl->n = n;
  impl->k = k;
  impl->domain = {std::cosh(s_domain.lo), std::cosh(s_domain.hi)};
  impl->source = WeightSource::Ode;
  impl->description = std::string(options.homogeneous ? "homogeneous " : "") + "ODE weight on s in [" +
                      fmt(s_domain.lo) + ", " + fmt(s_domain.hi) + "]";
  impl->ode = table;
  impl->g = [table](double lp) { return table->value(std::acosh(lp)); };
  impl->dg = [table](double lp) {
    const double s = std::acosh(lp);
    return table->derivative(s) / std::sinh(s);
  };
  return WeightProfile(impl);
}

// ---------------------------------------------------------------------------

namespace {

template <class Fn>
AssumptionReport scan(const Fn& fn, Interval range, int samples, bool want_zero) {
  if (samples < 64) throw InvalidArgument("assumption scan needs at least 64 samples");
  if (!(range.lo < range.hi)) throw InvalidArgument("empty scan range");
  AssumptionReport rep;
  rep.samples = samples;
  std::vector<double> x(static_cast<std::size_t>(samples)), y(x.size());
  for (int i = 0; i < samples; ++i) {
    x[static_cast<std::size_t>(i)] = i + 1 == samples ? range.hi : range.lo + (range.hi - range.lo) * i / (samples - 1);
    y[static_cast<std::size_t>(i)] = fn(x[static_cast<std::size_t>(i)]);
  }
  rep.monotone = true;
  for (std::size_t i = 0; i + 1 < y.size(); ++i) {
    if (y[i + 1] < y[i] - 1e-12 * std::max(1.0, std::abs(y[i]))) {
      rep.monotone = false;
      rep.first_decrease = i;
      rep.flags.push_back("decrease between samples " + std::to_string(i) + " and " + std::to_string(i + 1));
      break;
    }
  }
  if (!want_zero) return rep;
  for (std::size_t i = 0; i + 1 < y.size(); ++i) {
    const bool change = (y[i] < 0.0 && y[i + 1] >= 0.0) || (y[i] > 0.0 && y[i + 1] <= 0.0);
    if (!change) continue;
    double a = x[i], b = x[i + 1];
    double fa = y[i];
    if (y[i + 1] == 0.0) {
      a = b;
    } else {
      while (b - a > 1e-11) {
        const double mid = 0.5 * (a + b);
        const double fm = fn(mid);
        if ((fm < 0.0) == (fa < 0.0) && fm != 0.0) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
    }
    rep.zero_bracketed = true;
    rep.zero = 0.5 * (a + b);
    break;
  }
  if (!rep.zero_bracketed) rep.flags.push_back("zero-point condition not strictly met");
  return rep;
}

}  // namespace

AssumptionReport verify_assumption(const RadialProfile& profile, Interval range, int samples) {
  const auto d = profile.domain();
  if (range.lo < d.lo || range.hi > d.hi) throw InvalidArgument("scan range outside the profile domain");
  return scan([&](double r) { return profile.fhat(r); }, range, samples, true);
}

AssumptionReport verify_assumption(const WeightProfile& weight, Interval range, int samples) {
  const auto d = weight.domain();
  if (range.lo < d.lo || range.hi > d.hi) throw InvalidArgument("scan range outside the weight domain");
  return scan([&](double lp) { return weight.g(lp) / lp; }, range, samples, false);
}

}  // namespace hyperflow
