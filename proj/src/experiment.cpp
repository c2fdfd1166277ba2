#include "hyperflow/experiment.hpp"

#include "hyperflow/error.hpp"
#include "hyperflow/expression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <type_traits>

namespace hyperflow {

namespace {

[[noreturn]] void field_error(const std::string& pointer, const std::string& message) {
  throw InvalidArgument("config field " + (pointer.empty() ? std::string("/") : pointer) + ": " + message);
}

// One JSON object of the config; remembers which keys were read so that
// unknown keys can be reported.
class Section {
 public:
  Section(const OrderedJson& json, std::string pointer) : json_(json), pointer_(std::move(pointer)) {
    if (!json_.is_object()) field_error(pointer_, "expected an object");
  }

  std::string at(const std::string& key) const { return pointer_ + "/" + key; }

  const OrderedJson* find(const std::string& key) {
    seen_.insert(key);
    const auto it = json_.find(key);
    if (it == json_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) field_error(at(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) field_error(at(key), "expected a finite number");
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (find(key)) {
      double x = 0.0;
      number(key, x);
      out = x;
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_integer()) field_error(at(key), "expected an integer");
      if (v->is_number_unsigned()) {
        const auto u = v->get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) field_error(at(key), "integer out of range");
        out = static_cast<Int>(u);
      } else {
        const auto s = v->get<std::int64_t>();
        if constexpr (std::is_unsigned_v<Int>) {
          if (s < 0) field_error(at(key), "expected a non-negative integer");
        } else {
          if (s < std::numeric_limits<Int>::min() || s > std::numeric_limits<Int>::max()) {
            field_error(at(key), "integer out of range");
          }
        }
        out = static_cast<Int>(s);
      }
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) field_error(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void interval(const std::string& key, Interval& out) {
    if (const auto* v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        field_error(at(key), "expected [lo, hi]");
      }
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
      if (!(out.lo < out.hi) || !std::isfinite(out.lo) || !std::isfinite(out.hi)) {
        field_error(at(key), "expected finite lo < hi");
      }
    }
  }

  template <class Fn>
  void object(const std::string& key, Fn&& fn) {
    if (const auto* v = find(key)) {
      Section sub(*v, at(key));
      fn(sub);
      sub.finish();
    }
  }

  void finish() const {
    for (const auto& [key, value] : json_.items()) {
      if (!seen_.count(key)) field_error(at(key), "unknown field");
    }
  }

 private:
  const OrderedJson& json_;
  std::string pointer_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& pointer, const std::string& message) {
  if (!ok) field_error(pointer, message);
}

void check_expression(const std::string& text, const std::string& variable, const std::string& pointer) {
  try {
    (void)Expression::parse(text, variable);
  } catch (const InvalidArgument& e) {
    field_error(pointer, e.what());
  }
}

void check_one_of(const std::string& value, std::initializer_list<const char*> options, const std::string& pointer) {
  std::string list;
  for (const char* o : options) {
    if (value == o) return;
    list += list.empty() ? "" : ", ";
    list += o;
  }
  field_error(pointer, "'" + value + "' is not one of " + list);
}

void validate(const RunConfig& c) {
  check_one_of(c.command, {"geometry", "simulate", "verify", "audit"}, "/command");
  require(c.threads >= 1 && c.threads <= 256, "/threads", "must lie in [1, 256]");

  const auto& g = c.grid;
  require(g.n >= 2 && g.n <= 16, "/grid/n", "must lie in [2, 16]");
  require(g.theta >= 8 && g.theta <= 4096, "/grid/theta", "must lie in [8, 4096]");
  require(g.mode != GridMode::Full2D || g.n == 2, "/grid/mode", "full2d requires n = 2");
  if (g.mode == GridMode::Full2D) {
    require(g.psi >= 8 && g.psi <= 4096 && g.psi % 2 == 0, "/grid/psi", "must be even and lie in [8, 4096]");
  }

  const auto& s = c.shape;
  require(s.radius > 0.0 && s.radius < 25.0, "/shape/radius", "must lie in (0, 25)");
  for (std::size_t i = 0; i < s.harmonics.size(); ++i) {
    const auto p = "/shape/harmonics/" + std::to_string(i);
    const auto& h = s.harmonics[i];
    require(g.mode != GridMode::Radial, p, "harmonics need an axisymmetric or full2d grid");
    require(h.theta >= 0 && h.theta <= 1024, p + "/theta", "must lie in [0, 1024]");
    require(h.psi >= 0 && h.psi <= 1024, p + "/psi", "must lie in [0, 1024]");
    require(h.psi == 0 || g.mode == GridMode::Full2D, p + "/psi", "azimuthal harmonics need a full2d grid");
  }
  double amplitude = 0.0;
  for (const auto& h : s.harmonics) amplitude += std::abs(h.amplitude);
  require(amplitude < s.radius, "/shape/harmonics", "total amplitude must stay below the radius");

  const auto& f = c.flow;
  const auto& p = f.profile;
  check_one_of(p.kind, {"fhat", "fbar", "equality", "constant"}, "/flow/profile/kind");
  if (p.kind == "fhat" || p.kind == "fbar") check_expression(p.expression, "r", "/flow/profile/expression");
  require(p.domain.lo > 0.0 && p.domain.hi < 25.0, "/flow/profile/domain", "must lie inside (0, 25)");
  require(p.value > 0.0, "/flow/profile/value", "must be positive");
  require(p.h_ref > 0.0, "/flow/profile/h_ref", "must be positive");
  require(!p.r_ref || p.domain.contains(*p.r_ref), "/flow/profile/r_ref", "must lie inside the domain");
  if (f.law == FlowLaw::Icf) require(f.k >= 2 && f.k <= g.n, "/flow/k", "must lie in [2, n]");
  const auto& w = f.weight;
  check_one_of(w.kind, {"default", "g", "f", "ode"}, "/flow/weight/kind");
  if (w.kind == "g" || w.kind == "f") check_expression(w.expression, "lp", "/flow/weight/expression");
  require(w.domain.lo >= 1.0, "/flow/weight/domain", "lambda' is at least 1");
  require(w.s_domain.lo > 0.0, "/flow/weight/s_domain", "must lie inside (0, infinity)");
  require(f.t_max >= 0.0, "/flow/t_max", "must be non-negative");
  require(f.grad_tol > 0.0, "/flow/grad_tol", "must be positive");
  require(f.c_cfl > 0.0 && f.c_cfl <= 1.0, "/flow/c_cfl", "must lie in (0, 1]");
  require(f.record_every >= 1, "/flow/record_every", "must be at least 1");
  require(f.max_steps >= 1, "/flow/max_steps", "must be at least 1");

  const auto& v = c.verify;
  if (v.k == g.n) field_error("/verify/k", "k=n unsupported in the weighted inequality: exponent 1/(n-k) is undefined");
  require(v.k >= 1 && v.k <= g.n - 1, "/verify/k", "must lie in [1, n-1]");
  check_one_of(v.extension.kind, {"constant", "radial", "profile", "weight"}, "/verify/extension/kind");
  if (v.extension.kind == "radial") check_expression(v.extension.expression, "r", "/verify/extension/expression");
  require(v.extension.value > 0.0, "/verify/extension/value", "must be positive");
  require(!v.f_const || *v.f_const > 0.0, "/verify/f_const", "must be positive");
  require(v.samples >= 0 && v.samples <= 1'000'000, "/verify/samples", "must lie in [0, 1000000]");
  require(v.samples == 0 || g.mode != GridMode::Radial, "/verify/samples", "perturbations need a non-radial grid");
  require(v.amplitude >= 0.0 && v.amplitude < 0.5 * s.radius, "/verify/amplitude", "must lie in [0, radius / 2)");
  require(v.max_mode >= 1 && v.max_mode <= 64, "/verify/max_mode", "must lie in [1, 64]");

  require(!c.output.csv.empty(), "/output/csv", "must not be empty");
  require(!c.output.json.empty(), "/output/json", "must not be empty");
}

OrderedJson number_or_null(double x) { return std::isfinite(x) ? OrderedJson(x) : OrderedJson(nullptr); }

OrderedJson optional_json(const std::optional<double>& x) {
  return x ? number_or_null(*x) : OrderedJson(nullptr);
}

OrderedJson interval_json(Interval i) { return OrderedJson::array({i.lo, i.hi}); }

}  // namespace

RunConfig parse_config(const std::string& text) {
  OrderedJson doc;
  try {
    doc = OrderedJson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::string what = e.what();
    const auto pos = what.find("parse error");
    throw InvalidArgument("config: " + (pos == std::string::npos ? what : what.substr(pos)));
  }

  RunConfig c;
  Section root(doc, "");
  root.string("command", c.command);
  root.integer("seed", c.seed);
  root.integer("threads", c.threads);
  root.object("grid", [&](Section& s) {
    std::string mode = to_string(c.grid.mode);
    s.string("mode", mode);
    try {
      c.grid.mode = grid_mode_from_string(mode);
    } catch (const InvalidArgument& e) {
      field_error(s.at("mode"), e.what());
    }
    s.integer("n", c.grid.n);
    s.integer("theta", c.grid.theta);
    s.integer("psi", c.grid.psi);
  });
  root.object("shape", [&](Section& s) {
    s.number("radius", c.shape.radius);
    if (const auto* list = s.find("harmonics")) {
      if (!list->is_array()) field_error(s.at("harmonics"), "expected an array");
      for (std::size_t i = 0; i < list->size(); ++i) {
        Section h((*list)[i], s.at("harmonics") + "/" + std::to_string(i));
        Harmonic harmonic;
        h.integer("theta", harmonic.theta);
        h.integer("psi", harmonic.psi);
        h.number("amplitude", harmonic.amplitude);
        h.finish();
        c.shape.harmonics.push_back(harmonic);
      }
    }
  });
  root.object("flow", [&](Section& s) {
    std::string law = to_string(c.flow.law);
    s.string("law", law);
    check_one_of(law, {"mcf", "icf"}, s.at("law"));
    c.flow.law = law == "mcf" ? FlowLaw::Mcf : FlowLaw::Icf;
    s.object("profile", [&](Section& p) {
      p.string("kind", c.flow.profile.kind);
      p.string("expression", c.flow.profile.expression);
      p.number("value", c.flow.profile.value);
      p.interval("domain", c.flow.profile.domain);
      p.number("h_ref", c.flow.profile.h_ref);
      p.optional_number("r_ref", c.flow.profile.r_ref);
    });
    s.integer("k", c.flow.k);
    s.object("weight", [&](Section& w) {
      w.string("kind", c.flow.weight.kind);
      w.string("expression", c.flow.weight.expression);
      w.interval("domain", c.flow.weight.domain);
      w.number("g_lo", c.flow.weight.g_lo);
      w.number("g_hi", c.flow.weight.g_hi);
      w.interval("s_domain", c.flow.weight.s_domain);
    });
    s.number("t_max", c.flow.t_max);
    s.number("grad_tol", c.flow.grad_tol);
    s.number("c_cfl", c.flow.c_cfl);
    s.integer("record_every", c.flow.record_every);
    s.integer("max_steps", c.flow.max_steps);
  });
  root.object("verify", [&](Section& s) {
    s.integer("k", c.verify.k);
    s.object("extension", [&](Section& e) {
      e.string("kind", c.verify.extension.kind);
      e.number("value", c.verify.extension.value);
      e.string("expression", c.verify.extension.expression);
    });
    s.optional_number("f_const", c.verify.f_const);
    s.integer("samples", c.verify.samples);
    s.number("amplitude", c.verify.amplitude);
    s.integer("max_mode", c.verify.max_mode);
  });
  root.object("output", [&](Section& s) {
    s.string("csv", c.output.csv);
    s.string("json", c.output.json);
  });
  root.finish();
  validate(c);
  return c;
}

OrderedJson config_to_json(const RunConfig& c) {
  OrderedJson j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["grid"] = {{"mode", to_string(c.grid.mode)}, {"n", c.grid.n}, {"theta", c.grid.theta}, {"psi", c.grid.psi}};
  OrderedJson harmonics = OrderedJson::array();
  for (const auto& h : c.shape.harmonics) {
    harmonics.push_back({{"theta", h.theta}, {"psi", h.psi}, {"amplitude", h.amplitude}});
  }
  j["shape"] = {{"radius", c.shape.radius}, {"harmonics", harmonics}};
  const auto& p = c.flow.profile;
  const auto& w = c.flow.weight;
  OrderedJson flow;
  flow["law"] = to_string(c.flow.law);
  flow["profile"] = {{"kind", p.kind},
                     {"expression", p.expression},
                     {"value", p.value},
                     {"domain", interval_json(p.domain)},
                     {"h_ref", p.h_ref},
                     {"r_ref", optional_json(p.r_ref)}};
  flow["k"] = c.flow.k;
  flow["weight"] = {{"kind", w.kind},
                    {"expression", w.expression},
                    {"domain", interval_json(w.domain)},
                    {"g_lo", w.g_lo},
                    {"g_hi", w.g_hi},
                    {"s_domain", interval_json(w.s_domain)}};
  flow["t_max"] = c.flow.t_max;
  flow["grad_tol"] = c.flow.grad_tol;
  flow["c_cfl"] = c.flow.c_cfl;
  flow["record_every"] = c.flow.record_every;
  flow["max_steps"] = c.flow.max_steps;
  j["flow"] = flow;
  const auto& v = c.verify;
  j["verify"] = {{"k", v.k},
                 {"extension", {{"kind", v.extension.kind}, {"value", v.extension.value}, {"expression", v.extension.expression}}},
                 {"f_const", optional_json(v.f_const)},
                 {"samples", v.samples},
                 {"amplitude", v.amplitude},
                 {"max_mode", v.max_mode}};
  j["output"] = {{"csv", c.output.csv}, {"json", c.output.json}};
  return j;
}

std::shared_ptr<const SphereGrid> make_grid(const GridSpec& spec) {
  return std::make_shared<const SphereGrid>(build_grid(spec.mode, spec.n, {spec.theta, spec.psi}));
}

GraphHypersurface make_shape(const ShapeSpec& spec, std::shared_ptr<const SphereGrid> grid) {
  auto r = sample(*grid, [&spec](double theta, double psi) {
    double value = spec.radius;
    for (const auto& h : spec.harmonics) {
      value += h.amplitude * std::cos(h.theta * theta) * std::pow(std::sin(theta), h.psi) * std::cos(h.psi * psi);
    }
    return value;
  });
  return GraphHypersurface(std::move(grid), std::move(r));
}

namespace {

WeightProfile make_weight(const WeightSpec& w, int n, int k) {
  if (w.kind == "g") return weight_from_g(Expression::parse(w.expression, "lp"), n, k, w.domain);
  if (w.kind == "f") return weight_from_f(Expression::parse(w.expression, "lp"), n, k, w.domain);
  if (w.kind == "ode") return weight_from_ode(k, n, {w.g_lo, w.g_hi}, w.s_domain);
  return default_weight(n, k, w.domain);
}

RadialProfile make_profile(const ProfileSpec& p, int n) {
  if (p.kind == "fhat") {
    return profile_from_fhat(Expression::parse(p.expression, "r"), n, p.domain, Normalization{p.r_ref, p.h_ref});
  }
  if (p.kind == "fbar") return profile_from_fbar(Expression::parse(p.expression, "r"), n, p.domain);
  if (p.kind == "equality") return equality_profile(n, p.domain);
  return constant_profile(p.value, n, p.domain);
}

// Fourth-order central difference for expression extensions.
double derivative(const Expression& e, double r) {
  const double h = 1e-3 * std::max(1.0, std::abs(r));
  return (e(r - 2 * h) - 8 * e(r - h) + 8 * e(r + h) - e(r + 2 * h)) / (12 * h);
}

}  // namespace

FlowLawSpec make_law(const FlowSpec& spec, int n) {
  if (spec.law == FlowLaw::Mcf) return FlowLawSpec::mcf(make_profile(spec.profile, n));
  std::optional<WeightProfile> weight;
  if (spec.weight.kind != "default") weight = make_weight(spec.weight, n, spec.k);
  return FlowLawSpec::icf(spec.k, weight);
}

RadialExtension make_extension(const RunConfig& config) {
  const auto& e = config.verify.extension;
  const int n = config.grid.n;
  if (e.kind == "constant") return RadialExtension::constant(e.value);
  if (e.kind == "radial") {
    const auto expr = Expression::parse(e.expression, "r");
    return {"f = " + expr.text(), [expr](double r) { return expr(r); },
            [expr](double r) { return derivative(expr, r); }};
  }
  if (e.kind == "profile") return RadialExtension::from_profile(make_profile(config.flow.profile, n));
  return RadialExtension::from_weight(make_weight(config.flow.weight, n, config.verify.k));
}

PerturbationStudy sample_perturbations(const RunConfig& config) {
  const auto& v = config.verify;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), decades(-4.0, 0.0);
  const auto coarse = make_grid(config.grid);
  GridSpec fine_spec = config.grid;
  fine_spec.theta *= 2;
  fine_spec.psi *= 2;
  const auto fine = make_grid(fine_spec);
  const auto ext = make_extension(config);

  PerturbationStudy study;
  for (int s = 0; s < v.samples; ++s) {
    // Log-uniform overall size so that near-spheres are sampled too.
    const double scale = v.amplitude * std::pow(10.0, decades(rng));
    ShapeSpec shape = config.shape;
    for (int l = 1; l <= v.max_mode; ++l) {
      shape.harmonics.push_back({l, 0, scale * unit(rng) / (l * l)});
    }
    if (config.grid.mode == GridMode::Full2D) {
      for (int m = 1; m <= v.max_mode; ++m) shape.harmonics.push_back({0, m, scale * unit(rng) / (m * m)});
    }
    try {
      const auto gc = graph_geometry(make_shape(shape, coarse));
      const auto gf = graph_geometry(make_shape(shape, fine));
      const auto rc = michael_simon_report(gc, v.k, ext, v.f_const);
      const auto rf = michael_simon_report(gf, v.k, ext, v.f_const);
      const auto [lo, hi] = std::minmax_element(gf.r.begin(), gf.r.end());
      study.samples.push_back({*hi - *lo, rf.gap, rf.relative_gap, std::abs(rc.gap - rf.gap)});
    } catch (const InvariantViolation&) {
      ++study.skipped;
    }
  }
  return study;
}

namespace {

OrderedJson report_json(const InequalityReport& r) {
  OrderedJson j;
  j["k"] = r.k;
  j["extension"] = r.extension;
  j["lhs"] = number_or_null(r.lhs);
  j["rhs"] = number_or_null(r.rhs);
  j["gap"] = number_or_null(r.gap);
  j["relative_gap"] = number_or_null(r.relative_gap);
  j["curvature_term"] = number_or_null(r.curvature_term);
  j["gradient_term"] = number_or_null(r.gradient_term);
  j["boundary_term"] = number_or_null(r.boundary_term);
  j["f_integral"] = number_or_null(r.f_integral);
  j["weighted_volume"] = number_or_null(r.weighted_volume);
  j["radius"] = number_or_null(r.radius);
  j["f_const"] = number_or_null(r.f_const);
  j["volume_chain"] = number_or_null(r.volume_chain);
  return j;
}

OrderedJson radius_json(const GeometryData& geo, std::optional<double> target) {
  const auto [lo, hi] = std::minmax_element(geo.r.begin(), geo.r.end());
  OrderedJson j;
  j["min"] = *lo;
  j["max"] = *hi;
  j["oscillation"] = *hi - *lo;
  if (target) {
    double dev = 0.0;
    for (double r : geo.r) dev = std::max(dev, std::abs(r - *target));
    j["target"] = *target;
    j["max_deviation"] = dev;
  } else {
    j["target"] = nullptr;
    j["max_deviation"] = nullptr;
  }
  return j;
}

OrderedJson grid_json(const SphereGrid& grid) {
  return {{"mode", to_string(grid.mode())},
          {"n", grid.dim()},
          {"nodes", grid.size()},
          {"spacing", grid.spacing()}};
}

OrderedJson geometry_summary(const RunConfig& config) {
  const auto grid = make_grid(config.grid);
  const auto geo = graph_geometry(make_shape(config.shape, grid), {true, config.threads});
  OrderedJson j;
  j["grid"] = grid_json(*grid);
  j["radius"] = radius_json(geo, std::nullopt);
  j["area"] = curvature_integrals(geo, 1).area;
  j["weighted_volume"] = weighted_volume(geo);
  j["u_min"] = *std::min_element(geo.u.begin(), geo.u.end());
  j["max_grad_sq"] = *std::max_element(geo.grad_phi_sq.begin(), geo.grad_phi_sq.end());
  const auto [hlo, hhi] = std::minmax_element(geo.mean_curvature.begin(), geo.mean_curvature.end());
  j["mean_curvature"] = {{"min", *hlo}, {"max", *hhi}};
  OrderedJson mink = OrderedJson::array();
  for (int m = 1; m <= geo.n; ++m) mink.push_back(curvature_integrals(geo, m).minkowski_residual);
  j["minkowski_residuals"] = mink;
  if (grid->mode() != GridMode::Radial) {
    const auto id = geometry_identity_residuals(geo);
    j["identity_residuals"] = {{"gradient", id.gradient}, {"hessian", id.hessian}};
  } else {
    j["identity_residuals"] = nullptr;
  }
  return j;
}

OrderedJson audit_json(const AuditReport& a, const FlowLawSpec& law, bool detailed) {
  OrderedJson j;
  j["passed"] = a.passed;
  j["flags"] = a.flags;
  if (law.law == FlowLaw::Mcf) {
    j["f_pow_nonincreasing"] = a.f_pow_nonincreasing;
    if (detailed) {
      j["rate_error_stated"] = number_or_null(a.rate_error_stated);
      j["rate_error_exact"] = number_or_null(a.rate_error_exact);
    }
  } else {
    j["w0_nondecreasing"] = a.w0_nondecreasing;
    j["weight_status"] = a.weight_status;
    j["weighted_curvature_nonincreasing"] =
        a.weighted_curvature_nonincreasing ? OrderedJson(*a.weighted_curvature_nonincreasing) : OrderedJson(nullptr);
  }
  j["gap_nonnegative"] = a.gap_nonnegative;
  if (detailed) j["final_relative_gap"] = number_or_null(a.final_relative_gap);
  return j;
}

RunArtifacts flow_pipeline(const RunConfig& config, bool detailed) {
  const auto grid = make_grid(config.grid);
  const auto law = make_law(config.flow, config.grid.n);
  const auto initial = make_state(make_shape(config.shape, grid), law, 0.0, config.threads);
  RunOptions options;
  options.t_max = config.flow.t_max;
  options.grad_tol = config.flow.grad_tol;
  options.c_cfl = config.flow.c_cfl;
  options.record_every = config.flow.record_every;
  options.max_steps = config.flow.max_steps;
  options.threads = config.threads;
  auto result = run_flow(initial, options);

  const auto& final_geo = result.final_state.geometry;
  std::optional<double> target = result.target_radius;
  if (law.law == FlowLaw::Icf) {
    target = h0_inverse(weighted_volume(final_geo), config.grid.n);
  }
  OrderedJson j;
  j["grid"] = grid_json(*grid);
  j["law"] = to_string(law.law);
  j["run"] = {{"steps", result.steps},
              {"rejections", result.rejections},
              {"stop_reason", result.stop_reason},
              {"t_final", result.final_state.t},
              {"records", result.series.rows.size()},
              {"decay_rate", optional_json(result.decay_rate)},
              {"barrier_excess", result.barrier_excess},
              {"gradient_bound_excess", result.gradient_bound_excess},
              {"invariants_preserved", result.invariants_preserved}};
  j["final_radius"] = radius_json(final_geo, target);
  if (result.series.rows.size() >= 3) {
    j["audit"] = audit_json(monotonicity_audit(result.series, law, 1e-8, config.flow.grad_tol), law, detailed);
  } else {
    j["audit"] = nullptr;
  }
  std::optional<InequalityReport> report;
  if (law.law == FlowLaw::Mcf) {
    report = michael_simon_report(final_geo, 1, RadialExtension::from_profile(*law.profile));
  } else if (law.k <= config.grid.n - 1) {
    const auto weight = law.weight ? *law.weight : default_weight(config.grid.n, law.k);
    report = michael_simon_report(final_geo, law.k, RadialExtension::from_weight(weight));
  }
  j["inequality"] = report ? report_json(*report) : OrderedJson(nullptr);
  return {std::move(result.series), std::move(j)};
}

OrderedJson verify_summary(const RunConfig& config) {
  const auto grid = make_grid(config.grid);
  const auto geo = graph_geometry(make_shape(config.shape, grid), {true, config.threads});
  OrderedJson j;
  j["grid"] = grid_json(*grid);
  j["inequality"] = report_json(michael_simon_report(geo, config.verify.k, make_extension(config), config.verify.f_const));
  if (config.verify.samples > 0) {
    const auto study = sample_perturbations(config);
    constexpr double kNearSphere = 1e-4;
    double min_gap = INFINITY, min_rel = INFINITY, max_err = 0.0, min_rel_away = INFINITY;
    int violations = 0, small_away = 0;
    for (const auto& s : study.samples) {
      min_gap = std::min(min_gap, s.gap);
      min_rel = std::min(min_rel, s.relative_gap);
      max_err = std::max(max_err, s.error);
      if (s.gap < -10.0 * s.error) ++violations;
      if (s.oscillation >= kNearSphere) {
        min_rel_away = std::min(min_rel_away, s.relative_gap);
        if (s.relative_gap < 1e-6) ++small_away;
      }
    }
    j["perturbations"] = {{"requested", config.verify.samples},
                          {"evaluated", study.samples.size()},
                          {"skipped", study.skipped},
                          {"min_gap", number_or_null(min_gap)},
                          {"min_relative_gap", number_or_null(min_rel)},
                          {"max_error_estimate", max_err},
                          {"violations", violations},
                          {"near_sphere_oscillation", kNearSphere},
                          {"min_relative_gap_away_from_spheres", number_or_null(min_rel_away)},
                          {"small_gaps_away_from_spheres", small_away}};
  } else {
    j["perturbations"] = nullptr;
  }
  return j;
}

}  // namespace

RunArtifacts execute(const RunConfig& config) {
  RunArtifacts out;
  if (config.command == "geometry") {
    out.summary = geometry_summary(config);
  } else if (config.command == "verify") {
    out.summary = verify_summary(config);
  } else if (config.command == "simulate" || config.command == "audit") {
    out = flow_pipeline(config, config.command == "audit");
  } else {
    throw InvalidArgument("unknown command '" + config.command + "'");
  }
  OrderedJson summary;
  summary["command"] = config.command;
  summary["seed"] = config.seed;
  for (auto& [key, value] : out.summary.items()) summary[key] = std::move(value);
  // The thread count does not change results and is left out of the echo.
  auto echo = config_to_json(config);
  echo.erase("threads");
  summary["config"] = std::move(echo);
  out.summary = std::move(summary);
  return out;
}

std::string format_csv(const TimeSeries& series) {
  std::string text;
  const auto& cols = TimeSeries::columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    text += (i ? "," : "") + cols[i];
  }
  text += '\n';
  char buf[32];
  for (const auto& row : series.rows) {
    const double values[] = {row.t,     row.dt,          row.area,  row.int_f_pow, row.W0,
                             row.int_Ek1_g, row.max_grad_sq, row.r_min, row.r_max, row.minkowski_resid,
                             row.lhs,   row.rhs,         row.gap};
    for (std::size_t i = 0; i < std::size(values); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", values[i]);
      if (i) text += ',';
      text += buf;
    }
    text += '\n';
  }
  return text;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
}

int run_config(const RunConfig& config, const std::filesystem::path& out_dir, bool quiet, std::ostream& log,
               std::ostream& err) {
  try {
    const auto artifacts = execute(config);
    const auto csv = out_dir / config.output.csv;
    const auto json = out_dir / config.output.json;
    write_text(csv, format_csv(artifacts.series));
    write_text(json, artifacts.summary.dump(2) + "\n");
    if (!quiet) {
      log << config.command << ": wrote " << csv.string() << " (" << artifacts.series.rows.size() << " rows) and "
          << json.string() << "\n";
    }
    return 0;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "invariant violation: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace hyperflow
