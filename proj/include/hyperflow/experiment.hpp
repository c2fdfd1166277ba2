#pragma once

// Declarative experiment runner. A run is described by one JSON document:
//
//   {
//     "command": "simulate",                      geometry | simulate | verify | audit
//     "seed": 0,
//     "threads": 1,
//     "grid":   {"mode": "axisymmetric", "n": 2, "theta": 64, "psi": 128},
//     "shape":  {"radius": 1.2, "harmonics": [{"theta": 2, "psi": 0, "amplitude": 0.1}]},
//     "flow":   {"law": "mcf",
//                "profile": {"kind": "fhat", "expression": "r - 1", "domain": [0.2, 3.0],
//                            "h_ref": 1.0, "r_ref": null},
//                "k": 2,
//                "weight": {"kind": "default"},
//                "t_max": 20.0, "grad_tol": 1e-8, "c_cfl": 0.2, "record_every": 10,
//                "max_steps": 10000000},
//     "verify": {"k": 1, "extension": {"kind": "constant", "value": 1.0}, "f_const": null,
//                "samples": 0, "amplitude": 0.05, "max_mode": 4},
//     "output": {"csv": "series.csv", "json": "summary.json"}
//   }
//
// Every field is optional and defaults as shown. A harmonic adds
// amplitude * cos(theta_freq theta) * sin^psi_freq(theta) * cos(psi_freq psi).
//
// Profile kinds: fhat (expression in r), fbar (expression in r), equality
// (fbar = lambda^{1-n}), constant (fbar = value). Weight kinds: default
// (gtilde = lambda'), g and f (expressions in lp), ode (boundary values
// g_lo, g_hi on s_domain). Extension kinds: constant, radial (expression in
// r), profile (the flow profile), weight (the flow weight).

#include "hyperflow/flow_engine.hpp"
#include "hyperflow/functionals.hpp"
#include "hyperflow/sphere_domain.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hyperflow {

using OrderedJson = nlohmann::ordered_json;

struct GridSpec {
  GridMode mode = GridMode::Axisymmetric;
  int n = 2;
  int theta = 64;
  int psi = 128;
};

struct Harmonic {
  int theta = 0;
  int psi = 0;
  double amplitude = 0.0;
};

struct ShapeSpec {
  double radius = 1.0;
  std::vector<Harmonic> harmonics;
};

struct ProfileSpec {
  std::string kind = "fhat";
  std::string expression = "r - 1";
  double value = 1.0;
  Interval domain{0.2, 3.0};
  double h_ref = 1.0;
  std::optional<double> r_ref;
};

struct WeightSpec {
  std::string kind = "default";
  std::string expression;
  Interval domain{1.0, 1e10};  // in lambda' for g and f
  double g_lo = 1.0;
  double g_hi = 1.0;
  Interval s_domain{0.1, 3.0};
};

struct FlowSpec {
  FlowLaw law = FlowLaw::Mcf;
  ProfileSpec profile;
  int k = 2;
  WeightSpec weight;
  double t_max = 20.0;
  double grad_tol = 1e-8;
  double c_cfl = 0.2;
  int record_every = 10;
  long max_steps = 10'000'000;
};

struct ExtensionSpec {
  std::string kind = "constant";
  double value = 1.0;
  std::string expression;
};

struct VerifySpec {
  int k = 1;
  ExtensionSpec extension;
  std::optional<double> f_const;
  int samples = 0;
  double amplitude = 0.05;
  int max_mode = 4;
};

struct OutputSpec {
  std::string csv = "series.csv";
  std::string json = "summary.json";
};

struct RunConfig {
  std::string command = "simulate";
  std::uint64_t seed = 0;
  int threads = 1;
  GridSpec grid;
  ShapeSpec shape;
  FlowSpec flow;
  VerifySpec verify;
  OutputSpec output;
};

/// Parses and validates a config. Throws InvalidArgument naming the line and
/// column of a syntax error or the JSON pointer of an invalid field.
RunConfig parse_config(const std::string& text);

/// Full config with every default filled in, keys in the documented order.
OrderedJson config_to_json(const RunConfig& config);

/// Builders used by the pipelines.
std::shared_ptr<const SphereGrid> make_grid(const GridSpec& spec);
GraphHypersurface make_shape(const ShapeSpec& spec, std::shared_ptr<const SphereGrid> grid);
FlowLawSpec make_law(const FlowSpec& spec, int n);
RadialExtension make_extension(const RunConfig& config);

/// Random starshaped perturbations of the configured shape, checked against
/// the inequality on the configured grid and on a grid refined twice. The
/// discretization error of a sample is |gap(N) - gap(2N)|.
struct PerturbationSample {
  double oscillation = 0.0;  // r_max - r_min on the fine grid
  double gap = 0.0;          // fine grid
  double relative_gap = 0.0;
  double error = 0.0;
};
struct PerturbationStudy {
  std::vector<PerturbationSample> samples;
  int skipped = 0;  // samples outside Gamma_k^+
};
PerturbationStudy sample_perturbations(const RunConfig& config);

struct RunArtifacts {
  TimeSeries series;
  OrderedJson summary;
};

/// Executes the configured pipeline. Throws InvalidArgument or
/// InvariantViolation.
RunArtifacts execute(const RunConfig& config);

/// CSV with the 13 series columns, %.17g floats and '\n' line endings.
std::string format_csv(const TimeSeries& series);
/// Writes text to a file. Throws InvalidArgument echoing the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Runs a config and writes its artifacts into out_dir. Returns the exit
/// status: 0 on success, 1 on usage errors, 2 on invariant violations.
int run_config(const RunConfig& config, const std::filesystem::path& out_dir, bool quiet, std::ostream& log,
               std::ostream& err);

}  // namespace hyperflow
