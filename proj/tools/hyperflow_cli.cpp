// hyperflow: run geometry checks, flow simulations, inequality verifications
// and monotonicity audits from a JSON config.
//
//   hyperflow simulate --config run.json --out results/ [--seed N] [--threads T] [--quiet]
//
// Exit status: 0 success, 1 usage or config error, 2 invariant violation.

#include "hyperflow/error.hpp"
#include "hyperflow/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool quiet = false;
};

void add_options(CLI::App& cmd, Options& opt) {
  cmd.add_option("--config", opt.config, "JSON run config")->required();
  cmd.add_option("--out", opt.out, "existing output directory")->capture_default_str();
  cmd.add_option("--seed", opt.seed, "seed for sampled verifications, overrides the config");
  cmd.add_option("--threads", opt.threads, "worker threads, overrides the config")->check(CLI::Range(1, 256));
  cmd.add_flag("--quiet", opt.quiet, "suppress progress output");
}

int run(const std::string& command, const Options& opt) {
  std::ifstream in(opt.config, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read '" << opt.config << "'\n";
    return 1;
  }
  std::ostringstream text;
  text << in.rdbuf();

  hyperflow::RunConfig config;
  try {
    // The subcommand fills an absent "command"; a different one is an error.
    auto json = hyperflow::OrderedJson::parse(text.str(), nullptr, false);
    if (json.is_object() && !json.contains("command")) json["command"] = command;
    config = hyperflow::parse_config(json.is_discarded() ? text.str() : json.dump());
    if (config.command != command) {
      throw hyperflow::InvalidArgument("config field /command: '" + config.command + "' does not match subcommand '" +
                                       command + "'");
    }
  } catch (const hyperflow::InvalidArgument& e) {
    std::cerr << "error: " << opt.config << ": " << e.what() << "\n";
    return 1;
  }
  if (opt.seed) config.seed = *opt.seed;
  if (opt.threads) config.threads = *opt.threads;

  const std::filesystem::path out(opt.out);
  if (!std::filesystem::is_directory(out)) {
    std::cerr << "error: output directory '" << opt.out << "' does not exist\n";
    return 1;
  }
  return hyperflow::run_config(config, out, opt.quiet, std::cout, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvature flows of starshaped hypersurfaces in hyperbolic space"};
  app.require_subcommand(1);
  Options opt;
  const char* commands[][2] = {{"geometry", "evaluate the geometry of the configured shape"},
                               {"simulate", "run the configured flow"},
                               {"verify", "evaluate the inequality on the shape and random perturbations"},
                               {"audit", "run the flow and audit its monotone quantities"}};
  for (const auto& [name, help] : commands) add_options(*app.add_subcommand(name, help), opt);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return run(app.get_subcommands().front()->get_name(), opt);
}
