#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mixflow/errors.hpp"

namespace {

// Exit codes: 0 success, 2 config or input validation error,
// 3 numerical divergence, 4 I/O error.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixflow: mixtures of repeated deterministic pushforward maps"};
  app.footer(mixflow_cli::config_key_help());
  app.require_subcommand(1);

  mixflow_cli::CliArgs args;
  unsigned long long seed_value = 0;
  int threads_value = 0;

  const char* names[] = {"sweep", "run", "sample", "density", "diagnose"};
  const char* descriptions[] = {
      "replicated ELBO over an (epsilon, N) grid; writes elbo_sweep.csv, "
      "sweep_cells.csv, best.json",
      "samples + ELBO curve + diagnostics for one flow; writes samples.csv, "
      "elbo_vs_n.csv, ksd.json, stability.csv",
      "draws only; writes samples.csv",
      "exact log-density at states from a CSV; writes density.csv",
      "diagnostics only; writes ksd.json, stability.csv, ess.json and "
      "optionally variance_compare.json"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descriptions[i]);
    sub->add_option("--config", args.config_path, "config file path")
        ->required();
    sub->add_option("--out", args.out_dir, "output directory")->required();
    sub->add_option("--seed", seed_value, "overrides the config seed");
    sub->add_option("--threads", threads_value,
                    "overrides the config worker count");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  args.command = sub->get_name();
  if (sub->count("--seed") > 0) args.seed = seed_value;
  if (sub->count("--threads") > 0) args.threads = threads_value;

  try {
    mixflow_cli::run_command(args);
  } catch (const mixflow::NumericalDivergence& e) {
    std::fprintf(stderr, "error: numerical divergence: %s\n", e.what());
    return kExitDivergence;
  } catch (const mixflow::OptimizationFailure& e) {
    std::fprintf(stderr, "error: optimization failed: %s\n", e.what());
    return kExitDivergence;
  } catch (const mixflow::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const mixflow::DataFormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const mixflow::InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
