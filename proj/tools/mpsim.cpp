#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpsim/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Matrix-product simulation of probabilistic logic circuits"};
  app.require_subcommand(1);

  mpsim::cli::Options opts;
  std::int64_t max_rank = 0;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--rank-tol", opts.rank_tol, "Relative singular-value cutoff")->default_val(1e-12);
    cmd->add_option("--max-rank", max_rank, "Lossy bond-dimension cap (off by default)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--oracle-cap", opts.oracle_cap, "Largest bit count checked against the dense oracle")
        ->default_val(12);
    cmd->add_flag("--no-timing", opts.no_timing, "Omit wall time from the output");
  };

  std::string path;
  std::vector<std::string> marginals;
  std::string target;

  auto* run = app.add_subcommand("run", "Execute a circuit and print marginals as JSON");
  run->add_option("circuit", path, "Circuit file")->required();
  run->add_option("--marginal", marginals, "bit=value,... | all-outputs (repeatable)")->allow_extra_args(false);
  add_common(run);

  auto* search = app.add_subcommand("search", "Find a preimage of an output value and count all of them");
  search->add_option("circuit", path, "Circuit file")->required();
  search->add_option("--target", target, "Output value: bit=value,... or a 0/1 string")->required();
  add_common(search);

  auto* verify = app.add_subcommand("verify", "Compare against the brute-force oracle");
  verify->add_option("circuit", path, "Circuit file")->required();
  add_common(verify);

  auto* heights = app.add_subcommand("heights", "Print the per-step height profile as CSV");
  heights->add_option("circuit", path, "Circuit file")->required();
  add_common(heights);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : mpsim::cli::kParseError;
  }
  if (max_rank > 0) opts.max_rank = max_rank;

  if (*run) {
    // An explicit empty --marginal "" asks for the normalization.
    if (run->count("--marginal") > 0 && marginals.empty()) marginals.push_back("");
    return mpsim::cli::cmd_run(path, marginals, opts, std::cout, std::cerr);
  }
  if (*search) return mpsim::cli::cmd_search(path, target, opts, std::cout, std::cerr);
  if (*verify) return mpsim::cli::cmd_verify(path, opts, std::cout, std::cerr);
  return mpsim::cli::cmd_heights(path, opts, std::cout, std::cerr);
}
