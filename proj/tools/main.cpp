#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "runner/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Random Schroedinger operator experiments"};
  app.require_subcommand(1);

  nslab::cli::RunOptions opts;
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  for (const char* name : nslab::cli::kSubcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config (JSON with comments)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--threads", opts.threads, "worker count; results do not depend on it")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory (default from config)");
  }
  app.add_subcommand("list", "print the subcommands");

  CLI11_PARSE(app, argc, argv);

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->get_name() == "list") {
    for (const char* name : nslab::cli::kSubcommands) std::cout << name << '\n';
    return 0;
  }
  opts.config = config;
  if (chosen->count("--seed") > 0) opts.seed = seed;
  if (!out.empty()) opts.out = out;
  return nslab::cli::run(chosen->get_name(), opts, std::cerr);
}
