#include <CLI11.hpp>
#include <iostream>
#include <levyest/cli.hpp>

int main(int argc, char** argv)
{
  CLI::App app{ "Levy density estimation from high-frequency increments" };
  app.require_subcommand(1, 1);

  levyest::RunConfig rc;
  uint64_t seed = 0;
  for (const char* name : { "simulate", "estimate", "bench", "check-bounds", "diagnose" }) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", rc.config_path, "experiment config file")->required();
    sub->add_option("--out", rc.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "master seed override");
    sub->add_option("--workers", rc.workers, "worker threads (falls back to LEVYEST_WORKERS)")
      ->check(CLI::NonNegativeNumber);
    sub->add_flag("--dump-samples", rc.dump_samples, "bench: also write the first replicate of each cell");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  auto* sub = app.get_subcommands().front();
  rc.subcommand = sub->get_name();
  if (sub->count("--seed"))
    rc.seed = seed;
  return levyest::run(rc, std::cout, std::cerr);
}
