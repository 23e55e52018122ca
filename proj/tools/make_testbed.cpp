// Writes the synthetic two-language testbed to a directory so the CLI
// pipeline can be exercised end to end.

#include <CLI11.hpp>

#include <iostream>

#include "covbias/covbias.hpp"
#include "covbias/synthetic.hpp"

using namespace covbias;

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic language-coverage-bias testbed", "covbias-testbed"};
  synthetic::TestbedConfig cfg;
  std::string out_dir;
  app.add_option("-o,--output-dir", out_dir)->required();
  app.add_option("--seed", cfg.seed)->capture_default_str();
  app.add_option("--lexicon-size", cfg.lexicon_size)->capture_default_str();
  app.add_option("--overlap", cfg.overlap)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--pairs-per-origin", cfg.pairs_per_origin)->capture_default_str();
  app.add_option("--tuning-pairs", cfg.tuning_pairs)->capture_default_str();
  app.add_option("--mono-lines", cfg.mono_lines)->capture_default_str();
  app.add_option("--heldout-lines", cfg.heldout_mono_lines)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    synthetic::write_testbed(synthetic::make_testbed(cfg), out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
