// SPDX-License-Identifier: Apache-2.0
//
// Writes a samples file drawn from an elliptical model with identity scatter.
//   make-fixture <out> [--m 3] [--n 1000] [--model gaussian] [--seed 42]
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "robust_scatter/cli.hpp"

int main(int argc, char** argv) {
  using namespace robust_scatter;
  CLI::App app{"Generate a robust-scatter samples fixture", "make-fixture"};
  std::string out_path;
  std::size_t m = 3;
  std::size_t n = 1000;
  std::string model = "gaussian";
  std::uint64_t seed = 42;
  app.add_option("out", out_path, "Output samples file")->required();
  app.add_option("--m", m, "Dimension")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--n", n, "Sample count")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--model", model, "Radial model id")->capture_default_str();
  app.add_option("--seed", seed, "RNG seed (stream 0)")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const EllipticalSampler sampler(EllipticalModel{HermitianMatrix::identity(m), parse_model_id(model)});
    RngStream rng(seed, 0);
    const SampleSet x = sampler.draw_many(n, rng);
    const std::string comment = "make-fixture --m " + std::to_string(m) + " --n " + std::to_string(n) +
                                " --model " + model + " --seed " + std::to_string(seed);
    std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
    f << format_samples(x, comment);
    if (!f.flush()) {
      std::cerr << "error: cannot write '" << out_path << "'\n";
      return kExitIo;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}
