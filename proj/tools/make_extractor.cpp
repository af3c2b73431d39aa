#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "derain/losses/extractor.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a deterministic perceptual-extractor weight archive"};
  std::string out = "extractor.st";
  std::uint64_t seed = 1;
  std::vector<int> widths{16, 32, 64};
  int convs = 2;
  app.add_option("--out", out, "Output archive path")->capture_default_str();
  app.add_option("--seed", seed, "Weight stream seed")->capture_default_str();
  app.add_option("--widths", widths, "Channel width per stage")->capture_default_str();
  app.add_option("--convs-per-stage", convs, "Convolutions per stage")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    derain::losses::write_random_extractor(out, seed, widths, convs);
  } catch (const std::exception& e) {
    std::cerr << "make_extractor: " << e.what() << "\n";
    return 1;
  }
  std::cout << out << "\n";
  return 0;
}
