#include <CLI11.hpp>

#include <iostream>

#include "synthetic_scene.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic demo portrait and its auxiliary maps"};
  std::string out = "demo_scene";
  int width = 512, height = 770, wisps = 10;
  app.add_option("out", out, "output directory");
  app.add_option("--width", width)->check(CLI::Range(64, 4096));
  app.add_option("--height", height)->check(CLI::Range(64, 4096));
  app.add_option("--wisps", wisps)->check(CLI::Range(0, 10));
  CLI11_PARSE(app, argc, argv);

  try {
    const auto demo = hairwisp::testing::make_demo_scene(width, height, wisps);
    const auto paths = hairwisp::testing::write_demo_scene(out, demo);
    std::cout << paths.image.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
