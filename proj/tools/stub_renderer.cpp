// Test stand-in for a slide renderer: writes one solid-colour PNG per slide.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "slidetutor/error.hpp"
#include "slidetutor/ingest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stub slide renderer"};
  std::string input;
  std::string outdir;
  int pages = -1;
  int width = 1600;
  int height = 1200;
  bool fail = false;
  app.add_option("--input", input, "slide archive")->required();
  app.add_option("--outdir", outdir, "output directory")->required();
  app.add_option("--pages", pages, "page count (default: slides in the archive)");
  app.add_option("--width", width)->check(CLI::Range(1, 8192));
  app.add_option("--height", height)->check(CLI::Range(1, 8192));
  app.add_flag("--fail", fail, "exit with an error without writing anything");
  CLI11_PARSE(app, argc, argv);

  if (fail) {
    std::cerr << "stub_renderer: failing on request\n";
    return 3;
  }
  try {
    if (pages < 0) {
      auto bytes = slidetutor::fsutil::read_file(input);
      pages = static_cast<int>(slidetutor::parse_deck(bytes, "render").pages.size());
    }
    std::filesystem::create_directories(outdir);
    for (int i = 0; i < pages; ++i) {
      auto img = slidetutor::png::solid(width, height, static_cast<std::uint8_t>(40 + 17 * i % 200),
                                        static_cast<std::uint8_t>(90 + 31 * i % 150), 200);
      auto data = slidetutor::png::encode(img);
      auto path = std::filesystem::path(outdir) / ("page-" + std::to_string(i) + ".png");
      slidetutor::fsutil::write_atomic(path, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
    }
  } catch (const std::exception& e) {
    std::cerr << "stub_renderer: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
