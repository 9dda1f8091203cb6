#include <boost/process.hpp>

#include <map>
#include <regex>

#include "slidetutor/error.hpp"
#include "slidetutor/ingest.hpp"

namespace slidetutor {

namespace {

namespace bp = boost::process;
namespace fs = std::filesystem;

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
  for (auto pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key, pos + value.size())) {
    tmpl.replace(pos, key.size(), value);
  }
  return tmpl;
}

std::string tail_of(const fs::path& log) {
  std::error_code ec;
  if (!fs::exists(log, ec)) return {};
  std::string text = fsutil::read_text(log);
  return text.size() > 400 ? text.substr(text.size() - 400) : text;
}

}  // namespace

SlideDeck rasterize_deck(SlideDeck deck, const fs::path& archive_path, const RendererConfig& renderer,
                         const fs::path& image_dir) {
  if (renderer.command.empty()) throw Error(Errc::RendererFailed, "no renderer command configured");

  fs::path raw_dir = image_dir.parent_path() / (image_dir.filename().string() + ".raw");
  fs::remove_all(raw_dir);
  fs::create_directories(raw_dir);
  fs::create_directories(image_dir);
  fs::path log = raw_dir / "renderer.log";

  std::string command = substitute(renderer.command, "{input}", shell_quote(fs::absolute(archive_path).string()));
  command = substitute(command, "{outdir}", shell_quote(fs::absolute(raw_dir).string()));

  int exit_code = 0;
  try {
    bp::child proc("/bin/sh", "-c", command, (bp::std_out & bp::std_err) > log.string(),
                   bp::std_in < bp::null);
    if (!proc.wait_for(renderer.timeout)) {
      proc.terminate();
      throw Error(Errc::RendererFailed, "renderer timed out after " +
                                            std::to_string(renderer.timeout.count()) + " ms");
    }
    exit_code = proc.exit_code();
  } catch (const bp::process_error& e) {
    throw Error(Errc::RendererFailed, e.what());
  }
  if (exit_code != 0) {
    throw Error(Errc::RendererFailed, "renderer exited with status " + std::to_string(exit_code) + ": " +
                                          tail_of(log));
  }

  static const std::regex kPageFile(R"(page-(\d+)\.png)");
  std::map<int, fs::path> rendered;
  for (const auto& entry : fs::directory_iterator(raw_dir)) {
    std::smatch m;
    std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, kPageFile)) rendered[std::stoi(m[1].str())] = entry.path();
  }
  if (rendered.size() != deck.pages.size()) {
    throw Error(Errc::PageCountMismatch, "renderer produced " + std::to_string(rendered.size()) +
                                             " pages for a deck of " + std::to_string(deck.pages.size()));
  }

  for (auto& page : deck.pages) {
    auto it = rendered.find(page.index);
    if (it == rendered.end()) {
      throw Error(Errc::PageCountMismatch, "renderer produced no image for page " + std::to_string(page.index));
    }
    Bytes raw = fsutil::read_file(it->second);
    png::dimensions(raw);  // rejects non-PNG output early
    png::Decoded fitted = png::fit_within(png::decode(raw), renderer.max_side);
    if (fitted.width <= 0 || fitted.height <= 0) {
      throw Error(Errc::RendererFailed, "empty image for page " + std::to_string(page.index));
    }

    RasterImage image;
    image.png = png::encode(fitted);
    image.width = fitted.width;
    image.height = fitted.height;
    std::string file = "page-" + std::to_string(page.index) + ".png";
    image.path = (image_dir.filename() / file).generic_string();
    fsutil::write_atomic(image_dir / file,
                         std::string_view(reinterpret_cast<const char*>(image.png.data()), image.png.size()));
    page.image = std::move(image);
  }
  fs::remove_all(raw_dir);
  return deck;
}

}  // namespace slidetutor
