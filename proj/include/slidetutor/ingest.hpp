#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "slidetutor/util.hpp"

namespace slidetutor {

using json = nlohmann::json;

struct RasterImage {
  Bytes png;
  int width = 0;
  int height = 0;
  /// Location relative to the deck directory, recorded in the manifest.
  std::string path;
};

struct Page {
  int index = 0;
  std::string page_id;
  std::vector<std::string> text_blocks;
  std::optional<RasterImage> image;
};

struct SlideDeck {
  std::string deck_id;
  std::string title;
  std::vector<Page> pages;
};

/// Reads a zip-of-XML slide archive. Pages come out in presentation order with
/// text blocks in reading order and no images.
SlideDeck parse_deck(std::span<const std::uint8_t> archive, std::string_view title);

struct RendererConfig {
  /// Shell command template; `{input}` and `{outdir}` are substituted (quoted).
  /// The command must write `page-<index>.png` for every page into `{outdir}`.
  std::string command;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  int max_side = 1024;
};

/// Runs the external renderer once for the whole deck and attaches the page images.
/// `image_dir` receives the normalized PNGs; manifest paths are relative to its parent.
SlideDeck rasterize_deck(SlideDeck deck, const std::filesystem::path& archive_path,
                         const RendererConfig& renderer, const std::filesystem::path& image_dir);

struct PageContent {
  std::string text;
  RasterImage image;
};

PageContent page_content(const Page& page);

json deck_to_json(const SlideDeck& deck);
/// Rebuilds a deck from its manifest, loading image bytes relative to `base_dir` when given.
SlideDeck deck_from_json(const json& manifest,
                         const std::optional<std::filesystem::path>& base_dir = std::nullopt);

namespace png {

struct Decoded {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;
};

std::pair<int, int> dimensions(std::span<const std::uint8_t> data);
Decoded decode(std::span<const std::uint8_t> data);
Bytes encode(const Decoded& image);
/// Area-averaged downscale so that max(width, height) <= max_side; no-op when it already fits.
Decoded fit_within(const Decoded& image, int max_side);
Decoded solid(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace png

}  // namespace slidetutor
