#include <png.h>

#include <cstring>

#include "slidetutor/error.hpp"
#include "slidetutor/ingest.hpp"

namespace slidetutor::png {

namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

std::uint32_t be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

}  // namespace

std::pair<int, int> dimensions(std::span<const std::uint8_t> data) {
  if (data.size() < 24 || std::memcmp(data.data(), kSignature, 8) != 0 ||
      std::memcmp(data.data() + 12, "IHDR", 4) != 0) {
    throw Error(Errc::RendererFailed, "renderer output is not a PNG image");
  }
  return {static_cast<int>(be32(data.data() + 16)), static_cast<int>(be32(data.data() + 20))};
}

Decoded decode(std::span<const std::uint8_t> data) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) {
    throw Error(Errc::RendererFailed, std::string("png decode: ") + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  Decoded out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.rgba.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.rgba.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(Errc::RendererFailed, "png decode: " + msg);
  }
  return out;
}

Bytes encode(const Decoded& src) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(src.width);
  image.height = static_cast<png_uint_32>(src.height);
  image.format = PNG_FORMAT_RGBA;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, src.rgba.data(), 0, nullptr)) {
    throw Error(Errc::Io, std::string("png encode: ") + image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, src.rgba.data(), 0, nullptr)) {
    throw Error(Errc::Io, std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

Decoded fit_within(const Decoded& src, int max_side) {
  int longest = std::max(src.width, src.height);
  if (longest <= max_side) return src;

  double scale = static_cast<double>(max_side) / longest;
  Decoded dst;
  dst.width = std::max(1, static_cast<int>(src.width * scale + 0.5));
  dst.height = std::max(1, static_cast<int>(src.height * scale + 0.5));
  dst.rgba.assign(static_cast<std::size_t>(dst.width) * dst.height * 4, 0);

  // Box filter: each destination pixel averages the source rectangle it covers.
  for (int y = 0; y < dst.height; ++y) {
    int y0 = y * src.height / dst.height;
    int y1 = std::max(y0 + 1, (y + 1) * src.height / dst.height);
    for (int x = 0; x < dst.width; ++x) {
      int x0 = x * src.width / dst.width;
      int x1 = std::max(x0 + 1, (x + 1) * src.width / dst.width);
      unsigned long sum[4] = {0, 0, 0, 0};
      for (int sy = y0; sy < y1; ++sy) {
        const std::uint8_t* row = src.rgba.data() + (static_cast<std::size_t>(sy) * src.width) * 4;
        for (int sx = x0; sx < x1; ++sx) {
          for (int c = 0; c < 4; ++c) sum[c] += row[sx * 4 + c];
        }
      }
      unsigned long n = static_cast<unsigned long>((y1 - y0) * (x1 - x0));
      std::uint8_t* out = dst.rgba.data() + (static_cast<std::size_t>(y) * dst.width + x) * 4;
      for (int c = 0; c < 4; ++c) out[c] = static_cast<std::uint8_t>((sum[c] + n / 2) / n);
    }
  }
  return dst;
}

Decoded solid(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Decoded img;
  img.width = width;
  img.height = height;
  img.rgba.reserve(static_cast<std::size_t>(width) * height * 4);
  for (int i = 0; i < width * height; ++i) {
    img.rgba.insert(img.rgba.end(), {r, g, b, 255});
  }
  return img;
}

}  // namespace slidetutor::png
