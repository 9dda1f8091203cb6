#include "zip_archive.hpp"

#include <zlib.h>

#include "slidetutor/error.hpp"

namespace slidetutor::detail {

namespace {

constexpr std::uint32_t kEndOfCentralDir = 0x06054b50;
constexpr std::uint32_t kCentralDirEntry = 0x02014b50;
constexpr std::uint32_t kLocalHeader = 0x04034b50;

[[noreturn]] void malformed(const std::string& why) { throw Error(Errc::MalformedArchive, why); }

std::uint16_t u16(std::span<const std::uint8_t> d, std::size_t at) {
  if (at + 2 > d.size()) malformed("truncated record");
  return static_cast<std::uint16_t>(d[at] | (d[at + 1] << 8));
}

std::uint32_t u32(std::span<const std::uint8_t> d, std::size_t at) {
  if (at + 4 > d.size()) malformed("truncated record");
  return static_cast<std::uint32_t>(d[at]) | (static_cast<std::uint32_t>(d[at + 1]) << 8) |
         (static_cast<std::uint32_t>(d[at + 2]) << 16) |
         (static_cast<std::uint32_t>(d[at + 3]) << 24);
}

}  // namespace

ZipArchive::ZipArchive(std::span<const std::uint8_t> data) : data_(data) {
  if (data.size() < 22) malformed("not a zip archive");

  // The end record sits in the last 22 + 65535 bytes (trailing comment).
  std::size_t eocd = std::string::npos;
  std::size_t lowest = data.size() > 22 + 0xFFFF ? data.size() - 22 - 0xFFFF : 0;
  for (std::size_t pos = data.size() - 22 + 1; pos-- > lowest;) {
    if (u32(data, pos) == kEndOfCentralDir) {
      eocd = pos;
      break;
    }
  }
  if (eocd == std::string::npos) malformed("end of central directory not found");

  std::uint16_t count = u16(data, eocd + 10);
  std::uint32_t cd_offset = u32(data, eocd + 16);
  if (count == 0xFFFF || cd_offset == 0xFFFFFFFF) malformed("zip64 archives are not supported");

  std::size_t pos = cd_offset;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (u32(data, pos) != kCentralDirEntry) malformed("bad central directory entry");
    Entry e;
    e.method = u16(data, pos + 10);
    e.compressed_size = u32(data, pos + 20);
    e.uncompressed_size = u32(data, pos + 24);
    std::uint16_t name_len = u16(data, pos + 28);
    std::uint16_t extra_len = u16(data, pos + 30);
    std::uint16_t comment_len = u16(data, pos + 32);
    e.local_offset = u32(data, pos + 42);
    if (pos + 46 + name_len > data.size()) malformed("truncated entry name");
    std::string name(reinterpret_cast<const char*>(data.data() + pos + 46), name_len);
    entries_[name] = e;
    pos += 46u + name_len + extra_len + comment_len;
  }
}

std::string ZipArchive::read(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) malformed("missing part " + name);
  const Entry& e = it->second;

  std::size_t lh = e.local_offset;
  if (u32(data_, lh) != kLocalHeader) malformed("bad local header for " + name);
  std::size_t start = lh + 30u + u16(data_, lh + 26) + u16(data_, lh + 28);
  if (start + e.compressed_size > data_.size()) malformed("truncated data for " + name);
  const auto* src = data_.data() + start;

  if (e.method == 0) return std::string(reinterpret_cast<const char*>(src), e.compressed_size);
  if (e.method != 8) malformed("unsupported compression method for " + name);

  std::string out(e.uncompressed_size, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) malformed("inflate init failed");
  zs.next_in = const_cast<Bytef*>(src);
  zs.avail_in = e.compressed_size;
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = e.uncompressed_size;
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != e.uncompressed_size) malformed("corrupt deflate data in " + name);
  return out;
}

std::vector<std::string> ZipArchive::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

}  // namespace slidetutor::detail
