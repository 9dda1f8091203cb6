#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace slidetutor::detail {

/// Read-only view over an in-memory zip file. Supports stored and deflated
/// entries; zip64 archives are rejected.
class ZipArchive {
 public:
  explicit ZipArchive(std::span<const std::uint8_t> data);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::string read(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  struct Entry {
    std::uint16_t method = 0;
    std::uint32_t compressed_size = 0;
    std::uint32_t uncompressed_size = 0;
    std::uint32_t local_offset = 0;
  };

  std::span<const std::uint8_t> data_;
  std::map<std::string, Entry> entries_;
};

}  // namespace slidetutor::detail
