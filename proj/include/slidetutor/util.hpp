#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace slidetutor {

using Bytes = std::vector<std::uint8_t>;

namespace text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Collapses every run of whitespace (including newlines) into one space and trims.
std::string collapse_whitespace(std::string_view s);

/// Truncates to at most `max_chars` UTF-8 code points without splitting a sequence.
std::string utf8_truncate(std::string_view s, std::size_t max_chars);
std::size_t utf8_length(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace text

namespace digest {

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);
std::string base64(std::span<const std::uint8_t> data);

}  // namespace digest

namespace fsutil {

Bytes read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never see a torn file.
void write_atomic(const std::filesystem::path& path, std::string_view contents);
void append_line(const std::filesystem::path& path, std::string_view line);

}  // namespace fsutil

}  // namespace slidetutor
