#ifndef REVDETECT_UTIL_HPP
#define REVDETECT_UTIL_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace revdetect::util {

// SHA-256 of a byte string, as a lowercase hex digest.
std::string sha256_hex(std::string_view data);

// FNV-1a 64-bit. Used where we need a fast deterministic hash that is
// identical across platforms (std::hash is not).
std::uint64_t fnv1a64(std::string_view data);

std::string lowercase(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Deterministic double formatting with a fixed number of decimals.
std::string format_fixed(double v, int decimals);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace revdetect::util

#endif
