#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ptk::io {

static_assert(std::endian::native == std::endian::little,
              "container formats are little-endian; big-endian hosts are not supported");

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return static_cast<bool>(in);
}

void write_magic(std::ostream& out, std::string_view magic);

/// Reads four bytes and compares them against `magic`. Throws FormatError("bad magic") on mismatch.
void expect_magic(std::istream& in, std::string_view magic, const std::filesystem::path& path);

/// Whole-file helpers. Both throw FormatError with the path on I/O failure.
std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ptk::io
