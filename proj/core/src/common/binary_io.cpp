#include "ptk/common/binary_io.hpp"

#include <array>
#include <fstream>
#include <iterator>

#include "ptk/common/error.hpp"

namespace ptk::io {

void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void expect_magic(std::istream& in, std::string_view magic, const std::filesystem::path& path) {
  std::array<char, 8> buf{};
  in.read(buf.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || std::string_view(buf.data(), magic.size()) != magic) {
    throw FormatError("bad magic in " + path.string() + " (expected \"" + std::string(magic) + "\")");
  }
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

}  // namespace ptk::io
