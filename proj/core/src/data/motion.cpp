#include "ptk/data/motion.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "ptk/common/binary_io.hpp"
#include "ptk/common/error.hpp"

namespace ptk::data {

void MotionSequence::validate() const {
  if (frames.rows() < 1) throw ShapeError("motion " + id + ": needs at least one frame");
  if (frames.cols() != kMotionDims) {
    throw ShapeError("motion " + id + ": shape mismatch, expected " + std::to_string(kMotionDims) +
                     " parameters per frame, got " + std::to_string(frames.cols()));
  }
  if (!(fps > 0.0)) throw ValueError("motion " + id + ": fps must be positive");
  if (!frames.allFinite()) throw ValueError("motion " + id + ": non-finite values");
}

void write_frame_file(const std::filesystem::path& path, std::string_view magic, const nn::Matrix& frames,
                      double fps) {
  std::ostringstream out(std::ios::binary);
  io::write_magic(out, magic);
  io::write_pod(out, static_cast<std::uint32_t>(frames.rows()));
  io::write_pod(out, static_cast<std::uint32_t>(frames.cols()));
  io::write_pod(out, static_cast<float>(fps));
  for (nn::Index i = 0; i < frames.size(); ++i) io::write_pod(out, static_cast<float>(frames.data()[i]));
  io::write_file(path, out.str());
}

FrameFile read_frame_file(const std::filesystem::path& path, std::string_view magic, nn::Index expected_cols) {
  const std::vector<char> bytes = io::read_file(path);
  constexpr std::size_t header = 4 + 4 + 4 + 4;
  if (bytes.size() < header) throw FormatError("truncated header in " + path.string());
  if (std::string_view(bytes.data(), 4) != magic) {
    throw FormatError("bad magic in " + path.string() + " (expected \"" + std::string(magic) + "\")");
  }
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  float fps = 0.0f;
  std::memcpy(&rows, bytes.data() + 4, 4);
  std::memcpy(&cols, bytes.data() + 8, 4);
  std::memcpy(&fps, bytes.data() + 12, 4);
  if (expected_cols >= 0 && cols != expected_cols) {
    throw ShapeError("shape mismatch in " + path.string() + ": expected " + std::to_string(expected_cols) +
                     " columns, got " + std::to_string(cols));
  }
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != header + count * sizeof(float)) {
    throw FormatError("payload size of " + path.string() + " does not match its " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " header");
  }
  FrameFile out;
  out.fps = fps;
  out.frames.resize(rows, cols);
  for (std::size_t i = 0; i < count; ++i) {
    float v;
    std::memcpy(&v, bytes.data() + header + i * sizeof(float), sizeof(float));
    if (!std::isfinite(v)) throw FormatError("non-finite value in " + path.string());
    out.frames.data()[i] = v;
  }
  return out;
}

void write_motion(const MotionSequence& seq, const std::filesystem::path& path) {
  seq.validate();
  write_frame_file(path, kMotionMagic, seq.frames, seq.fps);
}

MotionSequence read_motion(const std::filesystem::path& path) {
  FrameFile f = read_frame_file(path, kMotionMagic, kMotionDims);
  MotionSequence seq{std::move(f.frames), f.fps, path.stem().string()};
  seq.validate();
  return seq;
}

}  // namespace ptk::data
