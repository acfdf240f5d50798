#pragma once

#include <filesystem>
#include <string>

#include "ptk/nn/tensor.hpp"

namespace ptk::data {

/// Parameters per frame: 50 expression coefficients followed by 3 jaw Euler angles (x, y, z, radians).
inline constexpr nn::Index kExpressionDims = 50;
inline constexpr nn::Index kJawDims = 3;
inline constexpr nn::Index kMotionDims = kExpressionDims + kJawDims;
inline constexpr double kMotionFps = 25.0;

struct MotionSequence {
  nn::Matrix frames;  // F x 53
  double fps = kMotionFps;
  std::string id;

  nn::Index num_frames() const { return frames.rows(); }
  /// Throws ShapeError/ValueError when F < 1, P != 53, fps <= 0 or an entry is non-finite.
  void validate() const;

  bool operator==(const MotionSequence&) const = default;
};

/// Frame container shared by motion ("PTM1") and precomputed speech-feature ("PTF1") files:
///   magic[4], uint32 LE rows, uint32 LE cols, float32 LE fps, rows*cols float32 LE row-major.
struct FrameFile {
  nn::Matrix frames;
  double fps = 0.0;
};

void write_frame_file(const std::filesystem::path& path, std::string_view magic, const nn::Matrix& frames,
                      double fps);
/// `expected_cols` < 0 accepts any width. Throws FormatError on bad magic, truncation or
/// non-finite values, ShapeError on width mismatch.
FrameFile read_frame_file(const std::filesystem::path& path, std::string_view magic, nn::Index expected_cols = -1);

inline constexpr std::string_view kMotionMagic = "PTM1";
inline constexpr std::string_view kFeatureMagic = "PTF1";

void write_motion(const MotionSequence& seq, const std::filesystem::path& path);
/// The returned id is the file stem.
MotionSequence read_motion(const std::filesystem::path& path);

}  // namespace ptk::data
