#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "ptk/nn/tensor.hpp"

namespace ptk::data {

inline constexpr std::array<std::string_view, 8> kEmotions = {
    "neutral", "happy", "sad", "surprised", "fear", "disgusted", "angry", "contempt"};
inline constexpr std::array<std::string_view, 3> kIntensities = {"weak", "medium", "strong"};
/// Intensity label carried by neutral sequences.
inline constexpr std::string_view kNoIntensity = "none";

std::optional<int> emotion_index(std::string_view name);
/// "none" maps to index 0 so that neutral clips still set one bit of the intensity block.
std::optional<int> intensity_index(std::string_view name);

/// Subject / emotion / intensity condition; one-hot encoded as [subject | emotion | intensity].
struct StyleCondition {
  int subject = 0;
  int emotion = 0;
  int intensity = 0;

  /// Throws ValueError when an index lies outside its block.
  void validate(int n_subjects) const;
  bool operator==(const StyleCondition&) const = default;
};

inline constexpr int style_vector_length(int n_subjects) {
  return n_subjects + static_cast<int>(kEmotions.size()) + static_cast<int>(kIntensities.size());
}

/// 1 x (n_subjects + 8 + 3) row with exactly one 1 per block.
nn::Matrix one_hot(const StyleCondition& style, int n_subjects);

}  // namespace ptk::data
