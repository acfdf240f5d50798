#include "ptk/data/style.hpp"

#include <algorithm>

#include "ptk/common/error.hpp"

namespace ptk::data {

std::optional<int> emotion_index(std::string_view name) {
  auto it = std::find(kEmotions.begin(), kEmotions.end(), name);
  if (it == kEmotions.end()) return std::nullopt;
  return static_cast<int>(it - kEmotions.begin());
}

std::optional<int> intensity_index(std::string_view name) {
  if (name == kNoIntensity) return 0;
  auto it = std::find(kIntensities.begin(), kIntensities.end(), name);
  if (it == kIntensities.end()) return std::nullopt;
  return static_cast<int>(it - kIntensities.begin());
}

void StyleCondition::validate(int n_subjects) const {
  if (subject < 0 || subject >= n_subjects) {
    throw ValueError("subject index " + std::to_string(subject) + " outside [0, " + std::to_string(n_subjects) + ")");
  }
  if (emotion < 0 || emotion >= static_cast<int>(kEmotions.size())) {
    throw ValueError("emotion index " + std::to_string(emotion) + " outside [0, 8)");
  }
  if (intensity < 0 || intensity >= static_cast<int>(kIntensities.size())) {
    throw ValueError("intensity index " + std::to_string(intensity) + " outside [0, 3)");
  }
}

nn::Matrix one_hot(const StyleCondition& style, int n_subjects) {
  style.validate(n_subjects);
  nn::Matrix v = nn::Matrix::Zero(1, style_vector_length(n_subjects));
  v(0, style.subject) = 1.0;
  v(0, n_subjects + style.emotion) = 1.0;
  v(0, n_subjects + static_cast<int>(kEmotions.size()) + style.intensity) = 1.0;
  return v;
}

}  // namespace ptk::data
