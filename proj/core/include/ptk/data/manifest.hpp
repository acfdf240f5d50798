#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptk/data/style.hpp"

namespace ptk::data {

enum class Split { None, Train, Val, Test };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

enum class SubjectRole { Train, Heldout };

struct SubjectInfo {
  std::string name;
  SubjectRole role = SubjectRole::Train;
  bool operator==(const SubjectInfo&) const = default;
};

struct ManifestEntry {
  std::string id;
  std::string subject;
  std::string emotion;    // one of kEmotions
  std::string intensity;  // weak/medium/strong, or "none" for neutral
  std::filesystem::path motion;  // absolute once loaded
  std::filesystem::path audio;
  int sentence = -1;
  Split split = Split::None;

  bool operator==(const ManifestEntry&) const = default;
};

/// Dataset index. Style subject indices follow the order of training-role subjects in `subjects`.
///
/// On-disk JSON (paths relative to the manifest's directory):
///   { "version": "ptk-manifest/1", "split_stage": 0|1|2,
///     "subjects": [ { "name": "S00", "role": "train" | "heldout" } ],
///     "entries":  [ { "id", "subject", "emotion", "intensity", "motion", "audio",
///                     "sentence": int, "split": "train" | "val" | "test" | "none" } ] }
struct DatasetManifest {
  std::vector<SubjectInfo> subjects;
  std::vector<ManifestEntry> entries;
  int split_stage = 0;

  std::vector<std::string> training_subjects() const;
  bool is_training_subject(const std::string& name) const;
  int n_style_subjects() const { return static_cast<int>(training_subjects().size()); }
  /// Throws ValueError for entries of held-out subjects.
  StyleCondition style_of(const ManifestEntry& entry) const;
  std::vector<const ManifestEntry*> with_split(Split s) const;

  /// Checks labels, sentence indices, id uniqueness and subject registration.
  /// With `check_files`, also requires every motion/audio path to exist ("dangling path").
  void validate(bool check_files) const;

  bool operator==(const DatasetManifest&) const = default;
};

inline constexpr std::string_view kManifestVersion = "ptk-manifest/1";

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Sentence-position split. Stage 1: training subjects -> train, held-out subjects -> val.
/// Stage 2: per training subject and emotion, the sorted available sentence indices
/// (pooled over intensities) are cut 80/10/10 by position, so complete data yields 32/4/4
/// neutral and 24/3/3 per emotion; held-out subjects are left unassigned.
DatasetManifest split_dataset(const DatasetManifest& manifest, int stage);

/// Train/val/test counts for `n` available sentences under the stage-2 rule.
struct SplitCounts {
  int train = 0;
  int val = 0;
  int test = 0;
};
SplitCounts sentence_split_counts(int n);

}  // namespace ptk::data
