#include "ptk/data/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "ptk/common/binary_io.hpp"
#include "ptk/common/error.hpp"

namespace ptk::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
    case Split::None:
      break;
  }
  return "none";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  if (s == "none") return Split::None;
  return std::nullopt;
}

std::vector<std::string> DatasetManifest::training_subjects() const {
  std::vector<std::string> out;
  for (const auto& s : subjects) {
    if (s.role == SubjectRole::Train) out.push_back(s.name);
  }
  return out;
}

bool DatasetManifest::is_training_subject(const std::string& name) const {
  return std::any_of(subjects.begin(), subjects.end(),
                     [&](const SubjectInfo& s) { return s.name == name && s.role == SubjectRole::Train; });
}

StyleCondition DatasetManifest::style_of(const ManifestEntry& entry) const {
  const auto train = training_subjects();
  auto it = std::find(train.begin(), train.end(), entry.subject);
  if (it == train.end()) throw ValueError("subject " + entry.subject + " is not a training subject");
  const auto emo = emotion_index(entry.emotion);
  const auto inten = intensity_index(entry.intensity);
  if (!emo || !inten) throw ValueError("entry " + entry.id + " has unknown style labels");
  return {static_cast<int>(it - train.begin()), *emo, *inten};
}

std::vector<const ManifestEntry*> DatasetManifest::with_split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

void DatasetManifest::validate(bool check_files) const {
  std::set<std::string> names;
  for (const auto& s : subjects) {
    if (!names.insert(s.name).second) throw ValueError("duplicate subject " + s.name);
  }
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (e.id.empty()) throw ValueError("malformed entry: empty id");
    if (!ids.insert(e.id).second) throw ValueError("malformed entry: duplicate id " + e.id);
    if (!names.count(e.subject)) throw ValueError("malformed entry " + e.id + ": unregistered subject " + e.subject);
    if (!emotion_index(e.emotion)) throw ValueError("malformed entry " + e.id + ": unknown emotion '" + e.emotion + "'");
    if (e.emotion == kEmotions[0]) {
      if (e.intensity != kNoIntensity) throw ValueError("malformed entry " + e.id + ": neutral requires intensity \"none\"");
    } else if (e.intensity == kNoIntensity || !intensity_index(e.intensity)) {
      throw ValueError("malformed entry " + e.id + ": bad intensity '" + e.intensity + "'");
    }
    if (e.sentence < 0) throw ValueError("malformed entry " + e.id + ": missing sentence index");
    if (check_files) {
      if (!fs::exists(e.motion)) throw FormatError("dangling path: " + e.motion.string() + " (entry " + e.id + ")");
      if (!fs::exists(e.audio)) throw FormatError("dangling path: " + e.audio.string() + " (entry " + e.id + ")");
    }
  }
}

namespace {

std::string role_name(SubjectRole r) { return r == SubjectRole::Train ? "train" : "heldout"; }

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw FormatError("malformed entry " + where + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError("malformed entry " + where + ": bad type for \"" + key + "\"");
  }
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw FormatError("manifest not found: " + path.string());
  const std::vector<char> bytes = io::read_file(path);
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  if (doc.value("version", "") != kManifestVersion) {
    throw FormatError("manifest " + path.string() + ": expected version \"" + std::string(kManifestVersion) + "\"");
  }
  const fs::path base = fs::absolute(path).parent_path();
  DatasetManifest m;
  m.split_stage = doc.value("split_stage", 0);
  for (const auto& s : doc.value("subjects", json::array())) {
    const std::string role = field<std::string>(s, "role", "subjects");
    if (role != "train" && role != "heldout") throw FormatError("malformed subject role '" + role + "'");
    m.subjects.push_back({field<std::string>(s, "name", "subjects"), role == "train" ? SubjectRole::Train : SubjectRole::Heldout});
  }
  for (const auto& e : doc.value("entries", json::array())) {
    ManifestEntry entry;
    entry.id = field<std::string>(e, "id", "?");
    entry.subject = field<std::string>(e, "subject", entry.id);
    entry.emotion = field<std::string>(e, "emotion", entry.id);
    entry.intensity = field<std::string>(e, "intensity", entry.id);
    entry.motion = (base / field<std::string>(e, "motion", entry.id)).lexically_normal();
    entry.audio = (base / field<std::string>(e, "audio", entry.id)).lexically_normal();
    if (!e.contains("sentence")) throw ValueError("malformed entry " + entry.id + ": missing sentence index");
    entry.sentence = field<int>(e, "sentence", entry.id);
    const auto split = parse_split(e.value("split", "none"));
    if (!split) throw FormatError("malformed entry " + entry.id + ": unknown split");
    entry.split = *split;
    m.entries.push_back(std::move(entry));
  }
  // Older manifests without a subject table: every referenced subject trains.
  if (m.subjects.empty()) {
    std::set<std::string> seen;
    for (const auto& e : m.entries) seen.insert(e.subject);
    for (const auto& s : seen) m.subjects.push_back({s, SubjectRole::Train});
  }
  m.validate(true);
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  json doc;
  doc["version"] = kManifestVersion;
  doc["split_stage"] = manifest.split_stage;
  doc["subjects"] = json::array();
  for (const auto& s : manifest.subjects) doc["subjects"].push_back({{"name", s.name}, {"role", role_name(s.role)}});
  doc["entries"] = json::array();
  for (const auto& e : manifest.entries) {
    doc["entries"].push_back({{"id", e.id},
                              {"subject", e.subject},
                              {"emotion", e.emotion},
                              {"intensity", e.intensity},
                              {"motion", fs::absolute(e.motion).lexically_relative(base).generic_string()},
                              {"audio", fs::absolute(e.audio).lexically_relative(base).generic_string()},
                              {"sentence", e.sentence},
                              {"split", to_string(e.split)}});
  }
  io::write_file(path, doc.dump(1));
}

SplitCounts sentence_split_counts(int n) {
  if (n <= 0) return {};
  if (n == 1) return {1, 0, 0};
  if (n == 2) return {1, 1, 0};
  const int hold = std::max(1, n / 10);
  return {n - 2 * hold, hold, hold};
}

DatasetManifest split_dataset(const DatasetManifest& manifest, int stage) {
  if (stage != 1 && stage != 2) throw ValueError("split stage must be 1 or 2");
  manifest.validate(false);
  DatasetManifest out = manifest;
  out.split_stage = stage;

  if (stage == 1) {
    for (auto& e : out.entries) e.split = out.is_training_subject(e.subject) ? Split::Train : Split::Val;
    return out;
  }

  // (subject, emotion) -> sorted distinct sentence indices.
  std::map<std::pair<std::string, std::string>, std::vector<int>> groups;
  for (const auto& e : out.entries) {
    if (out.is_training_subject(e.subject)) groups[{e.subject, e.emotion}].push_back(e.sentence);
  }
  std::map<std::pair<std::string, std::string>, std::map<int, Split>> assignment;
  for (auto& [key, sentences] : groups) {
    std::sort(sentences.begin(), sentences.end());
    sentences.erase(std::unique(sentences.begin(), sentences.end()), sentences.end());
    const SplitCounts c = sentence_split_counts(static_cast<int>(sentences.size()));
    auto& dest = assignment[key];
    for (int pos = 0; pos < static_cast<int>(sentences.size()); ++pos) {
      dest[sentences[pos]] = pos < c.train ? Split::Train : pos < c.train + c.val ? Split::Val : Split::Test;
    }
  }
  for (auto& e : out.entries) {
    e.split = out.is_training_subject(e.subject) ? assignment.at({e.subject, e.emotion}).at(e.sentence) : Split::None;
  }
  return out;
}

}  // namespace ptk::data
