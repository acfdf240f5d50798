#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptk/data/manifest.hpp"
#include "ptk/face/face_model.hpp"

namespace ptk::metrics {

using nn::Index;
using nn::Matrix;
/// F x 3N, one flattened frame per row (see face::VertexTrack).
using Track = Matrix;
using Mask = std::vector<Index>;

/// Mean over frames of the Euclidean norm of the flattened frame difference.
double mve(const Track& gt, const Track& pred);

/// Mean over frames of the largest per-vertex L2 error among `lip_mask` vertices.
double lve(const Track& gt, const Track& pred, const Mask& lip_mask);

/// Per-vertex dynamics: population standard deviation over frames of the vertex's L2 norm.
Eigen::VectorXd vertex_dynamics(const Track& track, const Mask& vertices);

/// Mean over `upper_mask` vertices of dyn(gt) - dyn(pred). Needs F >= 2.
double fdd(const Track& gt, const Track& pred, const Mask& upper_mask);

/// Frame-wise mean of the samples (all with equal shape).
Track sample_mean(const std::vector<Track>& samples);

/// LVE between the ground truth and the sample mean.
double mee(const Track& gt, const std::vector<Track>& samples, const Mask& lip_mask);

/// Smallest LVE over the samples.
double ce(const Track& gt, const std::vector<Track>& samples, const Mask& lip_mask);

/// (1 / (A*B)) * sum_i sum_j ||S1_ij - S2_ij|| with S1 = perm[0, B) and S2 = perm[B, 2B) of set i.
/// Every set needs at least 2B samples.
double diversity(const std::vector<std::vector<Track>>& sets, const std::vector<std::vector<std::size_t>>& perms,
                 int B = 5);

struct DiversityResult {
  double value = 0.0;
  std::vector<std::vector<std::size_t>> permutations;
};
/// Same with one seeded random permutation per set (portable Fisher-Yates on 53-bit uniforms).
DiversityResult diversity(const std::vector<std::vector<Track>>& sets, std::uint64_t seed, int B = 5);

std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng);

struct Heatmap {
  Eigen::VectorXd mean;  // N
  Eigen::VectorXd std;   // N, population
};
/// Per vertex, mean and std of the F-1 adjacent-frame displacement norms. Needs F >= 2.
Heatmap dynamics_heatmap(const Track& track);
/// CSV with header "vertex_index,mean,std".
void write_heatmap_csv(const Heatmap& heatmap, const std::filesystem::path& path);

struct SequenceScores {
  std::string id;
  Index frames = 0;
  double mve = 0.0;
  double lve = 0.0;
  double fdd = 0.0;
  double mee = 0.0;
  double ce = 0.0;

  bool operator==(const SequenceScores&) const = default;
};

/// Summary over the test set. Diversity is absent for single-sample runs.
struct MetricReport {
  double mve = 0.0;
  double lve = 0.0;
  double fdd = 0.0;
  double mee = 0.0;
  double ce = 0.0;
  std::optional<double> diversity;
  int n_samples = 0;
  int diversity_subset = 5;
  std::uint64_t diversity_seed = 0;
  std::map<std::string, std::vector<std::size_t>> diversity_permutations;
  std::vector<SequenceScores> sequences;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
  bool operator==(const MetricReport&) const = default;
};

/// Divisors used for the scaled columns (value reported as raw / scale).
inline constexpr double kScaleMve = 1e-3;
inline constexpr double kScaleLve = 1e-4;
inline constexpr double kScaleFdd = 1e-5;
inline constexpr double kScaleMee = 1e-4;
inline constexpr double kScaleCe = 1e-4;
inline constexpr double kScaleDiversity = 1e-3;

struct EvalOptions {
  /// Expected samples per test entry: files <pred>/<id>/sample_00.ptm ... sample_{n-1}.ptm.
  int n_samples = 10;
  int diversity_subset = 5;
  std::uint64_t seed = 0;
};

/// Scores every test entry of `manifest` against its generated samples.
/// MVE, LVE and FDD use sample 0; MEE and CE use all samples. MVE and LVE are pooled over all
/// frames of the test set, the others average per-sequence values. All metrics run on
/// template-relative displacements. Throws FormatError on a missing sample file.
MetricReport evaluate(const std::filesystem::path& pred_dir, const data::DatasetManifest& manifest,
                      const face::FaceModel& face, const EvalOptions& options);

/// Same scoring on in-memory tracks: gts[i] against samples[i].
MetricReport evaluate_tracks(const std::vector<std::string>& ids, const std::vector<Track>& gts,
                             const std::vector<std::vector<Track>>& samples, const face::FaceModel& face,
                             const EvalOptions& options);

}  // namespace ptk::metrics
