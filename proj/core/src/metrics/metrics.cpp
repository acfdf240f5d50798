#include "ptk/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "ptk/common/error.hpp"
#include "ptk/data/motion.hpp"
#include "ptk/prior/codebook.hpp"

namespace ptk::metrics {

using nlohmann::json;

namespace {

void check_pair(const Track& gt, const Track& pred, const char* what) {
  if (gt.rows() != pred.rows() || gt.cols() != pred.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(gt.rows()) + "x" +
                     std::to_string(gt.cols()) + " vs " + std::to_string(pred.rows()) + "x" +
                     std::to_string(pred.cols()) + ")");
  }
  if (gt.rows() < 1) throw ShapeError(std::string(what) + ": empty sequence");
  if (gt.cols() % 3 != 0) throw ShapeError(std::string(what) + ": track width is not a multiple of 3");
}

void check_mask(const Mask& mask, const Track& t, const char* what) {
  if (mask.empty()) throw ValueError(std::string(what) + ": empty vertex mask");
  const Index n = t.cols() / 3;
  for (Index v : mask) {
    if (v < 0 || v >= n) throw ShapeError(std::string(what) + ": mask index " + std::to_string(v) + " out of range");
  }
}

double vertex_distance(const Track& a, const Track& b, Index f, Index v) {
  return (a.block(f, 3 * v, 1, 3) - b.block(f, 3 * v, 1, 3)).norm();
}

void check_samples(const std::vector<Track>& samples, const char* what) {
  if (samples.empty()) throw ValueError(std::string(what) + ": empty sample set");
  for (const auto& s : samples) {
    if (s.rows() != samples.front().rows() || s.cols() != samples.front().cols()) {
      throw ShapeError(std::string(what) + ": samples differ in frame count or width");
    }
  }
}

double population_std(const Eigen::VectorXd& x) {
  const double m = x.mean();
  return std::sqrt((x.array() - m).square().mean());
}

}  // namespace

double mve(const Track& gt, const Track& pred) {
  check_pair(gt, pred, "mve");
  return (gt - pred).rowwise().norm().mean();
}

double lve(const Track& gt, const Track& pred, const Mask& lip_mask) {
  check_pair(gt, pred, "lve");
  check_mask(lip_mask, gt, "lve");
  double total = 0.0;
  for (Index f = 0; f < gt.rows(); ++f) {
    double worst = 0.0;
    for (Index v : lip_mask) worst = std::max(worst, vertex_distance(gt, pred, f, v));
    total += worst;
  }
  return total / static_cast<double>(gt.rows());
}

Eigen::VectorXd vertex_dynamics(const Track& track, const Mask& vertices) {
  Eigen::VectorXd out(static_cast<Index>(vertices.size()));
  Eigen::VectorXd norms(track.rows());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (Index f = 0; f < track.rows(); ++f) norms(f) = track.block(f, 3 * vertices[i], 1, 3).norm();
    out(static_cast<Index>(i)) = population_std(norms);
  }
  return out;
}

double fdd(const Track& gt, const Track& pred, const Mask& upper_mask) {
  check_pair(gt, pred, "fdd");
  check_mask(upper_mask, gt, "fdd");
  if (gt.rows() < 2) throw ShapeError("fdd: needs at least 2 frames");
  return (vertex_dynamics(gt, upper_mask) - vertex_dynamics(pred, upper_mask)).mean();
}

Track sample_mean(const std::vector<Track>& samples) {
  check_samples(samples, "sample_mean");
  Track acc = Track::Zero(samples.front().rows(), samples.front().cols());
  for (const auto& s : samples) acc += s;
  return acc / static_cast<double>(samples.size());
}

double mee(const Track& gt, const std::vector<Track>& samples, const Mask& lip_mask) {
  check_samples(samples, "mee");
  return lve(gt, sample_mean(samples), lip_mask);
}

double ce(const Track& gt, const std::vector<Track>& samples, const Mask& lip_mask) {
  check_samples(samples, "ce");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) best = std::min(best, lve(gt, s, lip_mask));
  return best;
}

double diversity(const std::vector<std::vector<Track>>& sets, const std::vector<std::vector<std::size_t>>& perms,
                 int B) {
  if (B < 1) throw ValueError("diversity: subset size must be >= 1");
  if (sets.empty()) throw ValueError("diversity: no sample sets");
  if (perms.size() != sets.size()) throw ValueError("diversity: one permutation per sample set is required");
  const auto b = static_cast<std::size_t>(B);
  double total = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& set = sets[i];
    if (set.size() < 2 * b) {
      throw ValueError("diversity: set " + std::to_string(i) + " has " + std::to_string(set.size()) +
                       " samples, needs at least " + std::to_string(2 * b));
    }
    check_samples(set, "diversity");
    const auto& p = perms[i];
    if (p.size() < 2 * b) throw ValueError("diversity: permutation shorter than 2B");
    for (std::size_t j = 0; j < b; ++j) {
      const std::size_t s1 = p[j], s2 = p[b + j];
      if (s1 >= set.size() || s2 >= set.size()) throw ValueError("diversity: permutation index out of range");
      total += (set[s1] - set[s2]).norm();
    }
  }
  return total / (static_cast<double>(sets.size()) * static_cast<double>(B));
}

std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(prior::unit_uniform(rng) * static_cast<double>(i));
    std::swap(p[i - 1], p[std::min(j, i - 1)]);
  }
  return p;
}

DiversityResult diversity(const std::vector<std::vector<Track>>& sets, std::uint64_t seed, int B) {
  std::mt19937_64 rng(seed);
  DiversityResult r;
  for (const auto& s : sets) r.permutations.push_back(random_permutation(s.size(), rng));
  r.value = diversity(sets, r.permutations, B);
  return r;
}

Heatmap dynamics_heatmap(const Track& track) {
  if (track.rows() < 2) throw ShapeError("dynamics_heatmap: needs at least 2 frames");
  if (track.cols() % 3 != 0) throw ShapeError("dynamics_heatmap: track width is not a multiple of 3");
  const Index n = track.cols() / 3;
  Heatmap h{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  Eigen::VectorXd steps(track.rows() - 1);
  for (Index v = 0; v < n; ++v) {
    for (Index f = 0; f + 1 < track.rows(); ++f) {
      steps(f) = (track.block(f + 1, 3 * v, 1, 3) - track.block(f, 3 * v, 1, 3)).norm();
    }
    h.mean(v) = steps.mean();
    h.std(v) = population_std(steps);
  }
  return h;
}

void write_heatmap_csv(const Heatmap& h, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(17);
  out << "vertex_index,mean,std\n";
  for (Index v = 0; v < h.mean.size(); ++v) out << v << ',' << h.mean(v) << ',' << h.std(v) << '\n';
  if (!out) throw FormatError("write failed: " + path.string());
}

json MetricReport::to_json() const {
  json raw = {{"mve", mve}, {"lve", lve}, {"fdd", fdd}, {"mee", mee}, {"ce", ce}};
  json scaled = {{"mve", mve / kScaleMve},
                 {"lve", lve / kScaleLve},
                 {"fdd", fdd / kScaleFdd},
                 {"mee", mee / kScaleMee},
                 {"ce", ce / kScaleCe}};
  raw["diversity"] = diversity ? json(*diversity) : json("N/A");
  scaled["diversity"] = diversity ? json(*diversity / kScaleDiversity) : json("N/A");
  json seqs = json::array();
  for (const auto& s : sequences) {
    seqs.push_back({{"id", s.id}, {"frames", s.frames}, {"mve", s.mve}, {"lve", s.lve},
                    {"fdd", s.fdd}, {"mee", s.mee}, {"ce", s.ce}});
  }
  return {{"format", "ptk-metrics/1"},
          {"raw", raw},
          {"scaled", scaled},
          {"scale_divisors",
           {{"mve", kScaleMve}, {"lve", kScaleLve}, {"fdd", kScaleFdd}, {"mee", kScaleMee}, {"ce", kScaleCe},
            {"diversity", kScaleDiversity}}},
          {"n_sequences", sequences.size()},
          {"n_samples", n_samples},
          {"diversity_split",
           {{"subset_size", diversity_subset}, {"seed", diversity_seed}, {"permutations", diversity_permutations}}},
          {"sequences", seqs}};
}

MetricReport MetricReport::from_json(const json& j) {
  try {
    MetricReport r;
    const json& raw = j.at("raw");
    r.mve = raw.at("mve").get<double>();
    r.lve = raw.at("lve").get<double>();
    r.fdd = raw.at("fdd").get<double>();
    r.mee = raw.at("mee").get<double>();
    r.ce = raw.at("ce").get<double>();
    if (raw.at("diversity").is_number()) r.diversity = raw.at("diversity").get<double>();
    r.n_samples = j.at("n_samples").get<int>();
    const json& split = j.at("diversity_split");
    r.diversity_subset = split.at("subset_size").get<int>();
    r.diversity_seed = split.at("seed").get<std::uint64_t>();
    r.diversity_permutations = split.at("permutations").get<std::map<std::string, std::vector<std::size_t>>>();
    for (const auto& s : j.at("sequences")) {
      r.sequences.push_back({s.at("id").get<std::string>(), s.at("frames").get<Index>(), s.at("mve").get<double>(),
                             s.at("lve").get<double>(), s.at("fdd").get<double>(), s.at("mee").get<double>(),
                             s.at("ce").get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed metric report: ") + e.what());
  }
}

MetricReport evaluate_tracks(const std::vector<std::string>& ids, const std::vector<Track>& gts,
                             const std::vector<std::vector<Track>>& samples, const face::FaceModel& face,
                             const EvalOptions& options) {
  if (gts.empty()) throw ValueError("evaluate: no test sequences");
  if (ids.size() != gts.size() || samples.size() != gts.size()) throw ValueError("evaluate: input sizes differ");
  if (options.n_samples < 1) throw ValueError("evaluate: n_samples must be >= 1");

  MetricReport r;
  r.n_samples = options.n_samples;
  r.diversity_subset = options.diversity_subset;
  r.diversity_seed = options.seed;
  double mve_sum = 0.0, lve_sum = 0.0;
  Index frames = 0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const auto& set = samples[i];
    if (static_cast<int>(set.size()) != options.n_samples) {
      throw ValueError("evaluate: " + ids[i] + " has " + std::to_string(set.size()) + " samples, expected " +
                       std::to_string(options.n_samples));
    }
    SequenceScores s;
    s.id = ids[i];
    s.frames = gts[i].rows();
    s.mve = mve(gts[i], set.front());
    s.lve = lve(gts[i], set.front(), face.lip_mask());
    s.fdd = fdd(gts[i], set.front(), face.upper_mask());
    s.mee = mee(gts[i], set, face.lip_mask());
    s.ce = ce(gts[i], set, face.lip_mask());
    mve_sum += s.mve * static_cast<double>(s.frames);
    lve_sum += s.lve * static_cast<double>(s.frames);
    frames += s.frames;
    r.fdd += s.fdd;
    r.mee += s.mee;
    r.ce += s.ce;
    r.sequences.push_back(s);
  }
  const double n = static_cast<double>(gts.size());
  r.mve = mve_sum / static_cast<double>(frames);
  r.lve = lve_sum / static_cast<double>(frames);
  r.fdd /= n;
  r.mee /= n;
  r.ce /= n;

  if (options.n_samples > 1) {
    const DiversityResult d = diversity(samples, options.seed, options.diversity_subset);
    r.diversity = d.value;
    for (std::size_t i = 0; i < ids.size(); ++i) r.diversity_permutations[ids[i]] = d.permutations[i];
  }
  return r;
}

MetricReport evaluate(const std::filesystem::path& pred_dir, const data::DatasetManifest& manifest,
                      const face::FaceModel& face, const EvalOptions& options) {
  const auto tests = manifest.with_split(data::Split::Test);
  if (tests.empty()) throw ValueError("evaluate: the manifest has no test entries");
  std::vector<std::string> ids;
  std::vector<Track> gts;
  std::vector<std::vector<Track>> sets;
  for (const auto* e : tests) {
    Matrix gt = data::read_motion(e->motion).frames;
    std::vector<Matrix> params;
    for (int k = 0; k < options.n_samples; ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%02d.ptm", k);
      const auto path = pred_dir / e->id / name;
      if (!std::filesystem::exists(path)) throw FormatError("missing sample file: " + path.string());
      params.push_back(data::read_motion(path).frames);
    }
    // Generated length comes from the audio duration and can differ from the capture by a frame.
    Index frames = gt.rows();
    for (const auto& p : params) frames = std::min(frames, p.rows());
    ids.push_back(e->id);
    gts.push_back(face.params_to_displacements(gt.topRows(frames)));
    std::vector<Track> set;
    for (const auto& p : params) set.push_back(face.params_to_displacements(p.topRows(frames)));
    sets.push_back(std::move(set));
  }
  return evaluate_tracks(ids, gts, sets, face, options);
}

}  // namespace ptk::metrics
