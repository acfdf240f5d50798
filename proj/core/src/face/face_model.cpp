#include "ptk/face/face_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptk/common/binary_io.hpp"
#include "ptk/common/error.hpp"

namespace ptk::face {

using data::kMotionDims;

FaceModel::FaceModel(Matrix template_vertices, Matrix basis, std::vector<Index> lip_mask,
                     std::vector<Index> upper_mask)
    : template_(std::move(template_vertices)),
      basis_(std::move(basis)),
      lip_mask_(std::move(lip_mask)),
      upper_mask_(std::move(upper_mask)) {
  validate();
  template_row_ = Eigen::Map<const Matrix>(template_.data(), 1, template_.size());
}

void FaceModel::validate() const {
  const Index n = template_.rows();
  if (n < 1 || template_.cols() != 3) throw ShapeError("face model template must be N x 3");
  if (basis_.rows() != kMotionDims || basis_.cols() != 3 * n) {
    throw ShapeError("face model basis must be 53 x 3N (N = " + std::to_string(n) + ")");
  }
  if (!template_.allFinite() || !basis_.allFinite()) throw ValueError("face model contains non-finite values");
  for (const auto* mask : {&lip_mask_, &upper_mask_}) {
    std::set<Index> seen;
    for (Index v : *mask) {
      if (v < 0 || v >= n) throw ValueError("mask index " + std::to_string(v) + " out of range");
      if (!seen.insert(v).second) throw ValueError("mask index " + std::to_string(v) + " repeated");
    }
  }
}

VertexTrack FaceModel::params_to_vertices(const Matrix& params) const {
  VertexTrack v = params_to_displacements(params);
  v.rowwise() += template_row_.row(0);
  return v;
}

VertexTrack FaceModel::params_to_displacements(const Matrix& params) const {
  if (params.cols() != kMotionDims) {
    throw ShapeError("params_to_vertices: shape mismatch, expected 53 parameters per frame, got " +
                     std::to_string(params.cols()));
  }
  return params * basis_;
}

FaceModel make_toy_facemodel(std::uint64_t seed, Index num_vertices) {
  if (num_vertices < 16) throw ValueError("toy face model needs at least 16 vertices");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Points on a head-sized ellipsoid (meters), z = up.
  Matrix tmpl(num_vertices, 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (Index i = 0; i < num_vertices; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(num_vertices);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    tmpl(i, 0) = 0.075 * r * std::cos(phi);
    tmpl(i, 1) = 0.09 * r * std::sin(phi);
    tmpl(i, 2) = 0.11 * z;
  }

  // Each basis direction is a smooth field: random 3-vector times a Gaussian bump around a
  // random anchor, scaled to millimetre-level displacement per unit parameter.
  Matrix basis = Matrix::Zero(kMotionDims, 3 * num_vertices);
  for (Index k = 0; k < kMotionDims; ++k) {
    const Index anchor = static_cast<Index>((unit(rng) * 0.5 + 0.5) * static_cast<double>(num_vertices - 1));
    const double width = 0.03 + 0.03 * (unit(rng) * 0.5 + 0.5);
    const double dir[3] = {unit(rng), unit(rng), unit(rng)};
    const double gain = 0.004 / (1.0 + 0.1 * static_cast<double>(k % data::kExpressionDims));
    for (Index v = 0; v < num_vertices; ++v) {
      const double d2 = (tmpl.row(v) - tmpl.row(anchor)).squaredNorm();
      const double w = gain * std::exp(-0.5 * d2 / (width * width));
      for (int c = 0; c < 3; ++c) basis(k, 3 * v + c) = w * dir[c];
    }
  }

  // Masks: the lowest and highest z bands, each a fifth of the vertices.
  std::vector<Index> order(static_cast<std::size_t>(num_vertices));
  for (Index i = 0; i < num_vertices; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return tmpl(a, 2) < tmpl(b, 2); });
  const auto band = static_cast<std::size_t>(std::max<Index>(3, num_vertices / 5));
  std::vector<Index> lip(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(band));
  std::vector<Index> upper(order.end() - static_cast<std::ptrdiff_t>(band), order.end());
  std::sort(lip.begin(), lip.end());
  std::sort(upper.begin(), upper.end());
  return FaceModel(std::move(tmpl), std::move(basis), std::move(lip), std::move(upper));
}

namespace {
constexpr std::string_view kMagic = "PTFM";
constexpr std::string_view kFormat = "ptk-facemodel/1";
}  // namespace

void save_facemodel(const FaceModel& model, const std::filesystem::path& path) {
  const Index n = model.num_vertices();
  const std::uint64_t tmpl_count = static_cast<std::uint64_t>(3 * n);
  const std::uint64_t basis_count = static_cast<std::uint64_t>(kMotionDims * 3 * n);
  const nlohmann::json header = {
      {"format", kFormat},
      {"num_vertices", n},
      {"num_params", kMotionDims},
      {"lip_mask", model.lip_mask()},
      {"upper_mask", model.upper_mask()},
      {"template", {{"offset", 0}, {"count", tmpl_count}}},
      {"basis", {{"offset", tmpl_count * sizeof(float)}, {"count", basis_count}}}};
  const std::string text = header.dump();
  std::ostringstream out(std::ios::binary);
  io::write_magic(out, kMagic);
  io::write_pod(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  const Matrix& t = model.template_vertices();
  for (Index i = 0; i < t.size(); ++i) io::write_pod(out, static_cast<float>(t.data()[i]));
  const Matrix& b = model.basis();
  for (Index i = 0; i < b.size(); ++i) io::write_pod(out, static_cast<float>(b.data()[i]));
  io::write_file(path, out.str());
}

FaceModel load_facemodel(const std::filesystem::path& path) {
  const std::vector<char> bytes = io::read_file(path);
  if (bytes.size() < 8 || std::string_view(bytes.data(), 4) != kMagic) {
    throw FormatError("bad magic in face model " + path.string());
  }
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 4, 4);
  if (8 + static_cast<std::size_t>(len) > bytes.size()) throw FormatError("truncated face model header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed face model header: ") + e.what());
  }
  if (header.value("format", "") != kFormat) throw FormatError("unknown face model format in " + path.string());
  const Index n = header.at("num_vertices");
  if (header.value("num_params", 0) != kMotionDims) throw ShapeError("face model must have 53 parameters");
  const std::size_t blob = 8 + len;
  auto read_block = [&](const nlohmann::json& desc, Index rows, Index cols) {
    const std::uint64_t off = desc.at("offset");
    const std::uint64_t count = desc.at("count");
    if (count != static_cast<std::uint64_t>(rows * cols)) throw ShapeError("face model block count mismatch");
    if (blob + off + count * sizeof(float) > bytes.size()) throw FormatError("face model blob truncated");
    Matrix m(rows, cols);
    for (std::uint64_t i = 0; i < count; ++i) {
      float v;
      std::memcpy(&v, bytes.data() + blob + off + i * sizeof(float), sizeof(float));
      m.data()[i] = v;
    }
    return m;
  };
  Matrix tmpl = read_block(header.at("template"), n, 3);
  Matrix basis = read_block(header.at("basis"), kMotionDims, 3 * n);
  return FaceModel(std::move(tmpl), std::move(basis), header.at("lip_mask").get<std::vector<Index>>(),
                   header.at("upper_mask").get<std::vector<Index>>());
}

}  // namespace ptk::face
