#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ptk/data/motion.hpp"
#include "ptk/nn/tensor.hpp"

namespace ptk::face {

using nn::Index;
using nn::Matrix;

/// Per-frame vertex positions: F matrices of N x 3 stored as one F x 3N matrix (x0 y0 z0 x1 ...).
using VertexTrack = Matrix;

/// Linear face model: vertices = template + sum_k psi_k * expr_basis[k] + sum_j jaw_j * jaw_basis[j].
/// The three jaw angles act as linearized blendshape directions.
class FaceModel {
 public:
  FaceModel() = default;
  /// `basis` holds one flattened 1 x 3N row per parameter: rows 0..49 expression, 50..52 jaw.
  FaceModel(Matrix template_vertices, Matrix basis, std::vector<Index> lip_mask, std::vector<Index> upper_mask);

  Index num_vertices() const { return template_.rows(); }
  const Matrix& template_vertices() const { return template_; }  // N x 3
  const Matrix& basis() const { return basis_; }                  // 53 x 3N
  const std::vector<Index>& lip_mask() const { return lip_mask_; }
  const std::vector<Index>& upper_mask() const { return upper_mask_; }

  /// Throws ShapeError/ValueError when shapes disagree, a mask index is out of range or
  /// repeated, or a value is non-finite.
  void validate() const;

  /// F x 53 parameters -> F x 3N vertex track.
  VertexTrack params_to_vertices(const Matrix& params) const;
  VertexTrack params_to_vertices(const data::MotionSequence& seq) const { return params_to_vertices(seq.frames); }
  /// Same track minus the template in every frame.
  VertexTrack params_to_displacements(const Matrix& params) const;

  bool operator==(const FaceModel&) const = default;

 private:
  Matrix template_;
  Matrix template_row_;
  Matrix basis_;
  std::vector<Index> lip_mask_;
  std::vector<Index> upper_mask_;
};

/// Deterministic toy head: an ellipsoid-like point cloud with smooth random bases.
/// The lip mask is the lowest-z band, the upper mask the highest-z band.
FaceModel make_toy_facemodel(std::uint64_t seed, Index num_vertices);

/// Container:
///   magic "PTFM", uint32 LE header length L, L bytes JSON
///     { "format": "ptk-facemodel/1", "num_vertices": N, "num_params": 53,
///       "lip_mask": [...], "upper_mask": [...],
///       "template": { "offset": 0, "count": 3N },
///       "basis":    { "offset": 12N, "count": 53*3N } }
///   then little-endian float32 blobs at the given byte offsets (relative to the blob start),
///   template as N rows of (x, y, z), basis as 53 rows of 3N.
void save_facemodel(const FaceModel& model, const std::filesystem::path& path);
FaceModel load_facemodel(const std::filesystem::path& path);

}  // namespace ptk::face
