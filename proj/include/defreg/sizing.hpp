#pragma once

#include <span>
#include <vector>

#include "defreg/tetmesh.hpp"

namespace defreg {

// Per-vertex target size: either an isotropic spacing h (metric I/h^2) or an
// SPD tensor.
struct SizingField {
  std::vector<double> spacing;
  std::vector<Mat3> metric;

  bool is_tensor() const { return !metric.empty(); }
  std::size_t size() const { return is_tensor() ? metric.size() : spacing.size(); }
  Mat3 metric_at(std::size_t v) const {
    return is_tensor() ? metric[v] : Mat3(Mat3::Identity() / (spacing[v] * spacing[v]));
  }
};

// h(v) = distance from vertex v to its k-th nearest registration point.
// Throws std::invalid_argument unless 1 <= k <= points.size().
SizingField isotropic_sizing(const TetMesh& mesh, std::span<const Vec3> points, int k);

struct EllipsoidOptions {
  double eps = 1e-3;
  int max_iterations = 10000;
  double floor_ratio = 0.1;  // smallest semi-axis as a fraction of the largest
};

struct Ellipsoid {
  Mat3 metric;          // (p - center)^T metric (p - center) <= 1 + eps inside
  Vec3 center;
  int iterations = 0;
  int rank = 0;         // dimension spanned by the input before flooring
  bool converged = true;
};

// Minimum-volume ellipsoid centered at `center` enclosing `points` and their
// reflections through `center`. Directions the points do not span, and any
// semi-axis shorter than floor_ratio times the longest, are widened to that
// floor. Throws DegenerateError when every point coincides with the center.
Ellipsoid min_enclosing_ellipsoid(std::span<const Vec3> points, const Vec3& center,
                                  const EllipsoidOptions& opt = {});

// Per vertex: k nearest registration points, reflected ellipsoid, inflated
// by `inflation` (metric scaled by 1/inflation^2).
SizingField metric_field(const TetMesh& mesh, std::span<const Vec3> points, int k, double inflation,
                         const EllipsoidOptions& opt = {});

// Number of registration points falling in the elements incident to each
// vertex (its cell complex).
std::vector<int> points_per_vertex_cell(const TetMesh& mesh, std::span<const Vec3> points);

// Mean of points_per_vertex_cell over vertices used by non-removed tets.
double mean_points_per_vertex_cell(const TetMesh& mesh, std::span<const Vec3> points);

}  // namespace defreg
