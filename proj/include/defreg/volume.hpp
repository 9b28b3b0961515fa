#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "defreg/common.hpp"
#include "defreg/tetmesh.hpp"

namespace defreg {

// Regular grid placement. `origin` is the world position (mm) of the center
// of voxel (0,0,0); voxel centers are the sampling sites.
struct Geometry {
  Index3 dims{0, 0, 0};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims[0] && j < dims[1] && k < dims[2];
  }
  Vec3 world(double i, double j, double k) const {
    return origin + Vec3(i * spacing.x(), j * spacing.y(), k * spacing.z());
  }
  Vec3 continuous_index(const Vec3& p) const { return (p - origin).cwiseQuotient(spacing); }

  // Throws std::invalid_argument unless dims and spacing are positive.
  void validate() const;
};

bool operator==(const Geometry& a, const Geometry& b);
inline bool operator!=(const Geometry& a, const Geometry& b) { return !(a == b); }

template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(const Geometry& geom, const T& fill = T{}) : geom_(geom) {
    geom_.validate();
    data_.assign(geom_.voxel_count(), fill);
  }

  const Geometry& geometry() const { return geom_; }
  const Index3& dims() const { return geom_.dims; }
  std::size_t size() const { return data_.size(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(int i, int j, int k) { return data_[geom_.index(i, j, k)]; }
  const T& at(int i, int j, int k) const { return data_[geom_.index(i, j, k)]; }

  std::span<T> voxels() { return data_; }
  std::span<const T> voxels() const { return data_; }

 private:
  Geometry geom_;
  std::vector<T> data_;
};

using ScalarVolume = Grid<float>;
using LabelVolume = Grid<std::uint16_t>;
using DenseDeformation = Grid<Vec3f>;

enum class Interp { linear, nearest };

// Trilinear sample at a continuous voxel index; corners outside the grid read 0.
double sample_linear(const ScalarVolume& v, const Vec3& idx);
Vec3 sample_linear(const DenseDeformation& d, const Vec3& idx);
double sample_nearest(const ScalarVolume& v, const Vec3& idx);
std::uint16_t sample_nearest(const LabelVolume& v, const Vec3& idx);

// Backward warp: out(x) = v(x - d(x)).
ScalarVolume warp_volume(const ScalarVolume& v, const DenseDeformation& d,
                         Interp interp = Interp::linear);
LabelVolume warp_labels(const LabelVolume& v, const DenseDeformation& d);

// Pullback composition for backward warps: total(x) = next(x) + prev(x - next(x)),
// so warp(warp(v, prev), next) == warp(v, total) up to interpolation.
DenseDeformation compose(const DenseDeformation& next, const DenseDeformation& prev);

// Barycentric interpolation of vertex displacements U (3 per vertex) at every
// voxel center inside the mesh; zero elsewhere.
DenseDeformation mesh_to_dense(const TetMesh& mesh, std::span<const double> U,
                               const Geometry& geom);

// Voxels whose centers fall in a non-removed tet carry that tet's label.
LabelVolume rasterize_mesh(const TetMesh& mesh, const Geometry& geom);

double max_norm(const DenseDeformation& d);

}  // namespace defreg
