#include "defreg/volume.hpp"

#include <algorithm>
#include <cmath>

namespace defreg {

void Geometry::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] <= 0) throw std::invalid_argument("geometry: dims must be positive");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
      throw std::invalid_argument("geometry: spacing must be positive");
    if (!std::isfinite(origin[a])) throw std::invalid_argument("geometry: origin must be finite");
  }
}

bool operator==(const Geometry& a, const Geometry& b) {
  return a.dims == b.dims && a.spacing == b.spacing && a.origin == b.origin;
}

namespace {

template <class R, class Fetch>
R trilinear(const Index3& dims, const Vec3& idx, R acc, Fetch fetch) {
  const double fx = std::floor(idx.x()), fy = std::floor(idx.y()), fz = std::floor(idx.z());
  const int i0 = static_cast<int>(fx), j0 = static_cast<int>(fy), k0 = static_cast<int>(fz);
  const double tx = idx.x() - fx, ty = idx.y() - fy, tz = idx.z() - fz;
  for (int c = 0; c < 8; ++c) {
    const int i = i0 + (c & 1), j = j0 + ((c >> 1) & 1), k = k0 + ((c >> 2) & 1);
    const double w = ((c & 1) ? tx : 1.0 - tx) * (((c >> 1) & 1) ? ty : 1.0 - ty) *
                     (((c >> 2) & 1) ? tz : 1.0 - tz);
    if (w == 0.0) continue;
    if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2]) continue;
    acc += w * fetch((static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i);
  }
  return acc;
}

int round_index(double x) { return static_cast<int>(std::floor(x + 0.5)); }

}  // namespace

double sample_linear(const ScalarVolume& v, const Vec3& idx) {
  return trilinear(v.dims(), idx, 0.0, [&](std::size_t n) { return static_cast<double>(v[n]); });
}

Vec3 sample_linear(const DenseDeformation& d, const Vec3& idx) {
  return trilinear<Vec3>(d.dims(), idx, Vec3::Zero(), [&](std::size_t n) -> Vec3 { return d[n].cast<double>(); });
}

double sample_nearest(const ScalarVolume& v, const Vec3& idx) {
  const int i = round_index(idx.x()), j = round_index(idx.y()), k = round_index(idx.z());
  return v.geometry().in_bounds(i, j, k) ? static_cast<double>(v.at(i, j, k)) : 0.0;
}

std::uint16_t sample_nearest(const LabelVolume& v, const Vec3& idx) {
  const int i = round_index(idx.x()), j = round_index(idx.y()), k = round_index(idx.z());
  return v.geometry().in_bounds(i, j, k) ? v.at(i, j, k) : std::uint16_t{0};
}

ScalarVolume warp_volume(const ScalarVolume& v, const DenseDeformation& d, Interp interp) {
  if (v.geometry() != d.geometry()) throw std::invalid_argument("warp_volume: geometry mismatch");
  const Geometry& g = v.geometry();
  const Vec3 inv = g.spacing.cwiseInverse();
  ScalarVolume out(g);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t n = g.index(i, j, k);
        const Vec3 src = Vec3(i, j, k) - d[n].cast<double>().cwiseProduct(inv);
        out[n] = static_cast<float>(interp == Interp::linear ? sample_linear(v, src)
                                                             : sample_nearest(v, src));
      }
  return out;
}

LabelVolume warp_labels(const LabelVolume& v, const DenseDeformation& d) {
  if (v.geometry() != d.geometry()) throw std::invalid_argument("warp_labels: geometry mismatch");
  const Geometry& g = v.geometry();
  const Vec3 inv = g.spacing.cwiseInverse();
  LabelVolume out(g);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t n = g.index(i, j, k);
        out[n] = sample_nearest(v, Vec3(i, j, k) - d[n].cast<double>().cwiseProduct(inv));
      }
  return out;
}

DenseDeformation compose(const DenseDeformation& next, const DenseDeformation& prev) {
  if (next.geometry() != prev.geometry()) throw std::invalid_argument("compose: geometry mismatch");
  const Geometry& g = next.geometry();
  const Vec3 inv = g.spacing.cwiseInverse();
  DenseDeformation out(g);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t n = g.index(i, j, k);
        const Vec3 step = next[n].cast<double>();
        const Vec3 src = Vec3(i, j, k) - step.cwiseProduct(inv);
        out[n] = (step + sample_linear(prev, src)).cast<float>();
      }
  return out;
}

DenseDeformation mesh_to_dense(const TetMesh& mesh, std::span<const double> U, const Geometry& geom) {
  if (U.size() != 3 * mesh.vertex_count())
    throw std::invalid_argument("mesh_to_dense: U must hold 3 entries per vertex");
  DenseDeformation out(geom, Vec3f::Zero());
  if (mesh.tets.empty()) return out;
  const TetLocator locator(mesh);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < geom.dims[2]; ++k)
    for (int j = 0; j < geom.dims[1]; ++j)
      for (int i = 0; i < geom.dims[0]; ++i) {
        if (auto hit = locator.locate(geom.world(i, j, k)))
          out.at(i, j, k) = interpolate(mesh, *hit, U).cast<float>();
      }
  return out;
}

LabelVolume rasterize_mesh(const TetMesh& mesh, const Geometry& geom) {
  LabelVolume out(geom, 0);
  if (mesh.tets.empty()) return out;
  const TetLocator locator(mesh, /*skip_removed=*/true);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < geom.dims[2]; ++k)
    for (int j = 0; j < geom.dims[1]; ++j)
      for (int i = 0; i < geom.dims[0]; ++i) {
        if (auto hit = locator.locate(geom.world(i, j, k))) out.at(i, j, k) = mesh.tet_label[hit->tet];
      }
  return out;
}

double max_norm(const DenseDeformation& d) {
  double m = 0.0;
  for (const auto& v : d.voxels()) m = std::max(m, static_cast<double>(v.cast<double>().norm()));
  return m;
}

}  // namespace defreg
