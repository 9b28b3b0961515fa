#include "defreg/tetmesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include <Eigen/Dense>

namespace defreg {

std::size_t TetMesh::removed_count() const {
  return static_cast<std::size_t>(std::count(removed.begin(), removed.end(), std::uint8_t{1}));
}

void TetMesh::validate_layout() const {
  if (tet_label.size() != tets.size() || removed.size() != tets.size())
    throw std::invalid_argument("tet mesh: per-element arrays differ in length");
  const int nv = static_cast<int>(vertices.size());
  for (const auto& t : tets)
    for (int v : t)
      if (v < 0 || v >= nv) throw std::invalid_argument("tet mesh: vertex index out of range");
}

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

double tet_volume(const TetMesh& mesh, std::size_t t) {
  const auto& v = mesh.tets[t];
  return signed_volume(mesh.vertices[v[0]], mesh.vertices[v[1]], mesh.vertices[v[2]],
                       mesh.vertices[v[3]]);
}

Vec3 tet_centroid(const TetMesh& mesh, std::size_t t) {
  const auto& v = mesh.tets[t];
  return 0.25 * (mesh.vertices[v[0]] + mesh.vertices[v[1]] + mesh.vertices[v[2]] +
                 mesh.vertices[v[3]]);
}

std::array<double, 4> barycentric(const TetMesh& mesh, std::size_t t, const Vec3& p) {
  const auto& v = mesh.tets[t];
  const Vec3& a = mesh.vertices[v[0]];
  Mat3 m;
  m.col(0) = mesh.vertices[v[1]] - a;
  m.col(1) = mesh.vertices[v[2]] - a;
  m.col(2) = mesh.vertices[v[3]] - a;
  const Vec3 l = m.partialPivLu().solve(p - a);
  return {1.0 - l.sum(), l[0], l[1], l[2]};
}

namespace {
constexpr double kInsideTol = 1e-9;
}

TetLocator::TetLocator(const TetMesh& mesh, bool skip_removed) : mesh_(&mesh) {
  offsets_.assign(2, 0);
  if (mesh.vertices.empty() || mesh.tets.empty()) return;
  Vec3 lo = mesh.vertices.front(), hi = mesh.vertices.front();
  for (const auto& p : mesh.vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = (hi - lo).cwiseMax(Vec3::Constant(1e-9));
  const double target = std::cbrt(static_cast<double>(mesh.tets.size()) / 2.0);
  const double cell = std::max(extent.maxCoeff() / std::max(target, 1.0), 1e-9);
  for (int a = 0; a < 3; ++a) bins_[a] = std::clamp(static_cast<int>(std::ceil(extent[a] / cell)), 1, 512);
  lo_ = lo;
  cell_ = extent.cwiseQuotient(Vec3(bins_[0], bins_[1], bins_[2]));

  auto bin_of = [&](const Vec3& p, int a) {
    return std::clamp(static_cast<int>(std::floor((p[a] - lo_[a]) / cell_[a])), 0, bins_[a] - 1);
  };
  const std::size_t nbins = static_cast<std::size_t>(bins_[0]) * bins_[1] * bins_[2];
  std::vector<std::array<Index3, 2>> ranges(mesh.tets.size());
  std::vector<std::uint32_t> counts(nbins + 1, 0);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    if (skip_removed && mesh.removed[t]) continue;
    Vec3 tlo = mesh.vertices[mesh.tets[t][0]], thi = tlo;
    for (int k = 1; k < 4; ++k) {
      tlo = tlo.cwiseMin(mesh.vertices[mesh.tets[t][k]]);
      thi = thi.cwiseMax(mesh.vertices[mesh.tets[t][k]]);
    }
    for (int a = 0; a < 3; ++a) {
      ranges[t][0][a] = bin_of(tlo, a);
      ranges[t][1][a] = bin_of(thi, a);
    }
    for (int k = ranges[t][0][2]; k <= ranges[t][1][2]; ++k)
      for (int j = ranges[t][0][1]; j <= ranges[t][1][1]; ++j)
        for (int i = ranges[t][0][0]; i <= ranges[t][1][0]; ++i)
          ++counts[(static_cast<std::size_t>(k) * bins_[1] + j) * bins_[0] + i + 1];
  }
  for (std::size_t b = 0; b < nbins; ++b) counts[b + 1] += counts[b];
  offsets_ = counts;
  items_.resize(offsets_.back());
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    if (skip_removed && mesh.removed[t]) continue;
    for (int k = ranges[t][0][2]; k <= ranges[t][1][2]; ++k)
      for (int j = ranges[t][0][1]; j <= ranges[t][1][1]; ++j)
        for (int i = ranges[t][0][0]; i <= ranges[t][1][0]; ++i)
          items_[fill[(static_cast<std::size_t>(k) * bins_[1] + j) * bins_[0] + i]++] =
              static_cast<int>(t);
  }
}

std::optional<TetHit> TetLocator::locate(const Vec3& p) const {
  if (items_.empty()) return std::nullopt;
  Index3 b;
  for (int a = 0; a < 3; ++a) {
    const double f = (p[a] - lo_[a]) / cell_[a];
    if (f < -1e-9 || f > bins_[a] + 1e-9) return std::nullopt;
    b[a] = std::clamp(static_cast<int>(std::floor(f)), 0, bins_[a] - 1);
  }
  const std::size_t bin = (static_cast<std::size_t>(b[2]) * bins_[1] + b[1]) * bins_[0] + b[0];
  for (std::uint32_t it = offsets_[bin]; it < offsets_[bin + 1]; ++it) {
    const int t = items_[it];
    const auto w = barycentric(*mesh_, t, p);
    if (w[0] >= -kInsideTol && w[1] >= -kInsideTol && w[2] >= -kInsideTol && w[3] >= -kInsideTol)
      return TetHit{t, w};
  }
  return std::nullopt;
}

std::vector<std::array<int, 4>> face_neighbours(const TetMesh& mesh) {
  struct FaceRef {
    std::array<int, 3> key;
    int tet;
    int local;
  };
  std::vector<FaceRef> faces;
  faces.reserve(mesh.tets.size() * 4);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    for (int f = 0; f < 4; ++f) {
      std::array<int, 3> key;
      int n = 0;
      for (int k = 0; k < 4; ++k)
        if (k != f) key[n++] = mesh.tets[t][k];
      std::sort(key.begin(), key.end());
      faces.push_back({key, static_cast<int>(t), f});
    }
  }
  std::sort(faces.begin(), faces.end(), [](const FaceRef& a, const FaceRef& b) {
    return std::tie(a.key, a.tet) < std::tie(b.key, b.tet);
  });
  std::vector<std::array<int, 4>> nb(mesh.tets.size(), {-1, -1, -1, -1});
  for (std::size_t i = 0; i + 1 < faces.size(); ++i) {
    if (faces[i].key == faces[i + 1].key) {
      nb[faces[i].tet][faces[i].local] = faces[i + 1].tet;
      nb[faces[i + 1].tet][faces[i + 1].local] = faces[i].tet;
      ++i;
    }
  }
  return nb;
}

Vec3 interpolate(const TetMesh& mesh, const TetHit& hit, std::span<const double> U) {
  Vec3 out = Vec3::Zero();
  for (int k = 0; k < 4; ++k) {
    const std::size_t v = static_cast<std::size_t>(mesh.tets[hit.tet][k]);
    out += hit.bary[k] * Vec3(U[3 * v], U[3 * v + 1], U[3 * v + 2]);
  }
  return out;
}

}  // namespace defreg
