#include "defreg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>

namespace defreg {

namespace {

std::uint16_t label_at(const LabelVolume& labels, const Vec3& p) {
  return sample_nearest(labels, labels.geometry().continuous_index(p));
}

}  // namespace

TetMesh i2m_bcc(const LabelVolume& labels, double delta) {
  const Geometry& g = labels.geometry();
  if (!(delta >= g.spacing.maxCoeff()))
    throw std::invalid_argument("i2m_bcc: delta must be at least the largest voxel spacing");

  Index3 lo{g.dims[0], g.dims[1], g.dims[2]}, hi{-1, -1, -1};
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        if (labels.at(i, j, k) != 0) {
          lo = {std::min(lo[0], i), std::min(lo[1], j), std::min(lo[2], k)};
          hi = {std::max(hi[0], i), std::max(hi[1], j), std::max(hi[2], k)};
        }
  if (hi[0] < 0) throw std::invalid_argument("i2m_bcc: label volume has no nonzero voxels");

  // Lattice covers the labelled box padded by one cell on every side.
  const Vec3 box_lo = g.world(lo[0], lo[1], lo[2]) - Vec3::Constant(delta);
  const Vec3 box_hi = g.world(hi[0], hi[1], hi[2]) + Vec3::Constant(delta);
  Index3 cells;
  for (int a = 0; a < 3; ++a) cells[a] = std::max(1, static_cast<int>(std::ceil((box_hi[a] - box_lo[a]) / delta)));

  const int cx = cells[0] + 1, cy = cells[1] + 1, cz = cells[2] + 1;
  const std::size_t n_corner = static_cast<std::size_t>(cx) * cy * cz;
  auto corner = [&](int i, int j, int k) { return static_cast<int>((static_cast<std::size_t>(k) * cy + j) * cx + i); };
  auto center = [&](int i, int j, int k) {
    return static_cast<int>(n_corner + (static_cast<std::size_t>(k) * cells[1] + j) * cells[0] + i);
  };
  std::vector<Vec3> verts(n_corner + static_cast<std::size_t>(cells[0]) * cells[1] * cells[2]);
  for (int k = 0; k < cz; ++k)
    for (int j = 0; j < cy; ++j)
      for (int i = 0; i < cx; ++i) verts[corner(i, j, k)] = box_lo + delta * Vec3(i, j, k);
  for (int k = 0; k < cells[2]; ++k)
    for (int j = 0; j < cells[1]; ++j)
      for (int i = 0; i < cells[0]; ++i) verts[center(i, j, k)] = box_lo + delta * Vec3(i + 0.5, j + 0.5, k + 0.5);

  TetMesh raw;
  auto emit = [&](std::array<int, 4> t) {
    Vec3 c = Vec3::Zero();
    for (int v : t) c += verts[v];
    const std::uint16_t lab = label_at(labels, 0.25 * c);
    if (lab == 0) return;
    if (signed_volume(verts[t[0]], verts[t[1]], verts[t[2]], verts[t[3]]) < 0.0) std::swap(t[2], t[3]);
    raw.tets.push_back(t);
    raw.tet_label.push_back(lab);
  };

  // For each pair of face-adjacent cells, the shared face has four edges;
  // each edge plus the two cell centers is one tet.
  for (int k = 0; k < cells[2]; ++k)
    for (int j = 0; j < cells[1]; ++j)
      for (int i = 0; i < cells[0]; ++i) {
        const int c0 = center(i, j, k);
        if (i + 1 < cells[0]) {
          const int c1 = center(i + 1, j, k);
          const int f[4] = {corner(i + 1, j, k), corner(i + 1, j + 1, k), corner(i + 1, j + 1, k + 1), corner(i + 1, j, k + 1)};
          for (int e = 0; e < 4; ++e) emit({c0, c1, f[e], f[(e + 1) % 4]});
        }
        if (j + 1 < cells[1]) {
          const int c1 = center(i, j + 1, k);
          const int f[4] = {corner(i, j + 1, k), corner(i + 1, j + 1, k), corner(i + 1, j + 1, k + 1), corner(i, j + 1, k + 1)};
          for (int e = 0; e < 4; ++e) emit({c0, c1, f[e], f[(e + 1) % 4]});
        }
        if (k + 1 < cells[2]) {
          const int c1 = center(i, j, k + 1);
          const int f[4] = {corner(i, j, k + 1), corner(i + 1, j, k + 1), corner(i + 1, j + 1, k + 1), corner(i, j + 1, k + 1)};
          for (int e = 0; e < 4; ++e) emit({c0, c1, f[e], f[(e + 1) % 4]});
        }
      }
  if (raw.tets.empty()) throw std::invalid_argument("i2m_bcc: no lattice tet falls inside the labels; reduce delta");
  raw.vertices = std::move(verts);
  raw.removed.assign(raw.tets.size(), 0);
  return largest_component(raw);
}

TetMesh largest_component(const TetMesh& mesh) {
  const auto nb = face_neighbours(mesh);
  std::vector<int> comp(mesh.tets.size(), -1);
  int best = -1;
  std::size_t best_size = 0;
  int next = 0;
  for (std::size_t s = 0; s < mesh.tets.size(); ++s) {
    if (comp[s] >= 0) continue;
    std::size_t size = 0;
    std::queue<int> q;
    q.push(static_cast<int>(s));
    comp[s] = next;
    while (!q.empty()) {
      const int t = q.front();
      q.pop();
      ++size;
      for (int n : nb[t])
        if (n >= 0 && comp[n] < 0) {
          comp[n] = next;
          q.push(n);
        }
    }
    if (size > best_size) {
      best_size = size;
      best = next;
    }
    ++next;
  }
  TetMesh out;
  std::vector<int> remap(mesh.vertices.size(), -1);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    if (comp[t] != best) continue;
    std::array<int, 4> tet;
    for (int k = 0; k < 4; ++k) {
      int& r = remap[mesh.tets[t][k]];
      if (r < 0) r = -2;  // mark used; numbered below in original order
      tet[k] = mesh.tets[t][k];
    }
    out.tets.push_back(tet);
    out.tet_label.push_back(mesh.tet_label[t]);
    out.removed.push_back(mesh.removed[t]);
  }
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    if (remap[v] == -2) {
      remap[v] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(mesh.vertices[v]);
    }
  for (auto& t : out.tets)
    for (int& v : t) v = remap[v];
  return out;
}

std::array<double, 6> tet_dihedrals(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 p[4] = {a, b, c, d};
  static constexpr int edges[6][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}, {1, 2, 0, 3}, {1, 3, 0, 2}, {2, 3, 0, 1}};
  std::array<double, 6> out;
  for (int e = 0; e < 6; ++e) {
    const Vec3& u0 = p[edges[e][0]];
    const Vec3 axis = (p[edges[e][1]] - u0).normalized();
    Vec3 x = p[edges[e][2]] - u0;
    Vec3 y = p[edges[e][3]] - u0;
    x -= axis * axis.dot(x);
    y -= axis * axis.dot(y);
    const double cosang = std::clamp(x.dot(y) / (x.norm() * y.norm()), -1.0, 1.0);
    out[e] = std::acos(cosang) * 180.0 / std::numbers::pi;
  }
  return out;
}

MeshQualityReport dihedral_angles(const TetMesh& mesh) {
  MeshQualityReport r;
  r.vertex_count = mesh.vertex_count();
  r.min_dihedral_deg = 180.0;
  r.max_dihedral_deg = 0.0;
  r.min_volume = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    if (!mesh.removed.empty() && mesh.removed[t]) continue;
    ++r.tet_count;
    const auto& v = mesh.tets[t];
    const Vec3 &a = mesh.vertices[v[0]], &b = mesh.vertices[v[1]], &c = mesh.vertices[v[2]], &d = mesh.vertices[v[3]];
    const double vol = signed_volume(a, b, c, d);
    r.min_volume = std::min(r.min_volume, vol);
    double longest = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) longest = std::max(longest, (mesh.vertices[v[i]] - mesh.vertices[v[j]]).norm());
    if (vol < 0.0) ++r.inverted_count;
    if (std::abs(vol) <= 1e-12 * longest * longest * longest) {
      ++r.degenerate_count;
      r.degenerate_tets.push_back(static_cast<int>(t));
      continue;
    }
    for (double ang : tet_dihedrals(a, b, c, d)) {
      r.min_dihedral_deg = std::min(r.min_dihedral_deg, ang);
      r.max_dihedral_deg = std::max(r.max_dihedral_deg, ang);
    }
  }
  if (r.tet_count == 0) r.min_volume = 0.0;
  return r;
}

void mesh_fidelity(const TetMesh& mesh, const LabelVolume& labels, MeshQualityReport& report) {
  const LabelVolume raster = rasterize_mesh(mesh, labels.geometry());
  std::map<std::uint16_t, std::array<std::size_t, 3>> counts;  // mesh, image, both
  std::size_t mesh_any = 0, image_any = 0, both_any = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const std::uint16_t a = raster[n], b = labels[n];
    if (a) ++counts[a][0];
    if (b) ++counts[b][1];
    if (a && a == b) ++counts[a][2];
    mesh_any += a != 0;
    image_any += b != 0;
    both_any += (a != 0 && b != 0);
  }
  report.dice.clear();
  for (const auto& [lab, c] : counts)
    report.dice[lab] = (c[0] + c[1]) ? 2.0 * c[2] / static_cast<double>(c[0] + c[1]) : 1.0;
  report.dice_overall = (mesh_any + image_any) ? 2.0 * both_any / static_cast<double>(mesh_any + image_any) : 1.0;
}

TetMesh displaced(const TetMesh& mesh, std::span<const double> U) {
  if (U.size() != 3 * mesh.vertex_count()) throw std::invalid_argument("displaced: U size mismatch");
  TetMesh out = mesh;
  for (std::size_t v = 0; v < out.vertices.size(); ++v) out.vertices[v] += Vec3(U[3 * v], U[3 * v + 1], U[3 * v + 2]);
  return out;
}

}  // namespace defreg
