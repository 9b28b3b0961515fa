#include "defreg/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace defreg::reference {

ScalarVolume warp_volume(const ScalarVolume& v, const DenseDeformation& d, Interp interp) {
  if (v.geometry() != d.geometry()) throw std::invalid_argument("warp_volume: geometry mismatch");
  const Geometry& g = v.geometry();
  ScalarVolume out(g);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t n = g.index(i, j, k);
        const Vec3 src = Vec3(i, j, k) - d[n].cast<double>().cwiseProduct(g.spacing.cwiseInverse());
        out[n] = static_cast<float>(interp == Interp::linear ? sample_linear(v, src) : sample_nearest(v, src));
      }
  return out;
}

DenseDeformation mesh_to_dense(const TetMesh& mesh, std::span<const double> U, const Geometry& geom) {
  if (U.size() != 3 * mesh.vertex_count()) throw std::invalid_argument("mesh_to_dense: U must hold 3 entries per vertex");
  DenseDeformation out(geom, Vec3f::Zero());
  for (int k = 0; k < geom.dims[2]; ++k)
    for (int j = 0; j < geom.dims[1]; ++j)
      for (int i = 0; i < geom.dims[0]; ++i) {
        const Vec3 p = geom.world(i, j, k);
        for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
          const auto w = barycentric(mesh, t, p);
          if (w[0] >= -1e-9 && w[1] >= -1e-9 && w[2] >= -1e-9 && w[3] >= -1e-9) {
            out.at(i, j, k) = interpolate(mesh, TetHit{static_cast<int>(t), w}, U).cast<float>();
            break;
          }
        }
      }
  return out;
}

namespace {

std::vector<float> gather(const ScalarVolume& v, const Index3& c, const Index3& b) {
  std::vector<float> out;
  for (int z = -(b[2] / 2); z <= b[2] / 2; ++z)
    for (int y = -(b[1] / 2); y <= b[1] / 2; ++y)
      for (int x = -(b[0] / 2); x <= b[0] / 2; ++x) out.push_back(v.at(c[0] + x, c[1] + y, c[2] + z));
  return out;
}

}  // namespace

std::vector<FeatureMatch> block_match(const ScalarVolume& floating, const ScalarVolume& reference,
                                      std::span<const FeaturePoint> features, const MatchConfig& cfg) {
  cfg.validate();
  const Geometry& g = floating.geometry();
  std::vector<FeatureMatch> out;
  for (const auto& f : features) {
    const auto a = gather(floating, f.center, cfg.block);
    FeatureMatch r;
    r.point = f;
    double best = -2.0, best_mag = 0.0;
    Vec3 best_d = Vec3::Zero();
    for (int dz = -(cfg.window[2] - cfg.block[2]) / 2; dz <= (cfg.window[2] - cfg.block[2]) / 2; ++dz)
      for (int dy = -(cfg.window[1] - cfg.block[1]) / 2; dy <= (cfg.window[1] - cfg.block[1]) / 2; ++dy)
        for (int dx = -(cfg.window[0] - cfg.block[0]) / 2; dx <= (cfg.window[0] - cfg.block[0]) / 2; ++dx) {
          const auto b = gather(reference, {f.center[0] + dx, f.center[1] + dy, f.center[2] + dz}, cfg.block);
          const double s = ncc(a, b);
          const Vec3 d(dx * g.spacing.x(), dy * g.spacing.y(), dz * g.spacing.z());
          ++r.evaluations;
          if (s > best || (s == best && d.squaredNorm() < best_mag)) {
            best = s;
            best_mag = d.squaredNorm();
            best_d = d;
          }
        }
    r.ncc = best;
    r.confidence = best > 0.0 ? best * best : 0.0;
    r.displacement = best_d;
    out.push_back(r);
  }
  return out;
}

double directed_hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
  double h = 0.0;
  for (const auto& p : a) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& q : b) m = std::min(m, (p - q).squaredNorm());
    h = std::max(h, std::sqrt(m));
  }
  return h;
}

double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.rows, 0.0);
  for (int r = 0; r < a.rows; ++r)
    for (int p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) y[r] += a.val[p] * x[a.col[p]];
  return y;
}

std::vector<Neighbour> knn(std::span<const Vec3> points, const Vec3& q, int k) {
  std::vector<Neighbour> all;
  for (std::size_t i = 0; i < points.size(); ++i) all.push_back({static_cast<int>(i), (points[i] - q).squaredNorm()});
  std::sort(all.begin(), all.end(),
            [](const Neighbour& a, const Neighbour& b) { return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index); });
  if (static_cast<int>(all.size()) > k) all.resize(k);
  return all;
}

}  // namespace defreg::reference
