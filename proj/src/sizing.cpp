#include "defreg/sizing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "defreg/spatial.hpp"

namespace defreg {

SizingField isotropic_sizing(const TetMesh& mesh, std::span<const Vec3> points, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > points.size())
    throw std::invalid_argument("isotropic_sizing: need 1 <= k <= number of points");
  const KdTree tree(points);
  SizingField f;
  f.spacing.resize(mesh.vertex_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < static_cast<std::ptrdiff_t>(mesh.vertex_count()); ++v) {
    const auto nn = tree.knn(mesh.vertices[v], k);
    f.spacing[v] = std::sqrt(nn.back().dist2);
  }
  return f;
}

namespace {

// Khachiyan iteration for an origin-centered ellipsoid around a centrally
// symmetric set {+-y_i}. Both members of a pair share one weight, which is
// what keeps the center fixed at the origin.
template <int R>
Eigen::Matrix<double, R, R> centered_khachiyan(const std::vector<Eigen::Matrix<double, R, 1>>& y,
                                               double eps, int max_iter, int& iterations, bool& converged) {
  using MatR = Eigen::Matrix<double, R, R>;
  const int n = static_cast<int>(y.size());
  const double r = static_cast<double>(R);
  std::vector<double> u(n, 1.0 / n);
  MatR X;
  iterations = 0;
  converged = false;
  for (;;) {
    X.setZero();
    for (int i = 0; i < n; ++i) X.noalias() += u[i] * y[i] * y[i].transpose();
    const MatR Xi = X.inverse();
    int j = 0;
    double mj = -1.0;
    for (int i = 0; i < n; ++i) {
      const double m = y[i].dot(Xi * y[i]);
      if (m > mj) {
        mj = m;
        j = i;
      }
    }
    if (mj <= r * (1.0 + eps)) {
      converged = true;
      return Xi / r;
    }
    if (iterations >= max_iter) return Xi / r;
    const double step = (mj - r) / (r * (mj - 1.0));
    for (double& w : u) w *= 1.0 - step;
    u[j] += step;
    ++iterations;
  }
}

template <int R>
Eigen::MatrixXd solve_subspace(const std::vector<Vec3>& q, const Eigen::Matrix<double, 3, R>& basis, double eps,
                               int max_iter, int& iterations, bool& converged) {
  std::vector<Eigen::Matrix<double, R, 1>> y;
  y.reserve(q.size());
  for (const auto& p : q) {
    Eigen::Matrix<double, R, 1> v = basis.transpose() * p;
    if (v.squaredNorm() > 0.0) y.push_back(v);
  }
  return centered_khachiyan<R>(y, eps, max_iter, iterations, converged);
}

}  // namespace

Ellipsoid min_enclosing_ellipsoid(std::span<const Vec3> points, const Vec3& center, const EllipsoidOptions& opt) {
  if (points.empty()) throw std::invalid_argument("min_enclosing_ellipsoid: no points");
  if (!(opt.eps > 0.0 && opt.eps < 0.5)) throw std::invalid_argument("min_enclosing_ellipsoid: eps must lie in (0, 0.5)");

  std::vector<Vec3> q;
  q.reserve(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : points) {
    q.push_back(p - center);
    scatter += q.back() * q.back().transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> pca(scatter);
  const Vec3 lam = pca.eigenvalues();  // ascending
  if (!(lam[2] > 0.0)) throw DegenerateError("min_enclosing_ellipsoid: all points coincide with the center");
  int rank = 0;
  for (int a = 0; a < 3; ++a) rank += lam[a] > 1e-12 * lam[2];

  Ellipsoid e;
  e.center = center;
  e.rank = rank;
  const Mat3 V = pca.eigenvectors();
  const Eigen::Matrix<double, 3, Eigen::Dynamic> span_basis = V.rightCols(rank);
  Eigen::MatrixXd A;
  if (rank == 3) {
    A = solve_subspace<3>(q, V, opt.eps, opt.max_iterations, e.iterations, e.converged);
  } else if (rank == 2) {
    A = solve_subspace<2>(q, Eigen::Matrix<double, 3, 2>(span_basis), opt.eps, opt.max_iterations, e.iterations, e.converged);
  } else {
    A = solve_subspace<1>(q, Eigen::Matrix<double, 3, 1>(span_basis), opt.eps, opt.max_iterations, e.iterations, e.converged);
  }

  // Lift back to 3-D, then floor every semi-axis at floor_ratio * longest.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sub(A);
  const double longest = 1.0 / std::sqrt(sub.eigenvalues().minCoeff());
  const double cap = 1.0 / std::pow(opt.floor_ratio * longest, 2);
  const Eigen::MatrixXd W = sub.eigenvectors();
  const Eigen::VectorXd ew = sub.eigenvalues();
  Mat3 M = Mat3::Zero();
  for (int a = 0; a < rank; ++a) {
    const Vec3 dir = span_basis * W.col(a);
    M += std::min(ew[a], cap) * dir * dir.transpose();
  }
  for (int a = 0; a < 3 - rank; ++a) M += cap * V.col(a) * V.col(a).transpose();
  M = 0.5 * (M + M.transpose());

  if (!e.converged) {
    double worst = 0.0;
    for (const auto& p : q) worst = std::max(worst, p.dot(M * p));
    if (worst > 1.0 + opt.eps) M *= (1.0 + opt.eps) / worst;
  }
  e.metric = M;
  return e;
}

SizingField metric_field(const TetMesh& mesh, std::span<const Vec3> points, int k, double inflation,
                         const EllipsoidOptions& opt) {
  if (k < 1 || static_cast<std::size_t>(k) > points.size())
    throw std::invalid_argument("metric_field: need 1 <= k <= number of points");
  if (!(inflation > 0.0)) throw std::invalid_argument("metric_field: inflation must be positive");
  const KdTree tree(points);
  SizingField f;
  f.metric.resize(mesh.vertex_count());
  const double scale = 1.0 / (inflation * inflation);
  std::vector<std::string> errors(mesh.vertex_count());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t v = 0; v < static_cast<std::ptrdiff_t>(mesh.vertex_count()); ++v) {
    const auto nn = tree.knn(mesh.vertices[v], k);
    std::vector<Vec3> local;
    local.reserve(nn.size());
    for (const auto& n : nn) local.push_back(tree.point(n.index));
    try {
      f.metric[v] = scale * min_enclosing_ellipsoid(local, mesh.vertices[v], opt).metric;
    } catch (const std::exception& ex) {
      errors[v] = ex.what();
    }
  }
  for (std::size_t v = 0; v < errors.size(); ++v)
    if (!errors[v].empty()) throw DegenerateError("metric_field: vertex " + std::to_string(v) + ": " + errors[v]);
  return f;
}

std::vector<int> points_per_vertex_cell(const TetMesh& mesh, std::span<const Vec3> points) {
  std::vector<int> counts(mesh.vertex_count(), 0);
  const TetLocator loc(mesh, true);
  for (const auto& p : points)
    if (auto hit = loc.locate(p))
      for (int v : mesh.tets[hit->tet]) ++counts[v];
  return counts;
}

double mean_points_per_vertex_cell(const TetMesh& mesh, std::span<const Vec3> points) {
  const auto counts = points_per_vertex_cell(mesh, points);
  std::vector<std::uint8_t> used(mesh.vertex_count(), 0);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t)
    if (!mesh.removed[t])
      for (int v : mesh.tets[t]) used[v] = 1;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < counts.size(); ++v)
    if (used[v]) {
      sum += counts[v];
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace defreg
