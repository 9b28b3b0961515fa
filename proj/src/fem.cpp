#include "defreg/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/LU>

namespace defreg {

void Material::validate() const {
  if (!(young_modulus > 0.0) || !std::isfinite(young_modulus))
    throw ConfigError("Young's modulus must be positive and finite");
  if (!(poisson > 0.0 && poisson <= 0.49)) throw ConfigError("Poisson ratio must lie in (0, 0.49]");
}

MaterialTable MaterialTable::defaults() {
  MaterialTable t;
  t.by_label[1] = {2100.0, 0.45};
  t.by_label[2] = {21000.0, 0.45};
  return t;
}

MaterialTable MaterialTable::parse(const std::string& text) {
  MaterialTable t;
  std::istringstream in(text);
  std::string item;
  while (in >> item) {
    const auto a = item.find(':');
    const auto b = item.find(':', a == std::string::npos ? a : a + 1);
    if (a == std::string::npos || b == std::string::npos) throw ConfigError("material entry '" + item + "' is not label:E:nu");
    try {
      std::size_t used = 0;
      const int label = std::stoi(item.substr(0, a), &used);
      if (used != a || label < 0 || label > 65535) throw std::invalid_argument("label");
      Material m;
      m.young_modulus = std::stod(item.substr(a + 1, b - a - 1));
      m.poisson = std::stod(item.substr(b + 1));
      m.validate();
      t.by_label[static_cast<std::uint16_t>(label)] = m;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("material entry '" + item + "' is not label:E:nu");
    }
  }
  if (t.by_label.empty()) throw ConfigError("material table is empty");
  return t;
}

std::string MaterialTable::to_string() const {
  std::ostringstream out;
  out.precision(17);
  bool first = true;
  for (const auto& [label, m] : by_label) {
    if (!first) out << ' ';
    out << label << ':' << m.young_modulus << ':' << m.poisson;
    first = false;
  }
  return out.str();
}

const Material& MaterialTable::at(std::uint16_t label) const {
  const auto it = by_label.find(label);
  if (it == by_label.end()) throw ConfigError("no material for tissue label " + std::to_string(label));
  return it->second;
}

Mat12 element_stiffness(const std::array<Vec3, 4>& x, const Material& m) {
  Eigen::Matrix4d P;
  for (int i = 0; i < 4; ++i) P.row(i) << 1.0, x[i].x(), x[i].y(), x[i].z();
  const double vol = std::abs(P.determinant()) / 6.0;
  double longest = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) longest = std::max(longest, (x[i] - x[j]).norm());
  if (!(vol > 1e-12 * longest * longest * longest)) throw DegenerateError("element_stiffness: degenerate tetrahedron");
  // Column i of P^-1 holds the coefficients of shape function N_i.
  const Eigen::Matrix4d C = P.inverse();
  Eigen::Matrix<double, 6, 12> B = Eigen::Matrix<double, 6, 12>::Zero();
  for (int i = 0; i < 4; ++i) {
    const double gx = C(1, i), gy = C(2, i), gz = C(3, i);
    const int c = 3 * i;
    B(0, c) = gx;
    B(1, c + 1) = gy;
    B(2, c + 2) = gz;
    B(3, c) = gy;
    B(3, c + 1) = gx;
    B(4, c + 1) = gz;
    B(4, c + 2) = gy;
    B(5, c) = gz;
    B(5, c + 2) = gx;
  }
  const double E = m.young_modulus, nu = m.poisson;
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  Eigen::Matrix<double, 6, 6> D = Eigen::Matrix<double, 6, 6>::Zero();
  D.topLeftCorner<3, 3>().setConstant(lambda);
  D.topLeftCorner<3, 3>().diagonal().array() += 2.0 * mu;
  D.bottomRightCorner<3, 3>().diagonal().setConstant(mu);
  Mat12 K = vol * B.transpose() * D * B;
  return 0.5 * (K + K.transpose());
}

namespace {

struct Pattern {
  std::vector<std::vector<int>> nbrs;
  std::vector<std::uint8_t> used;
};

Pattern vertex_pattern(const TetMesh& mesh) {
  Pattern p;
  p.nbrs.resize(mesh.vertex_count());
  p.used.assign(mesh.vertex_count(), 0);
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) p.nbrs[v].push_back(static_cast<int>(v));
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    if (mesh.removed[t]) continue;
    for (int a : mesh.tets[t]) {
      p.used[a] = 1;
      for (int b : mesh.tets[t])
        if (a != b) p.nbrs[a].push_back(b);
    }
  }
  for (auto& n : p.nbrs) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return p;
}

// Position of entry (3u, 3w) within K's storage; the 3x3 block follows the
// same offset on rows 3u+1 and 3u+2.
int block_offset(const CsrMatrix& K, int u, int w) {
  const int r = 3 * u;
  const auto b = K.col.begin() + K.row_ptr[r], e = K.col.begin() + K.row_ptr[r + 1];
  const auto it = std::lower_bound(b, e, 3 * w);
  if (it == e || *it != 3 * w) throw std::logic_error("stiffness pattern is missing a block");
  return static_cast<int>(it - b);
}

CsrMatrix stiffness_from_pattern(const TetMesh& mesh, const MaterialTable& materials, const Pattern& pat) {
  const int n = static_cast<int>(mesh.vertex_count());
  CsrMatrix K;
  K.rows = K.cols = 3 * n;
  K.row_ptr.assign(3 * n + 1, 0);
  for (int v = 0; v < n; ++v)
    for (int a = 0; a < 3; ++a) K.row_ptr[3 * v + a + 1] = K.row_ptr[3 * v + a] + 3 * static_cast<int>(pat.nbrs[v].size());
  K.col.resize(K.row_ptr.back());
  K.val.assign(K.row_ptr.back(), 0.0);
  for (int v = 0; v < n; ++v)
    for (int a = 0; a < 3; ++a) {
      int p = K.row_ptr[3 * v + a];
      for (int w : pat.nbrs[v])
        for (int b = 0; b < 3; ++b) K.col[p++] = 3 * w + b;
    }

  const std::ptrdiff_t nt = static_cast<std::ptrdiff_t>(mesh.tet_count());
  std::vector<Mat12> ke(mesh.tet_count());
  std::vector<std::string> errors(mesh.tet_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < nt; ++t) {
    if (mesh.removed[t]) continue;
    try {
      const auto& T = mesh.tets[t];
      ke[t] = element_stiffness({mesh.vertices[T[0]], mesh.vertices[T[1]], mesh.vertices[T[2]], mesh.vertices[T[3]]},
                                materials.at(mesh.tet_label[t]));
    } catch (const std::exception& ex) {
      errors[t] = ex.what();
    }
  }
  for (std::ptrdiff_t t = 0; t < nt; ++t)
    if (!errors[t].empty()) throw DegenerateError("tet " + std::to_string(t) + ": " + errors[t]);

  for (std::ptrdiff_t t = 0; t < nt; ++t) {
    if (mesh.removed[t]) continue;
    const auto& T = mesh.tets[t];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const int off = block_offset(K, T[i], T[j]);
        for (int a = 0; a < 3; ++a) {
          double* row = &K.val[K.row_ptr[3 * T[i] + a] + off];
          for (int b = 0; b < 3; ++b) row[b] += ke[t](3 * i + a, 3 * j + b);
        }
      }
  }
  return K;
}

}  // namespace

CsrMatrix assemble_stiffness(const TetMesh& mesh, const MaterialTable& materials) {
  mesh.validate_layout();
  return stiffness_from_pattern(mesh, materials, vertex_pattern(mesh));
}

std::size_t FemSystem::active_count() const {
  return static_cast<std::size_t>(std::count_if(matches.begin(), matches.end(), [](const auto& m) { return m.active; }));
}

std::size_t FemSystem::outside_count() const {
  return static_cast<std::size_t>(std::count_if(matches.begin(), matches.end(), [](const auto& m) { return m.outside; }));
}

void FemSystem::set_active(std::size_t k, bool on) { matches.at(k).active = on && !matches[k].outside; }

FemSystem assemble(const TetMesh& mesh, const MaterialTable& materials, std::span<const FemMatch> matches,
                   const AssembleOptions& opt) {
  mesh.validate_layout();
  if (!(opt.data_tradeoff > 0.0)) throw std::invalid_argument("assemble: data_tradeoff must be positive");
  const Pattern pat = vertex_pattern(mesh);
  FemSystem sys;
  sys.vertex_count = mesh.vertex_count();
  sys.K = stiffness_from_pattern(mesh, materials, pat);
  sys.vertex_used = pat.used;
  if (std::find(pat.used.begin(), pat.used.end(), 0) != pat.used.end()) {
    sys.adjacency.resize(sys.vertex_count);
    for (const auto& T : mesh.tets)
      for (int a : T)
        for (int b : T)
          if (a != b) sys.adjacency[a].push_back(b);
    for (auto& n : sys.adjacency) {
      std::sort(n.begin(), n.end());
      n.erase(std::unique(n.begin(), n.end()), n.end());
    }
  }

  double diag_sum = 0.0;
  std::size_t diag_n = 0;
  for (std::size_t v = 0; v < sys.vertex_count; ++v)
    if (pat.used[v])
      for (int a = 0; a < 3; ++a) {
        diag_sum += sys.K.coeff(static_cast<int>(3 * v + a), static_cast<int>(3 * v + a));
        ++diag_n;
      }
  sys.weight_scale = diag_n ? opt.data_tradeoff * diag_sum / static_cast<double>(diag_n) : 0.0;

  const TetLocator loc(mesh, true);
  sys.matches.resize(matches.size());
  for (std::size_t k = 0; k < matches.size(); ++k) {
    auto& m = sys.matches[k];
    m.data = matches[k];
    if (!m.data.position.allFinite() || !m.data.displacement.allFinite() || !std::isfinite(m.data.confidence) ||
        m.data.confidence < 0.0)
      throw std::invalid_argument("assemble: match " + std::to_string(k) + " is not finite");
    const auto hit = loc.locate(m.data.position);
    if (!hit) {
      m.outside = true;
      continue;
    }
    m.tet = hit->tet;
    m.vertices = mesh.tets[hit->tet];
    m.bary = hit->bary;
    m.weight = sys.weight_scale * m.data.confidence;
    m.active = true;
  }
  return sys;
}

CsrMatrix interpolation_matrix(const FemSystem& sys) {
  std::vector<Triplet> t;
  for (std::size_t k = 0; k < sys.matches.size(); ++k) {
    const auto& m = sys.matches[k];
    if (!m.active) continue;
    for (int i = 0; i < 4; ++i)
      for (int a = 0; a < 3; ++a)
        t.push_back({static_cast<int>(3 * k + a), 3 * m.vertices[i] + a, m.bary[i]});
  }
  return CsrMatrix::from_triplets(static_cast<int>(3 * sys.matches.size()), static_cast<int>(sys.dofs()), std::move(t));
}

std::vector<double> weight_diagonal(const FemSystem& sys) {
  std::vector<double> w(3 * sys.matches.size(), 0.0);
  for (std::size_t k = 0; k < sys.matches.size(); ++k)
    if (sys.matches[k].active)
      for (int a = 0; a < 3; ++a) w[3 * k + a] = sys.matches[k].weight;
  return w;
}

std::vector<double> displacement_vector(const FemSystem& sys) {
  std::vector<double> d(3 * sys.matches.size(), 0.0);
  for (std::size_t k = 0; k < sys.matches.size(); ++k)
    for (int a = 0; a < 3; ++a) d[3 * k + a] = sys.matches[k].data.displacement[a];
  return d;
}

CsrMatrix data_matrix(const FemSystem& sys) {
  std::vector<Triplet> t;
  for (const auto& m : sys.matches) {
    if (!m.active) continue;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int a = 0; a < 3; ++a)
          t.push_back({3 * m.vertices[i] + a, 3 * m.vertices[j] + a, m.weight * m.bary[i] * m.bary[j]});
  }
  return CsrMatrix::from_triplets(static_cast<int>(sys.dofs()), static_cast<int>(sys.dofs()), std::move(t));
}

std::vector<double> data_rhs(const FemSystem& sys) {
  std::vector<double> b(sys.dofs(), 0.0);
  for (const auto& m : sys.matches) {
    if (!m.active) continue;
    for (int i = 0; i < 4; ++i)
      for (int a = 0; a < 3; ++a) b[3 * m.vertices[i] + a] += m.weight * m.bary[i] * m.data.displacement[a];
  }
  return b;
}

void SolveConfig::validate() const {
  if (!(rejection_fraction >= 0.0 && rejection_fraction < 1.0)) throw ConfigError("rejection_fraction must lie in [0, 1)");
  if (rejection_steps < 0) throw ConfigError("rejection_steps must be >= 0");
  if (!(cg_tol > 0.0)) throw ConfigError("cg_tol must be positive");
  if (cg_max_iter < 1) throw ConfigError("cg_max_iter must be >= 1");
  if (!(convergence_tol > 0.0)) throw ConfigError("convergence_tol must be positive");
  if (max_final_iters < 0) throw ConfigError("max_final_iters must be >= 0");
}

void check_solvable(const FemSystem& sys) {
  if (std::none_of(sys.K.val.begin(), sys.K.val.end(), [](double v) { return v != 0.0; }))
    throw SolverError("stiffness matrix is empty (every element removed)");
  std::vector<Vec3> pts;
  for (const auto& m : sys.matches)
    if (m.active && m.weight > 0.0) pts.push_back(m.data.position);
  if (pts.size() < 3) throw SolverError("singular system: fewer than 3 weighted active matches");
  std::size_t far = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if ((pts[i] - pts[0]).squaredNorm() > (pts[far] - pts[0]).squaredNorm()) far = i;
  const Vec3 axis = pts[far] - pts[0];
  const double len = axis.norm();
  double off = 0.0;
  if (len > 0.0)
    for (const auto& p : pts) off = std::max(off, axis.cross(p - pts[0]).norm() / len);
  if (!(len > 0.0) || off <= 1e-6 * len) throw SolverError("singular system: active matches are collinear");
}

namespace {

// Vertices outside every active element take the mean of neighbours solved
// in an earlier layer.
void fill_orphans(const FemSystem& sys, std::vector<double>& U) {
  std::vector<int> orphans;
  for (std::size_t v = 0; v < sys.vertex_count; ++v)
    if (!sys.vertex_used[v]) orphans.push_back(static_cast<int>(v));
  if (orphans.empty() || sys.adjacency.empty()) return;
  std::vector<std::uint8_t> known(sys.vertex_used);
  while (!orphans.empty()) {
    std::vector<std::pair<int, Vec3>> layer;
    std::vector<int> rest;
    for (int v : orphans) {
      Vec3 sum = Vec3::Zero();
      int n = 0;
      for (int w : sys.adjacency[v])
        if (known[w]) {
          sum += Vec3(U[3 * w], U[3 * w + 1], U[3 * w + 2]);
          ++n;
        }
      if (n)
        layer.emplace_back(v, sum / n);
      else
        rest.push_back(v);
    }
    if (layer.empty()) break;
    for (const auto& [v, d] : layer) {
      for (int a = 0; a < 3; ++a) U[3 * v + a] = d[a];
      known[v] = 1;
    }
    orphans.swap(rest);
  }
}

}  // namespace

std::vector<double> solve_linear(const FemSystem& sys, std::span<const double> F, const SolveConfig& cfg,
                                 std::span<const double> warm_start, int* cg_iterations) {
  if (!F.empty() && F.size() != sys.dofs()) throw std::invalid_argument("solve_linear: F has the wrong length");
  check_solvable(sys);
  CsrMatrix A = sys.K;
  std::vector<double> rhs(sys.dofs(), 0.0);
  for (const auto& m : sys.matches) {
    if (!m.active) continue;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        const int off = block_offset(A, m.vertices[i], m.vertices[j]);
        const double w = m.weight * m.bary[i] * m.bary[j];
        for (int a = 0; a < 3; ++a) A.val[A.row_ptr[3 * m.vertices[i] + a] + off + a] += w;
      }
      for (int a = 0; a < 3; ++a) rhs[3 * m.vertices[i] + a] += m.weight * m.bary[i] * m.data.displacement[a];
    }
  }
  for (std::size_t v = 0; v < sys.vertex_count; ++v) {
    for (int a = 0; a < 3; ++a) {
      const std::size_t r = 3 * v + a;
      if (sys.vertex_used[v]) {
        if (!F.empty()) rhs[r] += F[r];
      } else {
        const int off = block_offset(A, static_cast<int>(v), static_cast<int>(v));
        A.val[A.row_ptr[r] + off + a] = 1.0;
        rhs[r] = 0.0;
      }
    }
  }
  std::vector<double> x0;
  if (!warm_start.empty()) {
    if (warm_start.size() != sys.dofs()) throw std::invalid_argument("solve_linear: warm start has the wrong length");
    x0.assign(warm_start.begin(), warm_start.end());
    for (std::size_t v = 0; v < sys.vertex_count; ++v)
      if (!sys.vertex_used[v]) x0[3 * v] = x0[3 * v + 1] = x0[3 * v + 2] = 0.0;
  }
  auto res = pcg(A, rhs, x0, {cfg.cg_tol, cfg.cg_max_iter});
  if (cg_iterations) *cg_iterations = res.iterations;
  fill_orphans(sys, res.x);
  return std::move(res.x);
}

double match_error(const FemSystem& sys, std::span<const double> U, std::size_t k) {
  const auto& m = sys.matches.at(k);
  if (m.tet < 0) throw std::invalid_argument("match_error: match lies outside the mesh");
  Vec3 hu = Vec3::Zero();
  for (int i = 0; i < 4; ++i) hu += m.bary[i] * Vec3(U[3 * m.vertices[i]], U[3 * m.vertices[i] + 1], U[3 * m.vertices[i] + 2]);
  return (hu - m.data.displacement).norm();
}

namespace {

void xi_stats(const FemSystem& sys, std::span<const double> U, RobustResult::Round& r) {
  std::vector<double> xi;
  for (std::size_t k = 0; k < sys.matches.size(); ++k)
    if (sys.matches[k].active) xi.push_back(match_error(sys, U, k));
  r.active = xi.size();
  if (xi.empty()) return;
  std::sort(xi.begin(), xi.end());
  auto q = [&](double p) { return xi[static_cast<std::size_t>(std::floor(p * static_cast<double>(xi.size() - 1)))]; };
  r.xi_min = xi.front();
  r.xi_max = xi.back();
  r.xi_median = q(0.5);
  r.xi_p90 = q(0.9);
  double s = 0.0;
  for (double v : xi) s += v;
  r.xi_mean = s / static_cast<double>(xi.size());
}

double diff_inf(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

RobustResult robust_solve(const FemSystem& input, const SolveConfig& cfg) {
  cfg.validate();
  FemSystem sys = input;
  const std::size_t m0 = sys.active_count();
  if (m0 == 0) throw SolverError("robust_solve: no active matches");
  RobustResult out;
  std::vector<double> U(sys.dofs(), 0.0);
  std::vector<double> F(sys.dofs(), 0.0);

  const std::size_t per_round =
      cfg.rejection_fraction > 0.0 && cfg.rejection_steps > 0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.rejection_fraction / cfg.rejection_steps *
                                                                          static_cast<double>(m0) + 1e-9)))
          : 0;

  for (int round = 1; round <= cfg.rejection_steps; ++round) {
    sys.K.multiply(U, F);
    RobustResult::Round r;
    r.phase = "reject";
    r.index = round;
    std::vector<double> next = solve_linear(sys, F, cfg, U, &r.cg_iterations);
    r.delta_inf = diff_inf(next, U);
    U.swap(next);
    xi_stats(sys, U, r);
    if (per_round > 0) {
      std::vector<std::pair<double, int>> ranked;
      for (std::size_t k = 0; k < sys.matches.size(); ++k)
        if (sys.matches[k].active) ranked.emplace_back(match_error(sys, U, k), static_cast<int>(k));
      std::sort(ranked.begin(), ranked.end(),
                [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
      const std::size_t drop = std::min(per_round, ranked.size());
      if (drop == ranked.size()) throw SolverError("robust_solve: every match would be rejected");
      for (std::size_t i = 0; i < drop; ++i) {
        sys.set_active(ranked[i].second, false);
        out.rejected.push_back(ranked[i].second);
      }
      r.rejected_now = drop;
    }
    out.rounds.push_back(r);
  }

  if (cfg.rejection_steps == 0 && cfg.max_final_iters == 0) {
    RobustResult::Round r;
    r.phase = "converge";
    U = solve_linear(sys, {}, cfg, {}, &r.cg_iterations);
    r.delta_inf = norm_inf(U);
    xi_stats(sys, U, r);
    out.rounds.push_back(r);
  } else {
    out.converged = cfg.max_final_iters == 0;
    for (int it = 1; it <= cfg.max_final_iters; ++it) {
      sys.K.multiply(U, F);
      RobustResult::Round r;
      r.phase = "converge";
      r.index = it;
      std::vector<double> next = solve_linear(sys, F, cfg, U, &r.cg_iterations);
      r.delta_inf = diff_inf(next, U);
      U.swap(next);
      xi_stats(sys, U, r);
      out.rounds.push_back(r);
      out.final_iterations = it;
      if (r.delta_inf < cfg.convergence_tol) {
        out.converged = true;
        break;
      }
    }
  }
  out.U = std::move(U);
  out.active.resize(sys.matches.size());
  for (std::size_t k = 0; k < sys.matches.size(); ++k) out.active[k] = sys.matches[k].active;
  return out;
}

nlohmann::json RobustResult::trace() const {
  nlohmann::json rounds_json = nlohmann::json::array();
  for (const auto& r : rounds)
    rounds_json.push_back({{"phase", r.phase},
                           {"round", r.index},
                           {"active", r.active},
                           {"rejected", r.rejected_now},
                           {"xi", {{"min", r.xi_min}, {"median", r.xi_median}, {"p90", r.xi_p90}, {"max", r.xi_max}, {"mean", r.xi_mean}}},
                           {"cg_iterations", r.cg_iterations},
                           {"delta_inf", r.delta_inf}});
  return {{"rounds", rounds_json}, {"rejected", rejected}, {"converged", converged}, {"final_iterations", final_iterations}};
}

std::vector<double> solve_pinned(const CsrMatrix& K, std::span<const double> F, std::span<const int> pinned,
                                 const CgOptions& opt) {
  if (static_cast<int>(F.size()) != K.rows) throw std::invalid_argument("solve_pinned: F has the wrong length");
  std::vector<std::uint8_t> fixed(K.rows, 0);
  for (int v : pinned)
    for (int a = 0; a < 3; ++a) fixed.at(3 * v + a) = 1;
  CsrMatrix A = K;
  std::vector<double> rhs(F.begin(), F.end());
  for (int r = 0; r < A.rows; ++r) {
    bool empty = true;
    for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p) {
      if (fixed[r] || fixed[A.col[p]]) A.val[p] = 0.0;
      if (A.val[p] != 0.0) empty = false;
    }
    if (fixed[r] || empty) {
      rhs[r] = 0.0;
      for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p)
        if (A.col[p] == r) A.val[p] = 1.0;
    }
  }
  return pcg(A, rhs, {}, opt).x;
}

double strain_energy(const CsrMatrix& K, std::span<const double> U) {
  const auto KU = K.multiply(U);
  return dot(U, KU);
}

}  // namespace defreg
