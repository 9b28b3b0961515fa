// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "defreg/featmatch.hpp"
#include "defreg/fem.hpp"
#include "defreg/mesh.hpp"
#include "defreg/parallel.hpp"
#include "defreg/phantom.hpp"
#include "defreg/pipeline.hpp"
#include "defreg/reference.hpp"
#include "defreg/refine.hpp"
#include "defreg/resect.hpp"
#include "defreg/sizing.hpp"

using namespace defreg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RegistrationInputs inputs(const ScalarVolume& pre, const ScalarVolume& intra, const LabelVolume& labels) {
  RegistrationInputs in;
  in.pre = &pre;
  in.intra = &intra;
  in.labels = &labels;
  return in;
}

Eigen::MatrixXd dense(const CsrMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r)
    for (int p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) d(r, a.col[p]) += a.val[p];
  return d;
}

std::vector<FemMatch> to_fem(const std::vector<FeatureMatch>& ms, const Geometry& g) {
  std::vector<FemMatch> out;
  for (const auto& m : ms) out.push_back({g.world(m.point.center[0], m.point.center[1], m.point.center[2]), m.displacement, m.confidence});
  return out;
}

// Random points inside non-removed tets carrying a displacement from f.
std::vector<FemMatch> sample_matches(const TetMesh& m, std::mt19937_64& rng, int count,
                                     const std::function<Vec3(const TetHit&, const Vec3&)>& f) {
  Vec3 lo = m.vertices[0], hi = lo;
  for (const auto& v : m.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const TetLocator loc(m);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FemMatch> out;
  while (static_cast<int>(out.size()) < count) {
    const Vec3 p = lo + (hi - lo).cwiseProduct(Vec3(u(rng), u(rng), u(rng)));
    const auto hit = loc.locate(p);
    if (!hit) continue;
    out.push_back({p, f(*hit, p), 0.5 + 0.5 * u(rng)});
  }
  return out;
}

// Shape-function gradients from face normals, independent of the library's
// inverse-matrix route.
Mat12 oracle_stiffness(const std::array<Vec3, 4>& x, const Material& mat) {
  std::array<Vec3, 4> g;
  for (int i = 0; i < 4; ++i) {
    const Vec3& a = x[(i + 1) % 4];
    const Vec3 n = (x[(i + 2) % 4] - a).cross(x[(i + 3) % 4] - a);
    g[i] = n / n.dot(x[i] - a);
  }
  const double V = std::abs((x[1] - x[0]).dot((x[2] - x[0]).cross(x[3] - x[0]))) / 6.0;
  const double E = mat.young_modulus, nu = mat.poisson;
  const double lambda = E * nu / ((1 + nu) * (1 - 2 * nu)), mu = E / (2 * (1 + nu));
  Mat12 K;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          K(3 * i + a, 3 * j + b) =
              V * (lambda * g[i][a] * g[j][b] + mu * g[i][b] * g[j][a] + (a == b ? mu * g[i].dot(g[j]) : 0.0));
  return K;
}

Outcome criterion1() {
  const Index3 dims{64, 64, 64};
  const std::uint64_t seed = 1;
  const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, dims, seed);
  const TetMesh mesh = i2m_bcc(p.labels, 5.0);
  const auto truth = generate_synthetic_truth(mesh, MaterialTable::defaults(), 4.0, seed, p.image.geometry());
  ScalarVolume intra = warp_volume(p.image, truth.field);
  add_noise(intra, 0.01, seed + 100);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_pbnrr(inputs(p.image, intra, p.labels), RegistrationConfig{});
  const double secs = seconds_since(t0);
  if (r.U.size() != truth.U.size()) return {false, "solve mesh differs from truth mesh"};
  double se = 0.0;
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    se += (Vec3(r.U[3 * v], r.U[3 * v + 1], r.U[3 * v + 2]) - Vec3(truth.U[3 * v], truth.U[3 * v + 1], truth.U[3 * v + 2]))
              .squaredNorm();
  const double rms = std::sqrt(se / mesh.vertex_count());
  const double ratio = r.initial_hd.H / std::max(r.final_hd(), 1e-12);
  return {rms <= 0.5 && ratio >= 3.0 && secs <= 60.0,
          fmt("vertex RMS %.3f voxel (<= 0.5), HD %.3f -> %.3f ratio %.2f (>= 3), %.1f s (<= 60)", rms,
              r.initial_hd.H, r.final_hd(), ratio, secs)};
}

Outcome criterion2() {
  const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {40, 40, 40}, 2);
  const TetMesh mesh = i2m_bcc(p.labels, 4.0);
  // S = confidence * I: undo the stiffness scaling of the data term.
  const auto diag = assemble_stiffness(mesh, MaterialTable::defaults()).diagonal();
  AssembleOptions ao;
  ao.data_tradeoff = diag.size() / std::accumulate(diag.begin(), diag.end(), 0.0);
  int exact = 0, fp = 0, fn = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto truth = generate_synthetic_truth(mesh, MaterialTable::defaults(), 3.0, 100 + trial, p.image.geometry());
    std::mt19937_64 rng(trial);
    auto ms = sample_matches(mesh, rng, 200, [&](const TetHit& h, const Vec3&) { return interpolate(mesh, h, truth.U); });
    std::vector<int> idx(ms.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<int> bad(idx.begin(), idx.begin() + 50);
    std::sort(bad.begin(), bad.end());
    for (int k : bad) ms[k].displacement += Vec3(20, 0, 0);
    const auto r = robust_solve(assemble(mesh, MaterialTable::defaults(), ms, ao), SolveConfig{});
    std::vector<int> got = r.rejected;
    std::sort(got.begin(), got.end());
    std::vector<int> extra, missed;
    std::set_difference(got.begin(), got.end(), bad.begin(), bad.end(), std::back_inserter(extra));
    std::set_difference(bad.begin(), bad.end(), got.begin(), got.end(), std::back_inserter(missed));
    fp += static_cast<int>(extra.size());
    fn += static_cast<int>(missed.size());
    exact += extra.empty() && missed.empty();
  }
  return {exact == 20, fmt("%d/20 trials exact, %d false positives, %d false negatives (S = confidence * I)", exact, fp, fn)};
}

Outcome criterion3() {
  LabelVolume l(Geometry{{24, 24, 24}, Vec3::Ones(), Vec3::Zero()}, 0);
  for (int k = 3; k <= 20; ++k)
    for (int j = 3; j <= 20; ++j)
      for (int i = 3; i <= 20; ++i) l.at(i, j, k) = i < 12 ? 1 : 2;
  const TetMesh mesh = i2m_bcc(l, 4.0);
  double worst_res = 0.0, worst_u = 0.0;
  bool all_converged = true;
  for (int trial = 0; trial < 5; ++trial) {
    std::mt19937_64 rng(trial + 7);
    std::normal_distribution<double> n(0.0, 0.2);
    // Four random interior points per tet keep the data term full rank.
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<FemMatch> ms;
    for (std::size_t t = 0; t < mesh.tet_count(); ++t)
      for (int q = 0; q < 4; ++q) {
        Eigen::Vector4d b(u(rng), u(rng), u(rng), u(rng));
        b /= b.sum();
        Vec3 x = Vec3::Zero();
        for (int c = 0; c < 4; ++c) x += b[c] * mesh.vertices[mesh.tets[t][c]];
        ms.push_back({x, Vec3(0.1 * x.y() + n(rng), std::sin(0.2 * x.x()) + n(rng), 0.05 * x.z() + n(rng)), 0.5 + 0.5 * u(rng)});
      }
    AssembleOptions ao;
    ao.data_tradeoff = 100.0;
    const FemSystem sys = assemble(mesh, MaterialTable::defaults(), ms, ao);
    SolveConfig cfg;
    cfg.convergence_tol = 1e-13;
    cfg.max_final_iters = 5000;
    cfg.cg_tol = 1e-13;
    const RobustResult r = robust_solve(sys, cfg);
    all_converged = all_converged && r.converged;

    // Final active set, weighted least squares by dense QR.
    FemSystem fin = sys;
    for (std::size_t k = 0; k < fin.matches.size(); ++k) fin.set_active(k, r.active[k] != 0);
    const Eigen::VectorXd U = Eigen::Map<const Eigen::VectorXd>(r.U.data(), r.U.size());
    const Eigen::VectorXd lhs = dense(data_matrix(fin)) * U;
    const auto rhs_v = data_rhs(fin);
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(rhs_v.data(), rhs_v.size());
    worst_res = std::max(worst_res, (lhs - rhs).norm() / rhs.norm());

    const Eigen::MatrixXd H = dense(interpolation_matrix(fin));
    const auto w = weight_diagonal(fin);
    const auto D = displacement_vector(fin);
    Eigen::MatrixXd A = H;
    Eigen::VectorXd b(H.rows());
    for (int row = 0; row < H.rows(); ++row) {
      const double s = std::sqrt(w[row]);
      A.row(row) *= s;
      b[row] = s * D[row];
    }
    const Eigen::VectorXd oracle = A.colPivHouseholderQr().solve(b);
    worst_u = std::max(worst_u, (U - oracle).norm() / oracle.norm());
  }
  return {worst_res <= 1e-6 && worst_u <= 1e-6 && all_converged,
          fmt("%zu vertices, worst normal-equation residual %.2e (<= 1e-6), worst U deviation from dense LS %.2e (<= 1e-6), "
              "converged %s",
              mesh.vertex_count(), worst_res, worst_u, all_converged ? "yes" : "no")};
}

Outcome criterion4() {
  const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {40, 40, 40}, 4);
  const TetMesh mesh = i2m_bcc(p.labels, 5.0);
  const auto mats = MaterialTable::defaults();
  double elem_sym = 0.0, oracle = 0.0;
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    std::array<Vec3, 4> x;
    for (int i = 0; i < 4; ++i) x[i] = mesh.vertices[mesh.tets[t][i]];
    const Material& m = mats.at(mesh.tet_label[t]);
    const Mat12 k = element_stiffness(x, m);
    const double scale = k.cwiseAbs().maxCoeff();
    elem_sym = std::max(elem_sym, (k - k.transpose()).cwiseAbs().maxCoeff() / scale);
    oracle = std::max(oracle, (k - oracle_stiffness(x, m)).cwiseAbs().maxCoeff() / scale);
  }
  const CsrMatrix K = assemble_stiffness(mesh, mats);
  double kmax = 0.0, asym = 0.0;
  for (int r = 0; r < K.rows; ++r)
    for (int q = K.row_ptr[r]; q < K.row_ptr[r + 1]; ++q) {
      kmax = std::max(kmax, std::abs(K.val[q]));
      asym = std::max(asym, std::abs(K.val[q] - K.coeff(K.col[q], r)));
    }
  double trans = 0.0;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> t(K.rows, 0.0);
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) t[3 * v + a] = 1.0;
    trans = std::max(trans, norm_inf(K.multiply(t)) / kmax);
  }
  asym /= kmax;
  return {elem_sym <= 1e-12 && asym <= 1e-12 && trans <= 1e-9 && oracle <= 1e-10,
          fmt("element asymmetry %.1e, global asymmetry %.1e (<= 1e-12), translation residual %.1e (<= 1e-9), "
              "oracle deviation %.1e (<= 1e-10) over %zu elements",
              elem_sym, asym, trans, oracle, mesh.tet_count())};
}

Outcome criterion5() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50, 50);
  double worst = 0.0, self = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> a(200), b(200);
    for (auto& x : a) x = Vec3(u(rng), u(rng), u(rng));
    for (auto& x : b) x = Vec3(u(rng), u(rng), u(rng)) * 0.8;
    worst = std::max(worst, std::abs(hausdorff(a, b).H - reference::hausdorff(a, b)));
    self = std::max(self, hausdorff(a, a).H);
  }
  return {worst <= 1e-12 && self == 0.0, fmt("max |fast - brute| %.1e (<= 1e-12), max H(A,A) %.1e", worst, self)};
}

Outcome criterion6() {
  const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {40, 40, 40}, 6);
  const TetMesh mesh = i2m_bcc(p.labels, 5.0);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> pick(0, mesh.vertex_count() - 1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> s(0.5, 4.0);
  const EllipsoidOptions opt;
  double worst = 0.0, center = 0.0;
  int failed = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 c = mesh.vertices[pick(rng)];
    const Vec3 scale(s(rng), s(rng), s(rng));
    std::vector<Vec3> pts;
    for (int i = 0; i < 5 + trial % 8; ++i) pts.push_back(c + Vec3(n(rng), n(rng), n(rng)).cwiseProduct(scale));
    const Ellipsoid e = min_enclosing_ellipsoid(pts, c, opt);
    center = std::max(center, (e.center - c).norm());
    for (const auto& q : pts) {
      const double v = (q - c).dot(e.metric * (q - c));
      worst = std::max(worst, v);
      failed += v > 1.0 + opt.eps;
    }
  }
  std::vector<Vec3> pts;
  for (int i = 0; i < 300; ++i) pts.emplace_back(4 + 32 * std::abs(std::sin(i * 1.3)), 4 + 32 * std::abs(std::sin(i * 2.1)),
                                                 4 + 32 * std::abs(std::sin(i * 0.7)));
  const auto f1 = metric_field(mesh, pts, 5, 1.0);
  const auto f15 = metric_field(mesh, pts, 5, 1.5);
  double infl = 0.0;
  for (std::size_t v = 0; v < f1.metric.size(); ++v)
    infl = std::max(infl, (f15.metric[v] - f1.metric[v] / 2.25).cwiseAbs().maxCoeff() / f1.metric[v].cwiseAbs().maxCoeff());
  return {failed == 0 && center <= 1e-9 && infl <= 1e-12,
          fmt("max (p-c)^T M (p-c) %.6f (<= 1+%.0e), center offset %.1e (<= 1e-9), inflation deviation %.1e", worst,
              opt.eps, center, infl)};
}

Outcome criterion7() {
  double amin = 180.0, amax = 0.0;
  std::size_t bad = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {64, 64, 64}, seed);
    const TetMesh mesh = i2m_bcc(p.labels, 5.0);
    const auto sel = select_features(p.image, MatchConfig{});
    std::vector<Vec3> pts;
    for (const auto& f : sel.features) pts.push_back(p.image.geometry().world(f.center[0], f.center[1], f.center[2]));
    for (int mode = 0; mode < 2; ++mode) {
      const SizingField f = mode == 0 ? isotropic_sizing(mesh, pts, 5) : metric_field(mesh, pts, 5, 1.0);
      const auto q = dihedral_angles(refine_to_metric(mesh, f).mesh);
      amin = std::min(amin, q.min_dihedral_deg);
      amax = std::max(amax, q.max_dihedral_deg);
      bad += q.inverted_count + q.degenerate_count;
    }
  }
  const Phantom s = make_phantom(PhantomKind::sphere_shell, {64, 64, 64}, 7);
  const TetMesh sm = i2m_bcc(s.labels, 4.0);
  MeshQualityReport rep = dihedral_angles(sm);
  mesh_fidelity(sm, s.labels, rep);
  return {amin >= 5.0 && amax <= 171.32 && bad == 0 && rep.dice_overall >= 0.9,
          fmt("adapted meshes alpha_min %.2f (>= 5), alpha_max %.2f (<= 171.32), %zu bad tets; sphere Dice %.3f (>= 0.9)",
              amin, amax, bad, rep.dice_overall)};
}

Outcome criterion8() {
  const Index3 dims{64, 64, 64};
  double worst_cover = 1.0;
  std::size_t stray = 0;
  bool monotone = true, connected = true;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Phantom pre = make_phantom(PhantomKind::two_tissue_tumor, dims, seed);
    const Phantom intra = make_phantom(PhantomKind::resected_tumor, dims, seed);
    const LabelVolume cavity = resection_cavity(dims, seed);
    const TetMesh mesh = i2m_bcc(pre.labels, 4.0);
    MatchConfig mc;
    const auto sel = select_features(pre.image, mc);
    const auto fm = to_fem(block_match(pre.image, intra.image, sel.features, mc), pre.image.geometry());
    const NemResult r = nem_register(intra.image, mesh, fm, MaterialTable::defaults(), NemConfig{}, SolveConfig{});

    // Cavity tets: centroid in the carved region. Interior: every face
    // neighbour is a cavity tet too. Band: tets sharing a vertex with a
    // cavity tet.
    const auto nbr = face_neighbours(mesh);
    std::vector<std::uint8_t> in_cav(mesh.tet_count(), 0), near(mesh.vertex_count(), 0);
    for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
      const Vec3 c = tet_centroid(mesh, t);
      const int i = static_cast<int>(std::lround(c.x())), j = static_cast<int>(std::lround(c.y())),
                k = static_cast<int>(std::lround(c.z()));
      in_cav[t] = cavity.geometry().in_bounds(i, j, k) && cavity.at(i, j, k);
      if (in_cav[t])
        for (int v : mesh.tets[t]) near[v] = 1;
    }
    std::size_t interior = 0, covered = 0;
    for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
      const bool inner = in_cav[t] && std::all_of(nbr[t].begin(), nbr[t].end(), [&](int w) { return w >= 0 && in_cav[w]; });
      if (inner) {
        ++interior;
        covered += r.mesh.removed[t];
      }
      const bool band = std::any_of(mesh.tets[t].begin(), mesh.tets[t].end(), [&](int v) { return near[v] != 0; });
      if (r.mesh.removed[t] && !band) ++stray;
    }
    worst_cover = std::min(worst_cover, interior ? static_cast<double>(covered) / interior : 0.0);
    for (std::size_t i = 1; i < r.removed_per_outer.size(); ++i)
      monotone = monotone && r.removed_per_outer[i] >= r.removed_per_outer[i - 1];
    // Connectivity of the removed set over shared faces.
    std::vector<int> seen(mesh.tet_count(), 0);
    std::size_t total = r.mesh.removed_count(), reached = 0;
    for (std::size_t s = 0; s < mesh.tet_count() && reached == 0; ++s) {
      if (!r.mesh.removed[s]) continue;
      std::vector<int> stack{static_cast<int>(s)};
      seen[s] = 1;
      while (!stack.empty()) {
        const int t = stack.back();
        stack.pop_back();
        ++reached;
        for (int w : nbr[t])
          if (w >= 0 && r.mesh.removed[w] && !seen[w]) {
            seen[w] = 1;
            stack.push_back(w);
          }
      }
    }
    connected = connected && reached == total && total > 0;
  }
  return {worst_cover >= 0.9 && stray == 0 && monotone && connected,
          fmt("worst interior coverage %.3f (>= 0.9), %zu removals outside the band, monotone %s, connected %s",
              worst_cover, stray, monotone ? "yes" : "no", connected ? "yes" : "no")};
}

Outcome criterion9() {
  double id = 0.0, pb = 0.0, an = 0.0;
  int strict = 0;
  const int n = 5;
  for (int seed = 1; seed <= n; ++seed) {
    ShiftCase s = make_resected_shift({64, 64, 64}, seed, 4.0);
    add_noise(s.intra, 0.01, seed + 500);
    const auto in = inputs(s.pre, s.intra, s.labels);
    RegistrationConfig cfg;
    const auto rp = run_pbnrr(in, cfg);
    cfg.mode = Mode::anrr;
    const auto ra = run_anrr(in, cfg);
    id += rp.initial_hd.H;
    pb += rp.final_hd();
    an += ra.final_hd();
    strict += ra.final_hd() < rp.final_hd();
  }
  id /= n;
  pb /= n;
  an /= n;
  return {an <= pb && pb <= id && strict >= 4,
          fmt("mean HD ANRR %.3f <= PBNRR %.3f <= identity %.3f; ANRR strictly better on %d/5 (>= 4)", an, pb, id, strict)};
}

double max_field_diff(const DenseDeformation& a, const DenseDeformation& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, static_cast<double>((a[i] - b[i]).norm()));
  return worst / a.geometry().spacing.minCoeff();
}

Outcome criterion10() {
  RegistrationConfig cfg;
  std::string ident;
  {
    const Phantom p = make_phantom(PhantomKind::two_tissue_tumor, {64, 64, 64}, 10);
    const TetMesh mesh = i2m_bcc(p.labels, 5.0);
    const auto truth = generate_synthetic_truth(mesh, MaterialTable::defaults(), 3.0, 10, p.image.geometry());
    const ScalarVolume intra = warp_volume(p.image, truth.field);
    const auto in = inputs(p.image, intra, p.labels);
    const auto pb = run_pbnrr(in, cfg);
    RegistrationConfig one = cfg;
    one.mode = Mode::anrr;
    one.max_iterations = 1;
    one.sizing = SizingMode::none;
    ident = run_anrr(in, one).metrics_json().dump() == pb.metrics_json().dump() ? "yes" : "no";
  }

  // No resection: a shifted phantom whose intra image has no background-in-brain
  // voxels. Take the first seed that qualifies.
  int seed = 0;
  Phantom p;
  ScalarVolume intra;
  for (int s = 1; s <= 20 && !seed; ++s) {
    p = make_phantom(PhantomKind::two_tissue_tumor, {64, 64, 64}, s);
    const TetMesh mesh = i2m_bcc(p.labels, 5.0);
    const auto truth = generate_synthetic_truth(mesh, MaterialTable::defaults(), 1.0, s, p.image.geometry());
    intra = warp_volume(p.image, truth.field);
    if (segment_bgi(intra, cfg.nem.bgi_threshold).flagged == 0) seed = s;
  }
  if (!seed) return {false, "no qualifying no-resection phantom among seeds 1..20"};
  const auto in = inputs(p.image, intra, p.labels);
  const auto pb = run_pbnrr(in, cfg);
  RegistrationConfig nc = cfg;
  nc.mode = Mode::nemnrr;
  const auto nem = run_nemnrr(in, nc);
  const double worst = max_field_diff(nem.field, pb.field);
  return {ident == "yes" && worst <= 0.25,
          fmt("ANRR(N=1) metrics byte-identical to PBNRR: %s; NEMNRR vs PBNRR max field difference %.3f voxel (<= 0.25) "
              "on seed %d with empty BGI",
              ident.c_str(), worst, seed)};
}

Outcome criterion11() {
  ShiftCase s = make_resected_shift({48, 48, 48}, 11, 3.0);
  add_noise(s.intra, 0.01, 11);
  RegistrationInputs in = inputs(s.pre, s.intra, s.labels);
  for (std::size_t i = 0; i < s.pre_landmarks.size(); ++i)
    in.landmarks.push_back({s.pre_landmarks[i].name, s.pre_landmarks[i].position, s.intra_landmarks[i].position});
  int identical = 0, runs = 0;
  for (Mode mode : {Mode::pbnrr, Mode::anrr, Mode::nemnrr}) {
    RegistrationConfig cfg;
    cfg.mode = mode;
    cfg.max_iterations = 3;
    cfg.sizing = SizingMode::anisotropic;
    std::string ref_metrics, ref_trace;
    std::vector<float> ref_warped;
    std::vector<Vec3f> ref_field;
    for (int t : {1, 4, 8}) {
      set_thread_count(t);
      const auto r = run_registration(in, cfg);
      const std::string m = r.metrics_json().dump(), tr = r.trace.dump();
      const std::vector<float> w(r.warped.voxels().begin(), r.warped.voxels().end());
      const std::vector<Vec3f> f(r.field.voxels().begin(), r.field.voxels().end());
      ++runs;
      if (t == 1) {
        ref_metrics = m;
        ref_trace = tr;
        ref_warped = w;
        ref_field = f;
        ++identical;
      } else {
        identical += m == ref_metrics && tr == ref_trace && w == ref_warped && f == ref_field;
      }
    }
  }
  set_thread_count(0);
  return {identical == runs, fmt("%d/%d runs byte-identical to the 1-thread run (pbnrr, anrr, nemnrr x {1,4,8})", identical, runs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3},  {4, criterion4},  {5, criterion5}, {6, criterion6},
      {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}, {11, criterion11}};
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
