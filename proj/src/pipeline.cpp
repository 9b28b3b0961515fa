#include "defreg/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <type_traits>

#include "defreg/featmatch.hpp"
#include "defreg/mesh.hpp"
#include "defreg/refine.hpp"
#include "defreg/resect.hpp"
#include "defreg/volume_io.hpp"

namespace defreg {

namespace {

constexpr double kMinDihedral = 5.0;
constexpr double kMaxDihedral = 171.32;

template <class F>
auto stage(const char* name, std::map<std::string, double>& timings, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  auto done = [&] {
    timings[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      done();
    } else {
      auto r = f();
      done();
      return r;
    }
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void check_inputs(const RegistrationInputs& in, const RegistrationConfig& cfg) {
  if (!in.pre || !in.intra || !in.labels) throw std::invalid_argument("registration inputs are incomplete");
  if (in.pre->geometry() != in.intra->geometry() || in.pre->geometry() != in.labels->geometry())
    throw std::invalid_argument("pre, intra and labels must share one geometry");
  cfg.validate();
}

std::vector<FemMatch> to_fem(const Geometry& g, std::span<const FeatureMatch> m) {
  std::vector<FemMatch> out;
  out.reserve(m.size());
  for (const auto& f : m) out.push_back({feature_position(g, f.point), f.displacement, f.confidence});
  return out;
}

struct Step {
  std::size_t features = 0;
  std::vector<FeatureMatch> matches;
  std::vector<FemMatch> fem_matches;
  RobustResult solve;
  std::size_t outside = 0;
};

// One PBNRR pass of `floating` against `intra` on `mesh`.
Step pbnrr_step(const ScalarVolume& floating, const ScalarVolume& intra, const TetMesh& mesh, const MatchConfig& mc,
                const RegistrationConfig& cfg, std::map<std::string, double>& timings) {
  Step s;
  const auto sel = stage("features", timings, [&] { return select_features(floating, mc); });
  if (sel.features.empty()) throw StageError("features", "no feature points (image has no intensity variation)");
  s.features = sel.features.size();
  s.matches = stage("match", timings, [&] { return block_match(floating, intra, sel.features, mc); });
  s.fem_matches = to_fem(floating.geometry(), s.matches);
  stage("solve", timings, [&] {
    const FemSystem sys = assemble(mesh, cfg.materials, s.fem_matches, cfg.assemble);
    s.outside = sys.outside_count();
    s.solve = robust_solve(sys, cfg.solve);
  });
  return s;
}

void evaluate(const RegistrationInputs& in, const RegistrationConfig& cfg, const ScalarVolume& warped,
              const DenseDeformation& field, IterationMetrics& m, std::map<std::string, double>& timings) {
  stage("evaluate", timings, [&] {
    m.hd = edge_hd(warped, *in.intra, cfg.canny, cfg.hd_percentile).hd;
    if (!in.landmarks.empty()) m.landmarks = landmark_errors(in.landmarks, field);
  });
}

void fill_mesh_stats(const TetMesh& mesh, IterationMetrics& m) {
  const auto q = dihedral_angles(mesh);
  m.tets = mesh.tet_count() - mesh.removed_count();
  m.vertices = mesh.vertex_count();
  m.removed_tets = mesh.removed_count();
  m.min_dihedral = q.min_dihedral_deg;
  m.max_dihedral = q.max_dihedral_deg;
}

RegistrationResult start(const RegistrationInputs& in, const RegistrationConfig& cfg, Mode mode) {
  check_inputs(in, cfg);
  RegistrationResult r;
  r.mode = mode;
  r.config_echo = cfg.canonical();
  r.config_hash = cfg.hash();
  stage("evaluate", r.timings, [&] {
    r.initial_hd = edge_hd(*in.pre, *in.intra, cfg.canny, cfg.hd_percentile).hd;
    if (!in.landmarks.empty()) r.initial_landmarks = landmark_errors(in.landmarks, DenseDeformation(in.pre->geometry()));
  });
  return r;
}

std::size_t count_active(const RobustResult& s) {
  return static_cast<std::size_t>(std::count(s.active.begin(), s.active.end(), 1));
}

}  // namespace

RegistrationResult run_anrr(const RegistrationInputs& in, const RegistrationConfig& cfg) {
  RegistrationResult r = start(in, cfg, Mode::anrr);
  const Geometry& g = in.pre->geometry();
  TetMesh mesh = stage("mesh", r.timings, [&] { return i2m_bcc(*in.labels, cfg.mesh_size); });
  DenseDeformation total(g);
  ScalarVolume warped = *in.pre;
  const double stop = cfg.anrr_stop * g.spacing.minCoeff();
  bool remeshed = false;
  std::size_t splits = 0;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    MatchConfig mc = cfg.match;
    if (it > 1 && cfg.anrr_window) mc.window = *cfg.anrr_window;
    Step s;
    try {
      s = pbnrr_step(warped, *in.intra, mesh, mc, cfg, r.timings);
    } catch (const StageError& e) {
      if (it == 1) throw;
      r.partial = true;
      r.partial_reason = e.what();
      break;
    }
    const DenseDeformation d = stage("warp", r.timings, [&] { return mesh_to_dense(mesh, s.solve.U, g); });
    stage("warp", r.timings, [&] {
      total = compose(d, total);
      warped = warp_volume(*in.pre, total);
    });

    IterationMetrics m;
    m.iteration = it;
    m.features = s.features;
    m.outside_matches = s.outside;
    m.rejected = s.solve.rejected.size();
    m.active = count_active(s.solve);
    m.increment_inf = norm_inf(s.solve.U);
    m.remeshed = remeshed;
    m.refine_splits = splits;
    fill_mesh_stats(mesh, m);
    evaluate(in, cfg, warped, total, m, r.timings);
    r.iterations.push_back(m);
    r.trace.push_back({{"iteration", it}, {"robust_solve", s.solve.trace()}});
    r.meshes.push_back(mesh);
    r.mesh = mesh;
    r.U = s.solve.U;

    if (it == cfg.max_iterations || m.increment_inf < stop) break;

    // Next model: the deformed mesh, regenerated when its quality has left
    // the admissible band, then optionally refined toward the matches.
    try {
      stage("remesh", r.timings, [&] {
        TetMesh next = displaced(mesh, s.solve.U);
        const auto q = dihedral_angles(next);
        remeshed = q.inverted_count > 0 || q.degenerate_count > 0 || q.min_dihedral_deg < kMinDihedral ||
                   q.max_dihedral_deg > kMaxDihedral;
        if (remeshed) next = i2m_bcc(warp_labels(*in.labels, total), cfg.mesh_size);
        splits = 0;
        if (cfg.sizing != SizingMode::none) {
          std::vector<Vec3> pts;
          for (std::size_t k = 0; k < s.fem_matches.size(); ++k)
            if (s.solve.active[k]) pts.push_back(s.fem_matches[k].position + s.fem_matches[k].displacement);
          if (static_cast<int>(pts.size()) >= cfg.sizing_k) {
            const SizingField f = cfg.sizing == SizingMode::isotropic
                                      ? isotropic_sizing(next, pts, cfg.sizing_k)
                                      : metric_field(next, pts, cfg.sizing_k, cfg.inflation, {cfg.ellipsoid_eps});
            RefineOptions ro;
            ro.max_passes = cfg.refine_passes;
            auto rr = refine_to_metric(next, f, ro);
            splits = rr.splits;
            next = std::move(rr.mesh);
          }
        }
        mesh = std::move(next);
      });
    } catch (const StageError& e) {
      r.partial = true;
      r.partial_reason = e.what();
      break;
    }
  }
  r.field = std::move(total);
  r.warped = std::move(warped);
  return r;
}

RegistrationResult run_pbnrr(const RegistrationInputs& in, const RegistrationConfig& cfg) {
  RegistrationConfig one = cfg;
  one.max_iterations = 1;
  one.sizing = SizingMode::none;
  RegistrationResult r = run_anrr(in, one);
  r.mode = Mode::pbnrr;
  r.config_echo = cfg.canonical();
  r.config_hash = cfg.hash();
  return r;
}

RegistrationResult run_nemnrr(const RegistrationInputs& in, const RegistrationConfig& cfg) {
  if (cfg.mode != Mode::nemnrr) throw ConfigError("run_nemnrr called with mode " + to_string(cfg.mode));
  RegistrationResult r = start(in, cfg, Mode::nemnrr);
  const Geometry& g = in.pre->geometry();
  const TetMesh mesh = stage("mesh", r.timings, [&] { return i2m_bcc(*in.labels, cfg.mesh_size); });
  const auto sel = stage("features", r.timings, [&] { return select_features(*in.pre, cfg.match); });
  if (sel.features.empty()) throw StageError("features", "no feature points (image has no intensity variation)");
  const auto matches = stage("match", r.timings, [&] { return block_match(*in.pre, *in.intra, sel.features, cfg.match); });
  const auto fem = to_fem(g, matches);
  const NemResult nem = stage("solve", r.timings, [&] {
    return nem_register(*in.intra, mesh, fem, cfg.materials, cfg.nem, cfg.solve, cfg.assemble);
  });
  r.field = stage("warp", r.timings, [&] { return mesh_to_dense(nem.mesh, nem.U, g); });
  r.warped = stage("warp", r.timings, [&] { return warp_volume(*in.pre, r.field); });

  IterationMetrics m;
  m.iteration = 1;
  m.features = sel.features.size();
  m.rejected = nem.initial_rejected;
  m.active = nem.energy.empty() ? 0 : nem.energy.back().active;
  m.increment_inf = norm_inf(nem.U);
  fill_mesh_stats(nem.mesh, m);
  evaluate(in, cfg, r.warped, r.field, m, r.timings);
  r.iterations.push_back(m);
  r.trace.push_back({{"iteration", 1}, {"nem", nem.trace()}});
  r.meshes.push_back(nem.mesh);
  r.mesh = nem.mesh;
  r.U = nem.U;
  return r;
}

RegistrationResult run_registration(const RegistrationInputs& in, const RegistrationConfig& cfg) {
  switch (cfg.mode) {
    case Mode::pbnrr: return run_pbnrr(in, cfg);
    case Mode::anrr: return run_anrr(in, cfg);
    case Mode::nemnrr: return run_nemnrr(in, cfg);
  }
  throw ConfigError("unknown mode");
}

namespace {

nlohmann::json hd_json(const HausdorffResult& h) { return {{"HD", h.H}, {"h_ab", h.h_ab}, {"h_ba", h.h_ba}}; }

nlohmann::json landmark_json(const std::optional<LandmarkStats>& l) {
  if (!l) return nullptr;
  nlohmann::json errors = nlohmann::json::array();
  for (double e : l->errors) errors.push_back(std::isnan(e) ? nlohmann::json(nullptr) : nlohmann::json(e));
  return {{"Min error", l->min}, {"Max error", l->max}, {"Mean error", l->mean}, {"errors", errors}, {"excluded", l->excluded}};
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

nlohmann::json RegistrationResult::metrics_json() const {
  nlohmann::json its = nlohmann::json::array();
  for (const auto& m : iterations)
    its.push_back({{"iteration", m.iteration},
                   {"hd", hd_json(m.hd)},
                   {"landmarks", landmark_json(m.landmarks)},
                   {"# tets", m.tets},
                   {"# vertices", m.vertices},
                   {"features", m.features},
                   {"outside_matches", m.outside_matches},
                   {"rejected", m.rejected},
                   {"active_matches", m.active},
                   {"removed_tets", m.removed_tets},
                   {"increment_inf_mm", m.increment_inf},
                   {"min_dihedral_deg", m.min_dihedral},
                   {"max_dihedral_deg", m.max_dihedral},
                   {"remeshed", m.remeshed},
                   {"refine_splits", m.refine_splits}});
  nlohmann::json j{{"initial", {{"hd", hd_json(initial_hd)}, {"landmarks", landmark_json(initial_landmarks)}}},
                   {"iterations", its},
                   {"field_max_mm", field.size() ? max_norm(field) : 0.0},
                   {"partial", partial},
                   {"partial_reason", partial_reason}};
  const IterationMetrics* last = iterations.empty() ? nullptr : &iterations.back();
  j["final"] = {{"HD", final_hd()},
                {"Min error", last && last->landmarks ? nlohmann::json(last->landmarks->min) : nlohmann::json(nullptr)},
                {"Max error", last && last->landmarks ? nlohmann::json(last->landmarks->max) : nlohmann::json(nullptr)},
                {"Mean error", last && last->landmarks ? nlohmann::json(last->landmarks->mean) : nlohmann::json(nullptr)},
                {"# tets", last ? last->tets : 0},
                {"# vertices", last ? last->vertices : 0}};
  return j;
}

nlohmann::json RegistrationResult::provenance_json() const {
  return {{"mode", to_string(mode)},
          {"config", config_echo},
          {"config_hash", hex64(config_hash)},
          {"warp_interpolation", "linear"},
          {"match_confidence", "max(0, ncc)^2"},
          {"hd_note", "relative comparison only"}};
}

void write_results(const std::filesystem::path& dir, const RegistrationResult& r) {
  std::filesystem::create_directories(dir);
  nlohmann::json result{{"metrics", r.metrics_json()}, {"provenance", r.provenance_json()}, {"timings_s", r.timings}};
  {
    std::ofstream out(dir / "result.json");
    out << result.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "trace.json");
    out << r.trace.dump(2) << '\n';
  }
  write_volume(r.warped, dir / "warped.dvol");
  write_deformation(r.field, dir / "field.dvec");
  for (std::size_t i = 0; i < r.meshes.size(); ++i) {
    std::ofstream out(dir / ("mesh_iter_" + std::to_string(i + 1) + ".tmesh"));
    write_mesh(out, r.meshes[i]);
  }
}

SyntheticTruth generate_synthetic_truth(const TetMesh& mesh, const MaterialTable& materials, double magnitude,
                                        std::uint64_t seed, const Geometry& geom) {
  mesh.validate_layout();
  if (!(magnitude >= 0.0)) throw std::invalid_argument("generate_synthetic_truth: magnitude must be nonnegative");
  SyntheticTruth t;
  const std::size_t n = mesh.vertex_count();
  t.U.assign(3 * n, 0.0);

  Vec3 lo = mesh.vertices.front(), hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  for (int c = 0; c < 8; ++c) {
    const Vec3 dir((c & 1) ? 1 : -1, (c & 2) ? 1 : -1, (c & 4) ? 1 : -1);
    int best = 0;
    for (std::size_t v = 1; v < n; ++v)
      if (dir.dot(mesh.vertices[v]) > dir.dot(mesh.vertices[best])) best = static_cast<int>(v);
    if (std::find(t.pinned.begin(), t.pinned.end(), best) == t.pinned.end()) t.pinned.push_back(best);
  }
  if (magnitude == 0.0) {
    t.field = DenseDeformation(geom);
    return t;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double extent = (hi - lo).maxCoeff();
  struct Mode3 {
    Vec3 k, a;
    double phase;
  };
  std::vector<Mode3> modes(3);
  for (auto& m : modes) {
    Vec3 u(normal(rng), normal(rng), normal(rng));
    u.normalize();
    m.k = (2.0 * M_PI / extent) * (0.5 + 0.5 * uni(rng)) * u;
    m.a = Vec3(normal(rng), normal(rng), normal(rng));
    m.phase = 2.0 * M_PI * uni(rng);
  }
  std::vector<double> F(3 * n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    Vec3 f = Vec3::Zero();
    for (const auto& m : modes) f += m.a * std::sin(m.k.dot(mesh.vertices[v] - lo) + m.phase);
    for (int a = 0; a < 3; ++a) F[3 * v + a] = f[a];
  }
  const CsrMatrix K = assemble_stiffness(mesh, materials);
  t.U = solve_pinned(K, F, t.pinned, {1e-10, 50000});
  const DenseDeformation raw = mesh_to_dense(mesh, t.U, geom);
  const double peak = max_norm(raw);
  if (!(peak > 0.0)) throw DegenerateError("generate_synthetic_truth: forces produced no displacement inside the grid");
  const double s = magnitude / peak;
  for (double& u : t.U) u *= s;
  t.field = mesh_to_dense(mesh, t.U, geom);
  return t;
}

}  // namespace defreg
