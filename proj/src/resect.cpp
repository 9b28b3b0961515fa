#include "defreg/resect.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "defreg/mesh.hpp"
#include "defreg/spatial.hpp"

namespace defreg {

BgiResult segment_bgi(const ScalarVolume& intra, double threshold) {
  const Geometry& g = intra.geometry();
  const Index3 n = g.dims;
  BgiResult out;
  out.mask = LabelVolume(g, 0);
  std::vector<std::uint8_t> hits(g.voxel_count(), 0);
  bool any_foreground = false;
  for (float v : intra.voxels())
    if (v >= threshold) {
      any_foreground = true;
      break;
    }

  if (any_foreground) {
    // For each axis line, count the directions in which foreground exists
    // strictly before / after each voxel.
    for (int axis = 0; axis < 3; ++axis) {
      const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
      const int len = n[axis];
#pragma omp parallel for schedule(static)
      for (int u = 0; u < n[a1] * n[a2]; ++u) {
        int pos[3];
        pos[a1] = u % n[a1];
        pos[a2] = u / n[a1];
        auto at = [&](int t) {
          pos[axis] = t;
          return g.index(pos[0], pos[1], pos[2]);
        };
        bool seen = false;
        for (int t = 0; t < len; ++t) {
          const std::size_t id = at(t);
          if (seen) ++hits[id];
          seen = seen || intra[id] >= threshold;
        }
        seen = false;
        for (int t = len - 1; t >= 0; --t) {
          const std::size_t id = at(t);
          if (seen) ++hits[id];
          seen = seen || intra[id] >= threshold;
        }
      }
    }
  }
  for (std::size_t id = 0; id < g.voxel_count(); ++id)
    if (intra[id] < threshold && (!any_foreground || hits[id] >= 5)) {
      out.mask[id] = 1;
      ++out.flagged;
    }
  if (out.flagged == 0) {
    out.warning = true;
    out.message = "no voxel flagged as background-in-brain";
  } else if (out.flagged == g.voxel_count()) {
    out.warning = true;
    out.message = "every voxel flagged as background-in-brain";
  }
  return out;
}

GrowResult grow_removed(const TetMesh& mesh, std::span<const double> U, const LabelVolume& bgi) {
  mesh.validate_layout();
  if (!U.empty() && U.size() != 3 * mesh.vertex_count()) throw std::invalid_argument("grow_removed: U has the wrong length");
  const std::size_t nt = mesh.tet_count();
  const Geometry& g = bgi.geometry();
  std::vector<std::uint8_t> cand(nt, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(nt); ++t) {
    Vec3 c = Vec3::Zero();
    for (int v : mesh.tets[t]) {
      c += mesh.vertices[v];
      if (!U.empty()) c += Vec3(U[3 * v], U[3 * v + 1], U[3 * v + 2]);
    }
    c /= 4.0;
    const Vec3 idx = g.continuous_index(c);
    const int i = static_cast<int>(std::floor(idx.x() + 0.5)), j = static_cast<int>(std::floor(idx.y() + 0.5)),
              k = static_cast<int>(std::floor(idx.z() + 0.5));
    cand[t] = g.in_bounds(i, j, k) && bgi.at(i, j, k) != 0;
  }
  GrowResult out;
  out.removed = mesh.removed;
  out.candidates = static_cast<std::size_t>(std::count(cand.begin(), cand.end(), 1));
  const auto nbr = face_neighbours(mesh);

  const bool first = std::find(mesh.removed.begin(), mesh.removed.end(), 1) == mesh.removed.end();
  if (first) {
    std::vector<int> comp(nt, -1);
    std::vector<int> best;
    for (std::size_t s = 0; s < nt; ++s) {
      if (!cand[s] || comp[s] >= 0) continue;
      std::vector<int> members{static_cast<int>(s)};
      comp[s] = static_cast<int>(s);
      for (std::size_t q = 0; q < members.size(); ++q)
        for (int w : nbr[members[q]])
          if (w >= 0 && cand[w] && comp[w] < 0) {
            comp[w] = static_cast<int>(s);
            members.push_back(w);
          }
      if (members.size() > best.size()) best = std::move(members);
    }
    for (int t : best) out.removed[t] = 1;
    out.added = best.size();
    return out;
  }

  std::deque<int> queue;
  for (std::size_t t = 0; t < nt; ++t)
    if (out.removed[t]) queue.push_back(static_cast<int>(t));
  while (!queue.empty()) {
    const int t = queue.front();
    queue.pop_front();
    for (int w : nbr[t])
      if (w >= 0 && cand[w] && !out.removed[w]) {
        out.removed[w] = 1;
        ++out.added;
        queue.push_back(w);
      }
  }
  return out;
}

std::size_t Correspondence::orphans() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.empty(); }));
}

Correspondence estimate_correspondence(std::span<const Vec3> sources, std::span<const Vec3> targets, double sigma,
                                       int kt) {
  if (targets.empty()) throw std::invalid_argument("estimate_correspondence: no targets");
  if (!(sigma > 0.0)) throw std::invalid_argument("estimate_correspondence: sigma must be positive");
  if (kt < 1) throw std::invalid_argument("estimate_correspondence: kt must be >= 1");
  const KdTree tree(targets);
  Correspondence c;
  c.rows.resize(sources.size());
  const double cutoff2 = 9.0 * sigma * sigma;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sources.size()); ++i) {
    const auto nn = tree.knn(sources[i], kt);
    if (nn.front().dist2 > cutoff2) continue;
    auto& row = c.rows[i];
    double sum = 0.0;
    for (const auto& n : nn) {
      // Relative to the nearest so the largest weight is exactly exp(0).
      const double w = std::exp(-(n.dist2 - nn.front().dist2) / (2.0 * sigma * sigma));
      row.emplace_back(n.index, w);
      sum += w;
    }
    for (auto& e : row) e.second /= sum;
  }
  return c;
}

void NemConfig::validate() const {
  if (!(lambda1 > 0.0)) throw ConfigError("lambda1 must be positive");
  if (!(lambda2 >= 0.0)) throw ConfigError("lambda2 must be nonnegative");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(sigma_anneal > 0.0 && sigma_anneal <= 1.0)) throw ConfigError("sigma_anneal must lie in (0, 1]");
  if (inner_max_iters < 1) throw ConfigError("inner_max_iters must be >= 1");
  if (outer_max_iters < 1) throw ConfigError("outer_max_iters must be >= 1");
  if (kt < 1) throw ConfigError("kt must be >= 1");
}

namespace {

Vec3 interpolated(const SystemMatch& m, std::span<const double> U) {
  Vec3 hu = Vec3::Zero();
  for (int i = 0; i < 4; ++i) hu += m.bary[i] * Vec3(U[3 * m.vertices[i]], U[3 * m.vertices[i] + 1], U[3 * m.vertices[i] + 2]);
  return hu;
}

double removed_volume(const TetMesh& mesh) {
  double v = 0.0;
  for (std::size_t t = 0; t < mesh.tet_count(); ++t)
    if (mesh.removed[t]) v += tet_volume(mesh, t);
  return v;
}

}  // namespace

NemEnergy nem_energy(const FemSystem& sys, std::span<const double> U, const TetMesh& mesh, double lambda1,
                     double lambda2) {
  NemEnergy e;
  e.strain = strain_energy(sys.K, U);
  for (const auto& m : sys.matches) {
    if (!m.active) continue;
    e.match += m.weight / lambda1 * (interpolated(m, U) - m.data.displacement).squaredNorm();
    ++e.active;
  }
  e.removed_volume = removed_volume(mesh);
  e.removed = mesh.removed_count();
  e.J = e.strain + lambda1 * e.match + lambda2 * e.removed_volume;
  return e;
}

NemResult nem_register(const ScalarVolume& intra, const TetMesh& mesh_in, std::span<const FemMatch> matches,
                       const MaterialTable& materials, const NemConfig& cfg, const SolveConfig& solve,
                       const AssembleOptions& assemble_opt) {
  cfg.validate();
  solve.validate();
  NemResult out;
  out.mesh = mesh_in;
  std::fill(out.mesh.removed.begin(), out.mesh.removed.end(), 0);
  out.bgi = segment_bgi(intra, cfg.bgi_threshold);
  const Geometry& g = intra.geometry();

  // Candidate targets: matched end points outside the BGI.
  std::vector<int> target_of;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    if (!(matches[k].confidence > 0.0)) continue;
    const Vec3 t = matches[k].position + matches[k].displacement;
    const Vec3 idx = g.continuous_index(t);
    const int i = static_cast<int>(std::floor(idx.x() + 0.5)), j = static_cast<int>(std::floor(idx.y() + 0.5)),
              kk = static_cast<int>(std::floor(idx.z() + 0.5));
    if (g.in_bounds(i, j, kk) && out.bgi.mask.at(i, j, kk)) continue;
    out.targets.push_back(t);
    target_of.push_back(static_cast<int>(k));
  }
  if (out.targets.empty()) throw SolverError("nem_register: no target points outside the background region");

  // Initial deformation: robust solve on the raw matches, nothing removed.
  RobustResult last = robust_solve(assemble(out.mesh, materials, matches, assemble_opt), solve);
  out.initial_rejected = last.rejected.size();
  std::vector<double> U = last.U;
  std::vector<Vec3> D(matches.size());
  for (std::size_t k = 0; k < matches.size(); ++k) D[k] = matches[k].displacement;
  std::vector<std::uint8_t> orphaned(matches.size(), 0);

  for (int outer = 1; outer <= cfg.outer_max_iters; ++outer) {
    const GrowResult grown = grow_removed(out.mesh, U, out.bgi.mask);
    const bool changed = grown.added > 0;
    out.mesh.removed = grown.removed;
    out.removed_per_outer.push_back(out.mesh.removed_count());
    if (out.mesh.removed_count() == out.mesh.tet_count()) throw DegenerateError("nem_register: every element removed");
    if (outer > 1 && !changed) break;

    // The M-step is a full robust solve over M \ M_Rem: it starts from every
    // non-orphaned match with the current D and redoes the rejection rounds,
    // so with nothing removed and D unchanged it reproduces the initial solve.
    const auto build = [&] {
      std::vector<FemMatch> current(matches.begin(), matches.end());
      for (std::size_t k = 0; k < current.size(); ++k) current[k].displacement = D[k];
      FemSystem s = assemble(out.mesh, materials, current, assemble_opt);
      for (std::size_t k = 0; k < s.matches.size(); ++k) {
        if (orphaned[k]) s.set_active(k, false);
        s.matches[k].weight *= cfg.lambda1;
      }
      return s;
    };
    const auto energy_of = [&](FemSystem s, const RobustResult& r) {
      for (std::size_t k = 0; k < s.matches.size(); ++k) s.set_active(k, r.active[k] != 0);
      return nem_energy(s, U, out.mesh, cfg.lambda1, cfg.lambda2);
    };

    if (changed) {
      last = robust_solve(build(), solve);
      U = last.U;
    }
    NemEnergy e0 = energy_of(build(), last);
    e0.outer = outer;
    e0.inner = 0;
    e0.sigma = cfg.sigma;
    out.energy.push_back(e0);

    double sigma = cfg.sigma;
    bool converged = false;
    for (int inner = 1; inner <= cfg.inner_max_iters; ++inner) {
      // E-step on the sources kept by the last M-step, warped by U.
      FemSystem sys = build();
      std::vector<Vec3> src;
      std::vector<int> src_match;
      for (std::size_t k = 0; k < sys.matches.size(); ++k)
        if (last.active[k] && sys.matches[k].active) {
          src.push_back(sys.matches[k].data.position + interpolated(sys.matches[k], U));
          src_match.push_back(static_cast<int>(k));
        }
      const Correspondence c = estimate_correspondence(src, out.targets, sigma, cfg.kt);
      out.correspondence.rows.assign(matches.size(), {});
      std::size_t orphans = 0;
      for (std::size_t r = 0; r < src.size(); ++r) {
        const int k = src_match[r];
        if (c.rows[r].empty()) {
          orphaned[k] = 1;
          ++orphans;
          continue;
        }
        Vec3 t = Vec3::Zero();
        for (const auto& [j, w] : c.rows[r]) t += w * out.targets[j];
        const Vec3 cand = t - matches[k].position;
        const Vec3 hu = interpolated(sys.matches[k], U);
        // A row only moves when it does not increase this match's residual.
        if ((hu - cand).squaredNorm() < (hu - D[k]).squaredNorm()) D[k] = cand;
        out.correspondence.rows[k] = c.rows[r];
      }

      const RobustResult ms = robust_solve(build(), solve);
      const double delta = [&] {
        double d = 0.0;
        for (std::size_t i = 0; i < U.size(); ++i) d = std::max(d, std::abs(ms.U[i] - U[i]));
        return d;
      }();
      last = ms;
      U = ms.U;
      NemEnergy e = energy_of(build(), last);
      e.outer = outer;
      e.inner = inner;
      e.orphans = orphans;
      e.sigma = sigma;
      out.energy.push_back(e);
      sigma *= cfg.sigma_anneal;
      if (delta < solve.convergence_tol) {
        converged = true;
        break;
      }
    }
    out.inner_converged = out.inner_converged && converged;
    if (outer > 1 && !changed) break;
  }
  out.U = std::move(U);
  return out;
}

nlohmann::json NemResult::trace() const {
  nlohmann::json it = nlohmann::json::array();
  for (const auto& e : energy)
    it.push_back({{"outer", e.outer},
                  {"inner", e.inner},
                  {"J", e.J},
                  {"strain", e.strain},
                  {"match", e.match},
                  {"removed_volume", e.removed_volume},
                  {"removed_tets", e.removed},
                  {"orphans", e.orphans},
                  {"active", e.active},
                  {"sigma", e.sigma}});
  return {{"iterations", it},
          {"removed_per_outer", removed_per_outer},
          {"initial_rejected", initial_rejected},
          {"inner_converged", inner_converged},
          {"bgi_flagged", bgi.flagged},
          {"bgi_warning", bgi.message}};
}

}  // namespace defreg
