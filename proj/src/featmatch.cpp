#include "defreg/featmatch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace defreg {

void MatchConfig::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (block[a] < 1 || block[a] % 2 == 0) throw std::invalid_argument("block sizes must be odd and positive");
    if (window[a] < 1 || window[a] % 2 == 0) throw std::invalid_argument("window sizes must be odd and positive");
    if (window[a] < block[a]) throw std::invalid_argument("window must be at least the block size per axis");
  }
  if (!(selection_fraction > 0.0 && selection_fraction <= 1.0))
    throw std::invalid_argument("selection fraction must lie in (0, 1]");
}

Index3 MatchConfig::margin() const {
  return {(block[0] - 1) / 2 + (window[0] - 1) / 2, (block[1] - 1) / 2 + (window[1] - 1) / 2,
          (block[2] - 1) / 2 + (window[2] - 1) / 2};
}

namespace {

void gather_block(const ScalarVolume& v, const Index3& c, const Index3& block, std::vector<float>& out) {
  out.clear();
  const int hx = block[0] / 2, hy = block[1] / 2, hz = block[2] / 2;
  for (int k = c[2] - hz; k <= c[2] + hz; ++k)
    for (int j = c[1] - hy; j <= c[1] + hy; ++j)
      for (int i = c[0] - hx; i <= c[0] + hx; ++i) out.push_back(v.at(i, j, k));
}

double variance(std::span<const float> s) {
  double mean = 0.0;
  for (float x : s) mean += x;
  mean /= static_cast<double>(s.size());
  double acc = 0.0;
  for (float x : s) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(s.size());
}

}  // namespace

FeatureSelection select_features(const ScalarVolume& floating, const MatchConfig& cfg) {
  cfg.validate();
  const Index3& dims = floating.dims();
  const Index3 m = cfg.margin();
  Index3 counts;
  for (int a = 0; a < 3; ++a) {
    const int span = dims[a] - 2 * m[a];
    if (span < 1) throw std::invalid_argument("volume too small for the block and window sizes");
    counts[a] = (span - 1) / cfg.block[a] + 1;
  }
  FeatureSelection sel;
  sel.candidate_count = static_cast<std::size_t>(counts[0]) * counts[1] * counts[2];
  sel.target_count = static_cast<std::size_t>(
      std::ceil(cfg.selection_fraction * static_cast<double>(sel.candidate_count) - 1e-9));

  std::vector<FeaturePoint> cand(sel.candidate_count);
#pragma omp parallel
  {
    std::vector<float> buf;
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(cand.size()); ++n) {
      const int ci = static_cast<int>(n % counts[0]);
      const int cj = static_cast<int>((n / counts[0]) % counts[1]);
      const int ck = static_cast<int>(n / (static_cast<std::ptrdiff_t>(counts[0]) * counts[1]));
      FeaturePoint& f = cand[n];
      f.index = static_cast<int>(n);
      f.center = {m[0] + ci * cfg.block[0], m[1] + cj * cfg.block[1], m[2] + ck * cfg.block[2]};
      gather_block(floating, f.center, cfg.block, buf);
      f.variability = variance(buf);
    }
  }

  std::vector<int> order(cand.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return cand[a].variability > cand[b].variability; });

  std::vector<std::uint8_t> taken(cand.size(), 0);
  auto blocked = [&](int n) {
    const int ci = n % counts[0], cj = (n / counts[0]) % counts[1], ck = n / (counts[0] * counts[1]);
    for (int dk = -1; dk <= 1; ++dk)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int steps = std::abs(di) + std::abs(dj) + std::abs(dk);
          if (steps == 0) continue;
          if (cfg.connectivity == Connectivity::face && steps != 1) continue;
          const int i = ci + di, j = cj + dj, k = ck + dk;
          if (i < 0 || j < 0 || k < 0 || i >= counts[0] || j >= counts[1] || k >= counts[2]) continue;
          if (taken[(static_cast<std::size_t>(k) * counts[1] + j) * counts[0] + i]) return true;
        }
    return false;
  };

  for (int n : order) {
    if (sel.features.size() >= sel.target_count) break;
    if (!(cand[n].variability > 0.0)) break;
    if (blocked(n)) continue;
    taken[n] = 1;
    sel.features.push_back(cand[n]);
  }
  sel.no_candidates = sel.features.empty();
  std::sort(sel.features.begin(), sel.features.end(),
            [](const FeaturePoint& a, const FeaturePoint& b) { return a.index < b.index; });
  return sel;
}

double ncc(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("ncc: blocks must have equal size >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<FeatureMatch> block_match(const ScalarVolume& floating, const ScalarVolume& reference,
                                      std::span<const FeaturePoint> features, const MatchConfig& cfg) {
  cfg.validate();
  if (floating.geometry() != reference.geometry())
    throw std::invalid_argument("block_match: volumes must share geometry");
  const Geometry& g = floating.geometry();
  const Index3 m = cfg.margin();
  for (const auto& f : features)
    for (int a = 0; a < 3; ++a)
      if (f.center[a] < m[a] || f.center[a] > g.dims[a] - 1 - m[a])
        throw std::invalid_argument("block_match: feature too close to the volume boundary");

  const Index3 reach{(cfg.window[0] - cfg.block[0]) / 2, (cfg.window[1] - cfg.block[1]) / 2,
                     (cfg.window[2] - cfg.block[2]) / 2};
  std::vector<FeatureMatch> out(features.size());

#pragma omp parallel
  {
    std::vector<float> fb, rb;
    std::vector<double> centered;
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(features.size()); ++n) {
      const FeaturePoint& f = features[n];
      FeatureMatch& r = out[n];
      r.point = f;
      gather_block(floating, f.center, cfg.block, fb);

      // Floating side is fixed per feature: center it once.
      double mean = 0.0;
      for (float x : fb) mean += x;
      mean /= static_cast<double>(fb.size());
      centered.resize(fb.size());
      double saa = 0.0;
      for (std::size_t i = 0; i < fb.size(); ++i) {
        centered[i] = fb[i] - mean;
        saa += centered[i] * centered[i];
      }

      double best = -2.0, best_mag = 0.0;
      Index3 best_off{0, 0, 0};
      int evals = 0;
      for (int dz = -reach[2]; dz <= reach[2]; ++dz)
        for (int dy = -reach[1]; dy <= reach[1]; ++dy)
          for (int dx = -reach[0]; dx <= reach[0]; ++dx) {
            gather_block(reference, {f.center[0] + dx, f.center[1] + dy, f.center[2] + dz}, cfg.block, rb);
            ++evals;
            double mb = 0.0;
            for (float x : rb) mb += x;
            mb /= static_cast<double>(rb.size());
            double sab = 0.0, sbb = 0.0;
            for (std::size_t i = 0; i < rb.size(); ++i) {
              const double db = rb[i] - mb;
              sab += centered[i] * db;
              sbb += db * db;
            }
            const double score = (saa <= 0.0 || sbb <= 0.0) ? 0.0 : std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
            const double mag = Vec3(dx * g.spacing.x(), dy * g.spacing.y(), dz * g.spacing.z()).squaredNorm();
            // Scan order is lexicographic (z, y, x), so equal score and
            // magnitude keeps the earlier offset.
            if (score > best || (score == best && mag < best_mag)) {
              best = score;
              best_mag = mag;
              best_off = {dx, dy, dz};
            }
          }
      r.ncc = best;
      r.confidence = best > 0.0 ? best * best : 0.0;
      r.displacement = Vec3(best_off[0] * g.spacing.x(), best_off[1] * g.spacing.y(), best_off[2] * g.spacing.z());
      r.evaluations = evals;
    }
  }
  return out;
}

Vec3 feature_position(const Geometry& g, const FeaturePoint& f) {
  return g.world(f.center[0], f.center[1], f.center[2]);
}

void write_matches_csv(std::ostream& out, std::span<const FeatureMatch> matches) {
  out << "index,cx,cy,cz,dx_mm,dy_mm,dz_mm,ncc,confidence\n";
  char buf[256];
  for (const auto& m : matches) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", m.point.index, m.point.center[0],
                  m.point.center[1], m.point.center[2], m.displacement.x(), m.displacement.y(),
                  m.displacement.z(), m.ncc, m.confidence);
    out << buf;
  }
}

}  // namespace defreg
