#include "defreg/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "defreg/spatial.hpp"

namespace defreg {

namespace {

double directed(std::span<const Vec3> from, const KdTree& to, double percentile) {
  std::vector<double> d(from.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(from.size()); ++i)
    d[i] = std::sqrt(to.nearest(from[i]).dist2);
  if (percentile >= 100.0) return *std::max_element(d.begin(), d.end());
  std::sort(d.begin(), d.end());
  const auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(d.size())));
  return d[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

HausdorffResult hausdorff(std::span<const Vec3> a, std::span<const Vec3> b, double percentile) {
  if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff: empty point set");
  if (!(percentile > 0.0 && percentile <= 100.0)) throw std::invalid_argument("hausdorff: percentile must lie in (0, 100]");
  const KdTree ta(a), tb(b);
  HausdorffResult r;
  r.h_ab = directed(a, tb, percentile);
  r.h_ba = directed(b, ta, percentile);
  r.H = std::max(r.h_ab, r.h_ba);
  return r;
}

void CannyParams::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("canny: sigma must be positive");
  if (!(low >= 0.0 && low < high)) throw std::invalid_argument("canny: need 0 <= low < high");
}

namespace {

std::vector<double> smooth(const ScalarVolume& v, double sigma) {
  const Geometry& g = v.geometry();
  const Index3 n = g.dims;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double ks = 0.0;
  for (int t = -radius; t <= radius; ++t) ks += kernel[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
  for (auto& w : kernel) w /= ks;

  std::vector<double> a(v.voxels().begin(), v.voxels().end()), b(a.size());
  for (int axis = 0; axis < 3; ++axis) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          int pos[3] = {i, j, k};
          const int c = pos[axis];
          double s = 0.0;
          for (int t = -radius; t <= radius; ++t) {
            pos[axis] = std::clamp(c + t, 0, n[axis] - 1);
            s += kernel[t + radius] * a[g.index(pos[0], pos[1], pos[2])];
          }
          b[g.index(i, j, k)] = s;
        }
    std::swap(a, b);
  }
  return a;
}

constexpr std::array<std::array<int, 3>, 13> kDirections{{
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, -1, 0}, {1, 0, 1}, {1, 0, -1},
    {0, 1, 1}, {0, 1, -1}, {1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {-1, 1, 1},
}};

}  // namespace

std::vector<Vec3> canny_edges(const ScalarVolume& v, const CannyParams& p) {
  p.validate();
  const Geometry& g = v.geometry();
  const Index3 n = g.dims;
  const std::vector<double> s = smooth(v, p.sigma);
  const std::size_t N = g.voxel_count();

  std::vector<double> mag(N, 0.0);
  std::vector<std::uint8_t> dir(N, 0);
  std::array<Vec3, 13> unit;
  for (int d = 0; d < 13; ++d) unit[d] = Vec3(kDirections[d][0], kDirections[d][1], kDirections[d][2]).normalized();

#pragma omp parallel for schedule(static)
  for (int k = 1; k < n[2] - 1; ++k)
    for (int j = 1; j < n[1] - 1; ++j)
      for (int i = 1; i < n[0] - 1; ++i) {
        const Vec3 grad(0.5 * (s[g.index(i + 1, j, k)] - s[g.index(i - 1, j, k)]),
                        0.5 * (s[g.index(i, j + 1, k)] - s[g.index(i, j - 1, k)]),
                        0.5 * (s[g.index(i, j, k + 1)] - s[g.index(i, j, k - 1)]));
        const std::size_t id = g.index(i, j, k);
        mag[id] = grad.norm();
        if (mag[id] == 0.0) continue;
        int best = 0;
        double bc = -1.0;
        for (int d = 0; d < 13; ++d) {
          const double c = std::abs(unit[d].dot(grad));
          if (c > bc) {
            bc = c;
            best = d;
          }
        }
        dir[id] = static_cast<std::uint8_t>(best);
      }
  const double peak = *std::max_element(mag.begin(), mag.end());
  if (!(peak > 0.0)) return {};
  const double lo = p.low * peak, hi = p.high * peak;

  // 0 none, 1 weak, 2 strong
  std::vector<std::uint8_t> cls(N, 0);
#pragma omp parallel for schedule(static)
  for (int k = 1; k < n[2] - 1; ++k)
    for (int j = 1; j < n[1] - 1; ++j)
      for (int i = 1; i < n[0] - 1; ++i) {
        const std::size_t id = g.index(i, j, k);
        const double m = mag[id];
        if (m == 0.0 || m < lo) continue;
        const auto& d = kDirections[dir[id]];
        const double fwd = mag[g.index(i + d[0], j + d[1], k + d[2])];
        const double bwd = mag[g.index(i - d[0], j - d[1], k - d[2])];
        if (m > bwd && m >= fwd) cls[id] = m >= hi ? 2 : 1;
      }

  std::vector<std::uint8_t> edge(N, 0);
  std::vector<std::size_t> stack;
  for (std::size_t id = 0; id < N; ++id)
    if (cls[id] == 2) {
      edge[id] = 1;
      stack.push_back(id);
    }
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    const int i = static_cast<int>(id % n[0]);
    const int j = static_cast<int>((id / n[0]) % n[1]);
    const int k = static_cast<int>(id / (static_cast<std::size_t>(n[0]) * n[1]));
    for (int dk = -1; dk <= 1; ++dk)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (!g.in_bounds(i + di, j + dj, k + dk)) continue;
          const std::size_t q = g.index(i + di, j + dj, k + dk);
          if (cls[q] && !edge[q]) {
            edge[q] = 1;
            stack.push_back(q);
          }
        }
  }
  std::vector<Vec3> pts;
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i)
        if (edge[g.index(i, j, k)]) pts.push_back(g.world(i, j, k));
  return pts;
}

EdgeHd edge_hd(const ScalarVolume& warped_pre, const ScalarVolume& intra, const CannyParams& p, double percentile) {
  if (warped_pre.geometry() != intra.geometry()) throw std::invalid_argument("edge_hd: geometry mismatch");
  const auto a = canny_edges(warped_pre, p);
  const auto b = canny_edges(intra, p);
  if (a.empty() || b.empty()) throw DegenerateError("edge_hd: empty edge set");
  EdgeHd r;
  r.hd = hausdorff(a, b, percentile);
  r.edges_a = a.size();
  r.edges_b = b.size();
  return r;
}

std::vector<LandmarkPair> read_landmarks(std::istream& in) {
  std::vector<LandmarkPair> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("name,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw FormatError("landmarks line " + std::to_string(lineno) + ": expected 7 fields");
    LandmarkPair p;
    p.name = f[0];
    try {
      for (int a = 0; a < 3; ++a) {
        p.pre[a] = std::stod(f[1 + a]);
        p.intra[a] = std::stod(f[4 + a]);
      }
    } catch (const std::exception&) {
      throw FormatError("landmarks line " + std::to_string(lineno) + ": bad number");
    }
    if (!p.pre.allFinite() || !p.intra.allFinite())
      throw FormatError("landmarks line " + std::to_string(lineno) + ": non-finite coordinate");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LandmarkPair> read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open landmark file " + path.string());
  return read_landmarks(in);
}

void write_landmarks(std::ostream& out, std::span<const LandmarkPair> pairs) {
  out << "name,pre_x,pre_y,pre_z,intra_x,intra_y,intra_z\n";
  char buf[512];
  for (const auto& p : pairs) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.pre.x(), p.pre.y(), p.pre.z(), p.intra.x(),
                  p.intra.y(), p.intra.z());
    out << p.name << buf;
  }
}

LandmarkStats landmark_errors(std::span<const LandmarkPair> pairs, const DenseDeformation& field) {
  if (pairs.empty()) throw std::invalid_argument("landmark_errors: no landmark pairs");
  const Geometry& g = field.geometry();
  LandmarkStats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = 0.0;
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& p : pairs) {
    const Vec3 idx = g.continuous_index(p.pre);
    bool inside = true;
    for (int a = 0; a < 3; ++a) inside = inside && idx[a] >= 0.0 && idx[a] <= g.dims[a] - 1;
    if (!inside) {
      s.errors.push_back(std::numeric_limits<double>::quiet_NaN());
      s.excluded.push_back(p.name);
      continue;
    }
    const double e = (p.pre + sample_linear(field, idx) - p.intra).norm();
    s.errors.push_back(e);
    s.min = std::min(s.min, e);
    s.max = std::max(s.max, e);
    sum += e;
    ++used;
  }
  if (used == 0) throw std::invalid_argument("landmark_errors: every landmark lies outside the field");
  s.mean = sum / static_cast<double>(used);
  return s;
}

nlohmann::json report_json(const ReportRow& row) {
  nlohmann::json j{{"case", row.case_name}, {"variant", row.variant}, {"HD", row.hd},
                   {"# tets", row.tets},     {"# vertices", row.vertices}, {"note", "relative comparison only"}};
  if (row.landmarks) {
    j["Min error"] = row.landmarks->min;
    j["Max error"] = row.landmarks->max;
    j["Mean error"] = row.landmarks->mean;
    if (!row.landmarks->excluded.empty()) j["excluded landmarks"] = row.landmarks->excluded;
  } else {
    j["Min error"] = nullptr;
    j["Max error"] = nullptr;
    j["Mean error"] = nullptr;
  }
  return j;
}

std::string report_csv_row(const ReportRow& row) {
  char buf[256];
  if (row.landmarks)
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%zu,%zu", row.hd, row.landmarks->min, row.landmarks->max,
                  row.landmarks->mean, row.tets, row.vertices);
  else
    std::snprintf(buf, sizeof buf, ",%.6f,,,,%zu,%zu", row.hd, row.tets, row.vertices);
  return row.case_name + "," + row.variant + buf;
}

}  // namespace defreg
