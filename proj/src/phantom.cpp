#include "defreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace defreg {

PhantomKind parse_phantom_kind(const std::string& name) {
  if (name == "sphere-shell") return PhantomKind::sphere_shell;
  if (name == "two-tissue-tumor") return PhantomKind::two_tissue_tumor;
  if (name == "resected-tumor") return PhantomKind::resected_tumor;
  throw std::invalid_argument("unknown phantom kind '" + name + "'");
}

std::string to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::sphere_shell: return "sphere-shell";
    case PhantomKind::two_tissue_tumor: return "two-tissue-tumor";
    case PhantomKind::resected_tumor: return "resected-tumor";
  }
  return "?";
}

namespace {

constexpr float kShell = 1000.0f;
constexpr float kShellInterior = 500.0f;
constexpr float kParenchymaLevel = 600.0f;
constexpr float kTumorLevel = 1100.0f;
constexpr float kTextureAmplitude = 40.0f;
constexpr double kInclusionLevel = 2000.0;
constexpr double kInclusionSigma = 1.2;   // voxels
constexpr double kInclusionSpacing = 6.0; // minimum center distance, voxels

struct Layout {
  Vec3 center;
  Vec3 brain_radii;
  Vec3 tumor_center;
  Vec3 tumor_radii;
  double corridor_radius;
};

Layout layout_for(const Index3& dims, std::uint64_t seed) {
  const Vec3 n(dims[0], dims[1], dims[2]);
  Layout l;
  l.center = 0.5 * (n - Vec3::Ones());
  l.brain_radii = Vec3(0.42, 0.38, 0.36).cwiseProduct(n);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);
  const Vec3 j(jitter(rng), jitter(rng), jitter(rng));
  l.tumor_center = l.center + (Vec3(0.22, 0.04, 0.0) + j).cwiseProduct(n);
  l.tumor_radii = Vec3(0.14, 0.12, 0.12).cwiseProduct(n);
  l.corridor_radius = 0.06 * n.minCoeff();
  return l;
}

bool in_ellipsoid(const Vec3& p, const Vec3& c, const Vec3& r) {
  return (p - c).cwiseQuotient(r).squaredNorm() <= 1.0;
}

bool in_cavity(const Vec3& p, const Layout& l) {
  if (in_ellipsoid(p, l.tumor_center, l.tumor_radii)) return true;
  const double dy = p.y() - l.tumor_center.y(), dz = p.z() - l.tumor_center.z();
  return p.x() >= l.tumor_center.x() && dy * dy + dz * dz <= l.corridor_radius * l.corridor_radius;
}

// Unit-variance white noise smoothed with a Gaussian of one voxel.
std::vector<float> texture(const Index3& dims, std::uint64_t seed) {
  const Geometry g{dims, Vec3::Ones(), Vec3::Zero()};
  std::vector<double> a(g.voxel_count());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& x : a) x = normal(rng);

  const int radius = 3;
  std::vector<double> kernel(2 * radius + 1);
  double ksum = 0.0;
  for (int t = -radius; t <= radius; ++t) ksum += kernel[t + radius] = std::exp(-0.5 * t * t);
  for (auto& w : kernel) w /= ksum;

  std::vector<double> b(a.size());
  const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(dims[0]),
                                          static_cast<std::size_t>(dims[0]) * dims[1]};
  for (int axis = 0; axis < 3; ++axis) {
    for (int k = 0; k < dims[2]; ++k)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i) {
          const int pos[3] = {i, j, k};
          double s = 0.0;
          for (int t = -radius; t <= radius; ++t) {
            const int q = std::clamp(pos[axis] + t, 0, dims[axis] - 1);
            s += kernel[t + radius] * a[g.index(i, j, k) + (q - pos[axis]) * static_cast<std::ptrdiff_t>(stride[axis])];
          }
          b[g.index(i, j, k)] = s;
        }
    std::swap(a, b);
  }
  double mean = 0.0, sq = 0.0;
  for (double x : a) mean += x;
  mean /= static_cast<double>(a.size());
  for (double x : a) sq += (x - mean) * (x - mean);
  const double sd = std::sqrt(sq / static_cast<double>(a.size()));
  std::vector<float> out(a.size());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = static_cast<float>((a[n] - mean) / sd);
  return out;
}

// Small Gaussian blobs scattered through the brain by dart throwing. They
// give 3-voxel blocks a full 3-D structure to match against.
std::vector<Vec3> inclusions(const Layout& l, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 inner = l.brain_radii - Vec3::Constant(3.0 * kInclusionSigma);
  const double volume = 4.0 / 3.0 * 3.14159265358979 * inner.prod();
  const int target = static_cast<int>(volume / std::pow(kInclusionSpacing, 3));
  std::vector<Vec3> out;
  for (int attempt = 0; attempt < 50 * target && static_cast<int>(out.size()) < target; ++attempt) {
    const Vec3 p = l.center + Vec3(2 * u(rng) - 1, 2 * u(rng) - 1, 2 * u(rng) - 1).cwiseProduct(inner);
    if (!in_ellipsoid(p, l.center, inner)) continue;
    bool far = true;
    for (const auto& q : out) far = far && (p - q).squaredNorm() >= kInclusionSpacing * kInclusionSpacing;
    if (far) out.push_back(p);
  }
  return out;
}

std::vector<Landmark> tissue_landmarks(const Layout& l, const Index3& dims) {
  const Vec3 n(dims[0], dims[1], dims[2]);
  const std::pair<const char*, Vec3> rel[] = {
      {"A", {0.20, 0.25, 0.0}},    {"B", {0.20, -0.20, 0.10}},  {"C", {-0.10, 0.10, 0.05}},
      {"D", {-0.15, -0.10, -0.05}}, {"E", {-0.05, 0.0, -0.20}}, {"F", {0.05, 0.05, 0.22}},
  };
  std::vector<Landmark> out;
  for (const auto& [name, r] : rel) out.push_back({name, l.center + r.cwiseProduct(n)});
  return out;
}

}  // namespace

LabelVolume resection_cavity(const Index3& dims, std::uint64_t seed) {
  const Layout l = layout_for(dims, seed);
  LabelVolume mask(Geometry{dims, Vec3::Ones(), Vec3::Zero()}, 0);
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 p(i, j, k);
        if (in_ellipsoid(p, l.center, l.brain_radii) && in_cavity(p, l)) mask.at(i, j, k) = 1;
      }
  return mask;
}

Phantom make_phantom(PhantomKind kind, const Index3& dims, std::uint64_t seed) {
  for (int d : dims)
    if (d < 16) throw std::invalid_argument("phantom dims must be at least 16 voxels per axis");
  const Geometry g{dims, Vec3::Ones(), Vec3::Zero()};
  Phantom ph{ScalarVolume(g, 0.0f), LabelVolume(g, 0), std::nullopt};

  if (kind == PhantomKind::sphere_shell) {
    const Vec3 c = 0.5 * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1);
    const double outer = 0.4 * std::min({dims[0], dims[1], dims[2]});
    const double inner = outer - std::max(2.0, 0.1 * outer);
    for (int k = 0; k < dims[2]; ++k)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i) {
          const double r = (Vec3(i, j, k) - c).norm();
          if (r > outer) continue;
          ph.image.at(i, j, k) = r > inner ? kShell : kShellInterior;
          ph.labels.at(i, j, k) = 1;
        }
    return ph;
  }

  const Layout l = layout_for(dims, seed);
  const std::vector<float> tex = texture(dims, seed);
  const bool resect = kind == PhantomKind::resected_tumor;
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 p(i, j, k);
        if (!in_ellipsoid(p, l.center, l.brain_radii)) continue;
        if (resect && in_cavity(p, l)) continue;
        const std::size_t n = g.index(i, j, k);
        const bool tumor = in_ellipsoid(p, l.tumor_center, l.tumor_radii);
        ph.image[n] = (tumor ? kTumorLevel : kParenchymaLevel) + kTextureAmplitude * tex[n];
        ph.labels[n] = tumor ? kTumor : kParenchyma;
      }
  const int reach = static_cast<int>(std::ceil(3.0 * kInclusionSigma));
  for (const auto& c : inclusions(l, seed)) {
    const Index3 lo{static_cast<int>(std::floor(c.x())) - reach, static_cast<int>(std::floor(c.y())) - reach,
                    static_cast<int>(std::floor(c.z())) - reach};
    for (int k = std::max(0, lo[2]); k <= std::min(dims[2] - 1, lo[2] + 2 * reach + 1); ++k)
      for (int j = std::max(0, lo[1]); j <= std::min(dims[1] - 1, lo[1] + 2 * reach + 1); ++j)
        for (int i = std::max(0, lo[0]); i <= std::min(dims[0] - 1, lo[0] + 2 * reach + 1); ++i) {
          const std::size_t n = g.index(i, j, k);
          if (ph.labels[n] == 0) continue;
          const double r2 = (Vec3(i, j, k) - c).squaredNorm();
          ph.image[n] += static_cast<float>(kInclusionLevel * std::exp(-0.5 * r2 / (kInclusionSigma * kInclusionSigma)));
        }
  }
  ph.landmarks = tissue_landmarks(l, dims);
  return ph;
}

ShiftCase make_resected_shift(const Index3& dims, std::uint64_t seed, double magnitude) {
  if (!(magnitude >= 0.0)) throw std::invalid_argument("shift magnitude must be nonnegative");
  Phantom pre = make_phantom(PhantomKind::two_tissue_tumor, dims, seed);
  Phantom post = make_phantom(PhantomKind::resected_tumor, dims, seed);
  const Layout l = layout_for(dims, seed);
  std::mt19937_64 rng(seed ^ 0x2545f4914f6cdd1dULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Vec3 c = l.tumor_center + Vec3(2.0 * u(rng), 2.0 * u(rng), 0.0);
  const double s = l.tumor_radii.x() * (1.0 + 0.15 * u(rng));

  const auto field_at = [&](const Vec3& x) -> Vec3 {
    Vec3 toward = c - x;
    const double r2 = toward.squaredNorm();
    toward.z() = 0.0;
    return magnitude * std::exp(0.5) / s * std::exp(-0.5 * r2 / (s * s)) * toward;
  };
  const Geometry& g = pre.image.geometry();
  ShiftCase out{pre.image, {}, pre.labels, DenseDeformation(g), {}, {}};
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) out.truth.at(i, j, k) = field_at(Vec3(i, j, k)).cast<float>();
  out.intra = warp_volume(post.image, out.truth);
  out.pre_landmarks = *pre.landmarks;
  for (const auto& lm : out.pre_landmarks) {
    // Tissue at p lands at the x solving x - d(x) = p.
    Vec3 x = lm.position;
    for (int it = 0; it < 50; ++it) x = lm.position + field_at(x);
    out.intra_landmarks.push_back({lm.name, x});
  }
  return out;
}

void add_noise(ScalarVolume& v, double fraction, std::uint64_t seed) {
  float peak = 0.0f;
  for (float x : v.voxels()) peak = std::max(peak, std::abs(x));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, fraction * peak);
  for (auto& x : v.voxels()) x = static_cast<float>(x + normal(rng));
}

}  // namespace defreg
