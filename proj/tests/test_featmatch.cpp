#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "defreg/featmatch.hpp"
#include "defreg/parallel.hpp"
#include "defreg/phantom.hpp"
#include "defreg/reference.hpp"

using namespace defreg;

namespace {

Geometry cube(int n) { return Geometry{{n, n, n}, Vec3::Ones(), Vec3::Zero()}; }

ScalarVolume textured(int n, std::uint64_t seed) {
  return make_phantom(PhantomKind::two_tissue_tumor, {n, n, n}, seed).image;
}

double block_variance(const ScalarVolume& v, const Index3& c, const Index3& b) {
  double s = 0.0, s2 = 0.0;
  int n = 0;
  for (int k = -b[2] / 2; k <= b[2] / 2; ++k)
    for (int j = -b[1] / 2; j <= b[1] / 2; ++j)
      for (int i = -b[0] / 2; i <= b[0] / 2; ++i) {
        const double x = v.at(c[0] + i, c[1] + j, c[2] + k);
        s += x;
        s2 += x * x;
        ++n;
      }
  return s2 / n - (s / n) * (s / n);
}

}  // namespace

TEST_CASE("ncc identities") {
  std::vector<float> a{1, 4, 2, 8, 5, 7, 3, 6, 9};
  std::vector<float> neg, aff;
  for (float x : a) {
    neg.push_back(-x);
    aff.push_back(3 * x + 7);
  }
  CHECK(ncc(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ncc(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(ncc(a, aff) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ncc(a, std::vector<float>(9, 2.0f)) == 0.0);
}

TEST_CASE("constant volume yields no features") {
  const ScalarVolume v(cube(24), 42.0f);
  const FeatureSelection s = select_features(v, MatchConfig{});
  CHECK(s.features.empty());
  CHECK(s.no_candidates);
}

TEST_CASE("selection count follows the fraction") {
  const ScalarVolume v = textured(64, 1);
  MatchConfig cfg;
  const FeatureSelection s = select_features(v, cfg);
  CHECK(s.target_count == static_cast<std::size_t>(std::ceil(0.05 * s.candidate_count)));
  CHECK(s.features.size() <= s.target_count);
  CHECK(s.features.size() == s.target_count);
  const Index3 m = cfg.margin();
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    const auto& f = s.features[i];
    for (int a = 0; a < 3; ++a) {
      CHECK(f.center[a] >= m[a]);
      CHECK(f.center[a] <= v.dims()[a] - 1 - m[a]);
    }
    if (i > 0) CHECK(f.index > s.features[i - 1].index);
    CHECK(f.variability == doctest::Approx(block_variance(v, f.center, cfg.block)));
  }
}

TEST_CASE("selected features are not face-adjacent in the candidate grid") {
  const ScalarVolume v = textured(48, 2);
  MatchConfig cfg;
  const auto s = select_features(v, cfg);
  for (std::size_t a = 0; a < s.features.size(); ++a)
    for (std::size_t b = a + 1; b < s.features.size(); ++b) {
      int manhattan = 0;
      for (int d = 0; d < 3; ++d) manhattan += std::abs(s.features[a].center[d] - s.features[b].center[d]) / cfg.block[d];
      CHECK(manhattan > 1);
    }
}

TEST_CASE("single bright voxel ranks first") {
  ScalarVolume v(cube(30), 0.0f);
  v.at(17, 12, 14) = 100.0f;
  const auto s = select_features(v, MatchConfig{});
  REQUIRE(!s.features.empty());
  const auto& c = s.features.front().center;
  CHECK(std::abs(c[0] - 17) <= 1);
  CHECK(std::abs(c[1] - 12) <= 1);
  CHECK(std::abs(c[2] - 14) <= 1);
}

TEST_CASE("block matching identity and one-voxel shift") {
  const ScalarVolume v = textured(40, 3);
  MatchConfig cfg;
  const auto s = select_features(v, cfg);
  const auto same = block_match(v, v, s.features, cfg);
  for (const auto& m : same) {
    CHECK(m.displacement.norm() == 0.0);
    CHECK(m.ncc == doctest::Approx(1.0));
    CHECK(m.evaluations <= 25);
  }

  ScalarVolume shifted(v.geometry());
  for (int k = 0; k < 40; ++k)
    for (int j = 0; j < 40; ++j)
      for (int i = 1; i < 40; ++i) shifted.at(i, j, k) = v.at(i - 1, j, k);
  const auto moved = block_match(v, shifted, s.features, cfg);
  for (const auto& m : moved) {
    CHECK(m.displacement.x() == 1.0);
    CHECK(m.displacement.y() == 0.0);
    CHECK(m.displacement.z() == 0.0);
  }
}

TEST_CASE("displacements respect the window and anisotropic spacing") {
  ScalarVolume v = textured(40, 4);
  Geometry g = v.geometry();
  g.spacing = Vec3(0.5, 0.75, 2.0);
  ScalarVolume a(g), b(g);
  std::mt19937 rng(5);
  std::normal_distribution<float> n(0, 30);
  for (std::size_t i = 0; i < v.size(); ++i) {
    a[i] = v[i];
    b[i] = v[i] + n(rng);
  }
  MatchConfig cfg;
  cfg.window = {9, 7, 5};
  const auto s = select_features(a, cfg);
  for (const auto& m : block_match(a, b, s.features, cfg)) {
    CHECK(std::abs(m.displacement.x()) <= 3 * 0.5 + 1e-12);
    CHECK(std::abs(m.displacement.y()) <= 2 * 0.75 + 1e-12);
    CHECK(std::abs(m.displacement.z()) <= 1 * 2.0 + 1e-12);
    CHECK(m.evaluations == 7 * 5 * 3);
    CHECK(m.confidence >= 0.0);
    CHECK(m.confidence == doctest::Approx(std::max(0.0, m.ncc) * std::max(0.0, m.ncc)));
  }
}

TEST_CASE("matching is invariant to affine intensity rescaling") {
  const ScalarVolume v = textured(40, 6);
  DenseDeformation d(v.geometry(), Vec3f(1.0f, -1.0f, 0.0f));
  const ScalarVolume w = warp_volume(v, d);
  ScalarVolume w2(w.geometry());
  for (std::size_t i = 0; i < w.size(); ++i) w2[i] = 0.5f * w[i] + 20.0f;
  MatchConfig cfg;
  const auto s = select_features(v, cfg);
  const auto a = block_match(v, w, s.features, cfg);
  const auto b = block_match(v, w2, s.features, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].displacement == b[i].displacement);
}

TEST_CASE("parallel matching equals the serial reference and is thread independent") {
  const ScalarVolume v = textured(40, 7);
  DenseDeformation d(v.geometry(), Vec3f(0.6f, -1.3f, 0.2f));
  const ScalarVolume w = warp_volume(v, d);
  MatchConfig cfg;
  const auto s = select_features(v, cfg);
  const auto ref = reference::block_match(v, w, s.features, cfg);
  for (int t : {1, 3}) {
    set_thread_count(t);
    const auto par = block_match(v, w, s.features, cfg);
    REQUIRE(par.size() == ref.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].displacement == ref[i].displacement);
      CHECK(par[i].ncc == doctest::Approx(ref[i].ncc).epsilon(1e-9));
    }
  }
  set_thread_count(0);
}

TEST_CASE("config validation and csv") {
  MatchConfig cfg;
  cfg.block = {4, 3, 3};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.block = {3, 3, 3};
  cfg.window = {7, 7, 1};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  FeatureMatch m;
  m.point.index = 4;
  m.point.center = {5, 6, 7};
  m.displacement = Vec3(1, 0, -1);
  m.ncc = 0.5;
  m.confidence = 0.25;
  std::ostringstream out;
  write_matches_csv(out, std::vector<FeatureMatch>{m});
  CHECK(out.str().find("4,5,6,7,") != std::string::npos);
}
