#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "defreg/eval.hpp"
#include "defreg/reference.hpp"

using namespace defreg;

namespace {

ScalarVolume ball(int n, const Vec3& c, double r) {
  ScalarVolume v(Geometry{{n, n, n}, Vec3::Ones(), Vec3::Zero()}, 0.0f);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if ((Vec3(i, j, k) - c).norm() <= r) v.at(i, j, k) = 1000.0f;
  return v;
}

std::vector<Vec3> cloud(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Vec3> p;
  for (int i = 0; i < n; ++i) p.emplace_back(u(rng), u(rng), u(rng));
  return p;
}

}  // namespace

TEST_CASE("hausdorff basics") {
  std::mt19937_64 rng(1);
  const auto a = cloud(rng, 200, 10.0);
  CHECK(hausdorff(a, a).H == 0.0);

  const std::vector<Vec3> two{Vec3(0, 0, 0), Vec3(10, 0, 0)};
  const std::vector<Vec3> one{Vec3(0, 0, 0)};
  const auto h = hausdorff(two, one);
  CHECK(h.H == 10.0);
  CHECK(h.h_ab == 10.0);
  CHECK(h.h_ba == 0.0);

  const auto b = cloud(rng, 300, 12.0);
  const auto fast = hausdorff(a, b);
  CHECK(fast.H == reference::hausdorff(a, b));
  CHECK(fast.h_ab == reference::directed_hausdorff(a, b));
  CHECK(fast.h_ba == reference::directed_hausdorff(b, a));
  CHECK(hausdorff(b, a).H == fast.H);

  CHECK_THROWS_AS(hausdorff(a, std::vector<Vec3>{}), std::invalid_argument);
}

TEST_CASE("percentile hausdorff uses nearest rank") {
  std::vector<Vec3> a, b{Vec3(0, 0, 0)};
  for (int i = 1; i <= 10; ++i) a.emplace_back(i, 0, 0);
  // Distances 1..10 from a to b; the 90th nearest-rank percentile is 9.
  CHECK(hausdorff(a, b, 90.0).h_ab == 9.0);
  CHECK(hausdorff(a, b, 50.0).h_ab == 5.0);
  CHECK(hausdorff(a, b, 100.0).h_ab == 10.0);
}

TEST_CASE("canny on flat and spherical volumes") {
  const ScalarVolume flat(Geometry{{24, 24, 24}, Vec3::Ones(), Vec3::Zero()}, 7.0f);
  CHECK(canny_edges(flat).empty());

  const Vec3 c(20, 20, 20);
  const double r = 10.0;
  const auto edges = canny_edges(ball(40, c, r));
  REQUIRE(!edges.empty());
  for (const auto& e : edges) CHECK(std::abs((e - c).norm() - r) <= 1.5);

  // Coverage on a Fibonacci sampling of the sphere.
  int covered = 0;
  const int samples = 400;
  for (int s = 0; s < samples; ++s) {
    const double z = 1.0 - 2.0 * (s + 0.5) / samples;
    const double phi = s * M_PI * (3.0 - std::sqrt(5.0));
    const Vec3 p = c + r * Vec3(std::sqrt(1 - z * z) * std::cos(phi), std::sqrt(1 - z * z) * std::sin(phi), z);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : edges) best = std::min(best, (e - p).norm());
    covered += best <= 1.5;
  }
  CHECK(covered >= 0.9 * samples);

  CannyParams high;
  high.low = 1.1;
  high.high = 1.2;
  CHECK(canny_edges(ball(40, c, r), high).empty());

  CannyParams bad;
  bad.low = 0.5;
  bad.high = 0.2;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("canny is translation equivariant") {
  const auto a = canny_edges(ball(40, Vec3(18, 19, 20), 8.0));
  const auto b = canny_edges(ball(40, Vec3(21, 19, 20), 8.0));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((b[i] - a[i] - Vec3(3, 0, 0)).norm() == 0.0);
}

TEST_CASE("edge hausdorff") {
  const auto a = ball(40, Vec3(20, 20, 20), 9.0);
  CHECK(edge_hd(a, a).hd.H == 0.0);
  const auto b = ball(40, Vec3(23, 20, 20), 9.0);
  const double h = edge_hd(a, b).hd.H;
  CHECK(h >= 1.5);
  CHECK(h <= 4.5);
  const ScalarVolume flat(a.geometry(), 1.0f);
  CHECK_THROWS_AS(edge_hd(flat, a), DegenerateError);
}

TEST_CASE("landmark errors") {
  const Geometry g{{20, 20, 20}, Vec3::Ones(), Vec3::Zero()};
  std::vector<LandmarkPair> pairs{{"a", Vec3(5, 5, 5), Vec3(8, 9, 5)}, {"b", Vec3(10, 10, 10), Vec3(13, 14, 10)}};
  const DenseDeformation zero(g, Vec3f::Zero());
  const auto s0 = landmark_errors(pairs, zero);
  CHECK(s0.mean == doctest::Approx(5.0));
  CHECK(s0.min == doctest::Approx(5.0));
  CHECK(s0.max == doctest::Approx(5.0));

  const DenseDeformation exact(g, Vec3f(3, 4, 0));
  CHECK(landmark_errors(pairs, exact).max == doctest::Approx(0.0).epsilon(1e-12));

  pairs.push_back({"out", Vec3(50, 5, 5), Vec3(50, 5, 5)});
  const auto s = landmark_errors(pairs, exact);
  REQUIRE(s.excluded.size() == 1);
  CHECK(s.excluded[0] == "out");
  CHECK(std::isnan(s.errors[2]));
  CHECK(s.errors.size() == 3);

  CHECK_THROWS_AS(landmark_errors(std::vector<LandmarkPair>{{"x", Vec3(-9, 0, 0), Vec3::Zero()}}, exact),
                  std::invalid_argument);

  std::stringstream io;
  write_landmarks(io, pairs);
  const auto back = read_landmarks(io);
  REQUIRE(back.size() == pairs.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].name == pairs[i].name);
    CHECK(back[i].pre == pairs[i].pre);
    CHECK(back[i].intra == pairs[i].intra);
  }
  std::istringstream bad("name,pre_x\nq,1,2\n");
  CHECK_THROWS(read_landmarks(bad));
}

TEST_CASE("report formats") {
  ReportRow row;
  row.case_name = "case1";
  row.variant = "anrr";
  row.hd = 3.5;
  row.tets = 100;
  row.vertices = 40;
  LandmarkStats st;
  st.min = 1;
  st.max = 3;
  st.mean = 2;
  row.landmarks = st;
  const auto j = report_json(row);
  for (const char* k : {"HD", "Min error", "Max error", "Mean error", "# tets", "# vertices"}) CHECK(j.contains(k));
  CHECK(j["HD"] == 3.5);
  CHECK(std::string(kReportCsvHeader) == "case,variant,HD,min,max,mean,tets,vertices");
  const std::string csv = report_csv_row(row);
  CHECK(csv.rfind("case1,anrr,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), ',') == 7);
}
