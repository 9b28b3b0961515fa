#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "defreg/volume.hpp"

namespace defreg {

struct HausdorffResult {
  double H = 0.0;
  double h_ab = 0.0;
  double h_ba = 0.0;
};

// Directed distances use a k-d tree for the nearest-point queries; the values
// equal the double loop exactly. percentile < 100 replaces each directed max
// by that nearest-rank percentile of the point-to-set distances.
// Throws std::invalid_argument for an empty set.
HausdorffResult hausdorff(std::span<const Vec3> a, std::span<const Vec3> b, double percentile = 100.0);

struct CannyParams {
  double sigma = 1.0;  // voxels
  double low = 0.1;    // fractions of the largest gradient magnitude
  double high = 0.2;

  void validate() const;
};

// Gaussian smoothing, central differences, non-maximum suppression along the
// nearest of 13 lattice directions and 26-connected hysteresis. Returns edge
// voxel centers in mm, in voxel order.
std::vector<Vec3> canny_edges(const ScalarVolume& v, const CannyParams& p = {});

struct EdgeHd {
  HausdorffResult hd;
  std::size_t edges_a = 0;
  std::size_t edges_b = 0;
};

// Canny on both volumes then Hausdorff. Throws DegenerateError when either
// edge set is empty.
EdgeHd edge_hd(const ScalarVolume& warped_pre, const ScalarVolume& intra, const CannyParams& p = {},
               double percentile = 100.0);

struct LandmarkPair {
  std::string name;
  Vec3 pre = Vec3::Zero();
  Vec3 intra = Vec3::Zero();
};

// name,pre_x,pre_y,pre_z,intra_x,intra_y,intra_z
std::vector<LandmarkPair> read_landmarks(std::istream& in);
std::vector<LandmarkPair> read_landmarks(const std::filesystem::path& path);
void write_landmarks(std::ostream& out, std::span<const LandmarkPair> pairs);

struct LandmarkStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::vector<double> errors;          // NaN for excluded pairs
  std::vector<std::string> excluded;   // names outside the field extent
};

// Per pair |(pre + field(pre)) - intra| with trilinear field sampling.
// Throws std::invalid_argument when no pair is usable.
LandmarkStats landmark_errors(std::span<const LandmarkPair> pairs, const DenseDeformation& field);

struct ReportRow {
  std::string case_name;
  std::string variant;
  double hd = 0.0;
  std::optional<LandmarkStats> landmarks;
  std::size_t tets = 0;
  std::size_t vertices = 0;
};

// Keys "HD", "Min error", "Max error", "Mean error", "# tets", "# vertices".
nlohmann::json report_json(const ReportRow& row);
inline constexpr const char* kReportCsvHeader = "case,variant,HD,min,max,mean,tets,vertices";
std::string report_csv_row(const ReportRow& row);

}  // namespace defreg
