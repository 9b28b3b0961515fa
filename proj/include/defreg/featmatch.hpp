#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "defreg/volume.hpp"

namespace defreg {

struct FeaturePoint {
  int index = 0;                // position in the candidate block grid, x-fastest
  Index3 center{0, 0, 0};       // voxel coordinates in the floating image
  double variability = 0.0;     // intensity variance over the block
};

struct FeatureMatch {
  FeaturePoint point;
  Vec3 displacement = Vec3::Zero();  // mm
  double confidence = 0.0;           // max(0, ncc)^2
  double ncc = 0.0;
  int evaluations = 0;               // NCC evaluations performed for this feature
};

enum class Connectivity { face, vertex };

struct MatchConfig {
  Index3 block{3, 3, 3};
  Index3 window{7, 7, 3};
  double selection_fraction = 0.05;
  Connectivity connectivity = Connectivity::face;

  // Throws std::invalid_argument for even or inconsistent sizes.
  void validate() const;
  // Distance (voxels) a block center keeps from the volume boundary.
  Index3 margin() const;
};

struct FeatureSelection {
  std::vector<FeaturePoint> features;
  std::size_t candidate_count = 0;
  std::size_t target_count = 0;   // ceil(fraction * candidates)
  bool no_candidates = false;     // every candidate block had zero variance
};

// Candidate blocks tile the admissible region with stride = block size.
// They are ranked by variance (ties by index); selection walks the ranking
// and skips any block adjacent, in the candidate grid, to one already taken.
FeatureSelection select_features(const ScalarVolume& floating, const MatchConfig& cfg);

// Zero-mean normalized cross-correlation; 0 when either side is constant.
double ncc(std::span<const float> a, std::span<const float> b);

// Exhaustive NCC search over every block placement inside the window. The
// best offset maximizes NCC; ties go to the smaller displacement, then to
// lexicographic (z, y, x) order. Parallel over features.
std::vector<FeatureMatch> block_match(const ScalarVolume& floating, const ScalarVolume& reference,
                                      std::span<const FeaturePoint> features, const MatchConfig& cfg);

// World position (mm) of a feature's block center.
Vec3 feature_position(const Geometry& g, const FeaturePoint& f);

// index,cx,cy,cz,dx_mm,dy_mm,dz_mm,ncc,confidence
void write_matches_csv(std::ostream& out, std::span<const FeatureMatch> matches);

}  // namespace defreg
