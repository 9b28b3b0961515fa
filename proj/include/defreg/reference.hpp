#pragma once

// Straightforward serial versions of the parallel kernels. They share the
// contracts of the production functions and exist so tests and the benchmark
// can compare the two.

#include <span>
#include <vector>

#include "defreg/featmatch.hpp"
#include "defreg/sparse.hpp"
#include "defreg/spatial.hpp"
#include "defreg/tetmesh.hpp"
#include "defreg/volume.hpp"

namespace defreg::reference {

ScalarVolume warp_volume(const ScalarVolume& v, const DenseDeformation& d, Interp interp = Interp::linear);

// Scans every tet for every voxel; the lowest containing tet index wins.
DenseDeformation mesh_to_dense(const TetMesh& mesh, std::span<const double> U, const Geometry& geom);

// Calls ncc() on gathered blocks for every offset.
std::vector<FeatureMatch> block_match(const ScalarVolume& floating, const ScalarVolume& reference,
                                      std::span<const FeaturePoint> features, const MatchConfig& cfg);

// Double loop.
double directed_hausdorff(std::span<const Vec3> a, std::span<const Vec3> b);
double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b);

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x);

// Full sort by (distance, index).
std::vector<Neighbour> knn(std::span<const Vec3> points, const Vec3& q, int k);

}  // namespace defreg::reference
