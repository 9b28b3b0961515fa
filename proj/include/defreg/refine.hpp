#pragma once

#include "defreg/sizing.hpp"
#include "defreg/tetmesh.hpp"

namespace defreg {

struct RefineOptions {
  int max_passes = 5;
  double threshold = 1.4142135623730951;  // metric edge length bound
};

struct RefineResult {
  TetMesh mesh;
  SizingField field;              // extended to new vertices
  int passes = 0;
  std::size_t splits = 0;
  std::size_t residual_long_edges = 0;
  bool exhausted = false;         // budget ran out with long edges left
};

// Trapezoidal metric length of segment ab with endpoint tensors.
double metric_edge_length(const Vec3& a, const Vec3& b, const Mat3& ma, const Mat3& mb);

// Longest-edge propagating bisection. Each pass collects the edges longer
// than the threshold in the metric and bisects them longest first. Before an
// edge is split, every incident tet whose own longest (Euclidean) edge is
// different gets that edge split first, recursively. Splitting an edge splits
// all tets around it, so the mesh stays conforming. New vertices take the
// mean of the endpoint sizes; children inherit label and removed flag.
RefineResult refine_to_metric(const TetMesh& mesh, const SizingField& field, const RefineOptions& opt = {});

}  // namespace defreg
