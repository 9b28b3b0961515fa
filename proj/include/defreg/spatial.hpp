#pragma once

#include <span>
#include <utility>
#include <vector>

#include "defreg/common.hpp"

namespace defreg {

struct Neighbour {
  int index = -1;
  double dist2 = 0.0;
};

// Static 3-d tree over a point cloud. Queries are exact; equal distances are
// ordered by point index so results never depend on traversal order.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(int i) const { return points_[i]; }

  Neighbour nearest(const Vec3& q) const;
  // Up to k neighbours sorted by (distance, index).
  std::vector<Neighbour> knn(const Vec3& q, int k) const;

 private:
  struct Node {
    int begin, end;     // range in perm_
    int left = -1, right = -1;
    int axis = -1;      // -1 for leaves
    double split = 0.0;
  };
  int build(int begin, int end, int depth);
  void search(int node, const Vec3& q, int k, std::vector<Neighbour>& heap) const;

  std::vector<Vec3> points_;
  std::vector<int> perm_;
  std::vector<Node> nodes_;
};

}  // namespace defreg
