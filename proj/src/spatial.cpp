#include "defreg/spatial.hpp"

#include <algorithm>
#include <numeric>

namespace defreg {

namespace {
constexpr int kLeafSize = 12;

bool closer(const Neighbour& a, const Neighbour& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}
}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  perm_.resize(points_.size());
  std::iota(perm_.begin(), perm_.end(), 0);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<int>(points_.size()), 0);
  }
}

int KdTree::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;
  Vec3 lo = points_[perm_[begin]], hi = lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[perm_[i]]);
    hi = hi.cwiseMax(points_[perm_[i]]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  (void)depth;
  const int mid = begin + (end - begin) / 2;
  std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end, [&](int a, int b) {
    return points_[a][axis] < points_[b][axis] || (points_[a][axis] == points_[b][axis] && a < b);
  });
  const double split = points_[perm_[mid]][axis];
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(int node, const Vec3& q, int k, std::vector<Neighbour>& heap) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const Neighbour cand{perm_[i], (points_[perm_[i]] - q).squaredNorm()};
      if (static_cast<int>(heap.size()) < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int first = diff < 0.0 ? n.left : n.right;
  const int second = diff < 0.0 ? n.right : n.left;
  search(first, q, k, heap);
  // <= keeps equal-distance candidates reachable for the index tie-break.
  if (static_cast<int>(heap.size()) < k || diff * diff <= heap.front().dist2) search(second, q, k, heap);
}

Neighbour KdTree::nearest(const Vec3& q) const {
  auto r = knn(q, 1);
  return r.empty() ? Neighbour{} : r.front();
}

std::vector<Neighbour> KdTree::knn(const Vec3& q, int k) const {
  std::vector<Neighbour> heap;
  if (points_.empty() || k <= 0) return heap;
  heap.reserve(k);
  search(0, q, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

}  // namespace defreg
