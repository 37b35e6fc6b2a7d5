#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "gtforge/error.hpp"
#include "gtforge/geom/point_cloud.hpp"

namespace gtforge {

template <typename Scalar>
struct NeighborT {
  std::size_t index = 0;
  Scalar distance = Scalar(0);
};

/// Exact k-d tree over a copy of the cloud's points.
///
/// Results are ordered by (squared distance, index), which is the same total
/// order an exhaustive scan produces, so ties resolve identically.
template <typename Scalar>
class KdTreeT {
 public:
  using Point = Point3T<Scalar>;
  using Neighbor = NeighborT<Scalar>;

  KdTreeT() = default;

  explicit KdTreeT(const PointCloudT<Scalar>& cloud, std::size_t leaf_size = 10)
      : KdTreeT(cloud.points, leaf_size) {}

  explicit KdTreeT(std::vector<Point> points, std::size_t leaf_size = 10)
      : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
      build(0, static_cast<std::uint32_t>(points_.size()));
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& point(std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }

  /// The min(k, size()) nearest points, nondecreasing distance.
  std::vector<Neighbor> knn(const Point& q, std::size_t k) const {
    if (empty()) throw Error(ErrorCode::NoData, "knn query on empty index");
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "knn requires k >= 1");
    Heap heap(std::min(k, points_.size()));
    search(0, q, heap);
    std::vector<Neighbor> out;
    out.reserve(heap.items.size());
    std::sort(heap.items.begin(), heap.items.end(), less);
    for (const auto& c : heap.items) out.push_back({c.index, std::sqrt(c.sq)});
    return out;
  }

  /// Nearest point within max_distance (inclusive), if any.
  std::optional<Neighbor> nearest(const Point& q,
                                  Scalar max_distance = std::numeric_limits<Scalar>::infinity()) const {
    if (empty()) throw Error(ErrorCode::NoData, "nearest query on empty index");
    Heap heap(1);
    heap.bound = max_distance * max_distance;
    search(0, q, heap);
    if (heap.items.empty()) return std::nullopt;
    return Neighbor{heap.items.front().index, std::sqrt(heap.items.front().sq)};
  }

 private:
  struct Node {
    // Leaf when axis < 0: [begin, end) into order_.
    int axis = -1;
    Scalar split = Scalar(0);
    std::uint32_t begin = 0, end = 0;
    std::uint32_t left = 0, right = 0;
  };

  struct Candidate {
    Scalar sq;
    std::size_t index;
  };

  static bool less(const Candidate& a, const Candidate& b) {
    return a.sq < b.sq || (a.sq == b.sq && a.index < b.index);
  }

  // Bounded max-heap keyed on (sq, index).
  struct Heap {
    explicit Heap(std::size_t cap) : capacity(cap) { items.reserve(cap); }
    std::size_t capacity;
    Scalar bound = std::numeric_limits<Scalar>::infinity();
    std::vector<Candidate> items;

    bool full() const { return items.size() == capacity; }
    Scalar worst() const { return full() ? items.front().sq : bound; }

    void offer(const Candidate& c) {
      if (c.sq > bound) return;
      if (!full()) {
        items.push_back(c);
        std::push_heap(items.begin(), items.end(), less);
      } else if (less(c, items.front())) {
        std::pop_heap(items.begin(), items.end(), less);
        items.back() = c;
        std::push_heap(items.begin(), items.end(), less);
      }
    }
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= leaf_size_) {
      nodes_[id].begin = begin;
      nodes_[id].end = end;
      return id;
    }
    Point lo = points_[order_[begin]], hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    const Scalar split = points_[order_[mid]][axis];
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    Node& n = nodes_[id];
    n.axis = axis;
    n.split = split;
    n.left = left;
    n.right = right;
    return id;
  }

  void search(std::uint32_t id, const Point& q, Heap& heap) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = order_[i];
        heap.offer({(points_[idx] - q).squaredNorm(), idx});
      }
      return;
    }
    // Left subtree holds coordinates <= split, right holds >= split.
    const Scalar diff = q[n.axis] - n.split;
    const std::uint32_t near = diff <= Scalar(0) ? n.left : n.right;
    const std::uint32_t far = diff <= Scalar(0) ? n.right : n.left;
    search(near, q, heap);
    if (diff * diff <= heap.worst()) search(far, q, heap);
  }

  std::vector<Point> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_ = 10;
};

using KdTree = KdTreeT<double>;
using Neighbor = NeighborT<double>;

}  // namespace gtforge
