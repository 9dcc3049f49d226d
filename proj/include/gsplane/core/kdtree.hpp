// Copyright Contributors to the gsplane Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "gsplane/core/errors.hpp"

namespace gsp {

/// Exact nearest-neighbor search over fixed-dimension points.
///
/// The per-pair squared distance accumulates coordinate differences in
/// ascending axis order, matching a plain brute-force loop term for term, so
/// query results are exactly the brute-force minima (not just within
/// tolerance).
template <int D>
class KdTree {
public:
    using Point = Eigen::Matrix<double, D, 1>;

    static double squared_distance(const Point& a, const Point& b) {
        double s = 0.0;
        for (int i = 0; i < D; ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return s;
    }

    explicit KdTree(std::vector<Point> points) : points_(std::move(points)) {
        if (points_.empty())
            throw EmptySet("kdtree: no points");
        order_.resize(points_.size());
        for (size_t i = 0; i < order_.size(); ++i)
            order_[i] = i;
        nodes_.reserve(points_.size());
        root_ = build(0, points_.size(), 0);
    }

    struct Result {
        double squared_distance;
        size_t index;
    };

    Result nearest(const Point& q) const {
        Result best{std::numeric_limits<double>::infinity(), 0};
        search(root_, q, best);
        return best;
    }

private:
    struct Node {
        size_t point = 0;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    int build(size_t begin, size_t end, int depth) {
        if (begin >= end)
            return -1;
        const int axis = depth % D;
        const size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<long>(begin),
                         order_.begin() + static_cast<long>(mid),
                         order_.begin() + static_cast<long>(end), [&](size_t a, size_t b) {
                             if (points_[a][axis] != points_[b][axis])
                                 return points_[a][axis] < points_[b][axis];
                             return a < b; // stable under duplicate coordinates
                         });
        Node node;
        node.point = order_[mid];
        node.axis = axis;
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        const int left = build(begin, mid, depth + 1);
        const int right = build(mid + 1, end, depth + 1);
        nodes_[static_cast<size_t>(id)].left = left;
        nodes_[static_cast<size_t>(id)].right = right;
        return id;
    }

    void search(int id, const Point& q, Result& best) const {
        if (id < 0)
            return;
        const Node& node = nodes_[static_cast<size_t>(id)];
        const Point& p = points_[node.point];
        const double d2 = squared_distance(q, p);
        if (d2 < best.squared_distance ||
            (d2 == best.squared_distance && node.point < best.index)) {
            best.squared_distance = d2;
            best.index = node.point;
        }
        const double delta = q[node.axis] - p[node.axis];
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        search(near, q, best);
        if (delta * delta <= best.squared_distance)
            search(far, q, best);
    }

    std::vector<Point> points_;
    std::vector<size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace gsp
