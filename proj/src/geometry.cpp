#include "poco/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>

#include "poco/mesh.hpp"

namespace poco {

double Point3::norm() const { return std::sqrt(squared_norm()); }
double Point3::norm1() const { return std::abs(x) + std::abs(y) + std::abs(z); }

void PointCloud::validate() const {
    if (points.empty()) throw std::invalid_argument("empty point cloud");
    if (!normals.empty()) {
        if (normals.size() != points.size())
            throw std::invalid_argument("normal count does not match point count");
        for (const Point3& n : normals) {
            if (std::abs(n.norm() - 1.0) > 1e-4)
                throw std::invalid_argument("normal is not unit length");
        }
    }
}

Aabb Aabb::of(const PointCloud& cloud) {
    cloud.validate();
    Aabb box{cloud.points[0], cloud.points[0]};
    for (const Point3& p : cloud.points) {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.min.z = std::min(box.min.z, p.z);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
        box.max.z = std::max(box.max.z, p.z);
    }
    return box;
}

Aabb Aabb::inflated(double fraction) const {
    Point3 pad = (max - min) * (0.5 * fraction);
    return {min - pad, max + pad};
}

bool Aabb::contains(const Point3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
}

namespace {

double coord(const Point3& p, int axis) {
    switch (axis) {
        case 0: return p.x;
        case 1: return p.y;
        default: return p.z;
    }
}

// (distance, index) ordering shared by brute force and the tree.
bool neighbor_less(const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.index < b.index;
}

}  // namespace

KdTree::KdTree(const PointCloud& cloud) : points_(cloud.points) {
    if (points_.empty()) throw std::invalid_argument("empty point cloud");
    std::vector<std::uint32_t> order(points_.size());
    std::iota(order.begin(), order.end(), 0u);
    nodes_.reserve(points_.size());
    root_ = static_cast<std::int32_t>(build(order.data(), order.data() + order.size(), 0));
}

std::uint32_t KdTree::build(std::uint32_t* begin, std::uint32_t* end, int depth) {
    const int axis = depth % 3;
    std::uint32_t* mid = begin + (end - begin) / 2;
    std::nth_element(begin, mid, end, [&](std::uint32_t a, std::uint32_t b) {
        double ca = coord(points_[a], axis), cb = coord(points_[b], axis);
        if (ca != cb) return ca < cb;
        return a < b;
    });
    Node node;
    node.point = *mid;
    node.axis = static_cast<std::uint8_t>(axis);
    const std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(node);
    if (mid != begin)
        nodes_[id].left = static_cast<std::int32_t>(build(begin, mid, depth + 1));
    if (mid + 1 != end)
        nodes_[id].right = static_cast<std::int32_t>(build(mid + 1, end, depth + 1));
    return id;
}

std::vector<Neighbor> KdTree::knn(const Point3& q, std::size_t k) const {
    if (k == 0) throw std::invalid_argument("k must be positive");
    k = std::min(k, points_.size());

    // Max-heap of the current best k candidates, worst on top.
    auto worse = [](const Neighbor& a, const Neighbor& b) { return neighbor_less(a, b); };
    std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> heap(worse);

    auto visit = [&](auto&& self, std::int32_t id) -> void {
        if (id < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        const Point3& p = points_[node.point];
        Neighbor cand{node.point, (p - q).norm()};
        if (heap.size() < k) {
            heap.push(cand);
        } else if (neighbor_less(cand, heap.top())) {
            heap.pop();
            heap.push(cand);
        }
        const double delta = coord(q, node.axis) - coord(p, node.axis);
        const std::int32_t near = delta < 0 ? node.left : node.right;
        const std::int32_t far = delta < 0 ? node.right : node.left;
        self(self, near);
        if (heap.size() < k || std::abs(delta) <= heap.top().distance) self(self, far);
    };
    visit(visit, root_);

    std::vector<Neighbor> result(heap.size());
    for (std::size_t i = result.size(); i-- > 0;) {
        result[i] = heap.top();
        heap.pop();
    }
    return result;
}

Neighbor KdTree::nearest_l1(const Point3& q) const {
    Neighbor best{points_.size(), std::numeric_limits<double>::infinity()};
    auto visit = [&](auto&& self, std::int32_t id) -> void {
        if (id < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        const Point3& p = points_[node.point];
        const Neighbor cand{node.point, (p - q).norm1()};
        if (neighbor_less(cand, best)) best = cand;
        const double delta = coord(q, node.axis) - coord(p, node.axis);
        const std::int32_t near = delta < 0 ? node.left : node.right;
        const std::int32_t far = delta < 0 ? node.right : node.left;
        self(self, near);
        // The axis gap lower-bounds the L1 distance to the far half-space.
        if (std::abs(delta) <= best.distance) self(self, far);
    };
    visit(visit, root_);
    return best;
}

std::vector<Neighbor> knn_brute(const PointCloud& cloud, const Point3& q, std::size_t k) {
    if (cloud.points.empty()) throw std::invalid_argument("empty point cloud");
    if (k == 0) throw std::invalid_argument("k must be positive");
    std::vector<Neighbor> all(cloud.points.size());
    for (std::size_t i = 0; i < cloud.points.size(); ++i)
        all[i] = {i, (cloud.points[i] - q).norm()};
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      neighbor_less);
    all.resize(k);
    return all;
}

double mean_nn_distance(const PointCloud& cloud) {
    const std::size_t n = cloud.size();
    if (n < 2) throw std::invalid_argument("mean_nn_distance needs at least 2 points");
    KdTree tree(cloud);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // Self is always the first hit at distance 0; take the second.
        auto nn = tree.knn(cloud.points[i], 2);
        sum += nn[0].index == i ? nn[1].distance : nn[0].distance;
    }
    return sum / static_cast<double>(n);
}

std::pair<PointCloud, double> rescale_to_reference(const PointCloud& cloud,
                                                   double target_mean_nn) {
    if (target_mean_nn <= 0.0) throw std::invalid_argument("target mean-nn must be positive");
    const double current = mean_nn_distance(cloud);
    if (current == 0.0) throw std::invalid_argument("zero nearest-neighbor distance");
    const double scale = target_mean_nn / current;

    Point3 centroid{0, 0, 0};
    for (const Point3& p : cloud.points) centroid = centroid + p;
    centroid = centroid * (1.0 / static_cast<double>(cloud.size()));

    PointCloud out = cloud;
    for (Point3& p : out.points) p = centroid + (p - centroid) * scale;
    return {std::move(out), scale};
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    PointCloud out = cloud;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Point3& p : out.points) {
        p.x += gauss(rng);
        p.y += gauss(rng);
        p.z += gauss(rng);
    }
    return out;
}

PointCloud sample_surface(const Mesh& mesh, std::size_t count, std::uint64_t seed) {
    std::vector<double> cumulative;
    cumulative.reserve(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        total += mesh.triangle_area(t);
        cumulative.push_back(total);
    }
    if (total <= 0.0) throw std::invalid_argument("mesh has no triangle with positive area");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    PointCloud out;
    out.points.reserve(count);
    out.normals.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double pick = uni(rng) * total;
        const std::size_t t = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
        const std::size_t ti = std::min(t, mesh.triangles.size() - 1);
        const auto& tri = mesh.triangles[ti];
        const Point3& a = mesh.vertices[tri[0]];
        const Point3& b = mesh.vertices[tri[1]];
        const Point3& c = mesh.vertices[tri[2]];
        double u = uni(rng), v = uni(rng);
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        out.points.push_back(a + (b - a) * u + (c - a) * v);
        out.normals.push_back(mesh.triangle_normal(ti));
    }
    return out;
}

}  // namespace poco
