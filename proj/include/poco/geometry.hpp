#ifndef POCO_GEOMETRY_HPP
#define POCO_GEOMETRY_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace poco {

struct Point3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Point3() = default;
    Point3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Point3 operator*(double s) const { return {x * s, y * s, z * s}; }

    double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
    Point3 cross(const Point3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const;
    double norm1() const;
    double squared_norm() const { return dot(*this); }
};

/// Input surface samples, optionally with unit normals (same ordering).
struct PointCloud {
    std::vector<Point3> points;
    std::vector<Point3> normals;  // empty or same size as points

    std::size_t size() const { return points.size(); }
    bool has_normals() const { return !normals.empty(); }
    void validate() const;  // throws on empty cloud or non-unit normals
};

struct Aabb {
    Point3 min, max;

    static Aabb of(const PointCloud& cloud);
    Aabb inflated(double fraction) const;
    bool contains(const Point3& p) const;
    Point3 extent() const { return max - min; }
};

struct Neighbor {
    std::size_t index;
    double distance;
};

/// Static kd-tree over a cloud's positions. Results match knn_brute exactly:
/// ascending distance, ties broken by lower point index.
class KdTree {
public:
    explicit KdTree(const PointCloud& cloud);

    std::vector<Neighbor> knn(const Point3& q, std::size_t k) const;
    /// Single nearest neighbor under the L1 metric (same tie-break rule).
    Neighbor nearest_l1(const Point3& q) const;
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::int32_t left = -1, right = -1;
        std::uint32_t point = 0;
        std::uint8_t axis = 0;
    };

    std::uint32_t build(std::uint32_t* begin, std::uint32_t* end, int depth);

    std::vector<Point3> points_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

std::vector<Neighbor> knn_brute(const PointCloud& cloud, const Point3& q, std::size_t k);

/// Mean over all points of the distance to the nearest distinct-index point.
double mean_nn_distance(const PointCloud& cloud);

/// Scale about the centroid so mean_nn_distance becomes target_mean_nn.
/// Returns the scaled cloud and the applied scale factor.
std::pair<PointCloud, double> rescale_to_reference(const PointCloud& cloud,
                                                   double target_mean_nn);

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed);

struct Mesh;  // see mesh.hpp

/// Area-uniform surface sampling; each sample carries its host face normal.
PointCloud sample_surface(const Mesh& mesh, std::size_t count, std::uint64_t seed);

}  // namespace poco

#endif
