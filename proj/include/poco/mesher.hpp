#ifndef POCO_MESHER_HPP
#define POCO_MESHER_HPP

#include <array>
#include <cstdint>
#include <unordered_map>

#include "poco/geometry.hpp"
#include "poco/mesh.hpp"
#include "poco/model.hpp"

namespace poco {

/// Uniform sampling lattice. dims counts corners per axis, so cells per axis
/// are dims - 1.
struct GridSpec {
    Point3 origin;
    double step = 0.0;
    std::array<std::size_t, 3> dims{2, 2, 2};

    void validate() const;
    Point3 corner(std::size_t i, std::size_t j, std::size_t k) const {
        return origin + Point3{step * static_cast<double>(i),
                               step * static_cast<double>(j),
                               step * static_cast<double>(k)};
    }
    Aabb bounds() const;
    /// Grid over box with a given corner resolution per axis.
    static GridSpec covering(const Aabb& box, std::size_t resolution);
    static GridSpec with_step(const Aabb& box, double step);
};

constexpr double kOccupancyThreshold = 0.5;  // prob >= threshold means Full

/// Sparse corner store; each corner is evaluated at most once per run.
class OccupancyCache {
public:
    explicit OccupancyCache(const OccupancyField& field, const GridSpec& grid)
        : field_(field), grid_(grid) {}

    bool full(std::size_t i, std::size_t j, std::size_t k);
    bool evaluated(std::size_t i, std::size_t j, std::size_t k) const;
    /// Full if evaluated and full, Empty otherwise (unevaluated reads as Empty).
    bool full_or_default(std::size_t i, std::size_t j, std::size_t k) const;
    std::size_t evaluated_count() const { return values_.size(); }

private:
    const OccupancyField& field_;
    const GridSpec& grid_;
    std::unordered_map<std::uint64_t, double> values_;
};

/// Bisection along [a, b] for the 0.5-probability crossing; endpoints must
/// disagree. Returns the midpoint of the final interval.
Point3 dichotomic_edge_vertex(const OccupancyField& field, const Point3& a,
                              const Point3& b, int iters = 10);

Mesh mc_dense(const OccupancyField& field, const GridSpec& grid, int dichotomy_iters = 10);

/// Region-growing marching cubes: evaluate the corners of each seed's cell,
/// grow the evaluated set along the empty/full frontier (Chebyshev radius 2),
/// then triangulate every cell holding at least one evaluated Full corner.
Mesh mc_regro(const OccupancyField& field, const GridSpec& grid, const PointCloud& seeds,
              int dichotomy_iters = 10);

/// Instrumentation shim for query counting.
class CountingField : public OccupancyField {
public:
    explicit CountingField(const OccupancyField& inner) : inner_(inner) {}
    double query(const Point3& q) const override {
        ++count_;
        return inner_.query(q);
    }
    std::size_t count() const { return count_; }
    void reset() { count_ = 0; }

private:
    const OccupancyField& inner_;
    mutable std::size_t count_ = 0;
};

}  // namespace poco

#endif
