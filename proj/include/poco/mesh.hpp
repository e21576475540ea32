#ifndef POCO_MESH_HPP
#define POCO_MESH_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "poco/geometry.hpp"

namespace poco {

/// Triangle mesh. Triangles are counter-clockwise when viewed from the
/// empty (outside) half-space.
struct Mesh {
    std::vector<Point3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    bool empty() const { return triangles.empty(); }
    double triangle_area(std::size_t t) const;
    Point3 triangle_normal(std::size_t t) const;  // unit, zero for degenerate
    double surface_area() const;
    Aabb bounds() const;
};

struct WatertightReport {
    bool is_closed = false;
    std::size_t boundary_edge_count = 0;
    std::size_t non_manifold_edge_count = 0;
};

/// Edge used by exactly one triangle -> boundary; by more than two -> non-manifold.
WatertightReport watertight_check(const Mesh& mesh);

/// Ray-parity point containment; requires a closed mesh for meaningful output.
bool mesh_contains(const Mesh& mesh, const Point3& q);

}  // namespace poco

#endif
