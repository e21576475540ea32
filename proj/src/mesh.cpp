#include "poco/mesh.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>

namespace poco {

double Mesh::triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point3 ab = vertices[tri[1]] - vertices[tri[0]];
    const Point3 ac = vertices[tri[2]] - vertices[tri[0]];
    return 0.5 * ab.cross(ac).norm();
}

Point3 Mesh::triangle_normal(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point3 ab = vertices[tri[1]] - vertices[tri[0]];
    const Point3 ac = vertices[tri[2]] - vertices[tri[0]];
    Point3 n = ab.cross(ac);
    const double len = n.norm();
    if (len == 0.0) return {0, 0, 0};
    return n * (1.0 / len);
}

double Mesh::surface_area() const {
    double total = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) total += triangle_area(t);
    return total;
}

Aabb Mesh::bounds() const {
    if (vertices.empty()) throw std::invalid_argument("empty mesh has no bounds");
    PointCloud cloud;
    cloud.points = vertices;
    return Aabb::of(cloud);
}

WatertightReport watertight_check(const Mesh& mesh) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
    for (const auto& tri : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            std::uint32_t a = tri[e], b = tri[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edge_use[{a, b}];
        }
    }
    WatertightReport report;
    for (const auto& [edge, uses] : edge_use) {
        if (uses == 1) ++report.boundary_edge_count;
        if (uses > 2) ++report.non_manifold_edge_count;
    }
    report.is_closed =
        report.boundary_edge_count == 0 && report.non_manifold_edge_count == 0;
    return report;
}

namespace {

// Moeller-Trumbore, counting only forward hits (t > 0).
bool ray_hits_triangle(const Point3& origin, const Point3& dir, const Point3& a,
                       const Point3& b, const Point3& c) {
    constexpr double eps = 1e-12;
    const Point3 ab = b - a, ac = c - a;
    const Point3 pvec = dir.cross(ac);
    const double det = ab.dot(pvec);
    if (std::abs(det) < eps) return false;
    const double inv_det = 1.0 / det;
    const Point3 tvec = origin - a;
    const double u = tvec.dot(pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return false;
    const Point3 qvec = tvec.cross(ab);
    const double v = dir.dot(qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return false;
    const double t = ac.dot(qvec) * inv_det;
    return t > eps;
}

}  // namespace

bool mesh_contains(const Mesh& mesh, const Point3& q) {
    // Fixed direction with a small irrational jitter applied when a retry is
    // needed, so a degenerate edge/vertex hit cannot flip the parity silently.
    Point3 dir{0.577350269189626, 0.577350269189626, 0.577350269189626};
    for (int attempt = 0; attempt < 4; ++attempt) {
        int crossings = 0;
        bool degenerate = false;
        for (const auto& tri : mesh.triangles) {
            const Point3& a = mesh.vertices[tri[0]];
            const Point3& b = mesh.vertices[tri[1]];
            const Point3& c = mesh.vertices[tri[2]];
            // Near-plane queries are where edge hits get double counted;
            // detect them by re-testing with a sign-flipped barycentric margin.
            if (ray_hits_triangle(q, dir, a, b, c)) ++crossings;
            const Point3 n = (b - a).cross(c - a);
            const double denom = n.dot(dir);
            if (denom != 0.0) {
                const double t = n.dot(a - q) / denom;
                if (t > 0) {
                    const Point3 hit = q + dir * t;
                    // Edge proximity check in barycentric coordinates.
                    const Point3 v0 = b - a, v1 = c - a, v2 = hit - a;
                    const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
                    const double d20 = v2.dot(v0), d21 = v2.dot(v1);
                    const double den = d00 * d11 - d01 * d01;
                    if (den != 0.0) {
                        const double bv = (d11 * d20 - d01 * d21) / den;
                        const double bw = (d00 * d21 - d01 * d20) / den;
                        const double margin = 1e-9;
                        const bool near_border =
                            std::abs(bv) < margin || std::abs(bw) < margin ||
                            std::abs(1.0 - bv - bw) < margin;
                        if (near_border && bv > -margin && bw > -margin &&
                            bv + bw < 1.0 + margin)
                            degenerate = true;
                    }
                }
            }
        }
        if (!degenerate) return (crossings % 2) == 1;
        dir = {dir.x + 1.3e-4 * (attempt + 1), dir.y - 0.7e-4 * (attempt + 1),
               dir.z + 0.31e-4 * (attempt + 1)};
        const double len = dir.norm();
        dir = dir * (1.0 / len);
    }
    // Give up on jitter; report the last parity.
    int crossings = 0;
    for (const auto& tri : mesh.triangles)
        if (ray_hits_triangle(q, dir, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                              mesh.vertices[tri[2]]))
            ++crossings;
    return (crossings % 2) == 1;
}

}  // namespace poco
