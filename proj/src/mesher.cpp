#include "poco/mesher.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

#include "mc_tables.hpp"

namespace poco {

void GridSpec::validate() const {
    if (step <= 0.0) throw std::invalid_argument("grid step must be positive");
    for (std::size_t d : dims)
        if (d < 2) throw std::invalid_argument("grid needs at least 2 corners per axis");
}

Aabb GridSpec::bounds() const {
    return {origin, corner(dims[0] - 1, dims[1] - 1, dims[2] - 1)};
}

GridSpec GridSpec::covering(const Aabb& box, std::size_t resolution) {
    if (resolution < 2) throw std::invalid_argument("resolution must be >= 2");
    const Point3 e = box.extent();
    const double longest = std::max({e.x, e.y, e.z});
    GridSpec grid;
    grid.step = longest / static_cast<double>(resolution - 1);
    grid.origin = box.min;
    for (int a = 0; a < 3; ++a) {
        const double len = a == 0 ? e.x : a == 1 ? e.y : e.z;
        grid.dims[a] = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::ceil(len / grid.step)) + 1);
    }
    return grid;
}

GridSpec GridSpec::with_step(const Aabb& box, double step) {
    if (step <= 0.0) throw std::invalid_argument("grid step must be positive");
    GridSpec grid;
    grid.step = step;
    grid.origin = box.min;
    const Point3 e = box.extent();
    for (int a = 0; a < 3; ++a) {
        const double len = a == 0 ? e.x : a == 1 ? e.y : e.z;
        grid.dims[a] = std::max<std::size_t>(
            2, static_cast<std::size_t>(std::ceil(len / step)) + 1);
    }
    return grid;
}

namespace {

std::uint64_t corner_key(std::size_t i, std::size_t j, std::size_t k) {
    return (static_cast<std::uint64_t>(i) << 42) | (static_cast<std::uint64_t>(j) << 21) |
           static_cast<std::uint64_t>(k);
}

}  // namespace

bool OccupancyCache::full(std::size_t i, std::size_t j, std::size_t k) {
    const std::uint64_t key = corner_key(i, j, k);
    auto it = values_.find(key);
    if (it == values_.end())
        it = values_.emplace(key, field_.query(grid_.corner(i, j, k))).first;
    return it->second >= kOccupancyThreshold;
}

bool OccupancyCache::evaluated(std::size_t i, std::size_t j, std::size_t k) const {
    return values_.count(corner_key(i, j, k)) != 0;
}

bool OccupancyCache::full_or_default(std::size_t i, std::size_t j, std::size_t k) const {
    auto it = values_.find(corner_key(i, j, k));
    return it != values_.end() && it->second >= kOccupancyThreshold;
}

namespace {

// Bisection with the Full endpoint's class already known; queries only
// interval midpoints.
Point3 bisect(const OccupancyField& field, Point3 a, bool a_full, Point3 b, int iters) {
    for (int it = 0; it < iters; ++it) {
        const Point3 mid = (a + b) * 0.5;
        const bool mid_full = field.query(mid) >= kOccupancyThreshold;
        if (mid_full == a_full)
            a = mid;
        else
            b = mid;
    }
    return (a + b) * 0.5;
}

struct Extractor {
    const OccupancyField& field;
    const GridSpec& grid;
    int iters;
    Mesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;

    // Edge identified by its low corner and axis.
    std::uint32_t vertex_on_edge(std::size_t ci[3], int corner_a, int corner_b,
                                 bool a_full) {
        std::size_t pa[3], pb[3];
        for (int d = 0; d < 3; ++d) {
            pa[d] = ci[d] + static_cast<std::size_t>(mc::kCornerOffset[corner_a][d]);
            pb[d] = ci[d] + static_cast<std::size_t>(mc::kCornerOffset[corner_b][d]);
        }
        int axis = 0;
        const std::size_t* lo = pa;
        for (int d = 0; d < 3; ++d) {
            if (pa[d] != pb[d]) {
                axis = d;
                lo = pa[d] < pb[d] ? pa : pb;
            }
        }
        const std::uint64_t key = corner_key(lo[0], lo[1], lo[2]) * 3 +
                                  static_cast<std::uint64_t>(axis);
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        const Point3 va = grid.corner(pa[0], pa[1], pa[2]);
        const Point3 vb = grid.corner(pb[0], pb[1], pb[2]);
        const Point3 v = bisect(field, va, a_full, vb, iters);
        const std::uint32_t idx = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(v);
        edge_vertex.emplace(key, idx);
        return idx;
    }

    void cell(std::size_t i, std::size_t j, std::size_t k, const bool corner_full[8]) {
        int cube = 0;
        for (int c = 0; c < 8; ++c)
            if (corner_full[c]) cube |= 1 << c;
        if (mc::kEdgeTable[cube] == 0) return;
        std::size_t ci[3] = {i, j, k};
        std::uint32_t on_edge[12];
        for (int e = 0; e < 12; ++e) {
            if (!(mc::kEdgeTable[cube] & (1 << e))) continue;
            const int ca = mc::kEdgeCorner[e][0], cb = mc::kEdgeCorner[e][1];
            on_edge[e] = vertex_on_edge(ci, ca, cb, corner_full[ca]);
        }
        // The lookup table winds triangles for the opposite convention; swap
        // two vertices so windings are counter-clockwise from the empty side.
        for (int t = 0; mc::kTriTable[cube][t] != -1; t += 3) {
            mesh.triangles.push_back({on_edge[mc::kTriTable[cube][t]],
                                      on_edge[mc::kTriTable[cube][t + 2]],
                                      on_edge[mc::kTriTable[cube][t + 1]]});
        }
    }
};

}  // namespace

Point3 dichotomic_edge_vertex(const OccupancyField& field, const Point3& a,
                              const Point3& b, int iters) {
    const bool a_full = field.query(a) >= kOccupancyThreshold;
    const bool b_full = field.query(b) >= kOccupancyThreshold;
    if (a_full == b_full)
        throw std::invalid_argument("dichotomic search needs opposite-class endpoints");
    return bisect(field, a, a_full, b, iters);
}

Mesh mc_dense(const OccupancyField& field, const GridSpec& grid, int dichotomy_iters) {
    grid.validate();
    const std::size_t nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
    std::vector<char> full(nx * ny * nz);
    auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> char& {
        return full[(i * ny + j) * nz + k];
    };
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t k = 0; k < nz; ++k)
                at(i, j, k) = field.query(grid.corner(i, j, k)) >= kOccupancyThreshold;

    Extractor ex{field, grid, dichotomy_iters, {}, {}};
    for (std::size_t i = 0; i + 1 < nx; ++i) {
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            for (std::size_t k = 0; k + 1 < nz; ++k) {
                bool corners[8];
                for (int c = 0; c < 8; ++c)
                    corners[c] = at(i + static_cast<std::size_t>(mc::kCornerOffset[c][0]),
                                    j + static_cast<std::size_t>(mc::kCornerOffset[c][1]),
                                    k + static_cast<std::size_t>(mc::kCornerOffset[c][2]));
                ex.cell(i, j, k, corners);
            }
        }
    }
    return std::move(ex.mesh);
}

namespace {

struct CornerIdx {
    std::int64_t i, j, k;
};

}  // namespace

Mesh mc_regro(const OccupancyField& field, const GridSpec& grid, const PointCloud& seeds,
              int dichotomy_iters) {
    grid.validate();
    const Aabb box = grid.bounds();
    const std::int64_t nx = static_cast<std::int64_t>(grid.dims[0]);
    const std::int64_t ny = static_cast<std::int64_t>(grid.dims[1]);
    const std::int64_t nz = static_cast<std::int64_t>(grid.dims[2]);

    OccupancyCache cache(field, grid);
    std::deque<CornerIdx> wave;
    auto in_range = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        return i >= 0 && j >= 0 && k >= 0 && i < nx && j < ny && k < nz;
    };
    auto evaluate = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        if (!cache.evaluated(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                             static_cast<std::size_t>(k))) {
            cache.full(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                       static_cast<std::size_t>(k));
            wave.push_back({i, j, k});
        }
    };

    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const Point3& p = seeds.points[s];
        if (!box.contains(p))
            throw std::invalid_argument("seed " + std::to_string(s) +
                                        " lies outside the grid");
        auto cell_of = [&](double v, double o, std::int64_t cells) {
            std::int64_t c = static_cast<std::int64_t>(std::floor((v - o) / grid.step));
            return std::clamp<std::int64_t>(c, 0, cells - 1);
        };
        const std::int64_t ci = cell_of(p.x, grid.origin.x, nx - 1);
        const std::int64_t cj = cell_of(p.y, grid.origin.y, ny - 1);
        const std::int64_t ck = cell_of(p.z, grid.origin.z, nz - 1);
        for (int c = 0; c < 8; ++c)
            evaluate(ci + mc::kCornerOffset[c][0], cj + mc::kCornerOffset[c][1],
                     ck + mc::kCornerOffset[c][2]);
    }

    // A corner joins the frontier when both an evaluated Empty and an
    // evaluated Full corner sit within Chebyshev distance 2 of it.
    auto near_both = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        bool saw_full = false, saw_empty = false;
        for (std::int64_t di = -2; di <= 2 && !(saw_full && saw_empty); ++di) {
            for (std::int64_t dj = -2; dj <= 2 && !(saw_full && saw_empty); ++dj) {
                for (std::int64_t dk = -2; dk <= 2; ++dk) {
                    const std::int64_t a = i + di, b = j + dj, c = k + dk;
                    if (!in_range(a, b, c)) continue;
                    const std::size_t ua = static_cast<std::size_t>(a);
                    const std::size_t ub = static_cast<std::size_t>(b);
                    const std::size_t uc = static_cast<std::size_t>(c);
                    if (!cache.evaluated(ua, ub, uc)) continue;
                    if (cache.full_or_default(ua, ub, uc))
                        saw_full = true;
                    else
                        saw_empty = true;
                    if (saw_full && saw_empty) break;
                }
            }
        }
        return saw_full && saw_empty;
    };

    while (!wave.empty()) {
        const CornerIdx c = wave.front();
        wave.pop_front();
        for (std::int64_t di = -2; di <= 2; ++di) {
            for (std::int64_t dj = -2; dj <= 2; ++dj) {
                for (std::int64_t dk = -2; dk <= 2; ++dk) {
                    const std::int64_t i = c.i + di, j = c.j + dj, k = c.k + dk;
                    if (!in_range(i, j, k)) continue;
                    if (cache.evaluated(static_cast<std::size_t>(i),
                                        static_cast<std::size_t>(j),
                                        static_cast<std::size_t>(k)))
                        continue;
                    if (near_both(i, j, k)) evaluate(i, j, k);
                }
            }
        }
    }

    // Triangulate cells holding both an evaluated Full and an evaluated Empty
    // corner; at the growth fixpoint those cells are fully evaluated, so they
    // reproduce the dense extraction. Cells with Full corners only sit either
    // deep inside the shape or at the inner rim of the evaluated band, where
    // the unevaluated-as-Empty reading would invent a phantom inner shell.
    std::unordered_map<std::uint64_t, char> cells;
    auto add_cells_around = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        for (int c = 0; c < 8; ++c) {
            const std::int64_t ci = i - mc::kCornerOffset[c][0];
            const std::int64_t cj = j - mc::kCornerOffset[c][1];
            const std::int64_t ck = k - mc::kCornerOffset[c][2];
            if (ci >= 0 && cj >= 0 && ck >= 0 && ci < nx - 1 && cj < ny - 1 && ck < nz - 1)
                cells[corner_key(static_cast<std::size_t>(ci), static_cast<std::size_t>(cj),
                                 static_cast<std::size_t>(ck))] = 1;
        }
    };
    for (std::int64_t i = 0; i < nx; ++i)
        for (std::int64_t j = 0; j < ny; ++j)
            for (std::int64_t k = 0; k < nz; ++k)
                if (cache.evaluated(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                    static_cast<std::size_t>(k)) &&
                    cache.full_or_default(static_cast<std::size_t>(i),
                                          static_cast<std::size_t>(j),
                                          static_cast<std::size_t>(k)))
                    add_cells_around(i, j, k);

    // Deterministic cell order keeps vertex numbering reproducible.
    std::vector<std::uint64_t> cell_keys;
    cell_keys.reserve(cells.size());
    for (const auto& [key, one] : cells) cell_keys.push_back(key);
    std::sort(cell_keys.begin(), cell_keys.end());

    Extractor ex{field, grid, dichotomy_iters, {}, {}};
    for (std::uint64_t key : cell_keys) {
        const std::size_t i = static_cast<std::size_t>(key >> 42);
        const std::size_t j = static_cast<std::size_t>((key >> 21) & 0x1FFFFF);
        const std::size_t k = static_cast<std::size_t>(key & 0x1FFFFF);
        bool corners[8];
        bool any_eval_empty = false;
        for (int c = 0; c < 8; ++c) {
            const std::size_t ci = i + static_cast<std::size_t>(mc::kCornerOffset[c][0]);
            const std::size_t cj = j + static_cast<std::size_t>(mc::kCornerOffset[c][1]);
            const std::size_t ck = k + static_cast<std::size_t>(mc::kCornerOffset[c][2]);
            corners[c] = cache.full_or_default(ci, cj, ck);
            if (cache.evaluated(ci, cj, ck) && !corners[c]) any_eval_empty = true;
        }
        if (!any_eval_empty) continue;
        ex.cell(i, j, k, corners);
    }
    return std::move(ex.mesh);
}

}  // namespace poco
