#include "poco/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

namespace poco {

double chamfer_l1(const PointCloud& a, const PointCloud& b) {
    a.validate();
    b.validate();
    KdTree ta(a), tb(b);
    double sum_ab = 0.0, sum_ba = 0.0;
    for (const Point3& p : a.points) sum_ab += tb.nearest_l1(p).distance;
    for (const Point3& p : b.points) sum_ba += ta.nearest_l1(p).distance;
    return 0.5 * sum_ab / static_cast<double>(a.size()) +
           0.5 * sum_ba / static_cast<double>(b.size());
}

double normal_consistency(const PointCloud& a, const PointCloud& b, bool absolute) {
    a.validate();
    b.validate();
    if (!a.has_normals() || !b.has_normals())
        throw std::invalid_argument("normal consistency needs normals on both clouds");
    KdTree ta(a), tb(b);
    auto one_way = [&](const PointCloud& src, const PointCloud& dst, const KdTree& tree) {
        double sum = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i) {
            const std::size_t j = tree.knn(src.points[i], 1)[0].index;
            const double cosine = src.normals[i].dot(dst.normals[j]);
            sum += absolute ? std::abs(cosine) : cosine;
        }
        return sum / static_cast<double>(src.size());
    };
    return 0.5 * one_way(a, b, tb) + 0.5 * one_way(b, a, ta);
}

double fscore(const PointCloud& a, const PointCloud& b, double t) {
    a.validate();
    b.validate();
    if (t <= 0.0) throw std::invalid_argument("fscore threshold must be positive");
    KdTree ta(a), tb(b);
    auto hit_fraction = [&](const PointCloud& src, const KdTree& tree) {
        std::size_t hits = 0;
        for (const Point3& p : src.points)
            if (tree.knn(p, 1)[0].distance < t) ++hits;
        return static_cast<double>(hits) / static_cast<double>(src.size());
    };
    const double recall = hit_fraction(a, tb);
    const double precision = hit_fraction(b, ta);
    if (recall + precision == 0.0) return 0.0;
    return 2.0 * recall * precision / (recall + precision);
}

double iou_occupancy(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size())
        throw std::invalid_argument("iou: label vectors differ in length");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] != 0 && gt[i] != 0) ++tp;
        if (pred[i] != 0 && gt[i] == 0) ++fp;
        if (pred[i] == 0 && gt[i] != 0) ++fn;
    }
    if (tp + fp + fn == 0) return 1.0;
    return static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
}

namespace {

// Ray-parity containment along +x, accelerated by bucketing triangles on a
// (y, z) grid of their bounding rectangles.
class ContainmentGrid {
public:
    explicit ContainmentGrid(const Mesh& mesh) : mesh_(mesh) {
        if (mesh.triangles.empty()) return;
        const Aabb b = mesh.bounds();
        y0_ = b.min.y;
        z0_ = b.min.z;
        const double ey = std::max(b.max.y - y0_, 1e-12);
        const double ez = std::max(b.max.z - z0_, 1e-12);
        res_ = 64;
        sy_ = static_cast<double>(res_) / ey;
        sz_ = static_cast<double>(res_) / ez;
        buckets_.resize(res_ * res_);
        for (std::uint32_t t = 0; t < mesh.triangles.size(); ++t) {
            const auto& tri = mesh.triangles[t];
            double ymin = 1e300, ymax = -1e300, zmin = 1e300, zmax = -1e300;
            for (int c = 0; c < 3; ++c) {
                const Point3& v = mesh.vertices[tri[c]];
                ymin = std::min(ymin, v.y);
                ymax = std::max(ymax, v.y);
                zmin = std::min(zmin, v.z);
                zmax = std::max(zmax, v.z);
            }
            for (int iy = clampi(ymin, y0_, sy_); iy <= clampi(ymax, y0_, sy_); ++iy)
                for (int iz = clampi(zmin, z0_, sz_); iz <= clampi(zmax, z0_, sz_); ++iz)
                    buckets_[static_cast<std::size_t>(iy) * res_ +
                             static_cast<std::size_t>(iz)]
                        .push_back(t);
        }
    }

    bool contains(const Point3& q) const {
        if (mesh_.triangles.empty()) return false;
        const int iy = clampi(q.y, y0_, sy_);
        const int iz = clampi(q.z, z0_, sz_);
        int crossings = 0;
        for (std::uint32_t t : buckets_[static_cast<std::size_t>(iy) * res_ +
                                        static_cast<std::size_t>(iz)]) {
            const auto& tri = mesh_.triangles[t];
            const int hit = crossing(q, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                                     mesh_.vertices[tri[2]]);
            if (hit < 0) return mesh_contains(mesh_, q);  // degenerate: exact fallback
            crossings += hit;
        }
        return (crossings % 2) == 1;
    }

private:
    int clampi(double v, double o, double s) const {
        const int i = static_cast<int>((v - o) * s);
        return std::clamp(i, 0, static_cast<int>(res_) - 1);
    }

    // +x ray vs triangle: 1 hit, 0 miss, -1 for a borderline hit.
    static int crossing(const Point3& q, const Point3& a, const Point3& b,
                        const Point3& c) {
        const Point3 dir{1, 0, 0};
        const Point3 ab = b - a, ac = c - a;
        const Point3 pvec = dir.cross(ac);
        const double det = ab.dot(pvec);
        if (std::abs(det) < 1e-14) return 0;  // parallel to the ray plane
        const double inv = 1.0 / det;
        const Point3 tvec = q - a;
        const double u = tvec.dot(pvec) * inv;
        const Point3 qvec = tvec.cross(ab);
        const double v = dir.dot(qvec) * inv;
        const double tt = ac.dot(qvec) * inv;
        const double m = 1e-10;
        if (u < -m || v < -m || u + v > 1.0 + m || tt < -m) return 0;
        if (u < m || v < m || u + v > 1.0 - m || tt < m) return -1;
        return 1;
    }

    const Mesh& mesh_;
    double y0_ = 0, z0_ = 0, sy_ = 1, sz_ = 1;
    std::size_t res_ = 1;
    std::vector<std::vector<std::uint32_t>> buckets_;
};

}  // namespace

MetricsReport evaluate_reconstruction(const Mesh& pred, const GroundTruth& gt,
                                      std::size_t n_surface_samples,
                                      std::size_t n_volume_samples, std::uint64_t seed,
                                      double fs_threshold) {
    if ((gt.mesh == nullptr) == (gt.field == nullptr))
        throw std::invalid_argument("ground truth must be exactly one of mesh or field");

    MetricsReport report;
    report.surface_samples = n_surface_samples;
    report.volume_samples = n_volume_samples;
    report.fs_threshold = fs_threshold;

    PointCloud pred_pts = sample_surface(pred, n_surface_samples, seed);
    PointCloud gt_pts = gt.mesh ? sample_surface(*gt.mesh, n_surface_samples, seed + 1)
                                : gt.field->sample_surface(n_surface_samples, seed + 1);

    report.chamfer_x100 = 100.0 * chamfer_l1(pred_pts, gt_pts);
    report.normal_consistency = normal_consistency(pred_pts, gt_pts);
    report.fscore = fscore(pred_pts, gt_pts, fs_threshold);

    if (n_volume_samples > 0) {
        report.iou_open_mesh_warning = !watertight_check(pred).is_closed;
        Aabb box = gt.field ? gt.field->enclosing_box() : gt.mesh->bounds();
        box = box.inflated(0.1);
        std::mt19937_64 rng(seed + 2);
        std::uniform_real_distribution<double> ux(box.min.x, box.max.x);
        std::uniform_real_distribution<double> uy(box.min.y, box.max.y);
        std::uniform_real_distribution<double> uz(box.min.z, box.max.z);
        ContainmentGrid pred_grid(pred);
        std::unique_ptr<ContainmentGrid> gt_grid;
        if (gt.mesh) gt_grid = std::make_unique<ContainmentGrid>(*gt.mesh);
        std::vector<int> pred_labels(n_volume_samples), gt_labels(n_volume_samples);
        for (std::size_t i = 0; i < n_volume_samples; ++i) {
            const Point3 q{ux(rng), uy(rng), uz(rng)};
            pred_labels[i] = pred_grid.contains(q) ? 1 : 0;
            gt_labels[i] = (gt.field ? gt.field->inside(q) : gt_grid->contains(q)) ? 1 : 0;
        }
        report.iou = iou_occupancy(pred_labels, gt_labels);
    }
    return report;
}

}  // namespace poco
