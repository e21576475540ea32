#ifndef POCO_METRICS_HPP
#define POCO_METRICS_HPP

#include <cstdint>
#include <vector>

#include "poco/geometry.hpp"
#include "poco/mesh.hpp"
#include "poco/model.hpp"

namespace poco {

struct MetricsReport {
    double chamfer_x100 = 0.0;
    double normal_consistency = 0.0;
    double fscore = 0.0;
    double iou = 0.0;
    std::size_t surface_samples = 0;
    std::size_t volume_samples = 0;
    double fs_threshold = 0.0;
    bool iou_open_mesh_warning = false;
};

/// Symmetric mean nearest-neighbor L1 distance (raw value; tables use x100).
double chamfer_l1(const PointCloud& a, const PointCloud& b);

/// Symmetric mean cosine of normals at Euclidean nearest points.
/// absolute=true takes |cos| per pair.
double normal_consistency(const PointCloud& a, const PointCloud& b, bool absolute = true);

/// Harmonic mean of precision and recall at Euclidean threshold t.
double fscore(const PointCloud& a, const PointCloud& b, double t = 0.01);

/// TP / (TP + FP + FN) over paired binary labels; 1 when both are all-zero.
double iou_occupancy(const std::vector<int>& pred, const std::vector<int>& gt);

struct GroundTruth {
    const Mesh* mesh = nullptr;
    const AnalyticField* field = nullptr;  // exactly one of the two is set
};

MetricsReport evaluate_reconstruction(const Mesh& pred, const GroundTruth& gt,
                                      std::size_t n_surface_samples,
                                      std::size_t n_volume_samples, std::uint64_t seed,
                                      double fs_threshold = 0.01);

}  // namespace poco

#endif
