#include "poco/probe.hpp"

#include <cmath>
#include <stdexcept>

namespace poco {

std::vector<std::size_t> receptive_field_probe(const PocoModel& model,
                                               const PointCloud& cloud,
                                               std::size_t point_index,
                                               double threshold) {
    cloud.validate();
    const PocoConfig& cfg = model.config();
    const std::size_t N = cloud.size();
    if (point_index >= N) throw std::invalid_argument("point index out of range");
    if (N < cfg.k_enc)
        throw std::invalid_argument("cloud smaller than encoder neighborhood k_enc");

    KdTree tree(cloud);
    std::vector<std::vector<std::size_t>> nbr(N);
    for (std::size_t i = 0; i < N; ++i) {
        auto hits = tree.knn(cloud.points[i], cfg.k_enc);
        for (const Neighbor& hit : hits) nbr[i].push_back(hit.index);
    }

    const ParamStore& ps = model.params();
    const auto& layout = model.layout();

    // Unit cotangent on the summed latent of the probed point, pulled back
    // through the final linear layer. The twin network is linear, so no
    // forward pass is needed to compute input gradients.
    const Matrix& out_w = ps.value(layout.enc_out_w);
    const std::size_t top_dim = out_w.cols();
    Matrix dfeat(N, top_dim);
    for (std::size_t c = 0; c < top_dim; ++c) {
        double g = 0.0;
        for (std::size_t o = 0; o < cfg.n; ++o) g += out_w(o, c);
        dfeat(point_index, c) = g;
    }

    Matrix coord_grad(N, 3);
    const double inv_k = 1.0 / static_cast<double>(cfg.k_enc);

    for (std::size_t l = cfg.L; l-- > 0;) {
        const Matrix& msg_w = ps.value(layout.enc[l].msg_w);
        const Matrix& res_w = ps.value(layout.enc[l].res_w);
        const std::size_t din = msg_w.cols() - 3;
        Matrix dprev(N, din);
        for (std::size_t i = 0; i < N; ++i) {
            bool any = false;
            for (std::size_t c = 0; c < cfg.hidden && !any; ++c)
                any = dfeat(i, c) != 0.0;
            if (!any) continue;

            // Residual projection.
            double* dpi = dprev.row(i);
            for (std::size_t c = 0; c < cfg.hidden; ++c) {
                const double g = dfeat(i, c);
                if (g == 0.0) continue;
                const double* wr = res_w.row(c);
                for (std::size_t d = 0; d < din; ++d) dpi[d] += g * wr[d];
            }

            // Averaged messages: the same cotangent reaches every neighbor row.
            for (std::size_t a = 0; a < cfg.k_enc; ++a) {
                const std::size_t j = nbr[i][a];
                double* dpj = dprev.row(j);
                double delta_grad[3] = {0, 0, 0};
                for (std::size_t c = 0; c < cfg.hidden; ++c) {
                    const double g = dfeat(i, c) * inv_k;
                    if (g == 0.0) continue;
                    const double* wr = msg_w.row(c);
                    for (std::size_t d = 0; d < din; ++d) dpj[d] += g * wr[d];
                    for (int d = 0; d < 3; ++d) delta_grad[d] += g * wr[din + d];
                }
                // delta = p_j - p_i.
                coord_grad(j, 0) += delta_grad[0];
                coord_grad(j, 1) += delta_grad[1];
                coord_grad(j, 2) += delta_grad[2];
                coord_grad(i, 0) -= delta_grad[0];
                coord_grad(i, 1) -= delta_grad[1];
                coord_grad(i, 2) -= delta_grad[2];
            }
        }
        dfeat = std::move(dprev);
    }

    // Layer-0 features are the coordinates themselves (normals ignored for
    // the coordinate gradient).
    for (std::size_t i = 0; i < N; ++i)
        for (int d = 0; d < 3; ++d) coord_grad(i, d) += dfeat(i, static_cast<std::size_t>(d));

    std::vector<std::size_t> result;
    for (std::size_t i = 0; i < N; ++i) {
        const double norm = std::sqrt(coord_grad(i, 0) * coord_grad(i, 0) +
                                      coord_grad(i, 1) * coord_grad(i, 1) +
                                      coord_grad(i, 2) * coord_grad(i, 2));
        if (norm > threshold) result.push_back(i);
    }
    return result;
}

}  // namespace poco
