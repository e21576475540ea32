#include "poco/tta.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace poco {

namespace {

// Uniform draw among the not-yet-taken indices holding the minimum count.
std::size_t draw_min_count(const std::vector<std::size_t>& counts,
                           const std::vector<char>& taken, std::mt19937_64& rng) {
    std::size_t min_count = SIZE_MAX;
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (!taken[i]) min_count = std::min(min_count, counts[i]);
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (!taken[i] && counts[i] == min_count) pool.push_back(i);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    return pool[pick(rng)];
}

std::size_t min_of(const std::vector<std::size_t>& v) {
    return *std::min_element(v.begin(), v.end());
}

}  // namespace

SubsamplePlan plan_subsamples(std::size_t n, std::size_t sample_size, std::size_t n_view,
                              std::uint64_t seed) {
    if (sample_size < 1 || sample_size > n)
        throw std::invalid_argument("sample_size must lie in [1, N]");
    if (n_view < 1) throw std::invalid_argument("n_view must be >= 1");
    std::mt19937_64 rng(seed);
    SubsamplePlan plan;
    plan.coverage.assign(n, 0);
    while (min_of(plan.coverage) < n_view) {
        std::vector<std::size_t> sample;
        sample.reserve(sample_size);
        std::vector<char> taken(n, 0);
        while (sample.size() < sample_size) {
            const std::size_t i = draw_min_count(plan.coverage, taken, rng);
            taken[i] = 1;
            ++plan.coverage[i];
            sample.push_back(i);
        }
        plan.subsamples.push_back(std::move(sample));
    }
    return plan;
}

ChunkPlan plan_chunks(const PointCloud& cloud, std::size_t n_test, std::size_t n_view,
                      std::uint64_t seed) {
    cloud.validate();
    const std::size_t n = cloud.size();
    ChunkPlan plan;
    plan.coverage.assign(n, 0);
    if (n <= n_test) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        plan.coverage.assign(n, 1);
        plan.chunks.push_back(std::move(all));
        return plan;
    }
    std::mt19937_64 rng(seed);
    KdTree tree(cloud);
    const std::vector<char> none(n, 0);
    while (min_of(plan.coverage) < n_view) {
        std::vector<char> taken = none;
        const std::size_t seed_idx = draw_min_count(plan.coverage, taken, rng);
        auto hits = tree.knn(cloud.points[seed_idx], n_test);
        std::vector<std::size_t> chunk;
        chunk.reserve(hits.size());
        for (const Neighbor& hit : hits) {
            chunk.push_back(hit.index);
            ++plan.coverage[hit.index];
        }
        plan.chunks.push_back(std::move(chunk));
    }
    return plan;
}

namespace {

LatentField encode_averaged(const PocoModel& model, const PointCloud& cloud,
                            const std::vector<std::vector<std::size_t>>& groups) {
    cloud.validate();
    const std::size_t n = cloud.size();
    const std::size_t dim = model.config().n;
    Matrix sum(n, dim);
    std::vector<std::size_t> hits(n, 0);

    for (const auto& group : groups) {
        PointCloud sub;
        sub.points.reserve(group.size());
        if (cloud.has_normals()) sub.normals.reserve(group.size());
        for (std::size_t idx : group) {
            if (idx >= n) throw std::invalid_argument("plan index out of range");
            sub.points.push_back(cloud.points[idx]);
            if (cloud.has_normals()) sub.normals.push_back(cloud.normals[idx]);
        }
        LatentField part = encode(model, sub);
        for (std::size_t local = 0; local < group.size(); ++local) {
            const std::size_t idx = group[local];
            const double* src = part.latents.row(local);
            double* dst = sum.row(idx);
            for (std::size_t c = 0; c < dim; ++c) dst[c] += src[c];
            ++hits[idx];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (hits[i] == 0) throw std::invalid_argument("plan does not cover point index " +
                                                      std::to_string(i));
        const double inv = 1.0 / static_cast<double>(hits[i]);
        double* row = sum.row(i);
        for (std::size_t c = 0; c < dim; ++c) row[c] *= inv;
    }
    return LatentField{cloud, std::make_shared<KdTree>(cloud), std::move(sum)};
}

}  // namespace

LatentField encode_with_tta(const PocoModel& model, const PointCloud& cloud,
                            const SubsamplePlan& plan) {
    return encode_averaged(model, cloud, plan.subsamples);
}

LatentField encode_chunked(const PocoModel& model, const PointCloud& cloud,
                           const ChunkPlan& plan) {
    return encode_averaged(model, cloud, plan.chunks);
}

}  // namespace poco
