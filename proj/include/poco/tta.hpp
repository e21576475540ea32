#ifndef POCO_TTA_HPP
#define POCO_TTA_HPP

#include <cstdint>
#include <vector>

#include "poco/model.hpp"

namespace poco {

/// Index sets chosen so every point appears in at least n_view of them.
struct SubsamplePlan {
    std::vector<std::vector<std::size_t>> subsamples;
    std::vector<std::size_t> coverage;  // appearances per point index
};

struct ChunkPlan {
    std::vector<std::vector<std::size_t>> chunks;
    std::vector<std::size_t> coverage;
};

/// Greedy min-count-first subsampling: each subsample repeatedly draws a
/// uniform point among those with the fewest appearances so far, until it
/// holds sample_size distinct indices. Stops once min coverage >= n_view.
SubsamplePlan plan_subsamples(std::size_t n, std::size_t sample_size, std::size_t n_view,
                              std::uint64_t seed);

/// Chunking for clouds above the per-pass budget: each chunk is a low-coverage
/// seed plus its n_test-1 nearest neighbors. n_view drops to 1 when the whole
/// cloud fits in one chunk.
ChunkPlan plan_chunks(const PointCloud& cloud, std::size_t n_test, std::size_t n_view,
                      std::uint64_t seed);

/// Latent-level test-time augmentation: encode each subsample, average each
/// point's latent over the subsamples containing it.
LatentField encode_with_tta(const PocoModel& model, const PointCloud& cloud,
                            const SubsamplePlan& plan);

LatentField encode_chunked(const PocoModel& model, const PointCloud& cloud,
                           const ChunkPlan& plan);

}  // namespace poco

#endif
