#ifndef POCO_MODEL_HPP
#define POCO_MODEL_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "poco/geometry.hpp"
#include "poco/matrix.hpp"

namespace poco {

/// Anything that answers "probability this point is inside" in [0,1].
struct OccupancyField {
    virtual ~OccupancyField() = default;
    virtual double query(const Point3& q) const = 0;
};

struct PocoConfig {
    std::size_t n = 32;       // latent size
    std::size_t k = 64;       // interpolation neighbors
    std::size_t h = 64;       // attention heads
    std::size_t L = 4;        // encoder layers
    std::size_t k_enc = 16;   // encoder neighbors per layer
    std::size_t hidden = 64;  // encoder hidden width
    bool use_normals = false;
    bool centered_input = true;  // subtract centroid before encoding

    void validate() const;
    std::size_t input_dim() const { return use_normals ? 6 : 3; }
};

/// All learnable parameters. ParamStore order doubles as the file layout order.
class PocoModel {
public:
    PocoModel(const PocoConfig& config, std::uint64_t seed);

    const PocoConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Indices into the store, in serialization order.
    struct Layout {
        struct EncLayer {
            std::size_t msg_w, msg_b, res_w;
        };
        std::vector<EncLayer> enc;
        std::size_t enc_out_w, enc_out_b;
        std::size_t r_w[3], r_b[3];
        std::size_t att_w;
        std::size_t dec_w, dec_b;
    };
    const Layout& layout() const { return layout_; }

private:
    PocoConfig config_;
    ParamStore params_;
    Layout layout_;
};

struct LatentField {
    PointCloud cloud;
    std::shared_ptr<const KdTree> tree;
    Matrix latents;  // N x n
};

/// Intermediates kept by the encoder forward pass so the exact backward can
/// be replayed without recomputation.
struct EncoderCache {
    std::vector<Point3> positions;              // raw input positions
    Matrix features0;                           // N x input_dim (centered if enabled)
    std::vector<std::vector<std::size_t>> nbr;  // per point, k_enc indices
    struct Layer {
        Matrix input;                        // N x d_l
        std::vector<Matrix> msg_pre;         // per point, k_enc x hidden
        std::vector<std::vector<std::size_t>> argmax;  // per point, hidden
        Matrix res_pre;                      // N x hidden
    };
    std::vector<Layer> layers;
    Matrix top;  // N x hidden, input of the final linear
};

LatentField encode(const PocoModel& model, const PointCloud& cloud,
                   EncoderCache* cache = nullptr);

/// Accumulates parameter gradients given dLoss/dLatents.
void encode_backward(PocoModel& model, const EncoderCache& cache, const Matrix& dlatents);

Matrix relative_encode(const PocoModel& model, const Matrix& z_p, const Point3& delta);

/// Head-averaged softmax attention weights over the k relative latents.
std::vector<double> attention_weights(const PocoModel& model, const Matrix& zrel);

/// z_q = sum_p s_p * Zrel_p.
Matrix interpolate(const Matrix& zrel, const std::vector<double>& s);

struct DecodeResult {
    double logits[2];
    double prob_full;  // softmax(logits)[1]
};
DecodeResult decode(const PocoModel& model, const Matrix& z_q);

/// Full per-query decode with intermediates, for training backward.
struct QueryCache {
    std::vector<std::size_t> nbr;  // k neighbor indices
    Matrix x;                      // k x (n+3)
    Matrix a1_pre, a2_pre;         // k x n
    Matrix zrel;                   // k x n
    Matrix head_sm;                // h x k, per-head softmax rows
    std::vector<double> s;         // k averaged weights
    Matrix z_q;                    // 1 x n
    DecodeResult out;
};

QueryCache query_forward(const PocoModel& model, const LatentField& field, const Point3& q);

/// Backward from dLoss/dlogits; accumulates decoder/attention/R gradients and
/// scatters dLoss/dLatents rows into dlatents (N x n).
void query_backward(PocoModel& model, const LatentField& field, const QueryCache& cache,
                    const double dlogits[2], Matrix& dlatents);

double occupancy(const PocoModel& model, const LatentField& field, const Point3& q);
std::vector<double> occupancy_batch(const PocoModel& model, const LatentField& field,
                                    const std::vector<Point3>& queries);

/// Model-backed OccupancyField.
class ModelField : public OccupancyField {
public:
    ModelField(const PocoModel& model, LatentField field)
        : model_(model), field_(std::move(field)) {}
    double query(const Point3& q) const override { return occupancy(model_, field_, q); }
    const LatentField& latent_field() const { return field_; }

private:
    const PocoModel& model_;
    LatentField field_;
};

// -- Analytic ground truth -------------------------------------------------

struct AnalyticField : OccupancyField {
    enum class Kind { Sphere, Box, Torus };
    Kind kind = Kind::Sphere;
    Point3 center{0, 0, 0};
    double radius = 0.5;        // sphere
    Point3 box_min, box_max;    // box
    double major = 0.35, minor = 0.15;  // torus, around z in the local frame

    static AnalyticField sphere(const Point3& center, double radius);
    static AnalyticField box(const Point3& min, const Point3& max);
    static AnalyticField torus(const Point3& center, double major, double minor);

    bool inside(const Point3& q) const;
    double query(const Point3& q) const override { return inside(q) ? 1.0 : 0.0; }
    Aabb enclosing_box() const;
    /// Area-uniform surface samples with outward normals.
    PointCloud sample_surface(std::size_t count, std::uint64_t seed) const;
};

struct TrainingBatch {
    PointCloud cloud;
    std::vector<Point3> queries;
    std::vector<int> labels;
};

TrainingBatch make_training_batch(const AnalyticField& field, std::size_t n_points,
                                  std::size_t n_queries, double sigma_noise,
                                  std::uint64_t seed);

struct TrainOptions {
    std::size_t steps = 2000;
    std::size_t batch_points = 512;
    std::size_t batch_queries = 200;
    double lr = 1e-3;
    double sigma_noise = 0.0;
    std::uint64_t seed = 0;
};

/// Per-step loss log.
std::vector<double> train(PocoModel& model, const AnalyticField& field,
                          const TrainOptions& opts);

}  // namespace poco

#endif
