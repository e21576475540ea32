#include "poco/model.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace poco {

void PocoConfig::validate() const {
    auto in_range = [](std::size_t v) { return v >= 1 && v <= 4096; };
    if (!in_range(n) || !in_range(h) || !in_range(k))
        throw std::invalid_argument("config: n, k, h must lie in [1, 4096]");
    if (k_enc == 0 || hidden == 0)
        throw std::invalid_argument("config: k_enc and hidden must be positive");
}

namespace {

Matrix glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> uni(-bound, bound);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = uni(rng);
    return m;
}

}  // namespace

PocoModel::PocoModel(const PocoConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const std::size_t d0 = config_.input_dim();
    for (std::size_t l = 0; l < config_.L; ++l) {
        const std::size_t din = l == 0 ? d0 : config_.hidden;
        Layout::EncLayer layer;
        const std::string p = "enc" + std::to_string(l) + ".";
        layer.msg_w = params_.add(p + "msg_w",
                                  glorot_uniform(config_.hidden, din + 3, rng));
        layer.msg_b = params_.add(p + "msg_b", Matrix(config_.hidden, 1));
        layer.res_w = params_.add(p + "res_w", glorot_uniform(config_.hidden, din, rng));
        layout_.enc.push_back(layer);
    }
    const std::size_t top_dim = config_.L == 0 ? d0 : config_.hidden;
    layout_.enc_out_w = params_.add("enc_out.w", glorot_uniform(config_.n, top_dim, rng));
    layout_.enc_out_b = params_.add("enc_out.b", Matrix(config_.n, 1));
    for (int i = 0; i < 3; ++i) {
        const std::size_t din = i == 0 ? config_.n + 3 : config_.n;
        const std::string p = "r" + std::to_string(i + 1) + ".";
        layout_.r_w[i] = params_.add(p + "w", glorot_uniform(config_.n, din, rng));
        layout_.r_b[i] = params_.add(p + "b", Matrix(config_.n, 1));
    }
    layout_.att_w = params_.add("att.w", glorot_uniform(config_.h, config_.n, rng));
    layout_.dec_w = params_.add("dec.w", glorot_uniform(2, config_.n, rng));
    layout_.dec_b = params_.add("dec.b", Matrix(2, 1));
}

// -- Encoder ---------------------------------------------------------------

LatentField encode(const PocoModel& model, const PointCloud& cloud, EncoderCache* cache) {
    cloud.validate();
    const PocoConfig& cfg = model.config();
    const std::size_t N = cloud.size();
    if (N < cfg.k_enc)
        throw std::invalid_argument("cloud smaller than encoder neighborhood k_enc");
    if (cfg.use_normals && !cloud.has_normals())
        throw std::invalid_argument("model expects normals but cloud has none");

    auto tree = std::make_shared<KdTree>(cloud);

    Point3 centroid{0, 0, 0};
    if (cfg.centered_input) {
        for (const Point3& p : cloud.points) centroid = centroid + p;
        centroid = centroid * (1.0 / static_cast<double>(N));
    }

    const std::size_t d0 = cfg.input_dim();
    Matrix features(N, d0);
    for (std::size_t i = 0; i < N; ++i) {
        const Point3 p = cloud.points[i] - centroid;
        features(i, 0) = p.x;
        features(i, 1) = p.y;
        features(i, 2) = p.z;
        if (cfg.use_normals) {
            features(i, 3) = cloud.normals[i].x;
            features(i, 4) = cloud.normals[i].y;
            features(i, 5) = cloud.normals[i].z;
        }
    }

    std::vector<std::vector<std::size_t>> nbr(N);
    for (std::size_t i = 0; i < N; ++i) {
        auto hits = tree->knn(cloud.points[i], cfg.k_enc);
        nbr[i].reserve(hits.size());
        for (const Neighbor& hit : hits) nbr[i].push_back(hit.index);
    }

    if (cache) {
        cache->positions = cloud.points;
        cache->features0 = features;
        cache->nbr = nbr;
        cache->layers.clear();
    }

    const ParamStore& ps = model.params();
    const auto& layout = model.layout();

    for (std::size_t l = 0; l < cfg.L; ++l) {
        const Matrix& msg_w = ps.value(layout.enc[l].msg_w);
        const Matrix& msg_b = ps.value(layout.enc[l].msg_b);
        const Matrix& res_w = ps.value(layout.enc[l].res_w);
        const std::size_t din = features.cols();

        EncoderCache::Layer layer_cache;
        if (cache) {
            layer_cache.input = features;
            layer_cache.msg_pre.resize(N);
            layer_cache.argmax.resize(N);
            layer_cache.res_pre = Matrix(N, cfg.hidden);
        }

        Matrix next(N, cfg.hidden);
        Matrix msg_in(cfg.k_enc, din + 3);
        for (std::size_t i = 0; i < N; ++i) {
            const Point3& pi = cloud.points[i];
            for (std::size_t a = 0; a < cfg.k_enc; ++a) {
                const std::size_t j = nbr[i][a];
                const double* fj = features.row(j);
                double* row = msg_in.row(a);
                for (std::size_t c = 0; c < din; ++c) row[c] = fj[c];
                const Point3 delta = cloud.points[j] - pi;
                row[din] = delta.x;
                row[din + 1] = delta.y;
                row[din + 2] = delta.z;
            }
            Matrix pre = linear_forward(msg_in, msg_w, &msg_b);
            Matrix act = relu_forward(pre);
            std::vector<std::size_t> argmax;
            Matrix agg = max_over_group(act, &argmax);

            // Residual projection of the point's own features, then ReLU.
            const double* fi = features.row(i);
            double* out = next.row(i);
            for (std::size_t c = 0; c < cfg.hidden; ++c) {
                double acc = agg(0, c);
                const double* wr = res_w.row(c);
                for (std::size_t d = 0; d < din; ++d) acc += wr[d] * fi[d];
                if (cache) layer_cache.res_pre(i, c) = acc;
                out[c] = acc > 0.0 ? acc : 0.0;
            }
            if (cache) {
                layer_cache.msg_pre[i] = std::move(pre);
                layer_cache.argmax[i] = std::move(argmax);
            }
        }
        if (cache) cache->layers.push_back(std::move(layer_cache));
        features = std::move(next);
    }

    if (cache) cache->top = features;
    Matrix latents = linear_forward(features, ps.value(layout.enc_out_w),
                                    &ps.value(layout.enc_out_b));
    return LatentField{cloud, std::move(tree), std::move(latents)};
}

void encode_backward(PocoModel& model, const EncoderCache& cache, const Matrix& dlatents) {
    const PocoConfig& cfg = model.config();
    ParamStore& ps = model.params();
    const auto& layout = model.layout();
    const std::size_t N = cache.top.rows();

    Matrix dfeat;
    linear_backward(cache.top, ps.value(layout.enc_out_w), dlatents, &dfeat,
                    &ps.grad(layout.enc_out_w), &ps.grad(layout.enc_out_b));

    for (std::size_t l = cfg.L; l-- > 0;) {
        const EncoderCache::Layer& lc = cache.layers[l];
        const Matrix& msg_w = ps.value(layout.enc[l].msg_w);
        const Matrix& res_w = ps.value(layout.enc[l].res_w);
        Matrix& g_msg_w = ps.grad(layout.enc[l].msg_w);
        Matrix& g_msg_b = ps.grad(layout.enc[l].msg_b);
        Matrix& g_res_w = ps.grad(layout.enc[l].res_w);
        const std::size_t din = lc.input.cols();

        Matrix dprev(N, din);
        Matrix msg_in(cfg.k_enc, din + 3);
        for (std::size_t i = 0; i < N; ++i) {
            // ReLU after the residual add.
            std::vector<double> dres(cfg.hidden);
            for (std::size_t c = 0; c < cfg.hidden; ++c)
                dres[c] = lc.res_pre(i, c) > 0.0 ? dfeat(i, c) : 0.0;

            // Residual path.
            const double* fi = lc.input.row(i);
            double* dpi = dprev.row(i);
            for (std::size_t c = 0; c < cfg.hidden; ++c) {
                const double g = dres[c];
                if (g == 0.0) continue;
                double* gw = g_res_w.row(c);
                const double* wr = res_w.row(c);
                for (std::size_t d = 0; d < din; ++d) {
                    gw[d] += g * fi[d];
                    dpi[d] += g * wr[d];
                }
            }

            // Max aggregation routes each channel to its argmax neighbor row.
            Matrix dpre(cfg.k_enc, cfg.hidden);
            for (std::size_t c = 0; c < cfg.hidden; ++c) {
                const std::size_t r = lc.argmax[i][c];
                if (lc.msg_pre[i](r, c) > 0.0) dpre(r, c) = dres[c];
            }

            // Rebuild the message input block (cheaper than caching it).
            const Point3& pi_pos = cache.positions[i];
            for (std::size_t a = 0; a < cfg.k_enc; ++a) {
                const std::size_t j = cache.nbr[i][a];
                const double* fj = lc.input.row(j);
                double* row = msg_in.row(a);
                for (std::size_t c = 0; c < din; ++c) row[c] = fj[c];
                const Point3 delta = cache.positions[j] - pi_pos;
                row[din] = delta.x;
                row[din + 1] = delta.y;
                row[din + 2] = delta.z;
            }
            for (std::size_t a = 0; a < cfg.k_enc; ++a) {
                const std::size_t j = cache.nbr[i][a];
                const double* dpr = dpre.row(a);
                const double* xin = msg_in.row(a);
                double* dpj = dprev.row(j);
                for (std::size_t c = 0; c < cfg.hidden; ++c) {
                    const double g = dpr[c];
                    if (g == 0.0) continue;
                    g_msg_b(c, 0) += g;
                    double* gw = g_msg_w.row(c);
                    for (std::size_t d = 0; d < din + 3; ++d) gw[d] += g * xin[d];
                    // Feature part flows back to the neighbor; position deltas
                    // are not trainable.
                    const double* wr = msg_w.row(c);
                    for (std::size_t d = 0; d < din; ++d) dpj[d] += g * wr[d];
                }
            }
        }
        dfeat = std::move(dprev);
    }
}

// -- Query path ------------------------------------------------------------

namespace {

Matrix run_r_mlp(const PocoModel& model, const Matrix& x, Matrix* a1_pre = nullptr,
                 Matrix* a2_pre = nullptr) {
    const ParamStore& ps = model.params();
    const auto& layout = model.layout();
    Matrix p1 = linear_forward(x, ps.value(layout.r_w[0]), &ps.value(layout.r_b[0]));
    Matrix a1 = relu_forward(p1);
    Matrix p2 = linear_forward(a1, ps.value(layout.r_w[1]), &ps.value(layout.r_b[1]));
    Matrix a2 = relu_forward(p2);
    Matrix out = linear_forward(a2, ps.value(layout.r_w[2]), &ps.value(layout.r_b[2]));
    if (a1_pre) *a1_pre = std::move(p1);
    if (a2_pre) *a2_pre = std::move(p2);
    return out;
}

}  // namespace

Matrix relative_encode(const PocoModel& model, const Matrix& z_p, const Point3& delta) {
    const std::size_t n = model.config().n;
    if (z_p.rows() != 1 || z_p.cols() != n)
        throw std::invalid_argument("relative_encode: latent must be 1 x n");
    Matrix x(1, n + 3);
    for (std::size_t c = 0; c < n; ++c) x(0, c) = z_p(0, c);
    x(0, n) = delta.x;
    x(0, n + 1) = delta.y;
    x(0, n + 2) = delta.z;
    return run_r_mlp(model, x);
}

std::vector<double> attention_weights(const PocoModel& model, const Matrix& zrel) {
    const PocoConfig& cfg = model.config();
    const std::size_t k = zrel.rows();
    if (k == 0) throw std::invalid_argument("attention over empty neighborhood");
    const Matrix& att = model.params().value(model.layout().att_w);
    Matrix logits = linear_forward(zrel, att);  // k x h
    std::vector<double> s(k, 0.0);
    std::vector<double> col(k);
    for (std::size_t j = 0; j < cfg.h; ++j) {
        double mx = logits(0, j);
        for (std::size_t p = 1; p < k; ++p) mx = std::max(mx, logits(p, j));
        double sum = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            col[p] = std::exp(logits(p, j) - mx);
            sum += col[p];
        }
        for (std::size_t p = 0; p < k; ++p) s[p] += col[p] / sum;
    }
    const double inv_h = 1.0 / static_cast<double>(cfg.h);
    for (double& v : s) v *= inv_h;
    return s;
}

Matrix interpolate(const Matrix& zrel, const std::vector<double>& s) {
    if (zrel.rows() != s.size())
        throw std::invalid_argument("interpolate: weight count mismatch");
    double total = 0.0;
    for (double v : s) total += v;
    if (std::abs(total - 1.0) > 1e-6)
        throw std::invalid_argument("interpolate: weights do not sum to 1");
    Matrix z(1, zrel.cols());
    for (std::size_t p = 0; p < zrel.rows(); ++p) {
        const double* row = zrel.row(p);
        for (std::size_t c = 0; c < zrel.cols(); ++c) z(0, c) += s[p] * row[c];
    }
    return z;
}

DecodeResult decode(const PocoModel& model, const Matrix& z_q) {
    const ParamStore& ps = model.params();
    const auto& layout = model.layout();
    Matrix logits = linear_forward(z_q, ps.value(layout.dec_w), &ps.value(layout.dec_b));
    DecodeResult r;
    r.logits[0] = logits(0, 0);
    r.logits[1] = logits(0, 1);
    const double mx = std::max(r.logits[0], r.logits[1]);
    const double e0 = std::exp(r.logits[0] - mx), e1 = std::exp(r.logits[1] - mx);
    r.prob_full = e1 / (e0 + e1);
    return r;
}

QueryCache query_forward(const PocoModel& model, const LatentField& field, const Point3& q) {
    const PocoConfig& cfg = model.config();
    const std::size_t n = cfg.n;
    if (field.latents.cols() != n)
        throw std::invalid_argument("latent field does not match model config");

    QueryCache qc;
    auto hits = field.tree->knn(q, cfg.k);
    const std::size_t k = hits.size();
    qc.nbr.reserve(k);
    qc.x = Matrix(k, n + 3);
    for (std::size_t p = 0; p < k; ++p) {
        const std::size_t idx = hits[p].index;
        qc.nbr.push_back(idx);
        const double* z = field.latents.row(idx);
        double* row = qc.x.row(p);
        for (std::size_t c = 0; c < n; ++c) row[c] = z[c];
        const Point3 delta = q - field.cloud.points[idx];
        row[n] = delta.x;
        row[n + 1] = delta.y;
        row[n + 2] = delta.z;
    }
    qc.zrel = run_r_mlp(model, qc.x, &qc.a1_pre, &qc.a2_pre);

    const Matrix& att = model.params().value(model.layout().att_w);
    Matrix logits = linear_forward(qc.zrel, att);  // k x h
    qc.head_sm = Matrix(cfg.h, k);
    qc.s.assign(k, 0.0);
    for (std::size_t j = 0; j < cfg.h; ++j) {
        double mx = logits(0, j);
        for (std::size_t p = 1; p < k; ++p) mx = std::max(mx, logits(p, j));
        double sum = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double e = std::exp(logits(p, j) - mx);
            qc.head_sm(j, p) = e;
            sum += e;
        }
        for (std::size_t p = 0; p < k; ++p) {
            qc.head_sm(j, p) /= sum;
            qc.s[p] += qc.head_sm(j, p);
        }
    }
    const double inv_h = 1.0 / static_cast<double>(cfg.h);
    for (double& v : qc.s) v *= inv_h;

    qc.z_q = Matrix(1, n);
    for (std::size_t p = 0; p < k; ++p) {
        const double* row = qc.zrel.row(p);
        for (std::size_t c = 0; c < n; ++c) qc.z_q(0, c) += qc.s[p] * row[c];
    }
    qc.out = decode(model, qc.z_q);
    return qc;
}

void query_backward(PocoModel& model, const LatentField&, const QueryCache& qc,
                    const double dlogits[2], Matrix& dlatents) {
    const PocoConfig& cfg = model.config();
    ParamStore& ps = model.params();
    const auto& layout = model.layout();
    const std::size_t n = cfg.n;
    const std::size_t k = qc.zrel.rows();

    // Decoder.
    const Matrix& dec_w = ps.value(layout.dec_w);
    Matrix& g_dec_w = ps.grad(layout.dec_w);
    Matrix& g_dec_b = ps.grad(layout.dec_b);
    Matrix dz_q(1, n);
    for (int o = 0; o < 2; ++o) {
        g_dec_b(o, 0) += dlogits[o];
        for (std::size_t c = 0; c < n; ++c) {
            g_dec_w(o, c) += dlogits[o] * qc.z_q(0, c);
            dz_q(0, c) += dlogits[o] * dec_w(o, c);
        }
    }

    // Interpolation.
    std::vector<double> ds(k, 0.0);
    Matrix dzrel(k, n);
    for (std::size_t p = 0; p < k; ++p) {
        const double* row = qc.zrel.row(p);
        double* drow = dzrel.row(p);
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            acc += dz_q(0, c) * row[c];
            drow[c] += qc.s[p] * dz_q(0, c);
        }
        ds[p] = acc;
    }

    // Attention: per-head softmax backward, then the linear head map.
    const Matrix& att = ps.value(layout.att_w);
    Matrix& g_att = ps.grad(layout.att_w);
    const double inv_h = 1.0 / static_cast<double>(cfg.h);
    std::vector<double> dcol(k);
    for (std::size_t j = 0; j < cfg.h; ++j) {
        double dot = 0.0;
        for (std::size_t p = 0; p < k; ++p) dot += qc.head_sm(j, p) * ds[p] * inv_h;
        for (std::size_t p = 0; p < k; ++p)
            dcol[p] = qc.head_sm(j, p) * (ds[p] * inv_h - dot);
        const double* wj = att.row(j);
        double* gwj = g_att.row(j);
        for (std::size_t p = 0; p < k; ++p) {
            const double g = dcol[p];
            if (g == 0.0) continue;
            const double* zr = qc.zrel.row(p);
            double* dzr = dzrel.row(p);
            for (std::size_t c = 0; c < n; ++c) {
                gwj[c] += g * zr[c];
                dzr[c] += g * wj[c];
            }
        }
    }

    // R MLP.
    Matrix a1 = relu_forward(qc.a1_pre);
    Matrix a2 = relu_forward(qc.a2_pre);
    Matrix da2, dx, da1;
    linear_backward(a2, ps.value(layout.r_w[2]), dzrel, &da2, &ps.grad(layout.r_w[2]),
                    &ps.grad(layout.r_b[2]));
    Matrix da2_pre = relu_backward(qc.a2_pre, da2);
    linear_backward(a1, ps.value(layout.r_w[1]), da2_pre, &da1, &ps.grad(layout.r_w[1]),
                    &ps.grad(layout.r_b[1]));
    Matrix da1_pre = relu_backward(qc.a1_pre, da1);
    linear_backward(qc.x, ps.value(layout.r_w[0]), da1_pre, &dx, &ps.grad(layout.r_w[0]),
                    &ps.grad(layout.r_b[0]));

    for (std::size_t p = 0; p < k; ++p) {
        const double* dxr = dx.row(p);
        double* dl = dlatents.row(qc.nbr[p]);
        for (std::size_t c = 0; c < n; ++c) dl[c] += dxr[c];
    }
}

double occupancy(const PocoModel& model, const LatentField& field, const Point3& q) {
    return query_forward(model, field, q).out.prob_full;
}

namespace {

std::size_t worker_count() {
    if (const char* env = std::getenv("POCO_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return 1;
}

}  // namespace

std::vector<double> occupancy_batch(const PocoModel& model, const LatentField& field,
                                    const std::vector<Point3>& queries) {
    std::vector<double> out(queries.size());
    const std::size_t threads = std::min(worker_count(), queries.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < queries.size(); ++i)
            out[i] = occupancy(model, field, queries[i]);
        return out;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(64);
                if (i >= queries.size()) return;
                const std::size_t end = std::min(i + 64, queries.size());
                for (std::size_t j = i; j < end; ++j)
                    out[j] = occupancy(model, field, queries[j]);
            }
        });
    }
    for (std::thread& th : pool) th.join();
    return out;
}

// -- Analytic fields -------------------------------------------------------

AnalyticField AnalyticField::sphere(const Point3& center, double radius) {
    AnalyticField f;
    f.kind = Kind::Sphere;
    f.center = center;
    f.radius = radius;
    return f;
}

AnalyticField AnalyticField::box(const Point3& min, const Point3& max) {
    AnalyticField f;
    f.kind = Kind::Box;
    f.box_min = min;
    f.box_max = max;
    return f;
}

AnalyticField AnalyticField::torus(const Point3& center, double major, double minor) {
    AnalyticField f;
    f.kind = Kind::Torus;
    f.center = center;
    f.major = major;
    f.minor = minor;
    return f;
}

bool AnalyticField::inside(const Point3& q) const {
    switch (kind) {
        case Kind::Sphere:
            return (q - center).norm() <= radius;
        case Kind::Box:
            return q.x >= box_min.x && q.x <= box_max.x && q.y >= box_min.y &&
                   q.y <= box_max.y && q.z >= box_min.z && q.z <= box_max.z;
        case Kind::Torus: {
            const Point3 local = q - center;
            const double rho = std::sqrt(local.x * local.x + local.y * local.y);
            const double d = rho - major;
            return d * d + local.z * local.z <= minor * minor;
        }
    }
    return false;
}

Aabb AnalyticField::enclosing_box() const {
    switch (kind) {
        case Kind::Sphere:
            return {center - Point3{radius, radius, radius},
                    center + Point3{radius, radius, radius}};
        case Kind::Box:
            return {box_min, box_max};
        case Kind::Torus: {
            const double out = major + minor;
            return {center - Point3{out, out, minor}, center + Point3{out, out, minor}};
        }
    }
    return {};
}

PointCloud AnalyticField::sample_surface(std::size_t count, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PointCloud out;
    out.points.reserve(count);
    out.normals.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        switch (kind) {
            case Kind::Sphere: {
                Point3 dir{gauss(rng), gauss(rng), gauss(rng)};
                double len = dir.norm();
                while (len < 1e-12) {
                    dir = {gauss(rng), gauss(rng), gauss(rng)};
                    len = dir.norm();
                }
                dir = dir * (1.0 / len);
                out.points.push_back(center + dir * radius);
                out.normals.push_back(dir);
                break;
            }
            case Kind::Box: {
                const Point3 e = box_max - box_min;
                const double areas[3] = {e.y * e.z, e.x * e.z, e.x * e.y};
                const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
                double pick = uni(rng) * total;
                int face = 0;
                for (; face < 5; ++face) {
                    if (pick < areas[face / 2]) break;
                    pick -= areas[face / 2];
                }
                const int axis = face / 2;
                const bool positive = (face % 2) == 1;
                const double u = uni(rng), v = uni(rng);
                Point3 p = box_min;
                Point3 normal{0, 0, 0};
                double* coords[3] = {&p.x, &p.y, &p.z};
                double* ncoords[3] = {&normal.x, &normal.y, &normal.z};
                const double extents[3] = {e.x, e.y, e.z};
                *coords[axis] += positive ? extents[axis] : 0.0;
                *ncoords[axis] = positive ? 1.0 : -1.0;
                const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
                *coords[a1] += u * extents[a1];
                *coords[a2] += v * extents[a2];
                out.points.push_back(p);
                out.normals.push_back(normal);
                break;
            }
            case Kind::Torus: {
                const double phi = 2.0 * M_PI * uni(rng);
                // Rejection on the minor angle keeps sampling area-uniform.
                double theta;
                for (;;) {
                    theta = 2.0 * M_PI * uni(rng);
                    const double accept = (major + minor * std::cos(theta)) /
                                          (major + minor);
                    if (uni(rng) <= accept) break;
                }
                const double rho = major + minor * std::cos(theta);
                out.points.push_back(center + Point3{rho * std::cos(phi),
                                                     rho * std::sin(phi),
                                                     minor * std::sin(theta)});
                out.normals.push_back({std::cos(theta) * std::cos(phi),
                                       std::cos(theta) * std::sin(phi),
                                       std::sin(theta)});
                break;
            }
        }
    }
    return out;
}

TrainingBatch make_training_batch(const AnalyticField& field, std::size_t n_points,
                                  std::size_t n_queries, double sigma_noise,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TrainingBatch batch;
    batch.cloud = field.sample_surface(n_points, rng());
    if (sigma_noise > 0.0) {
        batch.cloud = add_gaussian_noise(batch.cloud, sigma_noise, rng());
    } else {
        rng();  // keep the stream aligned whether or not noise is drawn
    }
    const Aabb box = field.enclosing_box().inflated(0.1);
    std::uniform_real_distribution<double> ux(box.min.x, box.max.x);
    std::uniform_real_distribution<double> uy(box.min.y, box.max.y);
    std::uniform_real_distribution<double> uz(box.min.z, box.max.z);
    batch.queries.reserve(n_queries);
    batch.labels.reserve(n_queries);
    for (std::size_t i = 0; i < n_queries; ++i) {
        const Point3 q{ux(rng), uy(rng), uz(rng)};
        batch.queries.push_back(q);
        batch.labels.push_back(field.inside(q) ? 1 : 0);
    }
    return batch;
}

std::vector<double> train(PocoModel& model, const AnalyticField& field,
                          const TrainOptions& opts) {
    if (opts.steps == 0) throw std::invalid_argument("train: steps must be >= 1");
    std::mt19937_64 rng(opts.seed);
    AdamState adam;
    adam.lr = opts.lr;
    std::vector<double> losses;
    losses.reserve(opts.steps);
    for (std::size_t step = 0; step < opts.steps; ++step) {
        TrainingBatch batch = make_training_batch(field, opts.batch_points,
                                                  opts.batch_queries, opts.sigma_noise,
                                                  rng());
        EncoderCache cache;
        LatentField lf = encode(model, batch.cloud, &cache);

        const std::size_t B = batch.queries.size();
        Matrix logits(B, 2);
        std::vector<QueryCache> qcs;
        qcs.reserve(B);
        for (std::size_t i = 0; i < B; ++i) {
            qcs.push_back(query_forward(model, lf, batch.queries[i]));
            logits(i, 0) = qcs.back().out.logits[0];
            logits(i, 1) = qcs.back().out.logits[1];
        }
        const double loss = cross_entropy(logits, batch.labels);
        if (!std::isfinite(loss))
            throw std::runtime_error("training loss diverged at step " +
                                     std::to_string(step));
        losses.push_back(loss);

        Matrix dlogits = cross_entropy_backward(logits, batch.labels);
        Matrix dlatents(lf.latents.rows(), lf.latents.cols());
        for (std::size_t i = 0; i < B; ++i) {
            const double d[2] = {dlogits(i, 0), dlogits(i, 1)};
            query_backward(model, lf, qcs[i], d, dlatents);
        }
        encode_backward(model, cache, dlatents);
        adam_step(model.params(), adam);
    }
    return losses;
}

}  // namespace poco
