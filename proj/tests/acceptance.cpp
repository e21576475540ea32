// Acceptance suite: run with a criterion number 1-11, prints one line and
// exits 0 on pass, 1 on fail.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "poco/io.hpp"
#include "poco/mesher.hpp"
#include "poco/metrics.hpp"
#include "poco/probe.hpp"
#include "poco/tta.hpp"

using namespace poco;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back({uni(rng), uni(rng), uni(rng)});
    return cloud;
}

struct HalfSpaceField : OccupancyField {
    double threshold_x;
    explicit HalfSpaceField(double t) : threshold_x(t) {}
    double query(const Point3& q) const override { return q.x >= threshold_x ? 1.0 : 0.0; }
};

struct TwoSpheresField : OccupancyField {
    double query(const Point3& q) const override {
        const Point3 a{-0.5, 0, 0}, b{0.5, 0, 0};
        return ((q - a).norm() <= 0.25 || (q - b).norm() <= 0.25) ? 1.0 : 0.0;
    }
};

std::vector<std::array<double, 9>> triangle_soup(const Mesh& mesh) {
    std::vector<std::array<double, 9>> soup;
    for (const auto& t : mesh.triangles) {
        std::array<double, 9> tri;
        for (int c = 0; c < 3; ++c) {
            const Point3& v = mesh.vertices[t[c]];
            tri[3 * c] = v.x;
            tri[3 * c + 1] = v.y;
            tri[3 * c + 2] = v.z;
        }
        int best = 0;
        for (int c = 1; c < 3; ++c) {
            for (int d = 0; d < 3; ++d) {
                if (tri[3 * c + d] < tri[3 * best + d]) {
                    best = c;
                    break;
                }
                if (tri[3 * c + d] > tri[3 * best + d]) break;
            }
        }
        std::array<double, 9> rot;
        for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) rot[3 * c + d] = tri[3 * ((best + c) % 3) + d];
        soup.push_back(rot);
    }
    std::sort(soup.begin(), soup.end());
    return soup;
}

bool soups_match(const std::vector<std::array<double, 9>>& a,
                 const std::vector<std::array<double, 9>>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (int d = 0; d < 9; ++d)
            if (std::abs(a[i][d] - b[i][d]) > tol) return false;
    return true;
}

// 1. End-to-end training gradient vs central finite differences.
bool criterion_gradients(std::string& detail) {
    const auto start = Clock::now();
    PocoConfig cfg;
    cfg.n = 4;
    cfg.k = 4;
    cfg.h = 2;
    cfg.L = 1;
    cfg.k_enc = 4;
    cfg.hidden = 8;
    PocoModel model(cfg, 11);

    AnalyticField sphere = AnalyticField::sphere({0, 0, 0}, 0.5);
    TrainingBatch batch = make_training_batch(sphere, 16, 12, 0.0, 3);

    auto loss_fn = [&]() {
        LatentField field = encode(model, batch.cloud);
        Matrix logits(batch.queries.size(), 2);
        for (std::size_t i = 0; i < batch.queries.size(); ++i) {
            QueryCache qc = query_forward(model, field, batch.queries[i]);
            logits(i, 0) = qc.out.logits[0];
            logits(i, 1) = qc.out.logits[1];
        }
        return cross_entropy(logits, batch.labels);
    };

    EncoderCache ec;
    LatentField field = encode(model, batch.cloud, &ec);
    Matrix logits(batch.queries.size(), 2);
    std::vector<QueryCache> caches;
    for (std::size_t i = 0; i < batch.queries.size(); ++i) {
        caches.push_back(query_forward(model, field, batch.queries[i]));
        logits(i, 0) = caches.back().out.logits[0];
        logits(i, 1) = caches.back().out.logits[1];
    }
    Matrix dlogits = cross_entropy_backward(logits, batch.labels);
    model.params().zero_grads();
    Matrix dlatents(field.latents.rows(), field.latents.cols());
    for (std::size_t i = 0; i < batch.queries.size(); ++i) {
        double dl[2] = {dlogits(i, 0), dlogits(i, 1)};
        query_backward(model, field, caches[i], dl, dlatents);
    }
    encode_backward(model, ec, dlatents);

    double err = finite_diff_check(loss_fn, model.params());
    double elapsed = seconds_since(start);
    char buf[128];
    std::snprintf(buf, sizeof buf, "max relative error %.3e, %.1f s", err, elapsed);
    detail = buf;
    return err < 1e-4 && elapsed < 30.0;
}

// 2. Attention weights positive, normalized, and exact for k=1.
bool criterion_attention(std::string& detail) {
    PocoConfig cfg;
    cfg.n = 8;
    cfg.k = 6;
    cfg.h = 4;
    cfg.L = 1;
    cfg.k_enc = 4;
    cfg.hidden = 8;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        PocoModel model(cfg, 1000 + static_cast<std::uint64_t>(t));
        Matrix zrel(6, cfg.n);
        for (std::size_t i = 0; i < zrel.size(); ++i) zrel.data()[i] = uni(rng);
        auto s = attention_weights(model, zrel);
        double sum = 0.0;
        for (double v : s) {
            if (v <= 0.0) {
                detail = "non-positive weight";
                return false;
            }
            sum += v;
        }
        worst = std::max(worst, std::abs(sum - 1.0));

        Matrix one(1, cfg.n);
        for (std::size_t c = 0; c < cfg.n; ++c) one(0, c) = zrel(0, c);
        auto s1 = attention_weights(model, one);
        if (s1.size() != 1 || s1[0] != 1.0) {
            detail = "k=1 weight is not exactly 1";
            return false;
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst |sum-1| = %.3e over 1000 draws", worst);
    detail = buf;
    return worst < 1e-10;
}

// 3. kNN exactness and metric oracles.
bool criterion_knn_metrics(std::string& detail) {
    PointCloud cloud = random_cloud(1000, 31);
    KdTree tree(cloud);
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> uni(-0.7, 0.7);
    for (int t = 0; t < 1000; ++t) {
        Point3 q{uni(rng), uni(rng), uni(rng)};
        auto got = tree.knn(q, 16);
        auto want = knn_brute(cloud, q, 16);
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (got[i].index != want[i].index || got[i].distance != want[i].distance) {
                detail = "kNN mismatch vs brute force";
                return false;
            }
        }
    }

    PointCloud a = random_cloud(200, 33);
    PointCloud b = random_cloud(200, 34);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto add_normals = [&](PointCloud& c) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            Point3 d{gauss(rng), gauss(rng), gauss(rng)};
            c.normals.push_back(d * (1.0 / d.norm()));
        }
    };
    add_normals(a);
    add_normals(b);

    auto cd_oracle = [](const PointCloud& x, const PointCloud& y) {
        auto one_way = [](const PointCloud& from, const PointCloud& to) {
            double sum = 0.0;
            for (const Point3& p : from.points) {
                double best = std::numeric_limits<double>::infinity();
                for (const Point3& q : to.points) best = std::min(best, (p - q).norm1());
                sum += best;
            }
            return sum / static_cast<double>(from.size());
        };
        return 0.5 * (one_way(x, y) + one_way(y, x));
    };
    auto nc_oracle = [](const PointCloud& x, const PointCloud& y) {
        auto one_way = [](const PointCloud& from, const PointCloud& to) {
            double sum = 0.0;
            for (std::size_t i = 0; i < from.size(); ++i) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t bj = 0;
                for (std::size_t j = 0; j < to.size(); ++j) {
                    double d = (from.points[i] - to.points[j]).norm();
                    if (d < best) {
                        best = d;
                        bj = j;
                    }
                }
                sum += std::abs(from.normals[i].dot(to.normals[bj]));
            }
            return sum / static_cast<double>(from.size());
        };
        return 0.5 * (one_way(x, y) + one_way(y, x));
    };
    auto fs_oracle = [](const PointCloud& x, const PointCloud& y, double t) {
        auto below = [&](const PointCloud& from, const PointCloud& to) {
            std::size_t hits = 0;
            for (const Point3& p : from.points) {
                double best = std::numeric_limits<double>::infinity();
                for (const Point3& q : to.points) best = std::min(best, (p - q).norm());
                if (best < t) ++hits;
            }
            return static_cast<double>(hits) / static_cast<double>(from.size());
        };
        double pr = below(x, y), rc = below(y, x);
        return pr + rc == 0.0 ? 0.0 : 2.0 * pr * rc / (pr + rc);
    };

    double e1 = std::abs(chamfer_l1(a, b) - cd_oracle(a, b));
    double e2 = std::abs(normal_consistency(a, b) - nc_oracle(a, b));
    double e3 = std::abs(fscore(a, b, 0.1) - fs_oracle(a, b, 0.1));

    PointCloud p1, p2;
    p1.points = {{0, 0, 0}};
    p2.points = {{1, 0, 0}};
    double singleton = chamfer_l1(p1, p2);

    char buf[128];
    std::snprintf(buf, sizeof buf, "oracle gaps cd %.1e nc %.1e fs %.1e", e1, e2, e3);
    detail = buf;
    return e1 < 1e-12 && e2 < 1e-12 && e3 < 1e-12 && singleton == 1.0;
}

// 4. Sphere mesher accuracy.
bool criterion_mesher(std::string& detail) {
    const auto start = Clock::now();
    AnalyticField sphere = AnalyticField::sphere({0, 0, 0}, 0.5);
    GridSpec grid = GridSpec::covering({{-1, -1, -1}, {1, 1, 1}}, 64);
    Mesh mesh = mc_dense(sphere, grid, 10);
    WatertightReport report = watertight_check(mesh);
    double worst = 0.0;
    for (const Point3& v : mesh.vertices)
        worst = std::max(worst, std::abs(v.norm() - 0.5));
    const double vertex_tol = grid.step * std::pow(2.0, -9.0);
    const double pi = 3.14159265358979323846;
    const double area = mesh.surface_area();
    const double elapsed = seconds_since(start);

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "closed=%d, max radius error %.2e (tol %.2e), area %.4f, %.1f s",
                  report.is_closed ? 1 : 0, worst, vertex_tol, area, elapsed);
    detail = buf;
    return report.is_closed && report.boundary_edge_count == 0 &&
           report.non_manifold_edge_count == 0 && worst <= vertex_tol &&
           std::abs(area - pi) <= 0.02 * pi && elapsed < 60.0;
}

// 5. Region-growing extraction equals dense extraction and saves evaluations.
bool criterion_regro(std::string& detail) {
    AnalyticField sphere = AnalyticField::sphere({0, 0, 0}, 0.5);
    GridSpec grid = GridSpec::covering({{-1, -1, -1}, {1, 1, 1}}, 64);
    Mesh dense = mc_dense(sphere, grid);
    PointCloud seeds = sphere.sample_surface(500, 51);
    Mesh regro = mc_regro(sphere, grid, seeds);
    if (!soups_match(triangle_soup(dense), triangle_soup(regro), 1e-9)) {
        detail = "sphere: regro and dense triangle multisets differ";
        return false;
    }

    TwoSpheresField two;
    CountingField dense_counter(two);
    Mesh dense2 = mc_dense(dense_counter, grid);
    AnalyticField left = AnalyticField::sphere({-0.5, 0, 0}, 0.25);
    PointCloud left_seeds = left.sample_surface(400, 52);
    CountingField regro_counter(two);
    Mesh regro2 = mc_regro(regro_counter, grid, left_seeds);

    Mesh left_only;
    left_only.vertices = dense2.vertices;
    for (const auto& t : dense2.triangles) {
        bool keep = true;
        for (int c = 0; c < 3; ++c)
            if (dense2.vertices[t[c]].x > 0.0) keep = false;
        if (keep) left_only.triangles.push_back(t);
    }
    if (!soups_match(triangle_soup(left_only), triangle_soup(regro2), 1e-9)) {
        detail = "two spheres: seeded component differs from dense";
        return false;
    }

    const double ratio = static_cast<double>(dense_counter.count()) /
                         static_cast<double>(regro_counter.count());
    char buf[96];
    std::snprintf(buf, sizeof buf, "evaluation ratio dense/regro = %.1fx", ratio);
    detail = buf;
    return ratio >= 10.0;
}

// 6. Dichotomic search bound.
bool criterion_dichotomy(std::string& detail) {
    HalfSpaceField field(0.537);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const double lo = 0.437 + 0.001 * t;  // brackets keep length 0.2
        Point3 v = dichotomic_edge_vertex(field, {lo, 0, 0}, {lo + 0.2, 0, 0}, 10);
        worst = std::max(worst, std::abs(v.x - 0.537));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst offset %.3e (bound 1.96e-4)", worst);
    detail = buf;
    return worst <= 1.96e-4;
}

// 7. End-to-end learning on the analytic sphere.
bool criterion_end_to_end(std::string& detail) {
    const auto start = Clock::now();
    PocoConfig cfg;
    cfg.n = 32;
    cfg.k = 32;
    cfg.h = 16;
    cfg.L = 2;
    cfg.k_enc = 16;
    cfg.hidden = 32;
    PocoModel model(cfg, 71);

    AnalyticField sphere = AnalyticField::sphere({0, 0, 0}, 0.5);
    TrainOptions opts;
    opts.steps = 1500;
    opts.batch_points = 512;
    opts.batch_queries = 200;
    opts.lr = 1e-3;
    opts.sigma_noise = 0.02;
    opts.seed = 72;
    auto losses = train(model, sphere, opts);
    const double train_time = seconds_since(start);

    PointCloud cloud = sphere.sample_surface(3000, 73);
    LatentField field = encode(model, cloud);
    ModelField occupancy_field(model, field);

    GridSpec grid = GridSpec::covering({{-1, -1, -1}, {1, 1, 1}}, 64);
    Mesh mesh = mc_regro(occupancy_field, grid, cloud, 10);

    GroundTruth gt;
    gt.field = &sphere;
    MetricsReport report = evaluate_reconstruction(mesh, gt, 20000, 100000, 74, 0.02);
    const double elapsed = seconds_since(start);

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "loss %.3f->%.3f, IoU %.3f, FS(0.02) %.3f, %.0f s (train %.0f s)",
                  losses.front(), losses.back(), report.iou, report.fscore, elapsed,
                  train_time);
    detail = buf;
    return report.iou > 0.90 && report.fscore > 0.90 && elapsed < 900.0;
}

// 8. Test-time augmentation plan invariants.
bool criterion_tta(std::string& detail) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SubsamplePlan plan = plan_subsamples(40, 15, 3, seed);
        std::size_t mn = plan.coverage[0], mx = plan.coverage[0];
        for (std::size_t c : plan.coverage) {
            mn = std::min(mn, c);
            mx = std::max(mx, c);
        }
        if (mn < 3 || mx - mn > 1) {
            detail = "coverage bounds violated";
            return false;
        }
    }

    SubsamplePlan small = plan_subsamples(10, 4, 2, 7);
    if (small.subsamples.size() < 5) {
        detail = "N=10 size=4 n_view=2 produced fewer than 5 subsamples";
        return false;
    }

    PocoConfig cfg;
    cfg.n = 4;
    cfg.k = 4;
    cfg.h = 2;
    cfg.L = 1;
    cfg.k_enc = 4;
    cfg.hidden = 6;
    PocoModel model(cfg, 81);
    PointCloud cloud = random_cloud(15, 82);
    SubsamplePlan full;
    full.subsamples.push_back(std::vector<std::size_t>(cloud.size()));
    for (std::size_t i = 0; i < cloud.size(); ++i) full.subsamples[0][i] = i;
    full.coverage.assign(cloud.size(), 1);
    LatentField plain = encode(model, cloud);
    LatentField tta = encode_with_tta(model, cloud, full);
    for (std::size_t i = 0; i < plain.latents.size(); ++i) {
        if (tta.latents.data()[i] != plain.latents.data()[i]) {
            detail = "single-subsample TTA is not bit-identical to plain encode";
            return false;
        }
    }
    detail = "coverage, subsample count, and bit-equality hold";
    return true;
}

// 9. Scene scaling accuracy.
bool criterion_rescale(std::string& detail) {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> target_dist(0.005, 1.5);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        PointCloud cloud = random_cloud(80, 9000 + static_cast<std::uint64_t>(t));
        const double target = target_dist(rng);
        auto [scaled, factor] = rescale_to_reference(cloud, target);
        (void)factor;
        const double got = mean_nn_distance(scaled);
        worst = std::max(worst, std::abs(got - target) / target);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst relative error %.3e over 100 clouds", worst);
    detail = buf;
    return worst < 1e-6;
}

// 10. Receptive-field probe against the 2-hop breadth-first oracle.
bool criterion_probe(std::string& detail) {
    PocoConfig cfg;
    cfg.n = 8;
    cfg.k = 8;
    cfg.h = 2;
    cfg.L = 2;
    cfg.k_enc = 4;
    cfg.hidden = 8;
    PocoModel model(cfg, 101);
    PointCloud cloud = random_cloud(200, 102);
    KdTree tree(cloud);

    for (std::size_t start : {std::size_t{3}, std::size_t{77}, std::size_t{160}}) {
        std::set<std::size_t> want = {start};
        std::set<std::size_t> frontier = {start};
        for (std::size_t hop = 0; hop < cfg.L; ++hop) {
            std::set<std::size_t> next;
            for (std::size_t i : frontier)
                for (const Neighbor& nb : tree.knn(cloud.points[i], cfg.k_enc))
                    if (want.insert(nb.index).second) next.insert(nb.index);
            frontier = std::move(next);
        }
        auto got = receptive_field_probe(model, cloud, start, 1e-7);
        if (std::set<std::size_t>(got.begin(), got.end()) != want) {
            detail = "probe disagrees with the breadth-first closure";
            return false;
        }
    }
    detail = "probe equals the 2-hop closure at three probe points";
    return true;
}

// 11. Serialization and file format round-trips.
bool criterion_serialization(std::string& detail) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "poco_acceptance_11";
    fs::create_directories(dir);
    auto file = [&](const char* name) { return (dir / name).string(); };
    auto bytes = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        return std::vector<char>(std::istreambuf_iterator<char>(in),
                                 std::istreambuf_iterator<char>());
    };

    bool ok = true;
    std::string why;

    PocoConfig cfg;
    cfg.n = 6;
    cfg.k = 5;
    cfg.h = 3;
    cfg.L = 2;
    cfg.k_enc = 4;
    cfg.hidden = 10;
    PocoModel model(cfg, 111);
    save_model(model, file("m1.poco"));
    PocoModel loaded = load_model(file("m1.poco"));
    save_model(loaded, file("m2.poco"));
    if (bytes(file("m1.poco")) != bytes(file("m2.poco"))) {
        ok = false;
        why = "save-load-save is not byte-identical";
    }

    PointCloud cloud = random_cloud(64, 112);
    write_xyz(cloud, file("c.xyz"));
    PointCloud cloud_back = read_xyz(file("c.xyz"));
    for (std::size_t i = 0; ok && i < cloud.size(); ++i)
        if ((cloud.points[i] - cloud_back.points[i]).norm() > 1e-7) {
            ok = false;
            why = "xyz round-trip lost precision";
        }

    AnalyticField sphere = AnalyticField::sphere({0, 0, 0}, 0.5);
    GridSpec grid = GridSpec::covering({{-1, -1, -1}, {1, 1, 1}}, 16);
    Mesh mesh = mc_dense(sphere, grid);
    write_obj(mesh, file("m.obj"));
    Mesh mesh_back = read_obj(file("m.obj"));
    if (ok && (mesh_back.triangles.size() != mesh.triangles.size() ||
               !watertight_check(mesh_back).is_closed)) {
        ok = false;
        why = "obj round-trip broke the mesh";
    }
    for (std::size_t i = 0; ok && i < mesh.vertices.size(); ++i)
        if ((mesh.vertices[i] - mesh_back.vertices[i]).norm() > 1e-7) {
            ok = false;
            why = "obj round-trip lost precision";
        }

    if (ok) {
        auto data = bytes(file("m1.poco"));
        data[0] = 'Z';
        std::ofstream(file("bad.poco"), std::ios::binary)
            .write(data.data(), static_cast<std::streamsize>(data.size()));
        bool threw = false;
        std::string message;
        try {
            load_model(file("bad.poco"));
        } catch (const std::exception& e) {
            threw = true;
            message = e.what();
        }
        if (!threw || message.empty()) {
            ok = false;
            why = "corrupted model was not rejected with a message";
        }
    }

    fs::remove_all(dir);
    detail = ok ? "model bytes stable, xyz/obj round-trips exact, corruption rejected"
                : why;
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <criterion 1-11>\n", argv[0]);
        return 2;
    }
    const int criterion = std::atoi(argv[1]);
    static const struct {
        const char* name;
        bool (*run)(std::string&);
    } kCriteria[] = {
        {"gradient correctness", criterion_gradients},
        {"attention contract", criterion_attention},
        {"kNN and metric oracles", criterion_knn_metrics},
        {"mesher accuracy", criterion_mesher},
        {"region growing equals dense", criterion_regro},
        {"dichotomy bound", criterion_dichotomy},
        {"end-to-end learning", criterion_end_to_end},
        {"TTA invariants", criterion_tta},
        {"scene scaling", criterion_rescale},
        {"receptive-field probe", criterion_probe},
        {"serialization", criterion_serialization},
    };
    if (criterion < 1 || criterion > 11) {
        std::fprintf(stderr, "criterion must be 1-11\n");
        return 2;
    }
    std::string detail;
    const bool pass = kCriteria[criterion - 1].run(detail);
    std::printf("criterion %d (%s): %s%s%s\n", criterion, kCriteria[criterion - 1].name,
                pass ? "PASS" : "FAIL", detail.empty() ? "" : " - ", detail.c_str());
    return pass ? 0 : 1;
}
