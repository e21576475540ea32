#include <doctest.h>

#include <cmath>
#include <random>

#include "poco/geometry.hpp"
#include "poco/mesh.hpp"

using namespace poco;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back({uni(rng), uni(rng), uni(rng)});
    return cloud;
}

}  // namespace

TEST_CASE("kd-tree on a single point") {
    PointCloud cloud;
    cloud.points.push_back({0.3, 0.4, 0.5});
    KdTree tree(cloud);
    for (const Point3& q : {Point3{0, 0, 0}, Point3{5, -2, 1}}) {
        auto hits = tree.knn(q, 1);
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].index == 0);
    }
}

TEST_CASE("kd-tree matches brute force on random clouds") {
    PointCloud cloud = random_cloud(1000, 7);
    KdTree tree(cloud);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(-0.2, 1.2);
    for (int t = 0; t < 100; ++t) {
        Point3 q{uni(rng), uni(rng), uni(rng)};
        auto got = tree.knn(q, 64);
        auto want = knn_brute(cloud, q, 64);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].index == want[i].index);
            CHECK(got[i].distance == want[i].distance);
        }
    }
}

TEST_CASE("duplicate points come back before farther ones, lower index first") {
    PointCloud cloud;
    cloud.points = {{1, 0, 0}, {0, 0, 0}, {0, 0, 0}, {2, 0, 0}};
    KdTree tree(cloud);
    auto hits = tree.knn({0, 0, 0}, 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].index == 1);
    CHECK(hits[1].index == 2);
    CHECK(hits[2].index == 0);
}

TEST_CASE("colinear points, small k") {
    PointCloud cloud;
    cloud.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    KdTree tree(cloud);
    auto hits = tree.knn({0.1, 0, 0}, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].index == 0);
    CHECK(hits[1].index == 1);

    auto all = tree.knn({0.1, 0, 0}, 3);
    REQUIRE(all.size() == 3);
    CHECK(all[2].index == 2);
}

TEST_CASE("k larger than N clamps to N") {
    PointCloud cloud = random_cloud(5, 3);
    KdTree tree(cloud);
    auto hits = tree.knn({0.5, 0.5, 0.5}, 20);
    CHECK(hits.size() == 5);
    for (std::size_t i = 1; i < hits.size(); ++i)
        CHECK(hits[i - 1].distance <= hits[i].distance);
}

TEST_CASE("nearest_l1 agrees with a brute-force L1 scan") {
    PointCloud cloud = random_cloud(300, 21);
    KdTree tree(cloud);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> uni(-0.5, 1.5);
    for (int t = 0; t < 200; ++t) {
        Point3 q{uni(rng), uni(rng), uni(rng)};
        Neighbor got = tree.nearest_l1(q);
        std::size_t best = 0;
        double best_d = (cloud.points[0] - q).norm1();
        for (std::size_t i = 1; i < cloud.size(); ++i) {
            double d = (cloud.points[i] - q).norm1();
            if (d < best_d) {
                best = i;
                best_d = d;
            }
        }
        CHECK(got.index == best);
        CHECK(got.distance == best_d);
    }
}

TEST_CASE("mean_nn_distance on forced spacings") {
    PointCloud a;
    a.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    CHECK(mean_nn_distance(a) == doctest::Approx(1.0).epsilon(1e-15));

    PointCloud b;
    b.points = {{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    CHECK(mean_nn_distance(b) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("mean_nn_distance matches the double-loop oracle") {
    PointCloud cloud = random_cloud(500, 31);
    double oracle = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cloud.size(); ++j) {
            if (j == i) continue;
            best = std::min(best, (cloud.points[i] - cloud.points[j]).norm());
        }
        oracle += best;
    }
    oracle /= static_cast<double>(cloud.size());
    CHECK(mean_nn_distance(cloud) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("mean_nn_distance ignores coincident duplicates as self") {
    PointCloud cloud;
    cloud.points = {{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
    // Duplicates are distinct indices at distance 0.
    CHECK(mean_nn_distance(cloud) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("rescale_to_reference no-op when already at target") {
    PointCloud cloud;
    cloud.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    auto [scaled, factor] = rescale_to_reference(cloud, 1.0);
    CHECK(factor == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK((scaled.points[i] - cloud.points[i]).norm() < 1e-14);
}

TEST_CASE("rescale_to_reference doubles a unit-spaced line") {
    PointCloud cloud;
    cloud.points = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    auto [scaled, factor] = rescale_to_reference(cloud, 2.0);
    CHECK(factor == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(mean_nn_distance(scaled) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("rescale_to_reference hits random targets") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> uni(0.01, 2.0);
    for (int t = 0; t < 20; ++t) {
        PointCloud cloud = random_cloud(100, 100 + static_cast<std::uint64_t>(t));
        double target = uni(rng);
        auto [scaled, factor] = rescale_to_reference(cloud, target);
        (void)factor;
        CHECK(mean_nn_distance(scaled) == doctest::Approx(target).epsilon(1e-6));
    }
}

TEST_CASE("gaussian noise with sigma zero is the identity") {
    PointCloud cloud = random_cloud(50, 5);
    PointCloud out = add_gaussian_noise(cloud, 0.0, 123);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK((out.points[i] - cloud.points[i]).norm() == 0.0);
}

TEST_CASE("gaussian noise is seed-deterministic") {
    PointCloud cloud = random_cloud(200, 6);
    PointCloud a = add_gaussian_noise(cloud, 0.05, 99);
    PointCloud b = add_gaussian_noise(cloud, 0.05, 99);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK((a.points[i] - b.points[i]).norm() == 0.0);
    PointCloud c = add_gaussian_noise(cloud, 0.05, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if ((a.points[i] - c.points[i]).norm() != 0.0) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("gaussian noise std matches sigma") {
    const std::size_t n = 100000;
    PointCloud cloud;
    cloud.points.assign(n, {0, 0, 0});
    PointCloud noisy = add_gaussian_noise(cloud, 0.05, 77);
    for (int axis = 0; axis < 3; ++axis) {
        double sum = 0.0, sum2 = 0.0;
        for (const Point3& p : noisy.points) {
            double v = axis == 0 ? p.x : axis == 1 ? p.y : p.z;
            sum += v;
            sum2 += v * v;
        }
        double mean = sum / n;
        double std = std::sqrt(sum2 / n - mean * mean);
        CHECK(std >= 0.049);
        CHECK(std <= 0.051);
    }
}

TEST_CASE("sample_surface on a single triangle") {
    Mesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    mesh.triangles = {{0, 1, 2}};
    PointCloud samples = sample_surface(mesh, 500, 9);
    REQUIRE(samples.size() == 500);
    REQUIRE(samples.has_normals());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Point3& p = samples.points[i];
        CHECK(std::abs(p.z) < 1e-15);
        CHECK(p.x >= -1e-12);
        CHECK(p.y >= -1e-12);
        CHECK(p.x + p.y <= 1.0 + 1e-12);
        CHECK((samples.normals[i] - Point3{0, 0, 1}).norm() < 1e-12);
    }
}

TEST_CASE("sample_surface respects triangle areas") {
    // Two coplanar triangles, area ratio 3:1; z splits them apart for counting.
    Mesh mesh;
    mesh.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 2, 0},   // area 3
                     {0, 0, 5}, {1, 0, 5}, {0, 2, 5}};  // area 1
    mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
    PointCloud samples = sample_surface(mesh, 100000, 13);
    std::size_t big = 0;
    for (const Point3& p : samples.points)
        if (p.z < 2.5) ++big;
    double frac = static_cast<double>(big) / static_cast<double>(samples.size());
    CHECK(frac >= 0.73);
    CHECK(frac <= 0.77);
}

TEST_CASE("sample_surface of an icosphere-like mesh stays near the radius") {
    // Octahedron subdivided once, projected to the unit sphere.
    Mesh mesh;
    mesh.vertices = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    mesh.triangles = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                      {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
    for (int pass = 0; pass < 2; ++pass) {
        Mesh next;
        next.vertices = mesh.vertices;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            Point3 m = (mesh.vertices[a] + mesh.vertices[b]) * 0.5;
            m = m * (1.0 / m.norm());
            next.vertices.push_back(m);
            return static_cast<std::uint32_t>(next.vertices.size() - 1);
        };
        for (const auto& t : mesh.triangles) {
            std::uint32_t ab = midpoint(t[0], t[1]);
            std::uint32_t bc = midpoint(t[1], t[2]);
            std::uint32_t ca = midpoint(t[2], t[0]);
            next.triangles.push_back({t[0], ab, ca});
            next.triangles.push_back({t[1], bc, ab});
            next.triangles.push_back({t[2], ca, bc});
            next.triangles.push_back({ab, bc, ca});
        }
        mesh = std::move(next);
    }
    PointCloud samples = sample_surface(mesh, 20000, 17);
    double mean_norm = 0.0;
    for (const Point3& p : samples.points) mean_norm += p.norm();
    mean_norm /= static_cast<double>(samples.size());
    CHECK(mean_norm == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("cloud validation rejects empty clouds and bad normals") {
    PointCloud empty;
    CHECK_THROWS(empty.validate());

    PointCloud bad;
    bad.points = {{0, 0, 0}};
    bad.normals = {{2, 0, 0}};
    CHECK_THROWS(bad.validate());

    PointCloud ok;
    ok.points = {{0, 0, 0}};
    ok.normals = {{0, 0, 1}};
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("aabb covers and inflates") {
    PointCloud cloud;
    cloud.points = {{0, 0, 0}, {2, 4, 6}};
    Aabb box = Aabb::of(cloud);
    CHECK(box.contains({1, 2, 3}));
    CHECK(!box.contains({3, 2, 3}));
    Aabb big = box.inflated(1.0);
    CHECK(big.contains({-0.9, 2, 3}));
    CHECK(big.min.x == doctest::Approx(-1.0));
    CHECK(big.max.z == doctest::Approx(9.0));
}
