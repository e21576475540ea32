#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "poco/io.hpp"
#include "poco/mesher.hpp"
#include "poco/metrics.hpp"
#include "poco/model.hpp"
#include "poco/probe.hpp"
#include "poco/tta.hpp"

namespace py = pybind11;

namespace {

poco::PointCloud cloud_from_arrays(py::array_t<double> points,
                                   py::object normals_obj) {
    auto pts = points.unchecked<2>();
    if (pts.shape(1) != 3) throw std::invalid_argument("points must be (N, 3)");
    poco::PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(pts.shape(0)));
    for (py::ssize_t i = 0; i < pts.shape(0); ++i)
        cloud.points.push_back({pts(i, 0), pts(i, 1), pts(i, 2)});
    if (!normals_obj.is_none()) {
        auto normals = normals_obj.cast<py::array_t<double>>();
        auto nrm = normals.unchecked<2>();
        if (nrm.shape(0) != pts.shape(0) || nrm.shape(1) != 3)
            throw std::invalid_argument("normals must match points");
        for (py::ssize_t i = 0; i < nrm.shape(0); ++i)
            cloud.normals.push_back({nrm(i, 0), nrm(i, 1), nrm(i, 2)});
    }
    cloud.validate();
    return cloud;
}

py::array_t<double> points_to_array(const std::vector<poco::Point3>& points) {
    py::array_t<double> out({static_cast<py::ssize_t>(points.size()), py::ssize_t(3)});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < points.size(); ++i) {
        v(static_cast<py::ssize_t>(i), 0) = points[i].x;
        v(static_cast<py::ssize_t>(i), 1) = points[i].y;
        v(static_cast<py::ssize_t>(i), 2) = points[i].z;
    }
    return out;
}

poco::AnalyticField field_by_name(const std::string& shape) {
    if (shape == "sphere") return poco::AnalyticField::sphere({0, 0, 0}, 0.5);
    if (shape == "box")
        return poco::AnalyticField::box({-0.4, -0.4, -0.4}, {0.4, 0.4, 0.4});
    if (shape == "torus") return poco::AnalyticField::torus({0, 0, 0}, 0.35, 0.15);
    throw std::invalid_argument("unknown shape '" + shape + "'");
}

}  // namespace

PYBIND11_MODULE(_poco, m) {
    m.doc() = "Point-cloud occupancy-field surface reconstruction";

    py::class_<poco::PocoConfig>(m, "Config")
        .def(py::init<>())
        .def_readwrite("n", &poco::PocoConfig::n)
        .def_readwrite("k", &poco::PocoConfig::k)
        .def_readwrite("h", &poco::PocoConfig::h)
        .def_readwrite("L", &poco::PocoConfig::L)
        .def_readwrite("k_enc", &poco::PocoConfig::k_enc)
        .def_readwrite("hidden", &poco::PocoConfig::hidden)
        .def_readwrite("use_normals", &poco::PocoConfig::use_normals)
        .def_readwrite("centered_input", &poco::PocoConfig::centered_input);

    py::class_<poco::PocoModel>(m, "Model")
        .def(py::init<const poco::PocoConfig&, std::uint64_t>(), py::arg("config"),
             py::arg("seed") = 42)
        .def_property_readonly("config", &poco::PocoModel::config)
        .def("save", [](const poco::PocoModel& self, const std::string& path) {
            poco::save_model(self, path);
        })
        .def_static("load", [](const std::string& path) { return poco::load_model(path); });

    py::class_<poco::Mesh>(m, "Mesh")
        .def_property_readonly("vertices",
                               [](const poco::Mesh& self) {
                                   return points_to_array(self.vertices);
                               })
        .def_property_readonly("triangles",
                               [](const poco::Mesh& self) {
                                   py::array_t<std::uint32_t> out(
                                       {static_cast<py::ssize_t>(self.triangles.size()),
                                        py::ssize_t(3)});
                                   auto v = out.mutable_unchecked<2>();
                                   for (std::size_t i = 0; i < self.triangles.size(); ++i)
                                       for (int c = 0; c < 3; ++c)
                                           v(static_cast<py::ssize_t>(i), c) =
                                               self.triangles[i][static_cast<std::size_t>(c)];
                                   return out;
                               })
        .def("surface_area", &poco::Mesh::surface_area)
        .def("is_closed",
             [](const poco::Mesh& self) { return poco::watertight_check(self).is_closed; })
        .def("save", [](const poco::Mesh& self, const std::string& path) {
            poco::write_obj(self, path);
        })
        .def_static("load", [](const std::string& path) { return poco::read_obj(path); });

    m.def(
        "train",
        [](const std::string& shape, std::size_t steps, std::size_t points,
           std::size_t queries, double lr, double noise, std::uint64_t seed,
           std::uint64_t init_seed) {
            const poco::AnalyticField field = field_by_name(shape);
            poco::PocoModel model(poco::PocoConfig{}, init_seed);
            poco::TrainOptions opts;
            opts.steps = steps;
            opts.batch_points = points;
            opts.batch_queries = queries;
            opts.lr = lr;
            opts.sigma_noise = noise;
            opts.seed = seed;
            auto losses = poco::train(model, field, opts);
            return py::make_tuple(std::move(model), losses);
        },
        py::arg("shape"), py::arg("steps") = 2000, py::arg("points") = 512,
        py::arg("queries") = 200, py::arg("lr") = 1e-3, py::arg("noise") = 0.0,
        py::arg("seed") = 0, py::arg("init_seed") = 42);

    m.def(
        "occupancy",
        [](const poco::PocoModel& model, py::array_t<double> points, py::object normals,
           py::array_t<double> queries, std::size_t tta_views, std::uint64_t seed) {
            const poco::PointCloud cloud = cloud_from_arrays(points, normals);
            poco::LatentField latent;
            if (tta_views > 1) {
                auto plan = poco::plan_subsamples(cloud.size(), cloud.size(), tta_views,
                                                  seed);
                latent = poco::encode_with_tta(model, cloud, plan);
            } else {
                latent = poco::encode(model, cloud);
            }
            auto qs = queries.unchecked<2>();
            std::vector<poco::Point3> qpts;
            qpts.reserve(static_cast<std::size_t>(qs.shape(0)));
            for (py::ssize_t i = 0; i < qs.shape(0); ++i)
                qpts.push_back({qs(i, 0), qs(i, 1), qs(i, 2)});
            auto probs = poco::occupancy_batch(model, latent, qpts);
            return py::array_t<double>(static_cast<py::ssize_t>(probs.size()),
                                       probs.data());
        },
        py::arg("model"), py::arg("points"), py::arg("normals") = py::none(),
        py::arg("queries") = py::array_t<double>(), py::arg("tta_views") = 1,
        py::arg("seed") = 0);

    m.def(
        "reconstruct",
        [](const poco::PocoModel& model, py::array_t<double> points, py::object normals,
           std::size_t grid_res, std::size_t tta_views, bool dense, std::uint64_t seed) {
            const poco::PointCloud cloud = cloud_from_arrays(points, normals);
            poco::LatentField latent;
            if (tta_views > 1) {
                auto plan = poco::plan_subsamples(cloud.size(), cloud.size(), tta_views,
                                                  seed);
                latent = poco::encode_with_tta(model, cloud, plan);
            } else {
                latent = poco::encode(model, cloud);
            }
            poco::ModelField field(model, std::move(latent));
            const poco::Aabb box = poco::Aabb::of(cloud).inflated(0.05);
            const poco::GridSpec grid = poco::GridSpec::covering(box, grid_res);
            return dense ? poco::mc_dense(field, grid)
                         : poco::mc_regro(field, grid, cloud);
        },
        py::arg("model"), py::arg("points"), py::arg("normals") = py::none(),
        py::arg("grid_res") = 128, py::arg("tta_views") = 1, py::arg("dense") = false,
        py::arg("seed") = 0);

    m.def(
        "mesh_analytic",
        [](const std::string& shape, std::size_t grid_res) {
            const poco::AnalyticField field = field_by_name(shape);
            const poco::Aabb box = field.enclosing_box().inflated(0.2);
            const poco::GridSpec grid = poco::GridSpec::covering(box, grid_res);
            return poco::mc_dense(field, grid);
        },
        py::arg("shape"), py::arg("grid_res") = 64);

    m.def(
        "evaluate",
        [](const poco::Mesh& pred, const std::string& gt_shape, std::size_t samples,
           std::size_t volume_samples, std::uint64_t seed, double fs_threshold) {
            const poco::AnalyticField field = field_by_name(gt_shape);
            poco::GroundTruth gt;
            gt.field = &field;
            const auto r = poco::evaluate_reconstruction(pred, gt, samples, volume_samples,
                                                         seed, fs_threshold);
            py::dict out;
            out["chamfer_x100"] = r.chamfer_x100;
            out["normal_consistency"] = r.normal_consistency;
            out["fscore"] = r.fscore;
            out["iou"] = r.iou;
            return out;
        },
        py::arg("pred"), py::arg("gt_shape"), py::arg("samples") = 10000,
        py::arg("volume_samples") = 10000, py::arg("seed") = 0,
        py::arg("fs_threshold") = 0.01);

    m.def(
        "receptive_field",
        [](const poco::PocoModel& model, py::array_t<double> points, std::size_t index,
           double threshold) {
            const poco::PointCloud cloud = cloud_from_arrays(points, py::none());
            return poco::receptive_field_probe(model, cloud, index, threshold);
        },
        py::arg("model"), py::arg("points"), py::arg("index"),
        py::arg("threshold") = 1e-7);
}
