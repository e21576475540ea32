#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "poco/io.hpp"
#include "poco/mesher.hpp"
#include "poco/metrics.hpp"
#include "poco/model.hpp"
#include "poco/probe.hpp"
#include "poco/tta.hpp"

namespace {

poco::AnalyticField shape_by_name(const std::string& name) {
    if (name == "sphere") return poco::AnalyticField::sphere({0, 0, 0}, 0.5);
    if (name == "box")
        return poco::AnalyticField::box({-0.4, -0.4, -0.4}, {0.4, 0.4, 0.4});
    if (name == "torus") return poco::AnalyticField::torus({0, 0, 0}, 0.35, 0.15);
    throw CLI::ValidationError("shape", "unknown shape '" + name + "'");
}

// Occupancy classes at a caller-chosen probability threshold. The meshers
// only compare classes, so bisection stays exact for any threshold.
class ThresholdedField : public poco::OccupancyField {
public:
    ThresholdedField(const poco::OccupancyField& inner, double threshold)
        : inner_(inner), threshold_(threshold) {}
    double query(const poco::Point3& q) const override {
        return inner_.query(q) >= threshold_ ? 1.0 : 0.0;
    }

private:
    const poco::OccupancyField& inner_;
    double threshold_;
};

void apply_config(const CLI::App& cmd, const std::string& config_path,
                  const std::map<std::string, CLI::Option*>& mapping) {
    if (config_path.empty()) return;
    auto config = poco::read_config(config_path);
    for (const auto& [key, value] : config) {
        auto it = mapping.find(key);
        if (it == mapping.end()) continue;  // key belongs to another subcommand
        if (it->second->count() == 0) it->second->add_result(value);
    }
    (void)cmd;
}

int run_train(const std::string& shape, const std::string& out_path,
              const poco::TrainOptions& opts, std::uint64_t model_seed) {
    const poco::AnalyticField field = shape_by_name(shape);
    poco::PocoModel model(poco::PocoConfig{}, model_seed);
    const auto losses = poco::train(model, field, opts);
    poco::save_model(model, out_path);
    std::printf("trained %zu steps: loss %.6f -> %.6f\n", losses.size(), losses.front(),
                losses.back());
    std::printf("model written to %s\n", out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-cloud occupancy reconstruction"};
    app.require_subcommand(1);

    // train ---------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train on an analytic shape");
    std::string shape = "sphere", model_out;
    poco::TrainOptions topts;
    std::uint64_t model_seed = 42;
    train_cmd->add_option("--shape", shape, "sphere|box|torus");
    train_cmd->add_option("--steps", topts.steps, "Adam steps")->check(CLI::PositiveNumber);
    train_cmd->add_option("--out", model_out, "output model path")->required();
    train_cmd->add_option("--seed", topts.seed, "training RNG seed");
    train_cmd->add_option("--noise", topts.sigma_noise, "Gaussian noise sigma");
    train_cmd->add_option("--points", topts.batch_points, "surface points per step");
    train_cmd->add_option("--queries", topts.batch_queries, "queries per step");
    train_cmd->add_option("--lr", topts.lr, "learning rate");
    train_cmd->add_option("--init-seed", model_seed, "parameter init seed");

    // reconstruct ---------------------------------------------------------
    auto* rec_cmd = app.add_subcommand("reconstruct", "Mesh a point cloud");
    std::string rec_model, rec_input, rec_output, rec_config;
    std::size_t grid_res = 128, tta_views = 1, tta_size = 3000, chunk_size = 0;
    double grid_step = 0.0, rescale_nn = 0.0, threshold = 0.5;
    std::uint64_t rec_seed = 0;
    bool dense = false;
    rec_cmd->add_option("--model", rec_model, "model file")->required();
    rec_cmd->add_option("--input", rec_input, "input .xyz cloud")->required();
    rec_cmd->add_option("--out", rec_output, "output .obj mesh")->required();
    auto* res_opt = rec_cmd->add_option("--grid-res", grid_res, "corners on longest axis");
    auto* step_opt = rec_cmd->add_option("--grid-step", grid_step, "grid step size");
    res_opt->excludes(step_opt);
    auto* tta_opt = rec_cmd->add_option("--tta", tta_views, "TTA views (1 = off)");
    rec_cmd->add_option("--tta-size", tta_size, "TTA subsample size");
    auto* chunk_opt = rec_cmd->add_option("--chunk-size", chunk_size,
                                          "max points per encoder pass (0 = off)");
    auto* rescale_opt =
        rec_cmd->add_option("--rescale-nn", rescale_nn, "target mean-NN distance");
    auto* thr_opt = rec_cmd->add_option("--threshold", threshold, "occupancy threshold");
    auto* seed_opt = rec_cmd->add_option("--seed", rec_seed, "plan RNG seed");
    rec_cmd->add_flag("--dense", dense, "dense marching cubes instead of region growing");
    rec_cmd->add_option("--config", rec_config, "key=value config file");

    // eval ----------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a reconstruction");
    std::string pred_path, gt_mesh_path, gt_shape;
    std::size_t samples = 100000, volume_samples = 100000;
    double fs_threshold = 0.01;
    std::uint64_t eval_seed = 0;
    bool kv = false;
    eval_cmd->add_option("--pred", pred_path, "predicted .obj mesh")->required();
    auto* gm = eval_cmd->add_option("--gt-mesh", gt_mesh_path, "ground-truth .obj mesh");
    auto* gs = eval_cmd->add_option("--gt-shape", gt_shape, "sphere|box|torus");
    gm->excludes(gs);
    eval_cmd->add_option("--samples", samples, "surface samples per side");
    eval_cmd->add_option("--volume-samples", volume_samples, "IoU volume samples");
    eval_cmd->add_option("--fs-threshold", fs_threshold, "F-score distance threshold");
    eval_cmd->add_option("--seed", eval_seed, "sampling seed");
    eval_cmd->add_flag("--kv", kv, "also print machine-readable key=value lines");

    // probe ---------------------------------------------------------------
    auto* probe_cmd = app.add_subcommand("probe", "Receptive-field probe");
    std::string probe_model, probe_input;
    std::size_t probe_index = 0;
    double probe_threshold = 1e-7;
    probe_cmd->add_option("--model", probe_model, "model file")->required();
    probe_cmd->add_option("--input", probe_input, "input .xyz cloud")->required();
    probe_cmd->add_option("--index", probe_index, "probed point index")->required();
    probe_cmd->add_option("--threshold", probe_threshold, "gradient norm cutoff");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) return run_train(shape, model_out, topts, model_seed);

        if (*rec_cmd) {
            apply_config(*rec_cmd, rec_config,
                         {{"grid_res", res_opt},
                          {"grid_step", step_opt},
                          {"tta_views", tta_opt},
                          {"chunk_size", chunk_opt},
                          {"rescale_nn", rescale_opt},
                          {"threshold", thr_opt},
                          {"seed", seed_opt}});
            poco::PocoModel model = poco::load_model(rec_model);
            poco::PointCloud cloud = poco::read_xyz(rec_input);
            if (rescale_opt->count() || rescale_nn > 0.0) {
                if (rescale_opt->count()) rescale_nn = std::stod(rescale_opt->results()[0]);
                auto [scaled, factor] = poco::rescale_to_reference(cloud, rescale_nn);
                cloud = std::move(scaled);
                std::printf("rescaled input by %.6g\n", factor);
            }
            if (res_opt->count()) grid_res = std::stoul(res_opt->results()[0]);
            if (step_opt->count()) grid_step = std::stod(step_opt->results()[0]);
            if (tta_opt->count()) tta_views = std::stoul(tta_opt->results()[0]);
            if (chunk_opt->count()) chunk_size = std::stoul(chunk_opt->results()[0]);
            if (thr_opt->count()) threshold = std::stod(thr_opt->results()[0]);
            if (seed_opt->count()) rec_seed = std::stoul(seed_opt->results()[0]);

            poco::LatentField latent;
            if (chunk_size > 0 && cloud.size() > chunk_size) {
                auto plan = poco::plan_chunks(cloud, chunk_size, 3, rec_seed);
                latent = poco::encode_chunked(model, cloud, plan);
            } else if (tta_views > 1) {
                auto plan = poco::plan_subsamples(
                    cloud.size(), std::min(cloud.size(), tta_size), tta_views, rec_seed);
                latent = poco::encode_with_tta(model, cloud, plan);
            } else {
                latent = poco::encode(model, cloud);
            }
            poco::ModelField field(model, std::move(latent));
            ThresholdedField classes(field, threshold);

            const poco::Aabb box = poco::Aabb::of(cloud).inflated(0.05);
            const poco::GridSpec grid = grid_step > 0.0
                                            ? poco::GridSpec::with_step(box, grid_step)
                                            : poco::GridSpec::covering(box, grid_res);
            const poco::Mesh mesh =
                dense ? poco::mc_dense(classes, grid)
                      : poco::mc_regro(classes, grid,
                                       field.latent_field().cloud);
            poco::write_obj(mesh, rec_output);
            const auto report = poco::watertight_check(mesh);
            std::printf("mesh: %zu vertices, %zu triangles, %s\n", mesh.vertices.size(),
                        mesh.triangles.size(), report.is_closed ? "closed" : "open");
            std::printf("mesh written to %s\n", rec_output.c_str());
            return 0;
        }

        if (*eval_cmd) {
            if (gt_mesh_path.empty() && gt_shape.empty())
                throw CLI::ValidationError("eval", "need --gt-mesh or --gt-shape");
            const poco::Mesh pred = poco::read_obj(pred_path);
            poco::Mesh gt_mesh;
            poco::AnalyticField gt_field;
            poco::GroundTruth gt;
            if (!gt_mesh_path.empty()) {
                gt_mesh = poco::read_obj(gt_mesh_path);
                gt.mesh = &gt_mesh;
            } else {
                gt_field = shape_by_name(gt_shape);
                gt.field = &gt_field;
            }
            const auto report = poco::evaluate_reconstruction(
                pred, gt, samples, volume_samples, eval_seed, fs_threshold);
            std::printf("chamfer-L1 x100   %10.4f\n", report.chamfer_x100);
            std::printf("normal consistency %9.4f\n", report.normal_consistency);
            std::printf("f-score (t=%.3g) %10.4f\n", report.fs_threshold, report.fscore);
            std::printf("volumetric IoU   %10.4f%s\n", report.iou,
                        report.iou_open_mesh_warning ? "  (warning: open mesh)" : "");
            if (kv) {
                std::printf("chamfer_x100=%.10g\n", report.chamfer_x100);
                std::printf("normal_consistency=%.10g\n", report.normal_consistency);
                std::printf("fscore=%.10g\n", report.fscore);
                std::printf("iou=%.10g\n", report.iou);
            }
            return 0;
        }

        if (*probe_cmd) {
            poco::PocoModel model = poco::load_model(probe_model);
            poco::PointCloud cloud = poco::read_xyz(probe_input);
            const auto indices =
                poco::receptive_field_probe(model, cloud, probe_index, probe_threshold);
            std::printf("receptive field of point %zu: %zu points\n", probe_index,
                        indices.size());
            for (std::size_t i : indices) std::printf("%zu\n", i);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
