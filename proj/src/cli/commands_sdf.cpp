#include <cmath>
#include <memory>

#include "common.hpp"
#include "spe/io_formats.hpp"
#include "spe/surface.hpp"
#include "train_flags.hpp"

namespace spe::cli {

using nlohmann::json;

namespace {

json stage_json(const std::vector<StageSummary>& stages) {
  json out = json::array();
  for (const auto& s : stages) {
    out.push_back({{"k", s.k},
                   {"start_loss", s.start_loss},
                   {"end_loss", s.end_loss},
                   {"pre_refine_loss", std::isnan(s.pre_refine_loss) ? json(nullptr) : json(s.pre_refine_loss)},
                   {"post_refine_loss", std::isnan(s.post_refine_loss) ? json(nullptr) : json(s.post_refine_loss)}});
  }
  return out;
}

Checkpoint load_model(const std::string& path) {
  require_file(path, "--model");
  try {
    Checkpoint ckpt = load_checkpoint(path);
    require(ckpt.model.input_dim() == 3 && ckpt.model.output_dim() == 1,
            path + ": not a 3-D signed distance model");
    return ckpt;
  } catch (const FileFormatError& e) {
    throw UsageError(e.what());
  }
}

struct FixtureOptions {
  std::string shape = "sphere:0.5";
  std::size_t n = 10000;
  std::uint64_t seed = 0;
  std::string out;
};

void run_make_fixture(Context& ctx, const FixtureOptions& o) {
  const GroundTruth gt = parse_ground_truth(o.shape);
  require(o.n >= 1, "--n must be >= 1");
  std::mt19937_64 rng(o.seed);
  const PointCloud cloud = gt.sample_surface(o.n, rng);
  write_xyz(o.out, cloud);
  write_manifest(ctx, o.out, "make-fixture", {{"shape", o.shape}, {"n", o.n}, {"seed", o.seed}},
                 {{"points", cloud.size()}});
  ctx.out << "wrote " << cloud.size() << " points to " << o.out << "\n";
}

struct FitSdfOptions {
  std::string input, out, log, init, normalize = "auto";
  bool quiet = false;
  TrainFlags flags;
};

void run_fit_sdf(Context& ctx, const FitSdfOptions& o) {
  const TrainConfig cfg = o.flags.resolve(o.flags.preset == "desk" ? TrainConfig::desk() : TrainConfig{});
  const NormalizeMode mode = parse_normalize_mode(o.normalize);
  PointCloud cloud = load_cloud(o.input);
  std::unique_ptr<Checkpoint> init;
  if (!o.init.empty()) {
    init = std::make_unique<Checkpoint>(load_model(o.init));
  }
  cloud = apply_normalization(cloud, mode);
  const std::string log_path = o.log.empty() ? o.out + ".log.csv" : o.log;

  ProgressFn progress;
  if (!o.quiet) {
    progress = [&](const TrainLogRow& row) {
      if (row.step % 100 == 0) {
        ctx.out << "step " << row.step << " K=" << row.stage_k << " loss " << row.loss << "\n";
      }
    };
  }
  TrainResult result;
  try {
    result = train_sdf(cloud, cfg, init ? &init->model : nullptr, progress);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Checkpoint ckpt;
  ckpt.model = result.model;
  ckpt.settings = to_json(cfg);
  ckpt.normalization = cloud.transform;
  ckpt.step = result.log.empty() ? 0 : result.log.back().step + 1;
  ckpt.loss = result.stages.empty() ? 0.0 : result.stages.back().end_loss;
  save_checkpoint(o.out, ckpt);
  write_training_log(log_path, result.log);

  json results = {{"stages", stage_json(result.stages)}, {"final_loss", ckpt.loss}, {"steps", ckpt.step}};
  if (result.sphere_init) {
    results["sphere_init"] = {{"converged", result.sphere_init->converged},
                              {"steps", result.sphere_init->steps},
                              {"mean_abs_error", result.sphere_init->mean_abs_error}};
    if (!result.sphere_init->converged) {
      ctx.err << "warning: sphere pretraining stopped at mean error " << result.sphere_init->mean_abs_error
              << " without reaching " << cfg.sphere.tolerance << "\n";
    }
  }
  json config = to_json(cfg);
  config["input"] = o.input;
  config["normalize"] = o.normalize;
  config["normalization"] = cloud.transform ? to_json(*cloud.transform) : json(nullptr);
  config["init"] = o.init;
  config["encoder"] = encoder_kind_name(cfg.model.encoder);
  write_manifest(ctx, o.out, "fit-sdf", config, results);
  for (const auto& s : result.stages) {
    ctx.out << "stage K=" << s.k << ": probe loss " << s.start_loss << " -> " << s.end_loss << "\n";
  }
  ctx.out << "wrote " << o.out << " and " << log_path << "\n";
}

struct ExtractOptions {
  std::string model, out;
  int res = 128;
  double iso = 0.0;
};

void run_extract(Context& ctx, const ExtractOptions& o) {
  require(o.res >= 2, "--res must be >= 2");
  require(std::isfinite(o.iso), "--iso must be finite");
  const Checkpoint ckpt = load_model(o.model);
  const TriangleMesh mesh = extract_surface(ckpt, o.res, o.iso);
  write_obj(o.out, mesh);
  write_manifest(ctx, o.out, "extract", {{"model", o.model}, {"res", o.res}, {"iso", o.iso}},
                 {{"vertices", mesh.vertices.size()}, {"triangles", mesh.triangles.size()}});
  ctx.out << "wrote " << mesh.vertices.size() << " vertices, " << mesh.triangles.size() << " triangles to "
          << o.out << "\n";
}

struct EvalOptions {
  std::string model, gt_shape, out;
  std::size_t chamfer_n = 25000;
  int mae_res = 64;
  int extract_res = 128;
  std::uint64_t seed = 0;
};

void run_eval(Context& ctx, const EvalOptions& o) {
  require(o.chamfer_n >= 1, "--chamfer-n must be >= 1");
  require(o.mae_res >= 0, "--mae-res must be >= 0 (0 skips MAE)");
  require(o.extract_res >= 2, "--extract-res must be >= 2");
  const GroundTruth gt = parse_ground_truth(o.gt_shape);
  const Checkpoint ckpt = load_model(o.model);
  const TriangleMesh surface = extract_surface(ckpt, o.extract_res, 0.0);
  const SurfaceMetrics m = evaluate_surface(ckpt, surface, gt, o.chamfer_n, o.mae_res, o.seed);
  json metrics = {{"chamfer", std::isfinite(m.chamfer) ? json(m.chamfer) : json(nullptr)},
                  {"mae", m.mae ? json(*m.mae) : json(nullptr)},
                  {"chamfer_n", o.chamfer_n},
                  {"mae_res", o.mae_res},
                  {"gt_shape", o.gt_shape}};
  ctx.out << metrics.dump(2) << "\n";
  if (!o.out.empty()) {
    write_text_file(o.out, metrics.dump(2) + "\n");
    write_manifest(ctx, o.out, "eval",
                   {{"model", o.model},
                    {"gt_shape", o.gt_shape},
                    {"chamfer_n", o.chamfer_n},
                    {"mae_res", o.mae_res},
                    {"extract_res", o.extract_res},
                    {"seed", o.seed}},
                   metrics);
  }
}

struct RegressOptions {
  std::string gt_shape, out, log, encoder = "spe";
  int m = 16, k = 128, c = 64, degree = 1, hidden = 256, layers = 4;
  int grid_res = 64, steps = 2000, extract_res = 128, log_every = 100;
  double lr = 1e-4;
  std::size_t batch = 4096, chamfer_n = 25000;
  std::uint64_t seed = 0;
};

void run_regress_sdf(Context& ctx, const RegressOptions& o) {
  require(o.grid_res >= 2, "--grid-res must be >= 2");
  require(o.extract_res >= 2, "--extract-res must be >= 2");
  require(o.chamfer_n >= 1, "--chamfer-n must be >= 1");
  const GroundTruth gt = parse_ground_truth(o.gt_shape);
  ModelConfig mc;
  try {
    mc.encoder = parse_encoder_kind(o.encoder);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--encoder: ") + e.what());
  }
  mc.spline.segments = o.k;
  mc.spline.channels = o.c;
  mc.spline.directions = o.m;
  mc.spline.degree = o.degree;
  mc.hidden_width = o.hidden;
  mc.layers = o.layers;
  RegressionConfig rc;
  rc.loss = RegressionLoss::l1;
  rc.lr = o.lr;
  rc.batch = o.batch;
  rc.steps = o.steps;
  rc.seed = o.seed + 1;
  rc.log_every = o.log_every;
  try {
    mc.validate();
    rc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::array<int, 3> res{o.grid_res, o.grid_res, o.grid_res};
  const ScalarGrid target = sample_grid([&](const Vec3& x) { return gt.sdf(x); }, res, {-1, -1, -1}, {1, 1, 1});
  std::vector<double> points;
  points.reserve(target.values.size() * 3);
  for (int i = 0; i < o.grid_res; ++i) {
    for (int j = 0; j < o.grid_res; ++j) {
      for (int k = 0; k < o.grid_res; ++k) {
        const Vec3 p = target.position(i, j, k);
        points.insert(points.end(), p.begin(), p.end());
      }
    }
  }
  Checkpoint ckpt;
  ckpt.model = make_field_model(mc, o.seed);
  const auto log = train_regression(ckpt.model, points, target.values, rc);
  ckpt.step = o.steps;
  ckpt.loss = log.empty() ? 0.0 : log.back().loss;
  ckpt.settings = {{"model", to_json(mc)}, {"lr", o.lr}, {"batch", o.batch}, {"steps", o.steps},
                   {"grid_res", o.grid_res}, {"seed", o.seed}, {"gt_shape", o.gt_shape}};
  save_checkpoint(o.out, ckpt);
  std::string csv = "step,l1_loss\n";
  for (const auto& row : log) csv += std::to_string(row.step) + "," + std::to_string(row.loss) + "\n";
  const std::string log_path = o.log.empty() ? o.out + ".log.csv" : o.log;
  write_text_file(log_path, csv);
  const TriangleMesh surface = extract_surface(ckpt, o.extract_res, 0.0);
  const SurfaceMetrics m = evaluate_surface(ckpt, surface, gt, o.chamfer_n, 0, o.seed);
  json results = {{"chamfer", std::isfinite(m.chamfer) ? json(m.chamfer) : json(nullptr)},
                  {"final_window_loss", ckpt.loss}};
  write_manifest(ctx, o.out, "regress-sdf", ckpt.settings, results);
  ctx.out << results.dump(2) << "\n";
}

}  // namespace

void register_sdf_commands(CLI::App& app, Registry& registry) {
  {
    auto o = std::make_shared<FixtureOptions>();
    auto* sub = app.add_subcommand("make-fixture", "Sample an oriented point cloud from an analytic shape or mesh");
    sub->add_option("--shape", o->shape, "sphere:R, torus:R:r, box:X:Y:Z or mesh:path");
    sub->add_option("--n", o->n, "Number of points");
    sub->add_option("--seed", o->seed, "Random seed");
    sub->add_option("--out", o->out, "Output .xyz file")->required();
    registry.add(sub, [o](Context& ctx) { run_make_fixture(ctx, *o); });
  }
  {
    auto o = std::make_shared<FitSdfOptions>();
    auto* sub = app.add_subcommand("fit-sdf", "Fit a signed distance field to an oriented point cloud");
    sub->add_option("--input", o->input, "Input .xyz point cloud with normals")->required();
    sub->add_option("--out", o->out, "Output checkpoint (.json)")->required();
    sub->add_option("--log", o->log, "Training log CSV (default <out>.log.csv)");
    sub->add_option("--init", o->init, "Start from this checkpoint instead of sphere pretraining");
    sub->add_option("--normalize", o->normalize, "auto, always or never");
    sub->add_flag("--quiet", o->quiet, "Only print the stage summary");
    o->flags.add(sub);
    registry.add(sub, [o](Context& ctx) { run_fit_sdf(ctx, *o); });
  }
  {
    auto o = std::make_shared<ExtractOptions>();
    auto* sub = app.add_subcommand("extract", "Extract a level set of a fitted model as an OBJ mesh");
    sub->add_option("--model", o->model, "Model checkpoint")->required();
    sub->add_option("--res", o->res, "Grid samples per axis (>= 2)");
    sub->add_option("--iso", o->iso, "Level to extract, in input units");
    sub->add_option("--out", o->out, "Output .obj")->required();
    registry.add(sub, [o](Context& ctx) { run_extract(ctx, *o); });
  }
  {
    auto o = std::make_shared<EvalOptions>();
    auto* sub = app.add_subcommand("eval", "Chamfer distance and SDF MAE against a ground-truth shape");
    sub->add_option("--model", o->model, "Model checkpoint")->required();
    sub->add_option("--gt-shape", o->gt_shape, "sphere:R, torus:R:r, box:X:Y:Z or mesh:path")->required();
    sub->add_option("--chamfer-n", o->chamfer_n, "Surface samples per side");
    sub->add_option("--mae-res", o->mae_res, "MAE lattice samples per axis (0 skips)");
    sub->add_option("--extract-res", o->extract_res, "Marching cubes resolution for the predicted surface");
    sub->add_option("--seed", o->seed, "Sampling seed");
    sub->add_option("--out", o->out, "Write metrics JSON here");
    registry.add(sub, [o](Context& ctx) { run_eval(ctx, *o); });
  }
  {
    auto o = std::make_shared<RegressOptions>();
    auto* sub = app.add_subcommand("regress-sdf", "Fit a ground-truth SDF sampled on a grid with an L1 loss");
    sub->add_option("--gt-shape", o->gt_shape, "sphere:R, torus:R:r, box:X:Y:Z or mesh:path")->required();
    sub->add_option("--out", o->out, "Output checkpoint")->required();
    sub->add_option("--log", o->log, "Loss log CSV (default <out>.log.csv)");
    sub->add_option("--encoder", o->encoder, "spe, fpe or identity");
    sub->add_option("--m", o->m, "Projection directions M");
    sub->add_option("--k", o->k, "Spline segments K");
    sub->add_option("--c", o->c, "Spline channels C");
    sub->add_option("--degree", o->degree, "B-spline degree");
    sub->add_option("--hidden", o->hidden, "MLP hidden width");
    sub->add_option("--layers", o->layers, "MLP layers including output");
    sub->add_option("--grid-res", o->grid_res, "Training lattice samples per axis");
    sub->add_option("--steps", o->steps, "Adam steps");
    sub->add_option("--lr", o->lr, "Learning rate");
    sub->add_option("--batch", o->batch, "Samples per step (0: all)");
    sub->add_option("--log-every", o->log_every, "Steps per logged loss window");
    sub->add_option("--extract-res", o->extract_res, "Marching cubes resolution");
    sub->add_option("--chamfer-n", o->chamfer_n, "Surface samples per side for Chamfer");
    sub->add_option("--seed", o->seed, "Random seed");
    registry.add(sub, [o](Context& ctx) { run_regress_sdf(ctx, *o); });
  }
}

}  // namespace spe::cli
