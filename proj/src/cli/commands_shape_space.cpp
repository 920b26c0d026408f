#include <cmath>
#include <memory>
#include <sstream>

#include "common.hpp"
#include "spe/io_formats.hpp"
#include "spe/shape_space.hpp"
#include "train_flags.hpp"

namespace spe::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

PointCloud transform_cloud(const PointCloud& cloud, const std::optional<NormalizeTransform>& tf) {
  if (!tf) return cloud;
  PointCloud out = cloud;
  const auto d = static_cast<std::size_t>(cloud.dim);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = tf->apply(cloud.point(i));
    std::copy(p.begin(), p.end(), out.positions.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  out.transform = tf;
  return out;
}

json chamfer_json(double c) { return std::isfinite(c) ? json(c) : json(nullptr); }

struct TrainOptions {
  std::string inputs, out, gt_shapes, normalize = "auto";
  int extract_res = 128;
  std::size_t chamfer_n = 25000;
  int fit_steps = -1;
  TrainFlags flags;
};

void run_train(Context& ctx, const TrainOptions& o) {
  const auto paths = split_list(o.inputs);
  require(paths.size() >= 2, "--inputs needs at least two comma-separated point clouds");
  const auto gt_tags = split_list(o.gt_shapes);
  require(gt_tags.empty() || gt_tags.size() == paths.size(), "--gt-shapes must list one shape per input");
  require(o.extract_res >= 2, "--extract-res must be >= 2");
  std::vector<GroundTruth> gts;
  for (const auto& tag : gt_tags) gts.push_back(parse_ground_truth(tag));
  ShapeSpaceConfig cfg = o.flags.preset == "desk" ? ShapeSpaceConfig::desk() : ShapeSpaceConfig::defaults();
  cfg.train = o.flags.resolve(cfg.train);
  if (o.fit_steps >= 0) cfg.fit_steps = o.fit_steps;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const NormalizeMode mode = parse_normalize_mode(o.normalize);

  std::vector<PointCloud> clouds;
  PointCloud all;
  for (const auto& p : paths) {
    clouds.push_back(load_cloud(p));
    all.positions.insert(all.positions.end(), clouds.back().positions.begin(), clouds.back().positions.end());
  }
  // One frame for every shape, so relative size and position survive.
  const std::optional<NormalizeTransform> tf = apply_normalization(all, mode).transform;
  for (auto& c : clouds) c = transform_cloud(c, tf);

  ShapeSpaceResult result;
  try {
    result = train_shape_space(clouds, cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  ShapeSpaceFile file;
  file.space = result.space;
  file.settings = {{"train", to_json(cfg.train)},
                   {"fit_steps", cfg.fit_steps},
                   {"inputs", paths},
                   {"normalization", tf ? to_json(*tf) : json(nullptr)}};
  save_shape_space(o.out, file);

  std::string csv = "step,shape,stage_K,loss\n";
  for (const auto& r : result.log) {
    std::ostringstream line;
    line.precision(17);
    line << r.step << "," << r.shape << "," << r.stage_k << "," << r.loss << "\n";
    csv += line.str();
  }
  write_text_file(o.out + ".log.csv", csv);

  json results = {{"shapes", paths.size()}};
  if (!gts.empty()) {
    json per_shape = json::array();
    for (std::size_t i = 0; i < gts.size(); ++i) {
      Checkpoint ckpt;
      ckpt.model = result.space.model(i);
      ckpt.normalization = tf;
      const TriangleMesh surface = extract_surface(ckpt, o.extract_res, 0.0);
      const SurfaceMetrics m = evaluate_surface(ckpt, surface, gts[i], o.chamfer_n, 0, cfg.train.seed);
      per_shape.push_back({{"input", paths[i]}, {"gt_shape", gt_tags[i]}, {"chamfer", chamfer_json(m.chamfer)}});
    }
    results["per_shape"] = per_shape;
  }
  json config = file.settings;
  config["preset"] = o.flags.preset;
  config["gt_shapes"] = gt_tags;
  config["normalize"] = o.normalize;
  write_manifest(ctx, o.out, "shape-space train", config, results);
  ctx.out << results.dump(2) << "\n";
}

struct FitOptions {
  std::string space, input, out, gt_shape;
  int steps = -1;
  int extract_res = 128;
  std::size_t chamfer_n = 25000;
  std::optional<std::uint64_t> seed;
};

void run_fit(Context& ctx, const FitOptions& o) {
  require_file(o.space, "--space");
  require(o.extract_res >= 2, "--extract-res must be >= 2");
  std::optional<GroundTruth> gt;
  if (!o.gt_shape.empty()) gt = parse_ground_truth(o.gt_shape);
  ShapeSpaceFile file;
  try {
    file = load_shape_space(o.space);
  } catch (const FileFormatError& e) {
    throw UsageError(e.what());
  }
  ShapeSpaceConfig cfg = ShapeSpaceConfig::defaults();
  std::optional<NormalizeTransform> tf;
  try {
    const json& s = file.settings;
    if (s.contains("fit_steps")) cfg.fit_steps = s.at("fit_steps").get<int>();
    if (s.contains("train")) {
      const json& t = s.at("train");
      cfg.train.lambda = t.at("lambda").get<double>();
      cfg.train.tau = t.at("tau").get<double>();
      cfg.train.lr = t.at("lr").get<double>();
      cfg.train.batch_points = t.at("batch_points").get<std::size_t>();
      cfg.train.seed = t.at("seed").get<std::uint64_t>();
      cfg.train.probe_points = t.at("probe_points").get<std::size_t>();
    }
    if (s.contains("normalization") && !s.at("normalization").is_null()) {
      const json& n = s.at("normalization");
      tf = NormalizeTransform{n.at("scale").get<double>(), n.at("translation").get<std::vector<double>>()};
    }
  } catch (const json::exception& e) {
    throw UsageError(o.space + ": bad settings block: " + e.what());
  }
  if (o.steps >= 0) cfg.fit_steps = o.steps;
  if (o.seed) cfg.train.seed = *o.seed;
  cfg.train.k_schedule = {file.space.encodings.front().config().segments};
  cfg.train.steps_per_stage = {cfg.fit_steps};

  const PointCloud cloud = transform_cloud(load_cloud(o.input), tf);
  const FitShapeResult fit = [&] {
    try {
      return fit_new_shape(file.space, cloud, cfg);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  Checkpoint ckpt;
  ckpt.model = FieldModel{fit.encoding, file.space.mlp};
  ckpt.normalization = tf;
  ckpt.step = cfg.fit_steps;
  ckpt.loss = fit.final_loss;
  ckpt.settings = {{"space", o.space}, {"input", o.input}, {"fit_steps", cfg.fit_steps}, {"seed", cfg.train.seed},
                   {"lr", cfg.train.lr}};
  save_checkpoint(o.out, ckpt);
  write_training_log(o.out + ".log.csv", fit.log);

  json results = {{"final_loss", fit.final_loss}};
  if (gt) {
    const TriangleMesh surface = extract_surface(ckpt, o.extract_res, 0.0);
    const SurfaceMetrics m = evaluate_surface(ckpt, surface, *gt, o.chamfer_n, 0, cfg.train.seed);
    results["chamfer"] = chamfer_json(m.chamfer);
    results["gt_shape"] = o.gt_shape;
  }
  write_manifest(ctx, o.out, "shape-space fit", ckpt.settings, results);
  ctx.out << results.dump(2) << "\n";
}

}  // namespace

void register_shape_space_commands(CLI::App& app, Registry& registry) {
  auto* group = app.add_subcommand("shape-space", "Train a shared decoder over several shapes, or fit a new shape");
  group->require_subcommand(1);
  {
    auto o = std::make_shared<TrainOptions>();
    auto* sub = group->add_subcommand("train", "Jointly fit one encoding per shape and a shared MLP");
    sub->add_option("--inputs", o->inputs, "Comma-separated .xyz point clouds")->required();
    sub->add_option("--out", o->out, "Output shape space (.json)")->required();
    sub->add_option("--gt-shapes", o->gt_shapes, "Comma-separated ground truths, one per input, for Chamfer");
    sub->add_option("--normalize", o->normalize, "auto, always or never (one frame for all inputs)");
    sub->add_option("--fit-steps", o->fit_steps, "Default step count stored for later fits");
    sub->add_option("--extract-res", o->extract_res, "Marching cubes resolution for metrics");
    sub->add_option("--chamfer-n", o->chamfer_n, "Surface samples per side for Chamfer");
    o->flags.add(sub);
    registry.add(sub, [o](Context& ctx) { run_train(ctx, *o); });
  }
  {
    auto o = std::make_shared<FitOptions>();
    auto* sub = group->add_subcommand("fit", "Fit an encoding for a new shape with the shared MLP frozen");
    sub->add_option("--space", o->space, "Trained shape space")->required();
    sub->add_option("--input", o->input, "New .xyz point cloud")->required();
    sub->add_option("--out", o->out, "Output checkpoint with the new encoding")->required();
    sub->add_option("--gt-shape", o->gt_shape, "Ground truth for Chamfer");
    sub->add_option("--steps", o->steps, "Adam steps (default: the value stored with the space)");
    sub->add_option("--seed", o->seed, "Random seed (default: the training seed)");
    sub->add_option("--extract-res", o->extract_res, "Marching cubes resolution for metrics");
    sub->add_option("--chamfer-n", o->chamfer_n, "Surface samples per side for Chamfer");
    registry.add(sub, [o](Context& ctx) { run_fit(ctx, *o); });
  }
}

}  // namespace spe::cli
