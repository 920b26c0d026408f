#include <algorithm>
#include <cmath>
#include <memory>

#include "common.hpp"
#include "spe/io_formats.hpp"
#include "spe/metrics.hpp"

namespace spe::cli {

using nlohmann::json;

namespace {

// Pixel centers mapped to [-1, 1]^2, x then y, row-major.
std::vector<double> pixel_coordinates(int width, int height) {
  std::vector<double> uv;
  uv.reserve(static_cast<std::size_t>(width) * height * 2);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      uv.push_back((2.0 * x + 1.0) / width - 1.0);
      uv.push_back((2.0 * y + 1.0) / height - 1.0);
    }
  }
  return uv;
}

Image render(const FieldModel& model, int width, int height) {
  Image img;
  img.width = width;
  img.height = height;
  img.channels = model.output_dim();
  const auto uv = pixel_coordinates(width, height);
  img.pixels = evaluate_batch(model, uv, false).values;
  for (double& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
  return img;
}

// The 8-bit values a PNM file would hold, back in [0, 1].
Image quantized(Image img) {
  for (double& v : img.pixels) v = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5) / 255.0;
  return img;
}

json psnr_json(double value) { return std::isfinite(value) ? json(value) : json("inf"); }

struct FitImageOptions {
  std::string input, out, encoder = "spe", render_out;
  int m = 32, k = 64, c = 64, degree = 1, hidden = 128, layers = 4, steps = 500;
  int fourier_frequencies = 128, log_every = 100;
  double lr = 3e-3, fourier_sigma = 4.0;
  std::size_t batch = 0;
  std::uint64_t seed = 0;
};

void run_fit_image(Context& ctx, const FitImageOptions& o) {
  require_file(o.input, "--input");
  ModelConfig mc;
  try {
    mc.encoder = parse_encoder_kind(o.encoder);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--encoder: ") + e.what());
  }
  mc.spline.input_dim = 2;
  mc.spline.directions = o.m;
  mc.spline.segments = o.k;
  mc.spline.channels = o.c;
  mc.spline.degree = o.degree;
  mc.fourier_frequencies = o.fourier_frequencies;
  mc.fourier_sigma = o.fourier_sigma;
  mc.hidden_width = o.hidden;
  mc.layers = o.layers;
  RegressionConfig rc;
  rc.loss = RegressionLoss::l2;
  rc.lr = o.lr;
  rc.batch = o.batch;
  rc.steps = o.steps;
  rc.seed = o.seed + 1;
  rc.log_every = o.log_every;
  Image target;
  try {
    target = read_pnm(o.input);
  } catch (const FileFormatError& e) {
    throw UsageError(e.what());
  }
  mc.output_dim = target.channels;
  try {
    mc.validate();
    rc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  Checkpoint ckpt;
  ckpt.model = make_field_model(mc, o.seed);
  const auto uv = pixel_coordinates(target.width, target.height);
  const auto log = train_regression(ckpt.model, uv, target.pixels, rc);
  ckpt.step = o.steps;
  ckpt.loss = log.empty() ? 0.0 : log.back().loss;
  ckpt.settings = {{"model", to_json(mc)}, {"lr", o.lr},     {"batch", o.batch}, {"steps", o.steps},
                   {"seed", o.seed},       {"input", o.input}, {"width", target.width}, {"height", target.height}};
  save_checkpoint(o.out, ckpt);

  const Image fitted = quantized(render(ckpt.model, target.width, target.height));
  const double value = psnr(fitted, target);
  if (!o.render_out.empty()) write_pnm(o.render_out, fitted);
  json results = {{"psnr", psnr_json(value)}, {"final_window_loss", ckpt.loss}};
  json config = ckpt.settings;
  config["encoder"] = encoder_kind_name(mc.encoder);
  config["render_out"] = o.render_out;
  write_manifest(ctx, o.out, "fit-image", config, results);
  ctx.out << results.dump(2) << "\n";
}

struct RenderImageOptions {
  std::string model, res, out, reference;
};

void run_render_image(Context& ctx, const RenderImageOptions& o) {
  const auto [width, height] = parse_resolution(o.res);
  require_file(o.model, "--model");
  Checkpoint ckpt;
  try {
    ckpt = load_checkpoint(o.model);
  } catch (const FileFormatError& e) {
    throw UsageError(e.what());
  }
  require(ckpt.model.input_dim() == 2 && (ckpt.model.output_dim() == 1 || ckpt.model.output_dim() == 3),
          o.model + ": not an image model");
  const Image img = quantized(render(ckpt.model, width, height));
  json results = json::object();
  if (!o.reference.empty()) {
    require_file(o.reference, "--reference");
    Image ref;
    try {
      ref = read_pnm(o.reference);
    } catch (const FileFormatError& e) {
      throw UsageError(e.what());
    }
    require(ref.width == width && ref.height == height && ref.channels == img.channels,
            "--reference must match the rendered size and channel count");
    results["psnr"] = psnr_json(psnr(img, ref));
  }
  write_pnm(o.out, img);
  write_manifest(ctx, o.out, "render-image", {{"model", o.model}, {"res", o.res}, {"reference", o.reference}},
                 results);
  ctx.out << "wrote " << o.out << "\n";
  if (results.contains("psnr")) ctx.out << results.dump(2) << "\n";
}

}  // namespace

void register_image_commands(CLI::App& app, Registry& registry) {
  {
    auto o = std::make_shared<FitImageOptions>();
    auto* sub = app.add_subcommand("fit-image", "Fit a coordinate network to a PPM/PGM image with an L2 loss");
    sub->add_option("--input", o->input, "Input .ppm or .pgm")->required();
    sub->add_option("--out", o->out, "Output checkpoint")->required();
    sub->add_option("--render-out", o->render_out, "Also write the fitted image here");
    sub->add_option("--encoder", o->encoder, "spe, fpe or identity");
    sub->add_option("--m", o->m, "Projection directions M");
    sub->add_option("--k", o->k, "Spline segments K");
    sub->add_option("--c", o->c, "Spline channels C");
    sub->add_option("--degree", o->degree, "B-spline degree");
    sub->add_option("--fourier-frequencies", o->fourier_frequencies, "Fourier projections");
    sub->add_option("--fourier-sigma", o->fourier_sigma, "Fourier frequency scale");
    sub->add_option("--hidden", o->hidden, "MLP hidden width");
    sub->add_option("--layers", o->layers, "MLP layers including output");
    sub->add_option("--steps", o->steps, "Adam steps");
    sub->add_option("--lr", o->lr, "Learning rate");
    sub->add_option("--batch", o->batch, "Pixels per step (0: all)");
    sub->add_option("--log-every", o->log_every, "Steps per logged loss window");
    sub->add_option("--seed", o->seed, "Random seed");
    registry.add(sub, [o](Context& ctx) { run_fit_image(ctx, *o); });
  }
  {
    auto o = std::make_shared<RenderImageOptions>();
    auto* sub = app.add_subcommand("render-image", "Render an image model at a given resolution");
    sub->add_option("--model", o->model, "Image model checkpoint")->required();
    sub->add_option("--res", o->res, "WxH")->required();
    sub->add_option("--out", o->out, "Output .ppm or .pgm")->required();
    sub->add_option("--reference", o->reference, "Report PSNR against this image");
    registry.add(sub, [o](Context& ctx) { run_render_image(ctx, *o); });
  }
}

}  // namespace spe::cli
