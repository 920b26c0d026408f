#include "train_flags.hpp"

namespace spe::cli {

void TrainFlags::add(CLI::App* sub) {
  sub->add_option("--preset", preset, "Base settings: full (default hyper-parameters) or desk (single-core scale)")
      ->check(CLI::IsMember({"full", "desk"}));
  sub->add_option("--k", k, "Final number of spline segments K");
  sub->add_option("--c", c, "Spline channels C");
  sub->add_option("--m", m, "Projection directions M");
  sub->add_option("--degree", degree, "B-spline degree (0, 1 or 2)");
  sub->add_option("--radius", radius, "Knot domain radius R (default sqrt(d))");
  sub->add_option("--lambda", lambda, "Eikonal weight");
  sub->add_option("--tau", tau, "Normal alignment weight");
  sub->add_option("--lr", lr, "Adam learning rate");
  sub->add_option("--batch", batch, "Surface samples per step (same number of domain samples)");
  sub->add_option("--schedule", schedule, "Comma-separated K schedule, e.g. 2,8,32,128,256");
  sub->add_option("--steps-per-stage", steps, "Steps per stage: one value or one per stage");
  sub->add_option("--encoder", encoder, "Encoder: spe, fpe or identity");
  sub->add_flag("--freeze-directions", freeze_directions, "Keep projection directions fixed");
  sub->add_option("--fourier-frequencies", fourier_frequencies, "Fourier encoding frequency count");
  sub->add_option("--fourier-sigma", fourier_sigma, "Fourier frequency standard deviation");
  sub->add_option("--hidden", hidden, "MLP hidden width");
  sub->add_option("--layers", layers, "Fully-connected layers including the output layer");
  sub->add_option("--seed", seed, "Random seed");
  sub->add_flag("--no-sphere-init", no_sphere_init, "Skip sphere pretraining");
  sub->add_option("--sphere-steps", sphere_steps, "Maximum sphere pretraining steps");
  sub->add_option("--sphere-lr", sphere_lr, "Sphere pretraining learning rate");
  sub->add_option("--log-every", log_every, "Log interval in steps");
}

TrainConfig TrainFlags::resolve(TrainConfig cfg) const {
  if (encoder) {
    try {
      cfg.model.encoder = parse_encoder_kind(*encoder);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--encoder: ") + e.what());
    }
  }
  if (c) cfg.model.spline.channels = *c;
  if (m) cfg.model.spline.directions = *m;
  if (degree) cfg.model.spline.degree = *degree;
  if (radius) cfg.model.spline.domain_radius = *radius;
  if (freeze_directions) cfg.model.spline.freeze_directions = true;
  if (fourier_frequencies) cfg.model.fourier_frequencies = *fourier_frequencies;
  if (fourier_sigma) cfg.model.fourier_sigma = *fourier_sigma;
  if (hidden) cfg.model.hidden_width = *hidden;
  if (layers) cfg.model.layers = *layers;
  if (lambda) cfg.lambda = *lambda;
  if (tau) cfg.tau = *tau;
  if (lr) cfg.lr = *lr;
  if (batch) cfg.batch_points = *batch;
  if (seed) cfg.seed = *seed;
  if (no_sphere_init) cfg.sphere_init = false;
  if (sphere_steps) cfg.sphere.max_steps = *sphere_steps;
  if (sphere_lr) cfg.sphere.lr = *sphere_lr;
  if (log_every) cfg.log_every = *log_every;

  const auto preset_steps = cfg.resolved_steps();
  if (schedule) {
    cfg.k_schedule = parse_int_list(*schedule, "--schedule");
    if (k) require(cfg.k_schedule.back() == *k, "--k must equal the last --schedule entry");
  } else if (k) {
    std::vector<int> sched;
    for (int v : cfg.k_schedule) {
      if (v < *k) sched.push_back(v);
    }
    sched.push_back(*k);
    cfg.k_schedule = sched;
  }
  if (steps) {
    auto list = parse_int_list(*steps, "--steps-per-stage");
    if (list.size() == 1) list.assign(cfg.k_schedule.size(), list.front());
    require(list.size() == cfg.k_schedule.size(),
            "--steps-per-stage needs 1 or " + std::to_string(cfg.k_schedule.size()) + " values");
    cfg.steps_per_stage = list;
  } else if (preset_steps.size() != cfg.k_schedule.size()) {
    std::vector<int> list(cfg.k_schedule.size(), preset_steps.back());
    list.front() = preset_steps.front();
    cfg.steps_per_stage = list;
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

}  // namespace spe::cli
