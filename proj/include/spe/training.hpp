#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "spe/adam.hpp"
#include "spe/geometry.hpp"
#include "spe/losses.hpp"
#include "spe/network.hpp"

namespace spe {

// Thrown when the loss becomes NaN or infinite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, long long step) : std::runtime_error(what), step_(step) {}
  long long step() const { return step_; }

 private:
  long long step_;
};

// n surface samples drawn uniformly with replacement from the cloud, and n
// domain samples uniform in the box [lower, upper]^dim.
SdfBatch sample_batches(const PointCloud& cloud, double lower, double upper, std::size_t n,
                        std::mt19937_64& rng);

struct SphereInitConfig {
  double radius = 0.5;
  std::size_t batch = 1024;
  double lr = 5e-3;
  int max_steps = 3000;
  double tolerance = 0.01;    // mean |F - sdf| on the probe set
  std::size_t probe_points = 4096;
  int check_every = 50;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SphereInitResult {
  FieldModel model;
  bool converged = false;
  int steps = 0;
  double mean_abs_error = 0.0;
};

// L2 regression of the model onto |x| - radius over uniform samples of
// [-1, 1]^d until the probe error drops below tolerance or max_steps.
SphereInitResult pretrain_sphere(FieldModel model, const SphereInitConfig& config);

struct TrainConfig {
  double lambda = 0.1;
  double tau = 1.0;
  double lr = 1e-4;
  std::size_t batch_points = 10000;
  std::vector<int> k_schedule{2, 8, 32, 128, 256};
  // One entry per stage; empty selects 500 for the first stage, 1000 after.
  std::vector<int> steps_per_stage;
  std::uint64_t seed = 0;
  ModelConfig model;  // model.spline.segments is ignored in favour of k_schedule[0]
  AdamConfig adam;
  bool sphere_init = true;
  SphereInitConfig sphere;
  std::size_t probe_points = 4096;  // per probe set, surface and domain each
  int log_every = 1;

  void validate() const;
  std::vector<int> resolved_steps() const;
  // Smaller batch and network, higher learning rate and fewer steps; a
  // 10k-point fit finishes in a few minutes on one core.
  static TrainConfig desk();
};

struct TrainLogRow {
  long long step = 0;
  int stage_k = 0;
  double loss = 0.0;
  double eikonal = 0.0;
  double fit = 0.0;
  double normal = 0.0;
};

// Losses on a fixed probe batch at stage boundaries.
struct StageSummary {
  int k = 0;
  double start_loss = 0.0;
  double end_loss = 0.0;
  // Probe loss right before and after refining into this stage (first stage: NaN).
  double pre_refine_loss = 0.0;
  double post_refine_loss = 0.0;
};

struct TrainResult {
  FieldModel model;
  std::vector<TrainLogRow> log;
  std::vector<StageSummary> stages;
  std::optional<SphereInitResult> sphere_init;
};

using ProgressFn = std::function<void(const TrainLogRow&)>;

// Multiscale SDF fit of a normalized cloud. When init is given it replaces
// both random initialization and sphere pretraining. Throws TrainingDiverged.
TrainResult train_sdf(const PointCloud& cloud, const TrainConfig& config,
                      const FieldModel* init = nullptr, const ProgressFn& progress = {});

// Builds the stage-0 model of a config: random, then sphere pretrained if enabled.
FieldModel initial_sdf_model(const TrainConfig& config, std::optional<SphereInitResult>* info = nullptr);

enum class RegressionLoss { l1, l2 };

struct RegressionConfig {
  RegressionLoss loss = RegressionLoss::l2;
  double lr = 1e-3;
  std::size_t batch = 0;  // 0: full batch
  int steps = 1000;
  std::uint64_t seed = 0;
  AdamConfig adam;
  int log_every = 100;

  void validate() const;
};

struct RegressionLogRow {
  long long step = 0;
  double loss = 0.0;
};

// Adam on the regression loss over a fixed dataset (N x d points, N x out targets).
std::vector<RegressionLogRow> train_regression(FieldModel& model, std::span<const double> points,
                                               std::span<const double> targets,
                                               const RegressionConfig& config);

}  // namespace spe
