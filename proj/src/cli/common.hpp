#pragma once

#include <CLI11.hpp>
#include <functional>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spe/checkpoint.hpp"
#include "spe/geometry.hpp"
#include "spe/training.hpp"

namespace spe::cli {

// Bad flag values or unusable inputs; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
};

using Command = std::function<void(Context&)>;

// (subcommand, action) pairs; the action of the parsed subcommand runs.
struct Registry {
  std::vector<std::pair<CLI::App*, Command>> commands;
  void add(CLI::App* sub, Command fn) { commands.emplace_back(sub, std::move(fn)); }
};

void register_sdf_commands(CLI::App& app, Registry& registry);
void register_image_commands(CLI::App& app, Registry& registry);
void register_shape_space_commands(CLI::App& app, Registry& registry);

// Ground-truth shapes named on the command line.
struct GroundTruth {
  std::string tag;
  std::optional<AnalyticShape> analytic;
  std::optional<TriangleMesh> mesh;

  double sdf(const Vec3& x) const;
  PointCloud sample_surface(std::size_t n, std::mt19937_64& rng) const;
};

// sphere:R | torus:R:r | box:X:Y:Z | mesh:path
GroundTruth parse_ground_truth(const std::string& spec);

std::vector<int> parse_int_list(const std::string& text, const std::string& flag);
std::pair<int, int> parse_resolution(const std::string& text);

void require_file(const std::string& path, const std::string& flag);
void require(bool condition, const std::string& message);

// Loads and validates an oriented point cloud; format errors become UsageError.
PointCloud load_cloud(const std::string& path);

enum class NormalizeMode { automatic, always, never };
NormalizeMode parse_normalize_mode(const std::string& text);
// automatic: normalize only when some point lies outside the unit ball.
PointCloud apply_normalization(const PointCloud& cloud, NormalizeMode mode);
bool inside_unit_ball(const PointCloud& cloud);

// Writes <output>.manifest.json.
void write_manifest(const Context& ctx, const std::string& output, const std::string& command,
                    const nlohmann::json& config, const nlohmann::json& results);

// Extracts the zero level (iso in input units) of a checkpoint on a grid over
// [-1, 1]^3 in model coordinates, returned in input coordinates.
TriangleMesh extract_surface(const Checkpoint& ckpt, int resolution, double iso);

struct SurfaceMetrics {
  double chamfer = 0.0;
  std::optional<double> mae;
};

// Chamfer between n samples of `surface` and n samples of the ground truth,
// and (when mae_res > 0) MAE over a mae_res^3 lattice of [-1, 1]^3 in model
// coordinates, both in input units.
SurfaceMetrics evaluate_surface(const Checkpoint& ckpt, const TriangleMesh& surface,
                                const GroundTruth& gt, std::size_t n, int mae_res,
                                std::uint64_t seed);

}  // namespace spe::cli
