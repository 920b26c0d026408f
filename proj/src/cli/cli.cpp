#include "spe/cli.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "common.hpp"
#include "spe/io_formats.hpp"
#include "spe/metrics.hpp"
#include "spe/simd/kernels.hpp"
#include "spe/surface.hpp"

namespace spe::cli {

using nlohmann::json;

void require(bool condition, const std::string& message) {
  if (!condition) throw UsageError(message);
}

void require_file(const std::string& path, const std::string& flag) {
  require(!path.empty(), flag + " is required");
  std::error_code ec;
  require(std::filesystem::is_regular_file(path, ec), flag + ": file not found: " + path);
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used > 0 && used == item.size(), flag + ": expected comma-separated integers, got '" + text + "'");
    out.push_back(v);
  }
  require(!out.empty(), flag + ": empty list");
  return out;
}

std::pair<int, int> parse_resolution(const std::string& text) {
  const auto x = text.find('x');
  require(x != std::string::npos, "--res: expected WxH, got '" + text + "'");
  const auto w = parse_int_list(text.substr(0, x), "--res");
  const auto h = parse_int_list(text.substr(x + 1), "--res");
  require(w.size() == 1 && h.size() == 1 && w[0] >= 1 && h[0] >= 1, "--res: expected WxH with W, H >= 1");
  return {w[0], h[0]};
}

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& shape) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used > 0 && used == item.size() && std::isfinite(v), "bad shape parameters in '" + shape + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

GroundTruth parse_ground_truth(const std::string& shape) {
  const auto colon = shape.find(':');
  const std::string kind = shape.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : shape.substr(colon + 1);
  GroundTruth gt;
  gt.tag = shape;
  if (kind == "mesh") {
    require_file(rest, "mesh ground truth");
    try {
      gt.mesh = read_obj(rest);
    } catch (const FileFormatError& e) {
      throw UsageError(e.what());
    }
    require(!gt.mesh->triangles.empty(), "mesh ground truth has no triangles: " + rest);
    return gt;
  }
  const auto p = rest.empty() ? std::vector<double>{} : parse_numbers(rest, shape);
  if (kind == "sphere" && p.size() <= 1) {
    gt.analytic = Sphere{p.empty() ? 0.5 : p[0]};
  } else if (kind == "torus" && (p.empty() || p.size() == 2)) {
    gt.analytic = p.empty() ? Torus{} : Torus{p[0], p[1]};
  } else if (kind == "box" && (p.empty() || p.size() == 3)) {
    gt.analytic = p.empty() ? Box{} : Box{{p[0], p[1], p[2]}};
  } else {
    throw UsageError("unknown shape '" + shape + "' (expected sphere:R, torus:R:r, box:X:Y:Z or mesh:path)");
  }
  try {
    validate_shape(*gt.analytic);
  } catch (const std::invalid_argument& e) {
    throw UsageError(shape + ": " + e.what());
  }
  return gt;
}

double GroundTruth::sdf(const Vec3& x) const {
  return analytic ? analytic_sdf(*analytic, x) : mesh_sdf_bruteforce(*mesh, x);
}

PointCloud GroundTruth::sample_surface(std::size_t n, std::mt19937_64& rng) const {
  return analytic ? sample_analytic_surface(*analytic, n, rng) : sample_mesh_surface(*mesh, n, rng);
}

PointCloud load_cloud(const std::string& path) {
  require_file(path, "--input");
  PointCloud cloud;
  try {
    cloud = read_xyz(path);
  } catch (const FileFormatError& e) {
    throw UsageError(e.what());
  }
  require(cloud.has_normals(), path + ": oriented normals are required (6 columns)");
  try {
    cloud.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(path + ": " + e.what());
  }
  return cloud;
}

NormalizeMode parse_normalize_mode(const std::string& text) {
  if (text == "auto") return NormalizeMode::automatic;
  if (text == "always") return NormalizeMode::always;
  if (text == "never") return NormalizeMode::never;
  throw UsageError("--normalize: expected auto, always or never, got '" + text + "'");
}

bool inside_unit_ball(const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double n2 = 0.0;
    for (double v : cloud.point(i)) n2 += v * v;
    if (n2 > 1.0) return false;
  }
  return true;
}

PointCloud apply_normalization(const PointCloud& cloud, NormalizeMode mode) {
  if (mode == NormalizeMode::never || (mode == NormalizeMode::automatic && inside_unit_ball(cloud))) {
    return cloud;
  }
  return normalize_to_ball(cloud, 0.9);
}

void write_manifest(const Context& ctx, const std::string& output, const std::string& command,
                    const json& config, const json& results) {
  json doc;
  doc["command"] = command;
  doc["argv"] = ctx.args;
  doc["config"] = config;
  doc["results"] = results;
  doc["isa"] = std::string(simd::isa_name(simd::active_isa()));
  doc["timestamp"] = utc_timestamp();
  write_text_file(output + ".manifest.json", doc.dump(2) + "\n");
}

TriangleMesh extract_surface(const Checkpoint& ckpt, int resolution, double iso) {
  const double scale = ckpt.normalization ? ckpt.normalization->scale : 1.0;
  const ScalarGrid grid = evaluate_grid(ckpt.model, {resolution, resolution, resolution}, {-1, -1, -1}, {1, 1, 1});
  TriangleMesh mesh = marching_cubes(grid, iso * scale);
  if (ckpt.normalization) {
    for (auto& v : mesh.vertices) {
      const auto p = ckpt.normalization->inverse(v);
      v = {p[0], p[1], p[2]};
    }
  }
  return mesh;
}

SurfaceMetrics evaluate_surface(const Checkpoint& ckpt, const TriangleMesh& surface, const GroundTruth& gt,
                                std::size_t n, int mae_res, std::uint64_t seed) {
  SurfaceMetrics m;
  if (surface.triangles.empty()) {
    m.chamfer = std::numeric_limits<double>::infinity();
  } else {
    std::mt19937_64 rng_pred(seed), rng_gt(seed + 1);
    const auto pred = to_vec3(sample_mesh_surface(surface, n, rng_pred));
    const auto truth = to_vec3(gt.sample_surface(n, rng_gt));
    m.chamfer = chamfer(pred, truth);
  }
  if (mae_res > 0) {
    const double scale = ckpt.normalization ? ckpt.normalization->scale : 1.0;
    const std::array<int, 3> res{mae_res, mae_res, mae_res};
    ScalarGrid pred = evaluate_grid(ckpt.model, res, {-1, -1, -1}, {1, 1, 1});
    for (auto& v : pred.values) v /= scale;
    const ScalarGrid truth = sample_grid(
        [&](const Vec3& x) {
          if (!ckpt.normalization) return gt.sdf(x);
          const auto p = ckpt.normalization->inverse(x);
          return gt.sdf({p[0], p[1], p[2]});
        },
        res, {-1, -1, -1}, {1, 1, 1});
    m.mae = mae(pred, truth);
  }
  return m;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fit and evaluate neural signed distance fields and images with spline positional encodings",
               "spe"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Registry registry;
  register_sdf_commands(app, registry);
  register_image_commands(app, registry);
  register_shape_space_commands(app, registry);

  Context ctx{args, out, err};
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    for (auto& [sub, fn] : registry.commands) {
      if (sub->parsed()) {
        fn(ctx);
        return 0;
      }
    }
    err << "error: no command given\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingDiverged& e) {
    err << "error: training diverged: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace spe::cli
