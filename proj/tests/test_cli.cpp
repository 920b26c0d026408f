#include <doctest.h>

#include <initializer_list>
#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "spe/checkpoint.hpp"
#include "spe/cli.hpp"
#include "spe/io_formats.hpp"
#include "test_util.hpp"

using namespace spe;
using nlohmann::json;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

json read_json(const std::filesystem::path& p) { return json::parse(read_text_file(p.string())); }

std::vector<std::string> tiny_fit_flags(const std::string& lr = "1e-2") {
  return {"--no-sphere-init", "--schedule", "2,4", "--steps-per-stage", "30", "--batch", "128", "--hidden", "16",
          "--c", "4", "--m", "3", "--lr", lr};
}

}  // namespace

TEST_CASE("help and missing commands") {
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"--help"}).out.find("fit-sdf") != std::string::npos);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"no-such-command"}).code == 2);
}

TEST_CASE("make-fixture samples the requested shape") {
  const auto dir = test::temp_dir("cli_fixture");
  const auto a = (dir / "a.xyz").string(), b = (dir / "b.xyz").string();
  REQUIRE(run_cli({"make-fixture", "--shape", "sphere:0.5", "--n", "500", "--seed", "7", "--out", a}).code == 0);
  REQUIRE(run_cli({"make-fixture", "--shape", "sphere:0.5", "--n", "500", "--seed", "7", "--out", b}).code == 0);
  CHECK(read_text_file(a) == read_text_file(b));
  CHECK(std::filesystem::exists(a + ".manifest.json"));
  const PointCloud cloud = read_xyz(a);
  REQUIRE(cloud.size() == 500);
  REQUIRE(cloud.has_normals());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    const auto n = cloud.normal(i);
    const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    CHECK(std::abs(r - 0.5) < 1e-9);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(n[k] - p[k] / r) < 1e-9);
  }

  const auto t = (dir / "t.xyz").string();
  REQUIRE(run_cli({"make-fixture", "--shape", "torus:0.4:0.15", "--n", "200", "--out", t}).code == 0);
  const PointCloud torus = read_xyz(t);
  for (std::size_t i = 0; i < torus.size(); ++i) {
    const auto n = torus.normal(i);
    CHECK(std::abs(n[0] * n[0] + n[1] * n[1] + n[2] * n[2] - 1.0) < 1e-9);
  }
  CHECK(run_cli({"make-fixture", "--shape", "cone:1", "--out", t}).code == 2);
  CHECK(run_cli({"make-fixture", "--shape", "sphere:-1", "--out", t}).code == 2);
}

TEST_CASE("fit-sdf, extract and eval") {
  const auto dir = test::temp_dir("cli_fit");
  const auto xyz = (dir / "s.xyz").string(), model = (dir / "m.json").string();
  REQUIRE(run_cli({"make-fixture", "--shape", "sphere:0.5", "--n", "400", "--out", xyz}).code == 0);

  const auto missing = run_cli({"fit-sdf", "--input", (dir / "nope.xyz").string(), "--out", model});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nope.xyz") != std::string::npos);

  std::vector<std::string> args{"fit-sdf", "--input", xyz, "--out", model};
  for (const auto& f : tiny_fit_flags()) args.push_back(f);
  args.push_back("--quiet");
  const auto fit = run_cli(args);
  REQUIRE_MESSAGE(fit.code == 0, fit.err);
  const json manifest = read_json(model + ".manifest.json");
  const auto& stages = manifest["results"]["stages"];
  REQUIRE(stages.size() == 2);
  CHECK(stages.back()["end_loss"].get<double>() < stages.front()["start_loss"].get<double>());
  CHECK(manifest["config"]["encoder"] == "spe");
  CHECK(std::filesystem::exists(model + ".log.csv"));
  const auto log = read_text_file(model + ".log.csv");
  CHECK(log.rfind("step,stage_K,loss,eikonal_term,fit_term,normal_term\n", 0) == 0);

  const auto obj = (dir / "m.obj").string();
  CHECK(run_cli({"extract", "--model", model, "--res", "1", "--out", obj}).code == 2);
  CHECK(run_cli({"extract", "--model", model, "--res", "24", "--out", obj}).code == 0);
  CHECK(std::filesystem::exists(obj));

  const auto ev = run_cli({"eval", "--model", model, "--gt-shape", "sphere:0.5", "--chamfer-n", "500",
                           "--mae-res", "8", "--extract-res", "24"});
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  const json metrics = json::parse(ev.out);
  CHECK(metrics.contains("chamfer"));
  CHECK(metrics["mae"].is_number());
  CHECK(run_cli({"eval", "--model", model, "--gt-shape", "blob"}).code == 2);
  CHECK(run_cli({"eval", "--model", xyz, "--gt-shape", "sphere"}).code == 2);

  std::vector<std::string> fpe{"fit-sdf", "--input", xyz, "--out", (dir / "f.json").string()};
  for (const auto& f : tiny_fit_flags()) fpe.push_back(f);
  fpe.insert(fpe.end(), {"--encoder", "fpe"});
  REQUIRE(run_cli(fpe).code == 0);
  CHECK(read_json((dir / "f.json.manifest.json"))["config"]["encoder"] == "fpe");

  std::vector<std::string> diverge{"fit-sdf", "--input", xyz, "--out", (dir / "d.json").string()};
  for (const auto& f : tiny_fit_flags("1e300")) diverge.push_back(f);
  CHECK(run_cli(diverge).code == 1);
  CHECK(run_cli({"fit-sdf", "--input", xyz, "--out", model, "--schedule", "4,2"}).code == 2);
  CHECK(run_cli({"fit-sdf", "--input", xyz, "--out", model, "--preset", "huge"}).code == 2);
}

TEST_CASE("regress-sdf rejects bad shapes and trains") {
  const auto dir = test::temp_dir("cli_regress");
  const auto out = (dir / "r.json").string();
  CHECK(run_cli({"regress-sdf", "--gt-shape", "sphere:0.5", "--out", out, "--m", "0"}).code == 2);
  const auto r = run_cli({"regress-sdf", "--gt-shape", "box:0.4:0.3:0.3", "--out", out, "--m", "4", "--k", "8",
                          "--c", "8", "--hidden", "16", "--grid-res", "8", "--steps", "20", "--batch", "64",
                          "--log-every", "10", "--lr", "1e-3", "--extract-res", "16", "--chamfer-n", "200"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_text_file(out + ".log.csv").rfind("step,l1_loss\n", 0) == 0);
}

TEST_CASE("image fitting and the exact-fit PSNR sentinel") {
  const auto dir = test::temp_dir("cli_image");
  Image img;
  img.width = 6;
  img.height = 4;
  img.channels = 1;
  img.pixels.assign(24, 1.0);
  const auto pgm = (dir / "c.pgm").string(), model = (dir / "c.json").string();
  write_pnm(pgm, img);
  const auto fit = run_cli({"fit-image", "--input", pgm, "--out", model, "--encoder", "identity", "--hidden", "8",
                            "--steps", "1000", "--lr", "3e-3", "--log-every", "100"});
  REQUIRE_MESSAGE(fit.code == 0, fit.err);
  CHECK(json::parse(fit.out)["psnr"].get<double>() > 30.0);

  // A network whose output layer is the constant 1 reproduces the image exactly.
  Checkpoint exact = load_checkpoint(model);
  auto& last = exact.model.mlp.mutable_layers().back();
  std::fill(last.weight.begin(), last.weight.end(), 0.0);
  std::fill(last.bias.begin(), last.bias.end(), 1.0);
  const auto exact_path = (dir / "exact.json").string();
  save_checkpoint(exact_path, exact);
  const auto ren = (dir / "r.pgm").string();
  const auto r = run_cli({"render-image", "--model", exact_path, "--res", "6x4", "--out", ren, "--reference", pgm});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(json::parse(r.out.substr(r.out.find('{')))["psnr"] == "inf");
  CHECK(read_pnm(ren).pixels == img.pixels);
  CHECK(run_cli({"render-image", "--model", model, "--res", "6by4", "--out", ren}).code == 2);
  CHECK(run_cli({"render-image", "--model", model, "--res", "5x4", "--out", ren, "--reference", pgm}).code == 2);
}

TEST_CASE("shape-space fit leaves the trained space untouched") {
  const auto dir = test::temp_dir("cli_space");
  std::vector<std::string> inputs;
  for (const char* r : {"0.3", "0.6", "0.45"}) {
    const auto p = (dir / (std::string("s") + r + ".xyz")).string();
    REQUIRE(run_cli({"make-fixture", "--shape", std::string("sphere:") + r, "--n", "200", "--out", p}).code == 0);
    inputs.push_back(p);
  }
  const auto space = (dir / "space.json").string();
  std::vector<std::string> train{"shape-space", "train", "--inputs", inputs[0] + "," + inputs[1], "--out", space,
                                 "--fit-steps", "10"};
  for (const auto& f : tiny_fit_flags()) train.push_back(f);
  const auto t = run_cli(train);
  REQUIRE_MESSAGE(t.code == 0, t.err);
  const auto before = read_text_file(space);
  const auto enc = (dir / "enc.json").string();
  const auto f = run_cli({"shape-space", "fit", "--space", space, "--input", inputs[2], "--out", enc});
  REQUIRE_MESSAGE(f.code == 0, f.err);
  CHECK(read_text_file(space) == before);
  CHECK(std::filesystem::exists(enc));
  CHECK(run_cli({"extract", "--model", enc, "--res", "8", "--out", (dir / "e.obj").string()}).code == 0);
  CHECK(run_cli({"shape-space", "train", "--inputs", inputs[0], "--out", space}).code == 2);
  CHECK(run_cli({"shape-space"}).code == 2);
}
