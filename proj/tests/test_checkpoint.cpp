#include <doctest.h>

#include <initializer_list>
#include <stdexcept>

#include "spe/checkpoint.hpp"
#include "spe/io_formats.hpp"
#include "test_util.hpp"

using namespace spe;
using namespace spe::test;

TEST_CASE("checkpoint round trip reproduces parameters and outputs exactly") {
  const auto dir = temp_dir("ckpt");
  std::mt19937_64 rng(1);
  for (auto kind : {EncoderKind::spline, EncoderKind::fourier, EncoderKind::identity}) {
    for (int degree : {0, 1, 2}) {
      auto cfg = tiny_config(kind, degree);
      cfg.spline.freeze_directions = degree == 2;
      Checkpoint ck;
      ck.model = make_field_model(cfg, 3);
      ck.settings = {{"note", "x"}};
      ck.normalization = NormalizeTransform{1.25, {0.1, -0.2, 1.0 / 3.0}};
      ck.step = 42;
      ck.loss = 0.123456789012345678;
      const auto path = (dir / "m.json").string();
      save_checkpoint(path, ck);
      const auto back = load_checkpoint(path);
      CHECK(back.model.flatten() == ck.model.flatten());
      CHECK(encoder_kind(back.model.encoder) == kind);
      CHECK(back.settings == ck.settings);
      REQUIRE(back.normalization.has_value());
      CHECK(back.normalization->scale == 1.25);
      CHECK(back.normalization->translation == ck.normalization->translation);
      CHECK(back.step == 42);
      CHECK(back.loss == ck.loss);
      CHECK(!back.timestamp.empty());
      if (kind == EncoderKind::spline) {
        CHECK(std::get<SplineEncoding>(back.model.encoder).directions_frozen() == (degree == 2));
      }
      const auto pts = uniform_points(50, 3, rng);
      CHECK(evaluate_batch(back.model, pts, false).values == evaluate_batch(ck.model, pts, false).values);
      // Saving the loaded checkpoint again gives the same bytes.
      const auto path2 = (dir / "m2.json").string();
      save_checkpoint(path2, back);
      CHECK(read_text_file(path2) == read_text_file(path));
    }
  }
}

TEST_CASE("checkpoint layout names every parameter block") {
  Checkpoint ck;
  ck.model = make_field_model(tiny_config(EncoderKind::spline), 1);
  const auto doc = checkpoint_to_json(ck);
  CHECK(doc.at("format_version") == 1);
  const auto& order = doc.at("param_order");
  REQUIRE(order.size() == param_layout(ck.model).size());
  CHECK(order[0].at("name") == "encoder.weights");
  CHECK(doc.at("params").size() == ck.model.param_count());
  CHECK(doc.at("meta").contains("timestamp"));
}

TEST_CASE("malformed checkpoints raise format errors") {
  const auto dir = temp_dir("ckpt_bad");
  const auto path = (dir / "bad.json").string();
  write_text_file(path, "{\n  \"format_version\": 1,\n  oops\n}\n");
  CHECK_THROWS_AS(load_checkpoint(path), FileFormatError);
  try {
    load_checkpoint(path);
  } catch (const FileFormatError& e) {
    CHECK(e.line() == 3);
  }
  Checkpoint ck;
  ck.model = make_field_model(tiny_config(EncoderKind::identity), 1);
  auto doc = checkpoint_to_json(ck);
  doc["format_version"] = 99;
  write_text_file(path, doc.dump());
  CHECK_THROWS_AS(load_checkpoint(path), FileFormatError);
  doc = checkpoint_to_json(ck);
  doc["params"].erase(0);
  write_text_file(path, doc.dump());
  CHECK_THROWS_AS(load_checkpoint(path), FileFormatError);
  CHECK_THROWS_AS(load_checkpoint((dir / "none.json").string()), FileFormatError);
}
