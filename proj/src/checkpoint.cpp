#include "spe/checkpoint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>

#include "spe/io_formats.hpp"

namespace spe {

using nlohmann::json;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

json spline_json(const SplineConfig& c, double radius) {
  return {{"degree", c.degree},          {"segments", c.segments},
          {"channels", c.channels},      {"directions", c.directions},
          {"input_dim", c.input_dim},    {"domain_radius", radius},
          {"freeze_directions", c.freeze_directions}};
}

SplineConfig spline_config(const json& j) {
  SplineConfig c;
  c.degree = j.at("degree").get<int>();
  c.segments = j.at("segments").get<int>();
  c.channels = j.at("channels").get<int>();
  c.directions = j.at("directions").get<int>();
  c.input_dim = j.at("input_dim").get<int>();
  c.domain_radius = j.at("domain_radius").get<double>();
  c.freeze_directions = j.at("freeze_directions").get<bool>();
  return c;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<DenseLayer> empty_layers(const std::vector<int>& widths) {
  if (widths.size() < 2) throw std::invalid_argument("MLP needs at least an input and output width");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    if (layer.in < 1 || layer.out < 1) throw std::invalid_argument("MLP widths must be positive");
    layer.weight.assign(static_cast<std::size_t>(layer.in) * layer.out, 0.0);
    layer.bias.assign(static_cast<std::size_t>(layer.out), 0.0);
    layers.push_back(std::move(layer));
  }
  return layers;
}

std::vector<int> mlp_widths(const Mlp& mlp) {
  std::vector<int> widths{mlp.input_dim()};
  for (const auto& l : mlp.layers()) widths.push_back(l.out);
  return widths;
}

FieldModel model_from_architecture(const json& arch) {
  const json& enc = arch.at("encoder");
  const EncoderKind kind = parse_encoder_kind(enc.at("kind").get<std::string>());
  FieldModel model;
  if (kind == EncoderKind::identity) {
    model.encoder = IdentityEncoding{enc.at("input_dim").get<int>()};
  } else if (kind == EncoderKind::spline) {
    const SplineConfig c = spline_config(enc);
    c.validate();
    const auto m = static_cast<std::size_t>(c.directions);
    std::vector<double> angles(m * static_cast<std::size_t>(c.input_dim - 1), 0.0);
    std::vector<double> weights(m * static_cast<std::size_t>(c.segments + 1) * c.channels, 0.0);
    model.encoder = SplineEncoding(c, std::move(angles), std::move(weights));
  } else {
    model.encoder = FourierEncoding(enc.at("input_dim").get<int>(),
                                    enc.at("frequencies").get<std::vector<double>>());
  }
  model.mlp = Mlp(empty_layers(arch.at("mlp").at("widths").get<std::vector<int>>()));
  model.validate();
  return model;
}

[[noreturn]] void rethrow_as_format_error(const std::string& source, const std::exception& e) {
  throw FileFormatError(source, 0, std::string("invalid content: ") + e.what());
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

json parse_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FileFormatError(path, line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
}

void check_version(const json& doc, const std::string& source) {
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw FileFormatError(source, 0, "missing format_version");
  }
  const json& v = doc.at("format_version");
  if (!v.is_number_integer() || v.get<int>() != kCheckpointFormatVersion) {
    throw FileFormatError(source, 0, "unsupported format_version " + v.dump());
  }
}

}  // namespace

json model_architecture(const FieldModel& model) {
  json enc;
  enc["kind"] = encoder_kind_name(encoder_kind(model.encoder));
  enc["input_dim"] = model.input_dim();
  if (const auto* s = std::get_if<SplineEncoding>(&model.encoder)) {
    enc.update(spline_json(s->config(), s->domain_radius()));
  } else if (const auto* f = std::get_if<FourierEncoding>(&model.encoder)) {
    enc["frequencies"] = std::vector<double>(f->frequencies().begin(), f->frequencies().end());
  }
  return {{"encoder", enc}, {"mlp", {{"widths", mlp_widths(model.mlp)}}}};
}

json to_json(const NormalizeTransform& t) { return {{"scale", t.scale}, {"translation", t.translation}}; }

json to_json(const ModelConfig& c) {
  return {{"encoder", encoder_kind_name(c.encoder)},
          {"spline", spline_json(c.spline, c.spline.domain_radius)},
          {"fourier_frequencies", c.fourier_frequencies},
          {"fourier_sigma", c.fourier_sigma},
          {"hidden_width", c.hidden_width},
          {"layers", c.layers},
          {"output_dim", c.output_dim}};
}

json to_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"tau", c.tau},
          {"lr", c.lr},
          {"batch_points", c.batch_points},
          {"k_schedule", c.k_schedule},
          {"steps_per_stage", c.resolved_steps()},
          {"seed", c.seed},
          {"model", to_json(c.model)},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"sphere_init", c.sphere_init},
          {"sphere",
           {{"radius", c.sphere.radius},
            {"batch", c.sphere.batch},
            {"lr", c.sphere.lr},
            {"max_steps", c.sphere.max_steps},
            {"tolerance", c.sphere.tolerance},
            {"probe_points", c.sphere.probe_points},
            {"seed", c.sphere.seed}}},
          {"probe_points", c.probe_points}};
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  ckpt.model.validate();
  json order = json::array();
  for (const auto& b : param_layout(ckpt.model)) {
    order.push_back({{"name", b.name}, {"shape", b.shape}, {"offset", b.offset}, {"size", b.size}});
  }
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["config"] = {{"model", model_architecture(ckpt.model)},
                   {"normalization", ckpt.normalization ? to_json(*ckpt.normalization) : json(nullptr)},
                   {"settings", ckpt.settings}};
  doc["param_order"] = std::move(order);
  doc["params"] = ckpt.model.flatten();
  doc["meta"] = {{"step", ckpt.step},
                 {"loss", number_or_null(ckpt.loss)},
                 {"timestamp", ckpt.timestamp.empty() ? utc_timestamp() : ckpt.timestamp}};
  return doc;
}

Checkpoint checkpoint_from_json(const json& doc, const std::string& source) {
  check_version(doc, source);
  try {
    Checkpoint ckpt;
    const json& config = doc.at("config");
    ckpt.model = model_from_architecture(config.at("model"));
    const auto params = doc.at("params").get<std::vector<double>>();
    if (params.size() != ckpt.model.param_count()) {
      throw FileFormatError(source, 0, "params has " + std::to_string(params.size()) +
                                           " values, architecture needs " +
                                           std::to_string(ckpt.model.param_count()));
    }
    ckpt.model.unflatten(params);
    if (config.contains("normalization") && !config.at("normalization").is_null()) {
      const json& n = config.at("normalization");
      ckpt.normalization = NormalizeTransform{n.at("scale").get<double>(),
                                              n.at("translation").get<std::vector<double>>()};
    }
    if (config.contains("settings")) ckpt.settings = config.at("settings");
    const json& meta = doc.at("meta");
    ckpt.step = meta.at("step").get<long long>();
    ckpt.loss = meta.at("loss").is_null() ? std::nan("") : meta.at("loss").get<double>();
    ckpt.timestamp = meta.at("timestamp").get<std::string>();
    return ckpt;
  } catch (const FileFormatError&) {
    throw;
  } catch (const std::exception& e) {
    rethrow_as_format_error(source, e);
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_text_file(path, checkpoint_to_json(ckpt).dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) { return checkpoint_from_json(parse_file(path), path); }

void save_shape_space(const std::string& path, const ShapeSpaceFile& file) {
  file.space.validate();
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["kind"] = "shape_space";
  const auto& enc = file.space.encodings.front();
  std::vector<double> mlp(file.space.mlp.param_count());
  file.space.mlp.flatten(mlp);
  json encodings = json::array();
  for (const auto& e : file.space.encodings) {
    encodings.push_back({{"weights", std::vector<double>(e.weights().begin(), e.weights().end())},
                         {"angles", std::vector<double>(e.angles().begin(), e.angles().end())}});
  }
  doc["config"] = {{"encoding", spline_json(enc.config(), enc.domain_radius())},
                   {"mlp", {{"widths", mlp_widths(file.space.mlp)}}},
                   {"settings", file.settings}};
  doc["mlp_params"] = std::move(mlp);
  doc["encodings"] = std::move(encodings);
  doc["meta"] = {{"shapes", file.space.encodings.size()},
                 {"timestamp", file.timestamp.empty() ? utc_timestamp() : file.timestamp}};
  write_text_file(path, doc.dump(1) + "\n");
}

ShapeSpaceFile load_shape_space(const std::string& path) {
  const json doc = parse_file(path);
  check_version(doc, path);
  try {
    if (doc.value("kind", std::string()) != "shape_space") throw FileFormatError(path, 0, "not a shape space file");
    ShapeSpaceFile file;
    const json& config = doc.at("config");
    const SplineConfig sc = spline_config(config.at("encoding"));
    sc.validate();
    file.space.mlp = Mlp(empty_layers(config.at("mlp").at("widths").get<std::vector<int>>()));
    const auto mlp = doc.at("mlp_params").get<std::vector<double>>();
    if (mlp.size() != file.space.mlp.param_count()) throw FileFormatError(path, 0, "mlp_params size mismatch");
    file.space.mlp.unflatten(mlp);
    for (const auto& e : doc.at("encodings")) {
      file.space.encodings.emplace_back(sc, e.at("angles").get<std::vector<double>>(),
                                        e.at("weights").get<std::vector<double>>());
    }
    if (config.contains("settings")) file.settings = config.at("settings");
    file.timestamp = doc.at("meta").at("timestamp").get<std::string>();
    file.space.validate();
    return file;
  } catch (const FileFormatError&) {
    throw;
  } catch (const std::exception& e) {
    rethrow_as_format_error(path, e);
  }
}

}  // namespace spe
