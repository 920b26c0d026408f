#include "spe/io_formats.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace spe {

FileFormatError::FileFormatError(std::string path, std::size_t line, const std::string& message)
    : std::runtime_error(path + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      path_(std::move(path)),
      line_(line) {}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileFormatError(path, 0, "cannot open file for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw FileFormatError(path, 0, "read error");
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileFormatError(path, 0, "cannot open file for writing");
  out << text;
  out.close();
  if (!out) throw FileFormatError(path, 0, "write error");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

bool parse_long(std::string_view s, long long& v) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Calls fn(line_number, line) for every line with comments stripped.
template <typename Fn>
void for_each_line(const std::string& text, Fn fn) {
  std::size_t start = 0, number = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    ++number;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    fn(number, line);
    if (end == text.size()) break;
    start = end + 1;
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PointCloud read_xyz(const std::string& path) {
  const std::string text = read_text_file(path);
  PointCloud cloud;
  cloud.dim = 3;
  std::size_t columns = 0;
  for_each_line(text, [&](std::size_t number, std::string_view line) {
    const auto fields = split_fields(line);
    if (fields.empty()) return;
    if (fields.size() != 3 && fields.size() != 6) {
      throw FileFormatError(path, number, "expected 3 or 6 columns, found " + std::to_string(fields.size()));
    }
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) {
      throw FileFormatError(path, number, "column count changes from " + std::to_string(columns) +
                                              " to " + std::to_string(fields.size()));
    }
    double v[6];
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], v[i])) {
        throw FileFormatError(path, number, "not a finite number: '" + std::string(fields[i]) + "'");
      }
    }
    cloud.positions.insert(cloud.positions.end(), v, v + 3);
    if (columns == 6) {
      const double n = std::sqrt(v[3] * v[3] + v[4] * v[4] + v[5] * v[5]);
      if (n == 0.0) throw FileFormatError(path, number, "zero-length normal");
      if (std::abs(n - 1.0) > 1e-6) {
        for (int i = 3; i < 6; ++i) v[i] /= n;
      }
      cloud.normals.insert(cloud.normals.end(), v + 3, v + 6);
    }
  });
  if (cloud.positions.empty()) throw FileFormatError(path, 0, "file contains no points");
  return cloud;
}

void write_xyz(const std::string& path, const PointCloud& cloud) {
  if (cloud.dim != 3) throw std::invalid_argument("write_xyz: only 3-D clouds are supported");
  cloud.validate();
  std::string out;
  out.reserve(cloud.size() * (cloud.has_normals() ? 140 : 70));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int j = 0; j < 3; ++j) {
      if (j) out += ' ';
      out += format_double(cloud.positions[3 * i + static_cast<std::size_t>(j)]);
    }
    if (cloud.has_normals()) {
      for (int j = 0; j < 3; ++j) {
        out += ' ';
        out += format_double(cloud.normals[3 * i + static_cast<std::size_t>(j)]);
      }
    }
    out += '\n';
  }
  write_text_file(path, out);
}

TriangleMesh read_obj(const std::string& path) {
  const std::string text = read_text_file(path);
  TriangleMesh mesh;
  for_each_line(text, [&](std::size_t number, std::string_view line) {
    const auto fields = split_fields(line);
    if (fields.empty()) return;
    if (fields[0] == "v") {
      if (fields.size() < 4) throw FileFormatError(path, number, "vertex needs 3 coordinates");
      Vec3 p{};
      for (int i = 0; i < 3; ++i) {
        if (!parse_double(fields[static_cast<std::size_t>(i) + 1], p[static_cast<std::size_t>(i)])) {
          throw FileFormatError(path, number, "bad vertex coordinate");
        }
      }
      mesh.vertices.push_back(p);
    } else if (fields[0] == "f") {
      if (fields.size() < 4) throw FileFormatError(path, number, "face needs at least 3 vertices");
      std::vector<std::uint32_t> idx;
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto token = fields[i].substr(0, fields[i].find('/'));
        long long v = 0;
        if (!parse_long(token, v) || v == 0) throw FileFormatError(path, number, "bad face index");
        const auto n = static_cast<long long>(mesh.vertices.size());
        const long long resolved = v > 0 ? v - 1 : n + v;
        if (resolved < 0 || resolved >= n) {
          throw FileFormatError(path, number, "face index " + std::to_string(v) + " out of range (" +
                                                  std::to_string(n) + " vertices so far)");
        }
        idx.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
    }
  });
  return mesh;
}

void write_obj(const std::string& path, const TriangleMesh& mesh) {
  mesh.validate();
  std::string out;
  out.reserve(mesh.vertices.size() * 60 + mesh.triangles.size() * 24);
  for (const auto& v : mesh.vertices) {
    out += "v " + format_double(v[0]) + ' ' + format_double(v[1]) + ' ' + format_double(v[2]) + '\n';
  }
  for (const auto& t : mesh.triangles) {
    out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' +
           std::to_string(t[2] + 1) + '\n';
  }
  write_text_file(path, out);
}

Image read_pnm(const std::string& path) {
  const std::string data = read_text_file(path);
  std::size_t pos = 0, line = 1;
  auto skip_space = [&] {
    while (pos < data.size()) {
      const char c = data[pos];
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        if (c == '\n') ++line;
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&]() -> std::string {
    skip_space();
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) && data[pos] != '#') ++pos;
    if (start == pos) throw FileFormatError(path, line, "truncated header");
    return data.substr(start, pos - start);
  };
  auto number = [&](const char* what) {
    const std::string t = token();
    long long v = 0;
    if (!parse_long(t, v) || v < 1 || v > 1 << 20) throw FileFormatError(path, line, std::string("bad ") + what);
    return static_cast<int>(v);
  };
  const std::string magic = token();
  Image img;
  if (magic == "P6") {
    img.channels = 3;
  } else if (magic == "P5") {
    img.channels = 1;
  } else {
    throw FileFormatError(path, line, "expected binary P6 or P5, found '" + magic + "'");
  }
  img.width = number("width");
  img.height = number("height");
  if (number("maxval") != 255) throw FileFormatError(path, line, "only maxval 255 is supported");
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos]))) {
    throw FileFormatError(path, line, "missing whitespace after header");
  }
  ++pos;
  const std::size_t count = static_cast<std::size_t>(img.width) * img.height * img.channels;
  if (data.size() - pos < count) {
    throw FileFormatError(path, 0, "raster truncated: expected " + std::to_string(count) + " bytes, found " +
                                       std::to_string(data.size() - pos));
  }
  img.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) img.pixels[i] = static_cast<unsigned char>(data[pos + i]) / 255.0;
  return img;
}

void write_pnm(const std::string& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("write_pnm: 1 or 3 channels");
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw std::invalid_argument("write_pnm: pixel storage does not match dimensions");
  }
  std::string out = (image.channels == 3 ? "P6\n" : "P5\n") + std::to_string(image.width) + ' ' +
                    std::to_string(image.height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + image.pixels.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const double v = std::floor(image.pixels[i] * 255.0 + 0.5);
    out[header + i] = static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0.0, 255.0)));
  }
  write_text_file(path, out);
}

void write_training_log(const std::string& path, const std::vector<TrainLogRow>& rows) {
  std::string out = "step,stage_K,loss,eikonal_term,fit_term,normal_term\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + ',' + std::to_string(r.stage_k) + ',' + format_double(r.loss) + ',' +
           format_double(r.eikonal) + ',' + format_double(r.fit) + ',' + format_double(r.normal) + '\n';
  }
  write_text_file(path, out);
}

}  // namespace spe
