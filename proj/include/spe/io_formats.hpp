#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "spe/geometry.hpp"
#include "spe/training.hpp"

namespace spe {

// Parse or I/O failure. line is 1-based, 0 when the problem is not tied to a line.
class FileFormatError : public std::runtime_error {
 public:
  FileFormatError(std::string path, std::size_t line, const std::string& message);

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

// One point per line, "x y z" or "x y z nx ny nz"; '#' starts a comment.
// Every line must have the same column count and the file at least one point.
// Normals further than 1e-6 from unit length are rescaled; zero normals are errors.
PointCloud read_xyz(const std::string& path);
void write_xyz(const std::string& path, const PointCloud& cloud);

// v and f records; polygons are fan-triangulated, other records ignored.
// Face indices may be negative (relative) and may carry /vt/vn suffixes.
TriangleMesh read_obj(const std::string& path);
void write_obj(const std::string& path, const TriangleMesh& mesh);

// Binary P6 (RGB) or P5 (gray) with maxval 255. Values map to [0, 1] by /255
// and back with round-half-up and clamping.
Image read_pnm(const std::string& path);
void write_pnm(const std::string& path, const Image& image);

// CSV with header step,stage_K,loss,eikonal_term,fit_term,normal_term.
void write_training_log(const std::string& path, const std::vector<TrainLogRow>& rows);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace spe
