#pragma once

#include <string>

#include "romfv/types.hpp"

namespace romfv {

/// Binary matrix container: magic "ROMB", u32 rows, u32 cols, then
/// rows*cols little-endian IEEE doubles in column-major order.
void save_matrix(const std::string& path, const Mat& m);
Mat load_matrix(const std::string& path);

void save_vector(const std::string& path, const Vec& v);
Vec load_vector(const std::string& path);

}  // namespace romfv
