#include "romfv/romb_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

namespace romfv {

static_assert(std::endian::native == std::endian::little, "ROMB i/o assumes a little-endian host");

void save_matrix(const std::string& path, const Mat& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("romb: cannot write '" + path + "'");
    out.write("ROMB", 4);
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (!out) fail("romb: write failed for '" + path + "'");
}

Mat load_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("romb: cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "ROMB") fail("romb: bad magic in '" + path + "'");
    std::uint32_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (!in) fail("romb: truncated header in '" + path + "'");
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double)) * m.size());
    if (!in) fail("romb: truncated payload in '" + path + "'");
    return m;
}

void save_vector(const std::string& path, const Vec& v) { save_matrix(path, v); }

Vec load_vector(const std::string& path) {
    Mat m = load_matrix(path);
    if (m.cols() != 1) fail("romb: '" + path + "' holds a matrix, expected a single column");
    return m.col(0);
}

}  // namespace romfv
