#pragma once

#include <unistd.h>

#include <Eigen/QR>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "romfv/mesh.hpp"
#include "romfv/rng.hpp"
#include "romfv/types.hpp"

namespace romfv::test {

constexpr double kPi = 3.14159265358979323846;

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("romfv_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline Mat random_matrix(Rng& rng, int rows, int cols) {
    Mat m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = 2.0 * rng.uniform01() - 1.0;
    return m;
}

inline Vec random_vector(Rng& rng, int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = 2.0 * rng.uniform01() - 1.0;
    return v;
}

inline Mat random_orthonormal(Rng& rng, int rows, int cols) {
    const Mat a = random_matrix(rng, rows, cols);
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ() * Mat::Identity(rows, cols);
    return q;
}

/// Central finite differences, step relative to the coordinate scale.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h0 = 1e-5) {
    const Vec f0 = f(x);
    Mat jac(f0.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = h0 * std::max(1.0, std::abs(x[j]));
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return jac;
}

/// Graph distance of every cell from the boundary (boundary-face cells
/// have depth 0).
inline std::vector<int> cell_depths(const Mesh& mesh) {
    std::vector<int> depth(mesh.n_cells(), -1);
    std::vector<int> frontier;
    for (int c = 0; c < mesh.n_cells(); ++c) {
        for (int f : mesh.cell_faces[c]) {
            if (mesh.is_boundary_face(f)) {
                depth[c] = 0;
                frontier.push_back(c);
                break;
            }
        }
    }
    int d = 0;
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int c : frontier) {
            for (int f : mesh.cell_faces[c]) {
                const int other = mesh.face_cells[f][0] == c ? mesh.face_cells[f][1] : mesh.face_cells[f][0];
                if (other >= 0 && depth[other] < 0) {
                    depth[other] = d + 1;
                    next.push_back(other);
                }
            }
        }
        frontier = std::move(next);
        ++d;
    }
    return depth;
}

/// Smooth compressible-flow state with both velocity components bounded
/// away from zero, stacked [rho; u; v; p] at cell centroids.
inline Vec manufactured_euler_state(const MeshGeometry& geom) {
    const int n = geom.n_cells();
    Vec state(4 * n);
    for (int c = 0; c < n; ++c) {
        const double x = geom.cell_centroids[c].x(), y = geom.cell_centroids[c].y();
        state[c] = 1.2 + 0.1 * std::sin(2 * kPi * x) * std::cos(kPi * y);
        state[n + c] = 1.5 + 0.25 * std::cos(2 * kPi * x) * std::sin(kPi * y);
        state[2 * n + c] = 0.8 + 0.2 * std::sin(kPi * x) * std::sin(kPi * y);
        state[3 * n + c] = 1.0 + 0.3 * std::sin(kPi * x) * std::cos(2 * kPi * y);
    }
    return state;
}

}  // namespace romfv::test
