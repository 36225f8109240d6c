#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "romfv/mesh.hpp"
#include "romfv/observables.hpp"
#include "romfv/types.hpp"

namespace romfv {

/// Training/validation parameter points with their design box.
struct ParameterDesign {
    Mat ranges;  // p x 2, [lo, hi] per coordinate
    Mat points;  // M x p
    std::vector<std::string> roles;  // "train" | "validate"
    std::uint64_t seed = 0;

    int count() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(ranges.rows()); }
    std::vector<int> indices_with_role(const std::string& role) const;
};

/// Latin hypercube sample: each coordinate's M values occupy the M
/// equal-width strata exactly once, uniformly placed within the stratum;
/// strata are coupled through independent random permutations.
/// Deterministic under seed.
///
/// Space filling: `candidates` designs are drawn from the seeded stream
/// and the one maximizing the minimum pairwise distance (in normalized
/// coordinates) is kept. candidates = 1 gives the plain stratified draw.
ParameterDesign lhs_sample(const Mat& ranges, int count, std::uint64_t seed, int candidates = 64);

/// Lifted FOM solutions at the training points, one column per point.
struct SnapshotSet {
    Mat u;       // (n_blocks * N) x M
    Mat thetas;  // M x p
    std::string system;
    std::string mesh_path;
    int n_cells = 0;
    std::uint64_t seed = 0;
    double fom_tol = 0.0;
    int fom_max_iter = 0;

    int count() const { return static_cast<int>(u.cols()); }

    /// `<prefix>.romb` for the matrix plus `<prefix>.manifest.json`.
    void save(const std::string& prefix) const;
    static SnapshotSet load(const std::string& prefix);
};

struct NewtonOptions {
    double tol = 1e-10;  // absolute 2-norm of the residual
    int max_iter = 50;
    int max_halvings = 30;
    /// Override for the volumetric forcing; null means the built-in
    /// 100 sin(2 pi x) sin(2 pi y).
    std::function<double(double, double)> forcing;
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_norms;  // includes the initial residual
    bool mu_out_of_range = false;
};

/// Reference full-order solver for
///   -div(grad u) + s(u; mu) = forcing,  u = 0 on the boundary,
/// discretized with the same finite-volume scheme as the operator
/// module plus a one-sided first-order Dirichlet closure at boundary
/// faces (the operator used by the reduction pipeline instead lumps
/// boundary fluxes into the recovered right-hand side; the two
/// discretizations are deliberately independent). Damped Newton with
/// a sparse direct solve per step.
class CanonicalFom {
public:
    explicit CanonicalFom(const MeshGeometry& geom);

    /// Cell-centered solution. Throws on non-convergence, reporting the
    /// last residual.
    Vec solve(const Vec2& mu, const NewtonOptions& options = {}, NewtonReport* report = nullptr) const;

    const Vec& cell_areas() const { return area_; }
    const Vec& default_forcing() const { return forcing_; }

private:
    const MeshGeometry& geom_;
    Eigen::SparseMatrix<double> base_;  // -L plus the Dirichlet boundary diagonal
    std::vector<Eigen::Index> diag_pos_;
    Vec area_;
    Vec forcing_;  // default forcing at centroids
};

/// Solve the FOM at every training point of the design and lift the
/// solutions. Solver failures propagate with the offending theta.
SnapshotSet generate_snapshots(const MeshGeometry& geom, const ObservableSystem& system,
                               const ParameterDesign& design, const NewtonOptions& options = {});

}  // namespace romfv
