#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "romfv/deim.hpp"
#include "romfv/fvm.hpp"
#include "romfv/pod.hpp"
#include "romfv/types.hpp"

namespace romfv {

/// One reduced system: btilde = (A Phi)^T (A Phi), ftilde = (A Phi)^T f.
/// btilde is symmetric positive semidefinite by construction (and often
/// rank-deficient; the constraints supply uniqueness).
struct RomInstance {
    Mat btilde;
    Vec ftilde;
    Vec theta;
    int k = 0;
};

/// The tall product A Phi, formed column-by-column (A^T A is never
/// materialized at full size).
Mat projected_operator(const BlockOperator& a, const BlockBasis& basis);

RomInstance project(const BlockOperator& a, const Vec& f, const BlockBasis& basis, const Vec& theta);
RomInstance project_with(const Mat& a_phi, const Vec& f, const Vec& theta);

struct SqpOptions {
    double tol_kkt = 1e-8;
    double tol_feas = 1e-8;
    int max_iter = 200;
    double levenberg = 1e-10;  // initial regularization, x10 per failure
    int max_halvings = 30;
};

struct SqpResult {
    Vec ytil;
    bool converged = false;
    int iterations = 0;
    double objective = 0.0;
    double kkt_inf = 0.0;
    double feas_inf = 0.0;
    double levenberg = 0.0;
    /// Merit value before/after each accepted step (monotonicity record).
    std::vector<std::pair<double, double>> merit_steps;
};

/// Minimize 0.5 || btilde ytil - ftilde ||^2 subject to h~(ytil) = 0,
/// by SQP with a Gauss-Newton Hessian, linearized constraints, a
/// Levenberg-regularized KKT solve and a backtracking line search on the
/// l1 merit function. Pass constraints = nullptr for the unconstrained
/// least-squares mode. Never throws on max-iterations: the best iterate
/// comes back flagged non-converged.
SqpResult solve_rom(const RomInstance& instance, const ReducedConstraints* constraints, const Vec& theta,
                    const Vec& ytil0, const SqpOptions& options = {});

/// y = Phi ytil.
Vec reconstruct(const BlockBasis& basis, const Vec& ytil);

/// Offline database: one RomInstance per training point plus the shared
/// basis, DEIM constraint factors and warm-start coordinates.
struct RomDatabase {
    std::string system_name;
    double gamma = 1.4;  // carried for the euler side channel
    Mat ranges;          // p x 2 design box
    std::uint64_t seed = 0;
    std::string pod_mode;        // "per_block" | "joint"
    std::string pod_truncation;  // human-readable truncation rule
    std::string mesh_path;
    int n_cells = 0;
    int interpolation_degree = 2;

    Mat thetas;  // M x p training points
    std::vector<RomInstance> instances;
    BlockBasis basis;
    ReducedConstraints constraints;
    Mat train_coords;  // k x M projected training snapshots (warm starts)

    int count() const { return static_cast<int>(instances.size()); }
    int k() const { return basis.k(); }

    /// Directory layout: manifest.json + ROMB matrices.
    void save(const std::string& dir) const;
    static RomDatabase load(const std::string& dir);
};

}  // namespace romfv
