#pragma once

#include <Eigen/LU>
#include <optional>
#include <vector>

#include "romfv/rom.hpp"
#include "romfv/types.hpp"

namespace romfv {

/// Indices of the `count` nearest training points to the query, by
/// Euclidean distance in normalized coordinates (each coordinate scaled
/// to [0,1] by its range). Exact ties break to the lower index.
std::vector<int> nearest_neighbors(const Mat& train_points, const Vec& query, int count, const Mat& ranges);

/// Bivariate polynomial interpolation stencil in Lagrange (coefficient)
/// form. The monomial basis follows the total-degree-2 layout
/// [1, x, y, x y, x^2, y^2] (degree 1 uses [1, x, y]); the square
/// collocation matrix is factored once and reused for every element
/// interpolated on this stencil.
class LagrangeStencil {
public:
    /// points: rho' x 2 in normalized coordinates; rho' = C(degree+2, 2).
    LagrangeStencil(const Mat& points, int degree);

    int degree() const { return degree_; }
    double condition() const { return cond_; }
    static int point_count(int degree);

    /// Interpolate a single element: solve M theta = values, return
    /// a(query)^T theta.
    double eval(const Vec& values, const Vec& query) const;

    /// Many elements at once (values: rho' x n); one factorization.
    Vec eval_many(const Mat& values, const Vec& query) const;

    /// Cardinal values ell_i(query) (for diagnostics and error bounds).
    Vec cardinal(const Vec& query) const;

    static Vec basis_at(const Vec& x, int degree);

private:
    int degree_;
    Mat m_;
    Eigen::PartialPivLU<Mat> lu_;
    double cond_ = 0.0;
};

struct StencilPick {
    std::vector<int> indices;
    int retries = 0;
    int attempts = 1;
    double lebesgue = 0.0;
    std::optional<LagrangeStencil> stencil;
};

/// Choose the rho' nearest training points and build the stencil. A
/// stencil counts as degenerate when its collocation matrix is
/// ill-conditioned (cond > cond_limit; six points on a conic are the
/// textbook case) or when the interpolation amplification at the query,
/// sum_i |ell_i(q)|, exceeds lambda_limit (near-conic neighbor sets pass
/// the cond test yet extrapolate wildly). Degeneracy swaps the farthest
/// selected point for the next-nearest unselected one, up to five times;
/// if no candidate meets lambda_limit the best-amplification one wins,
/// and only an all-ill-conditioned ladder is an error.
StencilPick pick_stencil(const Mat& train_norm, const Vec& query_norm, int degree, double cond_limit = 1e12,
                         double lambda_limit = 10.0);

struct InterpDiagnostics {
    int factorizations = 0;
    int retries = 0;
    double condition = 0.0;
    double lebesgue = 0.0;
    std::vector<int> neighbors;
    bool extrapolated = false;
};

/// Element-wise interpolation of (btilde, ftilde) over the database's
/// training points: one shared stencil and one factorization serve all
/// k^2 + k elements; the interpolated btilde is symmetrized.
RomInstance interpolate_rom(const RomDatabase& db, const Vec& theta_hat, InterpDiagnostics* diag = nullptr);

}  // namespace romfv
