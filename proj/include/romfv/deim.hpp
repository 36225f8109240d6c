#pragma once

#include <memory>
#include <string>
#include <vector>

#include "romfv/observables.hpp"
#include "romfv/pod.hpp"
#include "romfv/types.hpp"

namespace romfv {

/// Greedy interpolation-point selection: the first point is the argmax
/// of |first column|; each following point is the argmax of the residual
/// of the next column after interpolatory projection onto the previous
/// columns at the chosen points. Ties break to the lowest index.
/// Returns cols(X) distinct row indices.
std::vector<int> deim_select_points(const Mat& x_basis);

/// X (X(idx,:))^{-1} v(idx): reconstruct a full vector from its sampled
/// rows. Exact for v in span(X) when |idx| = rank(X).
Vec deim_reconstruct(const Mat& x_basis, const std::vector<int>& indices, const Vec& full);

struct DeimInterpolant {
    std::vector<int> indices;
    Mat left_factor;  // target_k x q:  Phi_t^T X (P^T X)^{-1}
    double cond = 0.0;  // 1-norm condition of P^T X
};

/// Precompute the state-independent factor so that later evaluations
/// touch only the q sampled rows.
DeimInterpolant build_deim_interpolant(const Mat& x_basis, const std::vector<int>& indices,
                                       const Mat& target_basis);

/// One constraint family lowered to reduced coordinates:
///   h~(ytil) = t_lin ytil - left * n(sampled_i ytil; theta).
struct ReducedConstraintFamily {
    std::string name;
    int family_index = 0;
    int target_block = 0;
    std::vector<int> input_blocks;
    std::vector<int> points;
    Mat t_lin;                 // m x k, projected linear part
    Mat left;                  // m x q, precomputed DEIM factor
    std::vector<Mat> sampled;  // per input block: q x k sampled basis rows
    Mat basis_x;               // N x q nonlinear-term basis (in-memory only)
    double cond = 0.0;

    int m() const { return static_cast<int>(t_lin.rows()); }
    int q() const { return static_cast<int>(left.cols()); }
};

/// All families of a system in reduced form. Evaluation cost is
/// O(q k) per family, independent of the cell count.
class ReducedConstraints {
public:
    std::shared_ptr<const ObservableSystem> system;
    std::vector<ReducedConstraintFamily> families;
    int k = 0;

    bool empty() const { return families.empty(); }
    int m_total() const;

    /// Residual h~ (and Jacobian d h~ / d ytil when jac is non-null).
    /// Returns the constraint magnitude scale (>= 1) used to make the
    /// feasibility tolerance relative. Pure and reentrant.
    double eval(const Vec& ytil, const Vec& theta, Vec& h, Mat* jac) const;
};

struct DeimOptions {
    /// Truncation of the nonlinear-term basis; default keeps every mode
    /// up to numerical rank.
    Truncation truncation = Truncation::all();
};

/// Build every family's interpolant from the training snapshots: the
/// nonlinear-term snapshot matrix feeds a POD basis X, points are
/// selected greedily, and the projection uses the target block's basis
/// (per-block mode) or X itself (joint mode).
ReducedConstraints build_reduced_constraints(std::shared_ptr<const ObservableSystem> system,
                                             const BlockBasis& basis, const Mat& snapshots,
                                             const Mat& thetas, const DeimOptions& options = {});

}  // namespace romfv
