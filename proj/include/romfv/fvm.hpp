#pragma once

#include <memory>
#include <vector>

#include "romfv/mesh.hpp"
#include "romfv/sparse.hpp"
#include "romfv/types.hpp"

namespace romfv {

enum class Axis { x, y };

/// Discrete diffusion operator: row c approximates the surface integral
/// of gamma grad(u) . n over the faces of cell c (integral form, not
/// divided by the cell area). Only interior faces contribute; boundary
/// fluxes are left for the recovered right-hand side. The face flux is
/// the two-point normal difference plus the tangential correction
/// distributed through the inverse-distance node weights.
SparseOperator assemble_diffusion(const MeshGeometry& geom, const Vec& gamma);

/// Discrete directional gradient in integral form: row c approximates
/// the surface integral of y n_axis over the faces of cell c, with face
/// values interpolated by the inverse-distance face weights. Boundary
/// faces contribute nothing.
SparseOperator assemble_gradient(const MeshGeometry& geom, Axis axis);

/// Block matrix over stacked observable vectors. Each block is n x n
/// (n = cell count) and is either empty, a shared sparse operator, or a
/// (negated) identity marker.
class BlockOperator {
public:
    enum class BlockKind { empty, op, identity, neg_identity };

    BlockOperator(int block_rows, int block_cols, int n);

    void set(int i, int j, std::shared_ptr<const SparseOperator> op);
    void set(int i, int j, SparseOperator op);
    void set_identity(int i, int j, bool negated = false);

    int block_rows() const { return block_rows_; }
    int block_cols() const { return block_cols_; }
    int n() const { return n_; }
    Eigen::Index rows() const { return static_cast<Eigen::Index>(block_rows_) * n_; }
    Eigen::Index cols() const { return static_cast<Eigen::Index>(block_cols_) * n_; }

    BlockKind kind(int i, int j) const { return blocks_[index(i, j)].kind; }
    const SparseOperator& block_op(int i, int j) const;

    /// Exact product with a stacked observable vector.
    Vec apply(const Vec& y) const;

    /// Column-wise product with a dense matrix (e.g. a trial basis).
    Mat apply_matrix(const Mat& y) const;

private:
    struct Block {
        BlockKind kind = BlockKind::empty;
        std::shared_ptr<const SparseOperator> op;
    };
    int index(int i, int j) const;

    int block_rows_, block_cols_, n_;
    std::vector<Block> blocks_;
};

/// f := A y for a training snapshot; the result absorbs boundary and
/// source terms by construction.
Vec recover_rhs(const BlockOperator& block_operator, const Vec& snapshot);

/// [-L  I] over [y1; y2] for the scalar diffusion-reaction system.
BlockOperator make_canonical_operator(const MeshGeometry& geom);

/// 4 x 8 gradient pattern of the steady compressible-flow system:
///   row 0: Gx y1 + Gy y2        (mass)
///   row 1: Gy y3 + Gx y4 + Gx y5 (x momentum)
///   row 2: Gx y3 + Gy y4 + Gy y6 (y momentum)
///   row 3: Gx y7 + Gy y8        (energy)
BlockOperator make_euler_operator(const MeshGeometry& geom);

}  // namespace romfv
