#pragma once

#include <Eigen/SparseCore>
#include <string>
#include <vector>

#include "romfv/types.hpp"

namespace romfv {

enum class OperatorKind { diffusion, grad_x, grad_y, custom };

std::string to_string(OperatorKind kind);

/// Sparse linear operator with rows indexed by cells. Assembled from
/// triplets; duplicate (row, col) entries are summed during compression
/// and the assembly order is deterministic, so repeated builds are
/// bit-identical.
class SparseOperator {
public:
    using Triplet = Eigen::Triplet<double>;

    SparseOperator() = default;
    SparseOperator(int n_rows, int n_cols, const std::vector<Triplet>& triplets,
                   OperatorKind kind = OperatorKind::custom);

    int n_rows() const { return static_cast<int>(mat_.rows()); }
    int n_cols() const { return static_cast<int>(mat_.cols()); }
    int n_nonzeros() const { return static_cast<int>(mat_.nonZeros()); }
    OperatorKind kind() const { return kind_; }

    const Eigen::SparseMatrix<double>& matrix() const { return mat_; }

    /// Exact sparse matrix-vector product. Throws on dimension mismatch.
    Vec apply(const Vec& x) const;

    /// Returns a copy with every entry multiplied by s.
    SparseOperator scaled(double s) const;

    Mat to_dense() const { return Mat(mat_); }

    /// Entries sorted by (row, col).
    std::vector<Triplet> entries() const;

    /// Text format: header `sparse <rows> <cols> <nnz>`, then one
    /// `row col value` line per entry, full round-trip precision.
    void save(const std::string& path) const;
    static SparseOperator load(const std::string& path);

private:
    Eigen::SparseMatrix<double> mat_;
    OperatorKind kind_ = OperatorKind::custom;
};

}  // namespace romfv
