#include "romfv/fvm.hpp"

#include <cmath>

namespace romfv {

SparseOperator assemble_diffusion(const MeshGeometry& geom, const Vec& gamma) {
    const Mesh& m = geom.mesh;
    const int nc = m.n_cells();
    if (nc == 0) fail("assemble_diffusion: geometry is empty");
    if (gamma.size() != nc) fail("assemble_diffusion: gamma has wrong length");
    if (!(gamma.minCoeff() > 0.0)) fail("assemble_diffusion: gamma must be strictly positive");

    std::vector<SparseOperator::Triplet> trip;
    trip.reserve(static_cast<std::size_t>(nc) * 16);

    for (int f = 0; f < m.n_faces(); ++f) {
        const int c0 = m.face_cells[f][0];
        const int c1 = m.face_cells[f][1];
        if (c1 == kNoCell) continue;

        const double w = geom.face_weights[f];
        const double gamma_f = w * gamma[c0] + (1.0 - w) * gamma[c1];
        const double alpha = gamma_f * geom.face_areas[f] / geom.delta[f];
        // Face area cancels the face length in the tangential quotient.
        const double tc = gamma_f * geom.tangent_dot[f] / geom.delta[f];

        trip.emplace_back(c0, c1, alpha);
        trip.emplace_back(c0, c0, -alpha);
        trip.emplace_back(c1, c0, alpha);
        trip.emplace_back(c1, c1, -alpha);

        if (tc != 0.0) {
            const int v_lo = m.faces[f][0];
            const int v_hi = m.faces[f][1];
            // Tangential gradient ~ (u(v_hi) - u(v_lo)) / |t|, node values
            // interpolated from the adjacent cells.
            const auto& hi_cells = m.vertex_cells[v_hi];
            const auto& hi_w = geom.node_weights[v_hi];
            for (std::size_t i = 0; i < hi_cells.size(); ++i) {
                trip.emplace_back(c0, hi_cells[i], -tc * hi_w[i]);
                trip.emplace_back(c1, hi_cells[i], tc * hi_w[i]);
            }
            const auto& lo_cells = m.vertex_cells[v_lo];
            const auto& lo_w = geom.node_weights[v_lo];
            for (std::size_t i = 0; i < lo_cells.size(); ++i) {
                trip.emplace_back(c0, lo_cells[i], tc * lo_w[i]);
                trip.emplace_back(c1, lo_cells[i], -tc * lo_w[i]);
            }
        }
    }
    return SparseOperator(nc, nc, trip, OperatorKind::diffusion);
}

SparseOperator assemble_gradient(const MeshGeometry& geom, Axis axis) {
    const Mesh& m = geom.mesh;
    const int nc = m.n_cells();
    if (nc == 0) fail("assemble_gradient: geometry is empty");

    std::vector<SparseOperator::Triplet> trip;
    trip.reserve(static_cast<std::size_t>(nc) * 6);

    for (int f = 0; f < m.n_faces(); ++f) {
        const int c0 = m.face_cells[f][0];
        const int c1 = m.face_cells[f][1];
        if (c1 == kNoCell) continue;
        const double n_axis = (axis == Axis::x) ? geom.face_normals[f].x() : geom.face_normals[f].y();
        const double coef = n_axis * geom.face_areas[f];
        const double w = geom.face_weights[f];
        trip.emplace_back(c0, c0, coef * w);
        trip.emplace_back(c0, c1, coef * (1.0 - w));
        trip.emplace_back(c1, c0, -coef * w);
        trip.emplace_back(c1, c1, -coef * (1.0 - w));
    }
    return SparseOperator(nc, nc, trip, axis == Axis::x ? OperatorKind::grad_x : OperatorKind::grad_y);
}

BlockOperator::BlockOperator(int block_rows, int block_cols, int n)
    : block_rows_(block_rows), block_cols_(block_cols), n_(n), blocks_(block_rows * block_cols) {
    if (block_rows < 1 || block_cols < 1 || n < 1) fail("block operator: invalid shape");
}

int BlockOperator::index(int i, int j) const {
    if (i < 0 || i >= block_rows_ || j < 0 || j >= block_cols_) fail("block operator: block index out of range");
    return i * block_cols_ + j;
}

void BlockOperator::set(int i, int j, std::shared_ptr<const SparseOperator> op) {
    if (!op) fail("block operator: null operator");
    if (op->n_rows() != n_ || op->n_cols() != n_) fail("block operator: block dimensions do not conform");
    blocks_[index(i, j)] = {BlockKind::op, std::move(op)};
}

void BlockOperator::set(int i, int j, SparseOperator op) {
    set(i, j, std::make_shared<const SparseOperator>(std::move(op)));
}

void BlockOperator::set_identity(int i, int j, bool negated) {
    blocks_[index(i, j)] = {negated ? BlockKind::neg_identity : BlockKind::identity, nullptr};
}

const SparseOperator& BlockOperator::block_op(int i, int j) const {
    const Block& b = blocks_[index(i, j)];
    if (b.kind != BlockKind::op) fail("block operator: block has no sparse operator");
    return *b.op;
}

Vec BlockOperator::apply(const Vec& y) const {
    if (y.size() != cols())
        fail("block operator: apply dimension mismatch (expected " + std::to_string(cols()) + ", got " +
             std::to_string(y.size()) + ")");
    Vec out = Vec::Zero(rows());
    for (int i = 0; i < block_rows_; ++i) {
        for (int j = 0; j < block_cols_; ++j) {
            const Block& b = blocks_[i * block_cols_ + j];
            if (b.kind == BlockKind::empty) continue;
            const auto yj = y.segment(static_cast<Eigen::Index>(j) * n_, n_);
            auto out_i = out.segment(static_cast<Eigen::Index>(i) * n_, n_);
            switch (b.kind) {
                case BlockKind::identity: out_i += yj; break;
                case BlockKind::neg_identity: out_i -= yj; break;
                case BlockKind::op: out_i += b.op->matrix() * yj; break;
                case BlockKind::empty: break;
            }
        }
    }
    return out;
}

Mat BlockOperator::apply_matrix(const Mat& y) const {
    Mat out(rows(), y.cols());
    for (Eigen::Index c = 0; c < y.cols(); ++c) out.col(c) = apply(y.col(c));
    return out;
}

Vec recover_rhs(const BlockOperator& block_operator, const Vec& snapshot) {
    return block_operator.apply(snapshot);
}

BlockOperator make_canonical_operator(const MeshGeometry& geom) {
    BlockOperator a(1, 2, geom.n_cells());
    a.set(0, 0, assemble_diffusion(geom, Vec::Ones(geom.n_cells())).scaled(-1.0));
    a.set_identity(0, 1);
    return a;
}

BlockOperator make_euler_operator(const MeshGeometry& geom) {
    auto gx = std::make_shared<const SparseOperator>(assemble_gradient(geom, Axis::x));
    auto gy = std::make_shared<const SparseOperator>(assemble_gradient(geom, Axis::y));
    BlockOperator a(4, 8, geom.n_cells());
    a.set(0, 0, gx);
    a.set(0, 1, gy);
    a.set(1, 2, gy);
    a.set(1, 3, gx);
    a.set(1, 4, gx);
    a.set(2, 2, gx);
    a.set(2, 3, gy);
    a.set(2, 5, gy);
    a.set(3, 6, gx);
    a.set(3, 7, gy);
    return a;
}

}  // namespace romfv
