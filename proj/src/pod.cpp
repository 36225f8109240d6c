#include "romfv/pod.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace romfv {

double PodBasis::tail_energy(int k_kept) const {
    double sum = 0.0;
    for (Eigen::Index i = k_kept; i < sigma.size(); ++i) sum += sigma[i] * sigma[i];
    return sum;
}

double PodBasis::total_energy() const { return tail_energy(0); }

PodBasis compute_pod(const Mat& snapshots, const Truncation& truncation, std::string source) {
    if (snapshots.size() == 0) fail("pod: empty snapshot matrix");
    if (!snapshots.allFinite()) fail("pod: non-finite snapshot entries");

    Eigen::JacobiSVD<Mat> svd(snapshots, Eigen::ComputeThinU);
    PodBasis basis;
    basis.sigma = svd.singularValues();
    basis.source = std::move(source);

    const double sigma0 = basis.sigma.size() ? basis.sigma[0] : 0.0;
    basis.numerical_rank = 0;
    for (Eigen::Index i = 0; i < basis.sigma.size(); ++i)
        if (basis.sigma[i] > 1e-12 * sigma0) ++basis.numerical_rank;

    int k = 0;
    if (truncation.rule == Truncation::Rule::fixed) {
        const int requested = truncation.k < 0 ? static_cast<int>(basis.sigma.size()) : truncation.k;
        k = std::min(requested, basis.numerical_rank);
        basis.clamped = requested > k;
    } else {
        if (!(truncation.fraction > 0.0) || truncation.fraction > 1.0)
            fail("pod: energy fraction must lie in (0, 1]");
        const double total = basis.tail_energy(0);
        double acc = 0.0;
        while (k < basis.numerical_rank) {
            acc += basis.sigma[k] * basis.sigma[k];
            ++k;
            if (acc >= truncation.fraction * total) break;
        }
    }
    basis.k = k;
    basis.phi = svd.matrixU().leftCols(k);

    // Deterministic sign: largest-magnitude entry positive, first wins ties.
    for (int j = 0; j < k; ++j) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < basis.phi.rows(); ++i) {
            const double a = std::abs(basis.phi(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (basis.phi(arg, j) < 0.0) basis.phi.col(j) = -basis.phi.col(j);
    }
    return basis;
}

double projection_error(const Mat& snapshots, const Mat& phi) {
    if (phi.rows() != snapshots.rows()) fail("pod: projection dimension mismatch");
    if (phi.cols() == 0) return snapshots.squaredNorm();
    const Mat residual = snapshots - phi * (phi.transpose() * snapshots);
    return residual.squaredNorm();
}

BlockBasis BlockBasis::per_block(std::vector<PodBasis> blocks) {
    if (blocks.empty()) fail("block basis: no blocks");
    const Eigen::Index n = blocks.front().phi.rows();
    int total_k = 0;
    for (const auto& b : blocks) {
        if (b.phi.rows() != n) fail("block basis: inconsistent row counts across blocks");
        total_k += b.k;
    }
    BlockBasis out;
    out.joint_ = false;
    out.n_blocks_ = static_cast<int>(blocks.size());
    out.full_ = Mat::Zero(n * out.n_blocks_, total_k);
    int offset = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        out.block_ks_.push_back(blocks[b].k);
        out.offsets_.push_back(offset);
        out.full_.block(static_cast<Eigen::Index>(b) * n, offset, n, blocks[b].k) = blocks[b].phi;
        offset += blocks[b].k;
    }
    out.pods_ = std::move(blocks);
    return out;
}

BlockBasis BlockBasis::joint(PodBasis basis, int n_blocks) {
    if (n_blocks < 1) fail("block basis: need at least one block");
    if (basis.phi.rows() % n_blocks != 0) fail("block basis: stacked rows not divisible by block count");
    BlockBasis out;
    out.joint_ = true;
    out.n_blocks_ = n_blocks;
    out.full_ = basis.phi;
    out.block_ks_.assign(n_blocks, basis.k);
    out.offsets_.assign(n_blocks, 0);
    out.pods_.push_back(std::move(basis));
    return out;
}

BlockBasis BlockBasis::from_parts(Mat full, std::vector<int> block_ks, bool joint_mode, int n_blocks) {
    BlockBasis out;
    out.full_ = std::move(full);
    out.block_ks_ = std::move(block_ks);
    out.joint_ = joint_mode;
    out.n_blocks_ = n_blocks;
    if (joint_mode) {
        out.offsets_.assign(n_blocks, 0);
    } else {
        int offset = 0;
        for (int kb : out.block_ks_) {
            out.offsets_.push_back(offset);
            offset += kb;
        }
        if (offset != out.full_.cols()) fail("block basis: block widths do not sum to k");
    }
    return out;
}

int BlockBasis::block_offset(int b) const {
    if (b < 0 || b >= n_blocks_) fail("block basis: block index out of range");
    return offsets_[b];
}

int BlockBasis::block_k(int b) const {
    if (b < 0 || b >= n_blocks_) fail("block basis: block index out of range");
    return block_ks_[b];
}

Mat BlockBasis::sampled_rows(int b, const std::vector<int>& rows) const {
    if (b < 0 || b >= n_blocks_) fail("block basis: block index out of range");
    const int n = rows_per_block();
    Mat out(static_cast<Eigen::Index>(rows.size()), full_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= n) fail("block basis: sampled row out of range");
        out.row(static_cast<Eigen::Index>(i)) = full_.row(static_cast<Eigen::Index>(b) * n + rows[i]);
    }
    return out;
}

Vec BlockBasis::reconstruct(const Vec& ytil) const {
    if (ytil.size() != full_.cols()) fail("block basis: reconstruct dimension mismatch");
    return full_ * ytil;
}

Vec BlockBasis::project(const Vec& y) const {
    if (y.size() != full_.rows()) fail("block basis: project dimension mismatch");
    return full_.transpose() * y;
}

BlockBasis assemble_block_basis(std::vector<PodBasis> per_observable) {
    return BlockBasis::per_block(std::move(per_observable));
}

}  // namespace romfv
