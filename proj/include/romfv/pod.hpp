#pragma once

#include <string>
#include <vector>

#include "romfv/types.hpp"

namespace romfv {

struct Truncation {
    enum class Rule { fixed, energy };
    Rule rule = Rule::fixed;
    int k = -1;  // fixed rule; -1 keeps every (numerically nonzero) mode
    double fraction = 0.9999;

    static Truncation all() { return {}; }
    static Truncation fixed_k(int k) { return {Rule::fixed, k, 0.0}; }
    static Truncation energy(double fraction) { return {Rule::energy, -1, fraction}; }
};

/// Truncated left singular vectors of a snapshot block. sigma holds the
/// full spectrum (descending); phi the first k vectors. The largest-
/// magnitude entry of each vector is made positive so bases reproduce
/// across runs and platforms.
struct PodBasis {
    Mat phi;    // rows x k, orthonormal columns
    Vec sigma;  // all singular values, descending
    int k = 0;
    int numerical_rank = 0;
    bool clamped = false;  // requested more modes than the numerical rank
    std::string source;

    /// sum of sigma_i^2 for i > k (zero-based count k).
    double tail_energy(int k_kept) const;
    double total_energy() const;
};

/// Economy SVD of the block with the requested truncation. The fixed
/// rule clamps k to the numerical rank (sigma_i > 1e-12 sigma_1); the
/// energy rule keeps the smallest k whose cumulative energy reaches the
/// fraction.
PodBasis compute_pod(const Mat& snapshots, const Truncation& truncation, std::string source = {});

/// sum_j || u_j - Phi Phi^T u_j ||_2^2, evaluated directly.
double projection_error(const Mat& snapshots, const Mat& phi);

/// Trial basis over stacked observables. Per-block construction places
/// each observable's basis on its own block rows (block-diagonal
/// support); the joint construction uses one basis computed from the
/// stacked snapshots.
class BlockBasis {
public:
    BlockBasis() = default;

    static BlockBasis per_block(std::vector<PodBasis> blocks);
    static BlockBasis joint(PodBasis basis, int n_blocks);
    /// Rebuild from persisted parts.
    static BlockBasis from_parts(Mat full, std::vector<int> block_ks, bool joint_mode, int n_blocks);

    bool is_joint() const { return joint_; }
    int n_blocks() const { return n_blocks_; }
    int rows_per_block() const { return static_cast<int>(full_.rows()) / n_blocks_; }
    int k() const { return static_cast<int>(full_.cols()); }
    /// Reduced-coordinate offset/count of block b (per-block mode; in
    /// joint mode every block spans all k coordinates).
    int block_offset(int b) const;
    int block_k(int b) const;
    const std::vector<int>& block_ks() const { return block_ks_; }

    const Mat& full() const { return full_; }
    const std::vector<PodBasis>& pod_blocks() const { return pods_; }

    /// Rows {b*N + r : r in rows} of the stacked basis, full k width.
    Mat sampled_rows(int b, const std::vector<int>& rows) const;

    Vec reconstruct(const Vec& ytil) const;
    Vec project(const Vec& y) const;

private:
    Mat full_;
    std::vector<int> block_ks_;
    std::vector<int> offsets_;
    std::vector<PodBasis> pods_;  // empty when loaded from disk
    bool joint_ = false;
    int n_blocks_ = 0;
};

/// Block-diagonal assembly of per-observable bases (all blocks must
/// share the same row count).
BlockBasis assemble_block_basis(std::vector<PodBasis> per_observable);

}  // namespace romfv
