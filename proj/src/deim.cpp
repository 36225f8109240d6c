#include "romfv/deim.hpp"

#include <Eigen/LU>
#include <cmath>

namespace romfv {

namespace {

Eigen::Index argmax_abs(const Vec& v) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v[i]);
        if (a > best) {
            best = a;
            arg = i;
        }
    }
    return arg;
}

Mat gather_rows(const Mat& x, const std::vector<int>& rows) {
    Mat out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= x.rows()) fail("deim: point index out of range");
        out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    }
    return out;
}

double cond1(const Mat& a, const Eigen::PartialPivLU<Mat>& lu) {
    const Mat inv = lu.solve(Mat::Identity(a.rows(), a.cols()));
    return a.cwiseAbs().colwise().sum().maxCoeff() * inv.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

std::vector<int> deim_select_points(const Mat& x_basis) {
    const Eigen::Index q = x_basis.cols();
    if (q == 0) fail("deim: empty basis");
    if (x_basis.rows() < q) fail("deim: basis has fewer rows than columns");

    std::vector<int> indices;
    indices.reserve(q);
    indices.push_back(static_cast<int>(argmax_abs(x_basis.col(0))));

    for (Eigen::Index j = 1; j < q; ++j) {
        const Mat u = x_basis.leftCols(j);
        const Mat u_at = gather_rows(u, indices);
        const Vec rhs = gather_rows(x_basis.col(j), indices);
        Eigen::PartialPivLU<Mat> lu(u_at);
        const Vec c = lu.solve(rhs);
        if ((u_at * c - rhs).norm() > 1e-8 * (rhs.norm() + 1.0))
            fail("deim: singular sampled system while selecting point " + std::to_string(j) +
                 " (degenerate basis)");
        const Vec residual = x_basis.col(j) - u * c;
        if (residual.cwiseAbs().maxCoeff() <= 1e-13 * x_basis.cwiseAbs().maxCoeff())
            fail("deim: column " + std::to_string(j) +
                 " is interpolated exactly by the previous ones (degenerate basis)");
        const int pick = static_cast<int>(argmax_abs(residual));
        for (int prev : indices)
            if (prev == pick)
                fail("deim: duplicate interpolation point " + std::to_string(pick) + " (degenerate basis)");
        indices.push_back(pick);
    }
    return indices;
}

Vec deim_reconstruct(const Mat& x_basis, const std::vector<int>& indices, const Vec& full) {
    if (full.size() != x_basis.rows()) fail("deim: reconstruct dimension mismatch");
    const Mat x_at = gather_rows(x_basis, indices);
    const Vec sampled = gather_rows(full, indices);
    Eigen::PartialPivLU<Mat> lu(x_at);
    return x_basis * lu.solve(sampled);
}

DeimInterpolant build_deim_interpolant(const Mat& x_basis, const std::vector<int>& indices,
                                       const Mat& target_basis) {
    if (static_cast<Eigen::Index>(indices.size()) != x_basis.cols())
        fail("deim: index count must equal the basis width");
    if (target_basis.rows() != x_basis.rows()) fail("deim: target basis row mismatch");

    const Mat x_at = gather_rows(x_basis, indices);  // P^T X
    Eigen::PartialPivLU<Mat> lu(x_at);
    const Mat check = x_at * lu.solve(Mat::Identity(x_at.rows(), x_at.cols()));
    if (!check.allFinite() || (check - Mat::Identity(x_at.rows(), x_at.cols())).cwiseAbs().maxCoeff() > 1e-6)
        fail("deim: sampled basis P^T X is singular");

    DeimInterpolant out;
    out.indices = indices;
    out.cond = cond1(x_at, lu);
    // left = (Phi_t^T X) (P^T X)^{-1}, via (P^T X)^T left^T = (Phi_t^T X)^T.
    const Mat t = target_basis.transpose() * x_basis;
    Eigen::PartialPivLU<Mat> lu_t(x_at.transpose());
    out.left_factor = lu_t.solve(t.transpose()).transpose();
    return out;
}

int ReducedConstraints::m_total() const {
    int m = 0;
    for (const auto& f : families) m += f.m();
    return m;
}

double ReducedConstraints::eval(const Vec& ytil, const Vec& theta, Vec& h, Mat* jac) const {
    if (ytil.size() != k) fail("reduced constraints: coordinate dimension mismatch");
    h.resize(m_total());
    if (jac) jac->resize(m_total(), k);
    double scale = 1.0;

    int offset = 0;
    for (const auto& fam : families) {
        const auto& nonlinear = system->families()[fam.family_index].nonlinear;
        std::vector<Eigen::ArrayXd> inputs;
        inputs.reserve(fam.input_blocks.size());
        for (const Mat& s : fam.sampled) inputs.push_back((s * ytil).array());

        Eigen::ArrayXd value;
        std::vector<Eigen::ArrayXd> partials;
        nonlinear(inputs, theta, value, jac ? &partials : nullptr);

        const Vec lin = fam.t_lin * ytil;
        const Vec nl = fam.left * value.matrix();
        h.segment(offset, fam.m()) = lin - nl;
        scale = std::max({scale, lin.cwiseAbs().maxCoeff(), nl.cwiseAbs().maxCoeff()});

        if (jac) {
            Mat block = fam.t_lin;
            for (std::size_t i = 0; i < fam.sampled.size(); ++i) {
                const Mat scaled_left = fam.left * partials[i].matrix().asDiagonal();
                block.noalias() -= scaled_left * fam.sampled[i];
            }
            jac->middleRows(offset, fam.m()) = block;
        }
        offset += fam.m();
    }
    return scale;
}

ReducedConstraints build_reduced_constraints(std::shared_ptr<const ObservableSystem> system,
                                             const BlockBasis& basis, const Mat& snapshots,
                                             const Mat& thetas, const DeimOptions& options) {
    if (!system) fail("reduced constraints: null system");
    const int n = basis.rows_per_block();
    const int n_blocks = basis.n_blocks();
    if (snapshots.rows() != static_cast<Eigen::Index>(n) * n_blocks)
        fail("reduced constraints: snapshot rows do not match the basis");
    const Eigen::Index m_snap = snapshots.cols();
    if (thetas.rows() != m_snap) fail("reduced constraints: theta count mismatch");

    ReducedConstraints out;
    out.system = system;
    out.k = basis.k();

    const auto& fams = system->families();
    for (std::size_t fi = 0; fi < fams.size(); ++fi) {
        const auto& descriptor = fams[fi];

        // Snapshots of the nonlinear term (equal to the target block for
        // lifted solutions, recomputed here from the inputs).
        Mat nl(n, m_snap);
        for (Eigen::Index j = 0; j < m_snap; ++j) {
            std::vector<Eigen::ArrayXd> inputs;
            inputs.reserve(descriptor.input_blocks.size());
            for (int b : descriptor.input_blocks)
                inputs.push_back(snapshots.col(j).segment(static_cast<Eigen::Index>(b) * n, n).array());
            Eigen::ArrayXd value;
            descriptor.nonlinear(inputs, thetas.row(j).transpose(), value, nullptr);
            nl.col(j) = value.matrix();
        }

        const PodBasis xb = compute_pod(nl, options.truncation, "deim:" + descriptor.name);
        if (xb.k == 0) fail("reduced constraints: nonlinear-term basis for '" + descriptor.name + "' is empty");

        ReducedConstraintFamily fam;
        fam.name = descriptor.name;
        fam.family_index = static_cast<int>(fi);
        fam.target_block = descriptor.target_block;
        fam.input_blocks = descriptor.input_blocks;
        fam.basis_x = xb.phi;
        fam.points = deim_select_points(fam.basis_x);

        // Projection basis: the target block's own basis (per-block) or
        // the nonlinear basis itself (joint).
        Mat w;
        if (basis.is_joint()) {
            w = fam.basis_x;
        } else {
            w = basis.full().block(static_cast<Eigen::Index>(descriptor.target_block) * n,
                                   basis.block_offset(descriptor.target_block), n,
                                   basis.block_k(descriptor.target_block));
        }
        const DeimInterpolant interp = build_deim_interpolant(fam.basis_x, fam.points, w);
        fam.left = interp.left_factor;
        fam.cond = interp.cond;
        fam.t_lin = w.transpose() * basis.full().middleRows(static_cast<Eigen::Index>(descriptor.target_block) * n, n);
        for (int b : descriptor.input_blocks) fam.sampled.push_back(basis.sampled_rows(b, fam.points));

        out.families.push_back(std::move(fam));
    }
    return out;
}

}  // namespace romfv
