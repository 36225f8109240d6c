#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "romfv/pod.hpp"
#include "romfv/rng.hpp"

using namespace romfv;
using namespace romfv::test;

TEST_CASE("pod basics: orthonormality, ordering, rank clamping") {
    Rng rng(21);
    const Mat u = random_matrix(rng, 40, 8);
    const PodBasis basis = compute_pod(u, Truncation::all());
    CHECK(basis.k == 8);
    CHECK((basis.phi.transpose() * basis.phi - Mat::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-12);
    for (int i = 1; i < basis.sigma.size(); ++i) CHECK(basis.sigma[i] <= basis.sigma[i - 1]);
    CHECK(basis.sigma.minCoeff() >= 0.0);

    // One column repeated: numerical rank 1.
    Mat repeated(30, 5);
    const Vec col = random_vector(rng, 30);
    for (int j = 0; j < 5; ++j) repeated.col(j) = col;
    const PodBasis r1 = compute_pod(repeated, Truncation::all());
    CHECK(r1.numerical_rank == 1);
    CHECK(r1.k == 1);
    CHECK(r1.clamped);
    CHECK(r1.sigma[1] <= 1e-12 * r1.sigma[0]);

    const PodBasis fixed = compute_pod(repeated, Truncation::fixed_k(3));
    CHECK(fixed.k == 1);  // clamped to rank
    CHECK(fixed.clamped);

    CHECK_THROWS_AS(compute_pod(Mat(), Truncation::all()), Error);
    Mat bad(2, 2);
    bad << 1.0, 2.0, std::nan(""), 0.0;
    CHECK_THROWS_AS(compute_pod(bad, Truncation::all()), Error);
}

TEST_CASE("pod sign convention makes bases reproducible") {
    Rng rng(22);
    const Mat u = random_matrix(rng, 25, 6);
    const PodBasis a = compute_pod(u, Truncation::all());
    const PodBasis b = compute_pod(u, Truncation::all());
    CHECK((a.phi - b.phi).cwiseAbs().maxCoeff() == 0.0);
    for (int j = 0; j < a.k; ++j) {
        Eigen::Index arg;
        a.phi.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(a.phi(arg, j) > 0.0);
    }
}

TEST_CASE("orthogonal input with k = cols reproduces the span exactly") {
    Rng rng(23);
    const Mat q = random_orthonormal(rng, 30, 5);
    const PodBasis basis = compute_pod(q, Truncation::all());
    CHECK(basis.k == 5);
    CHECK(projection_error(q, basis.phi) <= 1e-20);
}

TEST_CASE("energy truncation picks the smallest sufficient k") {
    Rng rng(24);
    const Mat q = random_orthonormal(rng, 50, 4);
    Vec scales(4);
    scales << 10.0, 5.0, 1.0, 0.1;
    const Mat u = q * scales.asDiagonal() * random_orthonormal(rng, 4, 4).transpose();
    const double total = 100.0 + 25.0 + 1.0 + 0.01;
    const PodBasis b1 = compute_pod(u, Truncation::energy((100.0 + 25.0) / total + 1e-9));
    CHECK(b1.k == 3);
    const PodBasis b2 = compute_pod(u, Truncation::energy((100.0 + 25.0) / total - 1e-9));
    CHECK(b2.k == 2);
    const PodBasis b3 = compute_pod(u, Truncation::energy(1.0));
    CHECK(b3.k == b3.numerical_rank);
    CHECK_THROWS_AS(compute_pod(u, Truncation::energy(0.0)), Error);
}

TEST_CASE("projection-error identity against the singular-value tail") {
    Rng rng(25);
    // k = 0: the error is the full Frobenius energy.
    const Mat u0 = random_matrix(rng, 20, 6);
    CHECK(projection_error(u0, Mat(20, 0)) == doctest::Approx(u0.squaredNorm()).epsilon(1e-14));

    // Random 50 x 8 at k = 3: direct sum equals the sigma tail.
    const Mat u = random_matrix(rng, 50, 8);
    const PodBasis basis = compute_pod(u, Truncation::fixed_k(3));
    const double direct = projection_error(u, basis.phi);
    CHECK(direct == doctest::Approx(basis.tail_energy(3)).epsilon(1e-8));

    // k = rank: zero error (relative to the total energy).
    const PodBasis full = compute_pod(u, Truncation::all());
    CHECK(projection_error(u, full.phi) <= 1e-10 * u.squaredNorm());
}

TEST_CASE("method of snapshots agrees with the direct SVD") {
    Rng rng(26);
    const Mat u = random_matrix(rng, 60, 10);
    const PodBasis direct = compute_pod(u, Truncation::all());

    // Oracle: eigendecomposition of the Gram matrix U^T U.
    const Mat gram = u.transpose() * u;
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
    Mat phi_sigma(60, 10);  // columns phi_i sigma_i = U w_i
    for (int j = 0; j < 10; ++j) {
        const Vec w = eig.eigenvectors().col(9 - j);  // descending
        Vec col = u * w;
        Eigen::Index arg;
        col.cwiseAbs().maxCoeff(&arg);
        if (col(arg) < 0.0) col = -col;
        phi_sigma.col(j) = col;
    }
    const Mat direct_phi_sigma = direct.phi * direct.sigma.head(direct.k).asDiagonal();
    CHECK((phi_sigma - direct_phi_sigma).cwiseAbs().maxCoeff() <=
          1e-10 * direct.sigma[0]);
}

TEST_CASE("pod projection beats random bases of equal rank") {
    Rng rng(27);
    const Mat u = random_matrix(rng, 40, 10);
    const PodBasis basis = compute_pod(u, Truncation::fixed_k(4));
    const double pod_err = projection_error(u, basis.phi);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat q = random_orthonormal(rng, 40, 4);
        CHECK(pod_err <= projection_error(u, q) + 1e-12);
    }
}

TEST_CASE("block basis assembly: disjoint supports and offsets") {
    Rng rng(28);
    std::vector<PodBasis> blocks;
    blocks.push_back(compute_pod(random_matrix(rng, 4, 1), Truncation::all(), "block0"));
    blocks.push_back(compute_pod(random_matrix(rng, 4, 1), Truncation::all(), "block1"));
    const BlockBasis basis = assemble_block_basis(std::move(blocks));
    CHECK(basis.k() == 2);
    CHECK(basis.full().rows() == 8);
    CHECK(basis.block_offset(0) == 0);
    CHECK(basis.block_offset(1) == 1);
    // Disjoint support.
    CHECK(basis.full().block(4, 0, 4, 1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(basis.full().block(0, 1, 4, 1).cwiseAbs().maxCoeff() == 0.0);

    const Vec y = random_vector(rng, 8);
    const Vec ytil = basis.project(y);
    CHECK((basis.reconstruct(ytil) - basis.full() * ytil).cwiseAbs().maxCoeff() == 0.0);

    const Mat rows = basis.sampled_rows(1, {0, 2});
    CHECK(rows.rows() == 2);
    CHECK(rows.cols() == 2);
    CHECK((rows.row(0).transpose() - basis.full().row(4).transpose()).cwiseAbs().maxCoeff() == 0.0);

    // Mismatched row counts are rejected.
    std::vector<PodBasis> badblocks;
    badblocks.push_back(compute_pod(random_matrix(rng, 4, 1), Truncation::all()));
    badblocks.push_back(compute_pod(random_matrix(rng, 5, 1), Truncation::all()));
    CHECK_THROWS_AS(assemble_block_basis(std::move(badblocks)), Error);
}

TEST_CASE("joint basis spans all coordinates per block") {
    Rng rng(29);
    const PodBasis joint = compute_pod(random_matrix(rng, 12, 3), Truncation::all(), "joint");
    const BlockBasis basis = BlockBasis::joint(joint, 2);
    CHECK(basis.is_joint());
    CHECK(basis.rows_per_block() == 6);
    CHECK(basis.block_k(0) == basis.k());
    CHECK(basis.block_offset(1) == 0);
}
