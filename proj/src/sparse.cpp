#include "romfv/sparse.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace romfv {

std::string to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::diffusion: return "diffusion";
        case OperatorKind::grad_x: return "grad_x";
        case OperatorKind::grad_y: return "grad_y";
        case OperatorKind::custom: return "custom";
    }
    return "custom";
}

SparseOperator::SparseOperator(int n_rows, int n_cols, const std::vector<Triplet>& triplets, OperatorKind kind)
    : kind_(kind) {
    if (n_rows < 0 || n_cols < 0) fail("sparse: negative dimensions");
    for (const auto& t : triplets) {
        if (t.row() < 0 || t.row() >= n_rows || t.col() < 0 || t.col() >= n_cols)
            fail("sparse: triplet index out of range (" + std::to_string(t.row()) + ", " + std::to_string(t.col()) + ")");
    }
    mat_.resize(n_rows, n_cols);
    mat_.setFromTriplets(triplets.begin(), triplets.end());
    mat_.makeCompressed();
}

Vec SparseOperator::apply(const Vec& x) const {
    if (x.size() != mat_.cols())
        fail("sparse: apply dimension mismatch: operator is " + std::to_string(mat_.rows()) + "x" +
             std::to_string(mat_.cols()) + ", vector has " + std::to_string(x.size()) + " entries");
    return mat_ * x;
}

SparseOperator SparseOperator::scaled(double s) const {
    SparseOperator out;
    out.mat_ = mat_ * s;
    out.mat_.makeCompressed();
    out.kind_ = kind_;
    return out;
}

std::vector<SparseOperator::Triplet> SparseOperator::entries() const {
    std::vector<Triplet> out;
    out.reserve(mat_.nonZeros());
    for (int k = 0; k < mat_.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(mat_, k); it; ++it)
            out.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    std::sort(out.begin(), out.end(), [](const Triplet& a, const Triplet& b) {
        return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
    });
    return out;
}

void SparseOperator::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail("sparse: cannot write '" + path + "'");
    out << "sparse " << n_rows() << " " << n_cols() << " " << n_nonzeros() << "\n";
    char buf[32];
    for (const auto& t : entries()) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.value());
        out << t.row() << " " << t.col() << " " << buf << "\n";
    }
    if (!out) fail("sparse: write failed for '" + path + "'");
}

SparseOperator SparseOperator::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("sparse: cannot open '" + path + "'");
    std::string tag;
    int rows = 0, cols = 0, nnz = 0;
    in >> tag >> rows >> cols >> nnz;
    if (!in || tag != "sparse") fail("sparse: bad header in '" + path + "'");
    std::vector<Triplet> triplets;
    triplets.reserve(nnz);
    for (int i = 0; i < nnz; ++i) {
        int r = 0, c = 0;
        double v = 0.0;
        in >> r >> c >> v;
        if (!in) fail("sparse: truncated entry list in '" + path + "'");
        triplets.emplace_back(r, c, v);
    }
    return SparseOperator(rows, cols, triplets);
}

}  // namespace romfv
