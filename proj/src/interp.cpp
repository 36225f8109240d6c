#include "romfv/interp.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

namespace romfv {

namespace {

Mat normalize_points(const Mat& points, const Mat& ranges) {
    if (points.cols() != ranges.rows()) fail("interp: point dimension does not match ranges");
    Mat out(points.rows(), points.cols());
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        const double lo = ranges(j, 0), hi = ranges(j, 1);
        if (!(lo < hi)) fail("interp: inverted range for coordinate " + std::to_string(j));
        out.col(j) = (points.col(j).array() - lo) / (hi - lo);
    }
    return out;
}

Vec normalize_query(const Vec& q, const Mat& ranges) {
    Mat row = normalize_points(q.transpose(), ranges);
    return row.row(0).transpose();
}

}  // namespace

std::vector<int> nearest_neighbors(const Mat& train_points, const Vec& query, int count, const Mat& ranges) {
    const int m = static_cast<int>(train_points.rows());
    if (count > m) fail("interp: requested " + std::to_string(count) + " neighbors from " + std::to_string(m) +
                        " training points");
    const Mat train_norm = normalize_points(train_points, ranges);
    const Vec query_norm = normalize_query(query, ranges);

    std::vector<std::pair<double, int>> order(m);
    for (int i = 0; i < m; ++i)
        order[i] = {(train_norm.row(i).transpose() - query_norm).squaredNorm(), i};
    std::sort(order.begin(), order.end());
    std::vector<int> out(count);
    for (int i = 0; i < count; ++i) out[i] = order[i].second;
    return out;
}

int LagrangeStencil::point_count(int degree) {
    if (degree == 1) return 3;
    if (degree == 2) return 6;
    fail("interp: only degrees 1 and 2 are configured");
}

Vec LagrangeStencil::basis_at(const Vec& x, int degree) {
    if (x.size() != 2) fail("interp: stencil is bivariate");
    if (degree == 1) {
        Vec a(3);
        a << 1.0, x[0], x[1];
        return a;
    }
    Vec a(6);
    a << 1.0, x[0], x[1], x[0] * x[1], x[0] * x[0], x[1] * x[1];
    return a;
}

LagrangeStencil::LagrangeStencil(const Mat& points, int degree) : degree_(degree) {
    const int rho = point_count(degree);
    if (points.rows() != rho || points.cols() != 2)
        fail("interp: stencil needs exactly " + std::to_string(rho) + " bivariate points");
    m_.resize(rho, rho);
    for (int i = 0; i < rho; ++i) m_.row(i) = basis_at(points.row(i).transpose(), degree).transpose();
    lu_.compute(m_);
    const Mat inv = lu_.solve(Mat::Identity(rho, rho));
    if (!inv.allFinite()) {
        cond_ = std::numeric_limits<double>::infinity();
    } else {
        cond_ = m_.cwiseAbs().colwise().sum().maxCoeff() * inv.cwiseAbs().colwise().sum().maxCoeff();
    }
}

double LagrangeStencil::eval(const Vec& values, const Vec& query) const {
    if (values.size() != m_.rows()) fail("interp: value count does not match the stencil");
    return basis_at(query, degree_).dot(lu_.solve(values));
}

Vec LagrangeStencil::eval_many(const Mat& values, const Vec& query) const {
    if (values.rows() != m_.rows()) fail("interp: value rows do not match the stencil");
    const Mat coeffs = lu_.solve(values);  // rho' x n
    return coeffs.transpose() * basis_at(query, degree_);
}

Vec LagrangeStencil::cardinal(const Vec& query) const {
    // ell_i(q) solves M^T ell = a(q).
    Eigen::PartialPivLU<Mat> lu_t(m_.transpose());
    return lu_t.solve(basis_at(query, degree_));
}

StencilPick pick_stencil(const Mat& train_norm, const Vec& query_norm, int degree, double cond_limit,
                         double lambda_limit) {
    const int rho = LagrangeStencil::point_count(degree);
    const int m = static_cast<int>(train_norm.rows());
    if (m < rho)
        fail("interp: need at least " + std::to_string(rho) + " training points, have " + std::to_string(m));

    std::vector<std::pair<double, int>> order(m);
    for (int i = 0; i < m; ++i)
        order[i] = {(train_norm.row(i).transpose() - query_norm).squaredNorm(), i};
    std::sort(order.begin(), order.end());

    StencilPick best;
    best.lebesgue = std::numeric_limits<double>::infinity();
    const int max_retries = 5;
    int attempts = 0;
    for (int r = 0; r <= max_retries; ++r) {
        if (rho - 1 + r >= m) break;
        std::vector<int> indices;
        for (int i = 0; i + 1 < rho; ++i) indices.push_back(order[i].second);
        indices.push_back(order[rho - 1 + r].second);  // farthest slot, advanced per retry
        Mat pts(rho, 2);
        for (int i = 0; i < rho; ++i) pts.row(i) = train_norm.row(indices[i]);
        LagrangeStencil stencil(pts, degree);
        ++attempts;
        if (stencil.condition() > cond_limit) continue;
        const double lebesgue = stencil.cardinal(query_norm).cwiseAbs().sum();
        if (lebesgue < best.lebesgue) {
            best.indices = std::move(indices);
            best.retries = r;
            best.lebesgue = lebesgue;
            best.stencil = std::move(stencil);
        }
        if (best.lebesgue <= lambda_limit) break;
    }
    best.attempts = attempts;
    if (!best.stencil)
        fail("interp: degenerate stencil near the query (collocation matrix ill-conditioned after retries)");
    return best;
}

RomInstance interpolate_rom(const RomDatabase& db, const Vec& theta_hat, InterpDiagnostics* diag) {
    if (db.count() == 0) fail("interp: empty database");
    const int k = db.instances.front().k;
    const int degree = db.interpolation_degree;
    const int rho = LagrangeStencil::point_count(degree);

    const Mat train_norm = normalize_points(db.thetas, db.ranges);
    const Vec query_norm = normalize_query(theta_hat, db.ranges);

    const StencilPick pick = pick_stencil(train_norm, query_norm, degree);
    const LagrangeStencil& stencil = *pick.stencil;

    // One value matrix for all k^2 + k elements; a single factored solve.
    const int n_elements = k * k + k;
    Mat values(rho, n_elements);
    for (int i = 0; i < rho; ++i) {
        const RomInstance& inst = db.instances[pick.indices[i]];
        values.block(i, 0, 1, k * k) = Eigen::Map<const Eigen::RowVectorXd>(inst.btilde.data(), k * k);
        values.block(i, k * k, 1, k) = inst.ftilde.transpose();
    }
    const Vec interpolated = stencil.eval_many(values, query_norm);

    RomInstance out;
    out.k = k;
    out.theta = theta_hat;
    out.btilde = Eigen::Map<const Mat>(interpolated.data(), k, k);
    out.btilde = 0.5 * (out.btilde + out.btilde.transpose()).eval();
    out.ftilde = interpolated.tail(k);

    if (diag) {
        diag->factorizations = pick.attempts;  // one per stencil attempt
        diag->retries = pick.retries;
        diag->condition = stencil.condition();
        diag->lebesgue = pick.lebesgue;
        diag->neighbors = pick.indices;
        diag->extrapolated = (query_norm.minCoeff() < 0.0 || query_norm.maxCoeff() > 1.0);
    }
    return out;
}

}  // namespace romfv
