#include "romfv/observables.hpp"

#include <cmath>

namespace romfv {

namespace {

/// expm1(z)/z, series-evaluated near zero.
double phi1(double z) {
    if (std::abs(z) > 1e-5) return std::expm1(z) / z;
    return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
}

/// Guard for divisions by observables: near-zero relative to the batch
/// magnitude is a modeling degeneracy, not a numerical one.
void check_divisor(const Eigen::ArrayXd& den, const std::string& label) {
    const double scale = std::max(1e-300, den.abs().maxCoeff());
    for (Eigen::Index i = 0; i < den.size(); ++i) {
        if (std::abs(den[i]) <= 1e-10 * scale)
            fail("observables: " + label + " is (near) zero at point " + std::to_string(i));
    }
}

}  // namespace

int ObservableSystem::cells_of(const Vec& y) const {
    const int nb = n_blocks();
    if (y.size() % nb != 0)
        fail("observables: vector length " + std::to_string(y.size()) + " is not a multiple of " +
             std::to_string(nb) + " blocks");
    return static_cast<int>(y.size()) / nb;
}

Vec ObservableSystem::constraint_residual(const Vec& y, const Vec& theta) const {
    check_params(theta);
    const int n = cells_of(y);
    const auto& fams = families();
    Vec h(static_cast<Eigen::Index>(fams.size()) * n);
    for (std::size_t f = 0; f < fams.size(); ++f) {
        const auto& fam = fams[f];
        std::vector<Eigen::ArrayXd> inputs;
        inputs.reserve(fam.input_blocks.size());
        for (int b : fam.input_blocks) inputs.push_back(y.segment(b * n, n).array());
        Eigen::ArrayXd value;
        fam.nonlinear(inputs, theta, value, nullptr);
        h.segment(static_cast<Eigen::Index>(f) * n, n) = y.segment(fam.target_block * n, n) - value.matrix();
    }
    return h;
}

Eigen::SparseMatrix<double> ObservableSystem::constraint_jacobian(const Vec& y, const Vec& theta) const {
    check_params(theta);
    const int n = cells_of(y);
    const auto& fams = families();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(fams.size() * n * 4);
    for (std::size_t f = 0; f < fams.size(); ++f) {
        const auto& fam = fams[f];
        std::vector<Eigen::ArrayXd> inputs;
        for (int b : fam.input_blocks) inputs.push_back(y.segment(b * n, n).array());
        Eigen::ArrayXd value;
        std::vector<Eigen::ArrayXd> partials;
        fam.nonlinear(inputs, theta, value, &partials);
        const int row0 = static_cast<int>(f) * n;
        for (int i = 0; i < n; ++i) trip.emplace_back(row0 + i, fam.target_block * n + i, 1.0);
        for (std::size_t j = 0; j < fam.input_blocks.size(); ++j) {
            const int col0 = fam.input_blocks[j] * n;
            for (int i = 0; i < n; ++i) {
                const double d = partials[j][i];
                if (d != 0.0) trip.emplace_back(row0 + i, col0 + i, -d);
            }
        }
    }
    Eigen::SparseMatrix<double> jac(static_cast<Eigen::Index>(fams.size()) * n,
                                    static_cast<Eigen::Index>(n_blocks()) * n);
    jac.setFromTriplets(trip.begin(), trip.end());
    jac.makeCompressed();
    return jac;
}

double CanonicalSystem::source(double u, double mu1, double mu2) { return mu1 * u * phi1(mu2 * u); }

double CanonicalSystem::source_derivative(double u, double mu1, double mu2) { return mu1 * std::exp(mu2 * u); }

CanonicalSystem::CanonicalSystem() {
    ConstraintFamily fam;
    fam.name = "state_law";
    fam.target_block = 1;
    fam.input_blocks = {0};
    fam.nonlinear = [](const std::vector<Eigen::ArrayXd>& in, const Vec& theta, Eigen::ArrayXd& value,
                       std::vector<Eigen::ArrayXd>* partials) {
        const double mu1 = theta[0], mu2 = theta[1];
        const Eigen::ArrayXd& u = in[0];
        value.resize(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) value[i] = source(u[i], mu1, mu2);
        if (partials) {
            partials->assign(1, Eigen::ArrayXd(u.size()));
            for (Eigen::Index i = 0; i < u.size(); ++i) (*partials)[0][i] = source_derivative(u[i], mu1, mu2);
        }
    };
    families_ = {std::move(fam)};
}

void CanonicalSystem::check_params(const Vec& theta) const {
    if (theta.size() != 2) fail("canonical: expected 2 parameters (mu1, mu2)");
    if (!(theta[0] > 0.0) || !(theta[1] > 0.0)) fail("canonical: parameters must be positive");
}

Vec CanonicalSystem::lift(const Vec& state, const Vec& theta) const {
    check_params(theta);
    const Eigen::Index n = state.size();
    Vec y(2 * n);
    y.head(n) = state;
    for (Eigen::Index i = 0; i < n; ++i) y[n + i] = source(state[i], theta[0], theta[1]);
    return y;
}

Vec CanonicalSystem::restrict_state(const Vec& y) const {
    const int n = cells_of(y);
    return y.head(n);
}

EulerSystem::EulerSystem(double gamma) : gamma_(gamma) {
    if (!(gamma_ > 1.0 + 1e-12)) fail("euler: gamma must exceed 1");
    const double gm1 = gamma_ - 1.0;

    // h1 = y5 - y1 y3 / y2
    ConstraintFamily h1;
    h1.name = "h1";
    h1.target_block = 4;
    h1.input_blocks = {0, 1, 2};
    h1.nonlinear = [](const std::vector<Eigen::ArrayXd>& in, const Vec&, Eigen::ArrayXd& value,
                      std::vector<Eigen::ArrayXd>* partials) {
        const auto &y1 = in[0], &y2 = in[1], &y3 = in[2];
        check_divisor(y2, "h1 denominator y2");
        value = y1 * y3 / y2;
        if (partials) {
            partials->resize(3);
            (*partials)[0] = y3 / y2;
            (*partials)[1] = -y1 * y3 / (y2 * y2);
            (*partials)[2] = y1 / y2;
        }
    };

    // h2 = y6 - y2 y3 / y1
    ConstraintFamily h2;
    h2.name = "h2";
    h2.target_block = 5;
    h2.input_blocks = {0, 1, 2};
    h2.nonlinear = [](const std::vector<Eigen::ArrayXd>& in, const Vec&, Eigen::ArrayXd& value,
                      std::vector<Eigen::ArrayXd>* partials) {
        const auto &y1 = in[0], &y2 = in[1], &y3 = in[2];
        check_divisor(y1, "h2 denominator y1");
        value = y2 * y3 / y1;
        if (partials) {
            partials->resize(3);
            (*partials)[0] = -y2 * y3 / (y1 * y1);
            (*partials)[1] = y3 / y1;
            (*partials)[2] = y2 / y1;
        }
    };

    // h3 = y7 - y1 (E + y4 y3 / (y1 y2)),
    // h4 = y8 - y2 (E + y4 y3 / (y1 y2)),
    // E  = (y3 y5 + y3 y6) / (2 y1 y2) + y3 y4 / (y1 y2 (gamma - 1)).
    auto energy_family = [gm1](bool momentum_x) {
        return [gm1, momentum_x](const std::vector<Eigen::ArrayXd>& in, const Vec&, Eigen::ArrayXd& value,
                                 std::vector<Eigen::ArrayXd>* partials) {
            const auto &y1 = in[0], &y2 = in[1], &y3 = in[2], &y4 = in[3], &y5 = in[4], &y6 = in[5];
            check_divisor(y1, momentum_x ? "h3 denominator y1" : "h4 denominator y1");
            check_divisor(y2, momentum_x ? "h3 denominator y2" : "h4 denominator y2");
            const Eigen::ArrayXd p = y3 / (y1 * y2);
            const Eigen::ArrayXd energy = p * (0.5 * (y5 + y6) + y4 / gm1);
            const Eigen::ArrayXd q = energy + y4 * p;
            const Eigen::ArrayXd& lead = momentum_x ? y1 : y2;
            value = lead * q;
            if (partials) {
                partials->resize(6);
                // value = lead * y3 * r / (y1 y2) with r = (y5 + y6)/2 + gamma y4 / (gamma - 1)
                const Eigen::ArrayXd r = 0.5 * (y5 + y6) + y4 * (1.0 / gm1 + 1.0);
                if (momentum_x) {
                    (*partials)[0] = Eigen::ArrayXd::Zero(y1.size());
                    (*partials)[1] = -y3 * r / (y2 * y2);
                    (*partials)[2] = r / y2;
                    (*partials)[3] = y3 * (1.0 / gm1 + 1.0) / y2;
                    (*partials)[4] = 0.5 * y3 / y2;
                    (*partials)[5] = 0.5 * y3 / y2;
                } else {
                    (*partials)[0] = -y3 * r / (y1 * y1);
                    (*partials)[1] = Eigen::ArrayXd::Zero(y1.size());
                    (*partials)[2] = r / y1;
                    (*partials)[3] = y3 * (1.0 / gm1 + 1.0) / y1;
                    (*partials)[4] = 0.5 * y3 / y1;
                    (*partials)[5] = 0.5 * y3 / y1;
                }
            }
        };
    };

    ConstraintFamily h3;
    h3.name = "h3";
    h3.target_block = 6;
    h3.input_blocks = {0, 1, 2, 3, 4, 5};
    h3.nonlinear = energy_family(true);

    ConstraintFamily h4;
    h4.name = "h4";
    h4.target_block = 7;
    h4.input_blocks = {0, 1, 2, 3, 4, 5};
    h4.nonlinear = energy_family(false);

    families_ = {std::move(h1), std::move(h2), std::move(h3), std::move(h4)};
}

void EulerSystem::check_params(const Vec& theta) const {
    if (theta.size() != 2) fail("euler: expected 2 parameters (Mach, alpha)");
}

Vec EulerSystem::lift(const Vec& state, const Vec& theta) const {
    check_params(theta);
    if (state.size() % 4 != 0) fail("euler: state must stack [rho; u; v; p]");
    const Eigen::Index n = state.size() / 4;
    const auto rho = state.segment(0, n).array();
    const auto u = state.segment(n, n).array();
    const auto v = state.segment(2 * n, n).array();
    const auto p = state.segment(3 * n, n).array();
    check_divisor(rho, "lift density rho");

    const Eigen::ArrayXd rho_e = 0.5 * rho * (u * u + v * v) + p / (gamma_ - 1.0);
    const Eigen::ArrayXd enthalpy = (rho_e + p) / rho;  // H = E + p/rho

    Vec y(8 * n);
    y.segment(0, n) = (rho * u).matrix();
    y.segment(n, n) = (rho * v).matrix();
    y.segment(2 * n, n) = (rho * u * v).matrix();
    y.segment(3 * n, n) = p.matrix();
    y.segment(4 * n, n) = (rho * u * u).matrix();
    y.segment(5 * n, n) = (rho * v * v).matrix();
    y.segment(6 * n, n) = (rho * u * enthalpy).matrix();
    y.segment(7 * n, n) = (rho * v * enthalpy).matrix();
    return y;
}

Vec EulerSystem::restrict_state(const Vec& y) const {
    const int n = cells_of(y);
    const auto y1 = y.segment(0, n).array();
    const auto y2 = y.segment(n, n).array();
    const auto y3 = y.segment(2 * n, n).array();
    const auto y4 = y.segment(3 * n, n).array();
    check_divisor(y1, "restrict denominator y1");
    check_divisor(y2, "restrict denominator y2");
    check_divisor(y3, "restrict denominator y3");

    Vec state(4 * n);
    state.segment(0, n) = (y1 * y2 / y3).matrix();  // rho
    state.segment(n, n) = (y3 / y2).matrix();       // u
    state.segment(2 * n, n) = (y3 / y1).matrix();   // v
    state.segment(3 * n, n) = y4.matrix();          // p
    return state;
}

std::shared_ptr<const ObservableSystem> make_system(const std::string& name, double gamma) {
    if (name == "canonical") return std::make_shared<CanonicalSystem>();
    if (name == "euler") return std::make_shared<EulerSystem>(gamma);
    fail("unknown observable system '" + name + "' (expected 'canonical' or 'euler')");
}

}  // namespace romfv
