#include "nlsrecon/time_basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace nlsrecon {

namespace {

// P_0..P_N and P_0'..P_N' at x in [-1, 1] (Bonnet recurrence and
// P_{n+1}' = P_{n-1}' + (2n + 1) P_n).
void legendre_with_derivative(int n_max, double x, double* p, double* dp) {
    p[0] = 1.0;
    dp[0] = 0.0;
    if (n_max == 0) return;
    p[1] = x;
    dp[1] = 1.0;
    for (int n = 1; n < n_max; ++n) {
        p[n + 1] = ((2.0 * n + 1.0) * x * p[n] - n * p[n - 1]) / (n + 1.0);
        dp[n + 1] = dp[n - 1] + (2.0 * n + 1.0) * p[n];
    }
}

void evaluate_modes(double horizon, int n_modes, double t, double* psi, double* psi_prime) {
    std::vector<double> p(n_modes + 1), dp(n_modes + 1);
    legendre_with_derivative(n_modes, 2.0 * t / horizon - 1.0, p.data(), dp.data());
    const double et = std::exp(t);
    for (int n = 0; n <= n_modes; ++n) {
        const double norm = std::sqrt((2.0 * n + 1.0) / horizon);
        const double q = norm * p[n];
        const double dq = norm * dp[n] * (2.0 / horizon);
        if (psi) psi[n] = et * q;
        if (psi_prime) psi_prime[n] = et * (q + dq);
    }
}

void check_samples(const TimeBasis& basis, std::span<const cplx> samples, const UniformTimeGrid& grid) {
    require(!samples.empty(), "signal is empty");
    require(grid.n_steps >= 1 && grid.dt > 0.0, "time grid needs at least one positive step");
    require(static_cast<int>(samples.size()) == grid.n_levels(),
            "signal has " + std::to_string(samples.size()) + " samples, time grid has " +
                std::to_string(grid.n_levels()) + " levels");
    require(std::abs(grid.horizon() - basis.horizon()) <= 1e-9 * basis.horizon(),
            "time grid does not span [0, T] of the basis");
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n, double a, double b) {
    require(n >= 1, "gauss_legendre needs n >= 1");
    Eigen::VectorXd x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = z;
            for (int k = 1; k < n; ++k) {
                const double p2 = ((2.0 * k + 1.0) * z * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = z;
        for (int k = 1; k < n; ++k) {
            const double p2 = ((2.0 * k + 1.0) * z * p1 - k * p0) / (k + 1.0);
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    return {(mid + half * x.array()).matrix(), (half * w.array()).matrix()};
}

TimeBasis build_basis(double horizon, int n_modes, int n_quad) {
    require(horizon > 0.0 && std::isfinite(horizon), "basis horizon must be positive");
    require(n_modes >= 0, "n_modes must be nonnegative");
    require(n_quad >= min_quad_nodes(n_modes),
            "n_quad = " + std::to_string(n_quad) + " is below the floor 2N + 16 = " +
                std::to_string(min_quad_nodes(n_modes)));

    TimeBasis b;
    b.horizon_ = horizon;
    b.n_modes_ = n_modes;
    std::tie(b.nodes_, b.weights_) = gauss_legendre(n_quad, 0.0, horizon);
    b.weighted_ = (b.weights_.array() * (-2.0 * b.nodes_.array()).exp()).matrix();

    const int m = n_modes + 1;
    b.psi_.resize(n_quad, m);
    b.psi_prime_.resize(n_quad, m);
    std::vector<double> psi(m), dpsi(m);
    for (int q = 0; q < n_quad; ++q) {
        evaluate_modes(horizon, n_modes, b.nodes_[q], psi.data(), dpsi.data());
        for (int n = 0; n < m; ++n) {
            b.psi_(q, n) = psi[n];
            b.psi_prime_(q, n) = dpsi[n];
        }
    }
    b.psi_zero_.resize(m);
    evaluate_modes(horizon, n_modes, 0.0, b.psi_zero_.data(), nullptr);

    // s(m, n) = sum_q w_q e^{-2 t_q} Psi_n'(t_q) Psi_m(t_q)
    b.s_ = b.psi_.transpose() * b.weighted_.asDiagonal() * b.psi_prime_;
    return b;
}

Eigen::VectorXd TimeBasis::evaluate(double t) const {
    Eigen::VectorXd out(mode_count());
    evaluate_modes(horizon_, n_modes_, t, out.data(), nullptr);
    return out;
}

Eigen::VectorXd TimeBasis::evaluate_derivative(double t) const {
    Eigen::VectorXd out(mode_count());
    evaluate_modes(horizon_, n_modes_, t, nullptr, out.data());
    return out;
}

cplx weighted_inner(const TimeBasis& basis, std::span<const cplx> g, std::span<const cplx> h) {
    const auto nq = static_cast<std::size_t>(basis.n_quad());
    require(g.size() == nq && h.size() == nq, "signals must be sampled at the basis quadrature nodes");
    const auto& w = basis.weighted_quad_weights();
    cplx acc = 0.0;
    for (std::size_t q = 0; q < nq; ++q) acc += w[static_cast<Eigen::Index>(q)] * g[q] * h[q];
    return acc;
}

const Eigen::MatrixXd& s_matrix(const TimeBasis& basis) { return basis.s_matrix(); }

Eigen::MatrixXd interpolation_matrix(const TimeBasis& basis, const UniformTimeGrid& grid) {
    require(grid.n_steps >= 1 && grid.dt > 0.0, "time grid needs at least one positive step");
    require(std::abs(grid.horizon() - basis.horizon()) <= 1e-9 * basis.horizon(),
            "time grid does not span [0, T] of the basis");
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(basis.n_quad(), grid.n_levels());
    for (int q = 0; q < basis.n_quad(); ++q) {
        const double s = basis.quad_nodes()[q] / grid.dt;
        int i = std::clamp(static_cast<int>(std::floor(s)), 0, grid.n_steps - 1);
        const double theta = s - i;
        P(q, i) += 1.0 - theta;
        P(q, i + 1) += theta;
    }
    return P;
}

Eigen::MatrixXd projection_matrix(const TimeBasis& basis, const UniformTimeGrid& grid) {
    return basis.psi_table().transpose() * basis.weighted_quad_weights().asDiagonal() *
           interpolation_matrix(basis, grid);
}

Eigen::VectorXcd project_signal(const TimeBasis& basis, std::span<const cplx> samples,
                                const UniformTimeGrid& grid) {
    check_samples(basis, samples, grid);
    Eigen::Map<const Eigen::VectorXcd> s(samples.data(), static_cast<Eigen::Index>(samples.size()));
    return projection_matrix(basis, grid).cast<cplx>() * s;
}

std::vector<DecayEntry> coefficient_decay_report(const TimeBasis& basis, std::span<const cplx> samples,
                                                 const UniformTimeGrid& grid) {
    const Eigen::VectorXcd c = project_signal(basis, samples, grid);
    std::vector<DecayEntry> out;
    out.reserve(static_cast<std::size_t>(c.size()));
    for (int n = 0; n < c.size(); ++n) out.push_back({n, std::abs(c[n])});
    return out;
}

double gram_deviation(const TimeBasis& basis) {
    const Eigen::MatrixXd G =
        basis.psi_table().transpose() * basis.weighted_quad_weights().asDiagonal() * basis.psi_table();
    return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

double s_identity_deviation(const TimeBasis& basis) {
    const auto& s = basis.s_matrix();
    const double T = basis.horizon();
    double worst = 0.0;
    for (int m = 0; m < basis.mode_count(); ++m) {
        for (int n = 0; n < basis.mode_count(); ++n) {
            const double odd = ((m + n) % 2 == 1) ? 2.0 : 0.0;
            const double expected = (m == n ? 2.0 : 0.0) + std::sqrt((2.0 * m + 1.0) * (2.0 * n + 1.0)) * odd / T;
            worst = std::max(worst, std::abs(s(m, n) + s(n, m) - expected));
        }
    }
    return worst;
}

}  // namespace nlsrecon
