#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nlsrecon/types.hpp"

namespace nlsrecon {

/// Uniform time grid t_n = n*dt, n = 0..n_steps, used by the forward solver.
struct UniformTimeGrid {
    double dt = 0.0;
    int n_steps = 0;

    double horizon() const { return dt * n_steps; }
    int n_levels() const { return n_steps + 1; }
    double time(int n) const { return dt * n; }
};

/// Legendre polynomial-exponential modes Psi_n(t) = e^t Q_n(t) on (0, T),
/// Q_n the orthonormal shifted Legendre polynomials. The modes are orthonormal
/// under <u, v> = int_0^T e^{-2t} u v dt.
///
/// All tables are evaluated once at a Gauss-Legendre rule on (0, T); the object
/// is immutable afterwards.
class TimeBasis {
public:
    double horizon() const { return horizon_; }
    int n_modes() const { return n_modes_; }  ///< truncation index N (N+1 modes)
    int mode_count() const { return n_modes_ + 1; }
    int n_quad() const { return static_cast<int>(nodes_.size()); }

    const Eigen::VectorXd& quad_nodes() const { return nodes_; }
    const Eigen::VectorXd& quad_weights() const { return weights_; }
    /// w_q * e^{-2 t_q}: the rule for the weighted inner product.
    const Eigen::VectorXd& weighted_quad_weights() const { return weighted_; }
    /// psi_table()(q, n) = Psi_n(t_q).
    const Eigen::MatrixXd& psi_table() const { return psi_; }
    const Eigen::MatrixXd& psi_prime_table() const { return psi_prime_; }
    const Eigen::VectorXd& psi_at_zero() const { return psi_zero_; }
    /// s(m, n) = <Psi_n', Psi_m>.
    const Eigen::MatrixXd& s_matrix() const { return s_; }

    /// Psi_0..Psi_N at an arbitrary t (not restricted to quadrature nodes).
    Eigen::VectorXd evaluate(double t) const;
    Eigen::VectorXd evaluate_derivative(double t) const;

    friend TimeBasis build_basis(double horizon, int n_modes, int n_quad);

private:
    TimeBasis() = default;

    double horizon_ = 0.0;
    int n_modes_ = 0;
    Eigen::VectorXd nodes_, weights_, weighted_;
    Eigen::MatrixXd psi_, psi_prime_, s_;
    Eigen::VectorXd psi_zero_;
};

/// Smallest accepted quadrature size for a basis with n_modes.
inline int min_quad_nodes(int n_modes) { return 2 * n_modes + 16; }
/// Default quadrature size: max(2N + 16, 256).
inline int default_quad_nodes(int n_modes) { return std::max(min_quad_nodes(n_modes), 256); }

TimeBasis build_basis(double horizon, int n_modes, int n_quad);
inline TimeBasis build_basis(double horizon, int n_modes) {
    return build_basis(horizon, n_modes, default_quad_nodes(n_modes));
}

/// Gauss-Legendre rule on [a, b] with n nodes (ascending).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n, double a, double b);

/// sum_q w_q e^{-2 t_q} g_q h_q; the second argument is not conjugated.
cplx weighted_inner(const TimeBasis& basis, std::span<const cplx> g, std::span<const cplx> h);

const Eigen::MatrixXd& s_matrix(const TimeBasis& basis);

/// Piecewise-linear resampling of a uniform-grid signal onto the quadrature
/// nodes, as a dense (n_quad x n_levels) matrix with two entries per row.
Eigen::MatrixXd interpolation_matrix(const TimeBasis& basis, const UniformTimeGrid& grid);

/// Maps samples on the uniform grid to mode coefficients:
/// coefficients = projection_matrix * samples, shape (N+1) x n_levels.
Eigen::MatrixXd projection_matrix(const TimeBasis& basis, const UniformTimeGrid& grid);

/// c_m = int_0^T e^{-2t} s(t) Psi_m(t) dt with s interpolated linearly from
/// the uniform grid to the quadrature nodes.
Eigen::VectorXcd project_signal(const TimeBasis& basis, std::span<const cplx> samples,
                                const UniformTimeGrid& grid);

struct DecayEntry {
    int n;
    double magnitude;
};
std::vector<DecayEntry> coefficient_decay_report(const TimeBasis& basis, std::span<const cplx> samples,
                                                 const UniformTimeGrid& grid);

/// Largest |<Psi_m, Psi_n> - delta_mn| over the stored rule.
double gram_deviation(const TimeBasis& basis);
/// Largest |s_mn + s_nm - 2 delta_mn - sqrt((2m+1)(2n+1)) (1 - (-1)^{m+n}) / T|.
double s_identity_deviation(const TimeBasis& basis);

}  // namespace nlsrecon
