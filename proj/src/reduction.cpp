#include "nlsrecon/reduction.hpp"

#include <cmath>
#include <string>

namespace nlsrecon {

ModalBoundaryData project_trace(const TimeBasis& basis, const SpaceTimeTrace& trace) {
    require(std::abs(trace.times.horizon() - basis.horizon()) <= 1e-9 * basis.horizon(),
            "trace horizon " + std::to_string(trace.times.horizon()) + " differs from basis horizon " +
                std::to_string(basis.horizon()));
    require(trace.values.cols() == trace.times.n_levels(), "trace values do not match its time grid");
    return {project_rows(basis, trace.values, trace.times)};
}

Eigen::MatrixXcd project_rows(const TimeBasis& basis, const Eigen::MatrixXcd& samples, const UniformTimeGrid& grid) {
    require(samples.cols() == grid.n_levels(), "sample count does not match the time grid");
    const Eigen::MatrixXd P = projection_matrix(basis, grid);  // (N+1) x levels
    return samples * P.transpose().cast<cplx>();
}

Eigen::MatrixXcd synthesize(const TimeBasis& basis, const Eigen::MatrixXcd& coeffs, std::span<const double> times) {
    require(coeffs.cols() == basis.mode_count(), "coefficient mode count does not match the basis");
    Eigen::MatrixXd table(basis.mode_count(), static_cast<Eigen::Index>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i) table.col(static_cast<Eigen::Index>(i)) = basis.evaluate(times[i]);
    return coeffs * table.cast<cplx>();
}

Eigen::MatrixXcd frozen_nonlinearity(const TimeBasis& basis, const ModalField& phi, const RealField& q_field, double p) {
    require(p > 1.0, "nonlinearity exponent must exceed 1");
    require(phi.mode_count() == basis.mode_count(), "modal field mode count does not match the basis");
    require(q_field.size() == phi.n_nodes(), "q field size mismatch");

    // Phi(x, t_q): (nodes, n_quad)
    Eigen::MatrixXcd field = phi.coeffs * basis.psi_table().transpose().cast<cplx>();
    for (Eigen::Index q = 0; q < field.cols(); ++q)
        for (Eigen::Index k = 0; k < field.rows(); ++k) field(k, q) = q_field[k] * power_nonlinearity(field(k, q), p);
    const Eigen::MatrixXd proj = basis.weighted_quad_weights().asDiagonal() * basis.psi_table();  // (n_quad, N+1)
    return field * proj.cast<cplx>();
}

Eigen::MatrixXcd modal_laplacian(const SpatialGrid& grid, const Eigen::MatrixXcd& columns) {
    require(columns.rows() == grid.n_interior(), "modal field node count does not match the grid");
    Eigen::MatrixXcd out(columns.rows(), columns.cols());
    for (Eigen::Index m = 0; m < columns.cols(); ++m) out.col(m) = laplacian_apply(grid, columns.col(m));
    return out;
}

Eigen::MatrixXcd reduced_residual(const SpatialGrid& grid, const TimeBasis& basis, const ModalField& u,
                                  const Eigen::MatrixXcd& g) {
    require(u.mode_count() == basis.mode_count(), "modal field mode count does not match the basis");
    require(g.rows() == u.coeffs.rows() && g.cols() == u.coeffs.cols(), "frozen term shape mismatch");
    const cplx i(0.0, 1.0);
    // (U S^T)(k, m) = sum_n s_mn u_n(k)
    return i * (u.coeffs * basis.s_matrix().transpose().cast<cplx>()) + modal_laplacian(grid, u.coeffs) + g;
}

std::vector<TruncationEntry> truncation_residual_report(const TimeBasis& basis, std::span<const cplx> samples,
                                                        const UniformTimeGrid& grid, const std::vector<int>& n_list) {
    const Eigen::VectorXcd c = project_signal(basis, samples, grid);
    Eigen::Map<const Eigen::VectorXcd> s(samples.data(), static_cast<Eigen::Index>(samples.size()));
    const Eigen::VectorXcd at_nodes = interpolation_matrix(basis, grid).cast<cplx>() * s;
    const auto& w = basis.weighted_quad_weights();

    std::vector<TruncationEntry> out;
    for (int N : n_list) {
        require(N >= 0 && N <= basis.n_modes(),
                "truncation index " + std::to_string(N) + " outside 0.." + std::to_string(basis.n_modes()));
        const Eigen::VectorXcd tail =
            at_nodes - basis.psi_table().leftCols(N + 1).cast<cplx>() * c.head(N + 1);
        double acc = 0.0;
        for (Eigen::Index q = 0; q < tail.size(); ++q) acc += w[q] * std::norm(tail[q]);
        out.push_back({N, std::sqrt(acc)});
    }
    return out;
}

}  // namespace nlsrecon
