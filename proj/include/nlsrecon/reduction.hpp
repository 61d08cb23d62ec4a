#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "nlsrecon/forward_sim.hpp"
#include "nlsrecon/spatial_grid.hpp"
#include "nlsrecon/time_basis.hpp"

namespace nlsrecon {

/// Modal coefficients u_0..u_N on interior nodes; column m holds u_m.
/// Column-major storage makes the stacked unknown vector index m * n_interior + k.
struct ModalField {
    Eigen::MatrixXcd coeffs;  ///< (n_interior, N + 1)

    ModalField() = default;
    explicit ModalField(Eigen::MatrixXcd c) : coeffs(std::move(c)) {}
    static ModalField zero(int n_interior, int mode_count) {
        return ModalField(Eigen::MatrixXcd::Zero(n_interior, mode_count));
    }

    int n_modes() const { return static_cast<int>(coeffs.cols()) - 1; }
    int mode_count() const { return static_cast<int>(coeffs.cols()); }
    int n_nodes() const { return static_cast<int>(coeffs.rows()); }
};

/// Projected Neumann data f_m on the boundary list; column m holds f_m.
struct ModalBoundaryData {
    Eigen::MatrixXcd coeffs;  ///< (n_boundary, N + 1)
};

ModalBoundaryData project_trace(const TimeBasis& basis, const SpaceTimeTrace& trace);

/// Sum_n b_mn(phi) phi_n for every m, evaluated by synthesising Phi(x, t_q),
/// applying q |Phi|^{p-1} Phi and projecting back; b_mn is never formed.
Eigen::MatrixXcd frozen_nonlinearity(const TimeBasis& basis, const ModalField& phi, const RealField& q_field, double p);

/// i S u + Lap_h u + g for each mode (columns) and interior node (rows).
Eigen::MatrixXcd reduced_residual(const SpatialGrid& grid, const TimeBasis& basis, const ModalField& u,
                                  const Eigen::MatrixXcd& g);

/// Lap_h applied to every column.
Eigen::MatrixXcd modal_laplacian(const SpatialGrid& grid, const Eigen::MatrixXcd& columns);

/// Mode coefficients of interior time series sampled on a uniform grid:
/// row k of `samples` is the series at node k.
Eigen::MatrixXcd project_rows(const TimeBasis& basis, const Eigen::MatrixXcd& samples, const UniformTimeGrid& grid);

/// Synthesise sum_n c_n Psi_n(t) at given times for every row of coeffs.
Eigen::MatrixXcd synthesize(const TimeBasis& basis, const Eigen::MatrixXcd& coeffs, std::span<const double> times);

struct TruncationEntry {
    int n_modes;
    double tail_norm;  ///< || s - sum_{n <= N} c_n Psi_n ||_{e^{-2t}}
};

/// Weighted L2 tail left after projecting onto the first N + 1 modes, for each N.
/// Every N must not exceed the basis truncation index.
std::vector<TruncationEntry> truncation_residual_report(const TimeBasis& basis, std::span<const cplx> samples,
                                                        const UniformTimeGrid& grid, const std::vector<int>& n_list);

}  // namespace nlsrecon
