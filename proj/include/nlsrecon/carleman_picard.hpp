#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nlsrecon/forward_sim.hpp"
#include "nlsrecon/reduction.hpp"
#include "nlsrecon/spatial_grid.hpp"
#include "nlsrecon/time_basis.hpp"

namespace nlsrecon {

enum class LsMethod {
    Auto,       ///< Direct up to InversionConfig::direct_limit unknowns, iterative above
    Direct,     ///< sparse Cholesky of the normal matrix + iterative refinement
    Iterative,  ///< conjugate gradients on the stacked system, diagonal column scaling
};

/// Weights of the discrete H^2-type regularizer w0 |u|^2 + w1 |grad u|^2 + w2 |Lap u|^2.
struct RegWeights {
    double w0 = 1.0;
    double w1 = 1.0;
    double w2 = 1.0;
};

struct InversionConfig {
    double lambda = 20.0;
    double beta = 5.0;
    Point focus{0.0, 8.0};
    double epsilon = 1e-6;
    int n_modes = 65;
    int k_max = 10;
    RegWeights reg;
    double ls_tol = 1e-8;
    int ls_max_iter = 20000;
    /// Sup-norm bound of the admissible set; checked after each iterate, not enforced.
    double admissible_bound = 100.0;
    std::uint64_t seed = 0;
    LsMethod ls_method = LsMethod::Auto;
    int direct_limit = 50000;

    void validate() const;
};

/// The stacked sparse operator of the frozen functional. It depends on the grid,
/// basis, weight and config only; the frozen term and data enter the right-hand side.
///
/// Rows, in order, each scaled so that the squared residual reproduces one term:
///   interior   h sqrt(w)            (i S u + Lap_h u + g)      (N+1) * n_interior
///   boundary   sqrt(lambda^3 h w_b) (B u - f)                  (N+1) * n_boundary
///   regularizer sqrt(eps) h {sqrt(w0) u, sqrt(w1) Dx u, sqrt(w1) Dy u, sqrt(w2) Lap_h u}
class FrozenLsOperator {
public:
    FrozenLsOperator(const SpatialGrid& grid, const TimeBasis& basis, const CarlemanWeight& weight,
                     const InversionConfig& cfg);

    const Eigen::SparseMatrix<cplx>& matrix() const { return A_; }
    int n_unknowns() const { return static_cast<int>(A_.cols()); }
    int interior_rows() const { return interior_rows_; }
    int boundary_rows() const { return boundary_rows_; }
    int regularization_rows() const { return reg_rows_; }
    int mode_count() const { return modes_; }
    int n_interior() const { return n_int_; }
    int n_boundary() const { return n_bd_; }

    Eigen::VectorXcd rhs(const ModalBoundaryData& data, const Eigen::MatrixXcd& g) const;

private:
    int modes_, n_int_, n_bd_;
    int interior_rows_, boundary_rows_, reg_rows_;
    Eigen::VectorXd interior_scale_;  // h sqrt(w)
    Eigen::VectorXd boundary_scale_;  // sqrt(lambda^3 h w_b)
    Eigen::SparseMatrix<cplx> A_;
};

struct LeastSquaresProblem {
    std::shared_ptr<const FrozenLsOperator> op;
    Eigen::VectorXcd rhs;

    /// ||A x - b||^2, the discrete value of the frozen functional.
    double objective(const ModalField& u) const;
};

LeastSquaresProblem assemble_frozen_ls(const SpatialGrid& grid, const TimeBasis& basis, const CarlemanWeight& weight,
                                       const ModalBoundaryData& data, const Eigen::MatrixXcd& g,
                                       const InversionConfig& cfg);

struct LsSolution {
    ModalField u;
    int iterations = 0;
    /// ||A^H (b - A x)|| / ||A^H b||, 0 when A^H b = 0.
    double residual = 0.0;
    bool converged = true;
    LsMethod method = LsMethod::Direct;
};

/// Reusable solver for one operator: the direct path factors the normal matrix once.
class LeastSquaresSolver {
public:
    LeastSquaresSolver(std::shared_ptr<const FrozenLsOperator> op, LsMethod method, double tol, int max_iter,
                       int direct_limit = 50000);
    ~LeastSquaresSolver();
    LeastSquaresSolver(LeastSquaresSolver&&) noexcept;
    LeastSquaresSolver& operator=(LeastSquaresSolver&&) noexcept;

    LsSolution solve(const Eigen::VectorXcd& rhs, const Eigen::VectorXcd* guess = nullptr) const;
    LsMethod method() const { return method_; }
    const std::shared_ptr<const FrozenLsOperator>& op() const { return op_; }

private:
    struct Impl;
    std::shared_ptr<const FrozenLsOperator> op_;
    LsMethod method_;
    double tol_;
    int max_iter_;
    std::unique_ptr<Impl> impl_;
};

LsSolution solve_ls(const LeastSquaresProblem& problem, const InversionConfig& cfg);

/// Operator and factorization for one (grid, basis, weight, config); independent of the data,
/// so it can be shared by runs that differ only in data or noise level.
std::shared_ptr<const LeastSquaresSolver> make_frozen_solver(const SpatialGrid& grid, const TimeBasis& basis,
                                                             const CarlemanWeight& weight,
                                                             const InversionConfig& cfg);

struct IterationRecord {
    int index = 0;             ///< k: the step producing u^(k+1) from u^(k)
    double rel_change = 0.0;   ///< ||u^(k+1) - u^(k)|| / ||u^(k+1)||
    double residual = 0.0;     ///< dimensionless residual at u^(k+1)
    int ls_iterations = 0;
    double ls_residual = 0.0;
};

struct AmplitudeSummary {
    double max_abs_re = 0.0;
    double max_abs_im = 0.0;
    std::optional<double> rel_error_re;  ///< |max|Re u| - max|Re u_true|| / max|Re u_true|
    std::optional<double> rel_error_im;
};

struct ReconstructionReport {
    std::vector<IterationRecord> history;
    ModalField final_modal;
    Eigen::VectorXcd u0_field;  ///< full grid, row-major, zero on the boundary
    AmplitudeSummary amplitude;
    bool bound_exceeded = false;
    std::vector<std::string> warnings;
};

struct PicardOptions {
    std::optional<ModalField> initial_guess;     ///< zero when absent
    std::optional<Eigen::VectorXcd> truth_full;  ///< true u0 on the full grid, for amplitude errors
    std::function<void(const IterationRecord&)> on_iteration;
    /// Prebuilt solver from make_frozen_solver with the same inputs; built on the fly when absent.
    std::shared_ptr<const LeastSquaresSolver> solver;
};

ReconstructionReport picard_solve(const SpatialGrid& grid, const TimeBasis& basis, const CarlemanWeight& weight,
                                  const ModalBoundaryData& data, const InversionConfig& cfg, double p,
                                  const RealField& q_field, const PicardOptions& options = {});

/// One map application u -> argmin J_u, sharing a solver across calls.
class PicardMap {
public:
    PicardMap(const SpatialGrid& grid, const TimeBasis& basis, const CarlemanWeight& weight,
              const ModalBoundaryData& data, const InversionConfig& cfg, double p, RealField q_field,
              std::shared_ptr<const LeastSquaresSolver> solver = nullptr);

    LsSolution apply(const ModalField& phi) const;

private:
    const TimeBasis& basis_;
    ModalBoundaryData data_;
    double p_;
    RealField q_;
    std::shared_ptr<const LeastSquaresSolver> solver_;
};

/// ||a - b|| / ||a|| in the stacked L2 norm (the h^2 factor cancels).
/// 0 when both vanish, 1 when only a vanishes.
double rel_change(const ModalField& u_next, const ModalField& u_prev);

/// h^2-scaled stacked L2 norm over modes and interior nodes.
double modal_l2_norm(const SpatialGrid& grid, const Eigen::MatrixXcd& columns);

/// ||i S u + Lap_h u + g(u)|| / max(||Lap_h u||, 1e-2).
double residual_metric(const SpatialGrid& grid, const TimeBasis& basis, const ModalField& u,
                       const Eigen::MatrixXcd& g_of_u);
inline constexpr double kResidualFloor = 1e-2;

/// sum_n u_n Psi_n(0) on the interior, 0 on the boundary (full grid, row-major).
Eigen::VectorXcd reconstruct_u0(const SpatialGrid& grid, const TimeBasis& basis, const ModalField& u);

/// Discrete version of the contraction norm of u - v:
/// int w |d|^2 + 2 int_boundary w |d_nu d|^2 + (2 eps / lambda^3) * surrogate(d)^2.
double weighted_error(const SpatialGrid& grid, const ModalField& u, const ModalField& v, const CarlemanWeight& weight,
                      const InversionConfig& cfg);
double weighted_norm(const SpatialGrid& grid, const ModalField& u, const CarlemanWeight& weight,
                     const InversionConfig& cfg);

AmplitudeSummary amplitude_summary(const Eigen::VectorXcd& u0_full, const std::optional<Eigen::VectorXcd>& truth_full);

/// Centroid of one component over the nodes where it reaches at least
/// `fraction` of its maximum, weighted by the component value.
Point inclusion_centroid(const SpatialGrid& grid, const Eigen::VectorXcd& full_field, Component component,
                         double fraction = 0.5);

}  // namespace nlsrecon
