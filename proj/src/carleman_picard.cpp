#include "nlsrecon/carleman_picard.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#ifdef NLSRECON_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

namespace nlsrecon {

void InversionConfig::validate() const {
    require(std::isfinite(lambda) && lambda > 0.0, "lambda must be positive");
    require(std::isfinite(beta) && beta > 0.0, "beta must be positive");
    require(std::isfinite(epsilon) && epsilon > 0.0, "epsilon must be positive");
    require(n_modes >= 0, "n_modes must be nonnegative");
    require(k_max >= 1, "k_max must be at least 1");
    require(reg.w0 >= 0.0 && reg.w1 >= 0.0 && reg.w2 >= 0.0, "regularization weights must be nonnegative");
    require(ls_tol > 0.0, "ls_tol must be positive");
    require(ls_max_iter >= 1, "ls_max_iter must be at least 1");
    require(admissible_bound > 0.0, "admissible_bound must be positive");
}

// ---------------------------------------------------------------------------
// Assembly

FrozenLsOperator::FrozenLsOperator(const SpatialGrid& grid, const TimeBasis& basis, const CarlemanWeight& weight,
                                   const InversionConfig& cfg)
    : modes_(basis.mode_count()), n_int_(grid.n_interior()), n_bd_(grid.n_boundary()) {
    cfg.validate();
    require(weight.interior_weight.size() == n_int_ && weight.boundary_weight.size() == n_bd_,
            "Carleman weight was not built for this grid");
    require(cfg.n_modes == basis.n_modes(), "config n_modes differs from the basis");

    const double h = grid.spacing();
    const double lambda3 = cfg.lambda * cfg.lambda * cfg.lambda;
    interior_scale_ = (h * weight.interior_weight.array().sqrt()).matrix();
    boundary_scale_ = (lambda3 * h * weight.boundary_weight.array()).sqrt().matrix();

    interior_rows_ = modes_ * n_int_;
    boundary_rows_ = modes_ * n_bd_;
    reg_rows_ = 4 * modes_ * n_int_;

    const SparseReal L = laplacian_matrix(grid);
    const SparseReal B = neumann_trace_matrix(grid);
    const SparseReal Dx = gradient_x_matrix(grid);
    const SparseReal Dy = gradient_y_matrix(grid);
    const Eigen::MatrixXd& S = basis.s_matrix();
    const cplx i(0.0, 1.0);

    using T = Eigen::Triplet<cplx>;
    std::vector<T> t;
    t.reserve(static_cast<std::size_t>(interior_rows_) * static_cast<std::size_t>(modes_ + 5) +
              static_cast<std::size_t>(boundary_rows_) * 2 + static_cast<std::size_t>(modes_ * n_int_) * 12);

    auto add_rows = [&](int row0, int m, const SparseReal& op, double scale) {
        for (int r = 0; r < op.outerSize(); ++r)
            for (SparseReal::InnerIterator it(op, r); it; ++it)
                t.emplace_back(row0 + r, m * n_int_ + static_cast<int>(it.col()), cplx(scale * it.value()));
    };

    for (int m = 0; m < modes_; ++m) {
        for (int k = 0; k < n_int_; ++k) {
            const int row = m * n_int_ + k;
            const double c = interior_scale_[k];
            for (int n = 0; n < modes_; ++n) t.emplace_back(row, n * n_int_ + k, i * (c * S(m, n)));
            for (SparseReal::InnerIterator it(L, k); it; ++it)
                t.emplace_back(row, m * n_int_ + static_cast<int>(it.col()), cplx(c * it.value()));
        }
    }
    for (int m = 0; m < modes_; ++m) {
        const int row0 = interior_rows_ + m * n_bd_;
        for (int b = 0; b < n_bd_; ++b)
            for (SparseReal::InnerIterator it(B, b); it; ++it)
                t.emplace_back(row0 + b, m * n_int_ + static_cast<int>(it.col()),
                               cplx(boundary_scale_[b] * it.value()));
    }
    const double se = std::sqrt(cfg.epsilon) * h;
    const int block = modes_ * n_int_;
    const int reg0 = interior_rows_ + boundary_rows_;
    for (int m = 0; m < modes_; ++m) {
        const double s0 = se * std::sqrt(cfg.reg.w0);
        for (int k = 0; k < n_int_; ++k) t.emplace_back(reg0 + m * n_int_ + k, m * n_int_ + k, cplx(s0));
        add_rows(reg0 + block + m * n_int_, m, Dx, se * std::sqrt(cfg.reg.w1));
        add_rows(reg0 + 2 * block + m * n_int_, m, Dy, se * std::sqrt(cfg.reg.w1));
        add_rows(reg0 + 3 * block + m * n_int_, m, L, se * std::sqrt(cfg.reg.w2));
    }

    A_.resize(interior_rows_ + boundary_rows_ + reg_rows_, modes_ * n_int_);
    A_.setFromTriplets(t.begin(), t.end());
    A_.makeCompressed();
}

Eigen::VectorXcd FrozenLsOperator::rhs(const ModalBoundaryData& data, const Eigen::MatrixXcd& g) const {
    require(g.rows() == n_int_ && g.cols() == modes_, "frozen term shape mismatch");
    require(data.coeffs.rows() == n_bd_ && data.coeffs.cols() == modes_, "modal boundary data shape mismatch");
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(A_.rows());
    for (int m = 0; m < modes_; ++m) {
        for (int k = 0; k < n_int_; ++k) b[m * n_int_ + k] = -interior_scale_[k] * g(k, m);
        for (int j = 0; j < n_bd_; ++j) b[interior_rows_ + m * n_bd_ + j] = boundary_scale_[j] * data.coeffs(j, m);
    }
    return b;
}

double LeastSquaresProblem::objective(const ModalField& u) const {
    const Eigen::Map<const Eigen::VectorXcd> x(u.coeffs.data(), u.coeffs.size());
    require(x.size() == op->n_unknowns(), "objective: unknown count mismatch");
    return (op->matrix() * x - rhs).squaredNorm();
}

LeastSquaresProblem assemble_frozen_ls(const SpatialGrid& grid, const TimeBasis& basis, const CarlemanWeight& weight,
                                       const ModalBoundaryData& data, const Eigen::MatrixXcd& g,
                                       const InversionConfig& cfg) {
    auto op = std::make_shared<const FrozenLsOperator>(grid, basis, weight, cfg);
    Eigen::VectorXcd b = op->rhs(data, g);
    return {std::move(op), std::move(b)};
}

// ---------------------------------------------------------------------------
// Least-squares solvers

struct LeastSquaresSolver::Impl {
    Eigen::SparseMatrix<cplx> adjoint;
#ifdef NLSRECON_HAVE_CHOLMOD
    Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<cplx>, Eigen::Lower> llt;
#else
    Eigen::SimplicialLLT<Eigen::SparseMatrix<cplx>, Eigen::Lower> llt;
#endif
    Eigen::LeastSquaresConjugateGradient<Eigen::SparseMatrix<cplx>> lscg;
};

LeastSquaresSolver::LeastSquaresSolver(std::shared_ptr<const FrozenLsOperator> op, LsMethod method, double tol,
                                       int max_iter, int direct_limit)
    : op_(std::move(op)), method_(method), tol_(tol), max_iter_(max_iter), impl_(std::make_unique<Impl>()) {
    require(op_ != nullptr, "least-squares solver needs an operator");
    if (method_ == LsMethod::Auto) method_ = op_->n_unknowns() <= direct_limit ? LsMethod::Direct : LsMethod::Iterative;

    const auto& A = op_->matrix();
    impl_->adjoint = A.adjoint();
    if (method_ == LsMethod::Direct) {
        const Eigen::SparseMatrix<cplx> normal = impl_->adjoint * A;
        impl_->llt.compute(normal);
        if (impl_->llt.info() != Eigen::Success)
            throw SolverError("Cholesky factorization of the normal matrix failed");
    } else {
        impl_->lscg.setTolerance(tol_);
        impl_->lscg.setMaxIterations(max_iter_);
        impl_->lscg.compute(A);
    }
}

LeastSquaresSolver::~LeastSquaresSolver() = default;
LeastSquaresSolver::LeastSquaresSolver(LeastSquaresSolver&&) noexcept = default;
LeastSquaresSolver& LeastSquaresSolver::operator=(LeastSquaresSolver&&) noexcept = default;

LsSolution LeastSquaresSolver::solve(const Eigen::VectorXcd& rhs, const Eigen::VectorXcd* guess) const {
    const auto& A = op_->matrix();
    require(rhs.size() == A.rows(), "right-hand side length mismatch");
    const Eigen::VectorXcd atb = impl_->adjoint * rhs;
    const double atb_norm = atb.norm();

    LsSolution out;
    out.method = method_;
    Eigen::VectorXcd x;
    auto normal_residual = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        return atb - impl_->adjoint * (A * v);
    };

    if (atb_norm == 0.0) {
        x = Eigen::VectorXcd::Zero(A.cols());
        out.iterations = 0;
        out.residual = 0.0;
    } else if (method_ == LsMethod::Direct) {
        x = impl_->llt.solve(atb);
        Eigen::VectorXcd r = normal_residual(x);
        double rel = r.norm() / atb_norm;
        int it = 1;
        // iterative refinement
        while (rel > tol_ && it < 6) {
            x += impl_->llt.solve(r);
            r = normal_residual(x);
            rel = r.norm() / atb_norm;
            ++it;
        }
        out.iterations = it;
        out.residual = rel;
        out.converged = rel <= tol_;
    } else {
        if (guess)
            x = impl_->lscg.solveWithGuess(rhs, *guess);
        else
            x = impl_->lscg.solve(rhs);
        out.iterations = static_cast<int>(impl_->lscg.iterations());
        out.residual = normal_residual(x).norm() / atb_norm;
        out.converged = out.residual <= tol_ * 1.0001;
    }
    if (!x.allFinite()) throw SolverError("least-squares solution contains non-finite values", out.residual);
    out.u = ModalField(Eigen::Map<const Eigen::MatrixXcd>(x.data(), op_->n_interior(), op_->mode_count()));
    return out;
}

LsSolution solve_ls(const LeastSquaresProblem& problem, const InversionConfig& cfg) {
    const LeastSquaresSolver solver(problem.op, cfg.ls_method, cfg.ls_tol, cfg.ls_max_iter, cfg.direct_limit);
    return solver.solve(problem.rhs);
}

// ---------------------------------------------------------------------------
// Picard iteration

std::shared_ptr<const LeastSquaresSolver> make_frozen_solver(const SpatialGrid& grid, const TimeBasis& basis,
                                                             const CarlemanWeight& weight,
                                                             const InversionConfig& cfg) {
    auto op = std::make_shared<const FrozenLsOperator>(grid, basis, weight, cfg);
    return std::make_shared<const LeastSquaresSolver>(std::move(op), cfg.ls_method, cfg.ls_tol, cfg.ls_max_iter,
                                                      cfg.direct_limit);
}

PicardMap::PicardMap(const SpatialGrid& grid, const TimeBasis& basis, const CarlemanWeight& weight,
                     const ModalBoundaryData& data, const InversionConfig& cfg, double p, RealField q_field,
                     std::shared_ptr<const LeastSquaresSolver> solver)
    : basis_(basis), data_(data), p_(p), q_(std::move(q_field)), solver_(std::move(solver)) {
    require(p > 1.0, "nonlinearity exponent must exceed 1");
    require(q_.size() == grid.n_interior(), "q field size mismatch");
    if (!solver_) solver_ = make_frozen_solver(grid, basis, weight, cfg);
    const FrozenLsOperator& op = *solver_->op();
    require(op.n_interior() == grid.n_interior() && op.n_boundary() == grid.n_boundary() &&
                op.mode_count() == basis.mode_count(),
            "shared solver was built for a different grid or basis");
}

LsSolution PicardMap::apply(const ModalField& phi) const {
    const Eigen::MatrixXcd g = frozen_nonlinearity(basis_, phi, q_, p_);
    const Eigen::VectorXcd b = solver_->op()->rhs(data_, g);
    const Eigen::Map<const Eigen::VectorXcd> guess(phi.coeffs.data(), phi.coeffs.size());
    const Eigen::VectorXcd x0 = guess;
    return solver_->solve(b, &x0);
}

ReconstructionReport picard_solve(const SpatialGrid& grid, const TimeBasis& basis, const CarlemanWeight& weight,
                                  const ModalBoundaryData& data, const InversionConfig& cfg, double p,
                                  const RealField& q_field, const PicardOptions& options) {
    cfg.validate();
    const PicardMap map(grid, basis, weight, data, cfg, p, q_field, options.solver);

    ReconstructionReport report;
    ModalField u = options.initial_guess ? *options.initial_guess
                                         : ModalField::zero(grid.n_interior(), basis.mode_count());
    require(u.n_nodes() == grid.n_interior() && u.mode_count() == basis.mode_count(),
            "initial guess shape mismatch");

    for (int k = 0; k < cfg.k_max; ++k) {
        LsSolution sol = map.apply(u);
        if (!sol.u.coeffs.allFinite()) throw SolverError("non-finite Picard iterate at step " + std::to_string(k));
        if (!sol.converged)
            report.warnings.push_back("least-squares solve at step " + std::to_string(k) +
                                      " stopped at relative residual " + std::to_string(sol.residual));

        IterationRecord rec;
        rec.index = k;
        rec.rel_change = rel_change(sol.u, u);
        rec.residual = residual_metric(grid, basis, sol.u, frozen_nonlinearity(basis, sol.u, q_field, p));
        rec.ls_iterations = sol.iterations;
        rec.ls_residual = sol.residual;
        if (!std::isfinite(rec.rel_change) || !std::isfinite(rec.residual))
            throw SolverError("non-finite convergence metrics at Picard step " + std::to_string(k));

        const double sup = sol.u.coeffs.cwiseAbs().maxCoeff();
        if (sup > cfg.admissible_bound && !report.bound_exceeded) {
            report.bound_exceeded = true;
            report.warnings.push_back("iterate " + std::to_string(k + 1) + " has sup-norm " + std::to_string(sup) +
                                      " above the admissible bound " + std::to_string(cfg.admissible_bound));
        }
        report.history.push_back(rec);
        if (options.on_iteration) options.on_iteration(rec);
        u = std::move(sol.u);
    }

    report.final_modal = std::move(u);
    report.u0_field = reconstruct_u0(grid, basis, report.final_modal);
    report.amplitude = amplitude_summary(report.u0_field, options.truth_full);
    return report;
}

// ---------------------------------------------------------------------------
// Metrics

double rel_change(const ModalField& u_next, const ModalField& u_prev) {
    require(u_next.coeffs.rows() == u_prev.coeffs.rows() && u_next.coeffs.cols() == u_prev.coeffs.cols(),
            "rel_change: shape mismatch");
    const double denom = u_next.coeffs.norm();
    const double num = (u_next.coeffs - u_prev.coeffs).norm();
    if (denom == 0.0) return num == 0.0 ? 0.0 : 1.0;
    return num / denom;
}

double modal_l2_norm(const SpatialGrid& grid, const Eigen::MatrixXcd& columns) {
    return grid.spacing() * columns.norm();
}

double residual_metric(const SpatialGrid& grid, const TimeBasis& basis, const ModalField& u,
                       const Eigen::MatrixXcd& g_of_u) {
    const double num = modal_l2_norm(grid, reduced_residual(grid, basis, u, g_of_u));
    const double lap = modal_l2_norm(grid, modal_laplacian(grid, u.coeffs));
    return num / std::max(lap, kResidualFloor);
}

Eigen::VectorXcd reconstruct_u0(const SpatialGrid& grid, const TimeBasis& basis, const ModalField& u) {
    require(u.mode_count() == basis.mode_count(), "reconstruct_u0: mode count differs from the basis");
    require(u.n_nodes() == grid.n_interior(), "reconstruct_u0: node count differs from the grid");
    const InteriorField interior = u.coeffs * basis.psi_at_zero().cast<cplx>();
    return grid.to_full(interior);
}

double weighted_error(const SpatialGrid& grid, const ModalField& u, const ModalField& v, const CarlemanWeight& weight,
                      const InversionConfig& cfg) {
    require(u.coeffs.rows() == v.coeffs.rows() && u.coeffs.cols() == v.coeffs.cols(), "weighted_error: shape mismatch");
    require(u.n_nodes() == grid.n_interior(), "weighted_error: node count differs from the grid");
    require(cfg.lambda > 0.0, "weighted_error: lambda must be positive");
    const Eigen::MatrixXcd d = u.coeffs - v.coeffs;
    const double h = grid.spacing();
    const SparseReal B = neumann_trace_matrix(grid);
    const SparseReal Dx = gradient_x_matrix(grid);
    const SparseReal Dy = gradient_y_matrix(grid);

    const Eigen::MatrixXcd bd = B.cast<cplx>() * d;
    const Eigen::MatrixXcd gx = Dx.cast<cplx>() * d;
    const Eigen::MatrixXcd gy = Dy.cast<cplx>() * d;
    const Eigen::MatrixXcd lap = modal_laplacian(grid, d);

    const double interior = h * h * (weight.interior_weight.asDiagonal() * d.cwiseAbs2()).sum();
    const double boundary = 2.0 * h * (weight.boundary_weight.asDiagonal() * bd.cwiseAbs2()).sum();
    const double surrogate = h * h *
                             (cfg.reg.w0 * d.cwiseAbs2().sum() + cfg.reg.w1 * (gx.cwiseAbs2().sum() + gy.cwiseAbs2().sum()) +
                              cfg.reg.w2 * lap.cwiseAbs2().sum());
    const double l3 = cfg.lambda * cfg.lambda * cfg.lambda;
    return std::sqrt(interior + boundary + 2.0 * cfg.epsilon / l3 * surrogate);
}

double weighted_norm(const SpatialGrid& grid, const ModalField& u, const CarlemanWeight& weight,
                     const InversionConfig& cfg) {
    return weighted_error(grid, u, ModalField::zero(u.n_nodes(), u.mode_count()), weight, cfg);
}

AmplitudeSummary amplitude_summary(const Eigen::VectorXcd& u0_full, const std::optional<Eigen::VectorXcd>& truth_full) {
    AmplitudeSummary s;
    s.max_abs_re = u0_full.real().cwiseAbs().maxCoeff();
    s.max_abs_im = u0_full.imag().cwiseAbs().maxCoeff();
    if (truth_full) {
        require(truth_full->size() == u0_full.size(), "truth field size mismatch");
        const double tre = truth_full->real().cwiseAbs().maxCoeff();
        const double tim = truth_full->imag().cwiseAbs().maxCoeff();
        if (tre > 0.0) s.rel_error_re = std::abs(s.max_abs_re - tre) / tre;
        if (tim > 0.0) s.rel_error_im = std::abs(s.max_abs_im - tim) / tim;
    }
    return s;
}

Point inclusion_centroid(const SpatialGrid& grid, const Eigen::VectorXcd& full_field, Component component,
                         double fraction) {
    const int n = grid.n_per_side();
    require(full_field.size() == n * n, "inclusion_centroid: field size mismatch");
    const Eigen::VectorXd c = component == Component::Real ? Eigen::VectorXd(full_field.real())
                                                           : Eigen::VectorXd(full_field.imag());
    const double peak = c.maxCoeff();
    require(peak > 0.0, "inclusion_centroid: component has no positive values");
    double sx = 0.0, sy = 0.0, sw = 0.0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double v = c[grid.full_index({i, j})];
            if (v < fraction * peak) continue;
            const Point p = grid.position({i, j});
            sx += v * p.x;
            sy += v * p.y;
            sw += v;
        }
    }
    return {sx / sw, sy / sw};
}

}  // namespace nlsrecon
