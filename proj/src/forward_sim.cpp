#include "nlsrecon/forward_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nlsrecon {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool in_box(const AxisRect& r, Point p) { return p.x >= r.x_min && p.x <= r.x_max && p.y >= r.y_min && p.y <= r.y_max; }

}  // namespace

bool contains(const Shape& shape, Point p) {
    return std::visit(
        overloaded{
            [&](const Disk& d) {
                const double dx = p.x - d.cx, dy = p.y - d.cy;
                return dx * dx + dy * dy < d.radius * d.radius;
            },
            [&](const AxisRect& r) { return in_box(r, p); },
            [&](const SquareRing& s) {
                const double d = std::max(std::abs(p.x - s.cx), std::abs(p.y - s.cy));
                return d < s.outer_half_width && d >= s.inner_half_width;
            },
            [&](const Annulus& a) {
                const double r = std::hypot(p.x - a.cx, p.y - a.cy);
                return r >= a.r_in && r <= a.r_out;
            },
            [&](const SlantedStrip& s) { return std::abs(p.y + s.a * p.x + s.b) <= s.half_width && in_box(s.box, p); },
        },
        shape);
}

cplx Phantom::value(Point p) const {
    cplx v = 0.0;
    for (const auto& inc : parts) {
        const bool inside = std::any_of(inc.shapes.begin(), inc.shapes.end(), [&](const Shape& s) { return contains(s, p); });
        if (!inside) continue;
        if (inc.target == Component::Real)
            v += cplx(inc.amplitude, 0.0);
        else
            v += cplx(0.0, inc.amplitude);
    }
    return v;
}

Phantom Phantom::test1() {
    Phantom ph;
    ph.parts.push_back({{Disk{-0.25, 0.15, 0.18}}, 1.0, Component::Real});
    ph.parts.push_back({{Disk{0.20, -0.20, 0.24}}, 1.5, Component::Imag});
    return ph;
}

Phantom Phantom::test2() {
    Phantom ph;
    ph.parts.push_back({{Disk{-0.35, 0.15, 0.30}}, 2.0, Component::Real});
    ph.parts.push_back({{Disk{0.30, -0.25, 0.30}}, 2.0, Component::Real});
    ph.parts.push_back({{SquareRing{0.05, 0.05, 0.60, 0.42}}, 2.0, Component::Imag});
    return ph;
}

Phantom Phantom::test3() {
    Phantom ph;
    ph.parts.push_back({{Annulus{0.0, 0.0, 0.24, 0.52}}, 1.0, Component::Real});
    // Letter N: the three strokes overlap, so they form one union-valued inclusion.
    ph.parts.push_back({{AxisRect{-0.42, -0.24, -0.42, 0.42}, AxisRect{0.20, 0.38, -0.42, 0.42},
                         SlantedStrip{1.55, 0.06, 0.10, AxisRect{-0.30, 0.26, -0.42, 0.42}}},
                        1.0,
                        Component::Imag});
    return ph;
}

InteriorField rasterize_phantom(const SpatialGrid& grid, const Phantom& phantom) {
    InteriorField u(grid.n_interior());
    for (int k = 0; k < grid.n_interior(); ++k) u[k] = phantom.value(grid.interior_position(k));
    return u;
}

Eigen::VectorXcd rasterize_phantom_full(const SpatialGrid& grid, const Phantom& phantom) {
    const int n = grid.n_per_side();
    Eigen::VectorXcd u(n * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) u[grid.full_index({i, j})] = phantom.value(grid.position({i, j}));
    return u;
}

cplx power_nonlinearity(cplx u, double p) {
    const double r = std::abs(u);
    if (r == 0.0) return 0.0;
    return std::pow(r, p - 1.0) * u;
}

SchrodingerStepper::SchrodingerStepper(const SpatialGrid& grid, double dt, double p, RealField q_field,
                                       double tolerance)
    : dt_(dt), p_(p), q_(std::move(q_field)), tolerance_(tolerance) {
    require(dt > 0.0 && std::isfinite(dt), "time step must be positive");
    require(p > 1.0, "nonlinearity exponent must exceed 1");
    require(q_.size() == grid.n_interior(), "q field size mismatch");
    op_ = laplacian_matrix(grid).cast<cplx>();
    for (int k = 0; k < op_.rows(); ++k) op_.coeffRef(k, k) += cplx(0.0, 1.0 / dt);
    op_.makeCompressed();
    solver_.setTolerance(tolerance_);
    solver_.setMaxIterations(1000);
    solver_.compute(op_);
}

InteriorField SchrodingerStepper::step(const InteriorField& u) const {
    require(u.size() == q_.size(), "stepper: field size mismatch");
    const cplx i_dt(0.0, 1.0 / dt_);
    InteriorField rhs(u.size());
    for (int k = 0; k < u.size(); ++k) rhs[k] = i_dt * u[k] - q_[k] * power_nonlinearity(u[k], p_);
    if (!rhs.allFinite()) throw SolverError("non-finite values in the Schrodinger step right-hand side");
    if (rhs.squaredNorm() == 0.0) {
        last_iterations_ = 0;
        return InteriorField::Zero(u.size());
    }
    InteriorField next = solver_.solveWithGuess(rhs, u);
    last_iterations_ = static_cast<int>(solver_.iterations());
    const double rel = (op_ * next - rhs).norm() / rhs.norm();
    if (solver_.info() != Eigen::Success || !(rel <= tolerance_ * 10.0))
        throw SolverError("Schrodinger step linear solve did not converge (relative residual " +
                              std::to_string(rel) + ")",
                          rel);
    if (!next.allFinite()) throw SolverError("non-finite values after the Schrodinger step");
    return next;
}

InteriorField step(const SpatialGrid& grid, const InteriorField& u, double dt, double p, const RealField& q_field) {
    return SchrodingerStepper(grid, dt, p, q_field).step(u);
}

UniformTimeGrid make_time_grid(double horizon, double dt) {
    require(horizon > 0.0 && dt > 0.0, "horizon and time step must be positive");
    const double ratio = horizon / dt;
    const long n = std::lround(ratio);
    require(n >= 1 && std::abs(ratio - static_cast<double>(n)) <= 1e-9 * std::max(1.0, ratio),
            "T / dt must be an integer");
    return {horizon / static_cast<double>(n), static_cast<int>(n)};
}

ForwardResult simulate(const SpatialGrid& grid, const InteriorField& u0, double horizon, double dt, double p,
                       const RealField& q_field, const StepObserver& observer) {
    require(u0.size() == grid.n_interior(), "initial field size mismatch");
    const UniformTimeGrid tg = make_time_grid(horizon, dt);
    const SchrodingerStepper stepper(grid, tg.dt, p, q_field);

    ForwardResult out;
    out.trace.grid = grid.descriptor();
    out.trace.times = tg;
    out.trace.values.resize(grid.n_boundary(), tg.n_levels());

    InteriorField u = u0;
    for (int n = 0;; ++n) {
        out.trace.values.col(n) = neumann_trace(grid, u);
        if (observer) observer(n, u);
        if (n == tg.n_steps) break;
        u = stepper.step(u);
    }
    out.final_field = std::move(u);
    return out;
}

SpaceTimeTrace run_forward(const SpatialGrid& grid, const Phantom& phantom, double horizon, double dt, double p,
                           const RealField& q_field) {
    return simulate(grid, rasterize_phantom(grid, phantom), horizon, dt, p, q_field).trace;
}

std::uint64_t CounterRng::operator()(std::uint64_t counter) const {
    std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double CounterRng::uniform(std::uint64_t counter) const {
    return static_cast<double>((*this)(counter) >> 11) * 0x1.0p-53;
}

SpaceTimeTrace add_noise(const SpaceTimeTrace& trace, double delta, std::uint64_t seed) {
    require(delta >= 0.0 && std::isfinite(delta), "noise level must be nonnegative");
    SpaceTimeTrace out = trace;
    out.noise_level = delta;
    out.seed = seed;
    if (delta == 0.0) return out;

    const CounterRng rng(seed);
    std::uint64_t counter = 0;
    for (Eigen::Index b = 0; b < trace.values.rows(); ++b) {
        for (Eigen::Index n = 0; n < trace.values.cols(); ++n) {
            double x, y;
            do {
                x = 2.0 * rng.uniform(counter++) - 1.0;
                y = 2.0 * rng.uniform(counter++) - 1.0;
            } while (x * x + y * y > 1.0);
            out.values(b, n) = trace.values(b, n) * (1.0 + delta * cplx(x, y));
        }
    }
    return out;
}

}  // namespace nlsrecon
