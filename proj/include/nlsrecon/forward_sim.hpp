#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "nlsrecon/spatial_grid.hpp"
#include "nlsrecon/time_basis.hpp"
#include "nlsrecon/types.hpp"

namespace nlsrecon {

// Phantom primitives. Every inequality matches the test definitions: disks use
// strict <, rectangles, annuli and strips are closed, the square ring is
// half-open [inner, outer).
struct Disk {
    double cx, cy, radius;
};
struct AxisRect {
    double x_min, x_max, y_min, y_max;
};
struct SquareRing {
    double cx, cy, outer_half_width, inner_half_width;
};
struct Annulus {
    double cx, cy, r_in, r_out;
};
/// |y + a x + b| <= half_width inside the bounding box.
struct SlantedStrip {
    double a, b, half_width;
    AxisRect box;
};
using Shape = std::variant<Disk, AxisRect, SquareRing, Annulus, SlantedStrip>;

bool contains(const Shape& shape, Point p);

enum class Component { Real, Imag };

/// amplitude * indicator(union of shapes), added to the chosen component.
/// Separate inclusions are summed.
struct Inclusion {
    std::vector<Shape> shapes;
    double amplitude = 1.0;
    Component target = Component::Real;
};

struct Phantom {
    std::vector<Inclusion> parts;

    cplx value(Point p) const;

    static Phantom test1();  ///< two disks, p = 2
    static Phantom test2();  ///< two disks + square ring, p = 3
    static Phantom test3();  ///< annulus + letter N, p = 5
};

/// Interior field of the phantom sampled at node positions.
InteriorField rasterize_phantom(const SpatialGrid& grid, const Phantom& phantom);
/// Full-grid version (boundary values included as sampled).
Eigen::VectorXcd rasterize_phantom_full(const SpatialGrid& grid, const Phantom& phantom);

/// Neumann data f(x_b, t_n) on the boundary list x time levels.
struct SpaceTimeTrace {
    GridDescriptor grid;
    UniformTimeGrid times;
    Eigen::MatrixXcd values;  ///< (n_boundary, n_levels)
    double noise_level = 0.0;
    std::uint64_t seed = 0;
};

/// Semi-implicit step: (i/dt + Lap_h) u_next = (i/dt) u - q |u|^{p-1} u.
/// The operator is built once; BiCGSTAB with a diagonal preconditioner.
class SchrodingerStepper {
public:
    SchrodingerStepper(const SpatialGrid& grid, double dt, double p, RealField q_field,
                       double tolerance = 1e-10);

    InteriorField step(const InteriorField& u) const;
    int last_iterations() const { return last_iterations_; }

private:
    double dt_;
    double p_;
    RealField q_;
    Eigen::SparseMatrix<cplx> op_;
    Eigen::BiCGSTAB<Eigen::SparseMatrix<cplx>, Eigen::DiagonalPreconditioner<cplx>> solver_;
    double tolerance_;
    mutable int last_iterations_ = 0;
};

InteriorField step(const SpatialGrid& grid, const InteriorField& u, double dt, double p, const RealField& q_field);

/// |u|^{p-1} u, zero where u = 0.
cplx power_nonlinearity(cplx u, double p);

/// Uniform time grid for (T, dt); T/dt must be an integer to 1e-9.
UniformTimeGrid make_time_grid(double horizon, double dt);

/// Observer called with (level n, u^n) for every level including 0 and N_t.
using StepObserver = std::function<void(int, const InteriorField&)>;

struct ForwardResult {
    SpaceTimeTrace trace;
    InteriorField final_field;
};

ForwardResult simulate(const SpatialGrid& grid, const InteriorField& u0, double horizon, double dt, double p,
                       const RealField& q_field, const StepObserver& observer = {});

SpaceTimeTrace run_forward(const SpatialGrid& grid, const Phantom& phantom, double horizon, double dt, double p,
                           const RealField& q_field);

/// SplitMix64 evaluated on a counter: value k of stream `seed` is mix(seed + (k+1) * golden).
/// Platform independent; used for reproducible noise.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
    std::uint64_t operator()(std::uint64_t counter) const;
    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform(std::uint64_t counter) const;

private:
    std::uint64_t seed_;
};

/// f (1 + delta z), z uniform on the closed unit disk (rejection from the square),
/// drawn in (node, time) order from CounterRng(seed).
SpaceTimeTrace add_noise(const SpaceTimeTrace& trace, double delta, std::uint64_t seed);

}  // namespace nlsrecon
