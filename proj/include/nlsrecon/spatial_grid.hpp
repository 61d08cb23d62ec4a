#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nlsrecon/types.hpp"

namespace nlsrecon {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Lattice coordinates on the full grid, 0 <= i, j < n_per_side (i along x).
struct LatticeIndex {
    int i = 0;
    int j = 0;
};

/// An edge node carrying Neumann data. Corners are excluded.
struct BoundaryNode {
    LatticeIndex at;
    std::array<int, 2> normal;  ///< outward, one of (+-1, 0), (0, +-1)
    int inward1;                ///< interior index of the neighbour at distance h along -normal
    int inward2;                ///< interior index at distance 2h
};

/// Grid size and extent; enough to rebuild a SpatialGrid.
struct GridDescriptor {
    double half_width = 1.0;
    int n_per_side = 0;
    friend bool operator==(const GridDescriptor&, const GridDescriptor&) = default;
};

/// Uniform Cartesian grid on (-R, R)^2 with n_per_side nodes per side,
/// boundary included. Unknowns live on the (n-2)^2 interior nodes, ordered
/// row-major (y outer, x inner); boundary values are zero (Dirichlet).
///
/// Boundary list order: bottom edge left to right, right edge bottom to top,
/// top edge right to left, left edge top to bottom.
class SpatialGrid {
public:
    SpatialGrid(double half_width, int n_per_side);

    double half_width() const { return half_width_; }
    int n_per_side() const { return n_; }
    double spacing() const { return h_; }
    int n_interior() const { return (n_ - 2) * (n_ - 2); }
    int n_boundary() const { return static_cast<int>(boundary_.size()); }
    GridDescriptor descriptor() const { return {half_width_, n_}; }

    double coord(int i) const { return -half_width_ + i * h_; }
    Point position(LatticeIndex p) const { return {coord(p.i), coord(p.j)}; }
    Point interior_position(int k) const { return position(interior_lattice(k)); }
    Point boundary_position(int b) const { return position(boundary_[static_cast<std::size_t>(b)].at); }

    /// Flat interior index, or -1 for a node on the boundary or off the grid.
    int interior_index(LatticeIndex p) const {
        if (p.i < 1 || p.j < 1 || p.i > n_ - 2 || p.j > n_ - 2) return -1;
        return (p.j - 1) * (n_ - 2) + (p.i - 1);
    }
    LatticeIndex interior_lattice(int k) const { return {k % (n_ - 2) + 1, k / (n_ - 2) + 1}; }
    /// Row-major index into a full-grid field.
    int full_index(LatticeIndex p) const { return p.j * n_ + p.i; }

    const std::vector<BoundaryNode>& boundary_nodes() const { return boundary_; }

    /// Embed an interior field into the full grid (zeros on the boundary).
    Eigen::VectorXcd to_full(const InteriorField& interior) const;
    InteriorField from_full(const Eigen::VectorXcd& full) const;

private:
    double half_width_;
    int n_;
    double h_;
    std::vector<BoundaryNode> boundary_;
};

SpatialGrid build_grid(double half_width, int n_per_side);
inline SpatialGrid build_grid(const GridDescriptor& d) { return build_grid(d.half_width, d.n_per_side); }

/// 5-point Laplacian with homogeneous Dirichlet values.
InteriorField laplacian_apply(const SpatialGrid& grid, const InteriorField& field);
/// Second-order one-sided outward normal derivative, (u2 - 4 u1) / (2h).
BoundaryField neumann_trace(const SpatialGrid& grid, const InteriorField& field);

using SparseReal = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Matrix forms of the stencils above, for assembly.
SparseReal laplacian_matrix(const SpatialGrid& grid);
SparseReal neumann_trace_matrix(const SpatialGrid& grid);
/// Centered differences d/dx and d/dy with zero values off the interior.
SparseReal gradient_x_matrix(const SpatialGrid& grid);
SparseReal gradient_y_matrix(const SpatialGrid& grid);

/// Carleman weight e^{2 lambda r^{-beta}}, r = |x - focus|, focus outside the closed square.
struct CarlemanWeight {
    Point focus;
    double lambda = 0.0;
    double beta = 0.0;
    RealField interior_weight;
    RealField boundary_weight;
    /// lambda^3 * boundary_weight, the factor of the boundary term in the functional.
    RealField boundary_weight_scaled;

    double at(Point p) const;
};

/// Distance from a point to the closed square [-R, R]^2 (0 inside).
double distance_to_square(Point p, double half_width);
/// Largest distance from a point to the closed square.
double max_distance_to_square(Point p, double half_width);

CarlemanWeight build_weight(const SpatialGrid& grid, Point focus, double lambda, double beta);

struct CarlemanRatio {
    double lambda;
    double numerator;    ///< sum w |Lap_h u|^2 h^2
    double denominator;  ///< sum w (lambda^3 |u|^2 + lambda |grad_h u|^2) h^2
    double ratio;
};

/// Discrete ratio of the two sides of the boundary-free Carleman inequality for
/// a field vanishing on the two layers next to the boundary.
CarlemanRatio carleman_diagnostic(const SpatialGrid& grid, const CarlemanWeight& weight, const InteriorField& field);

}  // namespace nlsrecon
