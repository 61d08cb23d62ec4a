#include "nlsrecon/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nlsrecon {

SpatialGrid::SpatialGrid(double half_width, int n_per_side) : half_width_(half_width), n_(n_per_side) {
    require(half_width > 0.0 && std::isfinite(half_width), "grid half width must be positive");
    require(n_per_side >= 5, "grid needs at least 5 nodes per side, got " + std::to_string(n_per_side));
    h_ = 2.0 * half_width / (n_per_side - 1);

    const int last = n_ - 1;
    auto add = [&](int i, int j, int nx, int ny) {
        BoundaryNode b;
        b.at = {i, j};
        b.normal = {nx, ny};
        b.inward1 = interior_index({i - nx, j - ny});
        b.inward2 = interior_index({i - 2 * nx, j - 2 * ny});
        boundary_.push_back(b);
    };
    boundary_.reserve(static_cast<std::size_t>(4 * (n_ - 2)));
    for (int i = 1; i <= last - 1; ++i) add(i, 0, 0, -1);
    for (int j = 1; j <= last - 1; ++j) add(last, j, 1, 0);
    for (int i = last - 1; i >= 1; --i) add(i, last, 0, 1);
    for (int j = last - 1; j >= 1; --j) add(0, j, -1, 0);
}

Eigen::VectorXcd SpatialGrid::to_full(const InteriorField& interior) const {
    require(interior.size() == n_interior(), "interior field size mismatch");
    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(n_ * n_);
    for (int k = 0; k < n_interior(); ++k) full[full_index(interior_lattice(k))] = interior[k];
    return full;
}

InteriorField SpatialGrid::from_full(const Eigen::VectorXcd& full) const {
    require(full.size() == n_ * n_, "full-grid field size mismatch");
    InteriorField out(n_interior());
    for (int k = 0; k < n_interior(); ++k) out[k] = full[full_index(interior_lattice(k))];
    return out;
}

SpatialGrid build_grid(double half_width, int n_per_side) { return SpatialGrid(half_width, n_per_side); }

InteriorField laplacian_apply(const SpatialGrid& grid, const InteriorField& field) {
    require(field.size() == grid.n_interior(), "laplacian_apply: field size mismatch");
    const int m = grid.n_per_side() - 2;
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    InteriorField out(field.size());
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const int k = j * m + i;
            cplx acc = -4.0 * field[k];
            if (i > 0) acc += field[k - 1];
            if (i < m - 1) acc += field[k + 1];
            if (j > 0) acc += field[k - m];
            if (j < m - 1) acc += field[k + m];
            out[k] = acc * inv_h2;
        }
    }
    return out;
}

BoundaryField neumann_trace(const SpatialGrid& grid, const InteriorField& field) {
    require(field.size() == grid.n_interior(), "neumann_trace: field size mismatch");
    const double inv_2h = 1.0 / (2.0 * grid.spacing());
    BoundaryField out(grid.n_boundary());
    const auto& nodes = grid.boundary_nodes();
    for (std::size_t b = 0; b < nodes.size(); ++b)
        out[static_cast<Eigen::Index>(b)] = (field[nodes[b].inward2] - 4.0 * field[nodes[b].inward1]) * inv_2h;
    return out;
}

namespace {

using Triplet = Eigen::Triplet<double>;

SparseReal from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
    SparseReal A(rows, cols);
    A.setFromTriplets(t.begin(), t.end());
    return A;
}

SparseReal difference_matrix(const SpatialGrid& grid, int di, int dj) {
    const double c = 1.0 / (2.0 * grid.spacing());
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(2 * grid.n_interior()));
    for (int k = 0; k < grid.n_interior(); ++k) {
        const LatticeIndex p = grid.interior_lattice(k);
        const int fwd = grid.interior_index({p.i + di, p.j + dj});
        const int bwd = grid.interior_index({p.i - di, p.j - dj});
        if (fwd >= 0) t.emplace_back(k, fwd, c);
        if (bwd >= 0) t.emplace_back(k, bwd, -c);
    }
    return from_triplets(grid.n_interior(), grid.n_interior(), t);
}

}  // namespace

SparseReal laplacian_matrix(const SpatialGrid& grid) {
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(5 * grid.n_interior()));
    for (int k = 0; k < grid.n_interior(); ++k) {
        const LatticeIndex p = grid.interior_lattice(k);
        t.emplace_back(k, k, -4.0 * inv_h2);
        for (auto [di, dj] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
            const int nb = grid.interior_index({p.i + di, p.j + dj});
            if (nb >= 0) t.emplace_back(k, nb, inv_h2);
        }
    }
    return from_triplets(grid.n_interior(), grid.n_interior(), t);
}

SparseReal neumann_trace_matrix(const SpatialGrid& grid) {
    const double inv_2h = 1.0 / (2.0 * grid.spacing());
    std::vector<Triplet> t;
    const auto& nodes = grid.boundary_nodes();
    for (std::size_t b = 0; b < nodes.size(); ++b) {
        t.emplace_back(static_cast<int>(b), nodes[b].inward1, -4.0 * inv_2h);
        t.emplace_back(static_cast<int>(b), nodes[b].inward2, inv_2h);
    }
    return from_triplets(grid.n_boundary(), grid.n_interior(), t);
}

SparseReal gradient_x_matrix(const SpatialGrid& grid) { return difference_matrix(grid, 1, 0); }
SparseReal gradient_y_matrix(const SpatialGrid& grid) { return difference_matrix(grid, 0, 1); }

double distance_to_square(Point p, double R) {
    const double dx = std::max(std::abs(p.x) - R, 0.0);
    const double dy = std::max(std::abs(p.y) - R, 0.0);
    return std::hypot(dx, dy);
}

double max_distance_to_square(Point p, double R) { return std::hypot(std::abs(p.x) + R, std::abs(p.y) + R); }

double CarlemanWeight::at(Point p) const {
    const double r = std::hypot(p.x - focus.x, p.y - focus.y);
    return std::exp(2.0 * lambda * std::pow(r, -beta));
}

CarlemanWeight build_weight(const SpatialGrid& grid, Point focus, double lambda, double beta) {
    require(std::isfinite(lambda) && lambda >= 0.0, "Carleman lambda must be nonnegative");
    require(std::isfinite(beta) && beta > 0.0, "Carleman beta must be positive");
    const double r_min = distance_to_square(focus, grid.half_width());
    require(r_min > 1e-12, "Carleman focus must lie strictly outside the closed domain");
    const double exponent = 2.0 * lambda * std::pow(r_min, -beta);
    if (exponent > 700.0)
        throw InvalidArgument("Carleman weight overflows: 2 lambda r_min^-beta = " + std::to_string(exponent) +
                              " > 700");

    CarlemanWeight w;
    w.focus = focus;
    w.lambda = lambda;
    w.beta = beta;
    w.interior_weight.resize(grid.n_interior());
    for (int k = 0; k < grid.n_interior(); ++k) w.interior_weight[k] = w.at(grid.interior_position(k));
    w.boundary_weight.resize(grid.n_boundary());
    for (int b = 0; b < grid.n_boundary(); ++b) w.boundary_weight[b] = w.at(grid.boundary_position(b));
    w.boundary_weight_scaled = lambda * lambda * lambda * w.boundary_weight;
    return w;
}

CarlemanRatio carleman_diagnostic(const SpatialGrid& grid, const CarlemanWeight& weight, const InteriorField& field) {
    require(field.size() == grid.n_interior(), "carleman_diagnostic: field size mismatch");
    require(weight.interior_weight.size() == grid.n_interior(), "carleman_diagnostic: weight built for another grid");
    const int n = grid.n_per_side();
    for (int k = 0; k < grid.n_interior(); ++k) {
        const LatticeIndex p = grid.interior_lattice(k);
        const bool near_edge = p.i <= 2 || p.j <= 2 || p.i >= n - 3 || p.j >= n - 3;
        if (near_edge && field[k] != cplx(0.0))
            throw InvalidArgument("carleman_diagnostic: field must vanish on the two layers next to the boundary");
    }
    if (field.cwiseAbs().maxCoeff() == 0.0)
        throw InvalidArgument("carleman_diagnostic: zero field gives an undefined ratio");

    const double h2 = grid.spacing() * grid.spacing();
    const InteriorField lap = laplacian_apply(grid, field);
    const InteriorField gx = gradient_x_matrix(grid).cast<cplx>() * field;
    const InteriorField gy = gradient_y_matrix(grid).cast<cplx>() * field;
    const double l = weight.lambda;
    double num = 0.0, den = 0.0;
    for (int k = 0; k < grid.n_interior(); ++k) {
        const double w = weight.interior_weight[k];
        num += w * std::norm(lap[k]);
        den += w * (l * l * l * std::norm(field[k]) + l * (std::norm(gx[k]) + std::norm(gy[k])));
    }
    num *= h2;
    den *= h2;
    return {l, num, den, num / den};
}

}  // namespace nlsrecon
