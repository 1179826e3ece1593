// Dirichlet Poisson solves on the grid: the (4,-1) stiffness matrix
// L = h^2 (-Delta_h), factored once per grid and reused for Poisson solves,
// discrete Green's functions and harmonic extensions of boundary data.
//
// Conventions: for interior vectors u, v the bilinear form u' L v is the
// discrete Dirichlet energy integral of grad(u).grad(v); the mass inner
// product is h^2 u'v. The discrete Green's function G_p solves
// -Delta_h G_p = delta_p^h with delta_p^h = 1/h^2 at node p, so L G_p = e_p
// and its total discrete mass integral(-Delta_h G_p) is exactly 1.

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "todalab/grid.hpp"

namespace todalab {

inline Eigen::SparseMatrix<double> build_stiffness(const DomainGrid& g) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(5) * g.count);
    for (int j = 1; j <= g.n; ++j)
        for (int i = 1; i <= g.n; ++i) {
            const int k = g.index(i, j);
            trip.emplace_back(k, k, 4.0);
            if (i > 1) trip.emplace_back(k, g.index(i - 1, j), -1.0);
            if (i < g.n) trip.emplace_back(k, g.index(i + 1, j), -1.0);
            if (j > 1) trip.emplace_back(k, g.index(i, j - 1), -1.0);
            if (j < g.n) trip.emplace_back(k, g.index(i, j + 1), -1.0);
        }
    Eigen::SparseMatrix<double> l(g.count, g.count);
    l.setFromTriplets(trip.begin(), trip.end());
    return l;
}

class PoissonSolver {
  public:
    explicit PoissonSolver(const DomainGrid& g) : grid_(g), stiffness_(build_stiffness(g)) {
        factor_.compute(stiffness_);
        if (factor_.info() != Eigen::Success)
            throw std::runtime_error("PoissonSolver: Cholesky factorization failed");
    }

    const DomainGrid& grid() const { return grid_; }
    const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }

    /// Solve L x = b with one step of iterative refinement.
    Eigen::VectorXd solve_raw(const Eigen::VectorXd& b) const {
        Eigen::VectorXd x = factor_.solve(b);
        x += factor_.solve(b - stiffness_ * x);
        return x;
    }

    /// -Delta_h u = rhs, u = 0 on the boundary. Verifies the sup-norm
    /// residual against 1e-10 * |rhs|_inf and reports breakdown.
    GridField solve(const GridField& rhs) const {
        if (rhs.n != grid_.n) throw std::invalid_argument("poisson_solve: field/grid mismatch");
        const double h2 = grid_.h * grid_.h;
        Eigen::VectorXd u = solve_raw(h2 * rhs.values);
        const double scale = rhs.values.lpNorm<Eigen::Infinity>();
        const double resid = (stiffness_ * u - h2 * rhs.values).lpNorm<Eigen::Infinity>() / h2;
        if (!u.allFinite() || resid > 1e-10 * (scale > 0 ? scale : 1.0))
            throw std::runtime_error("poisson_solve: linear solver breakdown, residual " + std::to_string(resid));
        return GridField(grid_, std::move(u));
    }

  private:
    DomainGrid grid_;
    Eigen::SparseMatrix<double> stiffness_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> factor_;
};

/// Discrete Green's function with pole at interior node (i, j):
/// -Delta_h G = delta^h, G = 0 on the boundary. G >= 0 by the M-matrix
/// structure of L.
inline GridField greens_function(const PoissonSolver& solver, int i, int j) {
    const DomainGrid& g = solver.grid();
    if (!g.interior(i, j))
        throw std::invalid_argument("greens_function: pole must be an interior grid node");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(g.count);
    e[g.index(i, j)] = 1.0;
    return GridField(g, solver.solve_raw(e));
}

/// Solve -Delta_h u = rhs with boundary values u = bdata(x, y) on the four
/// sides; the boundary data enters the right-hand side through the stencil.
inline GridField poisson_solve_dirichlet(const PoissonSolver& solver, const GridField& rhs,
                                         const std::function<double(double, double)>& bdata) {
    const DomainGrid& g = solver.grid();
    const double h2 = g.h * g.h;
    Eigen::VectorXd b = h2 * rhs.values;
    for (int j = 1; j <= g.n; ++j)
        for (int i = 1; i <= g.n; ++i) {
            const int k = g.index(i, j);
            if (i == 1) b[k] += bdata(0.0, g.h * j);
            if (i == g.n) b[k] += bdata(1.0, g.h * j);
            if (j == 1) b[k] += bdata(g.h * i, 0.0);
            if (j == g.n) b[k] += bdata(g.h * i, 1.0);
        }
    return GridField(g, solver.solve_raw(b));
}

/// Harmonic extension of boundary data (zero right-hand side).
inline GridField harmonic_extension(const PoissonSolver& solver,
                                    const std::function<double(double, double)>& bdata) {
    return poisson_solve_dirichlet(solver, GridField(solver.grid()), bdata);
}

}  // namespace todalab
