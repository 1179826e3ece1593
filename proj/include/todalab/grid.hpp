// Uniform Dirichlet grid on the unit square and scalar fields on it.
// N interior nodes per axis, spacing h = 1/(N+1); node (i,j), 1 <= i,j <= N,
// sits at (i h, j h). Fields store interior values only; the boundary value
// is a single constant (0 for ordinary Dirichlet fields, free for the
// constant-boundary eigenproblem).

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace todalab {

struct DomainGrid {
    int n = 0;        // interior nodes per axis
    double h = 0.0;   // spacing
    int count = 0;    // n * n

    int index(int i, int j) const { return (j - 1) * n + (i - 1); }  // 1-based (i,j)
    double x(int k) const { return h * (k % n + 1); }
    double y(int k) const { return h * (k / n + 1); }
    bool interior(int i, int j) const { return i >= 1 && i <= n && j >= 1 && j <= n; }
};

inline DomainGrid build_grid(int n) {
    if (n < 7) throw std::invalid_argument("build_grid: need at least 7 interior nodes per axis");
    DomainGrid g;
    g.n = n;
    g.h = 1.0 / (n + 1);
    g.count = n * n;
    return g;
}

struct GridField {
    int n = 0;
    Eigen::VectorXd values;
    double boundary_constant = 0.0;

    GridField() = default;
    explicit GridField(const DomainGrid& g, double fill = 0.0)
        : n(g.n), values(Eigen::VectorXd::Constant(g.count, fill)) {}
    GridField(const DomainGrid& g, Eigen::VectorXd v) : n(g.n), values(std::move(v)) {}
};

/// Quadrature Sum h^2 * value over interior nodes. Boundary contributes
/// nothing: it has measure zero and Dirichlet data vanishes there.
inline double integrate(const DomainGrid& g, const GridField& f) {
    if (f.n != g.n) throw std::invalid_argument("integrate: field/grid mismatch");
    return g.h * g.h * f.values.sum();
}

inline double integrate(const DomainGrid& g, const Eigen::VectorXd& v) {
    return g.h * g.h * v.sum();
}

/// 5-point discrete Laplacian, -Delta_h. Neighbors outside the interior take
/// the field's boundary constant.
inline GridField laplacian_apply(const DomainGrid& g, const GridField& f) {
    if (f.n != g.n) throw std::invalid_argument("laplacian_apply: field/grid mismatch");
    GridField out(g);
    const double inv_h2 = 1.0 / (g.h * g.h);
    const double c = f.boundary_constant;
    for (int j = 1; j <= g.n; ++j)
        for (int i = 1; i <= g.n; ++i) {
            const int k = g.index(i, j);
            auto at = [&](int ii, int jj) {
                return g.interior(ii, jj) ? f.values[g.index(ii, jj)] : c;
            };
            out.values[k] = (4.0 * f.values[k] - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1)) * inv_h2;
        }
    return out;
}

/// Evaluate a callable f(x, y) at every interior node.
template <typename F>
GridField sample_field(const DomainGrid& g, F&& f) {
    GridField out(g);
    for (int k = 0; k < g.count; ++k) out.values[k] = f(g.x(k), g.y(k));
    return out;
}

}  // namespace todalab
