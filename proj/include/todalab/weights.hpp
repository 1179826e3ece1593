// Singular weight assembly: h = e^sigma with
//   sigma = f - 4 pi sum_j alpha_j G(., p_j),
// f continuous and subharmonic, alpha_j > 0, p_j interior points snapped to
// grid nodes. Since G(., p) blows up like -(1/2 pi) log|x - p| at the pole,
// h vanishes like |x - p|^{2 alpha} there; the value at a source node is
// defined as the limit 0, which keeps every integral of h e^u finite without
// special quadrature.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "todalab/poisson.hpp"

namespace todalab {

struct SingularSource {
    double x = 0.0, y = 0.0;  // requested location, strictly interior
    double alpha = 0.0;       // singularity strength, > 0
    int node_i = 0, node_j = 0;  // snapped grid node (1-based)
};

inline SingularSource snap_source(const DomainGrid& g, double x, double y, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("singular source: alpha must be positive");
    if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0))
        throw std::invalid_argument("singular source: point must lie strictly inside the unit square");
    SingularSource s;
    s.x = x;
    s.y = y;
    s.alpha = alpha;
    s.node_i = std::min(g.n, std::max(1, static_cast<int>(std::lround(x / g.h))));
    s.node_j = std::min(g.n, std::max(1, static_cast<int>(std::lround(y / g.h))));
    return s;
}

struct WeightField {
    GridField h_values;               // h = e^sigma, 0 at source nodes
    GridField f;                      // the continuous subharmonic part
    std::vector<SingularSource> sources;
};

// f presets. The general subharmonic class is accepted as raw node values;
// subharmonicity of user-supplied f is not checked.
inline GridField f_zero(const DomainGrid& g) { return GridField(g); }

inline GridField f_quadratic(const DomainGrid& g, double c, double x0, double y0) {
    if (c < 0.0) throw std::invalid_argument("f_quadratic: coefficient must be >= 0 (subharmonic)");
    return sample_field(g, [&](double x, double y) {
        const double dx = x - x0, dy = y - y0;
        return c * (dx * dx + dy * dy);
    });
}

inline WeightField assemble_weight(const PoissonSolver& solver, const GridField& f,
                                   const std::vector<SingularSource>& sources) {
    const DomainGrid& g = solver.grid();
    if (f.n != g.n) throw std::invalid_argument("assemble_weight: f/grid mismatch");
    WeightField w;
    w.f = f;
    w.sources = sources;
    Eigen::VectorXd sigma = f.values;
    for (const SingularSource& s : sources) {
        if (!(s.alpha > 0.0)) throw std::invalid_argument("assemble_weight: alpha must be positive");
        const GridField green = greens_function(solver, s.node_i, s.node_j);
        sigma -= (4.0 * std::numbers::pi * s.alpha) * green.values;
    }
    w.h_values = GridField(g, sigma.array().exp().matrix());
    for (const SingularSource& s : sources) w.h_values.values[g.index(s.node_i, s.node_j)] = 0.0;
    if (!(integrate(g, w.h_values) > 0.0))
        throw std::runtime_error("assemble_weight: weight has nonpositive total mass");
    return w;
}

inline WeightField unit_weight(const DomainGrid& g) {
    WeightField w;
    w.f = GridField(g);
    w.h_values = GridField(g, 1.0);
    return w;
}

}  // namespace todalab
