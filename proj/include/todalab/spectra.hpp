// Linearized eigenvalue certificates for solved Toda states.
//
// Around a solution with densities V_i = lambda_i h_i e^{u_i} / m_i the
// linearized system, after projecting out the mean-field averages, reads
//
//   -Delta phi_i = sum_j a_ij V_j phi_j,  phi_i = c_i on the boundary,
//   integral(V_i phi_i) = 0,
//
// and non-degeneracy amounts to this having only the trivial solution. The
// certificate assembles, in the symmetrized variables (matrix A^s, densities
// V_i^s = d_i V_i, rho = rho(A^s)):
//
//   mu1_i : first eigenvalue of -Delta phi - rho V_i^s phi = mu V_i^s phi,
//           zero boundary (positive when rho lambda_i^s <= 4 pi);
//   mu2_i : the same operator minimized over phi with a free constant
//           boundary value and the side condition integral(V_i^s phi) = 0
//           (positive when rho lambda_i^s <= 8 pi);
//   nu1/nu2 : the same spectrum through the subsolution route, normalized as
//           -Delta phi - W phi = nu W phi with W = rho V_i^s, after checking
//           nodewise that u_i is a subsolution of -Delta u = W e^{u - u_i};
//   coupled_min : minimum of
//           Q(phi) = sum_ij (a^s)^{ij} <grad phi_i, grad phi_j> - sum_i int V_i^s phi_i^2
//           against B(phi) = sum_i int V_i^s phi_i^2 over the zero-boundary
//           block space restricted to the constraints int V_i^s phi_i = 0
//           (the weak-solution space of the c = 0 problem); the unconstrained
//           and constant-boundary variants are reported as diagnostics.
//
// All of these reduce to largest-eigenvalue problems for a pencil
// (mass, stiffness) with positive definite stiffness; see pencil.hpp. A
// positivity margin below 1e-10 is reported as inconclusive, never as a pass.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "todalab/pencil.hpp"
#include "todalab/toda.hpp"

namespace todalab {

struct DensityField {
    GridField V;
    double lambda = 0.0;
};

/// V_i = lambda_i h_i e^{u_i} / m_i; integral(V_i) = lambda_i by construction,
/// verified to 1e-10 relative.
inline std::vector<DensityField> assemble_densities(const TodaProblem& p, const TodaState& st) {
    const int n = p.rank();
    const double h2 = p.grid.h * p.grid.h;
    std::vector<DensityField> out(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd ge = p.weights[i].h_values.values.array() * st.u[i].values.array().exp();
        const double m = h2 * ge.sum();
        if (!(m > 0.0) || !std::isfinite(m))
            throw std::runtime_error("assemble_densities: zero mass in component " + std::to_string(i + 1));
        out[i].V = GridField(p.grid, (st.lambda[i] / m) * ge);
        out[i].lambda = st.lambda[i];
        const double mass = integrate(p.grid, out[i].V);
        if (std::abs(mass - st.lambda[i]) > 1e-10 * std::max(1.0, st.lambda[i]))
            throw std::runtime_error("assemble_densities: density mass drift");
    }
    return out;
}

enum class EigMethod { automatic, lanczos, dense };

namespace detail {

inline bool use_dense(EigMethod m, int grid_n) {
    return m == EigMethod::dense || (m == EigMethod::automatic && grid_n <= 15);
}

inline double mu_from_tau(double tau, double rho) {
    return tau > 0.0 ? 1.0 / tau - rho : std::numeric_limits<double>::infinity();
}

inline void normalize_eigenfunction(const DomainGrid& g, const Eigen::VectorXd& mass_diag,
                                    Eigen::VectorXd* phi) {
    const double q = phi->dot(mass_diag.cwiseProduct(*phi));
    if (q > 0.0) *phi /= std::sqrt(q);
    int imax = 0;
    phi->cwiseAbs().maxCoeff(&imax);
    if ((*phi)[imax] < 0.0) *phi = -*phi;
    (void)g;
}

}  // namespace detail

struct ScalarEigs {
    std::vector<double> mu;          // ascending
    std::vector<GridField> phi;      // normalized: integral(V phi^2) = 1
    int iterations = 0;
    bool converged = false;
};

/// k smallest eigenvalues of -Delta phi - rho V phi = mu V phi, zero boundary.
inline ScalarEigs scalar_eigen_dirichlet(const PoissonSolver& solver, const GridField& V, double rho,
                                         int k = 1, EigMethod method = EigMethod::automatic) {
    const DomainGrid& g = solver.grid();
    if (!(rho > 0.0)) throw std::invalid_argument("scalar_eigen_dirichlet: rho must be positive");
    if (V.values.minCoeff() < -1e-14) throw std::invalid_argument("scalar_eigen_dirichlet: V must be >= 0");
    const double h2 = g.h * g.h;
    const Eigen::VectorXd mass = h2 * V.values;
    if (!(mass.maxCoeff() > 0.0))
        throw std::invalid_argument("scalar_eigen_dirichlet: V vanishes identically");

    PencilOperators ops;
    ops.dim = g.count;
    ops.apply_mass = [mass](const Eigen::VectorXd& x) { return mass.cwiseProduct(x).eval(); };
    ops.apply_stiff = [&solver](const Eigen::VectorXd& x) { return (solver.stiffness() * x).eval(); };
    ops.solve_stiff = [&solver](const Eigen::VectorXd& x) { return solver.solve_raw(x); };

    PencilEigs pe = detail::use_dense(method, g.n) ? dense_pencil_eigs(ops, k)
                                                   : largest_pencil_eigs(ops, k);
    if (!pe.converged) throw std::runtime_error("scalar_eigen_dirichlet: eigensolver did not converge");
    ScalarEigs out;
    out.iterations = pe.iterations;
    out.converged = pe.converged;
    for (int j = 0; j < k; ++j) {
        out.mu.push_back(detail::mu_from_tau(pe.tau[j], rho));
        if (j < static_cast<int>(pe.vectors.size())) {
            Eigen::VectorXd phi = pe.vectors[j];
            detail::normalize_eigenfunction(g, mass, &phi);
            out.phi.emplace_back(g, std::move(phi));
        }
    }
    return out;
}

struct ConstrainedEig {
    double mu = 0.0;
    GridField phi;                  // boundary_constant carries c
    double c = 0.0;
    double constraint_residual = 0.0;  // |integral(V phi)|
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// Stiffness on the augmented space (interior nodes + one boundary-constant
// node): boundary edges connect to the extra node instead of ground, so the
// matrix annihilates constants.
inline Eigen::SparseMatrix<double> augmented_stiffness(const DomainGrid& g) {
    std::vector<Eigen::Triplet<double>> trip;
    const int cnode = g.count;
    double total = 0.0;
    for (int j = 1; j <= g.n; ++j)
        for (int i = 1; i <= g.n; ++i) {
            const int k = g.index(i, j);
            trip.emplace_back(k, k, 4.0);
            int boundary_edges = 0;
            auto nb = [&](int ii, int jj) {
                if (g.interior(ii, jj))
                    trip.emplace_back(k, g.index(ii, jj), -1.0);
                else
                    ++boundary_edges;
            };
            nb(i - 1, j);
            nb(i + 1, j);
            nb(i, j - 1);
            nb(i, j + 1);
            if (boundary_edges > 0) {
                trip.emplace_back(k, cnode, -static_cast<double>(boundary_edges));
                trip.emplace_back(cnode, k, -static_cast<double>(boundary_edges));
                total += boundary_edges;
            }
        }
    trip.emplace_back(cnode, cnode, total);
    Eigen::SparseMatrix<double> l(g.count + 1, g.count + 1);
    l.setFromTriplets(trip.begin(), trip.end());
    return l;
}

}  // namespace detail

/// Smallest eigenvalue of -Delta phi - rho V phi = mu V phi where phi takes a
/// free constant boundary value c and satisfies integral(V phi) = 0. Posed on
/// the augmented node set with one Lagrange row for the constraint; at the
/// solution the multiplier vanishes, so the strong equation holds unmodified.
inline ConstrainedEig scalar_eigen_constrained(const DomainGrid& g, const GridField& V, double rho,
                                               EigMethod method = EigMethod::automatic) {
    if (!(rho > 0.0)) throw std::invalid_argument("scalar_eigen_constrained: rho must be positive");
    const double h2 = g.h * g.h;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(g.count + 1);
    w.head(g.count) = h2 * V.values;
    if (!(w.maxCoeff() > 0.0))
        throw std::invalid_argument("scalar_eigen_constrained: V vanishes identically");

    const Eigen::SparseMatrix<double> lhat = detail::augmented_stiffness(g);
    const int dim = g.count + 1;

    // Bordered factorization [L^ w; w' 0].
    std::vector<Eigen::Triplet<double>> trip;
    for (int c = 0; c < lhat.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(lhat, c); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), c, it.value());
    for (int i = 0; i < dim; ++i)
        if (w[i] != 0.0) {
            trip.emplace_back(i, dim, w[i]);
            trip.emplace_back(dim, i, w[i]);
        }
    Eigen::SparseMatrix<double> bordered(dim + 1, dim + 1);
    bordered.setFromTriplets(trip.begin(), trip.end());
    auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu->compute(bordered);
    if (lu->info() != Eigen::Success)
        throw std::runtime_error("scalar_eigen_constrained: bordered factorization failed");

    PencilOperators ops;
    ops.dim = dim;
    ops.apply_mass = [w](const Eigen::VectorXd& x) { return w.cwiseProduct(x).eval(); };
    ops.apply_stiff = [lhat](const Eigen::VectorXd& x) { return (lhat * x).eval(); };
    ops.solve_stiff = [lu, dim](const Eigen::VectorXd& b) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim + 1);
        rhs.head(dim) = b;
        return lu->solve(rhs).head(dim).eval();
    };

    PencilEigs pe;
    if (detail::use_dense(method, g.n)) {
        pe = dense_pencil_eigs(ops, 1, {w});
    } else {
        pe = largest_pencil_eigs(ops, 1);
    }
    if (!pe.converged) throw std::runtime_error("scalar_eigen_constrained: eigensolver did not converge");

    ConstrainedEig out;
    out.iterations = pe.iterations;
    out.converged = pe.converged;
    out.mu = detail::mu_from_tau(pe.tau[0], rho);
    if (!pe.vectors.empty()) {
        Eigen::VectorXd y = pe.vectors[0];
        detail::normalize_eigenfunction(g, w, &y);
        out.c = y[g.count];
        out.constraint_residual = std::abs(w.dot(y));
        GridField phi(g, y.head(g.count).eval());
        phi.boundary_constant = out.c;
        out.phi = std::move(phi);
    }
    return out;
}

struct CoupledReport {
    double min_eig = std::numeric_limits<double>::infinity();
    std::vector<int> active;  // components with nonvanishing density
    int iterations = 0;
    bool converged = true;
};

enum class CoupledSpace { dirichlet, dirichlet_constrained, constant_boundary };

/// Minimum of Q(phi)/B(phi) over the requested block space (see header note).
/// c_inv must be the symmetric positive definite coefficient matrix (a^s)^{ij}.
inline CoupledReport coupled_form_min(const PoissonSolver& solver, const std::vector<GridField>& V,
                                      const Eigen::MatrixXd& c_inv,
                                      CoupledSpace space = CoupledSpace::dirichlet_constrained,
                                      EigMethod method = EigMethod::automatic) {
    const DomainGrid& g = solver.grid();
    const int n = static_cast<int>(V.size());
    const int m = g.count;
    const double h2 = g.h * g.h;
    const Eigen::MatrixXd c_fwd = c_inv.inverse();  // = A^s

    CoupledReport rep;
    std::vector<Eigen::VectorXd> mass(n);
    for (int i = 0; i < n; ++i) {
        mass[i] = h2 * V[i].values;
        if (mass[i].maxCoeff() > 0.0) rep.active.push_back(i);
    }
    if (rep.active.empty()) return rep;  // all densities vanish: form is coercive, min = +inf

    if (space != CoupledSpace::constant_boundary) {
        PencilOperators ops;
        ops.dim = n * m;
        ops.apply_mass = [&, n, m](const Eigen::VectorXd& x) {
            Eigen::VectorXd y(n * m);
            for (int i = 0; i < n; ++i) y.segment(i * m, m) = mass[i].cwiseProduct(x.segment(i * m, m));
            return y;
        };
        ops.apply_stiff = [&, n, m](const Eigen::VectorXd& x) {
            std::vector<Eigen::VectorXd> lx(n);
            for (int j = 0; j < n; ++j) lx[j] = solver.stiffness() * x.segment(j * m, m);
            Eigen::VectorXd y = Eigen::VectorXd::Zero(n * m);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (c_inv(i, j) != 0.0) y.segment(i * m, m) += c_inv(i, j) * lx[j];
            return y;
        };
        ops.solve_stiff = [&, n, m](const Eigen::VectorXd& b) {
            std::vector<Eigen::VectorXd> sol(n);
            for (int j = 0; j < n; ++j) sol[j] = solver.solve_raw(b.segment(j * m, m));
            Eigen::VectorXd y = Eigen::VectorXd::Zero(n * m);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (c_fwd(i, j) != 0.0) y.segment(i * m, m) += c_fwd(i, j) * sol[j];
            return y;
        };

        std::vector<Eigen::VectorXd> constraints;
        if (space == CoupledSpace::dirichlet_constrained) {
            for (int i : rep.active) {
                Eigen::VectorXd wi = Eigen::VectorXd::Zero(n * m);
                wi.segment(i * m, m) = mass[i];
                constraints.push_back(std::move(wi));
            }
            // K-orthogonal projector onto the constraint space.
            const int r = static_cast<int>(constraints.size());
            Eigen::MatrixXd kw(n * m, r);
            for (int c = 0; c < r; ++c) kw.col(c) = ops.solve_stiff(constraints[c]);
            Eigen::MatrixXd gram(r, r);
            for (int a = 0; a < r; ++a)
                for (int b = 0; b < r; ++b) gram(a, b) = constraints[a].dot(kw.col(b));
            const Eigen::MatrixXd gram_inv = gram.inverse();
            auto cons = std::make_shared<std::vector<Eigen::VectorXd>>(constraints);
            ops.project = [cons, kw, gram_inv, r](const Eigen::VectorXd& x) {
                Eigen::VectorXd rhs(r);
                for (int c = 0; c < r; ++c) rhs[c] = (*cons)[c].dot(x);
                return (x - kw * (gram_inv * rhs)).eval();
            };
        }

        PencilEigs pe;
        if (detail::use_dense(method, g.n)) {
            pe = dense_pencil_eigs(ops, 1,
                                   space == CoupledSpace::dirichlet_constrained
                                       ? constraints
                                       : std::vector<Eigen::VectorXd>{});
        } else {
            pe = largest_pencil_eigs(ops, 1);
        }
        rep.iterations = pe.iterations;
        rep.converged = pe.converged;
        rep.min_eig = detail::mu_from_tau(pe.tau[0], 1.0);
        return rep;
    }

    // Constant-boundary diagnostic: each component gets its own boundary
    // constant and mass constraint; the stiffness couples components through
    // (a^s)^{ij} on the augmented node set, with n Lagrange rows appended.
    const Eigen::SparseMatrix<double> lhat = detail::augmented_stiffness(g);
    const int mm = m + 1;
    const int dim = n * mm;
    std::vector<Eigen::VectorXd> wfull(n);
    for (int i = 0; i < n; ++i) {
        wfull[i] = Eigen::VectorXd::Zero(dim);
        wfull[i].segment(i * mm, m) = mass[i];
    }
    std::vector<Eigen::Triplet<double>> ktrip;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (c_inv(i, j) == 0.0) continue;
            for (int c = 0; c < lhat.outerSize(); ++c)
                for (Eigen::SparseMatrix<double>::InnerIterator it(lhat, c); it; ++it)
                    ktrip.emplace_back(i * mm + static_cast<int>(it.row()), j * mm + c,
                                       c_inv(i, j) * it.value());
        }
    Eigen::SparseMatrix<double> khat(dim, dim);
    khat.setFromTriplets(ktrip.begin(), ktrip.end());

    std::vector<Eigen::Triplet<double>> trip = ktrip;
    int row = dim;
    for (int i : rep.active) {
        for (int q = 0; q < dim; ++q)
            if (wfull[i][q] != 0.0) {
                trip.emplace_back(row, q, wfull[i][q]);
                trip.emplace_back(q, row, wfull[i][q]);
            }
        ++row;
    }
    Eigen::SparseMatrix<double> bordered(row, row);
    bordered.setFromTriplets(trip.begin(), trip.end());
    auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu->compute(bordered);
    if (lu->info() != Eigen::Success)
        throw std::runtime_error("coupled_form_min: bordered factorization failed");
    PencilOperators ops;
    ops.dim = dim;
    ops.apply_mass = [&, n, mm, m](const Eigen::VectorXd& x) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
        for (int i = 0; i < n; ++i)
            y.segment(i * mm, m) = mass[i].cwiseProduct(x.segment(i * mm, m));
        return y;
    };
    ops.apply_stiff = [khat](const Eigen::VectorXd& x) { return (khat * x).eval(); };
    const int nrows = row;
    ops.solve_stiff = [lu, dim, nrows](const Eigen::VectorXd& b) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nrows);
        rhs.head(dim) = b;
        return lu->solve(rhs).head(dim).eval();
    };
    PencilEigs pe = largest_pencil_eigs(ops, 1);
    rep.iterations = pe.iterations;
    rep.converged = pe.converged;
    rep.min_eig = detail::mu_from_tau(pe.tau[0], 1.0);
    return rep;
}

struct SubsolutionCheck {
    std::vector<GridField> margins;  // -Delta u_i - rho K_i e^{u_i}, nodewise
    double max_margin = 0.0;
    double mass_identity_error = 0.0;  // max_i |integral(K_i e^{u_i}) - lambda_i| / max(1, lambda_i)
};

/// Solutions are subsolutions of the decoupled problems
/// -Delta u_i = rho K_i e^{u_i}, K_i = lambda_i h_i / m_i, for any rho >= 2,
/// because the off-diagonal Cartan entries are nonpositive. A positive margin
/// beyond tolerance indicates a solver or discretization defect.
inline SubsolutionCheck subsolution_check(const TodaProblem& p, const TodaState& st, double rho) {
    if (rho < 2.0) throw std::invalid_argument("subsolution_check: rho must be >= 2");
    const int n = p.rank();
    const double h2 = p.grid.h * p.grid.h;
    SubsolutionCheck out;
    out.margins.reserve(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd ge = p.weights[i].h_values.values.array() * st.u[i].values.array().exp();
        const double m = h2 * ge.sum();
        Eigen::VectorXd margin = (1.0 / h2) * (p.poisson->stiffness() * st.u[i].values);
        margin -= (rho * st.lambda[i] / m) * ge;
        out.max_margin = std::max(out.max_margin, margin.maxCoeff());
        out.mass_identity_error =
            std::max(out.mass_identity_error,
                     std::abs(h2 * (st.lambda[i] / m) * ge.sum() - st.lambda[i]) / std::max(1.0, st.lambda[i]));
        out.margins.emplace_back(p.grid, std::move(margin));
    }
    return out;
}

struct LemmaCertificate {
    double nu1 = 0.0, nu2 = 0.0;
    double mass = 0.0;          // integral(K e^v)
    bool hyp_nu1 = false;       // mass <= 4 pi: nu1 > 0 guaranteed
    bool hyp_nu2 = false;       // mass <= 8 pi: nu2 > 0 guaranteed
    double subsolution_margin = 0.0;
};

/// Two smallest Dirichlet eigenvalues of -Delta phi - K e^v phi = nu K e^v phi
/// for a discrete subsolution v of -Delta v - K e^v = 0 (checked nodewise).
inline LemmaCertificate lemma_certificate(const PoissonSolver& solver, const GridField& K,
                                          const GridField& v, EigMethod method = EigMethod::automatic) {
    const DomainGrid& g = solver.grid();
    const double h2 = g.h * g.h;
    const Eigen::VectorXd kev = K.values.array() * v.values.array().exp();
    LemmaCertificate out;
    Eigen::VectorXd margin = (1.0 / h2) * (solver.stiffness() * v.values) - kev;
    out.subsolution_margin = margin.maxCoeff();
    if (out.subsolution_margin > 1e-8)
        throw std::invalid_argument("lemma_certificate: v is not a discrete subsolution");
    out.mass = h2 * kev.sum();
    out.hyp_nu1 = out.mass <= 4.0 * std::numbers::pi + 1e-12;
    out.hyp_nu2 = out.mass <= 8.0 * std::numbers::pi + 1e-12;

    ScalarEigs eigs = scalar_eigen_dirichlet(solver, GridField(g, kev), 1.0, 2, method);
    out.nu1 = eigs.mu[0];
    out.nu2 = eigs.mu.size() > 1 ? eigs.mu[1] : std::numeric_limits<double>::infinity();
    return out;
}

/// The full certificate record for one state.
struct EigenReport {
    double rho = 0.0;
    std::vector<double> lambda_s;

    double coupled_min = 0.0;                  // constrained block space
    double coupled_min_unconstrained = 0.0;    // diagnostic
    double coupled_min_constant_boundary = 0.0;  // diagnostic, asserted nowhere
    std::vector<double> mu1, mu2, nu1, nu2;
    std::vector<double> mu2_c;                 // boundary constants of the mu2 minimizers
    std::vector<double> constraint_residuals;
    std::vector<GridField> mu1_phi, mu2_phi;

    double margins_max = 0.0;
    double mass_identity_error = 0.0;
    std::vector<int> active;

    bool certificate = false;   // coupled_min > 0 and all mu1, mu2 > 0 (and margins pass)
    bool inconclusive = false;  // some positivity margin fell below 1e-10
    bool pass_boundary_layer = false;  // the layer valid across the whole threshold box:
                                       // all mu2 > 0, constrained coupled form > 0, margins pass
};

/// Run the whole pipeline on a converged state. eps_pos is the positivity
/// resolution: values in (0, eps_pos] are inconclusive.
inline EigenReport nondegeneracy_certificate(const TodaProblem& p, const TodaState& st,
                                             EigMethod method = EigMethod::automatic,
                                             double eps_pos = 1e-10) {
    const int n = p.rank();
    EigenReport rep;
    rep.rho = p.rho_s;
    const std::vector<DensityField> dens = assemble_densities(p, st);

    std::vector<GridField> vs;
    vs.reserve(n);
    for (int i = 0; i < n; ++i) {
        vs.emplace_back(p.grid, (p.d[i] * dens[i].V.values).eval());
        rep.lambda_s.push_back(p.d[i] * st.lambda[i]);
    }

    const SubsolutionCheck sub = subsolution_check(p, st, rep.rho);
    rep.margins_max = sub.max_margin;
    rep.mass_identity_error = sub.mass_identity_error;

    bool all_mu1 = true, all_mu2 = true, any_inconclusive = false;
    auto positive = [&](double x) {
        if (x > eps_pos) return true;
        if (x > 0.0) any_inconclusive = true;
        return false;
    };

    for (int i = 0; i < n; ++i) {
        if (!(vs[i].values.maxCoeff() > 0.0)) {
            // Vanishing density: the component drops out of every form.
            rep.mu1.push_back(std::numeric_limits<double>::infinity());
            rep.mu2.push_back(std::numeric_limits<double>::infinity());
            rep.nu1.push_back(std::numeric_limits<double>::infinity());
            rep.nu2.push_back(std::numeric_limits<double>::infinity());
            rep.mu2_c.push_back(0.0);
            rep.constraint_residuals.push_back(0.0);
            rep.mu1_phi.emplace_back(p.grid);
            rep.mu2_phi.emplace_back(p.grid);
            continue;
        }
        rep.active.push_back(i);
        ScalarEigs s1 = scalar_eigen_dirichlet(*p.poisson, vs[i], rep.rho, 1, method);
        rep.mu1.push_back(s1.mu[0]);
        rep.mu1_phi.push_back(s1.phi.empty() ? GridField(p.grid) : s1.phi[0]);
        all_mu1 = all_mu1 && positive(s1.mu[0]);

        ConstrainedEig s2 = scalar_eigen_constrained(p.grid, vs[i], rep.rho, method);
        rep.mu2.push_back(s2.mu);
        rep.mu2_c.push_back(s2.c);
        rep.constraint_residuals.push_back(s2.constraint_residual);
        rep.mu2_phi.push_back(s2.phi);
        all_mu2 = all_mu2 && positive(s2.mu);

        // Subsolution route: same spectrum scaled by rho (W = rho V_i^s,
        // presented to the lemma as K = W e^{-u_i} with v = u_i).
        const Eigen::VectorXd k_field =
            (rep.rho * vs[i].values.array() * (-st.u[i].values.array()).exp()).matrix();
        LemmaCertificate lem = lemma_certificate(*p.poisson, GridField(p.grid, k_field), st.u[i], method);
        rep.nu1.push_back(lem.nu1);
        rep.nu2.push_back(lem.nu2);
    }

    const CoupledReport cc =
        coupled_form_min(*p.poisson, vs, p.a_s_inv, CoupledSpace::dirichlet_constrained, method);
    const CoupledReport cu =
        coupled_form_min(*p.poisson, vs, p.a_s_inv, CoupledSpace::dirichlet, method);
    const CoupledReport cb =
        coupled_form_min(*p.poisson, vs, p.a_s_inv, CoupledSpace::constant_boundary, method);
    rep.coupled_min = cc.min_eig;
    rep.coupled_min_unconstrained = cu.min_eig;
    rep.coupled_min_constant_boundary = cb.min_eig;

    const bool margins_ok = rep.margins_max <= 1e-8;
    rep.certificate = positive(rep.coupled_min) && all_mu1 && all_mu2 && margins_ok;
    rep.pass_boundary_layer = positive(rep.coupled_min) && all_mu2 && margins_ok;
    rep.inconclusive = any_inconclusive;
    return rep;
}

}  // namespace todalab
