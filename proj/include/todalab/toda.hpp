// Damped Newton solver for the mean-field Toda system
//
//   -Delta u_i = sum_j a_ij lambda_j h_j e^{u_j} / integral(h_j e^{u_j}),
//   u_i = 0 on the boundary,  i = 1..n,
//
// with A = (a_ij) a Cartan matrix. The solve runs in the symmetrized
// variables v_i = u_i / d_i of the decomposition A = D A^s, where the system
// reads -Delta v_i = sum_j a^s_ij V_j with the same densities
// V_j = lambda_j h_j e^{u_j} / m_j, m_j = integral(h_j e^{u_j}).
//
// The Jacobian splits into a sparse part (Laplacian blocks plus diagonal
// couplings) and one rank-one correction per component coming from the mass
// normalization d m_j / d v_j; Newton steps factor the sparse part with a
// sparse LU and fold the rank-one terms in by the Woodbury identity.
// Damping is Armijo backtracking on the residual sup norm. Continuation
// traces the branch from the trivial solution at lambda = 0 with adaptive
// step halving; deflated_search re-runs Newton on a residual multiplied by
// shifted inverse-square distances to known solutions, which repels the
// iteration from them and turns convergence into evidence for additional
// solutions (or, below threshold, their absence).

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "todalab/cartan.hpp"
#include "todalab/poisson.hpp"
#include "todalab/weights.hpp"

namespace todalab {

struct TodaProblem {
    DomainGrid grid;
    std::shared_ptr<const PoissonSolver> poisson;
    CartanMatrix cartan;
    SymmetricDecomposition decomp;
    std::vector<WeightField> weights;   // one per component
    Eigen::MatrixXd a;                  // A as doubles
    Eigen::MatrixXd a_s;                // A^s
    Eigen::MatrixXd a_s_inv;            // (A^s)^{-1}, from the exact inverse
    Eigen::VectorXd d;                  // diagonal of D
    double rho_s = 0.0;                 // rho(A^s)

    int rank() const { return cartan.rank(); }
};

inline TodaProblem make_problem(const DomainGrid& grid, const LieType& type,
                                std::vector<WeightField> weights,
                                std::shared_ptr<const PoissonSolver> poisson = nullptr) {
    TodaProblem p;
    p.grid = grid;
    p.poisson = poisson ? std::move(poisson) : std::make_shared<const PoissonSolver>(grid);
    p.cartan = build_cartan(type);
    p.decomp = symmetric_decomposition(p.cartan);
    const int n = p.cartan.rank();
    if (weights.empty()) weights.assign(n, unit_weight(grid));
    if (static_cast<int>(weights.size()) != n)
        throw std::invalid_argument("make_problem: need one weight field per component");
    p.weights = std::move(weights);
    p.a = p.cartan.entries.to_double();
    p.a_s = p.decomp.a_s.to_double();
    p.a_s_inv = p.decomp.a_s.inverse().to_double();
    p.d.resize(n);
    for (int i = 0; i < n; ++i) p.d[i] = p.decomp.d[i].get_d();
    p.rho_s = spectral_radius(p.decomp).rho;
    return p;
}

struct TodaState {
    std::vector<GridField> u;      // solution fields, zero boundary
    std::vector<double> lambda;
    std::vector<double> masses;    // m_i = integral h_i e^{u_i}
    double residual_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;            // outer Newton loop passes
    std::string message;
};

namespace detail {

// Per-iterate quantities in v-variables.
struct Kernels {
    std::vector<Eigen::VectorXd> g;   // h_i .* exp(d_i v_i)
    std::vector<Eigen::VectorXd> V;   // lambda_i g_i / m_i
    std::vector<double> m;
    bool finite = true;
};

inline Kernels eval_kernels(const TodaProblem& p, const std::vector<Eigen::VectorXd>& v,
                            const std::vector<double>& lambda) {
    const int n = p.rank();
    const double h2 = p.grid.h * p.grid.h;
    Kernels k;
    k.g.resize(n);
    k.V.resize(n);
    k.m.resize(n);
    for (int i = 0; i < n; ++i) {
        k.g[i] = p.weights[i].h_values.values.array() * (p.d[i] * v[i].array()).exp();
        k.m[i] = h2 * k.g[i].sum();
        if (!std::isfinite(k.m[i]) || k.m[i] <= 0.0) {
            k.finite = false;
            k.V[i] = Eigen::VectorXd::Zero(p.grid.count);
            continue;
        }
        k.V[i] = (lambda[i] / k.m[i]) * k.g[i];
        if (!k.V[i].allFinite()) k.finite = false;
    }
    return k;
}

// Residual of the symmetrized system, R_i = -Delta_h v_i - sum_j a^s_ij V_j.
inline std::vector<Eigen::VectorXd> v_residual(const TodaProblem& p,
                                               const std::vector<Eigen::VectorXd>& v,
                                               const Kernels& k) {
    const int n = p.rank();
    const double inv_h2 = 1.0 / (p.grid.h * p.grid.h);
    const auto& L = p.poisson->stiffness();
    std::vector<Eigen::VectorXd> r(n);
    for (int i = 0; i < n; ++i) {
        r[i] = inv_h2 * (L * v[i]);
        for (int j = 0; j < n; ++j)
            if (p.a_s(i, j) != 0.0) r[i] -= p.a_s(i, j) * k.V[j];
    }
    return r;
}

// Exact linearization of the v-residual applied to a direction; this is the
// operator the Newton step inverts, exposed for finite-difference checks and
// for the spectra module.
inline std::vector<Eigen::VectorXd> jacobian_apply_v(const TodaProblem& p,
                                                     const std::vector<Eigen::VectorXd>& v,
                                                     const std::vector<double>& lambda,
                                                     const std::vector<Eigen::VectorXd>& w) {
    const int n = p.rank();
    const double h2 = p.grid.h * p.grid.h;
    const Kernels k = eval_kernels(p, v, lambda);
    std::vector<Eigen::VectorXd> out(n);
    const auto& L = p.poisson->stiffness();
    for (int i = 0; i < n; ++i) out[i] = (1.0 / h2) * (L * w[i]);
    for (int j = 0; j < n; ++j) {
        if (lambda[j] == 0.0) continue;
        const Eigen::VectorXd vw = k.V[j].cwiseProduct(w[j]);
        const double proj = h2 * k.V[j].dot(w[j]) / lambda[j];
        for (int i = 0; i < n; ++i) {
            if (p.a_s(i, j) == 0.0) continue;
            out[i] -= p.a_s(i, j) * p.d[j] * (vw - proj * k.V[j]);
        }
    }
    return out;
}

// Sup norm of the residual of the original system (components scale by d_i).
inline double u_residual_norm(const TodaProblem& p, const std::vector<Eigen::VectorXd>& r) {
    double nrm = 0.0;
    for (int i = 0; i < p.rank(); ++i)
        nrm = std::max(nrm, p.d[i] * r[i].lpNorm<Eigen::Infinity>());
    return nrm;
}

// Multiplier eta(v) = prod_k (1 / |v - v_k|^2 + 1) over deflated solutions,
// and its gradient dotted with a direction. Distances in the discrete L2 norm.
struct Deflation {
    const std::vector<std::vector<Eigen::VectorXd>>* known = nullptr;
    double h2 = 0.0;

    double multiplier(const std::vector<Eigen::VectorXd>& v) const {
        if (!known || known->empty()) return 1.0;
        double eta = 1.0;
        for (const auto& k : *known) {
            double dist2 = 0.0;
            for (size_t i = 0; i < v.size(); ++i) dist2 += h2 * (v[i] - k[i]).squaredNorm();
            eta *= 1.0 / std::max(dist2, 1e-300) + 1.0;
        }
        return eta;
    }

    double grad_dot(const std::vector<Eigen::VectorXd>& v,
                    const std::vector<Eigen::VectorXd>& dir) const {
        if (!known || known->empty()) return 0.0;
        const double eta = multiplier(v);
        double total = 0.0;
        for (const auto& k : *known) {
            double dist2 = 0.0, dot = 0.0;
            for (size_t i = 0; i < v.size(); ++i) {
                dist2 += h2 * (v[i] - k[i]).squaredNorm();
                dot += h2 * (v[i] - k[i]).dot(dir[i]);
            }
            dist2 = std::max(dist2, 1e-300);
            const double eta_k = 1.0 / dist2 + 1.0;
            total += (eta / eta_k) * (-2.0 * dot / (dist2 * dist2));
        }
        return total;
    }
};

}  // namespace detail

struct NewtonOptions {
    double tol_residual = 1e-9;   // sup norm of the original-system residual
    double tol_step = 1e-8;       // stagnation threshold on the update
    int max_iterations = 60;
    double armijo_sigma = 1e-4;
    double min_step = 1e-4;       // damping floor
};

/// Residual of the original system, -Delta_h u_i - sum_j a_ij V_j, evaluated
/// independently of the Newton path (used for post-hoc verification).
inline std::vector<GridField> residual(const TodaProblem& p, const std::vector<GridField>& u,
                                       const std::vector<double>& lambda) {
    const int n = p.rank();
    if (static_cast<int>(u.size()) != n || static_cast<int>(lambda.size()) != n)
        throw std::invalid_argument("residual: rank mismatch");
    const double h2 = p.grid.h * p.grid.h;
    std::vector<Eigen::VectorXd> ge(n);
    std::vector<double> m(n);
    for (int j = 0; j < n; ++j) {
        ge[j] = p.weights[j].h_values.values.array() * u[j].values.array().exp();
        m[j] = h2 * ge[j].sum();
        if (!(m[j] > 0.0) || !std::isfinite(m[j]))
            throw std::runtime_error("residual: nonpositive mass in component " + std::to_string(j + 1));
    }
    std::vector<GridField> r;
    r.reserve(n);
    const auto& L = p.poisson->stiffness();
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd ri = (1.0 / h2) * (L * u[i].values);
        for (int j = 0; j < n; ++j)
            if (p.a(i, j) != 0.0) ri -= p.a(i, j) * (lambda[j] / m[j]) * ge[j];
        r.emplace_back(p.grid, std::move(ri));
    }
    return r;
}

namespace detail {

class NewtonWorkspace {
  public:
    explicit NewtonWorkspace(const TodaProblem& p) : p_(p) {}

    // Solve J delta = -r at the current kernels via sparse LU + Woodbury.
    // Returns false on factorization breakdown.
    bool solve_step(const std::vector<Eigen::VectorXd>& r, const Kernels& k,
                    const std::vector<double>& lambda, std::vector<Eigen::VectorXd>* delta) {
        const int n = p_.rank();
        const int m = p_.grid.count;
        const double h2 = p_.grid.h * p_.grid.h;
        const double inv_h2 = 1.0 / h2;

        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(n) * m * 5 + static_cast<size_t>(n) * n * m);
        const auto& L = p_.poisson->stiffness();
        for (int i = 0; i < n; ++i) {
            const int off = i * m;
            for (int c = 0; c < L.outerSize(); ++c)
                for (Eigen::SparseMatrix<double>::InnerIterator it(L, c); it; ++it)
                    trip.emplace_back(off + static_cast<int>(it.row()), off + c, inv_h2 * it.value());
            for (int j = 0; j < n; ++j) {
                const double aij = p_.a_s(i, j);
                if (aij == 0.0) continue;
                const double fac = -aij * p_.d[j];
                const int joff = j * m;
                for (int q = 0; q < m; ++q)
                    if (k.V[j][q] != 0.0) trip.emplace_back(i * m + q, joff + q, fac * k.V[j][q]);
            }
        }
        Eigen::SparseMatrix<double> s(n * m, n * m);
        s.setFromTriplets(trip.begin(), trip.end());
        lu_.compute(s);
        if (lu_.info() != Eigen::Success) return false;

        Eigen::VectorXd rhs(n * m);
        for (int i = 0; i < n; ++i) rhs.segment(i * m, m) = -r[i];
        Eigen::VectorXd x0 = lu_.solve(rhs);

        // Rank-one corrections: J = S + sum_j u_j z_j', with
        // u_j = (d_j h^2 / lambda_j) (A^s e_j) kron V_j and z_j = e_j kron V_j.
        std::vector<int> act;
        for (int j = 0; j < n; ++j)
            if (lambda[j] > 0.0) act.push_back(j);
        if (!act.empty()) {
            const int r1 = static_cast<int>(act.size());
            Eigen::MatrixXd u_cols(n * m, r1), y(n * m, r1);
            Eigen::MatrixXd z(n * m, r1);
            z.setZero();
            for (int c = 0; c < r1; ++c) {
                const int j = act[c];
                Eigen::VectorXd uc = Eigen::VectorXd::Zero(n * m);
                const double fac = p_.d[j] * h2 / lambda[j];
                for (int i = 0; i < n; ++i)
                    if (p_.a_s(i, j) != 0.0) uc.segment(i * m, m) = fac * p_.a_s(i, j) * k.V[j];
                u_cols.col(c) = uc;
                z.col(c).segment(j * m, m) = k.V[j];
                y.col(c) = lu_.solve(uc);
            }
            Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(r1, r1) + z.transpose() * y;
            const Eigen::VectorXd w = cap.partialPivLu().solve(z.transpose() * x0);
            x0 -= y * w;
        }
        if (!x0.allFinite()) return false;

        delta->resize(n);
        for (int i = 0; i < n; ++i) (*delta)[i] = x0.segment(i * m, m);
        return true;
    }

  private:
    const TodaProblem& p_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

inline TodaState finish_state(const TodaProblem& p, const std::vector<Eigen::VectorXd>& v,
                              const std::vector<double>& lambda, const Kernels& k, double res,
                              bool converged, int iters, std::string msg) {
    TodaState st;
    const int n = p.rank();
    st.u.reserve(n);
    for (int i = 0; i < n; ++i) st.u.emplace_back(p.grid, p.d[i] * v[i]);
    st.lambda = lambda;
    st.masses = k.m;
    st.residual_norm = res;
    st.converged = converged;
    st.iterations = iters;
    st.message = std::move(msg);
    return st;
}

inline TodaState newton_v(const TodaProblem& p, const std::vector<double>& lambda,
                          std::vector<Eigen::VectorXd> v, const NewtonOptions& opt,
                          const Deflation& defl) {
    const int n = p.rank();
    for (double l : lambda)
        if (l < 0.0) throw std::invalid_argument("newton_solve: lambda must be nonnegative");

    NewtonWorkspace ws(p);
    Kernels k = eval_kernels(p, v, lambda);
    if (!k.finite) throw std::runtime_error("newton_solve: weight or state corrupt (nonpositive mass)");
    std::vector<Eigen::VectorXd> r = v_residual(p, v, k);
    double res = u_residual_norm(p, r);
    double merit = defl.multiplier(v) * res;

    for (int it = 1; it <= opt.max_iterations; ++it) {
        if (res <= opt.tol_residual)
            return finish_state(p, v, lambda, k, res, true, it, "converged");

        std::vector<Eigen::VectorXd> delta;
        if (!ws.solve_step(r, k, lambda, &delta))
            return finish_state(p, v, lambda, k, res, false, it, "linear solver breakdown");

        // Deflected Newton direction: for a scalar multiplier eta the deflated
        // step is the plain step scaled by eta / (eta - grad_eta . delta).
        if (defl.known && !defl.known->empty()) {
            const double eta = defl.multiplier(v);
            const double gd = defl.grad_dot(v, delta);
            const double denom = eta - gd;
            const double scale = (std::abs(denom) > 1e-12 * eta) ? eta / denom : 1.0;
            for (auto& dv : delta) dv *= scale;
        }

        double step_norm = 0.0;
        for (int i = 0; i < n; ++i)
            step_norm = std::max(step_norm, p.d[i] * delta[i].lpNorm<Eigen::Infinity>());

        double alpha = 1.0;
        bool accepted = false;
        std::vector<Eigen::VectorXd> v_try(n);
        while (alpha >= opt.min_step) {
            for (int i = 0; i < n; ++i) v_try[i] = v[i] + alpha * delta[i];
            Kernels k_try = eval_kernels(p, v_try, lambda);
            if (k_try.finite) {
                std::vector<Eigen::VectorXd> r_try = v_residual(p, v_try, k_try);
                const double res_try = u_residual_norm(p, r_try);
                const double merit_try = defl.multiplier(v_try) * res_try;
                if (std::isfinite(merit_try) && merit_try <= (1.0 - opt.armijo_sigma * alpha) * merit) {
                    v = std::move(v_try);
                    k = std::move(k_try);
                    r = std::move(r_try);
                    res = res_try;
                    merit = merit_try;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted)
            return finish_state(p, v, lambda, k, res, false, it, "damping floor reached");
        if (alpha * step_norm < opt.tol_step && res > opt.tol_residual)
            return finish_state(p, v, lambda, k, res, false, it, "step stagnation");
    }
    return finish_state(p, v, lambda, k, res, res <= opt.tol_residual, opt.max_iterations,
                        res <= opt.tol_residual ? "converged" : "max iterations");
}

inline std::vector<Eigen::VectorXd> to_v(const TodaProblem& p, const std::vector<GridField>& u) {
    std::vector<Eigen::VectorXd> v(p.rank());
    for (int i = 0; i < p.rank(); ++i)
        v[i] = u.empty() ? Eigen::VectorXd::Zero(p.grid.count) : (u[i].values / p.d[i]).eval();
    return v;
}

}  // namespace detail

inline TodaState newton_solve(const TodaProblem& p, const std::vector<double>& lambda,
                              const std::vector<GridField>& init = {},
                              const NewtonOptions& opt = {}) {
    if (static_cast<int>(lambda.size()) != p.rank())
        throw std::invalid_argument("newton_solve: lambda size mismatch");
    if (!init.empty() && static_cast<int>(init.size()) != p.rank())
        throw std::invalid_argument("newton_solve: init size mismatch");
    return detail::newton_v(p, lambda, detail::to_v(p, init), opt, {});
}

struct BranchPoint {
    double t = 0.0;
    TodaState state;
    int newton_iterations = 0;
};

struct ContinuationBranch {
    std::vector<BranchPoint> points;
    bool complete = false;
    std::string failure;
};

/// Trace t -> t * lambda_target from the trivial branch, t in [0,1], with
/// adaptive step halving on Newton failure. A failed march returns the
/// partial branch with a failure marker.
inline ContinuationBranch continuation(const TodaProblem& p, const std::vector<double>& lambda_target,
                                       int steps, const NewtonOptions& opt = {}) {
    if (steps < 1) throw std::invalid_argument("continuation: need at least one step");
    ContinuationBranch branch;
    const int n = p.rank();
    std::vector<double> zero(n, 0.0);
    TodaState trivial = newton_solve(p, zero, {}, opt);
    branch.points.push_back({0.0, trivial, trivial.iterations});

    const bool target_zero = std::all_of(lambda_target.begin(), lambda_target.end(),
                                         [](double l) { return l == 0.0; });
    if (target_zero) {
        branch.complete = true;
        return branch;
    }

    const double base_dt = 1.0 / steps;
    const double min_dt = base_dt / 1024.0;
    double t = 0.0, dt = base_dt;
    std::vector<GridField> init = trivial.u;
    while (t < 1.0 - 1e-12) {
        const double t_next = std::min(1.0, t + dt);
        std::vector<double> lam(n);
        for (int i = 0; i < n; ++i) lam[i] = t_next * lambda_target[i];
        TodaState st = newton_solve(p, lam, init, opt);
        if (!st.converged) {
            dt *= 0.5;
            if (dt < min_dt) {
                branch.failure = "step underflow at t = " + std::to_string(t_next) + ": " + st.message;
                return branch;
            }
            continue;
        }
        branch.points.push_back({t_next, st, st.iterations});
        init = st.u;
        t = t_next;
        dt = std::min(base_dt, 2.0 * dt);
    }
    branch.complete = true;
    return branch;
}

struct DeflationOptions {
    int starts = 20;
    unsigned long long seed = 1;
    double distance_threshold = 1e-3;  // sup-norm separation between solutions
    double init_amplitude = 1.5;
};

/// Multistart Newton on the deflated residual. Returns every converged
/// solution distinct (in sup norm) from the known list and from each other.
/// An empty result below threshold is evidence for uniqueness, not proof.
inline std::vector<TodaState> deflated_search(const TodaProblem& p, const std::vector<double>& lambda,
                                              const std::vector<TodaState>& known,
                                              const DeflationOptions& dopt = {},
                                              const NewtonOptions& opt = {}) {
    const int n = p.rank();
    std::vector<std::vector<Eigen::VectorXd>> known_v;
    for (const TodaState& st : known) known_v.push_back(detail::to_v(p, st.u));
    detail::Deflation defl{&known_v, p.grid.h * p.grid.h};

    auto distinct = [&](const TodaState& cand, const std::vector<TodaState>& list) {
        for (const TodaState& st : list) {
            double dist = 0.0;
            for (int i = 0; i < n; ++i)
                dist = std::max(dist, (cand.u[i].values - st.u[i].values).lpNorm<Eigen::Infinity>());
            if (dist <= dopt.distance_threshold) return false;
        }
        return true;
    };

    std::vector<TodaState> found;
    for (int s = 0; s < dopt.starts; ++s) {
        std::mt19937_64 rng(dopt.seed * 0x9e3779b97f4a7c15ULL + static_cast<unsigned long long>(s));
        std::uniform_real_distribution<double> unif(-dopt.init_amplitude, dopt.init_amplitude);
        std::vector<Eigen::VectorXd> v0(n);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd f = Eigen::VectorXd::Zero(p.grid.count);
            for (int kx = 1; kx <= 3; ++kx)
                for (int ky = 1; ky <= 3; ++ky) {
                    const double c = unif(rng) / (kx * kx + ky * ky);
                    for (int q = 0; q < p.grid.count; ++q)
                        f[q] += c * std::sin(kx * std::numbers::pi * p.grid.x(q)) *
                                std::sin(ky * std::numbers::pi * p.grid.y(q));
                }
            v0[i] = f;
        }
        TodaState st = detail::newton_v(p, lambda, std::move(v0), opt, defl);
        if (!st.converged) continue;
        if (distinct(st, known) && distinct(st, found)) found.push_back(std::move(st));
    }
    return found;
}

/// Mean-field energy whose critical points are exactly the solutions:
///   J(u) = 1/2 sum_ij (a^s)^{ij} <grad v_i, grad v_j> - sum_i (lambda_i / d_i) log m_i(u),
/// with v_i = u_i / d_i. For symmetric algebras this is the usual
/// 1/2 sum a^{ij} <grad u_i, grad u_j> - sum lambda_i log m_i.
inline double energy(const TodaProblem& p, const std::vector<GridField>& u,
                     const std::vector<double>& lambda) {
    const int n = p.rank();
    const double h2 = p.grid.h * p.grid.h;
    const auto& L = p.poisson->stiffness();
    std::vector<Eigen::VectorXd> v = detail::to_v(p, u);
    double quad = 0.0;
    std::vector<Eigen::VectorXd> lv(n);
    for (int j = 0; j < n; ++j) lv[j] = L * v[j];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (p.a_s_inv(i, j) != 0.0) quad += p.a_s_inv(i, j) * v[i].dot(lv[j]);
    double mass_part = 0.0;
    for (int i = 0; i < n; ++i) {
        const double m = h2 * (p.weights[i].h_values.values.array() * u[i].values.array().exp()).sum();
        if (!(m > 0.0) || !std::isfinite(m))
            throw std::runtime_error("energy: nonpositive mass in component " + std::to_string(i + 1));
        mass_part += (lambda[i] / p.d[i]) * std::log(m);
    }
    return 0.5 * quad - mass_part;
}

/// Directional derivative dJ(u)[w] (w in the original u variables).
inline double energy_directional(const TodaProblem& p, const std::vector<GridField>& u,
                                 const std::vector<double>& lambda,
                                 const std::vector<GridField>& w) {
    const int n = p.rank();
    const double h2 = p.grid.h * p.grid.h;
    const auto& L = p.poisson->stiffness();
    std::vector<Eigen::VectorXd> v = detail::to_v(p, u);
    double out = 0.0;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd wv = w[i].values / p.d[i];
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.grid.count);
        for (int j = 0; j < n; ++j)
            if (p.a_s_inv(i, j) != 0.0) acc += p.a_s_inv(i, j) * (L * v[j]);
        out += wv.dot(acc);
        const Eigen::VectorXd ge = p.weights[i].h_values.values.array() * u[i].values.array().exp();
        const double m = h2 * ge.sum();
        out -= (lambda[i] / p.d[i]) * (h2 * ge.dot(w[i].values)) / m;
    }
    return out;
}

}  // namespace todalab
