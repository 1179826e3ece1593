// Largest eigenpairs of the generalized pencil  B q = tau K q  with K
// symmetric positive definite (possibly only on a constraint subspace) and B
// symmetric positive semidefinite.
//
// Every eigenvalue problem in the certificate pipeline reduces to this form:
// the operators of interest look like  (K - rho B) phi = mu B phi  with K a
// Dirichlet stiffness form, and substituting tau = 1/(mu + rho) turns the
// smallest mu into the largest tau while making the shifted operator K
// strictly positive definite. That removes any difficulty with B being
// singular (it vanishes where the density does): null directions of B simply
// carry tau = 0.
//
// The iteration is Lanczos on T = K^{-1} B, self-adjoint in the K inner
// product, with full reorthogonalization. Callers provide apply_mass (B),
// apply_stiff (K), solve_stiff (K^{-1}, exact on the subspace) and optionally
// a projector onto the subspace.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace todalab {

struct PencilOperators {
    int dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_mass;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_stiff;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> solve_stiff;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> project;  // optional
};

struct PencilEigs {
    std::vector<double> tau;                 // descending, tau >= 0
    std::vector<Eigen::VectorXd> vectors;    // K-orthonormal Ritz vectors
    int iterations = 0;
    bool converged = false;
    bool mass_degenerate = false;            // B vanished on the start vector
};

/// Top-k eigenvalues of B q = tau K q. Deterministic: fixed-seed start vector.
inline PencilEigs largest_pencil_eigs(const PencilOperators& ops, int k, int max_iter = 250,
                                      double tol = 1e-11) {
    const int n = ops.dim;
    auto project = [&](Eigen::VectorXd v) {
        return ops.project ? ops.project(std::move(v)) : std::move(v);
    };

    PencilEigs out;
    std::mt19937_64 rng(0x70da1ab5eedULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd start(n);
    for (int i = 0; i < n; ++i) start[i] = gauss(rng);
    start = project(start);

    // Push the start into range(K^{-1} B): kills K-null and B-null junk.
    Eigen::VectorXd q = project(ops.solve_stiff(ops.apply_mass(start)));
    double qnorm2 = q.dot(ops.apply_stiff(q));
    if (!(qnorm2 > 1e-300)) {
        out.mass_degenerate = true;  // B is zero (or start unlucky to machine zero)
        out.converged = true;
        out.tau.assign(k, 0.0);
        return out;
    }
    q /= std::sqrt(qnorm2);

    std::vector<Eigen::VectorXd> basis, kbasis;  // q_j and K q_j
    std::vector<double> alpha, beta;
    basis.push_back(q);
    kbasis.push_back(ops.apply_stiff(q));

    max_iter = std::min(max_iter, n);
    Eigen::MatrixXd ritz_vecs;
    Eigen::VectorXd ritz_vals;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd bq = ops.apply_mass(basis[it]);
        Eigen::VectorXd z = project(ops.solve_stiff(bq));
        const double a = basis[it].dot(bq);  // = <q, T q>_K
        alpha.push_back(a);
        z -= a * basis[it];
        if (it > 0) z -= beta[it - 1] * basis[it - 1];
        for (int pass = 0; pass < 2; ++pass)
            for (size_t j = 0; j < basis.size(); ++j) z -= kbasis[j].dot(z) * basis[j];

        // Ritz values of the tridiagonal section
        const int m = static_cast<int>(alpha.size());
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            tri(i, i) = alpha[i];
            if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        ritz_vals = es.eigenvalues();
        ritz_vecs = es.eigenvectors();

        const double b = std::sqrt(std::max(0.0, z.dot(ops.apply_stiff(z))));
        const int have = std::min(k, m);
        double worst = 0.0;
        for (int j = 0; j < have; ++j)
            worst = std::max(worst, std::abs(b * ritz_vecs(m - 1, m - 1 - j)));
        out.iterations = m;
        if ((m >= k && worst <= tol * std::max(1.0, std::abs(ritz_vals(m - 1)))) || b <= 1e-300) {
            out.converged = true;
            break;
        }
        if (it + 1 >= max_iter) break;
        beta.push_back(b);
        basis.push_back(z / b);
        kbasis.push_back(ops.apply_stiff(basis.back()));
    }

    const int m = static_cast<int>(alpha.size());
    const int have = std::min(k, m);
    for (int j = 0; j < have; ++j) {
        const int col = m - 1 - j;
        out.tau.push_back(std::max(0.0, ritz_vals(col)));
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < m; ++i) v += ritz_vecs(i, col) * basis[i];
        out.vectors.push_back(std::move(v));
    }
    for (int j = have; j < k; ++j) out.tau.push_back(0.0);
    return out;
}

/// Dense route for the same pencil: assembles B and K by applying the
/// operators to unit vectors and solves with Eigen. Intended for small grids
/// (the N <= 15 fallback) and as a cross-check; constraint subspaces are
/// handled by an orthonormal basis Z of ker(w') so the pencil is reduced to
/// Z'BZ q = tau Z'KZ q.
inline PencilEigs dense_pencil_eigs(const PencilOperators& ops, int k,
                                    const std::vector<Eigen::VectorXd>& constraints = {}) {
    const int n = ops.dim;
    Eigen::MatrixXd z;
    if (constraints.empty()) {
        z = Eigen::MatrixXd::Identity(n, n);
    } else {
        Eigen::MatrixXd w(n, static_cast<int>(constraints.size()));
        for (size_t j = 0; j < constraints.size(); ++j) w.col(static_cast<int>(j)) = constraints[j];
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
        Eigen::MatrixXd full = qr.householderQ();
        z = full.rightCols(n - w.cols());
    }
    Eigen::MatrixXd bz(n, z.cols()), kz(n, z.cols());
    for (int j = 0; j < z.cols(); ++j) {
        bz.col(j) = ops.apply_mass(z.col(j));
        kz.col(j) = ops.apply_stiff(z.col(j));
    }
    const Eigen::MatrixXd bred = z.transpose() * bz;
    const Eigen::MatrixXd kred = z.transpose() * kz;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(bred, kred);
    if (es.info() != Eigen::Success) throw std::runtime_error("dense_pencil_eigs: solver failed");
    PencilEigs out;
    out.converged = true;
    const int m = static_cast<int>(es.eigenvalues().size());
    for (int j = 0; j < std::min(k, m); ++j) {
        const int col = m - 1 - j;
        out.tau.push_back(std::max(0.0, es.eigenvalues()(col)));
        out.vectors.push_back(z * es.eigenvectors().col(col));
    }
    for (int j = m; j < k; ++j) out.tau.push_back(0.0);
    return out;
}

}  // namespace todalab
