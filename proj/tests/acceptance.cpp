// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Heavier than the unit tests; expected wall time is a few
// minutes, dominated by the N = 63 continuation-plus-certificate runs.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "test_helpers.hpp"
#include "todalab/io.hpp"
#include "todalab/run.hpp"
#include "todalab/spectra.hpp"

using namespace todalab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

int g_failures = 0;

class Criterion {
  public:
    Criterion(int number, std::string title) : number_(number), title_(std::move(title)) {
        t0_ = std::chrono::steady_clock::now();
    }

    void expect(bool ok, const std::string& what) {
        if (!ok) {
            failed_ = true;
            details_.push_back(what);
        }
    }

    ~Criterion() {
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        std::printf("[%s] criterion %d: %s (%.1fs)\n", failed_ ? "FAIL" : "PASS", number_,
                    title_.c_str(), sec);
        for (const std::string& d : details_) std::printf("       - %s\n", d.c_str());
        std::fflush(stdout);
        if (failed_) ++g_failures;
    }

    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    int number_;
    std::string title_;
    bool failed_ = false;
    std::vector<std::string> details_;
    std::chrono::steady_clock::time_point t0_;
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

void criterion_1_cartan_exactness() {
    Criterion c(1, "Cartan exactness: D As = A, A A^{-1} = I (rank <= 50), golden files");
    auto check_type = [&](const LieType& t) {
        const CartanMatrix cm = build_cartan(t);
        const SymmetricDecomposition dec = symmetric_decomposition(cm);
        if (!(cm.entries * cm.inverse - RatMat::identity(cm.rank())).is_zero())
            c.expect(false, t.name() + ": inverse not exact");
        RatMat d(cm.rank(), cm.rank());
        for (int i = 0; i < cm.rank(); ++i) d(i, i) = dec.d[i];
        if (!(d * dec.a_s - cm.entries).is_zero()) c.expect(false, t.name() + ": D As != A");
        if (!dec.a_s.is_symmetric()) c.expect(false, t.name() + ": As not symmetric");
    };
    for (int n = 1; n <= 50; ++n) check_type({Family::A, n});
    for (int n = 2; n <= 50; ++n) check_type({Family::B, n});
    for (int n = 2; n <= 50; ++n) check_type({Family::C, n});
    for (int n = 3; n <= 50; ++n) check_type({Family::D, n});
    for (int n : {6, 7, 8}) check_type({Family::E, n});
    check_type({Family::F, 4});
    check_type({Family::G, 2});

    const std::string dir = TODALAB_GOLDEN_DIR;
    for (const char* name : {"a3", "b5", "c5", "d4", "e6", "e7", "e8", "f4", "g2"}) {
        const std::string want = test_helpers::read_text(dir + std::string("/") + name + ".txt");
        const char fam = static_cast<char>(std::toupper(name[0]));
        const CartanMatrix cm = build_cartan({*family_from_letter(fam), name[1] - '0'});
        const std::string got = test_helpers::render_golden(cm, symmetric_decomposition(cm));
        c.expect(!want.empty() && got == want, std::string("golden mismatch: ") + name);
    }
    c.expect(c.seconds() < 10.0, "runtime exceeded 10 s: " + fmt(c.seconds()));
}

void criterion_2_an_spectrum() {
    Criterion c(2, "A_n spectrum: closed form vs dense 1e-10 (n <= 50), rho(A2) = 3, 8pi/3");
    for (int n = 1; n <= 50; ++n) {
        const SymmetricDecomposition dec = symmetric_decomposition(build_cartan({Family::A, n}));
        const SpectrumReport cf = spectral_radius(dec, SpectrumMethod::closed_form);
        const SpectrumReport de = spectral_radius(dec, SpectrumMethod::dense_eig);
        for (size_t i = 0; i < cf.eigenvalues.size(); ++i)
            if (std::abs(cf.eigenvalues[i] - de.eigenvalues[i]) > 1e-10) {
                c.expect(false, "A" + std::to_string(n) + " eigenvalue " + std::to_string(i + 1) +
                                    " differs by " +
                                    fmt(std::abs(cf.eigenvalues[i] - de.eigenvalues[i])));
                break;
            }
    }
    const double rho_a2 = spectral_radius(symmetric_decomposition(build_cartan({Family::A, 2}))).rho;
    c.expect(std::abs(rho_a2 - 3.0) <= 1e-12, "rho(A2) = " + fmt(rho_a2));
    const ThresholdReport th = uniqueness_thresholds({Family::A, 2});
    c.expect(std::abs(th.lambda_s_max - 8.0 * kPi / 3.0) <= 1e-10,
             "threshold 8pi/3 off by " + fmt(std::abs(th.lambda_s_max - 8.0 * kPi / 3.0)));
    c.expect(std::abs(th.lambda_s_max - 8.37758) <= 1e-5, "threshold != 8.37758");
}

void criterion_3_radius_bounds() {
    Criterion c(3, "radius bounds: rho in [2,4] (rank <= 20), B in (2,3), C in (2,4], sign tests");
    for (Family fam : {Family::A, Family::B, Family::C, Family::D, Family::E, Family::F, Family::G}) {
        const BoundsReport rep = verify_radius_bounds(fam, 20);
        c.expect(rep.pass, std::string(1, family_letter(fam)) + ": bound violated at rank " +
                               std::to_string(rep.first_violation));
    }
    for (int n = 2; n <= 20; ++n) {
        const SymmetricDecomposition dec = symmetric_decomposition(build_cartan({Family::B, n}));
        const double x3 = char_recursion(CharFamily::B_sym, n, 3.0);
        const double x2 = char_recursion(CharFamily::B_sym, n, 2.0);
        c.expect(x3 > 0.0, "B" + std::to_string(n) + ": X(3) not positive");
        c.expect(x2 < 0.0, "B" + std::to_string(n) + ": X(2) not negative");
        // Exact determinant oracle at the same points.
        auto exact = [&](double lam) {
            RatMat m(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m(i, j) = (i == j ? Rat(lam) : Rat(0)) - dec.a_s(i, j);
            return m.determinant();
        };
        c.expect(exact(3.0) > 0, "B" + std::to_string(n) + ": exact det(3E-Bs) not positive");
        c.expect(exact(2.0) < 0, "B" + std::to_string(n) + ": exact det(2E-Bs) not negative");
        const double rel3 = std::abs(x3 - exact(3.0).get_d()) / std::max(1.0, std::abs(x3));
        const double rel2 = std::abs(x2 - exact(2.0).get_d()) / std::max(1.0, std::abs(x2));
        c.expect(rel3 <= 1e-9 && rel2 <= 1e-9, "B" + std::to_string(n) + ": recursion vs oracle");
    }
}

void criterion_4_discretization() {
    Criterion c(4, "discretization: eigenvalue -> 2pi^2 at order >= 1.9, Green symmetric + unit mass");
    std::vector<double> errs;
    for (int n : {15, 31, 63}) {
        const DomainGrid g = build_grid(n);
        const PoissonSolver solver(g);
        PencilOperators ops;
        const double h2 = g.h * g.h;
        ops.dim = g.count;
        ops.apply_mass = [h2](const Eigen::VectorXd& x) { return (h2 * x).eval(); };
        ops.apply_stiff = [&solver](const Eigen::VectorXd& x) {
            return (solver.stiffness() * x).eval();
        };
        ops.solve_stiff = [&solver](const Eigen::VectorXd& x) { return solver.solve_raw(x); };
        const PencilEigs pe = largest_pencil_eigs(ops, 1, 400, 1e-13);
        errs.push_back(std::abs(1.0 / pe.tau[0] - 2.0 * kPi * kPi));
    }
    const double order1 = std::log2(errs[0] / errs[1]);
    const double order2 = std::log2(errs[1] / errs[2]);
    c.expect(order1 >= 1.9 && order2 >= 1.9,
             "observed orders " + fmt(order1) + ", " + fmt(order2));

    const DomainGrid g = build_grid(31);
    const PoissonSolver solver(g);
    const std::vector<std::pair<int, int>> nodes = {{4, 7}, {16, 16}, {27, 9}, {12, 30}};
    for (size_t a = 0; a < nodes.size(); ++a) {
        const GridField ga = greens_function(solver, nodes[a].first, nodes[a].second);
        const double mass = integrate(g, laplacian_apply(g, ga));
        c.expect(std::abs(mass - 1.0) <= 1e-12, "Green unit mass off by " + fmt(mass - 1.0));
        for (size_t b = a + 1; b < nodes.size(); ++b) {
            const GridField gb = greens_function(solver, nodes[b].first, nodes[b].second);
            const double vab = ga.values[g.index(nodes[b].first, nodes[b].second)];
            const double vba = gb.values[g.index(nodes[a].first, nodes[a].second)];
            c.expect(std::abs(vab - vba) <= 1e-9, "Green symmetry defect " + fmt(vab - vba));
        }
    }
}

void criterion_5_solver() {
    Criterion c(5, "solver: jacobian vs finite differences 1e-6, trivial state, A2 symmetry");
    for (int n_grid : {15, 31}) {
        const DomainGrid g = build_grid(n_grid);
        for (const LieType t : {LieType{Family::A, 2}, LieType{Family::B, 2}}) {
            const TodaProblem p = make_problem(g, t, {});
            std::mt19937_64 rng(1000 + n_grid);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            for (int trial = 0; trial < 3; ++trial) {
                std::vector<Eigen::VectorXd> v(2), w(2);
                for (int i = 0; i < 2; ++i) {
                    v[i] = Eigen::VectorXd::Zero(g.count);
                    w[i] = Eigen::VectorXd::Zero(g.count);
                    for (int kx = 1; kx <= 3; ++kx)
                        for (int ky = 1; ky <= 3; ++ky) {
                            const double cv = unif(rng) / (kx * kx + ky * ky);
                            const double cw = unif(rng) / (kx * kx + ky * ky);
                            for (int q = 0; q < g.count; ++q) {
                                const double s =
                                    std::sin(kx * kPi * g.x(q)) * std::sin(ky * kPi * g.y(q));
                                v[i][q] += cv * s;
                                w[i][q] += cw * s;
                            }
                        }
                }
                const std::vector<double> lam{1.1, 0.8};
                const auto jw = detail::jacobian_apply_v(p, v, lam, w);
                const double eps = 1e-6;
                std::vector<Eigen::VectorXd> vp(2), vm(2);
                for (int i = 0; i < 2; ++i) {
                    vp[i] = v[i] + eps * w[i];
                    vm[i] = v[i] - eps * w[i];
                }
                const auto rp = detail::v_residual(p, vp, detail::eval_kernels(p, vp, lam));
                const auto rm = detail::v_residual(p, vm, detail::eval_kernels(p, vm, lam));
                double num = 0.0, den = 0.0;
                for (int i = 0; i < 2; ++i) {
                    num = std::max(num, ((rp[i] - rm[i]) / (2.0 * eps) - jw[i]).lpNorm<Eigen::Infinity>());
                    den = std::max(den, jw[i].lpNorm<Eigen::Infinity>());
                }
                c.expect(num <= 1e-6 * den, t.name() + " N=" + std::to_string(n_grid) +
                                                ": jacobian mismatch " + fmt(num / den));
            }
        }
    }

    const DomainGrid g = build_grid(31);
    const TodaProblem p = make_problem(g, {Family::A, 2}, {});
    const TodaState z = newton_solve(p, {0.0, 0.0});
    bool zero_ok = z.converged;
    for (const GridField& u : z.u) zero_ok = zero_ok && u.values.lpNorm<Eigen::Infinity>() == 0.0;
    c.expect(zero_ok, "lambda = 0 did not return the exact trivial state");

    const TodaState st = newton_solve(p, {2.0, 2.0});
    c.expect(st.converged, "A2 solve at (2,2) failed");
    if (st.converged)
        c.expect((st.u[0].values - st.u[1].values).lpNorm<Eigen::Infinity>() <= 1e-8,
                 "A2 symmetry defect " +
                     fmt((st.u[0].values - st.u[1].values).lpNorm<Eigen::Infinity>()));
}

void criterion_6_theorem_consistency() {
    Criterion c(6,
                "theorem consistency: continuation to s = 0.99 with full certificates "
                "(A2, B2, G2, A3; N = 63; plain and singular weights)");
    const DomainGrid g = build_grid(63);
    auto poisson = std::make_shared<const PoissonSolver>(g);
    const WeightField plain = unit_weight(g);
    const WeightField singular =
        assemble_weight(*poisson, f_zero(g), {snap_source(g, 0.5, 0.5, 1.0)});

    for (const LieType t : {LieType{Family::A, 2}, LieType{Family::B, 2}, LieType{Family::G, 2},
                            LieType{Family::A, 3}}) {
        const auto family_start = std::chrono::steady_clock::now();
        for (int cfg = 0; cfg < 2; ++cfg) {
            const std::string label = t.name() + (cfg == 0 ? "/plain" : "/singular");
            TodaProblem p = make_problem(
                g, t, std::vector<WeightField>(static_cast<size_t>(t.rank), cfg == 0 ? plain : singular),
                poisson);
            std::vector<double> lam(t.rank);
            for (int i = 0; i < t.rank; ++i) lam[i] = 0.99 * 8.0 * kPi / (p.rho_s * p.d[i]);
            const ContinuationBranch branch = continuation(p, lam, 8);
            c.expect(branch.complete, label + ": continuation failed (" + branch.failure + ")");
            if (!branch.complete) continue;
            for (const BranchPoint& pt : branch.points) {
                const EigenReport rep = nondegeneracy_certificate(p, pt.state);
                for (int i = 0; i < t.rank; ++i)
                    c.expect(p.rho_s * rep.lambda_s[i] <= 8.0 * kPi + 1e-9,
                             label + ": rho lambda_s out of range at t=" + fmt(pt.t));
                c.expect(rep.margins_max <= 1e-8,
                         label + ": subsolution margin " + fmt(rep.margins_max) + " at t=" + fmt(pt.t));
                c.expect(rep.coupled_min > 0.0,
                         label + ": coupled_min = " + fmt(rep.coupled_min) + " at t=" + fmt(pt.t));
                for (int i = 0; i < t.rank; ++i) {
                    c.expect(rep.mu1[i] > 0.0, label + ": mu1[" + std::to_string(i + 1) +
                                                   "] = " + fmt(rep.mu1[i]) + " at t=" + fmt(pt.t));
                    c.expect(rep.mu2[i] > 0.0, label + ": mu2[" + std::to_string(i + 1) +
                                                   "] = " + fmt(rep.mu2[i]) + " at t=" + fmt(pt.t));
                }
                c.expect(rep.certificate == (rep.coupled_min > 1e-10 && rep.margins_max <= 1e-8 &&
                                             [&] {
                                                 bool ok = true;
                                                 for (int i = 0; i < t.rank; ++i)
                                                     ok = ok && rep.mu1[i] > 1e-10 && rep.mu2[i] > 1e-10;
                                                 return ok;
                                             }()),
                         label + ": certificate flag inconsistent at t=" + fmt(pt.t));
            }
        }
        const double family_sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - family_start).count();
        c.expect(family_sec < 600.0, t.name() + ": family runtime " + fmt(family_sec) + " s");
    }
}

void criterion_7_uniqueness_evidence() {
    Criterion c(7, "uniqueness evidence: 20 deflated multistarts at s = 0.9 find nothing (A2, G2)");
    const DomainGrid g = build_grid(31);
    for (const LieType t : {LieType{Family::A, 2}, LieType{Family::G, 2}}) {
        const TodaProblem p = make_problem(g, t, {});
        std::vector<double> lam(t.rank);
        for (int i = 0; i < t.rank; ++i) lam[i] = 0.9 * 8.0 * kPi / (p.rho_s * p.d[i]);
        const ContinuationBranch branch = continuation(p, lam, 6);
        c.expect(branch.complete, t.name() + ": continuation failed");
        if (!branch.complete) continue;
        DeflationOptions dopt;
        dopt.starts = 20;
        dopt.seed = 2024;
        const std::vector<TodaState> extra =
            deflated_search(p, lam, {branch.points.back().state}, dopt);
        c.expect(extra.empty(), t.name() + ": deflation found " + std::to_string(extra.size()) +
                                    " additional solution(s)");
    }
}

void criterion_8_lemma_suite() {
    Criterion c(8, "lemma suite: constant-K reduction to 1%, positivity under the mass hypotheses");
    const DomainGrid g = build_grid(63);
    const PoissonSolver solver(g);
    const GridField zero(g);
    for (double k : {0.1, 1.0, 5.0}) {
        const LemmaCertificate lc = lemma_certificate(solver, GridField(g, k), zero);
        const double analytic = 2.0 * kPi * kPi / k - 1.0;
        c.expect(std::abs(lc.nu1 - analytic) <= 0.01 * std::abs(analytic),
                 "K = " + fmt(k) + ": nu1 = " + fmt(lc.nu1) + " vs analytic " + fmt(analytic));
    }
    for (double k : {0.1, 1.0, 5.0, 4.0 * kPi, 6.0, 8.0 * kPi}) {
        const LemmaCertificate lc = lemma_certificate(solver, GridField(g, k), zero);
        if (lc.hyp_nu1) c.expect(lc.nu1 > 0.0, "K = " + fmt(k) + ": nu1 not positive");
        if (lc.hyp_nu2) c.expect(lc.nu2 > 0.0, "K = " + fmt(k) + ": nu2 not positive");
    }
    // A nonconstant singular K with mass inside the hypotheses.
    const WeightField w = assemble_weight(solver, f_zero(g), {snap_source(g, 0.5, 0.5, 1.0)});
    const double mass = integrate(g, w.h_values);
    const GridField scaled(g, (7.5 / mass) * w.h_values.values);
    const LemmaCertificate lc = lemma_certificate(solver, scaled, zero);
    c.expect(lc.hyp_nu1 && lc.nu1 > 0.0 && lc.nu2 > 0.0, "singular K: positivity failed");
}

void criterion_9_determinism() {
    Criterion c(9, "determinism: sweep reruns with a fixed seed are byte identical");
    const fs::path a = fs::temp_directory_path() / "todalab_acc_sweep_a";
    const fs::path b = fs::temp_directory_path() / "todalab_acc_sweep_b";
    fs::remove_all(a);
    fs::remove_all(b);
    const std::string base = std::string(TODALAB_CLI_PATH) +
                             " sweep --family A --rank 2 --n 15 --s-grid 0.2 0.6 --steps 3 --seed 7 ";
    const int rc1 = std::system((base + "--out " + a.string() + " >/dev/null 2>&1").c_str());
    const int rc2 = std::system((base + "--out " + b.string() + " >/dev/null 2>&1").c_str());
    c.expect(WEXITSTATUS(rc1) == 0 && WEXITSTATUS(rc2) == 0, "sweep runs did not exit cleanly");
    if (WEXITSTATUS(rc1) == 0 && WEXITSTATUS(rc2) == 0) {
        for (const auto& entry : fs::directory_iterator(a)) {
            const std::string name = entry.path().filename().string();
            if (name == "manifest.json") continue;
            const std::string ba = read_file(entry.path());
            const std::string bb = read_file(b / name);
            c.expect(ba == bb, name + ": bytes differ between reruns");
        }
        nlohmann::json ja = nlohmann::json::parse(read_file(a / "manifest.json"));
        nlohmann::json jb = nlohmann::json::parse(read_file(b / "manifest.json"));
        ja.erase("timings");
        jb.erase("timings");
        c.expect(ja == jb, "manifests differ beyond timings");
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

}  // namespace

int main() {
    std::printf("todalab acceptance suite\n");
    criterion_1_cartan_exactness();
    criterion_2_an_spectrum();
    criterion_3_radius_bounds();
    criterion_4_discretization();
    criterion_5_solver();
    criterion_6_theorem_consistency();
    criterion_7_uniqueness_evidence();
    criterion_8_lemma_suite();
    criterion_9_determinism();
    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
