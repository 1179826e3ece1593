#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "test_helpers.hpp"
#include "todalab/cartan.hpp"

using namespace todalab;
using Catch::Approx;

namespace {

Rat rat(long num, long den = 1) { return make_rat(num, den); }

// Exact determinant of (lambda E - A^s) with lambda converted exactly from
// double; the independent oracle for char_recursion.
double exact_char_det(const SymmetricDecomposition& dec, double lambda) {
    const int n = dec.rank();
    RatMat m(n, n);
    const Rat lam(lambda);  // dyadic, exact
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = (i == j ? lam : Rat(0)) - dec.a_s(i, j);
    return m.determinant().get_d();
}

}  // namespace

TEST_CASE("Cartan constructors match the printed matrices", "[cartan]") {
    const CartanMatrix a2 = build_cartan({Family::A, 2});
    CHECK(a2.entries(0, 0) == 2);
    CHECK(a2.entries(0, 1) == -1);
    CHECK(a2.entries(1, 0) == -1);
    CHECK(a2.entries(1, 1) == 2);

    const CartanMatrix a1 = build_cartan({Family::A, 1});
    CHECK(a1.rank() == 1);
    CHECK(a1.entries(0, 0) == 2);
    CHECK(a1.inverse(0, 0) == rat(1, 2));

    const CartanMatrix g2 = build_cartan({Family::G, 2});
    CHECK(g2.entries(0, 1) == -1);
    CHECK(g2.entries(1, 0) == -3);

    // B_n carries the -2 in the next-to-last row, C_n in the last row.
    const CartanMatrix b4 = build_cartan({Family::B, 4});
    CHECK(b4.entries(2, 3) == -2);
    CHECK(b4.entries(3, 2) == -1);
    const CartanMatrix c4 = build_cartan({Family::C, 4});
    CHECK(c4.entries(2, 3) == -1);
    CHECK(c4.entries(3, 2) == -2);

    const CartanMatrix f4 = build_cartan({Family::F, 4});
    CHECK(f4.entries(1, 2) == -2);
    CHECK(f4.entries(2, 1) == -1);
    CHECK(f4.entries(0, 1) == -1);
    CHECK(f4.entries(2, 3) == -1);
}

TEST_CASE("invalid family/rank pairs are rejected", "[cartan]") {
    CHECK_THROWS_AS(build_cartan({Family::A, 0}), std::invalid_argument);
    CHECK_THROWS_AS(build_cartan({Family::B, 1}), std::invalid_argument);
    CHECK_THROWS_AS(build_cartan({Family::D, 2}), std::invalid_argument);
    CHECK_THROWS_AS(build_cartan({Family::E, 5}), std::invalid_argument);
    CHECK_THROWS_AS(build_cartan({Family::E, 9}), std::invalid_argument);
    CHECK_THROWS_AS(build_cartan({Family::F, 3}), std::invalid_argument);
    CHECK_THROWS_AS(build_cartan({Family::G, 3}), std::invalid_argument);
}

TEST_CASE("exact inverse: identity product and the A_n closed form", "[cartan]") {
    for (Family fam : {Family::A, Family::B, Family::C, Family::D}) {
        const int lo = fam == Family::D ? 3 : (fam == Family::A ? 1 : 2);
        for (int n : {lo, 5, 12}) {
            const CartanMatrix c = build_cartan({fam, n});
            CHECK((c.entries * c.inverse - RatMat::identity(n)).is_zero());
        }
    }
    for (int n : {6, 7, 8}) {
        const CartanMatrix c = build_cartan({Family::E, n});
        CHECK((c.entries * c.inverse - RatMat::identity(n)).is_zero());
    }

    // (A_n^{-1})_ij = min(i,j) (n+1-max(i,j)) / (n+1), i,j 1-based.
    for (int n : {1, 2, 3, 7, 20}) {
        const CartanMatrix c = build_cartan({Family::A, n});
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                CHECK(c.inverse(i - 1, j - 1) ==
                      make_rat(std::min(i, j) * (n + 1 - std::max(i, j)), n + 1));
    }
}

TEST_CASE("symmetric decomposition matches the tables", "[cartan]") {
    const SymmetricDecomposition g2 = symmetric_decomposition(build_cartan({Family::G, 2}));
    CHECK(g2.d[0] == 1);
    CHECK(g2.d[1] == 3);
    CHECK(g2.a_s(0, 0) == 2);
    CHECK(g2.a_s(0, 1) == -1);
    CHECK(g2.a_s(1, 1) == rat(2, 3));

    const SymmetricDecomposition c3 = symmetric_decomposition(build_cartan({Family::C, 3}));
    CHECK(c3.d[0] == 1);
    CHECK(c3.d[1] == 1);
    CHECK(c3.d[2] == 2);
    CHECK(c3.a_s(2, 2) == 1);

    const SymmetricDecomposition b5 = symmetric_decomposition(build_cartan({Family::B, 5}));
    for (int i = 0; i < 4; ++i) CHECK(b5.d[i] == 2);
    CHECK(b5.d[4] == 1);
    CHECK(b5.a_s(0, 0) == 1);
    CHECK(b5.a_s(0, 1) == rat(-1, 2));
    CHECK(b5.a_s(3, 4) == -1);
    CHECK(b5.a_s(4, 4) == 2);

    const SymmetricDecomposition f4 = symmetric_decomposition(build_cartan({Family::F, 4}));
    CHECK(f4.d[0] == 2);
    CHECK(f4.d[1] == 2);
    CHECK(f4.d[2] == 1);
    CHECK(f4.d[3] == 1);

    // Symmetric families decompose trivially.
    for (const LieType t : {LieType{Family::A, 6}, LieType{Family::D, 5}, LieType{Family::E, 7}}) {
        const CartanMatrix c = build_cartan(t);
        const SymmetricDecomposition dec = symmetric_decomposition(c);
        CHECK(dec.is_trivial());
        CHECK(dec.a_s == c.entries);
    }
}

TEST_CASE("D As = A exactly for every family and rank up to 50", "[cartan]") {
    auto check = [](const LieType& t) {
        const CartanMatrix c = build_cartan(t);
        const SymmetricDecomposition dec = symmetric_decomposition(c);
        RatMat d(c.rank(), c.rank());
        for (int i = 0; i < c.rank(); ++i) d(i, i) = dec.d[i];
        CHECK((d * dec.a_s - c.entries).is_zero());
        CHECK(dec.a_s.is_symmetric());
    };
    for (int n = 1; n <= 50; ++n) check({Family::A, n});
    for (int n = 2; n <= 50; ++n) check({Family::B, n});
    for (int n = 2; n <= 50; ++n) check({Family::C, n});
    for (int n = 3; n <= 50; ++n) check({Family::D, n});
    for (int n : {6, 7, 8}) check({Family::E, n});
    check({Family::F, 4});
    check({Family::G, 2});
}

TEST_CASE("spectral radius: examples and method agreement", "[cartan]") {
    const SymmetricDecomposition a2 = symmetric_decomposition(build_cartan({Family::A, 2}));
    CHECK(spectral_radius(a2).rho == Approx(3.0).margin(1e-12));
    CHECK(spectral_radius(a2, SpectrumMethod::closed_form).rho == Approx(3.0).margin(1e-12));

    const SymmetricDecomposition a1 = symmetric_decomposition(build_cartan({Family::A, 1}));
    CHECK(spectral_radius(a1).rho == Approx(2.0).margin(1e-12));

    // G2^s: roots of lambda^2 - (8/3) lambda + 1/3.
    const SymmetricDecomposition g2 = symmetric_decomposition(build_cartan({Family::G, 2}));
    const double rho_formula = (8.0 / 3.0 + std::sqrt(64.0 / 9.0 - 4.0 / 3.0)) / 2.0;
    CHECK(rho_formula == Approx((4.0 + std::sqrt(13.0)) / 3.0).margin(1e-14));
    CHECK(spectral_radius(g2).rho == Approx(rho_formula).margin(1e-12));

    // Closed form vs dense for A_n.
    for (int n : {2, 5, 17, 50}) {
        const SymmetricDecomposition dec = symmetric_decomposition(build_cartan({Family::A, n}));
        const SpectrumReport cf = spectral_radius(dec, SpectrumMethod::closed_form);
        const SpectrumReport de = spectral_radius(dec, SpectrumMethod::dense_eig);
        REQUIRE(cf.eigenvalues.size() == de.eigenvalues.size());
        for (size_t i = 0; i < cf.eigenvalues.size(); ++i)
            CHECK(cf.eigenvalues[i] == Approx(de.eigenvalues[i]).margin(1e-10));
    }

    // Recursion-bisection route vs dense for B/C.
    for (Family fam : {Family::B, Family::C}) {
        for (int n : {2, 3, 8, 15}) {
            const SymmetricDecomposition dec = symmetric_decomposition(build_cartan({fam, n}));
            const SpectrumReport rb = spectral_radius(dec, SpectrumMethod::recursion_bound);
            const SpectrumReport de = spectral_radius(dec, SpectrumMethod::dense_eig);
            for (size_t i = 0; i < rb.eigenvalues.size(); ++i)
                CHECK(rb.eigenvalues[i] == Approx(de.eigenvalues[i]).margin(1e-9));
        }
    }
}

TEST_CASE("rho on the nonsymmetric A agrees with the similarity route", "[cartan]") {
    for (const LieType t : {LieType{Family::B, 3}, LieType{Family::C, 5}, LieType{Family::G, 2},
                            LieType{Family::F, 4}}) {
        const CartanMatrix c = build_cartan(t);
        const SymmetricDecomposition dec = symmetric_decomposition(c);
        // rho(A) by a general eigensolver on the nonsymmetric matrix.
        Eigen::EigenSolver<Eigen::MatrixXd> es(c.entries.to_double());
        double rho_a = 0.0;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            rho_a = std::max(rho_a, std::abs(es.eigenvalues()(i)));
        // Similar symmetric matrix D^{1/2} A^s D^{1/2} shares the spectrum of A = D A^s.
        const int n = c.rank();
        Eigen::VectorXd dsqrt(n);
        for (int i = 0; i < n; ++i) dsqrt[i] = std::sqrt(dec.d[i].get_d());
        const Eigen::MatrixXd sim = dsqrt.asDiagonal() * dec.a_s.to_double() * dsqrt.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ses(sim);
        const double rho_sim = std::abs(ses.eigenvalues().cwiseAbs().maxCoeff());
        CHECK(rho_a == Approx(rho_sim).margin(1e-10));
        // And the symmetrized radius transposition-invariance.
        CHECK(spectral_radius(dec).rho ==
              Approx(spectral_radius(SymmetricDecomposition{dec.type, dec.d, dec.a_s.transpose()}).rho)
                  .margin(1e-12));
    }
}

TEST_CASE("char_recursion: pinned signs and determinant oracle", "[cartan]") {
    CHECK(char_recursion(CharFamily::B_sym, 2, 3.0) == Approx(1.0).margin(1e-14));
    CHECK(char_recursion(CharFamily::B_sym, 2, 2.0) == Approx(-1.0).margin(1e-14));
    CHECK_THROWS_AS(char_recursion(CharFamily::B_sym, 1, 3.0), std::invalid_argument);

    for (int n = 2; n <= 20; ++n) {
        CHECK(char_recursion(CharFamily::B_sym, n, 3.0) > 0.0);
        CHECK(char_recursion(CharFamily::B_sym, n, 2.0) < 0.0);
        CHECK(char_recursion(CharFamily::C_sym, n, 4.0) >= 0.0);
    }

    // 20 sampled lambda values per rank against the exact determinant.
    for (int n = 2; n <= 12; ++n) {
        const SymmetricDecomposition bs = symmetric_decomposition(build_cartan({Family::B, n}));
        const SymmetricDecomposition cs = symmetric_decomposition(build_cartan({Family::C, n}));
        for (int k = 0; k < 20; ++k) {
            const double lambda = 0.197 + 4.35 * k / 19.0;
            const double ob = exact_char_det(bs, lambda);
            const double oc = exact_char_det(cs, lambda);
            CHECK(char_recursion(CharFamily::B_sym, n, lambda) ==
                  Approx(ob).epsilon(1e-9).margin(1e-9 * std::max(1.0, std::abs(ob))));
            CHECK(char_recursion(CharFamily::C_sym, n, lambda) ==
                  Approx(oc).epsilon(1e-9).margin(1e-9 * std::max(1.0, std::abs(oc))));
        }
    }
}

TEST_CASE("recursion roots are positive in their stated ranges", "[cartan]") {
    for (double lam : {2.0, 2.5, 3.0, 3.7, 5.0})
        CHECK(char_recursion_root(CharFamily::B_sym, lam) > 0.0);
    for (double lam : {4.0, 4.2, 5.5, 9.0})
        CHECK(char_recursion_root(CharFamily::C_sym, lam) > 0.0);
}

TEST_CASE("radius bounds over rank sweeps", "[cartan]") {
    const BoundsReport b = verify_radius_bounds(Family::B, 20);
    CHECK(b.pass);
    for (const BoundsEntry& e : b.entries) {
        CHECK(e.rho > 2.0);
        CHECK(e.rho < 3.0);
    }

    const BoundsReport a = verify_radius_bounds(Family::A, 50);
    CHECK(a.pass);
    double prev = 0.0;
    for (const BoundsEntry& e : a.entries) {
        CHECK(e.rho == Approx(an_eigenvalue(e.rank, e.rank)).margin(1e-10));
        CHECK(e.rho < 4.0);
        CHECK(e.rho > prev);
        prev = e.rho;
    }

    const BoundsReport g = verify_radius_bounds(Family::G, 2);
    CHECK(g.pass);
    CHECK(g.entries.at(0).rho == Approx(2.53518).margin(1e-5));

    CHECK(verify_radius_bounds(Family::C, 20).pass);
    CHECK(verify_radius_bounds(Family::D, 20).pass);
    CHECK_THROWS_AS(verify_radius_bounds(Family::B, 1), std::invalid_argument);
}

TEST_CASE("uniqueness thresholds", "[cartan]") {
    const ThresholdReport a2 = uniqueness_thresholds({Family::A, 2});
    CHECK(a2.lambda_s_max == Approx(8.0 * std::numbers::pi / 3.0).margin(1e-10));
    CHECK(a2.lambda_s_max == Approx(8.37758).margin(1e-5));
    CHECK(a2.lambda_max[0] == Approx(a2.lambda_s_max).margin(1e-14));

    const ThresholdReport a1 = uniqueness_thresholds({Family::A, 1});
    CHECK(a1.lambda_s_max == Approx(4.0 * std::numbers::pi).margin(1e-12));

    const ThresholdReport g2 = uniqueness_thresholds({Family::G, 2});
    const double expect = 8.0 * std::numbers::pi / ((4.0 + std::sqrt(13.0)) / 3.0);
    CHECK(g2.lambda_max[0] == Approx(expect).margin(1e-10));
    CHECK(g2.lambda_max[1] == Approx(expect / 3.0).margin(1e-10));
    CHECK(g2.safe_bound == Approx(2.0 * std::numbers::pi).margin(1e-15));

    // lambda_s_max >= 2 pi for every algebra (rho <= 4).
    for (const LieType t : {LieType{Family::A, 30}, LieType{Family::C, 25}, LieType{Family::E, 8}})
        CHECK(uniqueness_thresholds(t).lambda_s_max >= 2.0 * std::numbers::pi - 1e-12);
}

TEST_CASE("threshold monotonicity in rank", "[cartan]") {
    for (Family fam : {Family::A, Family::B, Family::C, Family::D}) {
        const int lo = fam == Family::A ? 1 : (fam == Family::D ? 3 : 2);
        double prev = std::numeric_limits<double>::infinity();
        for (int n = lo; n <= 20; ++n) {
            const double cur = uniqueness_thresholds({fam, n}).lambda_s_max;
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("exceptional radii derivation", "[cartan]") {
    struct Case {
        LieType type;
        double recorded;
    };
    for (const Case cs : {Case{{Family::G, 2}, kRhoG2s}, Case{{Family::F, 4}, kRhoF4s},
                          Case{{Family::E, 6}, kRhoE6}, Case{{Family::E, 7}, kRhoE7},
                          Case{{Family::E, 8}, kRhoE8}}) {
        const SymmetricDecomposition dec = symmetric_decomposition(build_cartan(cs.type));
        CHECK(spectral_radius(dec).rho == Approx(cs.recorded).margin(1e-12));
        // Exact bracket: det(lambda I - A^s) changes sign across the recorded
        // value, and is positive beyond it (largest root).
        const int n = dec.rank();
        auto det_at = [&](double lam) {
            RatMat m(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m(i, j) = (i == j ? Rat(lam) : Rat(0)) - dec.a_s(i, j);
            return m.determinant();
        };
        CHECK(det_at(cs.recorded - 1e-9) < 0);
        CHECK(det_at(cs.recorded + 1e-9) > 0);
    }
}

TEST_CASE("golden files pin the exact matrices and d tables", "[cartan]") {
    const std::string dir = TODALAB_GOLDEN_DIR;
    for (const char* name : {"a3", "b5", "c5", "d4", "e6", "e7", "e8", "f4", "g2"}) {
        const std::string path = dir + std::string("/") + name + ".txt";
        const std::string want = test_helpers::read_text(path);
        REQUIRE_FALSE(want.empty());
        const char fam = static_cast<char>(std::toupper(name[0]));
        const int rank = name[1] - '0';
        const CartanMatrix c = build_cartan({*family_from_letter(fam), rank});
        const std::string got = test_helpers::render_golden(c, symmetric_decomposition(c));
        CHECK(got == want);
    }
}
