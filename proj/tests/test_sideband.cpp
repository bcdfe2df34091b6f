#include <catch_amalgamated.hpp>

#include <cmath>

#include "magsync/sideband.hpp"
#include "oracles.hpp"

using namespace magsync;
using Catch::Approx;

namespace {

SystemParams case_params(double log10_ratio, double g_ma) {
    SystemParams p = with_drive_log10(default_params(), log10_ratio);
    p.g_ma = g_ma * p.omega_1;
    return p;
}

}  // namespace

TEST_CASE("Bessel functions at the origin", "[sideband]") {
    CHECK(bessel_j(0, 0.0) == 1.0);
    for (int n = 1; n < 6; ++n) {
        CHECK(bessel_j(n, 0.0) == 0.0);
        CHECK(bessel_j(-n, 0.0) == 0.0);
    }
}

TEST_CASE("Bessel functions against the power series", "[sideband]") {
    CHECK(bessel_j(1, 0.1) == Approx(oracle::bessel_series(1, 0.1)).epsilon(1e-12));
    CHECK(bessel_j(1, 0.1) == Approx(0.049937526).epsilon(1e-8));
    for (int n : {0, 1, 2, 5, 9})
        for (double x : {0.3, 1.7, 4.2, 8.0}) {
            const double ref = oracle::bessel_series(n, x);
            CHECK(bessel_j(n, x) == Approx(ref).epsilon(1e-10).margin(1e-14));
            CHECK(bessel_j(n, x) == Approx(std::cyl_bessel_j(static_cast<double>(n), x)).epsilon(1e-10).margin(1e-14));
        }
    // parity in n and x
    CHECK(bessel_j(-3, 2.0) == Approx(-bessel_j(3, 2.0)));
    CHECK(bessel_j(3, -2.0) == Approx(-bessel_j(3, 2.0)));
    CHECK(bessel_j(2, -2.0) == Approx(bessel_j(2, 2.0)));
    // large argument
    CHECK(bessel_j(10, 250.0) == Approx(std::cyl_bessel_j(10.0, 250.0)).margin(1e-12));
}

TEST_CASE("Jacobi-Anger identity", "[sideband]") {
    const double x = 2.5, phi = 0.7;
    cplx sum{};
    for (int n = -40; n <= 40; ++n) sum += bessel_j(n, x) * std::exp(cplx(0.0, n * phi));
    const cplx exact = std::exp(cplx(0.0, x * std::sin(phi)));
    CHECK(std::abs(sum - exact) < 1e-12);

    const auto table = bessel_table(20, x);
    for (int n = 0; n <= 20; ++n) CHECK(table[static_cast<std::size_t>(n)] == Approx(bessel_j(n, x)).margin(1e-15));
}

TEST_CASE("Single sideband at zero mechanical amplitude", "[sideband]") {
    const SystemParams p = case_params(-0.8, 0.0);
    const SidebandSolution sol = solve_sidebands(p, 0.0);
    REQUIRE(sol.converged);
    for (int n = -sol.n_max; n <= sol.n_max; ++n)
        if (n != 0) CHECK(std::abs(sol.at(n)) <= 1e-12 * std::abs(sol.at(0)));

    // M0 and the static shift close on each other
    const cplx I(0.0, 1.0);
    const double beta = sol.beta_tilde_s;
    const cplx M0 = p.drive_amplitude() / (I * (p.delta_m + beta) + p.kappa_m);
    CHECK(std::abs(sol.at(0) - M0) <= 1e-8 * std::abs(M0));
    double beta_check = 0.0;
    for (auto [g, w, gam] : {std::tuple{p.g_1, p.omega_1, p.gamma_1}, {p.g_2, p.omega_2, p.gamma_2}}) {
        const cplx bj = -I * g * std::norm(M0) / (I * w + gam);
        beta_check += 2.0 * g * bj.real();
    }
    CHECK(beta == Approx(beta_check).epsilon(1e-8));
}

TEST_CASE("Undriven magnon has no sidebands", "[sideband]") {
    const SystemParams p = with_drive(case_params(0.0, 0.8), 0.0);
    const SidebandSolution sol = solve_sidebands(p, 0.5 * p.omega_bar());
    CHECK(sol.converged);
    for (const cplx& m : sol.M) CHECK(m == cplx{});
    CHECK(sol.beta_tilde_s == 0.0);
}

TEST_CASE("F from hand-built sideband sets", "[sideband]") {
    const SystemParams p = default_params();
    SidebandSolution sol;
    sol.n_max = 2;
    sol.M.assign(5, cplx{});
    sol.M[2] = {3.0, 1.0};
    sol.B_tilde_mag = 1e5;
    CHECK(compute_F(sol, p) == cplx{});

    sol.M[3] = {0.5, -2.0};
    const cplx expected = p.g_tilde() / sol.B_tilde_mag * sol.M[2] * std::conj(sol.M[3]);
    CHECK(std::abs(compute_F(sol, p) - expected) < 1e-12 * std::abs(expected));

    sol.B_tilde_mag = 0.0;
    CHECK_THROWS_AS(compute_F(sol, p), std::invalid_argument);
}

TEST_CASE("F vanishes with the drive", "[sideband]") {
    const SystemParams base = case_params(-0.8, 0.8);
    const double B = 0.3 * base.omega_bar();
    double prev = std::numeric_limits<double>::infinity();
    for (double lg = -0.8; lg > -4.0; lg -= 0.4) {
        const SystemParams p = with_drive_log10(base, lg);
        const double f = std::abs(solve_sidebands(p, B).F);
        CHECK(f < prev);
        prev = f;
    }
    CHECK(prev < 1e-4 * std::abs(solve_sidebands(base, B).F));
}

TEST_CASE("Magnon excitation harmonics", "[sideband]") {
    SidebandSolution only0;
    only0.n_max = 3;
    only0.M.assign(7, cplx{});
    only0.M[3] = {2.0, -1.0};
    const auto c0 = magnon_excitation_harmonics(only0);
    REQUIRE(c0.size() == 13);
    for (std::size_t i = 0; i < c0.size(); ++i)
        CHECK(c0[i] == (i == 6 ? cplx(5.0, 0.0) : cplx{}));

    const SystemParams p = case_params(-0.8, 0.8);
    const SidebandSolution sol = solve_sidebands(p, 1.1 * p.omega_bar());
    const auto c = magnon_excitation_harmonics(sol);
    const int N = 2 * sol.n_max;
    CHECK(c[static_cast<std::size_t>(N)].real() == Approx(sol.total_population()).epsilon(1e-12));
    for (int n = 1; n <= N; ++n)
        CHECK(std::abs(c[static_cast<std::size_t>(N - n)] - std::conj(c[static_cast<std::size_t>(N + n)])) <=
              1e-12 * sol.total_population());
    // c_{-1} is the sum entering F
    cplx s{};
    for (int n = -sol.n_max; n < sol.n_max; ++n) s += sol.at(n) * std::conj(sol.at(n + 1));
    CHECK(std::abs(c[static_cast<std::size_t>(N - 1)] - s) <= 1e-12 * std::abs(s));
}

TEST_CASE("Solution invariants", "[sideband][property]") {
    const SystemParams p = case_params(-0.8, 0.8);
    for (double u : {0.2, 0.8, 1.16, 2.0}) {
        const double B = u * p.omega_bar();
        SidebandOptions opt;
        const SidebandSolution sol = solve_sidebands(p, B, opt);
        REQUIRE(sol.converged);
        CHECK(sol.residual <= opt.eps);
        CHECK(std::isfinite(sol.F.real()));
        CHECK(std::isfinite(sol.F.imag()));
        CHECK(std::abs(sol.beta_tilde_imag) <= 1e-12 * std::abs(sol.beta_tilde_s));
        CHECK(sol.n_max == default_n_max(p, B));
        CHECK_FALSE(sol.truncation_warning);

        // the static shift is built from the zeroth harmonic
        const cplx I(0.0, 1.0);
        const double c0 = sol.total_population();
        for (int j = 0; j < 2; ++j) {
            const double g = j == 0 ? p.g_1 : p.g_2;
            const double w = j == 0 ? p.omega_1 : p.omega_2;
            const double gam = j == 0 ? p.gamma_1 : p.gamma_2;
            const cplx bj = -I * g * c0 / (I * w + gam);
            CHECK(std::abs(sol.beta_s[static_cast<std::size_t>(j)] - bj) <= 1e-9 * std::abs(bj));
        }

        // truncation stability
        SidebandOptions wider = opt;
        wider.n_max = sol.n_max + 10;
        const SidebandSolution w = solve_sidebands(p, B, wider);
        CHECK(std::abs(w.F - sol.F) <= 1e-6 * std::abs(sol.F));

        // F(F) = compute_F(sol)
        CHECK(std::abs(compute_F(sol, p) - sol.F) <= 1e-14 * std::abs(sol.F));
    }
}

TEST_CASE("F depends on the mechanical amplitudes only through |B~|", "[sideband][property]") {
    const SystemParams p = case_params(-0.8, 0.8);
    // two splits of (B1, B2) with the same |g1 B1 + g2 B2|
    const cplx B1a(3e7, 0.0), B2a(0.0, 5e7);
    const double target = std::abs(p.g_1 * B1a + p.g_2 * B2a);
    const double scale = target / std::abs(p.g_1 * cplx(1e7, 2e7) + p.g_2 * cplx(-4e7, 1e7));
    const cplx B1b = scale * cplx(1e7, 2e7), B2b = scale * cplx(-4e7, 1e7);
    const double other = std::abs(p.g_1 * B1b + p.g_2 * B2b);
    REQUIRE(other == Approx(target).epsilon(1e-14));
    CHECK(solve_sidebands(p, target).F == solve_sidebands(p, other).F);
}

TEST_CASE("Truncation warning and convergence failure", "[sideband]") {
    const SystemParams p = case_params(-0.8, 0.8);
    SidebandOptions tight;
    tight.n_max = 2;
    CHECK_THROWS_AS(solve_sidebands(p, 2.0 * p.omega_bar(), tight), std::invalid_argument);
    tight.n_max = 19;
    CHECK(solve_sidebands(p, 2.0 * p.omega_bar(), tight).n_max == 19);

    SidebandOptions capped;
    capped.max_iter = 1;
    CHECK_THROWS_AS(solve_sidebands(p, 1.1 * p.omega_bar(), capped), SidebandConvergenceError);
}

TEST_CASE("Direct linear solve agrees with the iteration", "[sideband]") {
    const SystemParams p = case_params(-0.8, 0.8);
    SidebandOptions direct;
    direct.direct_solve = true;
    for (double u : {0.3, 1.16}) {
        const SidebandSolution a = solve_sidebands(p, u * p.omega_bar());
        const SidebandSolution b = solve_sidebands(p, u * p.omega_bar(), direct);
        CHECK(b.used_direct_solve);
        CHECK(std::abs(a.F - b.F) <= 1e-7 * std::abs(a.F));
    }
}

TEST_CASE("F-curves respond to coupling and drive", "[sideband]") {
    std::vector<double> grid;
    const SystemParams p0 = case_params(-0.8, 0.0);
    for (int i = 1; i <= 12; ++i) grid.push_back(0.1 * i * p0.omega_bar());

    const auto L3 = f_curve(case_params(-0.8, 0.0), grid);
    const auto L1 = f_curve(case_params(-0.8, 0.8), grid);
    const auto L1_strong = f_curve(case_params(-0.4, 0.8), grid);
    const auto mid = f_curve(case_params(-0.8, 0.4), grid);
    REQUIRE(L1.size() == grid.size());
    double gap = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        REQUIRE(L3[i].converged);
        REQUIRE(L1[i].converged);
        gap = std::max(gap, std::abs(L1[i].F - L3[i].F) / std::abs(L3[i].F));
        CHECK(L1[i].B_tilde == grid[i]);
    }
    CHECK(gap > 0.5);

    // stronger drive: the curve moves predominantly along F_r
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const cplx d = L1_strong[i].F - L1[i].F;
        CHECK(d.real() > 0.0);
        CHECK(std::abs(d.real()) > std::abs(d.imag()));
    }

    // stronger cavity-magnon coupling: the curve turns about the origin
    auto mean_arg = [](const std::vector<FCurvePoint>& c) {
        double s = 0.0;
        for (const auto& q : c) s += std::arg(q.F);
        return s / static_cast<double>(c.size());
    };
    const double a0 = mean_arg(L3), a4 = mean_arg(mid), a8 = mean_arg(L1);
    CHECK(a0 > a4);
    CHECK(a4 > a8);
    CHECK(a0 - a8 > 0.5);
}

TEST_CASE("F-curve flags failed points", "[sideband]") {
    const SystemParams p = case_params(0.0, 0.0);
    SidebandOptions capped;
    capped.max_iter = 2;
    const auto curve = f_curve(p, {0.5 * p.omega_bar(), 1.5 * p.omega_bar()}, capped);
    REQUIRE(curve.size() == 2);
    for (const auto& q : curve) {
        CHECK_FALSE(q.converged);
        CHECK(std::isnan(q.F.real()));
    }
    CHECK_THROWS_AS(f_curve(p, {2.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(f_curve(p, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("F has a finite limit at small mechanical amplitude", "[sideband]") {
    const SystemParams p = case_params(-0.8, 0.8);
    const cplx ref = solve_sidebands(p, 1e-2).F;
    for (double B = 1e-7; B < 1.0; B *= 1.7) {
        const SidebandSolution sol = solve_sidebands(p, B);
        CHECK(sol.converged);
        CHECK(std::abs(sol.F - ref) <= 1e-6 * std::abs(ref));
    }
}
