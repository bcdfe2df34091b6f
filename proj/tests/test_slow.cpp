#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "magsync/sweep.hpp"

using namespace magsync;
using Catch::Approx;

namespace {

SystemParams case_params(double log10_ratio, double g_ma) {
    SystemParams p = with_drive_log10(default_params(), log10_ratio);
    p.g_ma = g_ma * p.omega_1;
    return p;
}

const SystemParams& case_ii() {
    static const SystemParams p = case_params(-0.8, 0.8);
    return p;
}

/// Full-scale noiseless case-ii run over the default window, shared by the tests below.
const SteadyRun& case_ii_run() {
    static const SteadyRun run = run_steady(case_ii(), thermal_sample(case_ii(), 1), default_window(case_ii()));
    return run;
}

/// One mechanical period of the settled case-ii cycle, sampled uniformly.
struct Period {
    std::vector<double> t;
    std::vector<SystemState> s;
    cplx B_tilde{};  // g_1 B_1 + g_2 B_2 referenced to t = 0
};

Period settled_period(int samples) {
    const SystemParams& p = case_ii();
    const double T = 2.0 * constants::pi / p.omega_bar();
    IntegrationSpec spec;
    spec.dt = T / samples;
    spec.t_end = T;
    spec.sample_stride = 1;
    const Trajectory tr = simulate(p, case_ii_run().final_state, spec);
    Period out;
    for (std::size_t k = 0; k < static_cast<std::size_t>(samples); ++k) {
        out.t.push_back(tr.times[k]);
        out.s.push_back(tr.states[k]);
    }
    std::array<cplx, 2> mean{};
    for (const SystemState& s : out.s)
        for (std::size_t j = 0; j < 2; ++j) mean[j] += s.mech(j) / static_cast<double>(samples);
    for (std::size_t k = 0; k < out.s.size(); ++k) {
        const cplx rot = std::exp(cplx(0.0, p.omega_bar() * out.t[k]));
        out.B_tilde += (p.g_1 * (out.s[k].mech(0) - mean[0]) + p.g_2 * (out.s[k].mech(1) - mean[1])) * rot;
    }
    out.B_tilde /= static_cast<double>(samples);
    return out;
}

}  // namespace

TEST_CASE("Sideband amplitudes reconstruct the simulated magnon", "[slow][sideband]") {
    const SystemParams& p = case_ii();
    const Period per = settled_period(2000);
    const double B = std::abs(per.B_tilde), phi = std::arg(per.B_tilde);
    const SidebandSolution sol = solve_sidebands(p, B);
    double err = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < per.t.size(); ++k) {
        cplx m{};
        for (int n = -sol.n_max; n <= sol.n_max; ++n)
            m += sol.at(n) * std::exp(cplx(0.0, n * (p.omega_bar() * per.t[k] - phi)));
        err += std::norm(per.s[k].magnon() - m);
        norm += std::norm(per.s[k].magnon());
    }
    CHECK(std::sqrt(err / norm) < 0.05);
}

TEST_CASE("First harmonic of the magnon population against the simulated spectrum", "[slow][sideband]") {
    const SystemParams& p = case_ii();
    const Period per = settled_period(2000);
    const double phi = std::arg(per.B_tilde);
    const SidebandSolution sol = solve_sidebands(p, std::abs(per.B_tilde));
    const std::vector<cplx> c = magnon_excitation_harmonics(sol);
    const cplx c1 = c[static_cast<std::size_t>(1 + 2 * sol.n_max)];
    cplx d1{};
    for (std::size_t k = 0; k < per.t.size(); ++k)
        d1 += std::norm(per.s[k].magnon()) * std::exp(cplx(0.0, -p.omega_bar() * per.t[k]));
    d1 *= std::exp(cplx(0.0, phi)) / static_cast<double>(per.t.size());
    CHECK(std::abs(c1 - d1) < 0.05 * std::abs(d1));
}

TEST_CASE("Reduced amplitude equations hold the simulated cycle", "[slow][sync]") {
    const SystemParams& p = case_ii();
    const SteadyRun& run = case_ii_run();
    const SteadyState& full = run.steady.value();
    REQUIRE(full.stationary);

    const double t0 = 9.0 / p.gamma_1;
    const auto start = std::find_if(run.periods.begin(), run.periods.end(),
                                    [&](const auto& q) { return q.t_mid >= t0; });
    REQUIRE(start != run.periods.end());
    IntegrationSpec spec;
    spec.t_end = 10.0 / p.gamma_1;
    spec.dt = 0.1 / std::abs(p.delta_omega());
    spec.sample_stride = 1000;
    const auto sva = integrate_sva(p, start->B[0], start->B[1], spec, 50);
    REQUIRE_FALSE(sva.empty());
    const ReducedSample& end = sva.back();
    const double R = std::abs(end.B1) / std::abs(end.B2);
    const double theta = wrap_phase(std::arg(end.B1) - std::arg(end.B2));
    CHECK(std::abs(R - full.R_s) < 0.1 * full.R_s);
    CHECK(std::abs(wrap_phase(theta - full.theta_minus_s)) < 0.1);
}

TEST_CASE("Sideband F matches the zero-phase cycle", "[slow][sideband]") {
    const SystemParams p = case_params(-0.4, 0.8);
    const TimeWindow w = default_window(p);
    const SteadyRun run = run_steady(p, thermal_sample(p, 1), w);
    const SteadyState& s = run.steady.value();
    REQUIRE(s.stationary);
    CHECK(s.P_mean > 0.95);
    const cplx F = compute_F(solve_sidebands(p, measured_B_tilde(run, p, w)), p);
    const cplx Fs = stationary_F(s.R_s, s.theta_minus_s, p);
    const cplx Fm = measured_F(run, p, w);
    CHECK(std::abs(F - Fs) < 0.05 * std::abs(Fs));
    CHECK(std::abs(F - Fm) < 0.05 * std::abs(Fm));
}

TEST_CASE("Full-scale diagram around the first two cases", "[slow][sweep]") {
    GridSpec g;
    g.base = default_params();
    g.x = {AxisParam::Omega, AxisScale::Log10, -0.8, -0.4, 2};
    g.y = {AxisParam::g_ma, AxisScale::Linear, 0.78, 0.82, 2};
    g.seed = 1;
    const PhaseDiagram d = run_diagram(g);
    REQUIRE(d.complete());
    for (int iy = 0; iy < 2; ++iy) {
        const PixelResult& lo = d.at(0, iy);
        const PixelResult& hi = d.at(1, iy);
        CHECK_FALSE(lo.gray);
        CHECK_FALSE(hi.gray);
        CHECK(lo.P_mean < -0.9);
        CHECK(hi.P_mean > 0.9);
    }
}

TEST_CASE("Simulation seeded at a predicted pi-phase target keeps its sign", "[slow][sync]") {
    const SystemParams& p = case_ii();
    std::vector<double> grid;
    for (int i = 0; i < 200; ++i) grid.push_back(p.omega_bar() * (0.05 + (4.0 - 0.05) * i / 199.0));
    const auto targets = find_sync_targets(p, f_curve(p, grid), fs_locus(p, 0.995));
    const auto pi = std::find_if(targets.begin(), targets.end(),
                                 [](const SyncTarget& t) { return t.kind == LocusKind::PiPhase; });
    REQUIRE(pi != targets.end());

    // B_2 = A, B_1 = R A e^{i theta}, scaled to the target |B~|
    const cplx shape = p.g_1 * pi->R * std::exp(cplx(0.0, pi->theta_minus)) + p.g_2;
    const double A = pi->B_tilde / std::abs(shape);
    const cplx B1 = pi->R * A * std::exp(cplx(0.0, pi->theta_minus)), B2 = A;
    const double phi = std::arg(p.g_1 * B1 + p.g_2 * B2);
    const SidebandSolution sol = solve_sidebands(p, pi->B_tilde);
    SystemState s0(ModelKind::OneSphere);
    for (int n = -sol.n_max; n <= sol.n_max; ++n) s0.magnon() += sol.at(n) * std::exp(cplx(0.0, -n * phi));
    s0.mech(0) = sol.beta_s[0] + B1;
    s0.mech(1) = sol.beta_s[1] + B2;

    const SteadyRun run = run_steady(p, s0, default_window(p));
    const SteadyState& s = run.steady.value();
    CHECK(s.P_mean < -0.99);
    CHECK(std::abs(constraint_residual(s.theta_minus_s, s.R_s, p)) < 1e-2);
}
