// Acceptance run: one PASS/FAIL line per criterion, with details indented
// below it. Exit status is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "magsync/sweep.hpp"

using namespace magsync;

namespace {

SystemParams case_params(double log10_ratio, double g_ma) {
    SystemParams p = with_drive_log10(default_params(), log10_ratio);
    p.g_ma = g_ma * p.omega_1;
    return p;
}

struct Case {
    const char* name;
    double log10_ratio;
    double g_ma;
    double expected;
    double tolerance;
};

const Case cases[] = {{"i", -0.4, 0.8, 1.0, 0.05},
                      {"ii", -0.8, 0.8, -1.0, 0.05},
                      {"iii", -0.5168, 0.7, 0.0, 0.15},
                      {"iv", -1.0, 0.5, -1.0, 0.05}};

int failures = 0;

void detail(const char* fmt, auto... args) {
    std::printf("    ");
    std::printf(fmt, args...);
    std::printf("\n");
    std::fflush(stdout);
}

void criterion(int id, const char* title, const std::function<bool()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string error;
    try {
        ok = body();
    } catch (const std::exception& e) {
        error = e.what();
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!error.empty()) detail("exception: %s", error.c_str());
    std::printf("%s  %d  %s  (%.0f s)\n", ok ? "PASS" : "FAIL", id, title, sec);
    std::fflush(stdout);
    if (!ok) ++failures;
}

bool limit_cycle(const PixelResult& px) { return !px.gray && !px.failed; }

// ---------------------------------------------------------------------------

bool constraint_closure() {
    GridSpec g;
    g.base = default_params();
    g.x = {AxisParam::Omega, AxisScale::Log10, -1.5, 0.0, 16};
    g.y = {AxisParam::g_ma, AxisScale::Linear, 0.0, 1.0, 11};
    g.desk_scale = 100.0;
    g.seed = 1;
    const PhaseDiagram d = run_diagram(g);
    int cycles = 0, stationary = 0, worst_ix = -1, worst_iy = -1;
    double worst = 0.0;
    for (const PixelResult& px : d.pixels) {
        if (!limit_cycle(px)) continue;
        ++cycles;
        if (!px.stationary) continue;
        ++stationary;
        const double r = std::abs(constraint_residual(px.theta_minus_s, px.R_s, g.pixel_params(px.ix, px.iy)));
        if (r >= worst) {
            worst = r;
            worst_ix = px.ix;
            worst_iy = px.iy;
        }
    }
    detail("%zu pixels, %d limit cycles, %d stationary", d.pixels.size(), cycles, stationary);
    detail("largest residual %.3g at (%d, %d)", worst, worst_ix, worst_iy);
    return stationary >= 50 && worst < 1e-2;
}

bool operating_points() {
    bool ok = true;
    for (const Case& c : cases) {
        const SystemParams p = case_params(c.log10_ratio, c.g_ma);
        const PixelResult px = run_pixel(p, default_window(p), 1);
        const bool pass = limit_cycle(px) && std::abs(px.P_mean - c.expected) <= c.tolerance;
        detail("case %-3s P = %+.5f (target %+.1f +- %.2f) theta = %.4f R = %.4g stationary = %d %s", c.name,
               px.P_mean, c.expected, c.tolerance, px.theta_minus_s, px.R_s, px.stationary,
               pass ? "ok" : "off");
        ok = ok && pass;
    }
    return ok;
}

bool closed_form() {
    const SystemParams p = default_params();
    const PiPhaseOptimum opt = pi_phase_optimum(p);

    // grid search: for each R the largest theta on the constraint curve,
    // located by scanning the raw equation and bisecting the last crossing
    auto theta_of = [&](double R) {
        auto f = [&](double th) { return constraint_residual(th, R, p); };
        const int n = 400;
        double lo = -1.0;
        for (int i = n; i > 0; --i) {
            const double a = constants::pi * (i - 1) / n, b = constants::pi * i / n;
            if (f(a) >= 0.0 && f(b) < 0.0) {
                lo = a;
                break;
            }
        }
        if (lo < 0.0) return -1.0;
        double hi = lo + constants::pi / n;
        for (int k = 0; k < 60; ++k) {
            const double m = 0.5 * (lo + hi);
            (f(m) >= 0.0 ? lo : hi) = m;
        }
        return lo;
    };
    double best = -1.0, best_R = 0.0;
    const int nR = 4000;
    for (int i = 0; i <= nR; ++i) {
        const double R = std::pow(10.0, -2.0 + 4.0 * i / nR);
        const double th = theta_of(R);
        if (th > best) {
            best = th;
            best_R = R;
        }
    }
    double a = best_R / std::pow(10.0, 4.0 / nR), b = best_R * std::pow(10.0, 4.0 / nR);
    for (int k = 0; k < 200; ++k) {
        const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        (theta_of(m1) < theta_of(m2) ? a : b) = (theta_of(m1) < theta_of(m2) ? m1 : m2);
    }
    best_R = 0.5 * (a + b);
    best = theta_of(best_R);
    const double P_grid = std::cos(best);

    const auto roots = constraint_solve(0.0, p);
    detail("closed form P = %.9f at R* = %.6f", opt.P_pi_opt, opt.R_star);
    detail("grid search P = %.9f at R = %.6f", P_grid, best_R);
    detail("roots at theta = 0: %zu values", roots.size());
    for (double r : roots) detail("  R = %.17g", r);
    const bool roots_ok = roots.size() == 2 && std::abs(roots[0] - 1.2) < 1e-12 && std::abs(roots[1] - 1.8) < 1e-12;
    return std::abs(P_grid - opt.P_pi_opt) < 1e-6 && std::abs(opt.P_pi_opt - (-0.9999877)) < 1e-6 && roots_ok;
}

bool sideband_equivalence() {
    const SystemParams p = case_params(-0.8, 0.8);
    const TimeWindow w = default_window(p);
    const SteadyRun run = run_steady(p, thermal_sample(p, 1), w);
    const SteadyState& s = run.steady.value();
    const double B = measured_B_tilde(run, p, w);
    const cplx F_meas = measured_F(run, p, w);
    const cplx F_stat = stationary_F(s.R_s, s.theta_minus_s, p);
    const cplx F_sb = compute_F(solve_sidebands(p, B), p);
    const double e_stat = std::abs(F_sb - F_stat) / std::abs(F_stat);
    const double e_meas = std::abs(F_sb - F_meas) / std::abs(F_meas);
    detail("steady P = %+.5f theta = %.4f R = %.4g |B~|/wbar = %.4f", s.P_mean, s.theta_minus_s, s.R_s,
           B / p.omega_bar());
    detail("sideband F   = %+.6g %+.6gi", F_sb.real(), F_sb.imag());
    detail("stationary F = %+.6g %+.6gi (rel. difference %.3g)", F_stat.real(), F_stat.imag(), e_stat);
    detail("measured F   = %+.6g %+.6gi (rel. difference %.3g)", F_meas.real(), F_meas.imag(), e_meas);
    return s.stationary && e_stat < 0.05 && e_meas < 0.05;
}

bool stochastic() {
    EnsembleOptions opt;
    opt.n_trajectories = 500;
    opt.seed = 2023;
    const SystemParams coupled = desk_scaled(case_params(-0.4, 0.8), 100.0);
    const EnsembleRun a = run_ensemble(coupled, opt);
    const EnsembleStats sa = ensemble_stats(a.theta1, a.theta_minus);
    detail("case i analog: eta = %.3g, var theta_1 = %.3g, var theta_- = %.3g, failures %d", sa.eta,
           sa.var_theta1, sa.var_theta_minus, a.failures);

    SystemParams free = case_params(-0.4, 0.0);
    free.g_2 = 0.0;
    const EnsembleRun b = run_ensemble(desk_scaled(free, 100.0), opt);
    const EnsembleStats sb = ensemble_stats(b.theta1, b.theta_minus);
    detail("decoupled (g_ma = 0, g_2 = 0): eta = %.3g, var theta_1 = %.3g, var theta_- = %.3g, failures %d",
           sb.eta, sb.var_theta1, sb.var_theta_minus, b.failures);
    const bool coupled_ok = a.failures == 0 && sa.eta < 1e-2 && sa.var_theta1 > 0.0 && std::isfinite(sa.var_theta1);
    const bool free_ok = b.failures == 0 && sb.eta >= 0.1 && sb.eta <= 10.0;
    detail("coupled %s, decoupled O(1) %s", coupled_ok ? "ok" : "off", free_ok ? "ok" : "off");
    return coupled_ok && free_ok;
}

bool bistability() {
    const SystemParams A = case_params(-0.8, 0.8), B = case_params(-0.4, 0.8);
    const TimeWindow w = default_window(A);
    const BistabilityResult r = bistability_probe(A, B, w, 1);
    auto show = [&](const char* name, const SteadyState& s, const SystemParams& p) {
        detail("%-9s P = %+.5f theta = %.4f R = %.4g stationary = %d residual = %.2g", name, s.P_mean,
               s.theta_minus_s, s.R_s, s.stationary, constraint_residual(s.theta_minus_s, s.R_s, p));
    };
    show("A", r.thermal_A, A);
    show("B", r.thermal_B, B);
    show("B'", r.forward, B);
    show("A'", r.backward, A);
    auto on_curve = [](const SteadyState& s, const SystemParams& p) {
        return s.stationary && std::abs(constraint_residual(s.theta_minus_s, s.R_s, p)) < 1e-2;
    };
    auto two_states = [&](const SteadyState& x, const SteadyState& y, const SystemParams& p) {
        return on_curve(x, p) && on_curve(y, p) && std::abs(x.P_mean - y.P_mean) > 0.1;
    };
    return two_states(r.thermal_B, r.forward, B) || two_states(r.thermal_A, r.backward, A);
}

/// b' = -(g + i w) b on slot 0.
struct Rotation {
    cplx rate;
    void operator()(const ModeArray& z, ModeArray& dz) const {
        dz = {};
        dz[0] = -rate * z[0];
    }
};

bool integrator() {
    auto rk4_error = [](double dt) {
        IntegrationSpec spec;
        spec.dt = dt;
        spec.t_end = 20.0;
        spec.sample_stride = 1;
        SystemState s0(ModelKind::OneSphere);
        s0.z[0] = {1.0, 0.5};
        const cplx rate{0.05, 1.0};
        const Trajectory tr = integrate_deterministic(Rotation{rate}, s0, spec);
        const cplx exact = s0.z[0] * std::exp(-rate * tr.times.back());
        return std::abs(tr.states.back().z[0] - exact) / std::abs(exact);
    };
    const double e1 = rk4_error(0.2), e2 = rk4_error(0.1), e3 = rk4_error(0.05);
    const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
    detail("RK4 observed order %.3f, %.3f", o1, o2);

    // a' = -k a + sqrt(2k) a_in, stationary <|a|^2> = n + 1/2
    const double kappa = 1.0, nbar = 2.0;
    std::array<double, max_modes> rates{};
    rates[0] = kappa;
    IntegrationSpec spec;
    spec.method = Method::Heun;
    spec.dt = 0.01;
    spec.t_end = 50.0;
    spec.sample_stride = 100;
    spec.record_from = 5.0;
    double sum = 0.0;
    long count = 0;
    for (int traj = 0; traj < 1000; ++traj) {
        NoiseSpec noise;
        noise.n_bar[0] = nbar;
        noise.seed = 7;
        noise.stream = static_cast<std::uint64_t>(traj);
        const Trajectory tr =
            integrate_stochastic(Rotation{{kappa, 0.0}}, rates, noise, SystemState(ModelKind::OneSphere), spec);
        for (const auto& s : tr.states) {
            sum += std::norm(s.z[0]);
            ++count;
        }
    }
    const double ou = (sum / count) / (nbar + 0.5) - 1.0;
    detail("OU stationary occupation off by %.3g relative", ou);

    const SystemParams p = desk_scaled(case_params(-0.4, 0.8), 100.0);
    GaussianStream rng(5, 0);
    const SystemState s0 = sample_thermal_state(p, rng);
    IntegrationSpec hs;
    hs.method = Method::Heun;
    const ScaledParams sc = nondimensionalize(p);
    hs.dt = sc.to_seconds(default_scaled_dt(sc.params));
    hs.t_end = 5000 * hs.dt;
    hs.sample_stride = 50;
    const NoiseSpec noise = noise_from_params(p, 77, 1);
    const Trajectory x = simulate(p, s0, hs, &noise), y = simulate(p, s0, hs, &noise);
    bool identical = x.size() == y.size();
    for (std::size_t k = 0; identical && k < x.size(); ++k)
        identical = x.times[k] == y.times[k] && x.states[k] == y.states[k];
    EnsembleOptions eo;
    eo.n_trajectories = 4;
    eo.seed = 3;
    eo.window = {0.0, 2.0 / p.gamma_1};
    const EnsembleRun ea = run_ensemble(p, eo);
    eo.threads = 2;
    const EnsembleRun eb = run_ensemble(p, eo);
    identical = identical && ea.theta1 == eb.theta1 && ea.theta_minus == eb.theta_minus;
    detail("fixed-seed reruns bit-identical: %s", identical ? "yes" : "no");
    return o1 >= 3.9 && o2 >= 3.9 && std::abs(ou) <= 0.03 && identical;
}

bool stability() {
    const SystemParams weak = case_params(-3.0, 0.8);
    const PixelResult px = run_pixel(weak, default_window(weak), 1);
    detail("log10(Omega/Omega0) = -3: gray = %d, linear stable = %d", px.gray, px.linear_stable);

    const SystemParams p = case_params(0.0, 0.8);
    const HopfScan scan = hopf_scan(p, -2.0, 0.0, 81);
    const bool bracket = linearly_stable(with_drive_log10(p, scan.threshold_log10 - 2e-3)) &&
                         !linearly_stable(with_drive_log10(p, scan.threshold_log10 + 2e-3));
    detail("Hopf scan over [-2, 0]: %d flip(s), threshold log10(Omega/Omega0) = %.5f, bracket %s", scan.flips,
           scan.threshold_log10, bracket ? "ok" : "off");
    return px.gray && px.linear_stable && scan.flips == 1 && scan.stable.front() && !scan.stable.back() && bracket;
}

bool two_sphere() {
    GridSpec g;
    g.base = default_two_sphere_params();
    g.x = {AxisParam::Delta, AxisScale::Linear, -4.0, 0.0, 17};
    g.y = {AxisParam::g_ma, AxisScale::Linear, 0.25, 3.0, 12};
    g.desk_scale = 100.0;
    g.seed = 1;
    const PhaseDiagram d = run_diagram(g);
    bool low_band = false, high_band = false;
    for (int iy = 0; iy < g.y.count; ++iy) {
        const double gm = g.y.coordinate(iy);
        std::string row;
        int synced = 0;
        for (int ix = 0; ix < g.x.count; ++ix) {
            const PixelResult& px = d.at(ix, iy);
            const bool sync = limit_cycle(px) && std::abs(px.P_mean) >= 0.9;
            synced += sync;
            row += px.failed ? 'x' : px.gray ? '.' : sync ? (px.P_mean > 0 ? '+' : '-') : 'o';
        }
        const bool band = synced >= 2;
        if (band && gm <= 0.5 + 1e-9) low_band = true;
        if (band && gm >= 1.75 - 1e-9 && gm <= 2.25 + 1e-9) high_band = true;
        detail("g_ma = %.2f  %s", gm, row.c_str());
    }
    detail("band at g_ma <= 0.5: %s; band near g_ma = 2: %s", low_band ? "yes" : "no", high_band ? "yes" : "no");
    return !low_band && high_band;
}

}  // namespace

int main() {
    std::printf("magsync acceptance\n");
    criterion(1, "constraint closure over the (Omega, g_ma) plane", constraint_closure);
    criterion(2, "four labeled operating points", operating_points);
    criterion(3, "closed-form pi-phase optimum against grid search", closed_form);
    criterion(4, "sideband F against stationary and measured F", sideband_equivalence);
    criterion(5, "phase correlation under thermal noise", stochastic);
    criterion(6, "bistability under the hysteresis protocol", bistability);
    criterion(7, "integrator order, OU variance, reproducibility", integrator);
    criterion(8, "stability classification and Hopf threshold", stability);
    criterion(9, "two-sphere detuning-coupling diagram", two_sphere);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures;
}
