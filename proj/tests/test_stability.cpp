#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "magsync/stability.hpp"
#include "oracles.hpp"

using namespace magsync;
using Catch::Approx;

namespace {

SystemParams case_params(double log10_ratio, double g_ma) {
    SystemParams p = with_drive_log10(default_params(), log10_ratio);
    p.g_ma = g_ma * p.omega_1;
    return p;
}

// x [(D - lambda x)^2 + K^2] - Omega^2 for the steady magnon population x
struct Cubic {
    long double D, K, lambda, W2;
    explicit Cubic(const SystemParams& p) {
        const long double ga = static_cast<long double>(p.g_ma) * p.g_ma;
        const long double den = static_cast<long double>(p.delta_a) * p.delta_a +
                                static_cast<long double>(p.kappa_a) * p.kappa_a;
        D = p.delta_m - ga * p.delta_a / den;
        K = p.kappa_m + ga * p.kappa_a / den;
        lambda = 0.0L;
        for (auto [g, w, gam] : {std::tuple{p.g_1, p.omega_1, p.gamma_1}, {p.g_2, p.omega_2, p.gamma_2}})
            lambda += 2.0L * g * g * w / (static_cast<long double>(w) * w + static_cast<long double>(gam) * gam);
        W2 = static_cast<long double>(p.drive_amplitude()) * p.drive_amplitude();
    }
    [[nodiscard]] double operator()(double x) const {
        const long double d = D - lambda * x;
        return static_cast<double>((x * (d * d + K * K) - W2) / W2);
    }
};

Eigen::MatrixXd finite_difference_jacobian(const SystemState& s, const SystemParams& p) {
    const int n = static_cast<int>(s.real_dimension());
    Eigen::MatrixXd J(n, n);
    for (int c = 0; c < n; ++c) {
        const std::size_t mode = static_cast<std::size_t>(c / 2);
        const double h = 1e-6 * std::max(1.0, std::abs(s.z[mode]));
        const cplx step = (c % 2 == 0) ? cplx(h, 0.0) : cplx(0.0, h);
        SystemState up = s, dn = s;
        up.z[mode] += step;
        dn.z[mode] -= step;
        const SystemState fu = drift(up, p), fd = drift(dn, p);
        for (int r = 0; r < n; ++r) {
            const std::size_t m = static_cast<std::size_t>(r / 2);
            const cplx d = (fu.z[m] - fd.z[m]) / (2.0 * h);
            J(r, c) = (r % 2 == 0) ? d.real() : d.imag();
        }
    }
    return J;
}

}  // namespace

TEST_CASE("Undriven system rests at the origin", "[stability]") {
    const SystemParams p = with_drive(case_params(0.0, 0.8), 0.0);
    const auto fps = fixed_points(p);
    REQUIRE(fps.size() == 1);
    for (const cplx& z : fps[0].z) CHECK(z == cplx{});
    const FixedPointReport r = analyze_fixed_points(p);
    REQUIRE(r.points.size() == 1);
    CHECK(r.points[0].stable);
    CHECK(r.points[0].eigen_max_real < 0.0);
    CHECK(r.points[0].eigen_max_real == Approx(-p.gamma_1).epsilon(1e-6));
}

TEST_CASE("Uncoupled mechanics give a single closed-form fixed point", "[stability]") {
    SystemParams p = case_params(-0.4, 0.8);
    p.g_1 = 0.0;
    p.g_2 = 0.0;
    const auto fps = fixed_points(p);
    REQUIRE(fps.size() == 1);
    const double ga = p.g_ma * p.g_ma, den = p.delta_a * p.delta_a + p.kappa_a * p.kappa_a;
    const double D = p.delta_m - ga * p.delta_a / den, K = p.kappa_m + ga * p.kappa_a / den;
    const double W = p.drive_amplitude();
    CHECK(std::norm(fps[0].magnon()) == Approx(W * W / (D * D + K * K)).epsilon(1e-10));
    CHECK(fps[0].mech(0) == cplx{});
    CHECK(fps[0].mech(1) == cplx{});
}

TEST_CASE("Fixed points annihilate the drift", "[stability][property]") {
    for (double lg : {-1.5, -0.8, -0.4, 0.0, 0.5})
        for (double g : {0.0, 0.4, 0.8}) {
            const SystemParams p = case_params(lg, g);
            const SystemParams s = nondimensionalize(p).params;
            const double scale = s.drive_amplitude();
            for (const SystemState& fp : fixed_points(p)) {
                SystemState scaled = fp;
                const SystemState d = drift(scaled, s);
                double norm = 0.0;
                for (std::size_t k = 0; k < 4; ++k) norm = std::max(norm, std::abs(d.z[k]));
                CHECK(norm <= 1e-9 * scale);
            }
        }
}

TEST_CASE("Fixed-point count matches sign changes of the cubic", "[stability][property]") {
    int three = 0;
    for (double delta : {-1.0, 1.0})
        for (double g : {0.0, 0.8})
            for (double lg = -1.0; lg <= 1.5; lg += 0.125) {
                SystemParams p = with_detuning(case_params(lg, g), delta * default_params().omega_1);
                const Cubic f(p);
                const double W = p.drive_amplitude();
                const double xmax = 2.0 * W * W / static_cast<double>(f.K * f.K);
                const int ref = oracle::sign_changes(f, 0.0, xmax, 400000);
                const auto fps = fixed_points(p);
                CHECK(static_cast<int>(fps.size()) == ref);
                for (const SystemState& fp : fps) CHECK(std::abs(f(std::norm(fp.magnon()))) < 1e-8);
                if (ref == 3) ++three;
            }
    CHECK(three > 0);
}

TEST_CASE("Jacobian of decoupled modes", "[stability]") {
    SystemParams p = case_params(-0.4, 0.0);
    p.g_1 = 0.0;
    p.g_2 = 0.0;
    const SystemState origin(ModelKind::OneSphere);
    const Eigen::MatrixXd J = jacobian(origin, p);
    REQUIRE(J.rows() == 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            if (r / 2 != c / 2) CHECK(J(r, c) == 0.0);

    auto ev = eigenvalues(origin, p);
    std::vector<cplx> expect;
    for (auto [k, w] : {std::pair{p.kappa_a, p.delta_a}, {p.kappa_m, p.delta_m}, {p.gamma_1, p.omega_1},
                        {p.gamma_2, p.omega_2}}) {
        expect.emplace_back(-k, w);
        expect.emplace_back(-k, -w);
    }
    auto order = [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); };
    std::sort(ev.begin(), ev.end(), order);
    std::sort(expect.begin(), expect.end(), order);
    REQUIRE(ev.size() == expect.size());
    for (std::size_t i = 0; i < ev.size(); ++i) CHECK(std::abs(ev[i] - expect[i]) <= 1e-9 * std::abs(expect[i]));
}

TEST_CASE("Analytic Jacobian against central differences", "[stability][property]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const SystemParams& phys : {case_params(-0.4, 0.8), default_two_sphere_params()}) {
        const SystemParams p = nondimensionalize(phys).params;
        for (int trial = 0; trial < 20; ++trial) {
            SystemState s(p.model_kind);
            for (std::size_t k = 0; k < s.mode_count(); ++k) s.z[k] = cplx(u(rng), u(rng)) * 1e3;
            const Eigen::MatrixXd J = jacobian(s, p);
            const Eigen::MatrixXd ref = finite_difference_jacobian(s, p);
            CHECK((J - ref).norm() <= 1e-6 * ref.norm());
        }
    }
}

TEST_CASE("Eigenvalues come in conjugate pairs", "[stability][property]") {
    const SystemParams p = case_params(-0.4, 0.8);
    for (const SystemState& fp : fixed_points(p)) {
        const auto ev = eigenvalues(fp, p);
        for (const cplx& l : ev) {
            const auto match = std::min_element(ev.begin(), ev.end(), [&](cplx a, cplx b) {
                return std::abs(a - std::conj(l)) < std::abs(b - std::conj(l));
            });
            CHECK(std::abs(*match - std::conj(l)) <= 1e-9 * std::max(1.0, std::abs(l)));
        }
    }
}

TEST_CASE("Reported stable points clear the margin", "[stability][property]") {
    for (double lg = -2.0; lg <= 0.0; lg += 0.25) {
        const FixedPointReport r = analyze_fixed_points(case_params(lg, 0.8));
        for (const FixedPointInfo& f : r.points) {
            const double rate = default_params().omega_1;
            if (f.stable) {
                for (const cplx& l : f.eigenvalues) CHECK(l.real() < -stability_margin * rate);
                CHECK_FALSE(f.marginal);
            }
            CHECK(f.residual < 1e-9);
        }
        if (r.best_stable >= 0) CHECK(r.points[static_cast<std::size_t>(r.best_stable)].stable);
    }
}

TEST_CASE("Weak drive relaxes to the fixed point", "[stability]") {
    const SystemParams p = case_params(-3.0, 0.8);
    StabilityOptions opt;
    opt.t_end = 10.0 / p.gamma_1;
    const StabilityResult r = classify_stability(p, opt);
    CHECK(r.linear_stable);
    CHECK(r.trajectory_converged);
    CHECK(r.stable);
    CHECK(r.eigen_max_real < 0.0);
}

TEST_CASE("Hopf threshold at fixed cavity-magnon coupling", "[stability]") {
    const SystemParams p = case_params(0.0, 0.8);
    const HopfScan scan = hopf_scan(p, -2.0, 0.0, 41);
    CHECK(scan.flips == 1);
    REQUIRE(scan.grid.size() == 41);
    CHECK(scan.stable.front());
    CHECK_FALSE(scan.stable.back());
    CHECK(scan.threshold_log10 > -2.0);
    CHECK(scan.threshold_log10 < -0.4);
    // the bracket around the threshold straddles the eigenvalue crossing
    CHECK(linearly_stable(with_drive_log10(p, scan.threshold_log10 - 2e-3)));
    CHECK_FALSE(linearly_stable(with_drive_log10(p, scan.threshold_log10 + 2e-3)));
}

TEST_CASE("Two-sphere fixed points", "[stability]") {
    const SystemParams p = default_two_sphere_params();
    const FixedPointReport r = analyze_fixed_points(p);
    REQUIRE_FALSE(r.points.empty());
    for (const FixedPointInfo& f : r.points) {
        CHECK(f.residual < 1e-9);
        CHECK(f.eigenvalues.size() == 10);
    }
}
