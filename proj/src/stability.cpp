#include "magsync/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magsync {

namespace {

using Cmat = Eigen::MatrixXcd;

/// Holomorphic and anti-holomorphic parts of the drift derivative:
/// df_i = A_ik dz_k + B_ik dz_k^*.
void drift_derivatives(const SystemState& s, const SystemParams& p, Cmat& A, Cmat& B) {
    const auto n = static_cast<Eigen::Index>(s.mode_count());
    A = Cmat::Zero(n, n);
    B = Cmat::Zero(n, n);
    const cplx I(0.0, 1.0);
    const std::size_t na = SystemState::cavity;
    const double g[2] = {p.g_1, p.g_2};
    const cplx lb[2] = {-(I * p.omega_1 + p.gamma_1), -(I * p.omega_2 + p.gamma_2)};
    A(na, na) = -(I * p.delta_a + p.kappa_a);
    if (p.model_kind == ModelKind::OneSphere) {
        const std::size_t nm = SystemState::magnon_index(p.model_kind, 0);
        const cplx m = s.z[nm];
        double S = 0.0;
        for (std::size_t j = 0; j < 2; ++j) S += 2.0 * g[j] * s.mech(j).real();
        A(na, nm) = -I * p.g_ma;
        A(nm, na) = -I * p.g_ma;
        A(nm, nm) = -(I * p.delta_m + p.kappa_m) - I * S;
        for (std::size_t j = 0; j < 2; ++j) {
            const auto nb = static_cast<Eigen::Index>(SystemState::mech_index(p.model_kind, j));
            A(nm, nb) = -I * g[j] * m;
            B(nm, nb) = -I * g[j] * m;
            A(nb, nb) = lb[j];
            A(nb, nm) = -I * g[j] * std::conj(m);
            B(nb, nm) = -I * g[j] * m;
        }
    } else {
        const double kappa[2] = {p.kappa_1, p.kappa_2};
        const double delta[2] = {p.delta_1, p.delta_2};
        for (std::size_t j = 0; j < 2; ++j) {
            const auto nm = static_cast<Eigen::Index>(SystemState::magnon_index(p.model_kind, j));
            const auto nb = static_cast<Eigen::Index>(SystemState::mech_index(p.model_kind, j));
            const cplx m = s.z[static_cast<std::size_t>(nm)];
            const double S = 2.0 * g[j] * s.mech(j).real();
            A(na, nm) = -I * p.g_ma;
            A(nm, na) = -I * p.g_ma;
            A(nm, nm) = -(I * delta[j] + kappa[j]) - I * S;
            A(nm, nb) = -I * g[j] * m;
            B(nm, nb) = -I * g[j] * m;
            A(nb, nb) = lb[j];
            A(nb, nm) = -I * g[j] * std::conj(m);
            B(nb, nm) = -I * g[j] * m;
        }
    }
}

Eigen::VectorXd to_real(const ModeArray& z, std::size_t n) {
    Eigen::VectorXd v(2 * static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        v(2 * static_cast<Eigen::Index>(i)) = z[i].real();
        v(2 * static_cast<Eigen::Index>(i) + 1) = z[i].imag();
    }
    return v;
}

ModeArray from_real(const Eigen::VectorXd& v) {
    ModeArray z{};
    for (Eigen::Index i = 0; 2 * i < v.size(); ++i)
        z[static_cast<std::size_t>(i)] = {v(2 * i), v(2 * i + 1)};
    return z;
}

double drift_norm(const SystemState& s, const SystemParams& scaled) {
    ModeArray dz{};
    LangevinDrift{scaled}(s.z, dz);
    double r = 0.0;
    for (std::size_t i = 0; i < s.mode_count(); ++i) r = std::max(r, std::abs(dz[i]));
    return r;
}

double relative_residual(const SystemState& s, const SystemParams& scaled) {
    return drift_norm(s, scaled) / std::max(1.0, scaled.drive_amplitude());
}

double distance(const ModeArray& a, const ModeArray& b, std::size_t n) {
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) d += std::norm(a[i] - b[i]);
    return std::sqrt(d);
}

void push_unique(std::vector<SystemState>& out, const SystemState& s) {
    const double scale = std::max(1.0, s.norm());
    for (const auto& o : out)
        if (distance(o.z, s.z, s.mode_count()) <= 1e-6 * scale) return;
    out.push_back(s);
}

std::vector<SystemState> one_sphere_points(const SystemParams& p) {
    const cplx I(0.0, 1.0);
    const double Om = p.drive_amplitude();
    const double D = p.delta_a * p.delta_a + p.kappa_a * p.kappa_a;
    const double g2 = p.g_ma * p.g_ma;
    const double dprime = p.delta_m - g2 * p.delta_a / D;
    const double K = p.kappa_m + g2 * p.kappa_a / D;
    const double lambda = 2.0 * p.g_1 * p.g_1 * p.omega_1 / (p.omega_1 * p.omega_1 + p.gamma_1 * p.gamma_1) +
                          2.0 * p.g_2 * p.g_2 * p.omega_2 / (p.omega_2 * p.omega_2 + p.gamma_2 * p.gamma_2);

    // Frequency shifts y = lambda |m|^2 solve y[(D' - y)^2 + K^2] = lambda Omega^2.
    std::vector<double> shifts;
    if (lambda == 0.0 || Om == 0.0) {
        shifts.push_back(0.0);
    } else {
        const double c2 = -2.0 * dprime, c1 = dprime * dprime + K * K, c0 = -lambda * Om * Om;
        Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
        comp(0, 2) = -c0;
        comp(1, 2) = -c1;
        comp(2, 2) = -c2;
        comp(1, 0) = 1.0;
        comp(2, 1) = 1.0;
        const Eigen::Vector3cd roots = comp.eigenvalues();
        const double scale = std::max({std::abs(c2), std::sqrt(std::abs(c1)), std::cbrt(std::abs(c0))});
        auto cubic = [&](double y) { return ((y + c2) * y + c1) * y + c0; };
        auto dcubic = [&](double y) { return (3.0 * y + 2.0 * c2) * y + c1; };
        for (const cplx& r : roots) {
            if (std::abs(r.imag()) > 1e-6 * scale) continue;
            double y = r.real();
            for (int it = 0; it < 50; ++it) {
                const double d = dcubic(y);
                if (d == 0.0) break;
                const double step = cubic(y) / d;
                y -= step;
                if (std::abs(step) <= 1e-16 * std::max(std::abs(y), scale)) break;
            }
            if (y < 0.0) continue;
            bool dup = false;
            for (double s : shifts) dup = dup || std::abs(s - y) <= 1e-9 * scale;
            if (!dup) shifts.push_back(y);
        }
        std::sort(shifts.begin(), shifts.end());
    }

    std::vector<SystemState> out;
    for (double y : shifts) {
        SystemState s(ModelKind::OneSphere);
        const cplx m = Om / (I * (dprime - y) + K);
        const double x = std::norm(m);
        s.magnon() = m;
        s.a() = -I * p.g_ma * m / (I * p.delta_a + p.kappa_a);
        s.mech(0) = -I * p.g_1 * x / (I * p.omega_1 + p.gamma_1);
        s.mech(1) = -I * p.g_2 * x / (I * p.omega_2 + p.gamma_2);
        push_unique(out, s);
    }
    return out;
}

/// Damped Newton on the real drift; returns the final relative residual.
double newton(SystemState& s, const SystemParams& p, int max_iter = 100) {
    const std::size_t n = s.mode_count();
    double res = relative_residual(s, p);
    for (int it = 0; it < max_iter && res > 1e-14; ++it) {
        ModeArray dz{};
        LangevinDrift{p}(s.z, dz);
        const Eigen::VectorXd f = to_real(dz, n);
        const Eigen::MatrixXd J = jacobian(s, p);
        const Eigen::VectorXd step = J.partialPivLu().solve(-f);
        if (!step.allFinite()) break;
        const Eigen::VectorXd x0 = to_real(s.z, n);
        double t = 1.0;
        bool improved = false;
        for (int h = 0; h < 40; ++h, t *= 0.5) {
            SystemState trial(s.kind);
            trial.z = from_real(x0 + t * step);
            const double r = relative_residual(trial, p);
            if (r < res) {
                s = trial;
                res = r;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return res;
}

std::vector<SystemState> two_sphere_points(const SystemParams& p) {
    std::vector<SystemState> out;
    const double target = p.drive_amplitude();
    SystemState s(ModelKind::TwoSphere);
    double level = 0.0, step = 1.0 / 16.0;
    double res = 0.0;
    while (level < 1.0) {
        const double next = std::min(1.0, level + step);
        SystemParams q = p;
        q.drive = CavityDrive{target * next};
        SystemState trial = s;
        const double r = newton(trial, q);
        if (r <= 1e-12) {
            s = trial;
            level = next;
            res = r;
            step = std::min(0.25, step * 1.5);
        } else {
            step *= 0.5;
            if (step < 1e-6) throw FixedPointError("homotopy in the drive did not converge", r);
        }
    }
    if (res > 1e-12) throw FixedPointError("Newton iteration did not converge", res);
    push_unique(out, s);

    // Restarts around the continued branch catch coexisting roots.
    for (double f : {0.25, 0.5, 2.0, 4.0}) {
        SystemState trial = s;
        for (std::size_t j = 0; j < 2; ++j) trial.magnon(j) *= f;
        for (std::size_t j = 0; j < 2; ++j) trial.mech(j) *= f * f;
        if (newton(trial, p, 200) <= 1e-12) push_unique(out, trial);
    }
    return out;
}

}  // namespace

Eigen::MatrixXd jacobian(const SystemState& state, const SystemParams& params) {
    if (state.kind != params.model_kind)
        throw std::invalid_argument("state layout does not match the model kind");
    Cmat A, B;
    drift_derivatives(state, params, A, B);
    const auto n = A.rows();
    Eigen::MatrixXd J(2 * n, 2 * n);
    const cplx I(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const cplx dx = A(i, k) + B(i, k);      // df_i / d Re z_k
            const cplx dy = I * (A(i, k) - B(i, k));  // df_i / d Im z_k
            J(2 * i, 2 * k) = dx.real();
            J(2 * i + 1, 2 * k) = dx.imag();
            J(2 * i, 2 * k + 1) = dy.real();
            J(2 * i + 1, 2 * k + 1) = dy.imag();
        }
    }
    return J;
}

std::vector<cplx> eigenvalues(const SystemState& state, const SystemParams& params) {
    const Eigen::VectorXcd ev = jacobian(state, params).eigenvalues();
    std::vector<cplx> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    return out;
}

std::vector<SystemState> fixed_points(const SystemParams& params) {
    validate(params);
    const ScaledParams scaled = nondimensionalize(params);
    return params.model_kind == ModelKind::OneSphere ? one_sphere_points(scaled.params)
                                                     : two_sphere_points(scaled.params);
}

FixedPointReport analyze_fixed_points(const SystemParams& params) {
    const ScaledParams scaled = nondimensionalize(params);
    FixedPointReport rep;
    double best = std::numeric_limits<double>::infinity();
    for (const SystemState& s : fixed_points(params)) {
        FixedPointInfo info;
        info.state = s;
        info.residual = relative_residual(s, scaled.params);
        const auto ev = eigenvalues(s, scaled.params);
        double mx = -std::numeric_limits<double>::infinity();
        for (const cplx& e : ev) {
            mx = std::max(mx, e.real());
            info.eigenvalues.push_back(e * scaled.rate_unit);
        }
        info.eigen_max_real = mx * scaled.rate_unit;
        info.stable = mx < -stability_margin;
        info.marginal = std::abs(mx) <= stability_margin;
        rep.any_stable = rep.any_stable || info.stable;
        rep.any_marginal = rep.any_marginal || info.marginal;
        if (info.stable && mx < best) {
            best = mx;
            rep.best_stable = static_cast<int>(rep.points.size());
        }
        rep.points.push_back(std::move(info));
    }
    return rep;
}

bool linearly_stable(const SystemParams& params) {
    return analyze_fixed_points(params).any_stable;
}

ConvergenceMonitor::ConvergenceMonitor(const SystemState& target, double t_end)
    : target_(target), t_end_(t_end) {}

void ConvergenceMonitor::operator()(double t, const ModeArray& z) {
    const double d = distance(z, target_.z, target_.mode_count());
    if (d_start_ < 0.0) d_start_ = d;
    if (d_tail_ < 0.0 && t >= 0.9 * t_end_) d_tail_ = d;
    d_last_ = d;
}

bool ConvergenceMonitor::converged() const {
    if (d_start_ < 0.0 || d_tail_ < 0.0) return false;
    if (d_last_ == 0.0) return true;
    return d_last_ < d_tail_ && d_last_ < 1e-3 * d_start_;
}

StabilityResult classify_stability(const SystemParams& params, const StabilityOptions& options) {
    StabilityResult out;
    out.report = analyze_fixed_points(params);
    out.linear_stable = out.report.any_stable;
    out.marginal = out.report.any_marginal;
    if (out.report.best_stable >= 0) {
        out.eigen_max_real = out.report.points[static_cast<std::size_t>(out.report.best_stable)].eigen_max_real;
    } else {
        out.eigen_max_real = std::numeric_limits<double>::infinity();
        for (const auto& p : out.report.points) out.eigen_max_real = std::min(out.eigen_max_real, p.eigen_max_real);
    }
    if (!out.linear_stable) return out;

    const ScaledParams scaled = nondimensionalize(params);
    const double t_end = scaled.to_scaled_time(options.t_end > 0.0 ? options.t_end : 19.0 / params.gamma_1);
    const double dt = default_scaled_dt(scaled.params);
    GaussianStream rng(options.seed, 0);
    SystemState s = sample_thermal_state(params, rng);
    const SystemState& target = out.report.points[static_cast<std::size_t>(out.report.best_stable)].state;
    ConvergenceMonitor monitor(target, t_end);
    const LangevinDrift f(scaled.params);
    const auto steps = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
    run_rk4(f, s.z, s.mode_count(), 0.0, dt, steps, steps_per_period(scaled.params), monitor);
    out.trajectory_converged = monitor.converged();
    out.stable = out.trajectory_converged;
    return out;
}

HopfScan hopf_scan(const SystemParams& params, double lo, double hi, int samples, double tol) {
    if (samples < 2 || !(hi > lo)) throw std::invalid_argument("invalid Hopf scan range");
    HopfScan scan;
    for (int i = 0; i < samples; ++i) {
        const double v = lo + (hi - lo) * i / (samples - 1);
        scan.grid.push_back(v);
        scan.stable.push_back(linearly_stable(with_drive_log10(params, v)));
    }
    scan.threshold_log10 = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 1; i < scan.stable.size(); ++i) {
        if (scan.stable[i] == scan.stable[i - 1]) continue;
        if (scan.flips++ > 0) continue;
        double a = scan.grid[i - 1], b = scan.grid[i];
        const bool sa = scan.stable[i - 1];
        while (b - a > tol) {
            const double m = 0.5 * (a + b);
            (linearly_stable(with_drive_log10(params, m)) == sa ? a : b) = m;
        }
        scan.threshold_log10 = 0.5 * (a + b);
    }
    return scan;
}

}  // namespace magsync
