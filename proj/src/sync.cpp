#include "magsync/sync.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace magsync {

using constants::pi;
using constants::two_pi;

TimeWindow default_window(const SystemParams& params) {
    return {9.0 / params.gamma_1, 19.0 / params.gamma_1};
}

double wrap_phase(double theta) {
    double r = std::remainder(theta, two_pi);  // [-pi, pi]
    if (r <= -pi) r += two_pi;
    return r;
}

namespace {

double unwrap_next(double previous, double raw) {
    return previous + wrap_phase(raw - previous);
}

void fill_derived(SyncObservables& o) {
    o.theta_minus = wrap_phase(o.theta_1 - o.theta_2);
    o.P = std::cos(o.theta_minus);
    o.R = o.I2 > 0.0 ? o.I1 / o.I2 : std::numeric_limits<double>::infinity();
}

double circular_mean(const std::vector<double>& phases) {
    double s = 0.0, c = 0.0;
    for (double p : phases) {
        s += std::sin(p);
        c += std::cos(p);
    }
    return std::atan2(s, c);
}

}  // namespace

std::vector<SyncObservables> extract_sva(const Trajectory& traj, const SystemParams& params,
                                         const TimeWindow& window) {
    if (traj.times.size() != traj.states.size())
        throw std::invalid_argument("trajectory times and states differ in length");
    if (!(window.hi > window.lo)) throw std::invalid_argument("empty analysis window");
    if (traj.times.empty() || window.lo < traj.times.front() - 1e-12 * std::abs(window.lo) ||
        window.hi > traj.times.back() + 1e-12 * std::abs(window.hi))
        throw std::invalid_argument("analysis window outside the trajectory support");

    const double wbar = params.omega_bar();
    const double period = two_pi / wbar;
    const auto periods = static_cast<long>(std::floor((window.hi - window.lo) / period + 1e-9));
    if (periods < 10)
        throw InsufficientDataError("analysis window spans fewer than 10 mechanical periods");

    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        if (window.contains(traj.times[i])) idx.push_back(i);
    if (idx.size() < 2) throw InsufficientDataError("fewer than two samples in the window");
    const double spacing =
        (traj.times[idx.back()] - traj.times[idx.front()]) / static_cast<double>(idx.size() - 1);
    if (spacing * 20.0 > period * (1.0 + 1e-9))
        throw InsufficientDataError("sampling resolves fewer than 20 points per period");

    const ModelKind kind = traj.states[idx.front()].kind;
    const double t_beta_end = window.lo + static_cast<double>(periods) * period;
    std::array<cplx, 2> beta{};
    std::size_t n_beta = 0;
    for (std::size_t i : idx) {
        if (traj.times[i] >= t_beta_end - 0.5 * spacing) break;
        for (std::size_t j = 0; j < 2; ++j) beta[j] += traj.states[i].mech(j);
        ++n_beta;
    }
    for (auto& b : beta) b /= static_cast<double>(n_beta);

    std::vector<SyncObservables> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        const double t = traj.times[i];
        const cplx rot = std::polar(1.0, wbar * t);
        const SystemState& s = traj.states[i];
        if (s.kind != kind) throw std::invalid_argument("mixed state layouts in trajectory");
        const cplx B1 = (s.mech(0) - beta[0]) * rot;
        const cplx B2 = (s.mech(1) - beta[1]) * rot;
        SyncObservables o;
        o.t = t;
        o.I1 = std::abs(B1);
        o.I2 = std::abs(B2);
        if (out.empty()) {
            o.theta_1 = std::arg(B1);
            o.theta_2 = std::arg(B2);
        } else {
            o.theta_1 = unwrap_next(out.back().theta_1, std::arg(B1));
            o.theta_2 = unwrap_next(out.back().theta_2, std::arg(B2));
        }
        fill_derived(o);
        out.push_back(o);
    }
    return out;
}

double order_parameter(const std::vector<SyncObservables>& series, const TimeWindow& window) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& o : series) {
        if (!window.contains(o.t)) continue;
        sum += std::cos(o.theta_minus);
        ++n;
    }
    if (n == 0) throw std::invalid_argument("no samples inside the averaging window");
    return sum / static_cast<double>(n);
}

PeriodDemodulator::PeriodDemodulator(ModelKind kind, double omega_bar, double t_origin,
                                     int samples_per_period)
    : kind_(kind), omega_bar_(omega_bar), t_origin_(t_origin), per_period_(samples_per_period) {
    if (!(omega_bar > 0.0)) throw std::invalid_argument("omega_bar must be positive");
    if (samples_per_period < 20)
        throw std::invalid_argument("demodulation needs at least 20 samples per period");
}

void PeriodDemodulator::operator()(double t, const ModeArray& z) {
    const double period = two_pi / omega_bar_;
    // Sample k of a period covers [t_k, t_k + T/per_period); the shift by half
    // a sample keeps boundary samples in a single bin despite rounding.
    const double u = (t - t_origin_) / period + 0.5 / per_period_;
    const long k = static_cast<long>(std::floor(u));
    if (k < 0) return;
    if (count_ > 0 && k != current_) flush();
    current_ = k;
    const cplx rot = std::polar(1.0, omega_bar_ * (t - t_origin_));
    const cplx b1 = z[SystemState::mech_index(kind_, 0)];
    const cplx b2 = z[SystemState::mech_index(kind_, 1)];
    acc_[0] += b1 * rot;
    acc_[1] += b2 * rot;
    acc_mean_[0] += b1;
    acc_mean_[1] += b2;
    acc_m_ += std::norm(z[SystemState::magnon_index(kind_, 0)]) * rot;
    if (++count_ == per_period_) flush();
}

void PeriodDemodulator::flush() {
    if (count_ == per_period_) {
        const double inv = 1.0 / count_;
        const double period = two_pi / omega_bar_;
        Period p;
        p.t_mid = t_origin_ + (static_cast<double>(current_) + 0.5) * period;
        // The phasor is referenced to t_origin; restore the absolute frame.
        const cplx shift = std::polar(1.0, omega_bar_ * t_origin_);
        p.B = {acc_[0] * inv * shift, acc_[1] * inv * shift};
        p.magnon_first_harmonic = acc_m_ * inv * shift;
        p.b_mean = {acc_mean_[0] * inv, acc_mean_[1] * inv};
        periods_.push_back(p);
    }
    acc_ = {};
    acc_mean_ = {};
    acc_m_ = {};
    count_ = 0;
}

std::vector<SyncObservables> observables(const std::vector<PeriodDemodulator::Period>& periods) {
    std::vector<SyncObservables> out;
    out.reserve(periods.size());
    for (const auto& p : periods) {
        SyncObservables o;
        o.t = p.t_mid;
        o.I1 = std::abs(p.B[0]);
        o.I2 = std::abs(p.B[1]);
        if (out.empty()) {
            o.theta_1 = std::arg(p.B[0]);
            o.theta_2 = std::arg(p.B[1]);
        } else {
            o.theta_1 = unwrap_next(out.back().theta_1, std::arg(p.B[0]));
            o.theta_2 = unwrap_next(out.back().theta_2, std::arg(p.B[1]));
        }
        fill_derived(o);
        out.push_back(o);
    }
    return out;
}

SteadyState summarize_window(const std::vector<SyncObservables>& series, const TimeWindow& window,
                             const StationarityTolerance& tol) {
    std::vector<const SyncObservables*> in;
    for (const auto& o : series)
        if (window.contains(o.t)) in.push_back(&o);
    if (in.size() < 2) throw InsufficientDataError("fewer than two samples in the window");

    auto stats = [](auto begin, auto end, double& i1, double& i2, double& mean_phase,
                    double& p) {
        double s = 0.0, c = 0.0;
        i1 = i2 = p = 0.0;
        const auto n = static_cast<double>(end - begin);
        for (auto it = begin; it != end; ++it) {
            i1 += (*it)->I1;
            i2 += (*it)->I2;
            p += (*it)->P;
            s += std::sin((*it)->theta_minus);
            c += std::cos((*it)->theta_minus);
        }
        i1 /= n;
        i2 /= n;
        p /= n;
        mean_phase = std::atan2(s, c);
        return std::hypot(s, c) / n;  // mean resultant length
    };

    SteadyState ss;
    ss.samples = in.size();
    const double rbar = stats(in.begin(), in.end(), ss.I1, ss.I2, ss.theta_minus_s, ss.P_mean);
    ss.R_s = ss.I2 > 0.0 ? ss.I1 / ss.I2 : std::numeric_limits<double>::infinity();
    ss.theta_spread = rbar >= 1.0 ? 0.0 : std::sqrt(-2.0 * std::log(rbar));

    const auto mid = in.begin() + static_cast<std::ptrdiff_t>(in.size() / 2);
    double a1, a2, ap, pp, b1, b2, bp, qp;
    stats(in.begin(), mid, a1, a2, ap, pp);
    stats(mid, in.end(), b1, b2, bp, qp);
    auto rel = [](double x, double y) {
        const double scale = 0.5 * (std::abs(x) + std::abs(y));
        return scale > 0.0 ? std::abs(x - y) / scale : 0.0;
    };
    ss.amplitude_drift = std::max(rel(a1, b1), rel(a2, b2));
    ss.phase_drift = std::abs(wrap_phase(bp - ap));
    ss.stationary = ss.I1 > 0.0 && ss.I2 > 0.0 && ss.amplitude_drift < tol.amplitude &&
                    ss.phase_drift < tol.phase && ss.theta_spread < tol.phase;
    return ss;
}

// ---------------------------------------------------------------------------

std::array<cplx, 2> sva_rhs(cplx B1, cplx B2, cplx F, const SystemParams& p) {
    const double wbar = p.omega_bar();
    const double gt = p.g_tilde();
    const cplx I(0.0, 1.0);
    const cplx Bt = p.g_1 * B1 + p.g_2 * B2;
    const cplx k = gt > 0.0 ? I * F / gt : cplx{};
    return {-(I * (p.omega_1 - wbar) + p.gamma_1) * B1 - k * p.g_1 * Bt,
            -(I * (p.omega_2 - wbar) + p.gamma_2) * B2 - k * p.g_2 * Bt};
}

std::array<double, 3> kle_rhs(double I1, double I2, double th, cplx F, const SystemParams& p) {
    if (!(I1 > 0.0) || !(I2 > 0.0))
        throw std::invalid_argument("Kuramoto-like equations need positive amplitudes");
    const double g1 = p.g_1, g2 = p.g_2, gt = p.g_tilde();
    const double Fr = F.real(), Fi = F.imag();
    const double c = std::cos(th), s = std::sin(th);
    const double k = g1 * g2 / gt;
    const double G1 = g1 * g1 * Fi / gt - p.gamma_1;
    const double G2 = g2 * g2 * Fi / gt - p.gamma_2;
    const double dI1 = G1 * I1 + k * (Fi * c - Fr * s) * I2;
    const double dI2 = G2 * I2 + k * (Fi * c + Fr * s) * I1;
    const double dth = k * (Fr * c * (I1 * I1 - I2 * I2) / (I1 * I2) -
                            Fi * s * (I1 * I1 + I2 * I2) / (I1 * I2)) +
                       (g2 * g2 - g1 * g1) * Fr / gt + p.delta_omega();
    return {dI1, dI2, dth};
}

std::vector<ReducedSample> integrate_sva(const SystemParams& params, cplx B0_1, cplx B0_2,
                                         const IntegrationSpec& spec, int refresh_stride,
                                         const SidebandOptions& sideband) {
    validate(params);
    validate(spec);
    if (refresh_stride < 1) throw std::invalid_argument("refresh_stride must be >= 1");

    auto F_at = [&](double Bt) -> cplx {
        // F has a finite limit as |B~| -> 0; evaluate just above it.
        const double floor = 1e-12 * params.omega_bar();
        try {
            return solve_sidebands(params, std::max(Bt, floor), sideband).F;
        } catch (const SidebandConvergenceError& e) {
            throw SidebandConvergenceError(
                std::string("integrate_sva: ") + e.what() + " at |B~| = " + std::to_string(Bt),
                e.residual());
        }
    };

    std::vector<ReducedSample> out;
    std::array<cplx, 2> B{B0_1, B0_2};
    const std::int64_t steps = step_count(spec);
    const double dt = spec.dt;
    cplx F{};
    auto Bt = [&](const std::array<cplx, 2>& b) { return std::abs(params.g_1 * b[0] + params.g_2 * b[1]); };
    auto record = [&](double t) {
        if (t + 1e-12 * std::abs(t) >= spec.record_from) out.push_back({t, B[0], B[1], F, Bt(B)});
    };
    auto rhs = [&](const std::array<cplx, 2>& b) { return sva_rhs(b[0], b[1], F, params); };
    F = F_at(Bt(B));
    record(0.0);
    for (std::int64_t s = 1; s <= steps; ++s) {
        const auto k1 = rhs(B);
        const auto k2 = rhs({B[0] + 0.5 * dt * k1[0], B[1] + 0.5 * dt * k1[1]});
        const auto k3 = rhs({B[0] + 0.5 * dt * k2[0], B[1] + 0.5 * dt * k2[1]});
        const auto k4 = rhs({B[0] + dt * k3[0], B[1] + dt * k3[1]});
        for (std::size_t j = 0; j < 2; ++j) B[j] += dt / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
        if (!std::isfinite(std::abs(B[0])) || !std::isfinite(std::abs(B[1])))
            throw DivergenceError(s * dt, "reduced amplitudes became non-finite");
        if (s % refresh_stride == 0) F = F_at(Bt(B));
        if (s % spec.sample_stride == 0 || s == steps) record(static_cast<double>(s) * dt);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

double fs_denominator(double R, double th, const SystemParams& p) {
    return p.g_2 * p.g_2 + 2.0 * p.g_1 * p.g_2 * R * std::cos(th) + p.g_1 * p.g_1 * R * R;
}

}  // namespace

double stationary_F_imag(double R, double th, const SystemParams& p) {
    if (!(R > 0.0)) throw std::invalid_argument("R must be positive");
    return p.g_tilde() * (p.gamma_2 + p.gamma_1 * R * R) / fs_denominator(R, th, p);
}

cplx stationary_F(double R, double th, const SystemParams& p) {
    if (!(R > 0.0)) throw std::invalid_argument("R must be positive");
    const double s = std::sin(th);
    if (std::abs(s) < 1e-300 || std::abs(wrap_phase(th)) < 1e-15 ||
        std::abs(std::abs(wrap_phase(th)) - pi) < 1e-15)
        throw SingularConfigurationError("F_r^s has a pole at sin(theta_-) = 0");
    const double g1 = p.g_1, g2 = p.g_2, c = std::cos(th);
    const double num = (g1 * g1 * p.gamma_2 - g2 * g2 * p.gamma_1) * R +
                       g1 * g2 * (p.gamma_2 - p.gamma_1 * R * R) * c;
    const double Fr = p.g_tilde() * num / (g1 * g2 * fs_denominator(R, th, p) * s);
    return {Fr, stationary_F_imag(R, th, p)};
}

std::vector<double> constraint_solve(double th, const SystemParams& p) {
    if (!(p.g_1 > 0.0) || !(p.g_2 > 0.0))
        throw std::invalid_argument("constraint equation needs g_1, g_2 > 0");
    const double a = p.g_2 * p.gamma_1 / p.g_1;
    const double c = p.g_1 * p.gamma_2 / p.g_2;
    const double C = p.delta_omega() * std::sin(th) + (p.gamma_1 + p.gamma_2) * std::cos(th);
    if (!(C > 0.0)) return {};
    const double disc = C * C - 4.0 * a * c;
    if (disc < 0.0) return {};
    if (disc == 0.0) return {C / (2.0 * a)};
    // Numerically stable pair: the larger root directly, the smaller by Vieta.
    const double big = (C + std::sqrt(disc)) / (2.0 * a);
    return {c / (a * big), big};
}

double constraint_residual(double th, double R, const SystemParams& p) {
    const double lhs = p.delta_omega() * std::sin(th) + (p.gamma_1 + p.gamma_2) * std::cos(th);
    const double rhs = p.g_2 * p.gamma_1 / p.g_1 * R + p.g_1 * p.gamma_2 / (p.g_2 * R);
    return (lhs - rhs) / rhs;
}

PiPhaseOptimum pi_phase_optimum(const SystemParams& p) {
    const double dw = p.delta_omega();
    if (dw == 0.0) throw std::invalid_argument("pi-phase optimum needs a nonzero detuning");
    const double g1 = p.gamma_1, g2 = p.gamma_2;
    const double adw = std::abs(dw);
    PiPhaseOptimum out;
    out.R_star = p.g_1 / p.g_2 * std::sqrt(g2 / g1);
    const double A = std::hypot(adw, g1 + g2);
    const double k = 2.0 * std::sqrt(g1 * g2) / A;
    const double alpha = std::atan2(g1 + g2, adw);
    out.theta_max = std::copysign(pi - alpha - std::asin(k), dw);
    out.P_pi_opt = (2.0 * (g1 + g2) * std::sqrt(g1 * g2) - adw * std::hypot(adw, g1 - g2)) /
                   (adw * adw + (g1 + g2) * (g1 + g2));
    return out;
}

bool FsLocus::empty(LocusKind kind) const {
    return std::none_of(branches.begin(), branches.end(), [&](const LocusBranch& b) {
        return b.kind == kind && !b.points.empty();
    });
}

FsLocus fs_locus(const SystemParams& p, double threshold, int samples) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("P_threshold must lie in (0, 1)");
    if (samples < 2) throw std::invalid_argument("need at least two samples per side");
    FsLocus locus;
    locus.P_threshold = threshold;
    const double span = std::acos(threshold);

    // Each side is a theta interval open at the sin = 0 end.
    struct Side {
        LocusKind kind;
        double from, to;  // `to` is the singular end
    };
    const Side sides[] = {{LocusKind::ZeroPhase, span, 0.0},
                          {LocusKind::ZeroPhase, -span, 0.0},
                          {LocusKind::PiPhase, pi - span, pi},
                          {LocusKind::PiPhase, -(pi - span), -pi}};
    for (const Side& side : sides) {
        for (int root = 0; root < 2; ++root) {
            LocusBranch current{side.kind, root, {}};
            auto close = [&] {
                if (current.points.size() >= 2) locus.branches.push_back(current);
                current.points.clear();
            };
            for (int i = 0; i < samples; ++i) {
                // Exclude the pole itself; approach it to within 1e-9 rad.
                const double u = static_cast<double>(i) / (samples - 1);
                double th = side.from + u * (side.to - side.from);
                if (i == samples - 1) th = side.to - std::copysign(1e-9, side.to - side.from);
                const auto roots = constraint_solve(th, p);
                if (static_cast<int>(roots.size()) <= root) {
                    close();
                    continue;
                }
                const double R = roots.size() == 1 ? roots[0] : roots[static_cast<std::size_t>(root)];
                current.points.push_back({th, R, stationary_F(R, th, p)});
            }
            close();
        }
    }
    return locus;
}

namespace {

struct Crossing {
    double u = 0.0;  // along the curve chord
    double v = 0.0;  // along the locus chord
};

std::optional<Crossing> intersect(cplx a0, cplx a1, cplx b0, cplx b1) {
    const cplx da = a1 - a0, db = b1 - b0, w = b0 - a0;
    const double den = da.real() * db.imag() - da.imag() * db.real();
    if (den == 0.0 || !std::isfinite(den)) return std::nullopt;
    const double u = (w.real() * db.imag() - w.imag() * db.real()) / den;
    const double v = (w.real() * da.imag() - w.imag() * da.real()) / den;
    return Crossing{u, v};
}

double side(cplx a, cplx b, cplx q) {
    const cplx d = b - a, w = q - a;
    return d.real() * w.imag() - d.imag() * w.real();
}

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

std::vector<SyncTarget> find_sync_targets(const SystemParams& p,
                                          const std::vector<FCurvePoint>& curve,
                                          const FsLocus& locus, const SidebandOptions& sideband,
                                          double tolerance) {
    std::vector<SyncTarget> out;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        const FCurvePoint& c0 = curve[i];
        const FCurvePoint& c1 = curve[i + 1];
        if (!c0.converged || !c1.converged || !finite(c0.F) || !finite(c1.F)) continue;
        for (const LocusBranch& br : locus.branches) {
            const auto root = static_cast<std::size_t>(br.root);
            for (std::size_t j = 0; j + 1 < br.points.size(); ++j) {
                const LocusPoint& l0 = br.points[j];
                const LocusPoint& l1 = br.points[j + 1];
                const auto hit = intersect(c0.F, c1.F, l0.F, l1.F);
                if (!hit || hit->u < 0.0 || hit->u > 1.0 || hit->v < 0.0 || hit->v > 1.0) continue;

                // Shrink both brackets around the crossing with exact evaluations.
                double Ba = c0.B_tilde, Bb = c1.B_tilde;
                cplx Fa = c0.F, Fb = c1.F;
                double ta = l0.theta, tb = l1.theta;
                cplx La = l0.F, Lb = l1.F;
                double Ra = l0.R, Rb = l1.R;
                SyncTarget t{br.kind, Ba + hit->u * (Bb - Ba), ta + hit->v * (tb - ta), 0.0,
                             Fa + hit->u * (Fb - Fa), 0};
                t.R = Ra + hit->v * (Rb - Ra);
                Crossing x = *hit;
                for (int it = 0; it < 80; ++it) {
                    const double Bm = Ba + x.u * (Bb - Ba);
                    const double tm = ta + x.v * (tb - ta);
                    cplx Fm, Lm;
                    double Rm;
                    try {
                        Fm = solve_sidebands(p, Bm, sideband).F;
                        const auto roots = constraint_solve(tm, p);
                        if (roots.empty()) break;
                        Rm = roots.size() == 1 ? roots[0] : roots[std::min(root, roots.size() - 1)];
                        Lm = stationary_F(Rm, tm, p);
                    } catch (const std::exception&) {
                        break;
                    }
                    t = {br.kind, Bm, tm, Rm, Fm, it + 1};
                    if (std::abs(Fm - Lm) <= tolerance * std::abs(Fm)) break;
                    // Keep the half of each chord that still straddles the other.
                    if (side(La, Lb, Fa) * side(La, Lb, Fm) <= 0.0) {
                        Bb = Bm;
                        Fb = Fm;
                    } else {
                        Ba = Bm;
                        Fa = Fm;
                    }
                    if (side(Fa, Fb, La) * side(Fa, Fb, Lm) <= 0.0) {
                        tb = tm;
                        Lb = Lm;
                        Rb = Rm;
                    } else {
                        ta = tm;
                        La = Lm;
                        Ra = Rm;
                    }
                    const auto nx = intersect(Fa, Fb, La, Lb);
                    if (!nx) break;
                    x = {std::clamp(nx->u, 0.0, 1.0), std::clamp(nx->v, 0.0, 1.0)};
                }
                out.push_back(t);
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const SyncTarget& a, const SyncTarget& b) { return a.B_tilde < b.B_tilde; });
    return out;
}

// ---------------------------------------------------------------------------

namespace {

Histogram histogram(const std::vector<double>& phases, double center, double width) {
    const int bins = std::max(1, static_cast<int>(std::lround(two_pi / width)));
    Histogram h;
    h.center = center;
    h.bin_width = two_pi / bins;
    h.bin_centers.resize(static_cast<std::size_t>(bins));
    h.density.assign(static_cast<std::size_t>(bins), 0.0);
    for (int b = 0; b < bins; ++b)
        h.bin_centers[static_cast<std::size_t>(b)] = center - pi + (b + 0.5) * h.bin_width;
    for (double p : phases) {
        const double d = wrap_phase(p - center) + pi;  // (0, 2pi]
        auto b = static_cast<int>(std::floor(d / h.bin_width));
        b = std::clamp(b, 0, bins - 1);
        h.density[static_cast<std::size_t>(b)] += 1.0;
    }
    const double norm = 1.0 / (static_cast<double>(phases.size()) * h.bin_width);
    for (double& d : h.density) d *= norm;
    return h;
}

double recentred_variance(const std::vector<double>& phases, double center) {
    double s = 0.0, s2 = 0.0;
    for (double p : phases) {
        const double d = wrap_phase(p - center);
        s += d;
        s2 += d * d;
    }
    const auto n = static_cast<double>(phases.size());
    return std::max(0.0, s2 / n - (s / n) * (s / n));
}

}  // namespace

EnsembleStats ensemble_stats(const std::vector<double>& theta1,
                             const std::vector<double>& theta_minus, double bin_width) {
    if (theta1.size() != theta_minus.size())
        throw std::invalid_argument("phase samples differ in length");
    if (theta1.size() < 100) throw std::invalid_argument("ensemble statistics need N >= 100");
    if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
    EnsembleStats st;
    st.n = theta1.size();
    st.mean_theta1 = circular_mean(theta1);
    st.mean_theta_minus = circular_mean(theta_minus);
    st.var_theta1 = recentred_variance(theta1, st.mean_theta1);
    st.var_theta_minus = recentred_variance(theta_minus, st.mean_theta_minus);
    st.histogram_theta1 = histogram(theta1, st.mean_theta1, bin_width);
    st.histogram_theta_minus = histogram(theta_minus, st.mean_theta_minus, bin_width);
    if (st.var_theta1 > 0.0)
        st.eta = st.var_theta_minus / st.var_theta1;
    else
        st.eta = st.var_theta_minus > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return st;
}

}  // namespace magsync
