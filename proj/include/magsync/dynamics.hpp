#pragma once

// Noiseless and stochastic Langevin dynamics of the cavity magnomechanical
// models, fixed-step integrators and thermal initial-state sampling.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include "magsync/model.hpp"

namespace magsync {

/// Right-hand side of the noiseless Langevin equations. Works in whatever
/// unit system the parameters are expressed in (normally scaled by omega_1).
///
/// OneSphere:
///   a'   = -(i Da + ka) a - i gma m
///   m'   = -(i Dm + km) m - i gma a - sum_j i g_j m (b_j* + b_j) + Omega
///   b_j' = -(i w_j + gamma_j) b_j - i g_j |m|^2
/// TwoSphere:
///   a'   = -(i Da + ka) a - i gma (m1 + m2) + Omega_a
///   m_j' = -(i D_j + k_j) m_j - i gma a - i g_j m_j (b_j* + b_j)
///   b_j' = -(i w_j + gamma_j) b_j - i g_j |m_j|^2
class LangevinDrift {
public:
    explicit LangevinDrift(const SystemParams& params);

    void operator()(const ModeArray& z, ModeArray& dz) const {
        if (kind_ == ModelKind::OneSphere)
            one_sphere(z, dz);
        else
            two_sphere(z, dz);
    }

    [[nodiscard]] ModelKind kind() const { return kind_; }
    [[nodiscard]] std::size_t mode_count() const { return SystemState::mode_count_of(kind_); }
    /// Energy decay rate of each mode (kappa or gamma), in the parameter units.
    [[nodiscard]] const std::array<double, max_modes>& damping() const { return damping_; }

private:
    void one_sphere(const ModeArray& z, ModeArray& dz) const {
        const cplx a = z[0], m = z[1], b1 = z[2], b2 = z[3];
        const double shift = 2.0 * (g1_ * b1.real() + g2_ * b2.real());
        const double n = std::norm(m);
        dz[0] = la_ * a + cplx(0.0, -gma_) * m;
        dz[1] = (lm1_ + cplx(0.0, -shift)) * m + cplx(0.0, -gma_) * a + drive_;
        dz[2] = lb1_ * b1 + cplx(0.0, -g1_ * n);
        dz[3] = lb2_ * b2 + cplx(0.0, -g2_ * n);
        dz[4] = 0.0;
    }
    void two_sphere(const ModeArray& z, ModeArray& dz) const {
        const cplx a = z[0], m1 = z[1], m2 = z[2], b1 = z[3], b2 = z[4];
        const cplx mi(0.0, -gma_);
        dz[0] = la_ * a + mi * (m1 + m2) + drive_;
        dz[1] = (lm1_ + cplx(0.0, -2.0 * g1_ * b1.real())) * m1 + mi * a;
        dz[2] = (lm2_ + cplx(0.0, -2.0 * g2_ * b2.real())) * m2 + mi * a;
        dz[3] = lb1_ * b1 + cplx(0.0, -g1_ * std::norm(m1));
        dz[4] = lb2_ * b2 + cplx(0.0, -g2_ * std::norm(m2));
    }

    ModelKind kind_;
    cplx la_, lm1_, lm2_, lb1_, lb2_;
    double g1_, g2_, gma_;
    double drive_;
    std::array<double, max_modes> damping_{};
};

/// Derivative of a one-sphere state; invalid-argument on a model mismatch.
[[nodiscard]] SystemState drift_one_sphere(const SystemState& state, const SystemParams& params);
/// Derivative of a two-sphere state; invalid-argument on a model mismatch.
[[nodiscard]] SystemState drift_two_sphere(const SystemState& state, const SystemParams& params);
/// Dispatches on params.model_kind.
[[nodiscard]] SystemState drift(const SystemState& state, const SystemParams& params);

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

enum class Method { RK4, Heun };

struct IntegrationSpec {
    double t_end = 0.0;
    double dt = 0.0;
    int sample_stride = 1;
    Method method = Method::RK4;
    /// Samples earlier than this are not stored in the returned trajectory.
    double record_from = 0.0;
};

/// Throws std::invalid_argument if dt <= 0, t_end < dt or stride < 1.
void validate(const IntegrationSpec& spec);

/// Number of steps needed to reach t_end (final time >= t_end).
[[nodiscard]] std::int64_t step_count(const IntegrationSpec& spec);

/// Amplitude above which a trajectory is treated as divergent.
inline constexpr double divergence_bound = 1e12;

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(double time, const std::string& what)
        : std::runtime_error(what), time_(time) {}
    [[nodiscard]] double time() const { return time_; }

private:
    double time_;
};

/// Occupations per mode slot (same layout as SystemState) and the RNG key.
struct NoiseSpec {
    std::array<double, max_modes> n_bar{};
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Thermal occupations of every mode at params.temperature.
[[nodiscard]] NoiseSpec noise_from_params(const SystemParams& params, std::uint64_t seed,
                                          std::uint64_t stream = 0);

/// SplitMix64 finaliser; used to derive independent stream keys.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Standard-normal stream: MT19937-64 seeded with mix_seed(seed, stream),
/// 53-bit uniforms, Box-Muller pairs. Fully specified, so a stream can be
/// reproduced bit for bit in any language with an MT19937-64.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream) : engine_(mix_seed(seed, stream)) {}

    double uniform() {  // (0, 1]
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 2.0 * 3.14159265358979323846 * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }
    /// Complex Gaussian with E|z|^2 = variance (variance/2 per quadrature).
    cplx complex_normal(double variance) {
        const double s = std::sqrt(0.5 * variance);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Each mode drawn as a zero-mean complex Gaussian with E|O|^2 = n_O + 1/2.
[[nodiscard]] SystemState sample_thermal_state(const SystemParams& params, GaussianStream& rng);

namespace detail {

inline bool all_bounded(const ModeArray& z, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::abs(z[i].real()) + std::abs(z[i].imag());
        if (!(r < divergence_bound)) return false;
    }
    return true;
}

[[noreturn]] void throw_divergence(double t);

}  // namespace detail

/// Fixed-step RK4. `observe(t, z)` is called at t0 and after every
/// `stride`-th step. Returns the final time.
template <class Drift, class Observer>
double run_rk4(const Drift& f, ModeArray& z, std::size_t n, double t0, double dt,
               std::int64_t steps, int stride, Observer&& observe) {
    ModeArray k1{}, k2{}, k3{}, k4{}, tmp{};
    const double half = 0.5 * dt, sixth = dt / 6.0;
    observe(t0, static_cast<const ModeArray&>(z));
    for (std::int64_t s = 1; s <= steps; ++s) {
        f(z, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + half * k1[i];
        f(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + half * k2[i];
        f(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + dt * k3[i];
        f(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) z[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        if (s % stride == 0) {
            const double t = t0 + static_cast<double>(s) * dt;
            if (!detail::all_bounded(z, n)) detail::throw_divergence(t);
            observe(t, static_cast<const ModeArray&>(z));
        } else if ((s & 255) == 0 && !detail::all_bounded(z, n)) {
            detail::throw_divergence(t0 + static_cast<double>(s) * dt);
        }
    }
    return t0 + static_cast<double>(steps) * dt;
}

/// Stochastic Heun for additive noise dz = f(z) dt + sqrt(2 rate_O) dW_O with
/// E|dW_O|^2 = (n_O + 1/2) dt. `rates` holds the per-mode decay rates in the
/// units of the drift.
template <class Drift, class Observer>
double run_heun(const Drift& f, const std::array<double, max_modes>& rates, const NoiseSpec& noise,
                ModeArray& z, std::size_t n, double t0, double dt, std::int64_t steps, int stride,
                Observer&& observe) {
    GaussianStream rng(noise.seed, noise.stream);
    std::array<double, max_modes> amp{};
    for (std::size_t i = 0; i < n; ++i)
        amp[i] = std::sqrt(2.0 * rates[i] * (noise.n_bar[i] + 0.5) * dt);
    ModeArray k1{}, k2{}, pred{}, kick{};
    observe(t0, static_cast<const ModeArray&>(z));
    for (std::int64_t s = 1; s <= steps; ++s) {
        for (std::size_t i = 0; i < n; ++i) kick[i] = amp[i] * rng.complex_normal(1.0);
        f(z, k1);
        for (std::size_t i = 0; i < n; ++i) pred[i] = z[i] + dt * k1[i] + kick[i];
        f(pred, k2);
        for (std::size_t i = 0; i < n; ++i) z[i] += 0.5 * dt * (k1[i] + k2[i]) + kick[i];
        if (s % stride == 0) {
            const double t = t0 + static_cast<double>(s) * dt;
            if (!detail::all_bounded(z, n)) detail::throw_divergence(t);
            observe(t, static_cast<const ModeArray&>(z));
        } else if ((s & 255) == 0 && !detail::all_bounded(z, n)) {
            detail::throw_divergence(t0 + static_cast<double>(s) * dt);
        }
    }
    return t0 + static_cast<double>(steps) * dt;
}

namespace detail {
template <class Drift>
struct Recorder {
    Trajectory& out;
    ModelKind kind;
    double record_from;
    void operator()(double t, const ModeArray& z) {
        if (t + 1e-12 * std::abs(t) < record_from) return;
        SystemState s(kind);
        s.z = z;
        out.times.push_back(t);
        out.states.push_back(s);
    }
};
}  // namespace detail

/// Deterministic RK4 trajectory of an arbitrary drift, in the drift's units.
template <class Drift>
Trajectory integrate_deterministic(const Drift& f, const SystemState& state0,
                                   const IntegrationSpec& spec) {
    validate(spec);
    if (spec.method != Method::RK4)
        throw std::invalid_argument("deterministic integration uses RK4");
    Trajectory traj;
    ModeArray z = state0.z;
    detail::Recorder<Drift> rec{traj, state0.kind, spec.record_from};
    run_rk4(f, z, state0.mode_count(), 0.0, spec.dt, step_count(spec), spec.sample_stride, rec);
    return traj;
}

/// Stochastic Heun trajectory; `rates` are sqrt-noise decay rates per mode.
template <class Drift>
Trajectory integrate_stochastic(const Drift& f, const std::array<double, max_modes>& rates,
                                const NoiseSpec& noise, const SystemState& state0,
                                const IntegrationSpec& spec) {
    validate(spec);
    if (spec.method != Method::Heun)
        throw std::invalid_argument("stochastic integration uses the Heun method");
    for (double nb : noise.n_bar)
        if (nb < 0.0) throw std::invalid_argument("occupations must be non-negative");
    Trajectory traj;
    ModeArray z = state0.z;
    detail::Recorder<Drift> rec{traj, state0.kind, spec.record_from};
    run_heun(f, rates, noise, z, state0.mode_count(), 0.0, spec.dt, step_count(spec),
             spec.sample_stride, rec);
    return traj;
}

/// Default step in scaled units: 0.02 / omega_2, rounded down so that an
/// integer number of steps spans one period 2 pi / omega_bar.
[[nodiscard]] double default_scaled_dt(const SystemParams& scaled);
/// Steps per reference period for default_scaled_dt.
[[nodiscard]] int steps_per_period(const SystemParams& scaled);

/// Integrates the model given in physical units. spec.t_end, spec.dt and
/// spec.record_from are in seconds; the returned trajectory is in seconds.
/// spec.method selects RK4 (noiseless) or Heun (thermal noise from `noise`).
[[nodiscard]] Trajectory simulate(const SystemParams& params, const SystemState& initial,
                                  const IntegrationSpec& spec, const NoiseSpec* noise = nullptr);

}  // namespace magsync
