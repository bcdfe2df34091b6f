#include "magsync/dynamics.hpp"

#include <sstream>

namespace magsync {

LangevinDrift::LangevinDrift(const SystemParams& p)
    : kind_(p.model_kind),
      la_(-p.kappa_a, -p.delta_a),
      lb1_(-p.gamma_1, -p.omega_1),
      lb2_(-p.gamma_2, -p.omega_2),
      g1_(p.g_1),
      g2_(p.g_2),
      gma_(p.g_ma),
      drive_(p.drive_amplitude()) {
    damping_[0] = p.kappa_a;
    if (kind_ == ModelKind::OneSphere) {
        lm1_ = cplx(-p.kappa_m, -p.delta_m);
        lm2_ = 0.0;
        damping_[1] = p.kappa_m;
        damping_[2] = p.gamma_1;
        damping_[3] = p.gamma_2;
    } else {
        lm1_ = cplx(-p.kappa_1, -p.delta_1);
        lm2_ = cplx(-p.kappa_2, -p.delta_2);
        damping_[1] = p.kappa_1;
        damping_[2] = p.kappa_2;
        damping_[3] = p.gamma_1;
        damping_[4] = p.gamma_2;
    }
}

namespace {

SystemState apply(const SystemState& state, const SystemParams& params) {
    if (state.kind != params.model_kind)
        throw std::invalid_argument("state layout does not match the model kind");
    SystemState out(state.kind);
    LangevinDrift{params}(state.z, out.z);
    return out;
}

}  // namespace

SystemState drift_one_sphere(const SystemState& state, const SystemParams& params) {
    if (params.model_kind != ModelKind::OneSphere)
        throw std::invalid_argument("drift_one_sphere needs OneSphere parameters");
    return apply(state, params);
}

SystemState drift_two_sphere(const SystemState& state, const SystemParams& params) {
    if (params.model_kind != ModelKind::TwoSphere)
        throw std::invalid_argument("drift_two_sphere needs TwoSphere parameters");
    return apply(state, params);
}

SystemState drift(const SystemState& state, const SystemParams& params) {
    return apply(state, params);
}

void validate(const IntegrationSpec& spec) {
    if (!(spec.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(spec.t_end >= spec.dt)) throw std::invalid_argument("t_end must be at least dt");
    if (spec.sample_stride < 1) throw std::invalid_argument("sample_stride must be >= 1");
}

std::int64_t step_count(const IntegrationSpec& spec) {
    return static_cast<std::int64_t>(std::ceil(spec.t_end / spec.dt - 1e-9));
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    auto splitmix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    };
    return splitmix(splitmix(a) ^ (b + 0x632be59bd9b4e019ull));
}

NoiseSpec noise_from_params(const SystemParams& p, std::uint64_t seed, std::uint64_t stream) {
    NoiseSpec spec;
    spec.seed = seed;
    spec.stream = stream;
    const double T = p.temperature;
    spec.n_bar[0] = thermal_occupation(p.omega_a, T);
    if (p.model_kind == ModelKind::OneSphere) {
        spec.n_bar[1] = thermal_occupation(p.omega_m, T);
        spec.n_bar[2] = thermal_occupation(p.omega_1, T);
        spec.n_bar[3] = thermal_occupation(p.omega_2, T);
    } else {
        spec.n_bar[1] = thermal_occupation(p.omega_m1, T);
        spec.n_bar[2] = thermal_occupation(p.omega_m2, T);
        spec.n_bar[3] = thermal_occupation(p.omega_1, T);
        spec.n_bar[4] = thermal_occupation(p.omega_2, T);
    }
    return spec;
}

SystemState sample_thermal_state(const SystemParams& params, GaussianStream& rng) {
    if (params.temperature < 0.0) throw std::invalid_argument("temperature must be non-negative");
    const NoiseSpec occ = noise_from_params(params, 0);
    SystemState s(params.model_kind);
    for (std::size_t i = 0; i < s.mode_count(); ++i) s.z[i] = rng.complex_normal(occ.n_bar[i] + 0.5);
    return s;
}

void detail::throw_divergence(double t) {
    std::ostringstream os;
    os << "trajectory diverged (|amplitude| > " << divergence_bound << ") at t = " << t;
    throw DivergenceError(t, os.str());
}

int steps_per_period(const SystemParams& scaled) {
    const double period = 2.0 * constants::pi / scaled.omega_bar();
    const double target = 0.02 / scaled.omega_2;
    return static_cast<int>(std::ceil(period / target));
}

double default_scaled_dt(const SystemParams& scaled) {
    return 2.0 * constants::pi / scaled.omega_bar() / steps_per_period(scaled);
}

Trajectory simulate(const SystemParams& params, const SystemState& initial,
                    const IntegrationSpec& spec, const NoiseSpec* noise) {
    validate(params);
    validate(spec);
    if (initial.kind != params.model_kind)
        throw std::invalid_argument("initial state layout does not match the model kind");
    const ScaledParams scaled = nondimensionalize(params);
    const LangevinDrift f(scaled.params);
    IntegrationSpec s = spec;
    s.t_end = scaled.to_scaled_time(spec.t_end);
    s.dt = scaled.to_scaled_time(spec.dt);
    s.record_from = scaled.to_scaled_time(spec.record_from);
    Trajectory traj;
    try {
        if (spec.method == Method::RK4) {
            traj = integrate_deterministic(f, initial, s);
        } else {
            const NoiseSpec ns = noise ? *noise : noise_from_params(params, 0);
            traj = integrate_stochastic(f, f.damping(), ns, initial, s);
        }
    } catch (const DivergenceError& e) {
        throw DivergenceError(scaled.to_seconds(e.time()), e.what());
    }
    for (double& t : traj.times) t = scaled.to_seconds(t);
    traj.params_hash = params_hash(params);
    return traj;
}

}  // namespace magsync
