#include "magsync/model.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>

namespace magsync {

namespace {

void require(bool condition, const char* message) {
    if (!condition) throw std::invalid_argument(message);
}

bool finite_all(std::initializer_list<double> values) {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

double SystemParams::drive_amplitude() const {
    return std::visit(
        [](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, MagnonDrive>)
                return d.Omega;
            else
                return d.Omega_a;
        },
        drive);
}

double SystemParams::g_tilde() const { return std::hypot(g_1, g_2); }

void validate(const SystemParams& p) {
    require(finite_all({p.omega_a, p.omega_m, p.omega_m1, p.omega_m2, p.omega_1, p.omega_2,
                        p.delta_a, p.delta_m, p.delta_1, p.delta_2, p.kappa_a, p.kappa_m,
                        p.kappa_1, p.kappa_2, p.kappa_in, p.kappa_ex, p.gamma_1, p.gamma_2,
                        p.g_1, p.g_2, p.g_ma, p.drive_amplitude(), p.temperature}),
            "parameters must be finite");
    require(p.omega_1 > 0.0 && p.omega_2 > 0.0, "mechanical frequencies must be positive");
    require(p.gamma_1 > 0.0 && p.gamma_2 > 0.0, "mechanical decay rates must be positive");
    require(p.kappa_a > 0.0, "cavity decay rate must be positive");
    require(p.g_1 >= 0.0 && p.g_2 >= 0.0 && p.g_ma >= 0.0, "couplings must be non-negative");
    require(p.temperature >= 0.0, "temperature must be non-negative");
    require(p.drive_amplitude() >= 0.0, "drive amplitude must be non-negative");
    if (p.model_kind == ModelKind::OneSphere) {
        require(std::holds_alternative<MagnonDrive>(p.drive),
                "the one-sphere model is driven through the magnon (MagnonDrive)");
        require(p.kappa_m > 0.0, "magnon decay rate must be positive");
    } else {
        require(std::holds_alternative<CavityDrive>(p.drive),
                "the two-sphere model is driven through the cavity (CavityDrive)");
        require(p.kappa_1 > 0.0 && p.kappa_2 > 0.0, "magnon decay rates must be positive");
        require(p.kappa_in > 0.0 && p.kappa_ex > 0.0, "cavity port rates must be positive");
        require(std::abs(p.kappa_a - (p.kappa_in + p.kappa_ex)) <= 1e-9 * p.kappa_a,
                "kappa_a must equal kappa_in + kappa_ex");
    }
}

double rabi_from_drive(double b0_tesla, double diameter_m) {
    if (!(diameter_m > 0.0)) throw std::invalid_argument("sphere diameter must be positive");
    if (b0_tesla < 0.0) throw std::invalid_argument("drive field must be non-negative");
    const double radius = 0.5 * diameter_m;
    const double volume = 4.0 / 3.0 * constants::pi * radius * radius * radius;
    const double spins = constants::yig_spin_density * volume;
    return std::sqrt(5.0) / 4.0 * constants::gyromagnetic * std::sqrt(spins) * b0_tesla;
}

double cavity_drive_from_power(double kappa_ex, double power_w, double omega_0) {
    if (kappa_ex < 0.0 || power_w < 0.0 || !(omega_0 > 0.0))
        throw std::invalid_argument("cavity drive needs kappa_ex, P0 >= 0 and omega_0 > 0");
    return std::sqrt(2.0 * kappa_ex * power_w / (constants::hbar * omega_0));
}

double thermal_occupation(double omega, double temperature) {
    if (!(omega > 0.0)) throw std::invalid_argument("mode frequency must be positive");
    if (temperature < 0.0) throw std::invalid_argument("temperature must be non-negative");
    if (temperature == 0.0) return 0.0;
    const double x = constants::hbar * omega / (constants::k_boltzmann * temperature);
    return 1.0 / std::expm1(x);
}

SystemParams default_params() {
    using constants::two_pi;
    SystemParams p;
    p.model_kind = ModelKind::OneSphere;
    p.omega_a = two_pi * 10e9;
    p.omega_m = two_pi * 10e9;
    p.omega_1 = two_pi * 10e6;
    p.omega_2 = 1.01 * p.omega_1;
    p.delta_a = -p.omega_1;
    p.delta_m = -p.omega_1;
    p.kappa_a = two_pi * 1.5e6;
    p.kappa_m = two_pi * 1.0e6;
    p.gamma_1 = two_pi * 100.0;
    p.gamma_2 = two_pi * 150.0;
    p.g_1 = two_pi * 60e-3;
    p.g_2 = two_pi * 50e-3;
    p.g_ma = 0.0;
    p.drive = MagnonDrive{constants::omega_ref};
    p.temperature = 300.0;
    return p;
}

SystemParams default_two_sphere_params() {
    using constants::two_pi;
    SystemParams p = default_params();
    p.model_kind = ModelKind::TwoSphere;
    p.omega_m = 0.0;
    p.delta_m = 0.0;
    p.kappa_m = 0.0;
    p.omega_m1 = p.omega_a;
    p.omega_m2 = p.omega_a;
    p.delta_1 = p.delta_a;
    p.delta_2 = p.delta_a;
    p.kappa_1 = two_pi * 1e6;
    p.kappa_2 = two_pi * 1e6;
    p.kappa_ex = two_pi * 1e6;
    p.kappa_in = p.kappa_a - p.kappa_ex;
    p.drive = CavityDrive{cavity_drive_from_power(p.kappa_ex, 8e-3, p.omega_drive())};
    return p;
}

SystemParams with_drive(SystemParams p, double amplitude) {
    if (p.model_kind == ModelKind::OneSphere)
        p.drive = MagnonDrive{amplitude};
    else
        p.drive = CavityDrive{amplitude};
    return p;
}

SystemParams with_drive_log10(SystemParams p, double log10_ratio) {
    return with_drive(std::move(p), constants::omega_ref * std::pow(10.0, log10_ratio));
}

SystemParams with_delta_omega(SystemParams p, double delta_omega) {
    p.omega_2 = p.omega_1 + delta_omega;
    return p;
}

SystemParams with_detuning(SystemParams p, double delta) {
    // Magnon and cavity resonances move with the detuning; the drive
    // frequency omega_0 stays where it was.
    const double omega_0 = p.omega_drive();
    p.delta_a = delta;
    p.omega_a = omega_0 + delta;
    if (p.model_kind == ModelKind::OneSphere) {
        p.delta_m = delta;
        p.omega_m = omega_0 + delta;
    } else {
        p.delta_1 = p.delta_2 = delta;
        p.omega_m1 = p.omega_m2 = omega_0 + delta;
    }
    return p;
}

SystemParams with_gamma_scale(SystemParams p, double factor) {
    if (!(factor > 0.0)) throw std::invalid_argument("gamma scale must be positive");
    p.gamma_1 *= factor;
    p.gamma_2 *= factor;
    return p;
}

namespace {

template <class F>
SystemParams map_rates(SystemParams p, F&& f) {
    for (double* v : {&p.omega_a, &p.omega_m, &p.omega_m1, &p.omega_m2, &p.omega_1, &p.omega_2,
                      &p.delta_a, &p.delta_m, &p.delta_1, &p.delta_2, &p.kappa_a, &p.kappa_m,
                      &p.kappa_1, &p.kappa_2, &p.kappa_in, &p.kappa_ex, &p.gamma_1, &p.gamma_2,
                      &p.g_1, &p.g_2, &p.g_ma})
        *v = f(*v);
    p.drive = std::visit(
        [&](auto d) -> Drive {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, MagnonDrive>)
                d.Omega = f(d.Omega);
            else
                d.Omega_a = f(d.Omega_a);
            return d;
        },
        p.drive);
    return p;
}

}  // namespace

ScaledParams nondimensionalize(const SystemParams& params) {
    const double unit = params.omega_1;
    if (!(unit > 0.0)) throw std::invalid_argument("omega_1 must be positive to rescale");
    return ScaledParams{map_rates(params, [unit](double v) { return v / unit; }), unit};
}

SystemParams restore(const ScaledParams& scaled) {
    const double unit = scaled.rate_unit;
    return map_rates(scaled.params, [unit](double v) { return v * unit; });
}

bool SystemState::is_finite() const {
    for (std::size_t i = 0; i < mode_count(); ++i)
        if (!std::isfinite(z[i].real()) || !std::isfinite(z[i].imag())) return false;
    return true;
}

double SystemState::max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < mode_count(); ++i) m = std::max(m, std::abs(z[i]));
    return m;
}

double SystemState::norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < mode_count(); ++i) s += std::norm(z[i]);
    return std::sqrt(s);
}

std::string params_hash(const SystemParams& p) {
    // FNV-1a over the IEEE bit patterns, in declaration order.
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t word) {
        for (int i = 0; i < 8; ++i) {
            h ^= (word >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    mix(static_cast<std::uint64_t>(p.model_kind));
    mix(static_cast<std::uint64_t>(p.drive.index()));
    for (double v : {p.omega_a, p.omega_m, p.omega_m1, p.omega_m2, p.omega_1, p.omega_2, p.delta_a,
                     p.delta_m, p.delta_1, p.delta_2, p.kappa_a, p.kappa_m, p.kappa_1, p.kappa_2,
                     p.kappa_in, p.kappa_ex, p.gamma_1, p.gamma_2, p.g_1, p.g_2, p.g_ma,
                     p.drive_amplitude(), p.temperature})
        mix(std::bit_cast<std::uint64_t>(v));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string to_string(ModelKind kind) {
    return kind == ModelKind::OneSphere ? "OneSphere" : "TwoSphere";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "OneSphere") return ModelKind::OneSphere;
    if (name == "TwoSphere") return ModelKind::TwoSphere;
    throw std::invalid_argument("unknown model_kind '" + name + "'");
}

}  // namespace magsync
