#pragma once

// Parameter sets, derived quantities and state layouts for the one-sphere and
// two-sphere cavity magnomechanical models.
//
// Every rate and frequency is an angular quantity in rad/s. Amplitudes are
// dimensionless c-numbers in the frame rotating at the drive frequency.

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace magsync {

using cplx = std::complex<double>;

/// Physical constants (CODATA 2018) and the material/drive constants used
/// throughout. Kept in one place so every module agrees on them.
namespace constants {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double k_boltzmann = 1.380649e-23;    // J / K
inline constexpr double gyromagnetic = two_pi * 28e9;  // rad / (s T)
inline constexpr double yig_spin_density = 4.22e27;    // 1 / m^3
/// Reference Rabi frequency, rad/s (B0 = 3.8e-5 T on a 250 um sphere).
inline constexpr double omega_ref = 7e14;
}  // namespace constants

enum class ModelKind { OneSphere, TwoSphere };

struct MagnonDrive {
    double Omega = 0.0;
    bool operator==(const MagnonDrive&) const = default;
};
struct CavityDrive {
    double Omega_a = 0.0;
    bool operator==(const CavityDrive&) const = default;
};
using Drive = std::variant<MagnonDrive, CavityDrive>;

/// All rates of one model variant. Fields that do not belong to the chosen
/// variant stay zero: OneSphere uses omega_m/delta_m/kappa_m, TwoSphere uses
/// the per-sphere omega_m1/omega_m2, delta_1/delta_2, kappa_1/kappa_2 and the
/// cavity port split kappa_in/kappa_ex.
struct SystemParams {
    ModelKind model_kind = ModelKind::OneSphere;

    double omega_a = 0.0;
    double omega_m = 0.0;
    double omega_m1 = 0.0;
    double omega_m2 = 0.0;
    double omega_1 = 0.0;
    double omega_2 = 0.0;

    double delta_a = 0.0;
    double delta_m = 0.0;
    double delta_1 = 0.0;
    double delta_2 = 0.0;

    double kappa_a = 0.0;
    double kappa_m = 0.0;
    double kappa_1 = 0.0;
    double kappa_2 = 0.0;
    double kappa_in = 0.0;
    double kappa_ex = 0.0;

    double gamma_1 = 0.0;
    double gamma_2 = 0.0;

    double g_1 = 0.0;
    double g_2 = 0.0;
    double g_ma = 0.0;

    Drive drive = MagnonDrive{};
    double temperature = 0.0;  // K

    [[nodiscard]] double drive_amplitude() const;
    [[nodiscard]] double delta_omega() const { return omega_2 - omega_1; }
    [[nodiscard]] double omega_bar() const { return 0.5 * (omega_1 + omega_2); }
    [[nodiscard]] double g_tilde() const;
    /// Drive frequency omega_0 recovered from omega_a and delta_a.
    [[nodiscard]] double omega_drive() const { return omega_a - delta_a; }

    bool operator==(const SystemParams&) const = default;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const SystemParams& params);

/// Omega = (sqrt 5 / 4) gamma_0 sqrt(N) B0, N = rho * (4/3) pi (d/2)^3.
[[nodiscard]] double rabi_from_drive(double b0_tesla, double diameter_m);

/// Omega_a = sqrt(2 kappa_ex P0 / (hbar omega_0)).
[[nodiscard]] double cavity_drive_from_power(double kappa_ex, double power_w, double omega_0);

/// Bose occupation [exp(hbar omega / kB T) - 1]^-1, zero at T = 0.
[[nodiscard]] double thermal_occupation(double omega, double temperature);

/// One-sphere parameter set: omega_a = omega_m = 2pi x 10 GHz,
/// omega_1 = 2pi x 10 MHz, omega_2 = 1.01 omega_1, Delta_a = Delta_m = -omega_1,
/// drive Omega_ref, g_ma = 0, T = 300 K.
[[nodiscard]] SystemParams default_params();

/// Two-sphere parameter set: kappa_1 = kappa_2 = kappa_ex = 2pi x 1 MHz,
/// kappa_in = kappa_a - kappa_ex, cavity drive from P0 = 8 mW,
/// Delta_a = Delta_1 = Delta_2 = -omega_1; mechanics as default_params().
[[nodiscard]] SystemParams default_two_sphere_params();

/// Returns a copy with the drive amplitude set to Omega_ref * 10^log10_ratio.
[[nodiscard]] SystemParams with_drive_log10(SystemParams params, double log10_ratio);
[[nodiscard]] SystemParams with_drive(SystemParams params, double amplitude);

/// Sets omega_2 = omega_1 + delta_omega.
[[nodiscard]] SystemParams with_delta_omega(SystemParams params, double delta_omega);

/// Sets every detuning (Delta_a and the magnon detunings) to `delta`.
[[nodiscard]] SystemParams with_detuning(SystemParams params, double delta);

/// Multiplies both mechanical damping rates by `factor`.
[[nodiscard]] SystemParams with_gamma_scale(SystemParams params, double factor);

/// Parameters expressed in units of omega_1 (time unit 1/omega_1).
struct ScaledParams {
    SystemParams params;
    double rate_unit = 1.0;  // rad/s per scaled unit
    [[nodiscard]] double to_seconds(double scaled_time) const { return scaled_time / rate_unit; }
    [[nodiscard]] double to_scaled_time(double seconds) const { return seconds * rate_unit; }
};

[[nodiscard]] ScaledParams nondimensionalize(const SystemParams& params);
[[nodiscard]] SystemParams restore(const ScaledParams& scaled);

// ---------------------------------------------------------------------------
// State layout
// ---------------------------------------------------------------------------

inline constexpr std::size_t max_modes = 5;
using ModeArray = std::array<cplx, max_modes>;

/// Complex mode amplitudes. OneSphere layout: (a, m, b1, b2);
/// TwoSphere layout: (a, m1, m2, b1, b2).
struct SystemState {
    ModelKind kind = ModelKind::OneSphere;
    ModeArray z{};

    SystemState() = default;
    explicit SystemState(ModelKind k) : kind(k) {}

    [[nodiscard]] std::size_t mode_count() const { return mode_count_of(kind); }
    [[nodiscard]] std::size_t real_dimension() const { return 2 * mode_count(); }

    [[nodiscard]] static constexpr std::size_t mode_count_of(ModelKind k) {
        return k == ModelKind::OneSphere ? 4 : 5;
    }
    /// Index of the cavity mode.
    static constexpr std::size_t cavity = 0;
    /// Index of magnon j (j = 0 for the single magnon of OneSphere).
    [[nodiscard]] static constexpr std::size_t magnon_index(ModelKind k, std::size_t j) {
        return k == ModelKind::OneSphere ? 1 : 1 + j;
    }
    /// Index of mechanical mode j in {0, 1}.
    [[nodiscard]] static constexpr std::size_t mech_index(ModelKind k, std::size_t j) {
        return k == ModelKind::OneSphere ? 2 + j : 3 + j;
    }

    [[nodiscard]] cplx& a() { return z[cavity]; }
    [[nodiscard]] cplx a() const { return z[cavity]; }
    [[nodiscard]] cplx& magnon(std::size_t j = 0) { return z[magnon_index(kind, j)]; }
    [[nodiscard]] cplx magnon(std::size_t j = 0) const { return z[magnon_index(kind, j)]; }
    [[nodiscard]] cplx& mech(std::size_t j) { return z[mech_index(kind, j)]; }
    [[nodiscard]] cplx mech(std::size_t j) const { return z[mech_index(kind, j)]; }

    [[nodiscard]] bool is_finite() const;
    [[nodiscard]] double max_abs() const;
    [[nodiscard]] double norm() const;

    bool operator==(const SystemState&) const = default;
};

struct Trajectory {
    std::vector<double> times;  // s, strictly increasing
    std::vector<SystemState> states;
    std::string params_hash;

    [[nodiscard]] std::size_t size() const { return times.size(); }
};

/// Stable 64-bit fingerprint of a parameter set, rendered as 16 hex digits.
[[nodiscard]] std::string params_hash(const SystemParams& params);

[[nodiscard]] std::string to_string(ModelKind kind);
[[nodiscard]] ModelKind model_kind_from_string(const std::string& name);

}  // namespace magsync
