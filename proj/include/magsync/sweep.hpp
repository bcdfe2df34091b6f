#pragma once

// Single-point steady-state runs, parameter-plane phase diagrams with
// checkpoint/resume, and the hysteresis probe.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "magsync/dynamics.hpp"
#include "magsync/model.hpp"
#include "magsync/stability.hpp"
#include "magsync/sync.hpp"

namespace magsync {

// ---------------------------------------------------------------------------
// Steady-state runs
// ---------------------------------------------------------------------------

struct SteadyRunOptions {
    /// Demodulated samples per period (the step count per period must be a
    /// multiple of it after rounding; the largest divisor >= this is used).
    int samples_per_period = 20;
    /// Also monitor convergence towards this state (gray classification).
    std::optional<SystemState> fixed_point;
    StationarityTolerance tolerance{};
};

struct SteadyRun {
    std::vector<PeriodDemodulator::Period> periods;  // t_mid in seconds
    std::vector<SyncObservables> series;              // per period, seconds
    std::optional<SteadyState> steady;                // absent when the window is empty
    SystemState final_state;
    bool converged_to_fixed_point = false;
};

/// Noiseless RK4 from `initial` to window.hi (seconds) with per-period
/// demodulation; the summary covers `window`.
[[nodiscard]] SteadyRun run_steady(const SystemParams& params, const SystemState& initial,
                                   const TimeWindow& window, const SteadyRunOptions& options = {});

/// Thermal initial state for a deterministic seed.
[[nodiscard]] SystemState thermal_sample(const SystemParams& params, std::uint64_t seed);

/// Mechanical envelope F measured from a demodulated run: per period
/// F = g~ c_{-1} / |B~| with c_{-1} the first harmonic of |m|^2 referenced to
/// the phase of B~; averaged over the periods inside `window`.
[[nodiscard]] cplx measured_F(const SteadyRun& run, const SystemParams& params,
                              const TimeWindow& window);
/// Mean |B~| = |g_1 B_1 + g_2 B_2| (rad/s) over the periods inside `window`.
[[nodiscard]] double measured_B_tilde(const SteadyRun& run, const SystemParams& params,
                                      const TimeWindow& window);

// ---------------------------------------------------------------------------
// Pixels and diagrams
// ---------------------------------------------------------------------------

enum class AxisParam { Omega, g_ma, delta_omega, Delta };
enum class AxisScale { Linear, Log10 };

/// Axis values are in natural units: Omega relative to constants::omega_ref,
/// g_ma, delta_omega and Delta relative to omega_1. With Log10 scale, min
/// and max are log10 of those values.
struct Axis {
    AxisParam param = AxisParam::Omega;
    AxisScale scale = AxisScale::Linear;
    double min = 0.0;
    double max = 1.0;
    int count = 2;

    [[nodiscard]] double coordinate(int i) const;  // as given (log10 for Log10)
};

[[nodiscard]] std::string to_string(AxisParam p);
[[nodiscard]] std::string to_string(AxisScale s);
[[nodiscard]] AxisParam axis_param_from_string(const std::string& s);
[[nodiscard]] AxisScale axis_scale_from_string(const std::string& s);

/// Applies an axis coordinate to a parameter set.
[[nodiscard]] SystemParams apply_axis(const SystemParams& params, const Axis& axis, double coordinate);

struct GridSpec {
    Axis x;
    Axis y;
    SystemParams base;
    /// Applied to each pixel after the axis values (see desk_scaled).
    double desk_scale = 1.0;
    TimeWindow window;  // seconds; hi <= lo selects [9/gamma_1, 19/gamma_1] of the scaled base
    std::uint64_t seed = 0;

    [[nodiscard]] SystemParams pixel_params(int ix, int iy) const;
    [[nodiscard]] TimeWindow effective_window() const;
};

void validate(const GridSpec& grid);

struct PixelResult {
    int ix = 0;
    int iy = 0;
    double P_mean = 0.0;
    bool gray = false;
    bool failed = false;
    bool stationary = false;
    bool linear_stable = false;
    double theta_minus_s = 0.0;
    double R_s = 0.0;
    double eigen_max_real = 0.0;  // rad/s
    std::string error;

    bool operator==(const PixelResult&) const = default;
};

/// Per-pixel seed derived from the base seed and the pixel indices.
[[nodiscard]] std::uint64_t pixel_seed(std::uint64_t base, int ix, int iy);

/// One pixel: fixed points and eigenvalues, then a noiseless run from a
/// thermal sample. Gray when the run relaxes to a stable fixed point;
/// otherwise the time averages over the window. Failures are recorded, not
/// thrown.
[[nodiscard]] PixelResult run_pixel(const SystemParams& params, const TimeWindow& window,
                                    std::uint64_t seed);

struct PhaseDiagram {
    GridSpec grid;
    std::vector<PixelResult> pixels;  // row-major, iy * count_x + ix
    std::vector<bool> completed;
    std::string config_hash;

    [[nodiscard]] const PixelResult& at(int ix, int iy) const;
    [[nodiscard]] bool complete() const;
};

[[nodiscard]] std::string grid_hash(const GridSpec& grid);

struct DiagramOptions {
    int threads = 1;
    std::string checkpoint_path;  // empty: no checkpoint
    /// Stop after this many newly computed pixels (< 0: no limit).
    long max_new_pixels = -1;
    std::function<void(const PixelResult&)> on_pixel;
};

/// Runs every pixel not already present in the checkpoint. Results do not
/// depend on thread count or execution order.
[[nodiscard]] PhaseDiagram run_diagram(const GridSpec& grid, const DiagramOptions& options = {});

/// Multiplies gamma_1, gamma_2 by `factor` and the drive by sqrt(factor),
/// which keeps the mechanical gain-to-loss ratio (and so the Hopf threshold
/// in paper coordinates) roughly in place. The default window follows gamma_1.
[[nodiscard]] SystemParams desk_scaled(const SystemParams& params, double factor = 100.0);

// ---------------------------------------------------------------------------
// Noise ensembles
// ---------------------------------------------------------------------------

struct EnsembleOptions {
    int n_trajectories = 500;
    std::uint64_t seed = 0;
    int threads = 1;
    TimeWindow window;  // only window.hi is used; hi <= lo selects 19/gamma_1
};

struct EnsembleRun {
    std::vector<double> theta1;       // final-period phase of oscillator 1
    std::vector<double> theta_minus;  // final-period phase difference
    std::vector<double> P_mean;       // per trajectory, over the window
    int failures = 0;
};

/// Stochastic Heun trajectories from independent thermal samples; trajectory
/// i uses noise stream i and initial-state seed mix(seed, i). Output order
/// follows the trajectory index regardless of threading.
[[nodiscard]] EnsembleRun run_ensemble(const SystemParams& params, const EnsembleOptions& options);

// ---------------------------------------------------------------------------
// Hysteresis
// ---------------------------------------------------------------------------

struct BistabilityResult {
    SteadyState thermal_A;
    SteadyState thermal_B;
    SteadyState forward;   // start from A's final state, run with B (phase B')
    SteadyState backward;  // start from B's final state, run with A (phase A')
};

[[nodiscard]] BistabilityResult bistability_probe(const SystemParams& params_A,
                                                  const SystemParams& params_B,
                                                  const TimeWindow& window, std::uint64_t seed);

}  // namespace magsync
