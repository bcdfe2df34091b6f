#pragma once

// Synchronization analysis: slowly varying amplitudes extracted from
// trajectories, the reduced amplitude / Kuramoto-like equations, stationary
// theory (F^s, the R-theta constraint, the optimal pi-phase order parameter),
// the F / F^s intersection procedure and noise-ensemble phase statistics.

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "magsync/dynamics.hpp"
#include "magsync/model.hpp"
#include "magsync/sideband.hpp"

namespace magsync {

struct TimeWindow {
    double lo = 0.0;
    double hi = 0.0;
    [[nodiscard]] bool contains(double t) const { return t >= lo && t <= hi; }
};

/// Default averaging window [9/gamma_1, 19/gamma_1], in seconds.
[[nodiscard]] TimeWindow default_window(const SystemParams& params);

struct SyncObservables {
    double t = 0.0;
    double I1 = 0.0;
    double I2 = 0.0;
    double theta_1 = 0.0;  // unwrapped in time
    double theta_2 = 0.0;  // unwrapped in time
    double theta_minus = 0.0;  // wrapped to (-pi, pi]
    double R = 0.0;
    double P = 0.0;
};

class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularConfigurationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

[[nodiscard]] double wrap_phase(double theta);  // to (-pi, pi]

/// Demodulates both mechanical modes of a stored trajectory over `window`
/// (seconds). beta_j is the mean of b_j over the longest whole number of
/// 2pi/wbar periods inside the window; B_j = (b_j - beta_j) e^{i wbar t}.
/// Needs >= 10 periods and >= 20 samples per period.
[[nodiscard]] std::vector<SyncObservables> extract_sva(const Trajectory& traj,
                                                       const SystemParams& params,
                                                       const TimeWindow& window);

/// Mean of cos(theta_minus) over the samples inside `window`.
[[nodiscard]] double order_parameter(const std::vector<SyncObservables>& series,
                                     const TimeWindow& window);

/// Streaming demodulator: averages b_j e^{i wbar t} over consecutive periods
/// of 2pi/wbar (the mean over a whole period removes beta_j exactly when the
/// samples are uniform and commensurate with the period). Optionally also
/// accumulates the period-averaged |m|^2 e^{i wbar t} needed to measure F.
class PeriodDemodulator {
public:
    PeriodDemodulator(ModelKind kind, double omega_bar, double t_origin, int samples_per_period);

    void operator()(double t, const ModeArray& z);

    struct Period {
        double t_mid = 0.0;
        std::array<cplx, 2> B{};
        cplx magnon_first_harmonic{};  // <|m|^2 e^{i wbar t}> over the period
        std::array<cplx, 2> b_mean{};  // <b_j> over the period
    };
    [[nodiscard]] const std::vector<Period>& periods() const { return periods_; }

private:
    void flush();

    ModelKind kind_;
    double omega_bar_;
    double t_origin_;
    int per_period_;
    long current_ = 0;
    int count_ = 0;
    std::array<cplx, 2> acc_{};
    std::array<cplx, 2> acc_mean_{};
    cplx acc_m_{};
    std::vector<Period> periods_;
};

/// Observables of each period (t in the demodulator's time units).
[[nodiscard]] std::vector<SyncObservables> observables(const std::vector<PeriodDemodulator::Period>& periods);

/// Time-averaged steady-state summary over a window.
struct SteadyState {
    double P_mean = 0.0;
    double theta_minus_s = 0.0;  // circular mean
    double R_s = 0.0;            // <I1> / <I2>
    double I1 = 0.0;
    double I2 = 0.0;
    double theta_spread = 0.0;   // circular standard deviation of theta_minus
    double amplitude_drift = 0.0;  // max_j |<I_j>_2nd - <I_j>_1st| / <I_j>
    double phase_drift = 0.0;      // |circmean_2nd - circmean_1st|
    bool stationary = false;
    std::size_t samples = 0;
};

struct StationarityTolerance {
    double amplitude = 1e-2;
    double phase = 2e-2;
};

[[nodiscard]] SteadyState summarize_window(const std::vector<SyncObservables>& series,
                                           const TimeWindow& window,
                                           const StationarityTolerance& tol = {});

// ---------------------------------------------------------------------------
// Reduced dynamics
// ---------------------------------------------------------------------------

/// dB_j/dt = -[i(w_j - wbar) + gamma_j] B_j - i (g_j F / g~)(g_1 B_1 + g_2 B_2)
[[nodiscard]] std::array<cplx, 2> sva_rhs(cplx B1, cplx B2, cplx F, const SystemParams& params);

/// (dI1/dt, dI2/dt, dtheta_-/dt) of the Kuramoto-like equations.
/// invalid-argument when either amplitude is not positive.
[[nodiscard]] std::array<double, 3> kle_rhs(double I1, double I2, double theta_minus, cplx F,
                                            const SystemParams& params);

struct ReducedSample {
    double t = 0.0;  // s
    cplx B1{}, B2{};
    cplx F{};
    double B_tilde = 0.0;  // rad/s
};

/// RK4 on the amplitude equations with F refreshed from the sideband solver
/// at the current |B~| every `refresh_stride` steps. spec times in seconds.
[[nodiscard]] std::vector<ReducedSample> integrate_sva(const SystemParams& params, cplx B0_1,
                                                       cplx B0_2, const IntegrationSpec& spec,
                                                       int refresh_stride,
                                                       const SidebandOptions& sideband = {});

// ---------------------------------------------------------------------------
// Stationary theory
// ---------------------------------------------------------------------------

/// Stationary F^s(R, theta_-). F_r^s has a pole at sin(theta_-) = 0, reported
/// as SingularConfigurationError.
[[nodiscard]] cplx stationary_F(double R, double theta_minus, const SystemParams& params);
/// Imaginary part only; finite for every theta.
[[nodiscard]] double stationary_F_imag(double R, double theta_minus, const SystemParams& params);

/// Positive roots R of
///   Dw sin(theta) + (gamma1+gamma2) cos(theta) = (g2 gamma1/g1) R + (g1 gamma2/g2)/R,
/// ascending (0, 1 or 2 values).
[[nodiscard]] std::vector<double> constraint_solve(double theta_minus, const SystemParams& params);

/// (LHS - RHS)/RHS of the constraint equation.
[[nodiscard]] double constraint_residual(double theta_minus, double R, const SystemParams& params);

struct PiPhaseOptimum {
    double R_star = 0.0;
    double theta_max = 0.0;
    double P_pi_opt = 0.0;
};
[[nodiscard]] PiPhaseOptimum pi_phase_optimum(const SystemParams& params);

enum class LocusKind { ZeroPhase, PiPhase };

struct LocusPoint {
    double theta = 0.0;
    double R = 0.0;
    cplx F{};
};

/// One continuous piece of a locus: fixed kind, fixed root (0 = smaller R),
/// fixed sign of theta.
struct LocusBranch {
    LocusKind kind = LocusKind::ZeroPhase;
    int root = 0;
    std::vector<LocusPoint> points;
};

struct FsLocus {
    double P_threshold = 0.0;
    std::vector<LocusBranch> branches;
    [[nodiscard]] bool empty(LocusKind kind) const;
};

/// Stationary F^s over theta with |cos theta| > P_threshold, near 0 (zero
/// phase) and near pi (pi phase).
[[nodiscard]] FsLocus fs_locus(const SystemParams& params, double P_threshold,
                               int samples_per_side = 2001);

struct SyncTarget {
    LocusKind kind = LocusKind::ZeroPhase;
    double B_tilde = 0.0;  // rad/s
    double theta_minus = 0.0;
    double R = 0.0;
    cplx F{};
    int refinements = 0;
};

/// Intersections of an F-curve with the F^s loci, each refined until the two
/// sides agree to `tolerance` relative. Several hits mean multistable
/// synchronized limit cycles; none means no synchronization is predicted.
[[nodiscard]] std::vector<SyncTarget> find_sync_targets(const SystemParams& params,
                                                        const std::vector<FCurvePoint>& curve,
                                                        const FsLocus& locus,
                                                        const SidebandOptions& sideband = {},
                                                        double tolerance = 1e-4);

// ---------------------------------------------------------------------------
// Ensemble statistics
// ---------------------------------------------------------------------------

struct Histogram {
    double center = 0.0;  // circular mean the bins are centred on
    double bin_width = 0.0;
    std::vector<double> bin_centers;  // absolute phase of each bin centre
    std::vector<double> density;      // sum(density) * bin_width == 1
};

struct EnsembleStats {
    Histogram histogram_theta1;
    Histogram histogram_theta_minus;
    double mean_theta1 = 0.0;
    double mean_theta_minus = 0.0;
    double var_theta1 = 0.0;
    double var_theta_minus = 0.0;
    double eta = 0.0;
    std::size_t n = 0;
};

/// Phases are recentred on their circular mean and wrapped before the
/// moments are taken; eta = var(theta_-) / var(theta_1). Needs N >= 100.
[[nodiscard]] EnsembleStats ensemble_stats(const std::vector<double>& theta1,
                                           const std::vector<double>& theta_minus,
                                           double bin_width = 2.0 * constants::pi / 200.0);

}  // namespace magsync
