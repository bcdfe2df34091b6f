#pragma once

// Fixed points of the noiseless equations and their linear stability.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "magsync/dynamics.hpp"
#include "magsync/model.hpp"

namespace magsync {

class FixedPointError : public std::runtime_error {
public:
    FixedPointError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    [[nodiscard]] double residual() const { return residual_; }

private:
    double residual_;
};

/// Eigenvalues with real part inside +-margin (scaled units) are marginal.
inline constexpr double stability_margin = 1e-6;

/// Fixed points in physical parameters. OneSphere: all roots of the cubic in
/// |m|^2; TwoSphere: damped Newton continued in the drive from the origin,
/// plus restarts. Duplicates are removed.
[[nodiscard]] std::vector<SystemState> fixed_points(const SystemParams& params);

/// Analytic Jacobian of the drift in real coordinates (Re, Im per mode),
/// in the rate units of `params`.
[[nodiscard]] Eigen::MatrixXd jacobian(const SystemState& state, const SystemParams& params);

[[nodiscard]] std::vector<cplx> eigenvalues(const SystemState& state, const SystemParams& params);

struct FixedPointInfo {
    SystemState state;
    std::vector<cplx> eigenvalues;  // rad/s
    double eigen_max_real = 0.0;    // rad/s
    double residual = 0.0;          // drift norm, scaled units, relative to the drive
    bool stable = false;            // every real part < -margin
    bool marginal = false;          // max real part within +-margin
};

struct FixedPointReport {
    std::vector<FixedPointInfo> points;
    bool any_stable = false;
    bool any_marginal = false;
    /// Index of the stable point with the most negative max real part, or -1.
    int best_stable = -1;
};

[[nodiscard]] FixedPointReport analyze_fixed_points(const SystemParams& params);

struct StabilityOptions {
    std::uint64_t seed = 0;
    /// Length of the convergence check run, seconds. <= 0: 19 / gamma_1.
    double t_end = 0.0;
};

struct StabilityResult {
    bool stable = false;           // gray: relaxes to a stable fixed point
    bool linear_stable = false;    // some fixed point has all Re(lambda) < -margin
    bool marginal = false;
    bool trajectory_converged = false;
    double eigen_max_real = 0.0;   // rad/s, of the best stable (or least unstable) point
    FixedPointReport report;
};

/// Distance bookkeeping for the trajectory half of the classification.
class ConvergenceMonitor {
public:
    ConvergenceMonitor(const SystemState& target, double t_end);
    void operator()(double t, const ModeArray& z);
    /// Decreasing over the final tenth of the run and shrunk 1e3-fold from
    /// the start.
    [[nodiscard]] bool converged() const;

private:
    SystemState target_;
    double t_end_;
    double d_start_ = -1.0;
    double d_tail_ = -1.0;
    double d_last_ = -1.0;
};

/// Gray iff a stable fixed point exists and a noiseless run from a thermal
/// sample converges to it.
[[nodiscard]] StabilityResult classify_stability(const SystemParams& params,
                                                 const StabilityOptions& options = {});

/// True iff some fixed point is linearly stable.
[[nodiscard]] bool linearly_stable(const SystemParams& params);

struct HopfScan {
    double threshold_log10 = 0.0;  // log10(Omega / Omega_ref) at the flip
    int flips = 0;                 // stability changes on the scan grid
    std::vector<double> grid;
    std::vector<bool> stable;
};

/// Scans log10(Omega/Omega_ref) over [lo, hi] on `samples` points, counts
/// stability flips and bisects the first one to `tol`.
[[nodiscard]] HopfScan hopf_scan(const SystemParams& params, double lo, double hi, int samples,
                                 double tol = 1e-3);

}  // namespace magsync
