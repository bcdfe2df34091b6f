#pragma once

// Sideband reduction of the one-sphere model. With b_j = beta_j + B_j e^{-i wbar t}
// the magnon and cavity amplitudes become sums over mechanical sidebands
//   m(t) = sum_n M_n e^{i n (wbar t - phi)},   B~ = sum_j g_j B_j = |B~| e^{i phi}.
// The amplitudes M_n solve a linear system at fixed equilibrium shift beta~,
// and beta~ closes on sum_n |M_n|^2. The mechanical back-action is carried by
//   F = (g~ / |B~|) sum_n M_n M_{n+1}^*.

#include <stdexcept>
#include <vector>

#include "magsync/model.hpp"

namespace magsync {

/// Bessel function of the first kind J_n(x), integer order, |x| < 1e6.
[[nodiscard]] double bessel_j(int n, double x);

/// J_0(x) .. J_nmax(x) by Miller's downward recurrence normalised with
/// J_0 + 2 sum_k J_2k = 1. Valid for any finite x (negative x by parity).
[[nodiscard]] std::vector<double> bessel_table(int nmax, double x);

struct SidebandOptions {
    int n_max = -1;          // < 0: ceil(2|B~|/wbar) + 20
    double eps = 1e-10;      // relative update tolerance
    int max_iter = 500;      // outer (beta~) and inner (M) iteration cap
    double relaxation = 0.5; // inner damped fixed-point factor
    bool direct_solve = false;  // skip the iteration, solve the linear system
};

struct SidebandSolution {
    int n_max = 0;
    std::vector<cplx> M;  // M[n + n_max], n in [-n_max, n_max]
    std::array<cplx, 2> beta_s{};
    double beta_tilde_s = 0.0;       // rad/s
    double beta_tilde_imag = 0.0;    // imaginary part of sum g_j (beta_j^* + beta_j), rad/s
    double B_tilde_mag = 0.0;        // rad/s
    cplx F{};
    int iterations = 0;        // outer beta~ iterations
    int inner_iterations = 0;  // accumulated inner M iterations
    double residual = 0.0;
    bool converged = false;
    bool truncation_warning = false;
    bool used_direct_solve = false;

    [[nodiscard]] cplx at(int n) const {
        return (n < -n_max || n > n_max) ? cplx{} : M[static_cast<std::size_t>(n + n_max)];
    }
    [[nodiscard]] double total_population() const;  // sum_n |M_n|^2
};

class SidebandConvergenceError : public std::runtime_error {
public:
    SidebandConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    [[nodiscard]] double residual() const { return residual_; }

private:
    double residual_;
};

[[nodiscard]] int default_n_max(const SystemParams& params, double B_tilde_mag);

/// Self-consistent sideband amplitudes at |B~| (rad/s). One-sphere model
/// only. Throws SidebandConvergenceError when the beta~ loop does not settle
/// within max_iter; F is filled in when |B~| > 0.
[[nodiscard]] SidebandSolution solve_sidebands(const SystemParams& params, double B_tilde_mag,
                                               const SidebandOptions& options = {});

/// F = (g~/|B~|) sum_n M_n M_{n+1}^*. invalid-argument when |B~| = 0.
[[nodiscard]] cplx compute_F(const SidebandSolution& sol, const SystemParams& params);

/// Harmonics c_n of |m(t)|^2 = sum_n c_n e^{i n (wbar t - phi)}, n in
/// [-2 n_max, 2 n_max], stored at c[n + 2 n_max]; c_{-n} = conj(c_n).
[[nodiscard]] std::vector<cplx> magnon_excitation_harmonics(const SidebandSolution& sol);

struct FCurvePoint {
    double B_tilde = 0.0;  // rad/s
    cplx F{};
    bool converged = false;
    int iterations = 0;
};

/// F along a grid of |B~| values (positive, increasing). Points whose solve
/// fails are kept with converged = false and F = NaN.
[[nodiscard]] std::vector<FCurvePoint> f_curve(const SystemParams& params,
                                               const std::vector<double>& B_grid,
                                               const SidebandOptions& options = {});

}  // namespace magsync
