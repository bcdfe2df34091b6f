#include "magsync/sideband.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace magsync {

std::vector<double> bessel_table(int nmax, double x) {
    if (nmax < 0) throw std::invalid_argument("bessel_table needs nmax >= 0");
    if (!std::isfinite(x)) throw std::invalid_argument("bessel_table needs a finite argument");
    std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
    const double ax = std::abs(x);
    if (ax < 1e-30) {
        // Leading power-series term; the first correction is O(x^2).
        double term = 1.0;
        for (int n = 0; n <= nmax; ++n) {
            out[static_cast<std::size_t>(n)] = term;
            term *= 0.5 * ax / (n + 1);
        }
    } else {
        const int top = std::max(nmax, static_cast<int>(ax));
        int start = top + 30 + static_cast<int>(10.0 * std::cbrt(ax));
        start += start % 2;  // even start keeps the normalisation sum aligned
        std::vector<double> work(static_cast<std::size_t>(start) + 2, 0.0);
        double next = 0.0, cur = 1e-300, norm = 0.0;
        work[static_cast<std::size_t>(start)] = cur;
        for (int k = start; k >= 1; --k) {
            double prev = 2.0 * k / ax * cur - next;
            next = cur;
            cur = prev;
            work[static_cast<std::size_t>(k - 1)] = cur;
            if (std::abs(cur) > 1e250) {
                for (int j = k - 1; j <= start; ++j) work[static_cast<std::size_t>(j)] *= 1e-250;
                next *= 1e-250;
                cur *= 1e-250;
            }
        }
        norm = work[0];
        for (int k = 2; k <= start; k += 2) norm += 2.0 * work[static_cast<std::size_t>(k)];
        for (int n = 0; n <= nmax; ++n)
            out[static_cast<std::size_t>(n)] = work[static_cast<std::size_t>(n)] / norm;
    }
    if (x < 0.0)
        for (int n = 1; n <= nmax; n += 2) out[static_cast<std::size_t>(n)] = -out[static_cast<std::size_t>(n)];
    return out;
}

double bessel_j(int n, double x) {
    if (!(std::abs(x) < 1e6)) throw std::invalid_argument("bessel_j needs |x| < 1e6");
    const int an = std::abs(n);
    const double v = bessel_table(an, x)[static_cast<std::size_t>(an)];
    return (n < 0 && (an % 2 == 1)) ? -v : v;
}

double SidebandSolution::total_population() const {
    double s = 0.0;
    for (const cplx& m : M) s += std::norm(m);
    return s;
}

int default_n_max(const SystemParams& params, double B_tilde_mag) {
    return static_cast<int>(std::ceil(2.0 * std::abs(B_tilde_mag) / params.omega_bar())) + 20;
}

namespace {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Bessel values J_k(z) for k in [-kmax, kmax].
class BesselRow {
public:
    BesselRow(int kmax, double z) : kmax_(kmax), pos_(bessel_table(kmax, z)) {}
    [[nodiscard]] double operator()(int k) const {
        if (k > kmax_ || k < -kmax_) return 0.0;
        const double v = pos_[static_cast<std::size_t>(std::abs(k))];
        return (k < 0 && (k % 2 != 0)) ? -v : v;
    }

private:
    int kmax_;
    std::vector<double> pos_;
};

/// Linear system M = drive_column + coupling * M at fixed beta~ (scaled units).
struct SidebandSystem {
    Vec drive_column;
    Mat coupling;
};

SidebandSystem assemble(const SystemParams& s, double B_tilde, double beta_tilde, int N) {
    const double wbar = s.omega_bar();
    const double z = 2.0 * B_tilde / wbar;
    const BesselRow J(3 * N, z);
    const int size = 2 * N + 1;
    // D_p for p = k + l in [-2N, 2N]
    std::vector<cplx> inv_d(static_cast<std::size_t>(4 * N + 1));
    for (int p = -2 * N; p <= 2 * N; ++p)
        inv_d[static_cast<std::size_t>(p + 2 * N)] =
            1.0 / cplx(s.kappa_m, s.delta_m + beta_tilde + p * wbar);
    Mat kernel(size, size);
    for (int n = -N; n <= N; ++n) {
        for (int l = -N; l <= N; ++l) {
            cplx acc = 0.0;
            for (int k = -N; k <= N; ++k) {
                // J_{n-k-l}(-z) = J_{-(n-k-l)}(z)
                const double jj = J(k + l - n) * J(k);
                if (jj != 0.0) acc += jj * inv_d[static_cast<std::size_t>(k + l + 2 * N)];
            }
            kernel(n + N, l + N) = acc;
        }
    }
    SidebandSystem sys;
    sys.drive_column = s.drive_amplitude() * kernel.col(N);
    sys.coupling = kernel;
    const double g2 = s.g_ma * s.g_ma;
    for (int l = -N; l <= N; ++l) {
        const cplx e = cplx(s.kappa_a, s.delta_a + l * wbar);
        sys.coupling.col(l + N) *= -g2 / e;
    }
    return sys;
}

double relative_change(const Vec& a, const Vec& b) {
    const double scale = std::max(b.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

struct InnerResult {
    Vec M;
    int iterations = 0;
    double residual = 0.0;
    bool direct = false;
};

InnerResult solve_inner(const SidebandSystem& sys, const Vec& guess, const SidebandOptions& opt,
                        bool force_direct) {
    InnerResult r;
    const Index n = sys.drive_column.size();
    if (!force_direct) {
        Vec M = guess;
        double last = std::numeric_limits<double>::infinity();
        int worse = 0;
        for (int it = 1; it <= opt.max_iter; ++it) {
            Vec next = sys.drive_column + sys.coupling * M;
            next = (1.0 - opt.relaxation) * M + opt.relaxation * next;
            const double res = relative_change(next, M);
            M = std::move(next);
            r.iterations = it;
            if (!std::isfinite(res)) break;
            if (res < opt.eps) {
                // a growing mode can look settled in relative terms
                const double dmax = sys.drive_column.cwiseAbs().maxCoeff();
                if (dmax > 0.0 && !(M.cwiseAbs().maxCoeff() <= 1e8 * dmax)) break;
                r.M = std::move(M);
                r.residual = res;
                return r;
            }
            worse = (res > last) ? worse + 1 : 0;
            last = res;
            if (worse >= 5) break;  // stalled or diverging
        }
    }
    // Linear fallback: (I - coupling) M = drive_column.
    Mat A = Mat::Identity(n, n) - sys.coupling;
    r.M = A.partialPivLu().solve(sys.drive_column);
    const Vec check = sys.drive_column + sys.coupling * r.M;
    r.residual = relative_change(check, r.M);
    r.direct = true;
    return r;
}

}  // namespace

SidebandSolution solve_sidebands(const SystemParams& params, double B_tilde_mag,
                                 const SidebandOptions& opt) {
    if (params.model_kind != ModelKind::OneSphere)
        throw std::invalid_argument("sideband reduction is defined for the one-sphere model");
    validate(params);
    if (!(B_tilde_mag >= 0.0) || !std::isfinite(B_tilde_mag))
        throw std::invalid_argument("|B~| must be finite and non-negative");
    if (!(opt.eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const int N = opt.n_max < 0 ? default_n_max(params, B_tilde_mag) : opt.n_max;
    const int n_min = static_cast<int>(std::ceil(2.0 * B_tilde_mag / params.omega_bar())) + 15;
    if (N < n_min) throw std::invalid_argument("n_max too small for |B~| (need ceil(2|B~|/wbar)+15)");

    const ScaledParams scaled = nondimensionalize(params);
    const SystemParams& s = scaled.params;
    const double B = B_tilde_mag / scaled.rate_unit;
    const int size = 2 * N + 1;

    Vec M = Vec::Zero(size);
    M(N) = s.drive_amplitude() / cplx(s.kappa_m, s.delta_m);

    auto beta_of = [&](double population) {
        std::array<cplx, 2> b{};
        const double g[2] = {s.g_1, s.g_2};
        const double w[2] = {s.omega_1, s.omega_2};
        const double gm[2] = {s.gamma_1, s.gamma_2};
        for (int j = 0; j < 2; ++j) b[j] = cplx(0.0, -g[j]) * population / cplx(gm[j], w[j]);
        return b;
    };
    auto beta_tilde_of = [&](const std::array<cplx, 2>& b) {
        return s.g_1 * (std::conj(b[0]) + b[0]) + s.g_2 * (std::conj(b[1]) + b[1]);
    };

    SidebandSolution sol;
    sol.n_max = N;
    sol.B_tilde_mag = B_tilde_mag;
    double beta = 0.0;
    double weight = 1.0;
    double last_step = std::numeric_limits<double>::infinity();
    bool direct = opt.direct_solve;
    double residual = std::numeric_limits<double>::infinity();
    for (int outer = 1; outer <= opt.max_iter; ++outer) {
        const SidebandSystem sys = assemble(s, B, beta, N);
        InnerResult inner = solve_inner(sys, M, opt, direct);
        direct = direct || inner.direct;
        sol.inner_iterations += inner.iterations;
        const double m_change = relative_change(inner.M, M);
        M = std::move(inner.M);
        const double target = beta_tilde_of(beta_of(M.squaredNorm())).real();
        const double step = target - beta;
        const double scale = std::max({std::abs(beta), std::abs(target), 1e-300});
        residual = std::max({std::abs(step) / scale, inner.residual, outer == 1 ? 1.0 : m_change});
        sol.iterations = outer;
        if (std::abs(step) / scale < opt.eps && inner.residual < opt.eps && outer > 1) {
            sol.converged = true;
            break;
        }
        if (std::abs(step) > last_step) weight = std::max(weight * 0.5, 1.0 / 64.0);
        last_step = std::abs(step);
        beta += weight * step;
        if (s.drive_amplitude() == 0.0) {
            sol.converged = true;
            residual = 0.0;
            break;
        }
    }
    sol.residual = residual;
    sol.used_direct_solve = direct;
    if (!sol.converged) {
        std::ostringstream os;
        os << "sideband iteration did not converge after " << opt.max_iter
           << " iterations (residual " << residual << ")";
        throw SidebandConvergenceError(os.str(), residual);
    }

    sol.M.assign(M.data(), M.data() + size);
    const auto b = beta_of(M.squaredNorm());
    sol.beta_s = b;
    const cplx bt = beta_tilde_of(b);
    sol.beta_tilde_s = bt.real() * scaled.rate_unit;
    sol.beta_tilde_imag = bt.imag() * scaled.rate_unit;

    double peak = 0.0;
    for (const cplx& m : sol.M) peak = std::max(peak, std::abs(m));
    const double edge = std::max(std::abs(sol.at(-N)), std::abs(sol.at(N)));
    sol.truncation_warning = peak > 0.0 && edge / peak > 1e-8;
    if (B_tilde_mag > 0.0) sol.F = compute_F(sol, params);
    return sol;
}

cplx compute_F(const SidebandSolution& sol, const SystemParams& params) {
    if (!(sol.B_tilde_mag > 0.0)) throw std::invalid_argument("F needs |B~| > 0");
    cplx acc = 0.0;
    for (int n = -sol.n_max; n < sol.n_max; ++n) acc += sol.at(n) * std::conj(sol.at(n + 1));
    return params.g_tilde() / sol.B_tilde_mag * acc;
}

std::vector<cplx> magnon_excitation_harmonics(const SidebandSolution& sol) {
    const int N = sol.n_max;
    std::vector<cplx> c(static_cast<std::size_t>(4 * N + 1));
    for (int n = 0; n <= 2 * N; ++n) {
        cplx acc = 0.0;
        for (int np = -N; np <= N; ++np) acc += sol.at(n + np) * std::conj(sol.at(np));
        c[static_cast<std::size_t>(n + 2 * N)] = acc;
        c[static_cast<std::size_t>(-n + 2 * N)] = std::conj(acc);
    }
    c[static_cast<std::size_t>(2 * N)] = cplx(c[static_cast<std::size_t>(2 * N)].real(), 0.0);
    return c;
}

std::vector<FCurvePoint> f_curve(const SystemParams& params, const std::vector<double>& B_grid,
                                 const SidebandOptions& options) {
    for (std::size_t i = 0; i < B_grid.size(); ++i) {
        if (!(B_grid[i] > 0.0)) throw std::invalid_argument("|B~| grid must be positive");
        if (i > 0 && !(B_grid[i] > B_grid[i - 1]))
            throw std::invalid_argument("|B~| grid must be increasing");
    }
    std::vector<FCurvePoint> out;
    out.reserve(B_grid.size());
    for (double B : B_grid) {
        FCurvePoint pt;
        pt.B_tilde = B;
        try {
            SidebandOptions o = options;
            if (o.n_max >= 0) o.n_max = std::max(o.n_max, default_n_max(params, B));
            const SidebandSolution sol = solve_sidebands(params, B, o);
            pt.F = sol.F;
            pt.converged = true;
            pt.iterations = sol.iterations;
        } catch (const SidebandConvergenceError& e) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            pt.F = cplx(nan, nan);
            pt.converged = false;
            pt.iterations = options.max_iter;
        }
        out.push_back(pt);
    }
    return out;
}

}  // namespace magsync
