#include "magsync/sweep.hpp"

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace magsync {

using json = nlohmann::json;

// ---------------------------------------------------------------------------

SystemState thermal_sample(const SystemParams& params, std::uint64_t seed) {
    GaussianStream rng(seed, 0);
    return sample_thermal_state(params, rng);
}

namespace {

int demod_stride(int steps_per_period, int samples_per_period) {
    int best = 1;
    for (int d = 1; d <= steps_per_period; ++d)
        if (steps_per_period % d == 0 && steps_per_period / d >= samples_per_period) best = d;
    return best;
}

}  // namespace

SteadyRun run_steady(const SystemParams& params, const SystemState& initial,
                     const TimeWindow& window, const SteadyRunOptions& options) {
    validate(params);
    if (initial.kind != params.model_kind)
        throw std::invalid_argument("initial state layout does not match the model kind");
    if (!(window.hi > window.lo) || window.lo < 0.0) throw std::invalid_argument("invalid window");

    const ScaledParams scaled = nondimensionalize(params);
    const double dt = default_scaled_dt(scaled.params);
    const int K = steps_per_period(scaled.params);
    const int stride = demod_stride(K, options.samples_per_period);
    const double t_end = scaled.to_scaled_time(window.hi);
    const auto steps = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));

    PeriodDemodulator demod(params.model_kind, scaled.params.omega_bar(), 0.0, K / stride);
    std::optional<ConvergenceMonitor> monitor;
    if (options.fixed_point) monitor.emplace(*options.fixed_point, t_end);

    SteadyRun run;
    run.final_state = initial;
    const LangevinDrift f(scaled.params);
    run_rk4(f, run.final_state.z, initial.mode_count(), 0.0, dt, steps, stride,
            [&](double t, const ModeArray& z) {
                demod(t, z);
                if (monitor) (*monitor)(t, z);
            });

    run.periods = demod.periods();
    // Back to seconds; B_j are referenced to e^{i wbar t}, which is unit-free.
    for (auto& p : run.periods) p.t_mid = scaled.to_seconds(p.t_mid);
    run.series = observables(run.periods);
    std::size_t inside = 0;
    for (const auto& o : run.series) inside += window.contains(o.t) ? 1 : 0;
    if (inside >= 2) run.steady = summarize_window(run.series, window, options.tolerance);
    run.converged_to_fixed_point = monitor && monitor->converged();
    return run;
}

cplx measured_F(const SteadyRun& run, const SystemParams& params, const TimeWindow& window) {
    cplx sum{};
    std::size_t n = 0;
    for (const auto& p : run.periods) {
        if (!window.contains(p.t_mid)) continue;
        const cplx Bt = params.g_1 * p.B[0] + params.g_2 * p.B[1];
        const double mag = std::abs(Bt);
        if (mag == 0.0) continue;
        const cplx c_minus1 = p.magnon_first_harmonic * std::conj(Bt) / mag;
        sum += params.g_tilde() * c_minus1 / mag;
        ++n;
    }
    if (n == 0) throw InsufficientDataError("no demodulated periods inside the window");
    return sum / static_cast<double>(n);
}

double measured_B_tilde(const SteadyRun& run, const SystemParams& params, const TimeWindow& window) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : run.periods) {
        if (!window.contains(p.t_mid)) continue;
        sum += std::abs(params.g_1 * p.B[0] + params.g_2 * p.B[1]);
        ++n;
    }
    if (n == 0) throw InsufficientDataError("no demodulated periods inside the window");
    return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

double Axis::coordinate(int i) const {
    if (count < 2) return min;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

std::string to_string(AxisParam p) {
    switch (p) {
        case AxisParam::Omega: return "Omega";
        case AxisParam::g_ma: return "g_ma";
        case AxisParam::delta_omega: return "delta_omega";
        case AxisParam::Delta: return "Delta";
    }
    return "?";
}

std::string to_string(AxisScale s) { return s == AxisScale::Linear ? "linear" : "log10"; }

AxisParam axis_param_from_string(const std::string& s) {
    if (s == "Omega") return AxisParam::Omega;
    if (s == "g_ma") return AxisParam::g_ma;
    if (s == "delta_omega") return AxisParam::delta_omega;
    if (s == "Delta") return AxisParam::Delta;
    throw std::invalid_argument("unknown axis parameter '" + s +
                                "' (expected Omega, g_ma, delta_omega or Delta)");
}

AxisScale axis_scale_from_string(const std::string& s) {
    if (s == "linear") return AxisScale::Linear;
    if (s == "log10") return AxisScale::Log10;
    throw std::invalid_argument("unknown axis scale '" + s + "' (expected linear or log10)");
}

SystemParams apply_axis(const SystemParams& params, const Axis& axis, double coordinate) {
    const double v = axis.scale == AxisScale::Log10 ? std::pow(10.0, coordinate) : coordinate;
    const double w1 = params.omega_1;
    switch (axis.param) {
        case AxisParam::Omega: return with_drive(params, constants::omega_ref * v);
        case AxisParam::g_ma: {
            SystemParams p = params;
            p.g_ma = v * w1;
            return p;
        }
        case AxisParam::delta_omega: return with_delta_omega(params, v * w1);
        case AxisParam::Delta: return with_detuning(params, v * w1);
    }
    return params;
}

SystemParams GridSpec::pixel_params(int ix, int iy) const {
    SystemParams p = apply_axis(base, x, x.coordinate(ix));
    p = apply_axis(p, y, y.coordinate(iy));
    return desk_scale == 1.0 ? p : desk_scaled(p, desk_scale);
}

TimeWindow GridSpec::effective_window() const {
    if (window.hi > window.lo) return window;
    return default_window(desk_scale == 1.0 ? base : desk_scaled(base, desk_scale));
}

void validate(const GridSpec& grid) {
    for (const Axis* a : {&grid.x, &grid.y})
        if (a->count < 2) throw std::invalid_argument("each grid axis needs count >= 2");
    if (grid.x.param == grid.y.param) throw std::invalid_argument("grid axes must differ");
    if (!(grid.desk_scale > 0.0)) throw std::invalid_argument("desk scale must be positive");
    validate(grid.base);
}

std::uint64_t pixel_seed(std::uint64_t base, int ix, int iy) {
    return mix_seed(mix_seed(base, static_cast<std::uint64_t>(ix)), static_cast<std::uint64_t>(iy));
}

PixelResult run_pixel(const SystemParams& params, const TimeWindow& window, std::uint64_t seed) {
    PixelResult out;
    try {
        SteadyRunOptions opts;
        try {
            const FixedPointReport rep = analyze_fixed_points(params);
            out.linear_stable = rep.any_stable;
            out.eigen_max_real = std::numeric_limits<double>::infinity();
            for (const auto& p : rep.points) out.eigen_max_real = std::min(out.eigen_max_real, p.eigen_max_real);
            if (rep.best_stable >= 0)
                opts.fixed_point = rep.points[static_cast<std::size_t>(rep.best_stable)].state;
        } catch (const FixedPointError&) {
            // No fixed point found: the trajectory alone decides.
            out.eigen_max_real = std::numeric_limits<double>::infinity();
        }
        const SteadyRun run = run_steady(params, thermal_sample(params, seed), window, opts);
        out.gray = out.linear_stable && run.converged_to_fixed_point;
        if (!out.gray) {
            if (!run.steady) throw InsufficientDataError("no demodulated periods inside the window");
            out.P_mean = run.steady->P_mean;
            out.theta_minus_s = run.steady->theta_minus_s;
            out.R_s = run.steady->R_s;
            out.stationary = run.steady->stationary;
        }
    } catch (const std::exception& e) {
        out.failed = true;
        out.gray = false;
        out.error = e.what();
    }
    return out;
}

const PixelResult& PhaseDiagram::at(int ix, int iy) const {
    return pixels.at(static_cast<std::size_t>(iy * grid.x.count + ix));
}

bool PhaseDiagram::complete() const {
    return std::all_of(completed.begin(), completed.end(), [](bool b) { return b; });
}

std::string grid_hash(const GridSpec& grid) {
    std::ostringstream os;
    os.precision(17);
    os << params_hash(grid.base);
    for (const Axis* a : {&grid.x, &grid.y})
        os << '|' << to_string(a->param) << ',' << to_string(a->scale) << ',' << a->min << ','
           << a->max << ',' << a->count;
    const TimeWindow w = grid.effective_window();
    os << '|' << w.lo << ',' << w.hi << '|' << grid.seed << '|' << grid.desk_scale;
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_record(const PixelResult& r, const std::string& hash) {
    return json{{"hash", hash},
                {"ix", r.ix},
                {"iy", r.iy},
                {"P", r.P_mean},
                {"gray", r.gray},
                {"failed", r.failed},
                {"stationary", r.stationary},
                {"linear_stable", r.linear_stable},
                {"theta_minus_s", r.theta_minus_s},
                {"R_s", number_or_null(r.R_s)},
                {"eigen_max_real", number_or_null(r.eigen_max_real)},
                {"error", r.error}};
}

double number_or_inf(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

PixelResult from_record(const json& j) {
    PixelResult r;
    r.ix = j.at("ix").get<int>();
    r.iy = j.at("iy").get<int>();
    r.P_mean = j.at("P").get<double>();
    r.gray = j.at("gray").get<bool>();
    r.failed = j.at("failed").get<bool>();
    r.stationary = j.at("stationary").get<bool>();
    r.linear_stable = j.at("linear_stable").get<bool>();
    r.theta_minus_s = j.at("theta_minus_s").get<double>();
    r.R_s = number_or_inf(j.at("R_s"));
    r.eigen_max_real = number_or_inf(j.at("eigen_max_real"));
    r.error = j.at("error").get<std::string>();
    return r;
}

/// Valid records of a matching checkpoint; warns and returns nothing when
/// the file is unreadable or belongs to another grid.
std::vector<PixelResult> load_checkpoint(const std::string& path, const std::string& hash,
                                         const GridSpec& grid) {
    std::vector<PixelResult> out;
    std::ifstream in(path);
    if (!in) return out;
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) lines.push_back(line);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            const json j = json::parse(lines[i]);
            if (j.at("hash").get<std::string>() != hash) {
                std::cerr << "warning: checkpoint " << path
                          << " belongs to a different configuration; starting fresh\n";
                return {};
            }
            PixelResult r = from_record(j);
            if (r.ix < 0 || r.ix >= grid.x.count || r.iy < 0 || r.iy >= grid.y.count)
                throw std::out_of_range("pixel index outside the grid");
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            if (i + 1 == lines.size()) break;  // torn final write
            std::cerr << "warning: unreadable checkpoint " << path << " (" << e.what()
                      << "); starting fresh\n";
            return {};
        }
    }
    return out;
}

}  // namespace

PhaseDiagram run_diagram(const GridSpec& grid, const DiagramOptions& options) {
    validate(grid);
    PhaseDiagram diagram;
    diagram.grid = grid;
    diagram.config_hash = grid_hash(grid);
    const int nx = grid.x.count, ny = grid.y.count;
    const auto total = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    diagram.pixels.resize(total);
    diagram.completed.assign(total, false);
    const TimeWindow window = grid.effective_window();

    std::ofstream checkpoint;
    if (!options.checkpoint_path.empty()) {
        const auto previous = load_checkpoint(options.checkpoint_path, diagram.config_hash, grid);
        for (const PixelResult& r : previous) {
            const auto k = static_cast<std::size_t>(r.iy * nx + r.ix);
            diagram.pixels[k] = r;
            diagram.completed[k] = true;
        }
        // Rewrite compacted so a torn line never sits between records.
        checkpoint.open(options.checkpoint_path, std::ios::trunc);
        if (!checkpoint) throw std::runtime_error("cannot write checkpoint " + options.checkpoint_path);
        for (std::size_t k = 0; k < total; ++k)
            if (diagram.completed[k]) checkpoint << to_record(diagram.pixels[k], diagram.config_hash).dump() << '\n';
        checkpoint.flush();
    }

    std::vector<std::size_t> todo;
    for (std::size_t k = 0; k < total; ++k)
        if (!diagram.completed[k]) todo.push_back(k);

    std::atomic<std::size_t> next{0};
    std::atomic<long> started{0};
    std::mutex mutex;
    auto worker = [&] {
        for (;;) {
            if (options.max_new_pixels >= 0 && started.fetch_add(1) >= options.max_new_pixels) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            const std::size_t k = todo[i];
            const int ix = static_cast<int>(k % static_cast<std::size_t>(nx));
            const int iy = static_cast<int>(k / static_cast<std::size_t>(nx));
            PixelResult r = run_pixel(grid.pixel_params(ix, iy), window, pixel_seed(grid.seed, ix, iy));
            r.ix = ix;
            r.iy = iy;
            std::lock_guard<std::mutex> lock(mutex);
            diagram.pixels[k] = r;
            diagram.completed[k] = true;
            if (checkpoint.is_open()) {
                checkpoint << to_record(r, diagram.config_hash).dump() << '\n';
                checkpoint.flush();
            }
            if (options.on_pixel) options.on_pixel(r);
        }
    };
    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return diagram;
}

SystemParams desk_scaled(const SystemParams& params, double factor) {
    if (!(factor > 0.0)) throw std::invalid_argument("desk scale factor must be positive");
    SystemParams p = with_gamma_scale(params, factor);
    return with_drive(p, params.drive_amplitude() * std::sqrt(factor));
}

// ---------------------------------------------------------------------------

EnsembleRun run_ensemble(const SystemParams& params, const EnsembleOptions& options) {
    validate(params);
    if (options.n_trajectories < 1) throw std::invalid_argument("need at least one trajectory");
    const TimeWindow window =
        options.window.hi > options.window.lo ? options.window : default_window(params);
    const ScaledParams scaled = nondimensionalize(params);
    const double dt = default_scaled_dt(scaled.params);
    const int K = steps_per_period(scaled.params);
    const int stride = demod_stride(K, 20);
    const double t_end = scaled.to_scaled_time(window.hi);
    const auto steps = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
    const LangevinDrift f(scaled.params);

    const auto n = static_cast<std::size_t>(options.n_trajectories);
    EnsembleRun out;
    out.theta1.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.theta_minus.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.P_mean.assign(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> ok(n, 0);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                SystemState s = thermal_sample(params, mix_seed(options.seed, i));
                NoiseSpec noise = noise_from_params(params, options.seed, i);
                PeriodDemodulator demod(params.model_kind, scaled.params.omega_bar(), 0.0, K / stride);
                run_heun(f, f.damping(), noise, s.z, s.mode_count(), 0.0, dt, steps, stride, demod);
                const auto& periods = demod.periods();
                if (periods.empty()) throw InsufficientDataError("no complete period");
                const auto& last = periods.back();
                out.theta1[i] = std::arg(last.B[0]);
                out.theta_minus[i] = wrap_phase(std::arg(last.B[0]) - std::arg(last.B[1]));
                double sum = 0.0;
                std::size_t count = 0;
                for (const auto& p : periods) {
                    if (!window.contains(scaled.to_seconds(p.t_mid))) continue;
                    sum += std::cos(std::arg(p.B[0]) - std::arg(p.B[1]));
                    ++count;
                }
                if (count > 0) out.P_mean[i] = sum / static_cast<double>(count);
                ok[i] = 1;
            } catch (const std::exception&) {
                ok[i] = 0;
            }
        }
    };
    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Drop failed trajectories, keeping index order.
    EnsembleRun kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) {
            ++kept.failures;
            continue;
        }
        kept.theta1.push_back(out.theta1[i]);
        kept.theta_minus.push_back(out.theta_minus[i]);
        kept.P_mean.push_back(out.P_mean[i]);
    }
    return kept;
}

// ---------------------------------------------------------------------------

BistabilityResult bistability_probe(const SystemParams& A, const SystemParams& B,
                                    const TimeWindow& window, std::uint64_t seed) {
    auto steady = [](const SteadyRun& r) {
        if (!r.steady) throw InsufficientDataError("no demodulated periods inside the window");
        return *r.steady;
    };
    const SteadyRun run_A = run_steady(A, thermal_sample(A, seed), window);
    const SteadyRun run_B = run_steady(B, thermal_sample(B, mix_seed(seed, 1)), window);
    BistabilityResult out;
    out.thermal_A = steady(run_A);
    out.thermal_B = steady(run_B);
    out.forward = steady(run_steady(B, run_A.final_state, window));
    out.backward = steady(run_steady(A, run_B.final_state, window));
    return out;
}

}  // namespace magsync
