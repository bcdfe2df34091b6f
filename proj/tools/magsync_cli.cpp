// magsync: command-line front end.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
// failure. Diagnostics go to standard error.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "magsync/dynamics.hpp"
#include "magsync/io.hpp"
#include "magsync/model.hpp"
#include "magsync/sideband.hpp"
#include "magsync/stability.hpp"
#include "magsync/sweep.hpp"
#include "magsync/sync.hpp"

namespace fs = std::filesystem;
using namespace magsync;
using io::json;

namespace {

constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

struct Globals {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string out = ".";
};

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json header(const io::RunConfig& c, const std::string& command) {
    return json{{"command", command}, {"config_hash", c.hash}};
}

std::string path_in(const Globals& g, const std::string& name) { return (fs::path(g.out) / name).string(); }

io::RunConfig load(const Globals& g) {
    json doc = json::object();
    if (!g.config_path.empty()) {
        std::ifstream in(g.config_path);
        if (!in) throw io::ConfigError("cannot read configuration file " + g.config_path);
        doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) throw io::ConfigError("configuration file is not valid JSON");
    }
    for (const auto& o : g.overrides) io::apply_override(doc, o);
    if (g.seed) {
        doc["seed"] = *g.seed;
        if (doc.contains("ensemble") && doc["ensemble"].is_object() && doc["ensemble"].contains("seed"))
            doc["ensemble"]["seed"] = *g.seed;
        if (doc.contains("grid") && doc["grid"].is_object() && doc["grid"].contains("seed"))
            doc["grid"]["seed"] = *g.seed;
    }
    if (g.threads < 1) throw io::ConfigError("--threads must be at least 1");
    std::error_code ec;
    fs::create_directories(g.out, ec);
    if (!fs::is_directory(g.out)) throw io::ConfigError("cannot create output directory " + g.out);
    return io::parse_config(doc);
}

std::uint64_t ensemble_seed(const io::RunConfig& c) {
    const json& s = c.resolved["ensemble"]["seed"];
    return s.is_null() ? c.seed : s.get<std::uint64_t>();
}

std::vector<std::string> mode_columns(ModelKind kind) {
    std::vector<std::string> names = kind == ModelKind::OneSphere
                                         ? std::vector<std::string>{"a", "m", "b1", "b2"}
                                         : std::vector<std::string>{"a", "m1", "m2", "b1", "b2"};
    std::vector<std::string> cols{"t"};
    for (const auto& n : names) {
        cols.push_back("re_" + n);
        cols.push_back("im_" + n);
    }
    return cols;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Globals& g) {
    const io::RunConfig c = load(g);
    const SystemParams& p = c.params;
    const ScaledParams scaled = nondimensionalize(p);
    const TimeWindow window = c.window();

    IntegrationSpec spec;
    spec.method = c.integration.method;
    spec.dt = c.integration.dt > 0.0 ? c.integration.dt
                                     : scaled.to_seconds(default_scaled_dt(scaled.params));
    spec.t_end = c.integration.t_end > 0.0 ? c.integration.t_end : window.hi;
    spec.record_from = c.integration.record_from;
    const double period = constants::two_pi / p.omega_bar();
    spec.sample_stride = c.integration.sample_stride > 0
                             ? c.integration.sample_stride
                             : std::max(1, static_cast<int>(std::floor(period / spec.dt / 20.0)));

    SystemState initial(p.model_kind);
    if (c.integration.thermal_initial) initial = thermal_sample(p, mix_seed(c.seed, 0));
    const NoiseSpec noise = noise_from_params(p, c.seed, 0);
    const Trajectory traj =
        simulate(p, initial, spec, spec.method == Method::Heun ? &noise : nullptr);

    io::CsvWriter tw(path_in(g, "trajectory.csv"), "simulate", c.hash, mode_columns(p.model_kind));
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row{traj.times[k]};
        for (std::size_t i = 0; i < traj.states[k].mode_count(); ++i) {
            row.push_back(traj.states[k].z[i].real());
            row.push_back(traj.states[k].z[i].imag());
        }
        tw.row(row);
    }
    tw.close();

    const TimeWindow analysis{std::max(window.lo, traj.times.front()),
                              std::min(window.hi, traj.times.back())};
    std::vector<SyncObservables> series;
    json summary = header(c, "simulate");
    summary["window"] = {analysis.lo, analysis.hi};
    summary["samples"] = traj.size();
    try {
        series = extract_sva(traj, p, analysis);
        const SteadyState s = summarize_window(series, analysis);
        summary["steady_state"] = io::to_json(s);
        for (auto* v : {&s.P_mean, &s.theta_minus_s, &s.R_s})
            if (!std::isfinite(*v)) summary["steady_state"] = nullptr;
    } catch (const InsufficientDataError& e) {
        std::cerr << "warning: no sync observables: " << e.what() << "\n";
        summary["steady_state"] = nullptr;
    }
    io::CsvWriter ow(path_in(g, "observables.csv"), "simulate", c.hash,
                     {"t", "I1", "I2", "theta_1", "theta_2", "theta_minus", "R", "P"});
    for (const auto& o : series) ow.row({o.t, o.I1, o.I2, o.theta_1, o.theta_2, o.theta_minus, o.R, o.P});
    ow.close();
    io::write_json(path_in(g, "summary.json"), summary);
    return 0;
}

int cmd_ensemble(const Globals& g) {
    const io::RunConfig c = load(g);
    EnsembleOptions opt;
    opt.n_trajectories = c.ensemble.n_trajectories;
    opt.seed = ensemble_seed(c);
    opt.threads = g.threads;
    opt.window = c.window();
    const EnsembleRun run = run_ensemble(c.params, opt);
    if (run.failures > 0) std::cerr << "warning: " << run.failures << " trajectories diverged\n";
    const EnsembleStats stats = ensemble_stats(run.theta1, run.theta_minus, c.ensemble.bin_width);

    auto write_hist = [&](const std::string& name, const Histogram& h) {
        io::CsvWriter w(path_in(g, name), "ensemble", c.hash, {"bin_center", "density"});
        for (std::size_t i = 0; i < h.density.size(); ++i) w.row({h.bin_centers[i], h.density[i]});
        w.close();
    };
    write_hist("histogram_theta1.csv", stats.histogram_theta1);
    write_hist("histogram_theta_minus.csv", stats.histogram_theta_minus);

    io::CsvWriter fw(path_in(g, "final_phases.csv"), "ensemble", c.hash, {"theta1", "theta_minus", "P_mean"});
    for (std::size_t i = 0; i < run.theta1.size(); ++i) fw.row({run.theta1[i], run.theta_minus[i], run.P_mean[i]});
    fw.close();

    json j = header(c, "ensemble");
    j["stats"] = io::to_json(stats);
    j["failures"] = run.failures;
    j["bin_width"] = c.ensemble.bin_width;
    io::write_json(path_in(g, "ensemble.json"), j);
    return 0;
}

std::vector<double> b_grid(const io::RunConfig& c) {
    std::vector<double> grid;
    const double wbar = c.params.omega_bar();
    for (int i = 0; i < c.sideband.count; ++i) {
        const double u = c.sideband.B_min +
                         (c.sideband.B_max - c.sideband.B_min) * i / (c.sideband.count - 1);
        grid.push_back(u * wbar);
    }
    return grid;
}

void write_f_curve(const Globals& g, const io::RunConfig& c, const std::string& command,
                   const std::vector<FCurvePoint>& curve) {
    io::CsvWriter w(path_in(g, "f_curve.csv"), command, c.hash,
                    {"B_tilde", "F_r", "F_i", "converged", "iterations"});
    for (const auto& pt : curve)
        w.row({pt.B_tilde, pt.F.real(), pt.F.imag(), pt.converged ? 1.0 : 0.0,
               static_cast<double>(pt.iterations)});
    w.close();
}

int cmd_sideband(const Globals& g) {
    const io::RunConfig c = load(g);
    if (c.params.model_kind != ModelKind::OneSphere)
        throw io::ConfigError("the sideband expansion covers the one-sphere model only");
    const auto curve = f_curve(c.params, b_grid(c), c.sideband.options);
    write_f_curve(g, c, "sideband", curve);
    std::size_t failed = 0;
    for (const auto& pt : curve) failed += pt.converged ? 0 : 1;
    if (failed) std::cerr << "warning: " << failed << " sideband points did not converge\n";
    return 0;
}

int cmd_constraint(const Globals& g) {
    const io::RunConfig c = load(g);
    io::CsvWriter w(path_in(g, "constraint.csv"), "constraint", c.hash, {"theta_minus", "R_lo", "R_hi", "P"});
    const int n = c.constraint.theta_count;
    const double nan = std::nan("");
    for (int i = 0; i < n; ++i) {
        const double th = -constants::pi + constants::two_pi * i / (n - 1);
        const auto roots = constraint_solve(th, c.params);
        w.row({th, roots.size() > 0 ? roots[0] : nan, roots.size() > 1 ? roots[1] : nan, std::cos(th)});
    }
    w.close();

    json j = header(c, "constraint");
    j["roots_at_zero"] = constraint_solve(0.0, c.params);
    try {
        const PiPhaseOptimum opt = pi_phase_optimum(c.params);
        j["pi_phase_optimum"] = {{"P_pi_opt", opt.P_pi_opt}, {"R_star", opt.R_star}, {"theta_max", opt.theta_max}};
    } catch (const std::domain_error& e) {
        std::cerr << "warning: no pi-phase optimum: " << e.what() << "\n";
        j["pi_phase_optimum"] = nullptr;
    }
    io::write_json(path_in(g, "constraint.json"), j);
    return 0;
}

int cmd_modulate(const Globals& g) {
    const io::RunConfig c = load(g);
    if (c.params.model_kind != ModelKind::OneSphere)
        throw io::ConfigError("the modulation procedure covers the one-sphere model only");
    const auto curve = f_curve(c.params, b_grid(c), c.sideband.options);
    write_f_curve(g, c, "modulate", curve);

    const FsLocus locus = fs_locus(c.params, c.locus.P_threshold, c.locus.samples);
    io::CsvWriter w(path_in(g, "fs_locus.csv"), "modulate", c.hash,
                    {"branch", "kind", "root", "theta_minus", "R", "F_r", "F_i"});
    for (std::size_t b = 0; b < locus.branches.size(); ++b) {
        const auto& br = locus.branches[b];
        for (const auto& pt : br.points)
            w.row(std::vector<std::string>{std::to_string(b),
                                           br.kind == LocusKind::ZeroPhase ? "zero" : "pi",
                                           std::to_string(br.root), io::format_number(pt.theta),
                                           io::format_number(pt.R), io::format_number(pt.F.real()),
                                           io::format_number(pt.F.imag())});
    }
    w.close();

    const auto targets = find_sync_targets(c.params, curve, locus, c.sideband.options);
    json j = header(c, "modulate");
    j["P_threshold"] = c.locus.P_threshold;
    j["zero_phase_locus_empty"] = locus.empty(LocusKind::ZeroPhase);
    j["pi_phase_locus_empty"] = locus.empty(LocusKind::PiPhase);
    json list = json::array();
    for (const auto& t : targets)
        list.push_back({{"kind", t.kind == LocusKind::ZeroPhase ? "zero" : "pi"},
                        {"B_tilde", t.B_tilde},
                        {"theta_minus", t.theta_minus},
                        {"R", t.R},
                        {"P", std::cos(t.theta_minus)},
                        {"F_r", t.F.real()},
                        {"F_i", t.F.imag()},
                        {"refinements", t.refinements}});
    j["intersections"] = list;
    j["synchronization_predicted"] = !targets.empty();
    io::write_json(path_in(g, "intersections.json"), j);
    return 0;
}

int cmd_stability(const Globals& g) {
    const io::RunConfig c = load(g);
    StabilityOptions opt;
    opt.seed = c.seed;
    opt.t_end = c.integration.t_end;
    const StabilityResult r = classify_stability(c.params, opt);

    json pts = json::array();
    for (const auto& fp : r.report.points) {
        json modes = json::array();
        for (std::size_t i = 0; i < fp.state.mode_count(); ++i)
            modes.push_back({fp.state.z[i].real(), fp.state.z[i].imag()});
        json eig = json::array();
        for (const auto& e : fp.eigenvalues) eig.push_back({e.real(), e.imag()});
        pts.push_back({{"state", modes},
                       {"eigenvalues", eig},
                       {"eigen_max_real", fp.eigen_max_real},
                       {"residual", fp.residual},
                       {"stable", fp.stable},
                       {"marginal", fp.marginal}});
    }
    json j = header(c, "stability");
    j["fixed_points"] = pts;
    j["any_stable"] = r.report.any_stable;
    j["any_marginal"] = r.report.any_marginal;
    j["best_stable"] = r.report.best_stable;
    j["classification"] = {{"gray", r.stable},
                           {"linear_stable", r.linear_stable},
                           {"marginal", r.marginal},
                           {"trajectory_converged", r.trajectory_converged},
                           {"eigen_max_real", finite_or_null(r.eigen_max_real)}};
    if (c.hopf.enabled) {
        const HopfScan h = hopf_scan(c.params, c.hopf.lo, c.hopf.hi, c.hopf.samples);
        json grid = json::array();
        for (std::size_t i = 0; i < h.grid.size(); ++i)
            grid.push_back({{"log10_ratio", h.grid[i]}, {"stable", static_cast<bool>(h.stable[i])}});
        j["hopf"] = {{"flips", h.flips},
                     {"threshold_log10", h.flips > 0 ? json(h.threshold_log10) : json(nullptr)},
                     {"scan", grid}};
    }
    io::write_json(path_in(g, "stability.json"), j);
    return 0;
}

int cmd_diagram(const Globals& g) {
    const io::RunConfig c = load(g);
    if (!c.grid) throw io::ConfigError("the diagram command needs a 'grid' block");
    const GridSpec& grid = *c.grid;

    DiagramOptions opt;
    opt.threads = g.threads;
    opt.checkpoint_path = path_in(g, "diagram.checkpoint.jsonl");
    const long total = static_cast<long>(grid.x.count) * grid.y.count;
    long done = 0;
    opt.on_pixel = [&](const PixelResult&) {
        ++done;
        if (done % 50 == 0) std::cerr << "diagram: " << done << " new pixels\n";
    };
    const PhaseDiagram d = run_diagram(grid, opt);
    if (!d.complete()) throw std::runtime_error("diagram incomplete");

    io::CsvWriter w(path_in(g, "diagram.csv"), "diagram", c.hash,
                    {"ix", "iy", "x", "y", "P", "gray", "failed", "stationary", "linear_stable",
                     "theta_minus_s", "R_s", "eigen_max_real"});
    json pixels = json::array();
    long failed = 0;
    for (int iy = 0; iy < grid.y.count; ++iy) {
        for (int ix = 0; ix < grid.x.count; ++ix) {
            const PixelResult& px = d.at(ix, iy);
            const bool has_P = !px.gray && !px.failed;
            const double nan = std::nan("");
            failed += px.failed ? 1 : 0;
            w.row({static_cast<double>(ix), static_cast<double>(iy), grid.x.coordinate(ix),
                   grid.y.coordinate(iy), has_P ? px.P_mean : nan, px.gray ? 1.0 : 0.0,
                   px.failed ? 1.0 : 0.0, px.stationary ? 1.0 : 0.0, px.linear_stable ? 1.0 : 0.0,
                   has_P ? px.theta_minus_s : nan, has_P ? px.R_s : nan, px.eigen_max_real});
            pixels.push_back({{"ix", ix},
                              {"iy", iy},
                              {"x", grid.x.coordinate(ix)},
                              {"y", grid.y.coordinate(iy)},
                              {"P", has_P ? finite_or_null(px.P_mean) : json(nullptr)},
                              {"gray", px.gray},
                              {"failed", px.failed},
                              {"stationary", px.stationary},
                              {"linear_stable", px.linear_stable},
                              {"theta_minus_s", has_P ? finite_or_null(px.theta_minus_s) : json(nullptr)},
                              {"R_s", has_P ? finite_or_null(px.R_s) : json(nullptr)},
                              {"eigen_max_real", finite_or_null(px.eigen_max_real)},
                              {"error", px.error}});
        }
    }
    w.close();
    json j = header(c, "diagram");
    j["grid"] = io::to_json(grid);
    j["pixels"] = pixels;
    j["pixel_count"] = total;
    j["failed_count"] = failed;
    io::write_json(path_in(g, "diagram.json"), j);
    if (failed) std::cerr << "warning: " << failed << " pixels failed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cavity magnomechanics synchronization toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--set", g.overrides, "Override a configuration value, key.path=value")->take_all();
    app.add_option("--seed", g.seed, "Base seed");
    app.add_option("--threads", g.threads, "Worker threads for ensembles and diagrams");
    app.add_option("--out", g.out, "Output directory");
    app.fallthrough();

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const Globals&);
    };
    const Command commands[] = {
        {"simulate", "Integrate one trajectory; trajectory and sync observables", cmd_simulate},
        {"ensemble", "Noisy trajectory ensemble; phase histograms and compression ratio", cmd_ensemble},
        {"sideband", "F along a grid of |B~| from the sideband expansion", cmd_sideband},
        {"constraint", "Constraint roots over theta_- and the pi-phase optimum", cmd_constraint},
        {"modulate", "F-curve, stationary loci and their intersections", cmd_modulate},
        {"stability", "Fixed points, eigenvalues and gray classification", cmd_stability},
        {"diagram", "Phase diagram over a two-parameter grid", cmd_diagram},
    };
    int (*selected)(const Globals&) = nullptr;
    for (const auto& cmd : commands) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->callback([&selected, run = cmd.run] { selected = run; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_validation;
    }

    try {
        return selected(g);
    } catch (const io::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_validation;
    } catch (const json::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
}
