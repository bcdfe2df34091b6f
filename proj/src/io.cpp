#include "magsync/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace magsync::io {

namespace {

using constants::two_pi;

constexpr const char* rate_fields[] = {
    "omega_a", "omega_m", "omega_m1", "omega_m2", "omega_1", "omega_2", "delta_a",
    "delta_m", "delta_1", "delta_2", "kappa_a", "kappa_m", "kappa_1", "kappa_2",
    "kappa_in", "kappa_ex", "gamma_1", "gamma_2", "g_1", "g_2", "g_ma"};

double* rate_field(SystemParams& p, const std::string& name) {
    if (name == "omega_a") return &p.omega_a;
    if (name == "omega_m") return &p.omega_m;
    if (name == "omega_m1") return &p.omega_m1;
    if (name == "omega_m2") return &p.omega_m2;
    if (name == "omega_1") return &p.omega_1;
    if (name == "omega_2") return &p.omega_2;
    if (name == "delta_a") return &p.delta_a;
    if (name == "delta_m") return &p.delta_m;
    if (name == "delta_1") return &p.delta_1;
    if (name == "delta_2") return &p.delta_2;
    if (name == "kappa_a") return &p.kappa_a;
    if (name == "kappa_m") return &p.kappa_m;
    if (name == "kappa_1") return &p.kappa_1;
    if (name == "kappa_2") return &p.kappa_2;
    if (name == "kappa_in") return &p.kappa_in;
    if (name == "kappa_ex") return &p.kappa_ex;
    if (name == "gamma_1") return &p.gamma_1;
    if (name == "gamma_2") return &p.gamma_2;
    if (name == "g_1") return &p.g_1;
    if (name == "g_2") return &p.g_2;
    if (name == "g_ma") return &p.g_ma;
    return nullptr;
}

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

double number(const json& v, const std::string& key) {
    if (!v.is_number()) fail("'" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail("'" + key + "' must be finite");
    return x;
}

int integer(const json& v, const std::string& key) {
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<int>();
}

std::uint64_t seed_value(const json& v, const std::string& key) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail("'" + key + "' must be a non-negative integer");
}

TimeWindow window_value(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2) fail("'" + key + "' must be [lo, hi] in seconds");
    TimeWindow w{number(v[0], key), number(v[1], key)};
    if (w.lo < 0.0 || w.hi < w.lo) fail("'" + key + "' needs 0 <= lo <= hi");
    return w;
}

/// Defaults for every block; "params" follows the model kind.
json defaults(ModelKind kind) {
    json d;
    d["params"] = to_json(kind == ModelKind::OneSphere ? default_params() : default_two_sphere_params());
    if (kind == ModelKind::OneSphere)
        d["params"]["drive"] = json{{"log10_ratio", 0.0}};
    else
        d["params"]["drive"] = json{{"power_W", 8e-3}};
    d["desk_scale"] = 1.0;
    d["seed"] = 0;
    d["integration"] = {{"t_end", 0.0},        {"dt", 0.0},           {"sample_stride", 0},
                        {"method", "RK4"},      {"window", {0.0, 0.0}}, {"record_from", 0.0},
                        {"initial", "thermal"}};
    d["ensemble"] = {{"n_trajectories", 500}, {"bin_width", two_pi / 200.0}, {"seed", nullptr}};
    d["grid"] = nullptr;
    d["sideband"] = {{"N_max", -1},   {"eps", 1e-10}, {"max_iter", 500},
                     {"B_min", 0.05}, {"B_max", 4.0}, {"count", 200}};
    d["locus"] = {{"P_threshold", 0.995}, {"samples", 2001}};
    d["constraint"] = {{"theta_count", 721}};
    d["stability"] = {{"hopf", {{"enabled", false}, {"lo", -2.0}, {"hi", 0.0}, {"samples", 41}}}};
    return d;
}

/// Overlays `user` onto `base`, rejecting keys that `base` does not have.
/// Objects whose default is null, and the drive one-of, are replaced whole.
void merge(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) fail("'" + path + "' must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) fail("unknown configuration key '" + key + "'");
        json& slot = base[it.key()];
        if (slot.is_object() && key != "params.drive")
            merge(slot, it.value(), key);
        else
            slot = it.value();
    }
}

SystemParams parse_params(const json& j) {
    const ModelKind kind = model_kind_from_string(j.at("model_kind").get<std::string>());
    SystemParams p;
    p.model_kind = kind;
    for (const char* name : rate_fields) *rate_field(p, name) = two_pi * number(j.at(name), name);
    p.temperature = number(j.at("temperature"), "temperature");

    const json& d = j.at("drive");
    if (!d.is_object() || d.size() != 1)
        fail("'params.drive' needs exactly one of log10_ratio, Omega, Omega_a, power_W");
    const std::string form = d.begin().key();
    const double v = number(d.begin().value(), "params.drive." + form);
    if (form == "log10_ratio") {
        p = with_drive_log10(p, v);
    } else if (form == "Omega") {
        if (kind != ModelKind::OneSphere) fail("'Omega' drives the magnon of the one-sphere model");
        p.drive = MagnonDrive{two_pi * v};
    } else if (form == "Omega_a") {
        if (kind != ModelKind::TwoSphere) fail("'Omega_a' drives the cavity of the two-sphere model");
        p.drive = CavityDrive{two_pi * v};
    } else if (form == "power_W") {
        if (kind != ModelKind::TwoSphere) fail("'power_W' drives the cavity of the two-sphere model");
        try {
            p.drive = CavityDrive{cavity_drive_from_power(p.kappa_ex, v, p.omega_drive())};
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    } else {
        fail("unknown drive form 'params.drive." + form + "'");
    }
    try {
        validate(p);
    } catch (const std::invalid_argument& e) {
        fail(std::string("params: ") + e.what());
    }
    return p;
}

Axis parse_axis(const json& j, const std::string& key) {
    if (!j.is_object()) fail("'" + key + "' must be an object");
    Axis a;
    bool have_param = false;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string k = it.key();
        const std::string full = key + "." + k;
        try {
            if (k == "param") {
                a.param = axis_param_from_string(it.value().get<std::string>());
                have_param = true;
            } else if (k == "scale") {
                a.scale = axis_scale_from_string(it.value().get<std::string>());
            } else if (k == "min") {
                a.min = number(it.value(), full);
            } else if (k == "max") {
                a.max = number(it.value(), full);
            } else if (k == "count") {
                a.count = integer(it.value(), full);
            } else {
                fail("unknown configuration key '" + full + "'");
            }
        } catch (const json::exception&) {
            fail("'" + full + "' has the wrong type");
        } catch (const std::invalid_argument& e) {
            if (dynamic_cast<const ConfigError*>(&e)) throw;
            fail("'" + full + "': " + e.what());
        }
    }
    if (!have_param) fail("'" + key + ".param' is required");
    return a;
}

}  // namespace

TimeWindow RunConfig::window() const {
    return integration.window.hi > integration.window.lo ? integration.window : default_window(params);
}

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) fail("configuration must be a JSON object");
    ModelKind kind = ModelKind::OneSphere;
    if (doc.contains("params") && doc["params"].is_object() && doc["params"].contains("model_kind")) {
        try {
            kind = model_kind_from_string(doc["params"]["model_kind"].get<std::string>());
        } catch (const std::exception&) {
            fail("'params.model_kind' must be OneSphere or TwoSphere");
        }
    }
    json resolved = defaults(kind);
    merge(resolved, doc, "");

    RunConfig c;
    const SystemParams unscaled = parse_params(resolved["params"]);
    c.desk_scale = number(resolved["desk_scale"], "desk_scale");
    if (!(c.desk_scale > 0.0)) fail("'desk_scale' must be positive");
    c.params = c.desk_scale == 1.0 ? unscaled : desk_scaled(unscaled, c.desk_scale);
    c.seed = seed_value(resolved["seed"], "seed");

    const json& in = resolved["integration"];
    c.integration.t_end = number(in["t_end"], "integration.t_end");
    c.integration.dt = number(in["dt"], "integration.dt");
    c.integration.sample_stride = integer(in["sample_stride"], "integration.sample_stride");
    const std::string method = in["method"].is_string() ? in["method"].get<std::string>() : "";
    if (method == "RK4")
        c.integration.method = Method::RK4;
    else if (method == "Heun")
        c.integration.method = Method::Heun;
    else
        fail("'integration.method' must be RK4 or Heun");
    c.integration.window = window_value(in["window"], "integration.window");
    c.integration.record_from = number(in["record_from"], "integration.record_from");
    const std::string initial = in["initial"].is_string() ? in["initial"].get<std::string>() : "";
    if (initial != "thermal" && initial != "zero") fail("'integration.initial' must be thermal or zero");
    c.integration.thermal_initial = initial == "thermal";
    if (c.integration.t_end < 0.0 || c.integration.dt < 0.0 || c.integration.record_from < 0.0)
        fail("integration times must be non-negative");

    const json& en = resolved["ensemble"];
    c.ensemble.n_trajectories = integer(en["n_trajectories"], "ensemble.n_trajectories");
    c.ensemble.bin_width = number(en["bin_width"], "ensemble.bin_width");
    if (c.ensemble.n_trajectories < 1) fail("'ensemble.n_trajectories' must be positive");
    if (!(c.ensemble.bin_width > 0.0) || c.ensemble.bin_width > two_pi)
        fail("'ensemble.bin_width' must lie in (0, 2pi]");
    if (!en["seed"].is_null()) seed_value(en["seed"], "ensemble.seed");

    const json& sb = resolved["sideband"];
    c.sideband.options.n_max = integer(sb["N_max"], "sideband.N_max");
    c.sideband.options.eps = number(sb["eps"], "sideband.eps");
    c.sideband.options.max_iter = integer(sb["max_iter"], "sideband.max_iter");
    c.sideband.B_min = number(sb["B_min"], "sideband.B_min");
    c.sideband.B_max = number(sb["B_max"], "sideband.B_max");
    c.sideband.count = integer(sb["count"], "sideband.count");
    if (!(c.sideband.options.eps > 0.0)) fail("'sideband.eps' must be positive");
    if (c.sideband.options.max_iter < 1) fail("'sideband.max_iter' must be positive");
    if (!(c.sideband.B_min > 0.0) || !(c.sideband.B_max > c.sideband.B_min) || c.sideband.count < 2)
        fail("sideband grid needs 0 < B_min < B_max and count >= 2");

    const json& lc = resolved["locus"];
    c.locus.P_threshold = number(lc["P_threshold"], "locus.P_threshold");
    c.locus.samples = integer(lc["samples"], "locus.samples");
    if (!(c.locus.P_threshold > 0.0 && c.locus.P_threshold < 1.0))
        fail("'locus.P_threshold' must lie in (0, 1)");
    if (c.locus.samples < 2) fail("'locus.samples' must be at least 2");

    c.constraint.theta_count = integer(resolved["constraint"]["theta_count"], "constraint.theta_count");
    if (c.constraint.theta_count < 2) fail("'constraint.theta_count' must be at least 2");

    const json& hp = resolved["stability"]["hopf"];
    if (!hp["enabled"].is_boolean()) fail("'stability.hopf.enabled' must be a boolean");
    c.hopf.enabled = hp["enabled"].get<bool>();
    c.hopf.lo = number(hp["lo"], "stability.hopf.lo");
    c.hopf.hi = number(hp["hi"], "stability.hopf.hi");
    c.hopf.samples = integer(hp["samples"], "stability.hopf.samples");
    if (!(c.hopf.hi > c.hopf.lo) || c.hopf.samples < 2) fail("hopf scan needs lo < hi and samples >= 2");

    const json& gr = resolved["grid"];
    if (!gr.is_null()) {
        if (!gr.is_object()) fail("'grid' must be an object");
        GridSpec g;
        g.base = unscaled;
        g.desk_scale = c.desk_scale;
        g.seed = c.seed;
        for (auto it = gr.begin(); it != gr.end(); ++it) {
            const std::string k = it.key();
            if (k == "x")
                g.x = parse_axis(it.value(), "grid.x");
            else if (k == "y")
                g.y = parse_axis(it.value(), "grid.y");
            else if (k == "window")
                g.window = window_value(it.value(), "grid.window");
            else if (k == "seed")
                g.seed = seed_value(it.value(), "grid.seed");
            else
                fail("unknown configuration key 'grid." + k + "'");
        }
        if (!gr.contains("x") || !gr.contains("y")) fail("'grid' needs both axes x and y");
        try {
            validate(g);
        } catch (const std::invalid_argument& e) {
            fail(std::string("grid: ") + e.what());
        }
        c.grid = g;
    }

    c.resolved = std::move(resolved);
    c.hash = config_hash(c.resolved);
    return c;
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) fail("override '" + assignment + "' is not key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    std::vector<std::string> keys;
    std::stringstream ss(path);
    for (std::string k; std::getline(ss, k, '.');) {
        if (k.empty()) fail("override '" + assignment + "' has an empty key");
        keys.push_back(k);
    }
    if (!doc.is_object()) doc = json::object();
    json* node = &doc;
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        json& next = (*node)[keys[i]];
        if (!next.is_object()) next = json::object();
        // The drive is a one-of: setting one form drops the others.
        if (i + 2 == keys.size() && keys[i] == "drive" && i == 1 && keys[0] == "params")
            next = json::object();
        node = &next;
    }
    (*node)[keys.back()] = std::move(value);
}

std::string config_hash(const json& doc) {
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& command, const std::string& hash,
                     const std::vector<std::string>& columns)
    : out_(path), columns_(columns.size()) {
    if (!out_) throw std::runtime_error("cannot write " + path);
    out_ << "# magsync " << command << "\n# config_hash " << hash << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw std::logic_error("CSV row width mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
    out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("CSV row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) throw std::runtime_error("CSV write failed");
}

void write_json(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("JSON write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    CsvTable t;
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        return cells;
    };
    bool header = false;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line[0] == '#') {
            t.comments.push_back(line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1));
        } else if (!header) {
            t.columns = split(line);
            header = true;
        } else if (!line.empty()) {
            auto cells = split(line);
            if (cells.size() != t.columns.size()) throw std::runtime_error("ragged CSV row in " + path);
            t.rows.push_back(std::move(cells));
        }
    }
    if (!header) throw std::runtime_error("CSV without a column row: " + path);
    return t;
}

json to_json(const SystemParams& params) {
    SystemParams p = params;
    json j;
    j["model_kind"] = to_string(p.model_kind);
    for (const char* name : rate_fields) j[name] = *rate_field(p, name) / two_pi;
    j["temperature"] = p.temperature;
    if (p.model_kind == ModelKind::OneSphere)
        j["drive"] = {{"Omega", p.drive_amplitude() / two_pi}};
    else
        j["drive"] = {{"Omega_a", p.drive_amplitude() / two_pi}};
    return j;
}

json to_json(const GridSpec& grid) {
    auto axis = [](const Axis& a) {
        return json{{"param", to_string(a.param)}, {"scale", to_string(a.scale)},
                    {"min", a.min},                {"max", a.max},
                    {"count", a.count}};
    };
    const TimeWindow w = grid.effective_window();
    return json{{"x", axis(grid.x)},
                {"y", axis(grid.y)},
                {"window", {w.lo, w.hi}},
                {"seed", grid.seed},
                {"desk_scale", grid.desk_scale},
                {"base_params", to_json(grid.base)}};
}

json to_json(const SteadyState& s) {
    return json{{"P_mean", s.P_mean},
                {"theta_minus_s", s.theta_minus_s},
                {"R_s", s.R_s},
                {"I1", s.I1},
                {"I2", s.I2},
                {"theta_spread", s.theta_spread},
                {"amplitude_drift", s.amplitude_drift},
                {"phase_drift", s.phase_drift},
                {"stationary", s.stationary},
                {"samples", s.samples}};
}

json to_json(const EnsembleStats& s) {
    return json{{"n", s.n},
                {"eta", s.eta},
                {"theta1", {{"circular_mean", s.mean_theta1}, {"variance", s.var_theta1}}},
                {"theta_minus", {{"circular_mean", s.mean_theta_minus}, {"variance", s.var_theta_minus}}}};
}

}  // namespace magsync::io
