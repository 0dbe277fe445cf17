#pragma once

#include "smmergo/errors.hpp"
#include "smmergo/harness.hpp"
#include "smmergo/moments.hpp"
#include "smmergo/params.hpp"
#include "smmergo/report.hpp"
#include "smmergo/smm.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace smmergo {

enum class Scale { desk, paper };

[[nodiscard]] inline std::string_view to_string(Scale s) noexcept { return s == Scale::desk ? "desk" : "paper"; }

[[nodiscard]] inline Scale parse_scale(std::string_view s) {
    if (s == "desk") return Scale::desk;
    if (s == "paper") return Scale::paper;
    throw ConfigError("scale", "expected desk or paper, got '" + std::string(s) + "'");
}

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Default sweep range of one parameter, in natural units.
[[nodiscard]] inline Range default_sensitivity_range(ModelId m, std::size_t param) {
    // display units
    static constexpr Range alw[] = {{0.06, 0.66}, {0.28, 3.28}, {6.0, 66.0}};
    static constexpr Range fw[] = {{0.02, 1.52},   {0.75, 2.25},     {-0.4, 2.0},  {0.839, 2.339},
                                   {11.671, 23.671}, {0.58, 0.88}, {1.447, 2.947}};
    const double s = display_scale(m);
    const Range r = m == ModelId::alw ? alw[param] : fw[param];
    return {r.lo / s, r.hi / s};
}

/// Default surface range of one parameter, in natural units.
[[nodiscard]] inline Range default_surface_range(ModelId m, std::size_t param) {
    if (m == ModelId::alw && param == 0) return {0.06e-3, 0.66e-3};
    if (m == ModelId::alw && param == 1) return {0.28e-3, 3.1e-3};
    if (m == ModelId::fw && param == 1) return {0.3, 2.7};
    if (m == ModelId::fw && param == 4) return {3.9342, 35.4078};
    return default_sensitivity_range(m, param);
}

/**
 * @brief Fully resolved settings of one experiment run.
 *
 * Built from scale defaults, then the config file, then command-line
 * overrides. canonical() lists every setting that can affect numeric output.
 */
struct ExperimentConfig {
    ModelId model = ModelId::alw;
    std::uint64_t seed = 42;
    Scale scale = Scale::desk;
    std::size_t workers = 1;
    ParamVector truth = ParamVector::truth(ModelId::alw);
    bool exclude_m6 = false;
    BoundaryMode boundary = BoundaryMode::clamp;

    std::size_t simulate_t = 20'000;

    std::vector<std::size_t> true_t_list{10'000, 100'000, 1'000'000};
    std::size_t true_runs = 500;

    std::size_t weighting_t = 100'000;
    std::size_t weighting_r = 500;

    std::size_t candidates = 500;
    std::size_t runs = 50;
    std::size_t emp_t = 400'000;
    std::vector<ScenarioConfig> scenarios = ScenarioConfig::budget_table(50);

    std::vector<std::string> sensitivity_params;  ///< empty = all
    std::size_t sensitivity_points = 151;
    std::size_t sensitivity_t = 20'000;
    std::size_t sensitivity_n = 10;
    std::size_t sensitivity_r = 10;
    std::vector<std::optional<Range>> sensitivity_ranges;  ///< per parameter override

    std::size_t converge_runs = 500;
    std::size_t converge_true_t = 1'000'000;
    std::size_t converge_true_r = 200;
    std::vector<ScenarioConfig> converge_scenarios{{"long", 400'000, 1, 500}, {"ensemble", 40'000, 10, 500}};

    std::string surface_x;
    std::string surface_y;
    std::optional<Range> surface_x_range;
    std::optional<Range> surface_y_range;
    std::size_t surface_grid = 41;
    std::size_t surface_t = 400'000;
    std::size_t surface_n = 1;
    bool surface_crn = false;

    std::size_t sets_per_size = 17;
    FitnessMode fitness = FitnessMode::relative;
    std::vector<std::string> fitness_scenarios{"a"};

    std::size_t wiener_t = 10'000;
    std::size_t wiener_paths = 10'000;

    /// Defaults for a model and scale before any file or flag is applied.
    [[nodiscard]] static ExperimentConfig defaults(ModelId m, Scale s) {
        ExperimentConfig c;
        c.model = m;
        c.scale = s;
        c.truth = ParamVector::truth(m);
        c.sensitivity_ranges.assign(param_count(m), std::nullopt);
        if (m == ModelId::alw) {
            c.surface_x = "a";
            c.surface_y = "b";
        } else {
            c.surface_x = "chi";
            c.surface_y = "alpha_p";
        }
        if (s == Scale::paper) {
            c.true_t_list = {10'000, 100'000, 1'000'000, 10'000'000};
            c.true_runs = 5000;
            c.candidates = 2000;
            c.runs = 200;
            c.sensitivity_n = 50;
            c.sensitivity_r = 100;
            c.converge_runs = 5000;
        }
        c.sync_runs();
        return c;
    }

    [[nodiscard]] MomentSet moment_set() const {
        return exclude_m6 ? MomentSet::excluding(MomentId::m6) : MomentSet::all();
    }

    /// Propagates `runs` / `converge_runs` into the scenario tables.
    void sync_runs() {
        for (auto& s : scenarios) s.runs = runs;
        for (auto& s : converge_scenarios) s.runs = converge_runs;
    }

    [[nodiscard]] Range sensitivity_range(std::size_t param) const {
        if (param < sensitivity_ranges.size() && sensitivity_ranges[param]) return *sensitivity_ranges[param];
        return default_sensitivity_range(model, param);
    }

    [[nodiscard]] std::vector<std::size_t> sensitivity_indices() const {
        std::vector<std::size_t> idx;
        if (sensitivity_params.empty()) {
            for (std::size_t i = 0; i < param_count(model); ++i) idx.push_back(i);
        } else {
            for (const auto& n : sensitivity_params) idx.push_back(param_index(model, n));
        }
        return idx;
    }

    [[nodiscard]] SurfaceSpec surface_spec() const {
        SurfaceSpec s;
        s.fixed = truth;
        s.free_x = param_index(model, surface_x);
        s.free_y = param_index(model, surface_y);
        const Range rx = surface_x_range.value_or(default_surface_range(model, s.free_x));
        const Range ry = surface_y_range.value_or(default_surface_range(model, s.free_y));
        s.x_lo = rx.lo;
        s.x_hi = rx.hi;
        s.y_lo = ry.lo;
        s.y_hi = ry.hi;
        s.grid_n = surface_grid;
        return s;
    }

    /// One "key = value" line per setting that can change numeric output.
    [[nodiscard]] std::string canonical() const {
        std::ostringstream o;
        auto list = [](const auto& v) {
            std::string s;
            for (const auto& x : v) {
                if (!s.empty()) s += ',';
                if constexpr (std::is_arithmetic_v<std::decay_t<decltype(x)>>)
                    s += std::to_string(x);
                else
                    s += x;
            }
            return s;
        };
        o << "model=" << to_string(model) << "\nseed=" << seed << "\nscale=" << to_string(scale)
          << "\nexclude_m6=" << exclude_m6 << "\nboundary=" << (boundary == BoundaryMode::clamp ? "clamp" : "reflect")
          << "\ntruth=";
        for (double v : truth.values) o << format_double(v) << ";";
        o << "\nsimulate_t=" << simulate_t << "\ntrue_t_list=" << list(true_t_list) << "\ntrue_runs=" << true_runs
          << "\nweighting=" << weighting_t << "x" << weighting_r << "\ncandidates=" << candidates << "\nruns=" << runs
          << "\nemp_t=" << emp_t << "\nscenarios=";
        for (const auto& s : scenarios) o << s.label << ":" << s.t_len << "x" << s.ensemble << ";";
        o << "\nsensitivity=" << list(sensitivity_params) << "|" << sensitivity_points << "|" << sensitivity_t << "x"
          << sensitivity_n << "x" << sensitivity_r << "|";
        for (const auto& r : sensitivity_ranges)
            o << (r ? format_double(r->lo) + ":" + format_double(r->hi) : std::string("default")) << ";";
        o << "\nconverge=" << converge_runs << "|" << converge_true_t << "x" << converge_true_r << "|";
        for (const auto& s : converge_scenarios) o << s.label << ":" << s.t_len << "x" << s.ensemble << ";";
        auto range = [](const std::optional<Range>& r) {
            return r ? format_double(r->lo) + ":" + format_double(r->hi) : std::string("default");
        };
        o << "\nsurface=" << surface_x << "," << surface_y << "|" << range(surface_x_range) << "|"
          << range(surface_y_range) << "|" << surface_grid << "|" << surface_t << "x" << surface_n << "|crn=" << surface_crn
          << "\nrobustness=" << sets_per_size << "|" << (fitness == FitnessMode::relative ? "relative" : "raw") << "|"
          << list(fitness_scenarios) << "\nwiener=" << wiener_t << "x" << wiener_paths << "\n";
        return o.str();
    }

    [[nodiscard]] std::string hash() const { return hex64(fnv1a64(canonical())); }
};

namespace detail {

[[nodiscard]] inline std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

/// Removes surrounding quotes and list brackets.
[[nodiscard]] inline std::string unquote(std::string_view s) {
    std::string t = trim(s);
    if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) t = t.substr(1, t.size() - 2);
    return t;
}

[[nodiscard]] inline std::vector<std::string> split_list(std::string_view s) {
    std::string t = trim(s);
    if (t.size() >= 2 && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= t.size()) {
        std::size_t end = t.find(',', pos);
        if (end == std::string::npos) end = t.size();
        std::string item = unquote(std::string_view(t).substr(pos, end - pos));
        if (!item.empty()) out.push_back(std::move(item));
        pos = end + 1;
    }
    return out;
}

[[nodiscard]] inline std::uint64_t parse_u64(const std::string& field, std::string_view s) {
    std::string t = unquote(s);
    // allow scientific shorthand such as 1e6 for sizes
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec == std::errc{} && end == t.data() + t.size()) return v;
    double d = 0.0;
    auto [end2, ec2] = std::from_chars(t.data(), t.data() + t.size(), d);
    if (ec2 == std::errc{} && end2 == t.data() + t.size() && d >= 0.0 && d < 1.8e19 && d == std::floor(d))
        return static_cast<std::uint64_t>(d);
    throw ConfigError(field, "expected a nonnegative integer, got '" + t + "'");
}

[[nodiscard]] inline std::size_t parse_size(const std::string& field, std::string_view s) {
    return static_cast<std::size_t>(parse_u64(field, s));
}

[[nodiscard]] inline double parse_real(const std::string& field, std::string_view s) {
    const std::string t = unquote(s);
    double v = 0.0;
    auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || end != t.data() + t.size() || !std::isfinite(v))
        throw ConfigError(field, "expected a real number, got '" + t + "'");
    return v;
}

[[nodiscard]] inline bool parse_bool(const std::string& field, std::string_view s) {
    const std::string t = unquote(s);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(field, "expected true or false, got '" + t + "'");
}

[[nodiscard]] inline Range parse_range(const std::string& field, std::string_view s, double scale) {
    const auto parts = split_list(s);
    if (parts.size() != 2) throw ConfigError(field, "expected 'lo, hi'");
    Range r{parse_real(field, parts[0]) / scale, parse_real(field, parts[1]) / scale};
    if (!(r.lo < r.hi)) throw ConfigError(field, "range needs lo < hi");
    return r;
}

}  // namespace detail

/// Command-line values that replace config-file settings when present.
struct ConfigOverrides {
    std::optional<std::string> model;
    std::optional<std::string> scale;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> t;
    std::optional<std::size_t> n;
    std::optional<std::size_t> r;
    std::optional<std::size_t> grid;
    std::optional<std::string> free;
    std::optional<std::size_t> candidates;
    bool exclude_m6 = false;
};

/**
 * @brief Builds the effective configuration for `subcommand`.
 *
 * `text` is the INI-style config ("key = value" lines under [section]
 * headers, '#' or ';' comments); it may be empty.
 */
[[nodiscard]] inline ExperimentConfig resolve_config(const std::string& subcommand, const std::string& text,
                                                     const ConfigOverrides& ov) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    if (!text.empty()) {
        std::istringstream in(text);
        try {
            pt::read_ini(in, tree);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError("line " + std::to_string(e.line()), e.message());
        }
    }
    auto find = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
        auto sec = tree.get_child_optional(pt::ptree::path_type(section, '\0'));
        if (!sec) return std::nullopt;
        auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return *v;
    };

    ModelId model = ModelId::alw;
    if (ov.model) {
        try {
            model = parse_model(*ov.model);
        } catch (const ParameterDomainError& e) {
            throw ConfigError("model", e.what());
        }
    } else if (auto v = find("experiment", "model")) {
        try {
            model = parse_model(detail::unquote(*v));
        } catch (const ParameterDomainError& e) {
            throw ConfigError("experiment.model", e.what());
        }
    }
    Scale scale = Scale::desk;
    if (ov.scale)
        scale = parse_scale(*ov.scale);
    else if (auto v = find("experiment", "scale"))
        scale = parse_scale(detail::unquote(*v));

    ExperimentConfig c = ExperimentConfig::defaults(model, scale);
    const double dscale = display_scale(model);

    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) throw ConfigError(section, "key outside of a section");
        for (const auto& [key, node] : body) {
            const std::string field = section + "." + key;
            const std::string val = node.data();
            if (section == "experiment") {
                if (key == "model" || key == "scale") continue;
                if (key == "seed") c.seed = detail::parse_u64(field, val);
                else if (key == "workers") c.workers = detail::parse_size(field, val);
                else if (key == "exclude_m6") c.exclude_m6 = detail::parse_bool(field, val);
                else if (key == "boundary") {
                    const auto b = detail::unquote(val);
                    if (b == "clamp") c.boundary = BoundaryMode::clamp;
                    else if (b == "reflect") c.boundary = BoundaryMode::reflect;
                    else throw ConfigError(field, "expected clamp or reflect");
                } else throw ConfigError(field, "unknown key");
            } else if (section == "params") {
                std::size_t idx = 0;
                try {
                    idx = param_index(model, key);
                } catch (const ParameterDomainError& e) {
                    throw ConfigError(field, e.what());
                }
                c.truth.values[idx] = detail::parse_real(field, val) / dscale;
            } else if (section == "simulate") {
                if (key == "t") c.simulate_t = detail::parse_size(field, val);
                else throw ConfigError(field, "unknown key");
            } else if (section == "true_moments") {
                if (key == "t_list") {
                    c.true_t_list.clear();
                    for (const auto& item : detail::split_list(val)) c.true_t_list.push_back(detail::parse_size(field, item));
                } else if (key == "runs") c.true_runs = detail::parse_size(field, val);
                else throw ConfigError(field, "unknown key");
            } else if (section == "weighting") {
                if (key == "t") c.weighting_t = detail::parse_size(field, val);
                else if (key == "r") c.weighting_r = detail::parse_size(field, val);
                else throw ConfigError(field, "unknown key");
            } else if (section == "estimate") {
                if (key == "candidates") c.candidates = detail::parse_size(field, val);
                else if (key == "runs") c.runs = detail::parse_size(field, val);
                else if (key == "emp_t") c.emp_t = detail::parse_size(field, val);
                else if (key == "scenarios") {
                    c.scenarios.clear();
                    for (const auto& label : detail::split_list(val)) {
                        auto custom = tree.get_child_optional(pt::ptree::path_type("scenario:" + label, '\0'));
                        if (custom) {
                            ScenarioConfig s{label, 0, 1, c.runs};
                            for (const auto& [k2, n2] : *custom) {
                                const std::string f2 = "scenario:" + label + "." + k2;
                                if (k2 == "t") s.t_len = detail::parse_size(f2, n2.data());
                                else if (k2 == "n") s.ensemble = detail::parse_size(f2, n2.data());
                                else throw ConfigError(f2, "unknown key");
                            }
                            c.scenarios.push_back(s);
                        } else {
                            try {
                                c.scenarios.push_back(ScenarioConfig::from_table(label, c.runs));
                            } catch (const ParameterDomainError& e) {
                                throw ConfigError(field, e.what());
                            }
                        }
                    }
                } else throw ConfigError(field, "unknown key");
            } else if (section.rfind("scenario:", 0) == 0) {
                continue;  // consumed through estimate.scenarios
            } else if (section == "sensitivity") {
                if (key == "params") c.sensitivity_params = detail::split_list(val);
                else if (key == "points") c.sensitivity_points = detail::parse_size(field, val);
                else if (key == "t") c.sensitivity_t = detail::parse_size(field, val);
                else if (key == "n") c.sensitivity_n = detail::parse_size(field, val);
                else if (key == "r") c.sensitivity_r = detail::parse_size(field, val);
                else if (key.size() > 6 && key.rfind("range_", 0) == 0) {
                    std::size_t idx = 0;
                    try {
                        idx = param_index(model, key.substr(6));
                    } catch (const ParameterDomainError& e) {
                        throw ConfigError(field, e.what());
                    }
                    c.sensitivity_ranges[idx] = detail::parse_range(field, val, dscale);
                } else throw ConfigError(field, "unknown key");
            } else if (section == "convergence") {
                if (key == "runs") c.converge_runs = detail::parse_size(field, val);
                else if (key == "true_t") c.converge_true_t = detail::parse_size(field, val);
                else if (key == "true_r") c.converge_true_r = detail::parse_size(field, val);
                else if (key == "long_t") c.converge_scenarios[0].t_len = detail::parse_size(field, val);
                else if (key == "ensemble_t") c.converge_scenarios[1].t_len = detail::parse_size(field, val);
                else if (key == "ensemble_n") c.converge_scenarios[1].ensemble = detail::parse_size(field, val);
                else throw ConfigError(field, "unknown key");
            } else if (section == "surface") {
                if (key == "free") {
                    const auto f = detail::split_list(val);
                    if (f.size() != 2) throw ConfigError(field, "expected two parameter names");
                    c.surface_x = f[0];
                    c.surface_y = f[1];
                } else if (key == "x_range") c.surface_x_range = detail::parse_range(field, val, dscale);
                else if (key == "y_range") c.surface_y_range = detail::parse_range(field, val, dscale);
                else if (key == "grid") c.surface_grid = detail::parse_size(field, val);
                else if (key == "t") c.surface_t = detail::parse_size(field, val);
                else if (key == "n") c.surface_n = detail::parse_size(field, val);
                else if (key == "crn_empirical") c.surface_crn = detail::parse_bool(field, val);
                else throw ConfigError(field, "unknown key");
            } else if (section == "robustness") {
                if (key == "sets_per_size") c.sets_per_size = detail::parse_size(field, val);
                else if (key == "fitness") {
                    const auto f = detail::unquote(val);
                    if (f == "relative") c.fitness = FitnessMode::relative;
                    else if (f == "raw") c.fitness = FitnessMode::raw;
                    else throw ConfigError(field, "expected relative or raw");
                } else if (key == "scenarios") c.fitness_scenarios = detail::split_list(val);
                else throw ConfigError(field, "unknown key");
            } else if (section == "wiener") {
                if (key == "t") c.wiener_t = detail::parse_size(field, val);
                else if (key == "paths") c.wiener_paths = detail::parse_size(field, val);
                else throw ConfigError(field, "unknown key");
            } else {
                throw ConfigError(section, "unknown section");
            }
        }
    }

    if (ov.seed) c.seed = *ov.seed;
    if (ov.workers) c.workers = *ov.workers;
    if (ov.exclude_m6) c.exclude_m6 = true;
    if (ov.candidates) c.candidates = *ov.candidates;
    if (ov.free) {
        const auto f = detail::split_list(*ov.free);
        if (subcommand == "surface") {
            if (f.size() != 2) throw ConfigError("free", "surface expects two parameter names");
            c.surface_x = f[0];
            c.surface_y = f[1];
        } else {
            c.sensitivity_params = f;
        }
    }
    if (ov.grid) {
        c.surface_grid = *ov.grid;
        c.sensitivity_points = *ov.grid;
    }
    if (ov.t) {
        if (subcommand == "simulate") c.simulate_t = *ov.t;
        else if (subcommand == "true-moments") c.true_t_list = {*ov.t};
        else if (subcommand == "sensitivity") c.sensitivity_t = *ov.t;
        else if (subcommand == "converge") c.converge_true_t = *ov.t;
        else if (subcommand == "surface") c.surface_t = *ov.t;
        else if (subcommand == "estimate" || subcommand == "robustness") c.emp_t = *ov.t;
        else if (subcommand == "wiener-demo") c.wiener_t = *ov.t;
    }
    if (ov.n) {
        if (subcommand == "sensitivity") c.sensitivity_n = *ov.n;
        else if (subcommand == "surface") c.surface_n = *ov.n;
        else if (subcommand == "wiener-demo") c.wiener_paths = *ov.n;
        else if (subcommand == "converge") c.converge_true_r = *ov.n;
    }
    if (ov.r) {
        if (subcommand == "true-moments") c.true_runs = *ov.r;
        else if (subcommand == "sensitivity") c.sensitivity_r = *ov.r;
        else if (subcommand == "converge") c.converge_runs = *ov.r;
        else if (subcommand == "estimate" || subcommand == "robustness") c.runs = *ov.r;
    }
    c.sync_runs();

    try {
        c.truth.validate();
        // Sections another subcommand reads may name parameters of another model.
        if (subcommand == "surface") (void)c.surface_spec();
        if (subcommand == "sensitivity") (void)c.sensitivity_indices();
    } catch (const ParameterDomainError& e) {
        throw ConfigError("params", e.what());
    }
    return c;
}

[[nodiscard]] inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config", "cannot read '" + path.string() + "'");
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace smmergo
