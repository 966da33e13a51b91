#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlru/engine.hpp"
#include "mlru/io.hpp"

namespace mlru {

/// Config-file error with the offending line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, std::size_t line, const std::string& text)
        : std::runtime_error(message + " (line " + std::to_string(line) + ": '" +
                             text + "')") {}
    explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

/// Experiment plus optional sweep, as read from a config file.
struct RunSpec {
    ExperimentConfig config;
    std::optional<SweepVariable> sweep_variable;
    std::vector<double> sweep_values;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline double to_double(const std::string& value, std::size_t line,
                        const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + value + "'", line, text);
    }
}

inline std::uint64_t to_u64(const std::string& value, std::size_t line,
                            const std::string& text) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected an integer, got '" + value + "'", line, text);
    }
}

inline std::vector<double> to_double_list(const std::string& value, std::size_t line,
                                          const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) values.push_back(to_double(item, line, text));
    }
    if (values.empty()) throw ConfigError("expected a list of numbers", line, text);
    return values;
}

} // namespace detail

inline SweepVariable parse_sweep_variable(const std::string& name) {
    if (name == "rb") return SweepVariable::CoverageRadius;
    if (name == "gamma") return SweepVariable::ZipfExponent;
    if (name == "alpha") return SweepVariable::Alpha;
    if (name == "q") return SweepVariable::InsertProbability;
    throw ConfigError("unknown sweep variable: " + name);
}

inline std::string sweep_variable_name(SweepVariable var) {
    switch (var) {
    case SweepVariable::CoverageRadius: return "rb";
    case SweepVariable::ZipfExponent: return "gamma";
    case SweepVariable::Alpha: return "alpha";
    case SweepVariable::InsertProbability: return "q";
    }
    return "?";
}

/// Apply one `section.key = value` assignment.
inline void apply_config_entry(RunSpec& spec, const std::string& section,
                               const std::string& key, const std::string& value,
                               std::size_t line = 0, const std::string& text = "") {
    using detail::to_double;
    using detail::to_double_list;
    using detail::to_u64;
    ExperimentConfig& c = spec.config;
    const std::string full = section.empty() ? key : section + "." + key;

    if (full == "geometry.kind") {
        if (value == "ppp") c.geometry = FieldKind::Ppp;
        else if (value == "lattice") c.geometry = FieldKind::Lattice;
        else throw ConfigError("geometry.kind must be ppp or lattice", line, text);
    } else if (full == "geometry.lambda_b") c.station_intensity = to_double(value, line, text);
    else if (full == "geometry.rb") c.coverage_radius = to_double(value, line, text);
    else if (full == "geometry.width") c.window_width = to_double(value, line, text);
    else if (full == "geometry.height") c.window_height = to_double(value, line, text);
    else if (full == "geometry.margin") c.margin = to_double(value, line, text);
    else if (full == "geometry.max_coverage") c.max_coverage = to_u64(value, line, text);
    else if (full == "traffic.kind") {
        if (value == "irm") c.traffic = TrafficKind::Irm;
        else if (value == "temporal") c.traffic = TrafficKind::Temporal;
        else throw ConfigError("traffic.kind must be irm or temporal", line, text);
    } else if (full == "traffic.lambda_u") c.request_intensity = to_double(value, line, text);
    else if (full == "traffic.duration") c.duration = to_double(value, line, text);
    else if (full == "traffic.target_requests") c.target_requests = to_double(value, line, text);
    else if (full == "traffic.f") c.catalogue_size = to_u64(value, line, text);
    else if (full == "traffic.gamma") c.zipf_exponent = to_double(value, line, text);
    else if (full == "traffic.object_rate") c.temporal.object_rate = to_double(value, line, text);
    else if (full == "traffic.mean_lifespan") c.temporal.mean_lifespan = to_double(value, line, text);
    else if (full == "traffic.total_request_rate") c.temporal.request_rate = to_double(value, line, text);
    else if (full == "traffic.temporal_duration") c.temporal.duration = to_double(value, line, text);
    else if (full == "traffic.pulse_decay") c.temporal.pulse_decay = to_double(value, line, text);
    else if (full == "traffic.temporal_width") c.temporal.window.width = to_double(value, line, text);
    else if (full == "traffic.temporal_height") c.temporal.window.height = to_double(value, line, text);
    else if (full == "policy.kind") c.policy = parse_policy(value, c.policy.insert_probability);
    else if (full == "policy.q") c.policy.insert_probability = to_double(value, line, text);
    else if (full == "policy.k") c.cache_capacity = to_u64(value, line, text);
    else if (full == "policy.alpha") c.alpha = to_double(value, line, text);
    else if (full == "policy.gfi_probe_points") c.gfi_probe_points = to_u64(value, line, text);
    else if (full == "run.replications") c.replications = to_u64(value, line, text);
    else if (full == "run.seed") c.base_seed = to_u64(value, line, text);
    else if (full == "run.warmup_fraction") c.warmup_fraction = to_double(value, line, text);
    else if (full == "run.threads") c.threads = to_u64(value, line, text);
    else if (full == "run.mc_profile_samples") c.mc_profile_samples = to_u64(value, line, text);
    else if (full == "sweep.variable") spec.sweep_variable = parse_sweep_variable(value);
    else if (full == "sweep.values") spec.sweep_values = to_double_list(value, line, text);
    else throw ConfigError("unknown config key: " + full, line, text);
}

/// Flat key-value config with [section] headers and '#' comments.
inline RunSpec parse_run_spec(std::istream& in) {
    RunSpec spec;
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("unterminated section header", line_no, raw);
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value", line_no, raw);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("expected key = value", line_no, raw);
        apply_config_entry(spec, section, key, value, line_no, raw);
    }
    if (spec.sweep_variable.has_value() != !spec.sweep_values.empty())
        throw ConfigError("sweep.variable and sweep.values must be set together");
    return spec;
}

inline RunSpec load_run_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_run_spec(in);
}

/// Config echo for manifests: every effective knob in one flat object.
inline nlohmann::json config_echo(const RunSpec& spec) {
    const ExperimentConfig& c = spec.config;
    nlohmann::json j{
        {"geometry",
         {{"kind", c.geometry == FieldKind::Ppp ? "ppp" : "lattice"},
          {"lambda_b", c.station_intensity},
          {"rb", c.coverage_radius},
          {"width", c.window_width},
          {"height", c.window_height},
          {"margin", c.effective_margin()},
          {"max_coverage", c.max_coverage}}},
        {"traffic",
         {{"kind", c.traffic == TrafficKind::Irm ? "irm" : "temporal"},
          {"lambda_u", c.request_intensity},
          {"duration", c.effective_duration()},
          {"f", c.catalogue_size},
          {"gamma", c.zipf_exponent}}},
        {"policy",
         {{"kind", policy_name(c.policy)},
          {"q", c.policy.insert_probability},
          {"k", c.effective_capacity()}}},
        {"run",
         {{"replications", c.replications},
          {"seed", c.base_seed},
          {"warmup_fraction", c.warmup_fraction}}},
    };
    if (c.traffic == TrafficKind::Temporal) {
        j["traffic"]["object_rate"] = c.temporal.object_rate;
        j["traffic"]["mean_lifespan"] = c.temporal.mean_lifespan;
        j["traffic"]["total_request_rate"] = c.temporal.request_rate;
        j["traffic"]["temporal_width"] = c.temporal.window.width;
        j["traffic"]["temporal_height"] = c.temporal.window.height;
    }
    if (spec.sweep_variable) {
        j["sweep"] = {{"variable", sweep_variable_name(*spec.sweep_variable)},
                      {"values", spec.sweep_values}};
    }
    return j;
}

} // namespace mlru
