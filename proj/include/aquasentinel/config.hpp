#pragma once

// Key/value experiment configuration in TOML syntax: [section] headers,
// `key = value` pairs, # comments. Only the flat scalar subset is accepted;
// unknown keys are rejected so typos fail loudly.

#include <map>
#include <stdexcept>
#include <string>

#include "aquasentinel/harness.hpp"

namespace aqua {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// "section.key" -> raw value text (quotes stripped).
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> entries;
    std::string section;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) {
            if (pos > text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(line_no) + ": malformed section");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key or value");
        entries[section.empty() ? key : section + "." + key] = value;
        if (pos > text.size()) break;
    }
    return entries;
}

inline void apply_config_entries(ExperimentConfig& cfg, const std::map<std::string, std::string>& entries) {
    for (const auto& [key, value] : entries) {
        auto as_double = [&, v = value]() { return std::stod(v); };
        auto as_long = [&, v = value]() { return std::stol(v); };
        auto as_int = [&, v = value]() { return std::stoi(v); };
        auto as_bool = [&, v = value]() {
            if (v == "true") return true;
            if (v == "false") return false;
            throw std::invalid_argument("config: expected true/false for " + v);
        };
        if (key == "harness.steps") cfg.steps = as_long();
        else if (key == "harness.seed") cfg.seed = static_cast<std::uint64_t>(as_long());
        else if (key == "harness.leak_start_step") cfg.leak_start_step = as_long();
        else if (key == "harness.input_window") cfg.input_window = static_cast<std::size_t>(as_long());
        else if (key == "harness.sparse_mode") cfg.sparse_mode = as_bool();
        else if (key == "harness.scenario_filter") cfg.scenario_filter = value;
        else if (key == "forecasting.experts") {
            cfg.experts.clear();
            std::size_t pos = 0;
            while (pos <= value.size()) {
                std::size_t comma = value.find(',', pos);
                if (comma == std::string::npos) comma = value.size();
                std::string name = detail::trim(value.substr(pos, comma - pos));
                if (!name.empty()) cfg.experts.push_back(name);
                pos = comma + 1;
            }
            if (cfg.experts.empty()) throw std::invalid_argument("config: empty expert list");
            for (const std::string& name : cfg.experts) MixtureForecaster::make_expert(name);  // validate
        }
        else if (key == "demand.amplitude") cfg.demand.diurnal_amplitude = as_double();
        else if (key == "demand.period") cfg.demand.period_steps = as_int();
        else if (key == "demand.noise_std") cfg.demand.noise_std = as_double();
        else if (key == "rtca.window") cfg.rtca.window = as_int();
        else if (key == "rtca.t_persist") cfg.rtca.t_persist = as_int();
        else if (key == "rtca.alpha_ema") cfg.rtca.alpha_ema = as_double();
        else if (key == "rtca.k1") cfg.rtca.k1 = as_double();
        else if (key == "rtca.k2") cfg.rtca.k2 = as_double();
        else if (key == "rtca.epsilon") cfg.rtca.epsilon = as_double();
        else if (key == "rtca.warmup_steps") cfg.rtca.warmup_steps = as_long();
        else if (key == "rtca.channel") {
            if (value == "flow") cfg.rtca.channel = Channel::Flow;
            else if (value == "depth") cfg.rtca.channel = Channel::Depth;
            else if (value == "pressure") cfg.rtca.channel = Channel::Pressure;
            else throw std::invalid_argument("config: unknown channel " + value);
        }
        else if (key == "gate.lambda") cfg.gate.lambda_gate = as_double();
        else if (key == "gate.beta") cfg.gate.ema_beta = as_double();
        else if (key == "augmentation.lambda_smooth") cfg.augmentation.lambda_smooth = as_double();
        else if (key == "augmentation.max_iters") cfg.augmentation.max_iters = as_int();
        else if (key == "augmentation.tol") cfg.augmentation.tol = as_double();
        else if (key == "augmentation.step_size") cfg.augmentation.step_size = as_double();
        else if (key == "placement.alpha") cfg.placement.alpha = as_double();
        else if (key == "placement.beta") cfg.placement.beta = as_double();
        else if (key == "placement.gamma") cfg.placement.gamma = as_double();
        else if (key == "placement.k") cfg.placement.k = as_int();
        else if (key == "placement.d_min") cfg.placement.d_min = as_int();
        else throw std::invalid_argument("config: unknown key " + key);
    }
    if (cfg.rtca.k1 <= 0.0 || cfg.rtca.k2 < cfg.rtca.k1)
        throw std::invalid_argument("config: requires k2 >= k1 > 0");
    if (cfg.steps < cfg.rtca.warmup_steps + cfg.rtca.t_persist)
        throw std::invalid_argument("config: steps must cover warmup plus persistence");
}

inline ExperimentConfig load_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    apply_config_entries(cfg, parse_config_text(text));
    return cfg;
}

}  // namespace aqua
