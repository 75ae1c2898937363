#include "msf/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "msf/errors.hpp"

namespace msf {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* first = value.data();
    const char* last = first + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last || !std::isfinite(out)) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
    }
    return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError("config: '" + key + "' expects true/false, got '" + value + "'");
}

std::string format_states(const std::vector<RobotState>& states) {
    std::string out;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (i) out += "; ";
        out += format_double(states[i].x) + " " + format_double(states[i].y) + " " +
               format_double(states[i].theta);
    }
    return out;
}

std::vector<RobotState> parse_states(const std::string& key, const std::string& value) {
    std::vector<RobotState> out;
    std::stringstream all(value);
    std::string item;
    while (std::getline(all, item, ';')) {
        item = trim(item);
        if (item.empty()) continue;
        std::stringstream fields(item);
        std::string a, b, c, extra;
        if (!(fields >> a >> b >> c) || (fields >> extra)) {
            throw ConfigError("config: '" + key + "' entries must be 'x y theta', got '" + item + "'");
        }
        out.push_back({parse_double(key, a), parse_double(key, b), parse_double(key, c)});
    }
    return out;
}

struct Field {
    std::function<std::string(const ScenarioConfig&)> get;
    std::function<void(ScenarioConfig&, const std::string& key, const std::string& value)> set;
};

template <typename Member>
Field number(Member member) {
    return {[member](const ScenarioConfig& c) { return format_double(std::invoke(member, c)); },
            [member](ScenarioConfig& c, const std::string& k, const std::string& v) {
                std::invoke(member, c) = parse_double(k, v);
            }};
}

template <typename Member>
Field count(Member member) {
    return {[member](const ScenarioConfig& c) { return std::to_string(std::invoke(member, c)); },
            [member](ScenarioConfig& c, const std::string& k, const std::string& v) {
                using T = std::remove_reference_t<decltype(std::invoke(member, c))>;
                std::invoke(member, c) = static_cast<T>(parse_unsigned(k, v));
            }};
}

Field number_at(std::function<double&(ScenarioConfig&)> ref) {
    return {[ref](const ScenarioConfig& c) { return format_double(ref(const_cast<ScenarioConfig&>(c))); },
            [ref](ScenarioConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_double(k, v); }};
}

Field count_at(std::function<int&(ScenarioConfig&)> ref) {
    return {[ref](const ScenarioConfig& c) { return std::to_string(ref(const_cast<ScenarioConfig&>(c))); },
            [ref](ScenarioConfig& c, const std::string& k, const std::string& v) {
                ref(c) = static_cast<int>(parse_unsigned(k, v));
            }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["fleet_size"] = count(&ScenarioConfig::fleet_size);
        t["duration"] = number(&ScenarioConfig::duration);
        t["dt"] = number(&ScenarioConfig::dt);
        t["filter_dt"] = number(&ScenarioConfig::filter_dt);
        t["filter_horizon"] = count(&ScenarioConfig::filter_horizon);
        t["filter_enabled"] = {[](const ScenarioConfig& c) { return std::string(c.filter_enabled ? "true" : "false"); },
                               [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                                   c.filter_enabled = parse_bool(k, v);
                               }};
        t["pass_tol"] = number(&ScenarioConfig::pass_tol);
        t["seed"] = count(&ScenarioConfig::seed);

        t["constraints.delta_a"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.delta_a; });
        t["constraints.delta_w"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.delta_w; });
        t["constraints.v_min"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.v_bounds.lo; });
        t["constraints.v_max"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.v_bounds.hi; });
        t["constraints.omega_min"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.omega_bounds.lo; });
        t["constraints.omega_max"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.omega_bounds.hi; });
        t["constraints.x_min"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.arena.x_min; });
        t["constraints.x_max"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.arena.x_max; });
        t["constraints.y_min"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.arena.y_min; });
        t["constraints.y_max"] = number_at([](ScenarioConfig& c) -> double& { return c.constraints.arena.y_max; });

        t["reference.r0"] = number_at([](ScenarioConfig& c) -> double& { return c.reference.r0; });
        t["reference.w0"] = number_at([](ScenarioConfig& c) -> double& { return c.reference.w0; });

        t["tracker.horizon"] = {[](const ScenarioConfig& c) { return std::to_string(c.tracker.horizon); },
                                [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                                    c.tracker.horizon = parse_unsigned(k, v);
                                }};
        t["tracker.position_weight"] = number_at([](ScenarioConfig& c) -> double& { return c.tracker.position_weight; });
        t["tracker.input_weight"] = number_at([](ScenarioConfig& c) -> double& { return c.tracker.input_weight; });
        t["tracker.collision_weight"] = number_at([](ScenarioConfig& c) -> double& { return c.tracker.collision_weight; });
        t["tracker.collision_margin"] = number_at([](ScenarioConfig& c) -> double& { return c.tracker.collision_margin; });
        t["tracker.dt"] = number_at([](ScenarioConfig& c) -> double& { return c.tracker.dt; });
        t["tracker.max_iterations"] = count_at([](ScenarioConfig& c) -> int& { return c.tracker.solver.max_inner_iterations; });

        t["attack.kind"] = {[](const ScenarioConfig& c) { return std::string(to_string(c.attack.kind)); },
                            [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                                try {
                                    c.attack.kind = parse_attack_kind(v);
                                } catch (const InvalidArgument& e) {
                                    throw ConfigError("config: '" + k + "': " + e.what());
                                }
                            }};
        t["attack.t_start"] = number_at([](ScenarioConfig& c) -> double& { return c.attack.t_start; });
        t["attack.t_end"] = number_at([](ScenarioConfig& c) -> double& { return c.attack.t_end; });
        t["attack.fdi_gain"] = number_at([](ScenarioConfig& c) -> double& { return c.attack.fdi.gain; });
        t["attack.fdi_offset_v"] = number_at([](ScenarioConfig& c) -> double& { return c.attack.fdi.offset.v; });
        t["attack.fdi_offset_omega"] = number_at([](ScenarioConfig& c) -> double& { return c.attack.fdi.offset.omega; });
        t["attack.target_x"] = number_at([](ScenarioConfig& c) -> double& { return c.attack.covert.target.x; });
        t["attack.target_y"] = number_at([](ScenarioConfig& c) -> double& { return c.attack.covert.target.y; });
        t["attack.heading_gain"] = number_at([](ScenarioConfig& c) -> double& { return c.attack.covert.heading_gain; });
        t["attack.creep_speed"] = number_at([](ScenarioConfig& c) -> double& { return c.attack.covert.creep_speed; });

        t["solver.feas_tol"] = number_at([](ScenarioConfig& c) -> double& { return c.solver.feas_tol; });
        t["solver.stat_tol"] = number_at([](ScenarioConfig& c) -> double& { return c.solver.stat_tol; });
        t["solver.max_outer_iterations"] = count_at([](ScenarioConfig& c) -> int& { return c.solver.max_outer_iterations; });
        t["solver.max_inner_iterations"] = count_at([](ScenarioConfig& c) -> int& { return c.solver.max_inner_iterations; });
        t["solver.initial_penalty"] = number_at([](ScenarioConfig& c) -> double& { return c.solver.initial_penalty; });
        t["solver.penalty_growth"] = number_at([](ScenarioConfig& c) -> double& { return c.solver.penalty_growth; });

        t["detector.epsilon"] = number(&ScenarioConfig::detector_epsilon);
        t["detector.norm"] = {[](const ScenarioConfig& c) { return std::string(to_string(c.detector_norm)); },
                              [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                                  try {
                                      c.detector_norm = parse_residual_norm(v);
                                  } catch (const InvalidArgument& e) {
                                      throw ConfigError("config: '" + k + "': " + e.what());
                                  }
                              }};

        t["initial.ring_radius"] = number_at([](ScenarioConfig& c) -> double& { return c.initial.ring_radius; });
        t["initial.jitter"] = number_at([](ScenarioConfig& c) -> double& { return c.initial.jitter; });
        t["initial.states"] = {[](const ScenarioConfig& c) { return format_states(c.initial.states); },
                               [](ScenarioConfig& c, const std::string& k, const std::string& v) {
                                   c.initial.states = parse_states(k, v);
                               }};
        return t;
    }();
    return table;
}

}  // namespace

std::size_t ScenarioConfig::steps() const {
    return static_cast<std::size_t>(std::llround(duration / dt));
}

void ScenarioConfig::validate() const {
    try {
        if (fleet_size < 1) throw ConfigError("config: fleet_size must be >= 1");
        if (!(dt > 0.0) || !(duration > 0.0)) throw ConfigError("config: dt and duration must be positive");
        const double ratio = duration / dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
            throw ConfigError("config: duration must be an integer number of dt steps");
        }
        if (filter_horizon < 1) throw ConfigError("config: filter_horizon must be >= 1");
        if (!(filter_dt > 0.0)) throw ConfigError("config: filter_dt must be positive");
        if (!(detector_epsilon > 0.0)) throw ConfigError("config: detector.epsilon must be positive");
        if (!initial.states.empty() && initial.states.size() != fleet_size) {
            throw ConfigError("config: initial.states lists " + std::to_string(initial.states.size()) +
                              " agents but fleet_size is " + std::to_string(fleet_size));
        }
        if (initial.jitter < 0.0 || !(initial.ring_radius > 0.0)) {
            throw ConfigError("config: initial.ring_radius must be positive and jitter non-negative");
        }
        constraints.validate();
        ReferenceSpec ref = reference;
        ref.fleet_size = fleet_size;
        ref.validate();
        tracker.validate();
        attack.validate(duration);
        solver.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::map<std::string, std::string> to_key_values(const ScenarioConfig& cfg) {
    std::map<std::string, std::string> out;
    for (const auto& [key, field] : fields()) out[key] = field.get(cfg);
    return out;
}

ScenarioConfig from_key_values(const std::map<std::string, std::string>& kv, ScenarioConfig base) {
    const auto& table = fields();
    for (const auto& [key, value] : kv) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError("config: unknown key '" + key + "'");
        it->second.set(base, key, trim(value));
    }
    if (kv.count("dt")) {
        if (!kv.count("filter_dt")) base.filter_dt = base.dt;
        if (!kv.count("tracker.dt")) base.tracker.dt = base.dt;
    }
    if (kv.count("constraints.v_max") && !kv.count("attack.fdi_offset_v")) {
        base.attack.fdi.offset.v = base.constraints.v_bounds.hi;
    }
    base.reference.fleet_size = base.fleet_size;
    return base;
}

ScenarioConfig parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (kv.count(key)) {
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        kv[key] = trim(line.substr(eq + 1));
    }
    return from_key_values(kv);
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

FleetState initial_state(const ScenarioConfig& cfg) {
    if (!cfg.initial.states.empty()) return FleetState(cfg.initial.states);
    const std::size_t n = cfg.fleet_size;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(-cfg.initial.jitter, cfg.initial.jitter);
    FleetState x;
    x.agents.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        RobotState s{cfg.initial.ring_radius * std::sin(phase), cfg.initial.ring_radius * std::cos(phase), -phase};
        if (cfg.initial.jitter > 0.0) {
            s.x += jitter(rng);
            s.y += jitter(rng);
        }
        x.agents.push_back(s);
    }
    return x;
}

}  // namespace msf
