#include "msf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "msf/errors.hpp"

namespace msf {

using nlohmann::json;

double tracking_error(const FleetState& x, double t, const ReferenceSpec& ref) {
    if (x.size() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Point r = reference(t, i, ref);
        sum += std::hypot(x.agents[i].x - r.x, x.agents[i].y - r.y);
    }
    return sum / static_cast<double>(x.size());
}

SimLog run_scenario(const ScenarioConfig& cfg_in, const RunOptions& opts) {
    ScenarioConfig cfg = cfg_in;
    cfg.reference.fleet_size = cfg.fleet_size;
    cfg.validate();

    SimLog log;
    log.config = cfg;
    FleetState x = initial_state(cfg);
    const ConstraintSet& c = cfg.constraints;
    if (!(min_pairwise_distance(x) > c.delta_a) || !(min_wall_clearance(x, c) > c.delta_w)) {
        throw InitialInfeasibility("initial state is not strictly admissible (min distance " +
                                   std::to_string(min_pairwise_distance(x)) + ", min wall clearance " +
                                   std::to_string(min_wall_clearance(x, c)) + ")");
    }

    TrackingController tracker(cfg.tracker, cfg.reference, c);
    Adversary adversary(cfg.attack, c, cfg.dt);
    AnomalyDetector detector(cfg.dt, cfg.detector_epsilon, cfg.detector_norm);
    FilterConfig fcfg;
    fcfg.horizon = cfg.filter_horizon;
    fcfg.dt = cfg.filter_dt;
    fcfg.constraints = c;
    fcfg.solver = cfg.solver;
    fcfg.pass_tol = cfg.pass_tol;
    std::optional<SafetyFilter> filter;
    if (cfg.filter_enabled) filter.emplace(fcfg);

    const std::size_t steps = cfg.steps();
    log.records.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        StepRecord rec;
        rec.step = static_cast<long>(k);
        rec.t = t;
        rec.x_true = x;

        rec.x_a = adversary.sense(t, x);
        rec.u_c = tracker.command(rec.x_a, t);
        if (const auto& r = tracker.last_result()) rec.tracker_iterations = r->inner_iterations;
        rec.u_a = adversary.actuate(t, rec.u_c, x);

        if (filter) {
            FilterOutcome out = filter->step(x, rec.u_a);
            rec.u_s = out.u_s;
            rec.mode = out.mode;
            rec.intervention = out.intervention;
            rec.agent_intervention = std::move(out.agent_intervention);
            if (out.solver) {
                rec.solver_status = std::string(to_string(out.solver->status));
                rec.solver_iterations = out.solver->inner_iterations;
            }
            if (opts.keep_backups) log.backups.push_back(std::move(out.backup));
        } else {
            rec.u_s = rec.u_a;
            rec.agent_intervention.assign(x.size(), 0.0);
        }

        FleetState next = step_fleet(x, rec.u_s, cfg.dt);

        rec.alarm = detector.detect(rec.x_a);
        rec.residual = detector.last_residual();
        detector.record_command(rec.u_c);

        rec.min_pairwise = min_pairwise_distance(x);
        rec.min_wall = min_wall_clearance(x, c);
        rec.tracking_error = tracking_error(x, t, cfg.reference);
        log.records.push_back(std::move(rec));

        if (!is_finite(next)) {
            throw RuntimeAbort("non-finite plant state after step " + std::to_string(k), static_cast<long>(k));
        }
        x = std::move(next);
    }
    log.final_state = x;
    log.fallback_count = filter ? filter->fallback_count() : 0;
    return log;
}

MetricsSummary summarize(const SimLog& log) {
    if (log.records.empty()) throw InvalidArgument("summarize: empty log");
    const ScenarioConfig& cfg = log.config;
    MetricsSummary m;
    m.min_pairwise = std::numeric_limits<double>::infinity();
    m.min_wall = std::numeric_limits<double>::infinity();
    m.fallback_count = log.fallback_count;

    std::optional<TimeSpan> open;
    for (const auto& r : log.records) {
        m.min_pairwise = std::min(m.min_pairwise, r.min_pairwise);
        m.min_wall = std::min(m.min_wall, r.min_wall);
        m.max_intervention = std::max(m.max_intervention, r.intervention);
        if (r.alarm) {
            ++m.alarm_count;
            if (!m.first_alarm_time) m.first_alarm_time = r.t;
        }
        if (r.mode == FilterMode::Modified) ++m.modified_steps;
        if (!m.first_agent_intervention && !r.agent_intervention.empty() &&
            r.agent_intervention.front() > cfg.pass_tol) {
            m.first_agent_intervention = r.t;
        }
        if (r.intervention > cfg.pass_tol) {
            if (open) {
                open->end = r.t;
            } else {
                open = TimeSpan{r.t, r.t};
            }
        } else if (open) {
            m.intervention_intervals.push_back(*open);
            open.reset();
        }
    }
    if (open) m.intervention_intervals.push_back(*open);
    m.final_tracking_error = log.records.back().tracking_error;

    if (cfg.attack.kind != AttackKind::None) {
        double sum = 0.0;
        int count = 0;
        for (const auto& r : log.records) {
            if (r.t >= cfg.attack.t_start - 1.0 - 1e-9 && r.t < cfg.attack.t_start - 1e-9) {
                sum += r.tracking_error;
                ++count;
            }
        }
        if (count > 0) {
            m.baseline_tracking_error = sum / count;
            const double band = 1.1 * *m.baseline_tracking_error;
            std::optional<double> since;
            for (const auto& r : log.records) {
                if (r.t < cfg.attack.t_end - 1e-9) continue;
                if (r.tracking_error <= band) {
                    if (!since) since = r.t;
                } else {
                    since.reset();
                }
            }
            m.recovery_time = since;
        }
    }
    return m;
}

std::vector<std::string> csv_header(std::size_t agents) {
    std::vector<std::string> h{"t"};
    for (std::size_t i = 1; i <= agents; ++i) {
        const std::string s = std::to_string(i);
        for (const char* name : {"x_", "y_", "theta_", "v_c_", "omega_c_", "v_s_", "omega_s_"}) {
            h.push_back(name + s);
        }
    }
    for (const char* name : {"intervention", "a", "min_d", "min_wall", "mode", "solver_status"}) h.emplace_back(name);
    return h;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string mode_name(const std::optional<FilterMode>& m) {
    return m ? std::string(to_string(*m)) : std::string("off");
}

std::optional<FilterMode> parse_mode(const std::string& s) {
    if (s == "pass-through") return FilterMode::PassThrough;
    if (s == "modified") return FilterMode::Modified;
    if (s == "fallback") return FilterMode::Fallback;
    if (s == "off") return std::nullopt;
    throw InvalidArgument("unknown filter mode '" + s + "'");
}

json states_json(const FleetState& x) {
    json a = json::array();
    for (const auto& s : x.agents) a.push_back({s.x, s.y, s.theta});
    return a;
}

json inputs_json(const FleetInput& u) {
    json a = json::array();
    for (const auto& s : u.agents) a.push_back({s.v, s.omega});
    return a;
}

FleetState states_from(const json& j) {
    FleetState x;
    for (const auto& s : j) x.agents.push_back({s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()});
    return x;
}

FleetInput inputs_from(const json& j) {
    FleetInput u;
    for (const auto& s : j) u.agents.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    return u;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void write_csv(const SimLog& log, std::ostream& out) {
    const std::size_t n = log.config.fleet_size;
    const auto header = csv_header(n);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& r : log.records) {
        out << num(r.t);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = r.x_true.agents[i];
            const auto& uc = r.u_c.agents[i];
            const auto& us = r.u_s.agents[i];
            out << ',' << num(s.x) << ',' << num(s.y) << ',' << num(s.theta) << ',' << num(uc.v) << ','
                << num(uc.omega) << ',' << num(us.v) << ',' << num(us.omega);
        }
        out << ',' << num(r.intervention) << ',' << r.alarm << ',' << num(r.min_pairwise) << ','
            << num(r.min_wall) << ',' << mode_name(r.mode) << ',' << r.solver_status << '\n';
    }
}

json to_json(const MetricsSummary& m) {
    json spans = json::array();
    for (const auto& s : m.intervention_intervals) spans.push_back({s.start, s.end});
    return {{"min_pairwise", m.min_pairwise},
            {"min_wall", m.min_wall},
            {"max_intervention", m.max_intervention},
            {"intervention_intervals", spans},
            {"first_alarm_time", optional_json(m.first_alarm_time)},
            {"alarm_count", m.alarm_count},
            {"first_agent_intervention", optional_json(m.first_agent_intervention)},
            {"baseline_tracking_error", optional_json(m.baseline_tracking_error)},
            {"recovery_time", optional_json(m.recovery_time)},
            {"final_tracking_error", m.final_tracking_error},
            {"fallback_count", m.fallback_count},
            {"modified_steps", m.modified_steps}};
}

json to_json(const SimLog& log, const MetricsSummary& summary) {
    json records = json::array();
    for (const auto& r : log.records) {
        records.push_back({{"step", r.step},
                           {"t", r.t},
                           {"x_true", states_json(r.x_true)},
                           {"x_a", states_json(r.x_a)},
                           {"u_c", inputs_json(r.u_c)},
                           {"u_a", inputs_json(r.u_a)},
                           {"u_s", inputs_json(r.u_s)},
                           {"mode", mode_name(r.mode)},
                           {"intervention", r.intervention},
                           {"agent_intervention", r.agent_intervention},
                           {"alarm", r.alarm},
                           {"residual", r.residual},
                           {"min_pairwise", r.min_pairwise},
                           {"min_wall", r.min_wall},
                           {"solver_status", r.solver_status},
                           {"solver_iterations", r.solver_iterations},
                           {"tracker_iterations", r.tracker_iterations},
                           {"tracking_error", r.tracking_error}});
    }
    return {{"config", to_key_values(log.config)},
            {"summary", to_json(summary)},
            {"fallback_count", log.fallback_count},
            {"final_state", states_json(log.final_state)},
            {"log", records}};
}

std::filesystem::path export_log(const SimLog& log, const MetricsSummary& summary,
                                 const std::filesystem::path& dir, ExportFormat format) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("export: cannot create '" + dir.string() + "': " + ec.message());

    const auto write = [](const std::filesystem::path& path, const auto& body) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("export: cannot open '" + path.string() + "' for writing");
        body(f);
        f.flush();
        if (!f) throw std::runtime_error("export: write failed for '" + path.string() + "'");
    };

    if (format == ExportFormat::Csv) {
        const auto path = dir / "log.csv";
        write(path, [&](std::ostream& f) { write_csv(log, f); });
        write(dir / "summary.json", [&](std::ostream& f) { f << to_json(summary).dump(2) << '\n'; });
        return path;
    }
    const auto path = dir / "log.json";
    write(path, [&](std::ostream& f) { f << to_json(log, summary).dump() << '\n'; });
    return path;
}

namespace {

SimLog load_json_log(std::istream& in, const std::filesystem::path& path) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("load: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    SimLog log;
    log.config = from_key_values(j.at("config").get<std::map<std::string, std::string>>());
    log.fallback_count = j.at("fallback_count").get<long>();
    log.final_state = states_from(j.at("final_state"));
    for (const auto& r : j.at("log")) {
        StepRecord rec;
        rec.step = r.at("step").get<long>();
        rec.t = r.at("t").get<double>();
        rec.x_true = states_from(r.at("x_true"));
        rec.x_a = states_from(r.at("x_a"));
        rec.u_c = inputs_from(r.at("u_c"));
        rec.u_a = inputs_from(r.at("u_a"));
        rec.u_s = inputs_from(r.at("u_s"));
        rec.mode = parse_mode(r.at("mode").get<std::string>());
        rec.intervention = r.at("intervention").get<double>();
        rec.agent_intervention = r.at("agent_intervention").get<std::vector<double>>();
        rec.alarm = r.at("alarm").get<int>();
        rec.residual = r.at("residual").get<double>();
        rec.min_pairwise = r.at("min_pairwise").get<double>();
        rec.min_wall = r.at("min_wall").get<double>();
        rec.solver_status = r.at("solver_status").get<std::string>();
        rec.solver_iterations = r.at("solver_iterations").get<int>();
        rec.tracker_iterations = r.at("tracker_iterations").get<int>();
        rec.tracking_error = r.at("tracking_error").get<double>();
        log.records.push_back(std::move(rec));
    }
    return log;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

SimLog load_csv_log(std::istream& in, const std::filesystem::path& path,
                    const std::optional<ScenarioConfig>& config) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load: '" + path.string() + "' is empty");
    const auto header = split_csv(line);
    if (header.size() < 7 || (header.size() - 7) % 7 != 0) {
        throw std::runtime_error("load: '" + path.string() + "' has an unexpected CSV header");
    }
    const std::size_t n = (header.size() - 7) / 7;
    SimLog log;
    log.config = config.value_or(ScenarioConfig{});
    log.config.fleet_size = n;
    log.config.reference.fleet_size = n;
    if (header != csv_header(n)) throw std::runtime_error("load: '" + path.string() + "' header mismatch");

    long step = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("load: '" + path.string() + "' row " + std::to_string(step + 2) +
                                     " has " + std::to_string(cells.size()) + " cells");
        }
        StepRecord r;
        r.step = step++;
        std::size_t c = 0;
        r.t = std::stod(cells[c++]);
        r.x_true.agents.resize(n);
        r.u_c.agents.resize(n);
        r.u_s.agents.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            r.x_true.agents[i] = {std::stod(cells[c]), std::stod(cells[c + 1]), std::stod(cells[c + 2])};
            r.u_c.agents[i] = {std::stod(cells[c + 3]), std::stod(cells[c + 4])};
            r.u_s.agents[i] = {std::stod(cells[c + 5]), std::stod(cells[c + 6])};
            c += 7;
        }
        r.intervention = std::stod(cells[c++]);
        r.alarm = std::stoi(cells[c++]);
        r.min_pairwise = std::stod(cells[c++]);
        r.min_wall = std::stod(cells[c++]);
        r.mode = parse_mode(cells[c++]);
        r.solver_status = cells[c++];
        r.tracking_error = tracking_error(r.x_true, r.t, log.config.reference);
        log.records.push_back(std::move(r));
    }
    if (!log.records.empty()) log.final_state = log.records.back().x_true;
    return log;
}

}  // namespace

SimLog load_log(const std::filesystem::path& path, const std::optional<ScenarioConfig>& config) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load: cannot open '" + path.string() + "'");
    if (path.extension() == ".json") return load_json_log(f, path);
    return load_csv_log(f, path, config);
}

}  // namespace msf
