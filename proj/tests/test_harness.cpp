#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "msf/errors.hpp"
#include "msf/harness.hpp"

using namespace msf;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small(AttackKind kind, double duration = 3.0) {
    ScenarioConfig cfg;
    cfg.fleet_size = 3;
    cfg.duration = duration;
    cfg.tracker.horizon = 8;
    cfg.attack.kind = kind;
    cfg.attack.t_start = 1.0;
    cfg.attack.t_end = 2.0;
    return cfg;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("msf_test_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

StepRecord record(double t, double intervention, int alarm = 0) {
    StepRecord r;
    r.t = t;
    r.intervention = intervention;
    r.agent_intervention = {intervention};
    r.alarm = alarm;
    r.min_pairwise = 1.0;
    r.min_wall = 0.5;
    return r;
}

}  // namespace

TEST_CASE("config text parsing") {
    const auto cfg = parse_config_text(
        "# comment\n"
        "fleet_size = 5\n"
        "dt = 0.01   # trailing comment\n"
        "attack.kind = covert\n"
        "constraints.v_max = 1.5\n"
        "initial.states = 0 0 0; 1 0 0; 0 1 0; -1 0 0; 0 -1 0\n");
    CHECK(cfg.fleet_size == 5);
    CHECK(cfg.dt == 0.01);
    CHECK(cfg.filter_dt == 0.01);
    CHECK(cfg.tracker.dt == 0.01);
    CHECK(cfg.attack.kind == AttackKind::Covert);
    CHECK(cfg.constraints.v_bounds.hi == 1.5);
    CHECK(cfg.attack.fdi.offset.v == 1.5);
    REQUIRE(cfg.initial.states.size() == 5);
    CHECK(cfg.initial.states[3] == RobotState{-1, 0, 0});

    const auto explicit_dt = parse_config_text("dt = 0.01\nfilter_dt = 0.02\n");
    CHECK(explicit_dt.filter_dt == 0.02);

    CHECK_THROWS_AS(parse_config_text("constraints.delta_b = 0.2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("fleet_size = 3\nfleet_size = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("duration = fifteen\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("attack.kind = replay\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/msf.cfg"), ConfigError);
}

TEST_CASE("config validation") {
    ScenarioConfig cfg;
    CHECK(cfg.steps() == 750);
    cfg.duration = 15.01;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.fleet_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.initial.states = {{0, 0, 0}};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.detector_epsilon = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("key-value view round-trips") {
    ScenarioConfig cfg;
    cfg.fleet_size = 7;
    cfg.attack.kind = AttackKind::Fdi;
    cfg.attack.fdi.gain = -0.5;
    cfg.tracker.collision_weight = 12.5;
    cfg.solver.stat_tol = 3e-5;
    cfg.detector_norm = ResidualNorm::PositionOnly;
    cfg.initial.jitter = 0.01;
    cfg.seed = 99;
    const auto kv = to_key_values(cfg);
    CHECK(to_key_values(from_key_values(kv)) == kv);
    CHECK(kv.at("attack.kind") == "fdi");
    CHECK(kv.at("detector.norm") == "position");
}

TEST_CASE("initial placement") {
    ScenarioConfig cfg;
    const FleetState x = initial_state(cfg);
    REQUIRE(x.size() == 20);
    for (const auto& a : x.agents) CHECK(std::hypot(a.x, a.y) == doctest::Approx(1.75));
    CHECK(check_admissible(x, FleetInput::zeros(20), cfg.constraints).state_ok);

    cfg.initial.jitter = 0.02;
    cfg.seed = 4;
    CHECK(initial_state(cfg) == initial_state(cfg));
    auto other = cfg;
    other.seed = 5;
    CHECK_FALSE(initial_state(cfg) == initial_state(other));
}

TEST_CASE("run_scenario log shape") {
    const auto cfg = small(AttackKind::Fdi);
    const SimLog log = run_scenario(cfg, RunOptions{.keep_backups = true});
    REQUIRE(log.records.size() == cfg.steps());
    CHECK(log.backups.size() == cfg.steps());
    for (std::size_t k = 0; k < log.records.size(); ++k) {
        const auto& r = log.records[k];
        CHECK(r.step == static_cast<long>(k));
        CHECK(r.t == doctest::Approx(cfg.dt * static_cast<double>(k)));
        if (k > 0) CHECK(r.t > log.records[k - 1].t);
        REQUIRE(r.mode);
        // State measured at t, then u_s applied.
        const FleetState next = k + 1 < log.records.size() ? log.records[k + 1].x_true : log.final_state;
        CHECK(next == step_fleet(r.x_true, r.u_s, cfg.dt));
        CHECK(r.min_pairwise == min_pairwise_distance(r.x_true));
        // Actuation-only attack: the controller sees the truth.
        CHECK(r.x_a == r.x_true);
    }

    auto off = cfg;
    off.filter_enabled = false;
    const SimLog raw = run_scenario(off);
    for (const auto& r : raw.records) {
        CHECK_FALSE(r.mode);
        CHECK(r.u_s == r.u_a);
    }
}

TEST_CASE("infeasible start aborts") {
    auto cfg = small(AttackKind::None);
    cfg.fleet_size = 2;
    cfg.initial.states = {{0, 0, 0}, {0.1, 0, 0}};
    CHECK_THROWS_AS(run_scenario(cfg), InitialInfeasibility);
}

TEST_CASE("filter sees only the true state and the delivered command") {
    // Replaying the filter on logged (x_true, u_a) reproduces every applied input,
    // so the fabricated state x_a cannot have influenced it.
    const auto cfg = small(AttackKind::Covert);
    const SimLog log = run_scenario(cfg, RunOptions{.keep_backups = true});
    FilterConfig fc;
    fc.horizon = cfg.filter_horizon;
    fc.dt = cfg.filter_dt;
    fc.constraints = cfg.constraints;
    fc.solver = cfg.solver;
    fc.pass_tol = cfg.pass_tol;
    bool differs = false;
    for (std::size_t k = 0; k < log.records.size(); ++k) {
        const auto& r = log.records[k];
        const BackupTrajectory* prev = k > 0 ? &log.backups[k - 1] : nullptr;
        const auto out = filter_step(r.x_true, r.u_a, prev, fc, static_cast<long>(k));
        CHECK(out.u_s == r.u_s);
        differs = differs || !(r.x_a == r.x_true);
    }
    CHECK(differs);
}

TEST_CASE("summarize examples") {
    SimLog quiet;
    quiet.config = small(AttackKind::None);
    for (int k = 0; k < 5; ++k) quiet.records.push_back(record(0.02 * k, 0.0));
    const auto q = summarize(quiet);
    CHECK(q.intervention_intervals.empty());
    CHECK_FALSE(q.first_alarm_time);
    CHECK_FALSE(q.first_agent_intervention);
    CHECK(q.max_intervention == 0.0);

    SimLog busy = quiet;
    busy.records = {record(0.00, 0.0), record(0.02, 0.1), record(0.04, 0.2, 1), record(0.06, 0.0),
                    record(0.08, 0.3, 1)};
    busy.records[1].min_wall = 0.25;
    const auto b = summarize(busy);
    REQUIRE(b.intervention_intervals.size() == 2);
    CHECK(b.intervention_intervals[0].start == 0.02);
    CHECK(b.intervention_intervals[0].end == 0.04);
    CHECK(b.intervention_intervals[1].start == 0.08);
    CHECK(b.intervention_intervals[1].end == 0.08);
    CHECK(b.first_alarm_time == 0.04);
    CHECK(b.alarm_count == 2);
    CHECK(b.first_agent_intervention == 0.02);
    CHECK(b.max_intervention == 0.3);
    CHECK(b.min_wall == 0.25);

    CHECK_THROWS_AS(summarize(SimLog{}), InvalidArgument);
}

TEST_CASE("recovery time and baseline") {
    SimLog log;
    log.config = small(AttackKind::Covert, 3.0);
    for (int k = 0; k < 150; ++k) {
        StepRecord r = record(0.02 * k, 0.0);
        r.tracking_error = r.t < 1.0 ? 0.01 : (r.t < 2.4 ? 0.5 : 0.0105);
        log.records.push_back(r);
    }
    const auto m = summarize(log);
    REQUIRE(m.baseline_tracking_error);
    CHECK(*m.baseline_tracking_error == doctest::Approx(0.01));
    REQUIRE(m.recovery_time);
    CHECK(*m.recovery_time == doctest::Approx(2.4));
}

TEST_CASE("CSV schema") {
    const auto h = csv_header(3);
    const auto count = [&](const std::string& prefix) {
        return std::count_if(h.begin(), h.end(), [&](const std::string& c) { return c.rfind(prefix, 0) == 0; });
    };
    CHECK(count("v_c_") + count("omega_c_") + count("v_s_") + count("omega_s_") == 4 * 3);
    CHECK(h.front() == "t");
    const std::vector<std::string> tail(h.end() - 6, h.end());
    CHECK(tail == std::vector<std::string>{"intervention", "a", "min_d", "min_wall", "mode", "solver_status"});
    CHECK(h.size() == 1 + 7 * 3 + 6);

    const auto cfg = small(AttackKind::Fdi);
    const SimLog log = run_scenario(cfg);
    const fs::path dir = scratch("csv");
    const fs::path file = export_log(log, summarize(log), dir, ExportFormat::Csv);
    CHECK(fs::exists(dir / "summary.json"));
    std::ifstream in(file);
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);
    CHECK(std::count(line.begin(), line.end(), ',') + 1 == static_cast<long>(h.size()));
    while (std::getline(in, line)) ++rows;
    CHECK(rows == static_cast<std::size_t>(std::lround(cfg.duration / cfg.dt)));
}

TEST_CASE("JSON export reloads exactly") {
    const auto cfg = small(AttackKind::Covert);
    const SimLog log = run_scenario(cfg);
    const fs::path dir = scratch("json");
    const fs::path file = export_log(log, summarize(log), dir, ExportFormat::Json);
    const SimLog back = load_log(file);
    REQUIRE(back.records.size() == log.records.size());
    CHECK(to_key_values(back.config) == to_key_values(log.config));
    CHECK(back.final_state == log.final_state);
    CHECK(back.fallback_count == log.fallback_count);
    for (std::size_t k = 0; k < log.records.size(); ++k) {
        const auto& a = log.records[k];
        const auto& b = back.records[k];
        CHECK(a.t == b.t);
        CHECK(a.x_true == b.x_true);
        CHECK(a.x_a == b.x_a);
        CHECK(a.u_c == b.u_c);
        CHECK(a.u_a == b.u_a);
        CHECK(a.u_s == b.u_s);
        CHECK(a.mode == b.mode);
        CHECK(a.intervention == b.intervention);
        CHECK(a.agent_intervention == b.agent_intervention);
        CHECK(a.alarm == b.alarm);
        CHECK(a.residual == b.residual);
        CHECK(a.min_pairwise == b.min_pairwise);
        CHECK(a.min_wall == b.min_wall);
        CHECK(a.solver_status == b.solver_status);
        CHECK(a.tracking_error == b.tracking_error);
    }
    CHECK(to_json(summarize(back)) == to_json(summarize(log)));
}

TEST_CASE("CSV reload keeps the plotted columns") {
    const auto cfg = small(AttackKind::Fdi);
    const SimLog log = run_scenario(cfg);
    const fs::path dir = scratch("csv_reload");
    const fs::path file = export_log(log, summarize(log), dir, ExportFormat::Csv);
    const SimLog back = load_log(file, cfg);
    REQUIRE(back.records.size() == log.records.size());
    for (std::size_t k = 0; k < log.records.size(); ++k) {
        CHECK(back.records[k].x_true == log.records[k].x_true);
        CHECK(back.records[k].u_s == log.records[k].u_s);
        CHECK(back.records[k].intervention == log.records[k].intervention);
        CHECK(back.records[k].tracking_error == log.records[k].tracking_error);
    }
    const auto a = summarize(log);
    const auto b = summarize(back);
    CHECK(a.min_pairwise == b.min_pairwise);
    CHECK(a.first_alarm_time == b.first_alarm_time);
    CHECK(a.recovery_time == b.recovery_time);
}

TEST_CASE("same configuration gives byte-identical CSV") {
    const auto cfg = small(AttackKind::Covert);
    std::ostringstream a;
    std::ostringstream b;
    write_csv(run_scenario(cfg), a);
    write_csv(run_scenario(cfg), b);
    CHECK(a.str() == b.str());
    CHECK(a.str().size() > 1000);

    const fs::path d1 = scratch("det1");
    const fs::path d2 = scratch("det2");
    const SimLog log = run_scenario(cfg);
    export_log(log, summarize(log), d1, ExportFormat::Csv);
    export_log(run_scenario(cfg), summarize(log), d2, ExportFormat::Csv);
    CHECK(slurp(d1 / "log.csv") == slurp(d2 / "log.csv"));
}

TEST_CASE("export surfaces I/O failures with the path") {
    const auto cfg = small(AttackKind::None, 0.1);
    const SimLog log = run_scenario(cfg);
    const fs::path blocker = scratch("io") / "file";
    std::ofstream(blocker) << "x";
    try {
        export_log(log, summarize(log), blocker / "sub", ExportFormat::Csv);
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("file") != std::string::npos);
    }
    CHECK_THROWS(load_log("/nonexistent/log.json"));
}
