#include "msf/selftest.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "msf/fleet_problem.hpp"
#include "msf/harness.hpp"

namespace msf {

namespace {

FleetState random_fleet(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> pos(-1.5, 1.5), ang(-3.0, 3.0);
    FleetState x;
    for (std::size_t i = 0; i < n; ++i) x.agents.push_back({pos(rng), pos(rng), ang(rng)});
    return x;
}

FleetInput random_input(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.9, 1.9);
    FleetInput out;
    for (std::size_t i = 0; i < n; ++i) out.agents.push_back({u(rng), u(rng)});
    return out;
}

bool rollout_composes(std::mt19937_64& rng) {
    for (int trial = 0; trial < 20; ++trial) {
        const FleetState x0 = random_fleet(rng, 4);
        std::vector<FleetInput> a{random_input(rng, 4), random_input(rng, 4)};
        std::vector<FleetInput> b{random_input(rng, 4)};
        std::vector<FleetInput> ab = a;
        ab.insert(ab.end(), b.begin(), b.end());
        const auto whole = rollout(x0, ab, 0.02);
        const auto first = rollout(x0, a, 0.02);
        const auto second = rollout(first.states.back(), b, 0.02);
        if (whole.states.back() != second.states.back()) return false;
        if (step_fleet(x0, FleetInput::zeros(4), 0.02) != x0) return false;
    }
    return true;
}

bool terminal_set_invariant() {
    ConstraintSet c;
    FleetState x({{0.0, 0.0, 0.3}, {0.5, 0.0, 1.0}, {0.0, 0.5, -2.0}});
    const FleetInput rest = FleetInput::zeros(3);
    return in_terminal_set(x, rest, c, 0.0) && in_terminal_set(step_fleet(x, rest, 0.02), rest, c, 0.0);
}

bool gradients_match(std::mt19937_64& rng) {
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
        FleetNlpSpec spec;
        spec.x0 = random_fleet(rng, n);
        spec.horizon = 3;
        spec.input_target.assign(3, random_input(rng, n));
        spec.input_weight = {1.0, 1e-6, 1e-6};
        spec.constraints = ConstraintSet{};
        spec.terminal_rest = true;
        const NlpProblem p = make_fleet_problem(spec);
        std::vector<FleetInput> seq{random_input(rng, n), random_input(rng, n), random_input(rng, n)};
        if (gradient_check(p, pack_inputs(seq), 1e-6) > 1e-5) return false;
    }
    return true;
}

bool small_covert_run_is_safe() {
    ScenarioConfig cfg;
    cfg.fleet_size = 4;
    cfg.duration = 8.0;
    cfg.attack.kind = AttackKind::Covert;
    cfg.attack.t_start = 2.0;
    cfg.attack.t_end = 6.0;
    cfg.tracker.horizon = 10;
    const SimLog log = run_scenario(cfg, {.keep_backups = true});
    const double tol = 1e-6;
    for (const auto& r : log.records) {
        if (r.min_pairwise < cfg.constraints.delta_a - tol || r.min_wall < cfg.constraints.delta_w - tol) return false;
        if (cfg.attack.active(r.t) && (r.alarm != 0 || r.residual != 0.0)) return false;
    }
    if (log.fallback_count != 0) return false;
    for (const auto& b : log.backups) {
        if (!validate_backup(shift_backup(b), cfg.constraints, tol).valid()) return false;
    }
    return true;
}

}  // namespace

int run_selftest(std::ostream& out) {
    std::mt19937_64 rng(7);
    const std::vector<std::pair<std::string, std::function<bool()>>> checks{
        {"rollout composition and zero-input fixed point", [&] { return rollout_composes(rng); }},
        {"terminal rest set invariant under zero input", terminal_set_invariant},
        {"analytic gradients match central differences", [&] { return gradients_match(rng); }},
        {"filtered covert run: safe, undetected, recursively feasible", small_covert_run_is_safe},
    };
    int failures = 0;
    for (const auto& [name, check] : checks) {
        bool ok = false;
        try {
            ok = check();
        } catch (const std::exception& e) {
            out << "  error: " << e.what() << '\n';
        }
        out << (ok ? "PASS  " : "FAIL  ") << name << '\n';
        if (!ok) ++failures;
    }
    return failures;
}

}  // namespace msf
