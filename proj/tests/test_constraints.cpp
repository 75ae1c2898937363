#include <algorithm>
#include <random>

#include "doctest.h"
#include "msf/constraints.hpp"
#include "msf/errors.hpp"

using namespace msf;

TEST_CASE("pairwise distances") {
    const auto d = pairwise_distances(FleetState({{0, 0, 0}, {3, 4, 1}}));
    REQUIRE(d.size() == 1);
    CHECK(d[0].distance == 5.0);

    CHECK(pairwise_distances(FleetState({{0, 0, 0}})).empty());

    ConstraintSet c;
    const auto pair = pairwise_distances(FleetState({{0, 0, 0}, {0.3, 0, 0}}));
    CHECK(pair[0].distance >= c.delta_a);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> p(-2, 2);
    FleetState x;
    for (int i = 0; i < 7; ++i) x.agents.push_back({p(rng), p(rng), 0});
    CHECK(pairwise_distances(x).size() == 21);
}

TEST_CASE("pairwise distances are permutation-equivariant") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> p(-2, 2);
    FleetState x;
    for (int i = 0; i < 6; ++i) x.agents.push_back({p(rng), p(rng), p(rng)});
    std::vector<std::size_t> perm{5, 2, 0, 4, 1, 3};
    FleetState xp;
    for (auto k : perm) xp.agents.push_back(x.agents[k]);
    const auto a = pairwise_distances(x);
    const auto b = pairwise_distances(xp);
    for (const auto& q : b) {
        const std::size_t i = std::min(perm[q.i], perm[q.j]);
        const std::size_t j = std::max(perm[q.i], perm[q.j]);
        const auto it = std::find_if(a.begin(), a.end(), [&](const PairDistance& r) { return r.i == i && r.j == j; });
        REQUIRE(it != a.end());
        CHECK(it->distance == q.distance);
    }
}

TEST_CASE("wall clearances") {
    ConstraintSet c;
    const auto centered = wall_clearances(FleetState({{0, 0, 0}}), c);
    REQUIRE(centered.size() == 4);
    for (const auto& w : centered) CHECK(w.clearance == 2.0);

    const FleetState near({{1.9, 0, 0}});
    CHECK(min_wall_clearance(near, c) == doctest::Approx(0.1));
    CHECK_FALSE(check_admissible(near, FleetInput::zeros(1), c).state_ok);

    const auto outside = wall_clearances(FleetState({{2.5, 0, 0}}), c);
    CHECK(outside[static_cast<int>(Wall::XMax)].clearance == -0.5);
}

TEST_CASE("check_admissible") {
    ConstraintSet c;
    const FleetState one({{0, 0, 0}});
    CHECK(check_admissible(one, FleetInput({{2.0, -2.0}}), c).input_ok);
    CHECK_FALSE(check_admissible(one, FleetInput({{2.01, 0.0}}), c).input_ok);

    const auto r = check_admissible(FleetState({{0, 0, 0}, {0, 0, 0}}), FleetInput::zeros(2), c);
    CHECK_FALSE(r.state_ok);
    REQUIRE(r.violating_pairs.size() == 1);
    CHECK(r.violating_pairs[0].i == 0);
    CHECK(r.violating_pairs[0].j == 1);
    CHECK(r.violating_pairs[0].distance == 0.0);

    CHECK_THROWS_AS(check_admissible(one, FleetInput::zeros(2), c), InvalidArgument);
}

TEST_CASE("admissibility is monotone in the margins") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> p(-1.9, 1.9), d(0.05, 0.4);
    for (int trial = 0; trial < 300; ++trial) {
        FleetState x;
        for (int i = 0; i < 4; ++i) x.agents.push_back({p(rng), p(rng), 0});
        ConstraintSet strict;
        strict.delta_a = d(rng);
        strict.delta_w = d(rng);
        ConstraintSet loose = strict;
        loose.delta_a *= 0.7;
        loose.delta_w *= 0.5;
        if (check_admissible(x, FleetInput::zeros(4), strict).state_ok) {
            CHECK(check_admissible(x, FleetInput::zeros(4), loose).state_ok);
        }
    }
}

TEST_CASE("terminal rest set") {
    ConstraintSet c;
    const FleetState separated({{-1, 0, 0}, {1, 0, 2}, {0, 1, -1}});
    FleetInput rest = FleetInput::zeros(3);
    CHECK(in_terminal_set(separated, rest, c, 0.0));

    FleetInput moving = rest;
    moving.agents[1].v = 0.5;
    CHECK_FALSE(in_terminal_set(separated, moving, c, 0.0));

    // omega is free in the rest set
    FleetInput spinning = rest;
    spinning.agents[0].omega = 2.0;
    CHECK(in_terminal_set(separated, spinning, c, 0.0));

    const FleetState touching({{0, 0, 0}, {0.2, 0, 0}});
    CHECK(in_terminal_set(touching, FleetInput::zeros(2), c, 0.0));

    CHECK_THROWS_AS(in_terminal_set(separated, rest, c, -1.0), InvalidArgument);
}

TEST_CASE("terminal set is invariant under the zero input") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> p(-1.8, 1.8), a(-4, 4);
    ConstraintSet c;
    int members = 0;
    for (int trial = 0; trial < 500; ++trial) {
        FleetState x;
        for (int i = 0; i < 3; ++i) x.agents.push_back({p(rng), p(rng), a(rng)});
        const FleetInput zero = FleetInput::zeros(3);
        if (!in_terminal_set(x, zero, c, 0.0)) continue;
        ++members;
        CHECK(in_terminal_set(step_fleet(x, zero, 0.02), zero, c, 0.0));
    }
    CHECK(members > 100);
}

TEST_CASE("constraint set validation") {
    ConstraintSet c;
    CHECK_NOTHROW(c.validate());
    c.delta_a = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = ConstraintSet{};
    c.v_bounds = {1.0, 1.0};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = ConstraintSet{};
    c.arena = {-0.1, 0.1, -2, 2};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}
