#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "avf/envs.hpp"
#include "avf/io.hpp"
#include "test_util.hpp"

using namespace avf;

namespace {

SetCoverInstance example_instance() {
    SetCoverInstance inst;
    inst.universe = 4;
    inst.sets = {{1, 2, 3}, {1, 4}, {4}};
    return inst;
}

SetCoverInstance random_instance(Rng& rng, int max_n = 6, int max_m = 5) {
    for (;;) {
        SetCoverInstance inst;
        inst.universe = rng.index(max_n) + 1;
        const int m = rng.index(max_m - 1) + 2;
        inst.sets.resize(m);
        for (auto& s : inst.sets)
            for (int e = 1; e <= inst.universe; ++e)
                if (rng.uniform01() < 0.5)
                    s.push_back(e);
        // every element in some set, no empty set
        bool ok = true;
        std::vector<bool> covered(inst.universe + 1, false);
        for (auto& s : inst.sets) {
            if (s.empty())
                ok = false;
            for (int e : s)
                covered[e] = true;
        }
        for (int e = 1; e <= inst.universe && ok; ++e)
            ok = covered[e];
        if (!ok)
            continue;
        // keep the brute-force oracle affordable
        const SetCoverMdp red = set_cover_mdp(inst);
        double logpolicies = red.mdp.n_states * std::log2(double(red.mdp.n_actions));
        if (logpolicies > std::log2(2e6))
            continue;
        return inst;
    }
}

} // namespace

TEST_CASE("1x1 grid: one visible state plus sink, every action self-loops") {
    const GridMdp g = parse_grid("###\n#.#\n###\n", 0.9);
    CHECK(g.visible_states() == 1);
    CHECK(g.mdp.n_states == 2);
    for (int a = 0; a < 4; ++a)
        CHECK(g.mdp.transition[a](0, 0) == doctest::Approx(1.0));
    CHECK(g.mdp.transition[0](g.sink_state, g.sink_state) == doctest::Approx(1.0));
}

TEST_CASE("2x1 corridor: right moves right, left bounces") {
    const GridMdp g = parse_grid("####\n#..#\n####\n", 0.9);
    REQUIRE(g.visible_states() == 2);
    const int left = g.cell_to_state[1 * 4 + 1];
    const int right = g.cell_to_state[1 * 4 + 2];
    CHECK(g.mdp.transition[kRight](left, right) == doctest::Approx(1.0));
    CHECK(g.mdp.transition[kLeft](left, left) == doctest::Approx(1.0));
    CHECK(g.mdp.transition[kUp](left, left) == doctest::Approx(1.0));
}

TEST_CASE("four-room layout has 104 visible states") {
    const GridMdp g = four_room();
    CHECK(g.visible_states() == 104);
    CHECK(g.mdp.n_states == 105);
    CHECK(g.goal_state >= 0);
    CHECK(g.start_state >= 0);
}

TEST_CASE("four-room reward is one-hot at the goal") {
    const GridMdp g = four_room();
    int nonzero = 0;
    for (int x = 0; x < g.mdp.n_states; ++x)
        if (g.mdp.reward[x] != 0.0) {
            ++nonzero;
            CHECK(x == g.goal_state);
            CHECK(g.mdp.reward[x] == doctest::Approx(1.0));
        }
    CHECK(nonzero == 1);
}

TEST_CASE("goal value is exactly 1 under any policy") {
    const GridMdp g = four_room();
    const Vec v = evaluate_policy(g.mdp, Policy::uniform(g.mdp.n_states, 4));
    CHECK(v[g.goal_state] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(v[g.sink_state] == doctest::Approx(0.0));
}

TEST_CASE("grid transitions are deterministic (one-hot rows)") {
    const GridMdp g = four_room();
    for (int a = 0; a < 4; ++a)
        for (int x = 0; x < g.mdp.n_states; ++x) {
            CHECK(g.mdp.transition[a].row(x).maxCoeff() == doctest::Approx(1.0));
            CHECK(g.mdp.transition[a].row(x).sum() == doctest::Approx(1.0));
        }
}

TEST_CASE("the embedded four-room layout matches the ASCII asset") {
    const auto path = std::filesystem::path(AVF_SOURCE_DIR) / "data" / "four_room.txt";
    CHECK(read_text_file(path) == std::string(four_room_layout()));
}

TEST_CASE("grid parse errors carry position information") {
    CHECK_THROWS_AS(parse_grid("###\n#x#\n###\n", 0.9), GridParseError);
    CHECK_THROWS_AS(parse_grid("###\n#.##\n###\n", 0.9), GridParseError);   // ragged
    CHECK_THROWS_AS(parse_grid("...\n...\n...\n", 0.9), GridParseError);    // no border
    CHECK_THROWS_AS(parse_grid("#####\n#G.G#\n#####\n", 0.9), GridParseError); // two goals
    CHECK_THROWS_AS(parse_grid("###\n###\n###\n", 0.9), GridParseError);    // no floor
    try {
        parse_grid("###\n#?#\n###\n", 0.9);
        CHECK(false);
    } catch (const GridParseError& e) {
        CHECK(e.row == 1);
        CHECK(e.col == 1);
    }
}

TEST_CASE("pad_sink extends an interest vector with a zero") {
    const GridMdp g = parse_grid("###\n#.#\n###\n", 0.9);
    const Vec padded = g.pad_sink(Vec::Constant(1, 0.7));
    REQUIRE(padded.size() == 2);
    CHECK(padded[0] == doctest::Approx(0.7));
    CHECK(padded[1] == doctest::Approx(0.0));
    CHECK_THROWS_AS(g.pad_sink(Vec::Zero(5)), std::invalid_argument);
}

TEST_CASE("reduction MDP of the example instance: layout, delta, self-loops") {
    const SetCoverMdp red = set_cover_mdp(example_instance());
    CHECK(red.mdp.n_states == 9); // 4 + 3 + 2
    CHECK(red.mdp.discount == doctest::Approx(0.5));

    // u1 is element 1, contained in C1 and C2: out-edges to v1 and v2
    std::set<int> targets;
    for (int a = 0; a < red.mdp.n_actions; ++a)
        for (int y = 0; y < red.mdp.n_states; ++y)
            if (red.mdp.transition[a](0, y) == 1.0)
                targets.insert(y);
    CHECK(targets == std::set<int>{4, 5}); // v1 = state 4, v2 = state 5

    Vec expected(9);
    expected << 1, 1, 1, 1, -0.25, -0.25, -0.25, 0, 0;
    CHECK((red.delta - expected).lpNorm<Eigen::Infinity>() == 0.0);

    const int g = 7, b = 8;
    for (int a = 0; a < red.mdp.n_actions; ++a) {
        CHECK(red.mdp.transition[a](g, g) == doctest::Approx(1.0));
        CHECK(red.mdp.transition[a](b, b) == doctest::Approx(1.0));
    }
    CHECK(red.mdp.reward[g] == doctest::Approx(1.0));
    CHECK(red.mdp.reward.sum() == doctest::Approx(1.0));
}

TEST_CASE("min cover via the MDP: pinned small instances") {
    SetCoverInstance two_singletons;
    two_singletons.universe = 2;
    two_singletons.sets = {{1}, {2}};
    CHECK(min_cover_via_mdp(two_singletons) == 2);

    SetCoverInstance one_set;
    one_set.universe = 2;
    one_set.sets = {{1, 2}};
    CHECK(min_cover_via_mdp(one_set) == 1);

    CHECK(min_cover_via_mdp(example_instance()) == 2);
    CHECK(min_cover_exhaustive(example_instance()) == 2);
}

TEST_CASE("reduction agrees with exhaustive search on random instances") {
    Rng rng(41);
    for (int trial = 0; trial < 12; ++trial) {
        const SetCoverInstance inst = random_instance(rng);
        CHECK(min_cover_via_mdp(inst) == min_cover_exhaustive(inst));
    }
}

TEST_CASE("optimal reduction policies route covered sets to g and the rest to b") {
    Rng rng(43);
    for (int trial = 0; trial < 8; ++trial) {
        const SetCoverInstance inst = random_instance(rng);
        const SetCoverMdp red = set_cover_mdp(inst);
        const OracleResult best = directional_max_oracle(red.mdp, red.delta);
        const int g = red.n + red.m, b = g + 1;

        // next-state map of the deterministic policy
        const Mat p = policy_transition(red.mdp, best.policy);
        auto next_of = [&](int x) {
            for (int y = 0; y < red.mdp.n_states; ++y)
                if (p(x, y) > 0.5)
                    return y;
            return -1;
        };
        std::set<int> chosen_sets;
        for (int u = 0; u < red.n; ++u) {
            const int v = next_of(u);
            CHECK(v >= red.n);
            CHECK(v < g);
            chosen_sets.insert(v);
            CHECK(next_of(v) == g); // pi(pi(X1)) = {g}
        }
        for (int v = red.n; v < g; ++v)
            if (!chosen_sets.count(v))
                CHECK(next_of(v) == b);
    }
}

TEST_CASE("min cover refuses instances past the enumeration budget") {
    // every element in every set: out-degree 5 at 13 states blows |A|^n
    SetCoverInstance dense;
    dense.universe = 6;
    dense.sets.assign(5, {1, 2, 3, 4, 5, 6});
    CHECK_THROWS_AS(min_cover_via_mdp(dense), BudgetError);
}

TEST_CASE("set-cover instance validation and text parsing") {
    SetCoverInstance bad;
    bad.universe = 3;
    bad.sets = {{1, 2}}; // element 3 uncovered
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.sets = {{1, 2, 3}, {}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.sets = {{1, 2, 3, 4}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    const SetCoverInstance inst = SetCoverInstance::parse("4 3\n1 2 3\n1 4\n4\n");
    CHECK(inst.universe == 4);
    REQUIRE(inst.sets.size() == 3);
    CHECK(inst.sets[0] == std::vector<int>{1, 2, 3});
    CHECK(inst.sets[2] == std::vector<int>{4});
    CHECK_THROWS_AS(SetCoverInstance::parse("4 3\n1 2 3\n"), std::invalid_argument);
}
