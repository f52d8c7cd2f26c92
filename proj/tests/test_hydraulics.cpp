#include <doctest.h>

#include <cmath>

#include "aquasentinel/hydraulics.hpp"
#include "aquasentinel/network.hpp"
#include "helpers.hpp"

using namespace aqua;

TEST_CASE("hazen_williams_headloss basics") {
    CHECK(hazen_williams_headloss(0.0, 100.0, 130.0, 0.3) == 0.0);
    // frozen from an independent scalar evaluation of the loss formula
    CHECK(hazen_williams_headloss(0.1, 100.0, 130.0, 0.3) == doctest::Approx(0.642625875152).epsilon(1e-9));
    double h1 = hazen_williams_headloss(0.05, 80.0, 120.0, 0.25);
    double h2 = hazen_williams_headloss(0.05, 160.0, 120.0, 0.25);
    CHECK(h2 == doctest::Approx(2.0 * h1).epsilon(1e-12));
    CHECK_THROWS_AS(hazen_williams_headloss(0.1, -1.0, 130.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(hazen_williams_headloss(0.1, 100.0, 0.0, 0.3), std::invalid_argument);
}

TEST_CASE("headloss is monotone in each parameter") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        double q = rng.uniform(0.001, 0.5);
        double l = rng.uniform(10.0, 500.0);
        double c = rng.uniform(80.0, 150.0);
        double d = rng.uniform(0.1, 1.0);
        double h = hazen_williams_headloss(q, l, c, d);
        CHECK(hazen_williams_headloss(q * 1.1, l, c, d) > h);
        CHECK(hazen_williams_headloss(q, l * 1.1, c, d) > h);
        CHECK(hazen_williams_headloss(q, l, c * 1.1, d) < h);
        CHECK(hazen_williams_headloss(q, l, c, d * 1.1) < h);
    }
}

TEST_CASE("solve_steady_state conserves flow on a chain") {
    Network net = testutil::make_chain(3, 0.0);
    std::vector<double> demands{0.25, 0.0, 0.0};
    StateFrame frame = solve_steady_state(net, demands);
    CHECK(frame.states[0].flow_m3s == doctest::Approx(0.25));
    CHECK(frame.states[1].flow_m3s == doctest::Approx(0.25));
    CHECK(frame.states[2].flow_m3s == doctest::Approx(0.25));
}

TEST_CASE("solve_steady_state sums parallel parents at a junction") {
    // A and B feed C; C drains to outfall D.
    std::vector<NodeSpec> nodes{{"A", 20, 0, 0, false},
                                {"B", 21, 0, 0, false},
                                {"C", 15, 0, 0, false},
                                {"D", 10, 0, 0, true}};
    std::vector<ConduitSpec> conduits{{"CA", "A", "C", 100, 0.3, 130},
                                      {"CB", "B", "C", 120, 0.3, 130},
                                      {"CD", "C", "D", 100, 0.4, 130}};
    Network net(std::move(nodes), std::move(conduits));
    StateFrame frame = solve_steady_state(net, {0.2, 0.3, 0.0, 0.0});
    CHECK(frame.states[net.node_index("C")].flow_m3s == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(frame.states[net.node_index("D")].flow_m3s == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_steady_state matches leaf-to-root accumulation on random in-trees") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        Network net = testutil::make_random_intree(rng, 15);
        std::vector<double> demands(net.node_count());
        for (auto& d : demands) d = rng.uniform(0.0, 0.05);
        StateFrame frame = solve_steady_state(net, demands);
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            // independent accumulation: own demand plus demands of all
            // upstream nodes, found by the forward-reachability oracle
            double expected = demands[v];
            for (const std::string& uid : testutil::upstream_oracle(net, net.node(static_cast<int>(v)).id))
                expected += demands[static_cast<std::size_t>(net.node_index(uid))];
            CHECK(frame.states[v].flow_m3s == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("solve_steady_state rejects leak exceeding available flow") {
    Network net = testutil::make_chain(2, 0.0);
    CHECK_THROWS_WITH_AS(solve_steady_state(net, {0.1, 0.0}, {0.2, 0.0}), doctest::Contains("dry pipe"),
                         std::runtime_error);
}

TEST_CASE("junction balance residual stays below 1e-9 through a simulated week") {
    Network net = testutil::make_chain(8, 0.0);
    std::vector<DemandPattern> patterns(net.node_count());
    Rng rng(77);
    for (std::size_t v = 0; v < patterns.size(); ++v) {
        patterns[v] = {rng.uniform(0.002, 0.02), 0.3, 144, 0.05, rng.next_u64()};
    }
    TimeSeries ts = simulate(net, patterns, 1008);
    for (const StateFrame& frame : ts.frames) {
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            double demand = demand_at(patterns[v], frame.step);
            double arriving = 0.0;
            for (int e : net.in_conduits(static_cast<int>(v)))
                arriving += frame.states[static_cast<std::size_t>(net.conduit_from(e))].flow_m3s;
            CHECK(std::abs(frame.states[v].flow_m3s - demand - arriving) <= 1e-9);
        }
    }
}

TEST_CASE("simulate with zero demands yields zero flow everywhere") {
    Network net = testutil::make_chain(4, 0.0);
    std::vector<DemandPattern> patterns(net.node_count());
    TimeSeries ts = simulate(net, patterns, 20);
    for (const StateFrame& frame : ts.frames)
        for (const NodeState& s : frame.states) {
            CHECK(s.flow_m3s == 0.0);
            CHECK(s.depth_m == 0.0);
        }
}

TEST_CASE("simulate with constant demands is a fixed point") {
    Network net = testutil::make_chain(4, 0.0);
    std::vector<DemandPattern> patterns(net.node_count());
    for (auto& p : patterns) p = {0.01, 0.0, 144, 0.0, 0};
    TimeSeries ts = simulate(net, patterns, 10);
    for (const StateFrame& frame : ts.frames)
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            CHECK(frame.states[v].flow_m3s == ts.frames[0].states[v].flow_m3s);
            CHECK(frame.states[v].pressure_m == ts.frames[0].states[v].pressure_m);
        }
}

TEST_CASE("constant leak reduces the outfall by the extracted amount") {
    Network net = testutil::make_chain(6, 0.0);
    std::vector<DemandPattern> patterns(net.node_count());
    Rng rng(123);
    for (auto& p : patterns) p = {rng.uniform(0.005, 0.02), 0.2, 144, 0.1, rng.next_u64()};

    LeakScenario scenario;
    scenario.conduit_id = "E2";  // N2 -> N3
    scenario.kind = LeakKind::Constant15to25;
    scenario.magnitude_fraction = 0.2;
    scenario.start_step = 50;

    TimeSeries base = simulate(net, patterns, 120);
    TimeSeries leak = simulate(net, patterns, 120, scenario);
    int upstream = net.node_index("N2");
    int outfall = net.node_index("N5");
    for (long t = 0; t < 120; ++t) {
        auto ti = static_cast<std::size_t>(t);
        double expected_cut =
            t >= scenario.start_step
                ? scenario.magnitude_fraction * base.frames[ti].states[static_cast<std::size_t>(upstream)].flow_m3s
                : 0.0;
        CHECK(base.frames[ti].states[static_cast<std::size_t>(outfall)].flow_m3s -
                  leak.frames[ti].states[static_cast<std::size_t>(outfall)].flow_m3s ==
              doctest::Approx(expected_cut).epsilon(1e-12));
    }
}

TEST_CASE("leak leaves upstream nodes bit-identical and downstream reduced") {
    Network net = testutil::make_chain(6, 0.0);
    std::vector<DemandPattern> patterns(net.node_count());
    Rng rng(321);
    for (auto& p : patterns) p = {rng.uniform(0.005, 0.02), 0.3, 144, 0.1, rng.next_u64()};

    LeakScenario scenario{"E3", LeakKind::ConstantGt25, 0.3, std::nullopt, 10};
    TimeSeries base = simulate(net, patterns, 60);
    TimeSeries leak = simulate(net, patterns, 60, scenario);
    for (long t = 0; t < 60; ++t) {
        auto ti = static_cast<std::size_t>(t);
        for (int v = 0; v <= 3; ++v)  // N0..N3 are at or upstream of the extraction point
            CHECK(leak.frames[ti].states[static_cast<std::size_t>(v)].flow_m3s ==
                  base.frames[ti].states[static_cast<std::size_t>(v)].flow_m3s);
        for (int v = 4; v <= 5; ++v)
            CHECK(leak.frames[ti].states[static_cast<std::size_t>(v)].flow_m3s <=
                  base.frames[ti].states[static_cast<std::size_t>(v)].flow_m3s);
    }
}

TEST_CASE("simulation is reproducible from seeds") {
    Network net = testutil::make_chain(5, 0.0);
    std::vector<DemandPattern> patterns(net.node_count());
    for (std::size_t v = 0; v < patterns.size(); ++v) patterns[v] = {0.01, 0.3, 144, 0.2, 1000 + v};
    LeakScenario scenario{"E1", LeakKind::DynamicRamp, 0.3, RampSpec{0.01, 0.3, 40}, 20};
    TimeSeries a = simulate(net, patterns, 80, scenario);
    TimeSeries b = simulate(net, patterns, 80, scenario);
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t t = 0; t < a.frames.size(); ++t)
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            CHECK(a.frames[t].states[v].flow_m3s == b.frames[t].states[v].flow_m3s);
            CHECK(a.frames[t].states[v].depth_m == b.frames[t].states[v].depth_m);
            CHECK(a.frames[t].states[v].pressure_m == b.frames[t].states[v].pressure_m);
        }
}

TEST_CASE("leak_flow schedules") {
    LeakScenario constant{"C1", LeakKind::ConstantGt25, 0.3, std::nullopt, 100};
    CHECK(leak_flow(constant, 1.0, 99) == 0.0);
    CHECK(leak_flow(constant, 1.0, 100) == doctest::Approx(0.3));
    CHECK(leak_flow(constant, 2.0, 500) == doctest::Approx(0.6));

    LeakScenario ramp{"C1", LeakKind::DynamicRamp, 0.35, RampSpec{0.01, 0.35, 100}, 100};
    CHECK(leak_flow(ramp, 1.0, 99) == 0.0);
    CHECK(leak_flow(ramp, 1.0, 150) == doctest::Approx(0.18).epsilon(1e-12));  // ramp midpoint
    CHECK(leak_flow(ramp, 1.0, 200) == doctest::Approx(0.35));
    CHECK(leak_flow(ramp, 1.0, 10000) == doctest::Approx(0.35));  // held after the ramp
}

TEST_CASE("depth rating is monotone in flow") {
    Network net = testutil::make_chain(3, 0.0);
    StateFrame lo = solve_steady_state(net, {0.01, 0.0, 0.0});
    StateFrame hi = solve_steady_state(net, {0.05, 0.0, 0.0});
    for (std::size_t v = 0; v < net.node_count(); ++v) CHECK(hi.states[v].depth_m > lo.states[v].depth_m);
}
