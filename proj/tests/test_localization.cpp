#include <doctest.h>

#include <map>
#include <set>
#include <string>

#include "aquasentinel/localization.hpp"
#include "helpers.hpp"

using namespace aqua;

namespace {

// Brute-force source filter straight off the defining set intersection.
std::set<std::string> sources_oracle(const Network& net, const std::set<std::string>& anomalous) {
    std::set<std::string> sources;
    for (const std::string& id : anomalous) {
        bool clean = true;
        for (const std::string& up : testutil::upstream_oracle(net, id))
            if (anomalous.count(up)) {
                clean = false;
                break;
            }
        if (clean) sources.insert(id);
    }
    return sources;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("single anomalous node with a normal parent implicates the parent conduit") {
    Network net = testutil::make_chain(3);  // N0 -> N1 -> N2, conduits E0, E1
    auto result = localize(net, {"N1"});
    CHECK(as_set(result.sources) == std::set<std::string>{"N1"});
    REQUIRE(result.segments.size() == 1);
    CHECK(result.segments[0] == "E0");
}

TEST_CASE("downstream co-anomalies are excluded from the source set") {
    Network net = testutil::make_chain(3);
    auto result = localize(net, {"N1", "N2"});
    CHECK(as_set(result.sources) == std::set<std::string>{"N1"});
    REQUIRE(result.segments.size() == 1);
    CHECK(result.segments[0] == "E0");
}

TEST_CASE("empty anomaly set yields an empty result") {
    Network net = testutil::make_chain(3);
    auto result = localize(net, {});
    CHECK(result.sources.empty());
    CHECK(result.segments.empty());
}

TEST_CASE("whole-network anomaly set blames exactly the in-degree-0 nodes") {
    Rng rng(4242);
    for (int trial = 0; trial < 20; ++trial) {
        Network net = testutil::make_random_dag(rng, 8, 0.35);
        std::set<std::string> all;
        for (const NodeSpec& node : net.nodes()) all.insert(node.id);
        auto result = localize(net, all);
        std::set<std::string> expected;
        for (std::size_t v = 0; v < net.node_count(); ++v)
            if (net.is_source(static_cast<int>(v))) expected.insert(net.node(static_cast<int>(v)).id);
        CHECK(as_set(result.sources) == expected);
    }
}

TEST_CASE("a parentless source implicates its outgoing conduit") {
    Network net = testutil::make_chain(3);
    auto result = localize(net, {"N0"});
    CHECK(as_set(result.sources) == std::set<std::string>{"N0"});
    REQUIRE(result.segments.size() == 1);
    CHECK(result.segments[0] == "E0");
}

TEST_CASE("sources match the brute-force intersection oracle on random sets") {
    Rng rng(1729);
    for (int trial = 0; trial < 100; ++trial) {
        Network net = testutil::make_random_dag(rng, rng.uniform_int(3, 9), 0.4);
        std::set<std::string> anomalous;
        for (const NodeSpec& node : net.nodes())
            if (rng.next_unit() < 0.35) anomalous.insert(node.id);
        auto result = localize(net, anomalous);
        CHECK(as_set(result.sources) == sources_oracle(net, anomalous));

        // blame reachability: every non-source anomalous node has a source upstream
        for (const std::string& id : anomalous) {
            if (as_set(result.sources).count(id)) continue;
            auto ups = upstream_set(net, id);
            bool found = false;
            for (const std::string& s : result.sources)
                if (ups.count(s)) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("localize is a pure function of network and anomaly set") {
    Rng rng(55);
    Network net = testutil::make_random_dag(rng, 8, 0.4);
    std::set<std::string> anomalous{net.node(3).id, net.node(5).id, net.node(7).id};
    auto a = localize(net, anomalous);
    auto b = localize(net, anomalous);
    CHECK(a.sources == b.sources);
    CHECK(a.segments == b.segments);
}

TEST_CASE("multiple normal parents are all reported, ranked by carried flow") {
    std::vector<NodeSpec> nodes{{"A", 20, 0, 0, false},
                                {"B", 21, 0, 0, false},
                                {"C", 15, 0, 0, false},
                                {"D", 10, 0, 0, true}};
    std::vector<ConduitSpec> conduits{{"CA", "A", "C", 100, 0.3, 130},
                                      {"CB", "B", "C", 120, 0.3, 130},
                                      {"CD", "C", "D", 100, 0.4, 130}};
    Network net(std::move(nodes), std::move(conduits));
    std::map<std::string, double> flows{{"A", 0.1}, {"B", 0.4}, {"C", 0.5}, {"D", 0.5}};
    auto result = localize(net, {"C"}, &flows);
    CHECK(as_set(result.sources) == std::set<std::string>{"C"});
    REQUIRE(result.segments.size() == 2);
    CHECK(result.segments[0] == "CB");  // B carries more flow
    CHECK(result.segments[1] == "CA");
    // without flows the tie falls back to conduit-id order
    auto unranked = localize(net, {"C"});
    CHECK(unranked.segments[0] == "CA");
}

TEST_CASE("unknown node ids are rejected") {
    Network net = testutil::make_chain(3);
    CHECK_THROWS_AS(localize(net, {"nope"}), std::invalid_argument);
}

TEST_CASE("co_anomalous_set groups confirmations within the grace window") {
    std::vector<AnomalyEvent> events;
    AnomalyEvent a;
    a.node_id = "X";
    a.detected_at = 100;
    AnomalyEvent b = a;
    b.node_id = "Y";
    b.detected_at = 102;
    AnomalyEvent c = a;
    c.node_id = "Z";
    c.detected_at = 110;
    events = {a, b, c};
    auto set = co_anomalous_set(events, 100, 3);
    CHECK(set == std::set<std::string>{"X", "Y"});
}
