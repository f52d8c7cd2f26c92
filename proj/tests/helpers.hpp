#pragma once

// Shared fixtures and independent oracles. Oracles here recompute results by
// brute force (path enumeration, forward reachability, exhaustive subsets)
// and must stay independent of the library implementations they check.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aquasentinel/hydraulics.hpp"
#include "aquasentinel/network.hpp"
#include "aquasentinel/random.hpp"

namespace testutil {

inline std::string node_name(int i) { return "N" + std::to_string(i); }

// Linear chain N0 -> N1 -> ... -> N(n-1); the last node is the outfall.
inline aqua::Network make_chain(int n, double base_demand = 0.01, double elevation_drop = 2.0) {
    std::vector<aqua::NodeSpec> nodes;
    std::vector<aqua::ConduitSpec> conduits;
    for (int i = 0; i < n; ++i)
        nodes.push_back({node_name(i), 50.0 - elevation_drop * i, base_demand, 0.0, i == n - 1});
    for (int i = 0; i + 1 < n; ++i)
        conduits.push_back({"E" + std::to_string(i), node_name(i), node_name(i + 1), 100.0, 0.3, 130.0});
    return aqua::Network(std::move(nodes), std::move(conduits));
}

// Random DAG on n nodes: edges only from lower to higher index, so the
// result is acyclic by construction. Sinks are flagged as outfalls.
inline aqua::Network make_random_dag(aqua::Rng& rng, int n, double edge_prob) {
    std::vector<aqua::ConduitSpec> conduits;
    std::vector<char> has_out(static_cast<std::size_t>(n), 0);
    int e = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.next_unit() < edge_prob) {
                conduits.push_back({"E" + std::to_string(e++), node_name(i), node_name(j),
                                    rng.uniform(50.0, 300.0), rng.uniform(0.15, 0.6),
                                    rng.uniform(100.0, 150.0)});
                has_out[static_cast<std::size_t>(i)] = 1;
            }
    std::vector<aqua::NodeSpec> nodes;
    for (int i = 0; i < n; ++i)
        nodes.push_back({node_name(i), 80.0 - static_cast<double>(i), rng.uniform(0.0, 0.02), 0.0,
                         !has_out[static_cast<std::size_t>(i)]});
    return aqua::Network(std::move(nodes), std::move(conduits));
}

// Random tree where every node except N0 has exactly one parent with a
// lower index; edges point from parent to child, so leaves are outfalls.
inline aqua::Network make_random_tree(aqua::Rng& rng, int n, double base_demand_lo = 0.002,
                                      double base_demand_hi = 0.02) {
    std::vector<aqua::ConduitSpec> conduits;
    std::vector<char> has_out(static_cast<std::size_t>(n), 0);
    for (int i = 1; i < n; ++i) {
        int parent = rng.uniform_int(0, i - 1);
        conduits.push_back({"E" + std::to_string(i), node_name(parent), node_name(i),
                            rng.uniform(50.0, 300.0), rng.uniform(0.15, 0.6), rng.uniform(100.0, 150.0)});
        has_out[static_cast<std::size_t>(parent)] = 1;
    }
    std::vector<aqua::NodeSpec> nodes;
    for (int i = 0; i < n; ++i)
        nodes.push_back({node_name(i), 90.0 - static_cast<double>(i) * 0.5,
                         rng.uniform(base_demand_lo, base_demand_hi), 0.0,
                         !has_out[static_cast<std::size_t>(i)]});
    return aqua::Network(std::move(nodes), std::move(conduits));
}

// Random in-tree draining to node N0: every node except N0 has exactly one
// outgoing conduit toward a lower-index node, so flow accumulates leaf to
// root and N0 is the single outfall.
inline aqua::Network make_random_intree(aqua::Rng& rng, int n, double base_demand_lo = 0.002,
                                        double base_demand_hi = 0.02) {
    std::vector<aqua::ConduitSpec> conduits;
    for (int i = 1; i < n; ++i) {
        int parent = rng.uniform_int(0, i - 1);
        conduits.push_back({"E" + std::to_string(i), node_name(i), node_name(parent),
                            rng.uniform(50.0, 300.0), rng.uniform(0.15, 0.6), rng.uniform(100.0, 150.0)});
    }
    std::vector<aqua::NodeSpec> nodes;
    for (int i = 0; i < n; ++i)
        nodes.push_back({node_name(i), 40.0 + static_cast<double>(i) * 0.5,
                         rng.uniform(base_demand_lo, base_demand_hi), 0.0, i == 0});
    return aqua::Network(std::move(nodes), std::move(conduits));
}

// Oracle: u is upstream of v iff v is forward-reachable from u.
inline std::set<std::string> upstream_oracle(const aqua::Network& net, const std::string& v_id) {
    std::set<std::string> result;
    int v = net.node_index(v_id);
    for (std::size_t u = 0; u < net.node_count(); ++u) {
        if (static_cast<int>(u) == v) continue;
        std::vector<int> stack{static_cast<int>(u)};
        std::vector<char> seen(net.node_count(), 0);
        seen[u] = 1;
        bool reached = false;
        while (!stack.empty() && !reached) {
            int w = stack.back();
            stack.pop_back();
            for (int e : net.out_conduits(w)) {
                int x = net.conduit_to(e);
                if (x == v) {
                    reached = true;
                    break;
                }
                if (!seen[static_cast<std::size_t>(x)]) {
                    seen[static_cast<std::size_t>(x)] = 1;
                    stack.push_back(x);
                }
            }
        }
        if (reached) result.insert(net.node(static_cast<int>(u)).id);
    }
    return result;
}

namespace detail {
inline void enumerate_paths(const aqua::Network& net, int v, int t, std::vector<int>& path,
                            std::vector<std::vector<int>>& out) {
    if (v == t) {
        out.push_back(path);
        return;
    }
    for (int e : net.out_conduits(v)) {
        int w = net.conduit_to(e);
        path.push_back(w);
        enumerate_paths(net, w, t, path, out);
        path.pop_back();
    }
}
}  // namespace detail

// Oracle: betweenness by enumerating every directed path between every
// ordered pair and keeping only the shortest ones.
inline std::vector<double> betweenness_oracle(const aqua::Network& net) {
    const int n = static_cast<int>(net.node_count());
    std::vector<double> cb(static_cast<std::size_t>(n), 0.0);
    for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) {
            if (s == t) continue;
            std::vector<std::vector<int>> paths;
            std::vector<int> path{s};
            detail::enumerate_paths(net, s, t, path, paths);
            if (paths.empty()) continue;
            std::size_t shortest = paths[0].size();
            for (const auto& p : paths) shortest = std::min(shortest, p.size());
            std::vector<const std::vector<int>*> sp;
            for (const auto& p : paths)
                if (p.size() == shortest) sp.push_back(&p);
            for (int v = 0; v < n; ++v) {
                if (v == s || v == t) continue;
                int through = 0;
                for (const auto* p : sp)
                    if (std::find(p->begin(), p->end(), v) != p->end()) ++through;
                cb[static_cast<std::size_t>(v)] +=
                    static_cast<double>(through) / static_cast<double>(sp.size());
            }
        }
    }
    return cb;
}

}  // namespace testutil
