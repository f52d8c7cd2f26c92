#pragma once

// Directed pipeline-graph model. The graph is immutable after construction
// and every query here is pure, so a single Network can be shared freely
// across threads.

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace aqua {

struct NodeSpec {
    std::string id;
    double elevation_m = 0.0;
    double base_demand_m3s = 0.0;
    double risk = 0.0;       // [0,1], historical failure propensity
    bool is_outfall = false;
};

struct ConduitSpec {
    std::string id;
    std::string from_node;
    std::string to_node;
    double length_m = 0.0;
    double diameter_m = 0.0;
    double hazen_williams_c = 0.0;
};

class Network {
public:
    Network(std::vector<NodeSpec> nodes, std::vector<ConduitSpec> conduits)
        : nodes_(std::move(nodes)), conduits_(std::move(conduits)) {
        validate_and_index();
    }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t conduit_count() const { return conduits_.size(); }

    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const std::vector<ConduitSpec>& conduits() const { return conduits_; }
    const NodeSpec& node(int v) const { return nodes_[static_cast<std::size_t>(v)]; }
    const ConduitSpec& conduit(int e) const { return conduits_[static_cast<std::size_t>(e)]; }

    bool has_node(const std::string& id) const { return node_index_.count(id) > 0; }

    int node_index(const std::string& id) const {
        auto it = node_index_.find(id);
        if (it == node_index_.end()) throw std::invalid_argument("unknown node id: " + id);
        return it->second;
    }

    int conduit_index(const std::string& id) const {
        auto it = conduit_index_.find(id);
        if (it == conduit_index_.end()) throw std::invalid_argument("unknown conduit id: " + id);
        return it->second;
    }

    int conduit_from(int e) const { return from_[static_cast<std::size_t>(e)]; }
    int conduit_to(int e) const { return to_[static_cast<std::size_t>(e)]; }

    // Conduit indices leaving / entering a node.
    const std::vector<int>& out_conduits(int v) const { return out_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& in_conduits(int v) const { return in_[static_cast<std::size_t>(v)]; }

    // Node order such that every conduit goes from an earlier to a later entry.
    const std::vector<int>& topological_order() const { return topo_; }

    bool is_source(int v) const { return in_[static_cast<std::size_t>(v)].empty(); }
    bool is_sink(int v) const { return out_[static_cast<std::size_t>(v)].empty(); }

private:
    void validate_and_index() {
        const std::size_t n = nodes_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const NodeSpec& node = nodes_[i];
            if (node.id.empty()) throw std::invalid_argument("node with empty id");
            if (!node_index_.emplace(node.id, static_cast<int>(i)).second)
                throw std::invalid_argument("duplicate node id: " + node.id);
            if (node.base_demand_m3s < 0.0)
                throw std::invalid_argument("negative base demand at node " + node.id);
            if (node.risk < 0.0 || node.risk > 1.0)
                throw std::invalid_argument("risk outside [0,1] at node " + node.id);
        }

        out_.assign(n, {});
        in_.assign(n, {});
        from_.resize(conduits_.size());
        to_.resize(conduits_.size());
        std::set<std::pair<int, int>> seen_pairs;
        for (std::size_t e = 0; e < conduits_.size(); ++e) {
            const ConduitSpec& c = conduits_[e];
            if (c.id.empty()) throw std::invalid_argument("conduit with empty id");
            if (!conduit_index_.emplace(c.id, static_cast<int>(e)).second)
                throw std::invalid_argument("duplicate conduit id: " + c.id);
            if (c.from_node == c.to_node)
                throw std::invalid_argument("self-loop conduit: " + c.id);
            auto from_it = node_index_.find(c.from_node);
            auto to_it = node_index_.find(c.to_node);
            if (from_it == node_index_.end() || to_it == node_index_.end())
                throw std::invalid_argument("dangling endpoint on conduit " + c.id);
            if (c.length_m <= 0.0 || c.diameter_m <= 0.0 || c.hazen_williams_c <= 0.0)
                throw std::invalid_argument("nonpositive attribute on conduit " + c.id);
            if (!seen_pairs.emplace(from_it->second, to_it->second).second)
                throw std::invalid_argument("parallel conduit: " + c.id);
            from_[e] = from_it->second;
            to_[e] = to_it->second;
            out_[static_cast<std::size_t>(from_it->second)].push_back(static_cast<int>(e));
            in_[static_cast<std::size_t>(to_it->second)].push_back(static_cast<int>(e));
        }

        // Kahn's algorithm; leftover nodes mean a directed cycle.
        std::vector<int> indegree(n);
        for (std::size_t v = 0; v < n; ++v) indegree[v] = static_cast<int>(in_[v].size());
        std::deque<int> ready;
        for (std::size_t v = 0; v < n; ++v)
            if (indegree[v] == 0) ready.push_back(static_cast<int>(v));
        topo_.reserve(n);
        while (!ready.empty()) {
            int v = ready.front();
            ready.pop_front();
            topo_.push_back(v);
            for (int e : out_[static_cast<std::size_t>(v)]) {
                int w = to_[static_cast<std::size_t>(e)];
                if (--indegree[static_cast<std::size_t>(w)] == 0) ready.push_back(w);
            }
        }
        if (topo_.size() != n) throw std::invalid_argument("cycle detected in conduit graph");

        bool any_outfall = false;
        for (std::size_t v = 0; v < n; ++v) {
            if (nodes_[v].is_outfall && !out_[v].empty())
                throw std::invalid_argument("outfall node " + nodes_[v].id + " has outgoing conduits");
            if (!nodes_[v].is_outfall && out_[v].empty())
                throw std::invalid_argument("terminal node " + nodes_[v].id + " not marked as outfall");
            any_outfall = any_outfall || nodes_[v].is_outfall;
        }
        if (n > 0 && !any_outfall) throw std::invalid_argument("network has no outfall node");
    }

    std::vector<NodeSpec> nodes_;
    std::vector<ConduitSpec> conduits_;
    std::unordered_map<std::string, int> node_index_;
    std::unordered_map<std::string, int> conduit_index_;
    std::vector<int> from_, to_;
    std::vector<std::vector<int>> out_, in_;
    std::vector<int> topo_;
};

// All nodes with a directed path to v, excluding v itself.
inline std::vector<int> upstream_indices(const Network& net, int v) {
    std::vector<char> seen(net.node_count(), 0);
    std::vector<int> stack{v};
    seen[static_cast<std::size_t>(v)] = 1;
    std::vector<int> result;
    while (!stack.empty()) {
        int w = stack.back();
        stack.pop_back();
        for (int e : net.in_conduits(w)) {
            int u = net.conduit_from(e);
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = 1;
                result.push_back(u);
                stack.push_back(u);
            }
        }
    }
    std::sort(result.begin(), result.end());
    return result;
}

inline std::set<std::string> upstream_set(const Network& net, const std::string& id) {
    std::set<std::string> out;
    for (int u : upstream_indices(net, net.node_index(id))) out.insert(net.node(u).id);
    return out;
}

// All nodes reachable from v by directed paths, excluding v itself.
inline std::vector<int> downstream_indices(const Network& net, int v) {
    std::vector<char> seen(net.node_count(), 0);
    std::vector<int> stack{v};
    seen[static_cast<std::size_t>(v)] = 1;
    std::vector<int> result;
    while (!stack.empty()) {
        int w = stack.back();
        stack.pop_back();
        for (int e : net.out_conduits(w)) {
            int u = net.conduit_to(e);
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = 1;
                result.push_back(u);
                stack.push_back(u);
            }
        }
    }
    std::sort(result.begin(), result.end());
    return result;
}

// Directed shortest-path betweenness, unit edge weights, unnormalized pair
// counting (Brandes accumulation). Indexed by node.
inline std::vector<double> betweenness_centrality(const Network& net) {
    const std::size_t n = net.node_count();
    std::vector<double> cb(n, 0.0);
    std::vector<int> order;
    order.reserve(n);
    std::vector<std::vector<int>> preds(n);
    std::vector<double> sigma(n);
    std::vector<int> dist(n);
    std::vector<double> delta(n);
    for (std::size_t s = 0; s < n; ++s) {
        order.clear();
        for (std::size_t v = 0; v < n; ++v) {
            preds[v].clear();
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        std::deque<int> queue{static_cast<int>(s)};
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            order.push_back(v);
            for (int e : net.out_conduits(v)) {
                int w = net.conduit_to(e);
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                    queue.push_back(w);
                }
                if (dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(v)] + 1) {
                    sigma[static_cast<std::size_t>(w)] += sigma[static_cast<std::size_t>(v)];
                    preds[static_cast<std::size_t>(w)].push_back(v);
                }
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int w = *it;
            for (int v : preds[static_cast<std::size_t>(w)])
                delta[static_cast<std::size_t>(v)] +=
                    sigma[static_cast<std::size_t>(v)] / sigma[static_cast<std::size_t>(w)] *
                    (1.0 + delta[static_cast<std::size_t>(w)]);
            if (w != static_cast<int>(s)) cb[static_cast<std::size_t>(w)] += delta[static_cast<std::size_t>(w)];
        }
    }
    return cb;
}

// Shortest hop count on the undirected version of the graph;
// nullopt when u and v lie in different components.
inline std::optional<int> hop_distance(const Network& net, const std::string& u_id, const std::string& v_id) {
    int u = net.node_index(u_id);
    int v = net.node_index(v_id);
    if (u == v) return 0;
    std::vector<int> dist(net.node_count(), -1);
    dist[static_cast<std::size_t>(u)] = 0;
    std::deque<int> queue{u};
    while (!queue.empty()) {
        int w = queue.front();
        queue.pop_front();
        auto visit = [&](int x) {
            if (dist[static_cast<std::size_t>(x)] < 0) {
                dist[static_cast<std::size_t>(x)] = dist[static_cast<std::size_t>(w)] + 1;
                queue.push_back(x);
            }
        };
        for (int e : net.out_conduits(w)) visit(net.conduit_to(e));
        for (int e : net.in_conduits(w)) visit(net.conduit_from(e));
    }
    int d = dist[static_cast<std::size_t>(v)];
    if (d < 0) return std::nullopt;
    return d;
}

}  // namespace aqua
