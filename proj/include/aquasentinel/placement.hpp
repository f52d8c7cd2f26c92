#pragma once

// Sensor placement: per-node score combining betweenness centrality,
// hydraulic significance and risk, then greedy selection under a budget and
// a pairwise hop-distance spacing constraint.

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "aquasentinel/hydraulics.hpp"
#include "aquasentinel/network.hpp"

namespace aqua {

struct PlacementConfig {
    double alpha = 1.0;  // centrality weight
    double beta = 1.0;   // hydraulic weight
    double gamma = 1.0;  // risk weight
    int k = 1;           // sensor budget
    int d_min = 0;       // minimum pairwise hop distance
};

struct NodeScore {
    std::string node_id;
    double centrality = 0.0;  // raw C_B(v)
    double hydraulic = 0.0;   // raw mean-flow * pressure-range
    double risk = 0.0;
    double total = 0.0;       // weighted sum of min-max normalized components
};

namespace detail {
// Min-max normalization to [0,1]; a constant vector maps to all zeros.
inline std::vector<double> min_max_normalize(const std::vector<double>& raw) {
    if (raw.empty()) return {};
    auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(raw.size(), 0.0);
    if (hi > lo)
        for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) / (hi - lo);
    return out;
}
}  // namespace detail

// One score per node, in network node order. Hydraulic(v) is the mean flow
// times the pressure-head range over the baseline series.
inline std::vector<NodeScore> score_nodes(const Network& net, const TimeSeries& baseline,
                                          const PlacementConfig& cfg) {
    if (baseline.frames.empty()) throw std::invalid_argument("score_nodes: empty baseline series");
    if (cfg.alpha + cfg.beta + cfg.gamma <= 0.0)
        throw std::invalid_argument("score_nodes: weights must not all be zero");

    const std::size_t n = net.node_count();
    std::vector<double> centrality = betweenness_centrality(net);
    std::vector<double> hydraulic(n, 0.0);
    std::vector<double> risk(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        double sum_flow = 0.0;
        double p_min = std::numeric_limits<double>::infinity();
        double p_max = -std::numeric_limits<double>::infinity();
        for (const StateFrame& frame : baseline.frames) {
            sum_flow += frame.states[v].flow_m3s;
            p_min = std::min(p_min, frame.states[v].pressure_m);
            p_max = std::max(p_max, frame.states[v].pressure_m);
        }
        hydraulic[v] = sum_flow / static_cast<double>(baseline.frames.size()) * (p_max - p_min);
        risk[v] = net.node(static_cast<int>(v)).risk;
    }

    std::vector<double> c_hat = detail::min_max_normalize(centrality);
    std::vector<double> h_hat = detail::min_max_normalize(hydraulic);
    std::vector<double> r_hat = detail::min_max_normalize(risk);

    std::vector<NodeScore> scores(n);
    for (std::size_t v = 0; v < n; ++v) {
        scores[v].node_id = net.node(static_cast<int>(v)).id;
        scores[v].centrality = centrality[v];
        scores[v].hydraulic = hydraulic[v];
        scores[v].risk = risk[v];
        scores[v].total = cfg.alpha * c_hat[v] + cfg.beta * h_hat[v] + cfg.gamma * r_hat[v];
    }
    return scores;
}

struct SensorSelection {
    std::vector<std::string> selected;  // in pick order
    bool budget_met = true;             // false when spacing left fewer than k feasible nodes
};

// Greedy: repeatedly take the highest-total unselected node at hop distance
// >= d_min from everything already selected. Ties break on node id.
inline SensorSelection select_sensors(const std::vector<NodeScore>& scores, const Network& net,
                                      const PlacementConfig& cfg) {
    if (cfg.k > static_cast<int>(net.node_count()))
        throw std::invalid_argument("select_sensors: budget exceeds node count");
    std::vector<const NodeScore*> order;
    order.reserve(scores.size());
    for (const NodeScore& s : scores) order.push_back(&s);
    std::sort(order.begin(), order.end(), [](const NodeScore* a, const NodeScore* b) {
        if (a->total != b->total) return a->total > b->total;
        return a->node_id < b->node_id;
    });

    SensorSelection result;
    for (const NodeScore* cand : order) {
        if (static_cast<int>(result.selected.size()) >= cfg.k) break;
        bool feasible = true;
        for (const std::string& chosen : result.selected) {
            auto d = hop_distance(net, cand->node_id, chosen);
            if (d.has_value() && *d < cfg.d_min) {
                feasible = false;
                break;
            }
        }
        if (feasible) result.selected.push_back(cand->node_id);
    }
    result.budget_met = static_cast<int>(result.selected.size()) == cfg.k;
    return result;
}

}  // namespace aqua
