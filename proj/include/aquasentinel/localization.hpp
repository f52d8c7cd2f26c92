#pragma once

// Causal flow-based localization: upstream-minimal anomalous nodes are the
// blamed sources, and the implicated pipe segments sit between each source
// and its immediate (necessarily normal) upstream neighbors.

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "aquasentinel/network.hpp"
#include "aquasentinel/rtca.hpp"

namespace aqua {

struct SegmentCandidate {
    std::string conduit_id;
    std::string source_node;
    double upstream_flow = 0.0;  // ranking key when flows are supplied
};

struct LocalizationResult {
    std::vector<std::string> sources;            // anomalous nodes with no anomalous upstream
    std::vector<std::string> segments;           // implicated conduit ids, rank order
    std::vector<SegmentCandidate> candidates;    // per-source detail behind `segments`
    std::set<std::string> anomaly_set_snapshot;
};

// `node_flows` (id -> flow) ranks parallel candidates by carried flow;
// without it, candidates of a source keep conduit-id order.
inline LocalizationResult localize(const Network& net, const std::set<std::string>& anomalous,
                                   const std::map<std::string, double>* node_flows = nullptr) {
    LocalizationResult result;
    result.anomaly_set_snapshot = anomalous;
    if (anomalous.empty()) return result;

    std::vector<char> is_anomalous(net.node_count(), 0);
    for (const std::string& id : anomalous)
        is_anomalous[static_cast<std::size_t>(net.node_index(id))] = 1;  // throws on unknown id

    for (const std::string& id : anomalous) {
        int v = net.node_index(id);
        bool upstream_clean = true;
        for (int u : upstream_indices(net, v)) {
            if (is_anomalous[static_cast<std::size_t>(u)]) {
                upstream_clean = false;
                break;
            }
        }
        if (!upstream_clean) continue;
        result.sources.push_back(id);

        // Every strict upstream node of a source is normal, so the nearest
        // normal upstream neighbors are exactly the immediate parents. A
        // parentless source implicates its own outgoing conduits instead.
        std::vector<SegmentCandidate> local;
        const auto& incoming = net.in_conduits(v);
        for (int e : incoming.empty() ? net.out_conduits(v) : incoming) {
            SegmentCandidate cand;
            cand.conduit_id = net.conduit(e).id;
            cand.source_node = id;
            if (node_flows) {
                auto it = node_flows->find(net.node(net.conduit_from(e)).id);
                if (it != node_flows->end()) cand.upstream_flow = it->second;
            }
            local.push_back(std::move(cand));
        }
        std::sort(local.begin(), local.end(), [](const SegmentCandidate& a, const SegmentCandidate& b) {
            if (a.upstream_flow != b.upstream_flow) return a.upstream_flow > b.upstream_flow;
            return a.conduit_id < b.conduit_id;
        });
        for (auto& cand : local) result.candidates.push_back(std::move(cand));
    }

    std::sort(result.sources.begin(), result.sources.end());
    for (const SegmentCandidate& cand : result.candidates)
        if (std::find(result.segments.begin(), result.segments.end(), cand.conduit_id) == result.segments.end())
            result.segments.push_back(cand.conduit_id);
    return result;
}

// Confirmation delays differ per node; events landing within t_persist steps
// of the first confirmation are treated as one co-anomalous set.
inline std::set<std::string> co_anomalous_set(const std::vector<AnomalyEvent>& events,
                                              long first_detected_at, int t_persist) {
    std::set<std::string> nodes;
    for (const AnomalyEvent& e : events)
        if (e.detected_at >= first_detected_at && e.detected_at <= first_detected_at + t_persist)
            nodes.insert(e.node_id);
    return nodes;
}

}  // namespace aqua
