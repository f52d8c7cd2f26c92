#pragma once

// File formats: network JSON, scenario JSON, time-series CSV. Numbers are
// written with "%.17g" so a write/read round trip reproduces doubles exactly.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aquasentinel/hydraulics.hpp"
#include "aquasentinel/network.hpp"

namespace aqua {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

// ---------------------------------------------------------------------------
// Network JSON: {"nodes": [{id, elevation_m, base_demand_m3s, risk,
// is_outfall}], "conduits": [{id, from, to, length_m, diameter_m,
// hazen_williams_c}]}
// ---------------------------------------------------------------------------

inline Network load_network(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("network parse error: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("conduits"))
        throw std::invalid_argument("network parse error: expected top-level 'nodes' and 'conduits'");

    std::vector<NodeSpec> nodes;
    for (const auto& jn : doc.at("nodes")) {
        NodeSpec node;
        node.id = jn.value("id", std::string{});
        node.elevation_m = jn.value("elevation_m", 0.0);
        node.base_demand_m3s = jn.value("base_demand_m3s", 0.0);
        node.risk = jn.value("risk", 0.0);
        node.is_outfall = jn.value("is_outfall", false);
        nodes.push_back(std::move(node));
    }
    std::vector<ConduitSpec> conduits;
    for (const auto& jc : doc.at("conduits")) {
        ConduitSpec c;
        c.id = jc.value("id", std::string{});
        c.from_node = jc.value("from", std::string{});
        c.to_node = jc.value("to", std::string{});
        c.length_m = jc.value("length_m", 0.0);
        c.diameter_m = jc.value("diameter_m", 0.0);
        c.hazen_williams_c = jc.value("hazen_williams_c", 0.0);
        conduits.push_back(std::move(c));
    }
    return Network(std::move(nodes), std::move(conduits));
}

inline Network load_network_file(const std::string& path) { return load_network(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Scenario JSON: {conduit_id, kind, magnitude_fraction, ramp?, start_step}
// ---------------------------------------------------------------------------

inline LeakKind leak_kind_from_name(const std::string& name) {
    for (int k = 0; k < kLeakKindCount; ++k)
        if (name == kLeakKindNames[k]) return static_cast<LeakKind>(k);
    throw std::invalid_argument("unknown leak kind: " + name);
}

inline nlohmann::json scenario_to_json(const LeakScenario& s) {
    nlohmann::json j{{"conduit_id", s.conduit_id},
                     {"kind", kLeakKindNames[static_cast<int>(s.kind)]},
                     {"magnitude_fraction", s.magnitude_fraction},
                     {"start_step", s.start_step}};
    if (s.ramp)
        j["ramp"] = {{"start_fraction", s.ramp->start_fraction},
                     {"end_fraction", s.ramp->end_fraction},
                     {"ramp_steps", s.ramp->ramp_steps}};
    return j;
}

inline LeakScenario scenario_from_json(const nlohmann::json& j) {
    LeakScenario s;
    s.conduit_id = j.at("conduit_id").get<std::string>();
    s.kind = leak_kind_from_name(j.at("kind").get<std::string>());
    s.magnitude_fraction = j.at("magnitude_fraction").get<double>();
    s.start_step = j.at("start_step").get<long>();
    if (j.contains("ramp") && !j.at("ramp").is_null()) {
        RampSpec r;
        r.start_fraction = j.at("ramp").at("start_fraction").get<double>();
        r.end_fraction = j.at("ramp").at("end_fraction").get<double>();
        r.ramp_steps = j.at("ramp").at("ramp_steps").get<int>();
        s.ramp = r;
    }
    return s;
}

inline LeakScenario load_scenario_file(const std::string& path) {
    try {
        return scenario_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("scenario parse error: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// TimeSeries CSV: step,node_id,flow_m3s,depth_m,pressure_m
// One row per node per step; steps ascending, nodes in file order.
// ---------------------------------------------------------------------------

inline std::string timeseries_to_csv(const Network& net, const TimeSeries& ts) {
    std::string out = "step,node_id,flow_m3s,depth_m,pressure_m\n";
    for (const StateFrame& frame : ts.frames) {
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            const NodeState& s = frame.states[v];
            out += std::to_string(frame.step);
            out += ',';
            out += net.node(static_cast<int>(v)).id;
            out += ',';
            out += format_double(s.flow_m3s);
            out += ',';
            out += format_double(s.depth_m);
            out += ',';
            out += format_double(s.pressure_m);
            out += '\n';
        }
    }
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

// Parses a full-coverage series (every node present at every step).
inline TimeSeries timeseries_from_csv(const Network& net, const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("timeseries csv: empty input");
    TimeSeries ts;
    std::map<long, StateFrame> frames;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 5) throw std::invalid_argument("timeseries csv: expected 5 fields, got line: " + line);
        long step = std::stol(fields[0]);
        int v = net.node_index(fields[1]);
        StateFrame& frame = frames[step];
        if (frame.states.empty()) {
            frame.step = step;
            frame.states.resize(net.node_count());
        }
        frame.states[static_cast<std::size_t>(v)] = {std::stod(fields[2]), std::stod(fields[3]),
                                                     std::stod(fields[4])};
    }
    long expected = 0;
    for (auto& [step, frame] : frames) {
        if (step != expected)
            throw std::invalid_argument("timeseries csv: non-contiguous steps at " + std::to_string(step));
        ++expected;
        ts.frames.push_back(std::move(frame));
    }
    return ts;
}

// Sparse readings CSV (same header, subset of nodes per step):
// map step -> (node index -> NodeState).
inline std::map<long, std::map<int, NodeState>> sparse_readings_from_csv(const Network& net,
                                                                         const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("readings csv: empty input");
    std::map<long, std::map<int, NodeState>> readings;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 5) throw std::invalid_argument("readings csv: expected 5 fields, got line: " + line);
        long step = std::stol(fields[0]);
        int v = net.node_index(fields[1]);
        readings[step][v] = {std::stod(fields[2]), std::stod(fields[3]), std::stod(fields[4])};
    }
    return readings;
}

}  // namespace aqua

#include "aquasentinel/localization.hpp"
#include "aquasentinel/rtca.hpp"

namespace aqua {

// ---------------------------------------------------------------------------
// Events / localization JSON
// ---------------------------------------------------------------------------

inline nlohmann::json events_to_json(const std::vector<AnomalyEvent>& events) {
    nlohmann::json arr = nlohmann::json::array();
    for (const AnomalyEvent& e : events)
        arr.push_back({{"node_id", e.node_id},
                       {"detected_at", e.detected_at},
                       {"confidence", e.confidence},
                       {"e_rt", e.e_rt},
                       {"e_c", e.e_c}});
    return arr;
}

inline std::vector<AnomalyEvent> events_from_json(const nlohmann::json& arr) {
    std::vector<AnomalyEvent> events;
    for (const auto& j : arr) {
        AnomalyEvent e;
        e.node_id = j.at("node_id").get<std::string>();
        e.detected_at = j.at("detected_at").get<long>();
        e.confidence = j.at("confidence").get<double>();
        e.e_rt = j.at("e_rt").get<double>();
        e.e_c = j.at("e_c").get<double>();
        events.push_back(std::move(e));
    }
    return events;
}

inline nlohmann::json localization_to_json(const LocalizationResult& r) {
    nlohmann::json candidates = nlohmann::json::array();
    for (const SegmentCandidate& c : r.candidates)
        candidates.push_back({{"conduit_id", c.conduit_id},
                              {"source_node", c.source_node},
                              {"upstream_flow", c.upstream_flow}});
    return nlohmann::json{{"sources", r.sources},
                          {"segments", r.segments},
                          {"ranked_candidates", candidates},
                          {"anomaly_set", std::vector<std::string>(r.anomaly_set_snapshot.begin(),
                                                                   r.anomaly_set_snapshot.end())}};
}

inline LocalizationResult localization_from_json(const nlohmann::json& j) {
    LocalizationResult r;
    r.sources = j.at("sources").get<std::vector<std::string>>();
    r.segments = j.at("segments").get<std::vector<std::string>>();
    if (j.contains("ranked_candidates"))
        for (const auto& jc : j.at("ranked_candidates")) {
            SegmentCandidate c;
            c.conduit_id = jc.at("conduit_id").get<std::string>();
            c.source_node = jc.at("source_node").get<std::string>();
            c.upstream_flow = jc.value("upstream_flow", 0.0);
            r.candidates.push_back(std::move(c));
        }
    if (j.contains("anomaly_set"))
        for (const auto& id : j.at("anomaly_set")) r.anomaly_set_snapshot.insert(id.get<std::string>());
    return r;
}

}  // namespace aqua
