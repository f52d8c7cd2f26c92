#pragma once

// Severity classification, maintenance prioritization and deterministic
// report rendering. The text-generation client is a pluggable boundary; the
// core never performs network calls and the default client returns section
// text unchanged.

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "aquasentinel/io.hpp"
#include "aquasentinel/localization.hpp"
#include "aquasentinel/network.hpp"
#include "aquasentinel/rtca.hpp"

namespace aqua {

enum class Severity : int { Minor = 0, Major = 1, Critical = 2 };
inline constexpr const char* kSeverityNames[] = {"Minor", "Major", "Critical"};

inline Severity classify_severity(double confidence, double e_rt) {
    if (confidence > 0.9 && e_rt > 0.3) return Severity::Critical;
    if (confidence > 0.7 && e_rt > 0.15) return Severity::Major;
    return Severity::Minor;
}

inline double priority(double confidence, double centrality, double impact) {
    if (confidence < 0.0 || centrality < 0.0 || impact < 0.0)
        throw std::invalid_argument("priority: factors must be nonnegative");
    return confidence * centrality * impact;
}

// Fraction of the network strictly downstream of v.
inline double impact_fraction(const Network& net, const std::string& node_id) {
    return static_cast<double>(downstream_indices(net, net.node_index(node_id)).size()) /
           static_cast<double>(net.node_count());
}

struct MaintenanceItem {
    std::string node_id;
    Severity severity = Severity::Minor;
    double confidence = 0.0;
    double e_rt = 0.0;
    double centrality = 0.0;
    double impact = 0.0;
    double priority = 0.0;
};

struct Report {
    std::string executive_summary;
    std::string technical_details;
    std::string resources;
    std::string safety_notes;
    std::vector<MaintenanceItem> items;  // priority descending
    std::uint64_t inputs_digest = 0;
    std::string rendered;  // template with sections substituted
};

class TextClient {
public:
    virtual ~TextClient() = default;
    virtual std::string generate(const std::string& prompt) = 0;
};

// Default client: the deterministic section text passes through verbatim.
class PassthroughTextClient final : public TextClient {
public:
    std::string generate(const std::string& prompt) override { return prompt; }
};

inline const char* kReportSectionKeys[] = {"{{executive_summary}}", "{{technical_details}}",
                                           "{{resources}}", "{{safety_notes}}"};

namespace detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline void replace_all(std::string& text, const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
}

inline std::uint64_t fnv1a_append(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

// Deterministic rendering: identical inputs yield byte-identical output.
// The template must contain all four section placeholders.
inline Report render_report(const std::vector<AnomalyEvent>& events, const LocalizationResult& localization,
                            const Network& net, const std::string& template_text,
                            TextClient* client = nullptr) {
    for (const char* key : kReportSectionKeys)
        if (template_text.find(key) == std::string::npos)
            throw std::invalid_argument(std::string("malformed template: missing ") + key);

    Report report;

    std::vector<double> cb = betweenness_centrality(net);
    for (const AnomalyEvent& e : events) {
        MaintenanceItem item;
        item.node_id = e.node_id;
        item.confidence = e.confidence;
        item.e_rt = e.e_rt;
        item.severity = classify_severity(e.confidence, e.e_rt);
        item.centrality = cb[static_cast<std::size_t>(net.node_index(e.node_id))];
        item.impact = impact_fraction(net, e.node_id);
        item.priority = priority(item.confidence, item.centrality, item.impact);
        report.items.push_back(std::move(item));
    }
    std::stable_sort(report.items.begin(), report.items.end(),
                     [](const MaintenanceItem& a, const MaintenanceItem& b) {
                         if (a.priority != b.priority) return a.priority > b.priority;
                         return a.node_id < b.node_id;
                     });

    int critical = 0, major = 0;
    for (const MaintenanceItem& item : report.items) {
        if (item.severity == Severity::Critical) ++critical;
        if (item.severity == Severity::Major) ++major;
    }

    if (report.items.empty()) {
        report.executive_summary = "No anomalies confirmed during the monitored period. "
                                   "The network is operating within adaptive thresholds.";
    } else {
        report.executive_summary =
            std::to_string(report.items.size()) + " anomaly event(s) confirmed (" +
            std::to_string(critical) + " critical, " + std::to_string(major) + " major). " +
            "Suspected source node(s): ";
        for (std::size_t i = 0; i < localization.sources.size(); ++i)
            report.executive_summary += (i ? ", " : "") + localization.sources[i];
        if (localization.sources.empty()) report.executive_summary += "none identified";
        report.executive_summary += ". Implicated segment(s): ";
        for (std::size_t i = 0; i < localization.segments.size(); ++i)
            report.executive_summary += (i ? ", " : "") + localization.segments[i];
        if (localization.segments.empty()) report.executive_summary += "none";
        report.executive_summary += ".";
    }

    report.technical_details = "node,detected_at_step,confidence,e_rt,severity,priority\n";
    for (const MaintenanceItem& item : report.items) {
        long detected_at = 0;
        for (const AnomalyEvent& e : events)
            if (e.node_id == item.node_id) {
                detected_at = e.detected_at;
                break;
            }
        report.technical_details += item.node_id + "," + std::to_string(detected_at) + "," +
                                    detail::fmt2(item.confidence) + "," + detail::fmt2(item.e_rt) + "," +
                                    kSeverityNames[static_cast<int>(item.severity)] + "," +
                                    detail::fmt2(item.priority) + "\n";
    }

    if (report.items.empty()) {
        report.resources = "No field dispatch required.";
        report.safety_notes = "Routine monitoring only.";
    } else {
        report.resources = critical > 0
                               ? "Dispatch an excavation crew with pipe-repair tooling and temporary "
                                 "bypass pumping; notify the control room before isolating segments."
                               : "Schedule an inspection crew with acoustic leak-detection equipment "
                                 "for the implicated segments.";
        report.safety_notes = "Verify atmosphere before manhole entry; confined-space procedures apply. "
                              "Mark and protect the work zone; confirm isolation valves before excavation.";
    }

    if (client) {
        report.executive_summary = client->generate(report.executive_summary);
        report.technical_details = client->generate(report.technical_details);
        report.resources = client->generate(report.resources);
        report.safety_notes = client->generate(report.safety_notes);
    }

    std::uint64_t digest = 0xCBF29CE484222325ULL;
    for (const AnomalyEvent& e : events) {
        digest = detail::fnv1a_append(digest, e.node_id);
        digest = detail::fnv1a_append(digest, std::to_string(e.detected_at));
        digest = detail::fnv1a_append(digest, format_double(e.confidence));
        digest = detail::fnv1a_append(digest, format_double(e.e_rt));
        digest = detail::fnv1a_append(digest, format_double(e.e_c));
    }
    for (const std::string& s : localization.sources) digest = detail::fnv1a_append(digest, s);
    for (const std::string& s : localization.segments) digest = detail::fnv1a_append(digest, s);
    for (const NodeSpec& node : net.nodes()) digest = detail::fnv1a_append(digest, node.id);
    digest = detail::fnv1a_append(digest, template_text);
    report.inputs_digest = digest;

    report.rendered = template_text;
    detail::replace_all(report.rendered, kReportSectionKeys[0], report.executive_summary);
    detail::replace_all(report.rendered, kReportSectionKeys[1], report.technical_details);
    detail::replace_all(report.rendered, kReportSectionKeys[2], report.resources);
    detail::replace_all(report.rendered, kReportSectionKeys[3], report.safety_notes);
    return report;
}

}  // namespace aqua
