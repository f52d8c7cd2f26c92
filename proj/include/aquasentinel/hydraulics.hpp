#pragma once

// Quasi-static hydraulic simulator: each timestep is an independent
// steady-state solve on the DAG, driven by per-node demand patterns.
// Stands in for the calibrated stormwater model that produced the
// original baseline and leak series.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aquasentinel/network.hpp"
#include "aquasentinel/random.hpp"

namespace aqua {

enum class Channel : int { Flow = 0, Depth = 1, Pressure = 2 };
inline constexpr int kChannelCount = 3;
inline constexpr const char* kChannelNames[kChannelCount] = {"flow", "depth", "pressure"};

struct NodeState {
    double flow_m3s = 0.0;
    double depth_m = 0.0;
    double pressure_m = 0.0;

    double channel(Channel c) const {
        switch (c) {
            case Channel::Flow: return flow_m3s;
            case Channel::Depth: return depth_m;
            case Channel::Pressure: return pressure_m;
        }
        return 0.0;
    }
    void set_channel(Channel c, double v) {
        switch (c) {
            case Channel::Flow: flow_m3s = v; break;
            case Channel::Depth: depth_m = v; break;
            case Channel::Pressure: pressure_m = v; break;
        }
    }
};

// Full-network snapshot at one timestep; states indexed by node.
struct StateFrame {
    long step = 0;
    std::vector<NodeState> states;
};

struct TimeSeries {
    double dt_seconds = 600.0;
    std::vector<StateFrame> frames;
};

struct DemandPattern {
    double base_m3s = 0.0;
    double diurnal_amplitude = 0.0;  // fraction of base, in [0,1)
    int period_steps = 144;          // one day at 10-minute steps
    double noise_std = 0.0;          // fraction of the instantaneous level
    std::uint64_t seed = 0;
};

enum class LeakKind : int {
    ConstantLt5 = 0,
    Constant5to15 = 1,
    Constant15to25 = 2,
    ConstantGt25 = 3,
    DynamicRamp = 4,
};
inline constexpr int kLeakKindCount = 5;
inline constexpr const char* kLeakKindNames[kLeakKindCount] = {
    "constant_lt5", "constant_5_15", "constant_15_25", "constant_gt25", "dynamic_ramp"};

struct RampSpec {
    double start_fraction = 0.0;
    double end_fraction = 0.0;
    int ramp_steps = 1;
};

struct LeakScenario {
    std::string conduit_id;
    LeakKind kind = LeakKind::ConstantLt5;
    double magnitude_fraction = 0.0;  // for DynamicRamp this is the end fraction
    std::optional<RampSpec> ramp;
    long start_step = 0;
};

// Friction loss h_f = 10.67 * L * (Q / (C * D^2.63))^1.852.
// Extended as an odd function of Q so optimizer iterates stay well defined.
inline double hazen_williams_headloss(double q_m3s, double length_m, double c, double diameter_m) {
    if (length_m <= 0.0 || c <= 0.0 || diameter_m <= 0.0)
        throw std::invalid_argument("hazen_williams_headloss: nonpositive geometry parameter");
    if (q_m3s == 0.0) return 0.0;
    double mag = 10.67 * length_m * std::pow(std::abs(q_m3s) / (c * std::pow(diameter_m, 2.63)), 1.852);
    return q_m3s > 0.0 ? mag : -mag;
}

inline double hazen_williams_dhdq(double q_m3s, double length_m, double c, double diameter_m) {
    if (q_m3s == 0.0) return 0.0;
    double k = 10.67 * length_m / std::pow(c * std::pow(diameter_m, 2.63), 1.852);
    return 1.852 * k * std::pow(std::abs(q_m3s), 0.852);
}

// Fixed flow split at diverging junctions: proportional to equal-headloss
// conveyance C*D^2.63 / L^(1/1.852). Exactly 1 for a single outgoing conduit.
inline std::vector<double> conduit_split_fractions(const Network& net) {
    std::vector<double> w(net.conduit_count(), 1.0);
    for (std::size_t v = 0; v < net.node_count(); ++v) {
        const auto& outs = net.out_conduits(static_cast<int>(v));
        if (outs.size() < 2) continue;
        double total = 0.0;
        std::vector<double> conv(outs.size());
        for (std::size_t i = 0; i < outs.size(); ++i) {
            const ConduitSpec& c = net.conduit(outs[i]);
            conv[i] = c.hazen_williams_c * std::pow(c.diameter_m, 2.63) /
                      std::pow(c.length_m, 1.0 / 1.852);
            total += conv[i];
        }
        for (std::size_t i = 0; i < outs.size(); ++i)
            w[static_cast<std::size_t>(outs[i])] = conv[i] / total;
    }
    return w;
}

// Reference diameter for the depth rating curve: largest incident conduit.
inline std::vector<double> node_reference_diameters(const Network& net) {
    std::vector<double> d(net.node_count(), 0.0);
    for (std::size_t e = 0; e < net.conduit_count(); ++e) {
        double dia = net.conduit(static_cast<int>(e)).diameter_m;
        auto u = static_cast<std::size_t>(net.conduit_from(static_cast<int>(e)));
        auto v = static_cast<std::size_t>(net.conduit_to(static_cast<int>(e)));
        d[u] = std::max(d[u], dia);
        d[v] = std::max(d[v], dia);
    }
    return d;
}

inline constexpr double kDepthRatingExponent = 0.6;

inline double depth_from_flow(double q_m3s, double reference_diameter_m) {
    return reference_diameter_m * std::pow(std::max(q_m3s, 0.0), kDepthRatingExponent);
}

// Single steady-state solve. `demands` are inflows entering the network at
// each node; `leak_extractions` are taken out of the node's outgoing flow
// (the downstream end of the node, i.e. the top of its outgoing conduits).
// Node flow is the throughput Σ_in + demand; conservation holds as
// Σ_in + D_v = q_v and Σ_out = q_v − leak_v at every node.
inline StateFrame solve_steady_state(const Network& net, const std::vector<double>& demands,
                                     const std::vector<double>& leak_extractions = {}) {
    const std::size_t n = net.node_count();
    if (demands.size() != n) throw std::invalid_argument("solve_steady_state: demand vector size mismatch");
    if (!leak_extractions.empty() && leak_extractions.size() != n)
        throw std::invalid_argument("solve_steady_state: leak vector size mismatch");
    for (std::size_t v = 0; v < n; ++v)
        if (demands[v] < 0.0)
            throw std::invalid_argument("solve_steady_state: negative demand at node " + net.node(static_cast<int>(v)).id);

    static const std::vector<double> kNoLeaks;
    const std::vector<double>& leaks = leak_extractions.empty() ? kNoLeaks : leak_extractions;

    std::vector<double> split = conduit_split_fractions(net);
    std::vector<double> inflow(n, 0.0);
    std::vector<double> conduit_flow(net.conduit_count(), 0.0);
    StateFrame frame;
    frame.states.resize(n);

    for (int v : net.topological_order()) {
        auto vi = static_cast<std::size_t>(v);
        double q = inflow[vi] + demands[vi];
        double leak = leaks.empty() ? 0.0 : leaks[vi];
        if (leak > q + 1e-15)
            throw std::runtime_error("dry pipe: leak extraction exceeds flow at node " + net.node(v).id);
        double out_total = q - leak;
        for (int e : net.out_conduits(v)) {
            double qe = out_total * split[static_cast<std::size_t>(e)];
            conduit_flow[static_cast<std::size_t>(e)] = qe;
            inflow[static_cast<std::size_t>(net.conduit_to(e))] += qe;
        }
        frame.states[vi].flow_m3s = q;
    }

    // Depth via the monotone rating curve. Pressure-head comes from the
    // hydraulic grade line anchored at the outfalls and accumulated upstream
    // through the Hazen-Williams losses; on converging networks this makes
    // the head drop along every conduit exactly the friction loss.
    std::vector<double> ref_d = node_reference_diameters(net);
    std::vector<double> hgl(n, 0.0);
    const auto& topo = net.topological_order();
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        int v = *it;
        auto vi = static_cast<std::size_t>(v);
        if (net.is_sink(v)) {
            hgl[vi] = net.node(v).elevation_m;
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (int e : net.out_conduits(v)) {
                const ConduitSpec& c = net.conduit(e);
                double drop = hazen_williams_headloss(conduit_flow[static_cast<std::size_t>(e)],
                                                      c.length_m, c.hazen_williams_c, c.diameter_m);
                best = std::max(best, hgl[static_cast<std::size_t>(net.conduit_to(e))] + drop);
            }
            hgl[vi] = best;
        }
        frame.states[vi].depth_m = depth_from_flow(frame.states[vi].flow_m3s, ref_d[vi]);
        frame.states[vi].pressure_m = hgl[vi] - net.node(v).elevation_m;
    }
    return frame;
}

// Demand at one timestep: diurnal sinusoid with multiplicative seeded noise,
// clamped at zero.
inline double demand_at(const DemandPattern& p, long t) {
    double level = p.base_m3s *
                   (1.0 + p.diurnal_amplitude *
                              std::sin(2.0 * 3.141592653589793238462643383280 * static_cast<double>(t) /
                                       static_cast<double>(p.period_steps)));
    if (p.noise_std > 0.0)
        level *= 1.0 + p.noise_std * gaussian_at(p.seed, static_cast<std::uint64_t>(t));
    return std::max(level, 0.0);
}

// Leak extraction at time t given the flow at the conduit's upstream node.
inline double leak_flow(const LeakScenario& scenario, double upstream_flow_m3s, long t) {
    if (t < scenario.start_step) return 0.0;
    double fraction = scenario.magnitude_fraction;
    if (scenario.kind == LeakKind::DynamicRamp && scenario.ramp) {
        const RampSpec& r = *scenario.ramp;
        double progress = std::min(1.0, static_cast<double>(t - scenario.start_step) /
                                            static_cast<double>(std::max(r.ramp_steps, 1)));
        fraction = r.start_fraction + (r.end_fraction - r.start_fraction) * progress;
    }
    return fraction * upstream_flow_m3s;
}

// One StateFrame per step. With a scenario, the extraction is injected at the
// downstream end of the leak conduit's upstream node from start_step on;
// nodes strictly upstream of the leak are bit-identical to the leak-free run.
inline TimeSeries simulate(const Network& net, const std::vector<DemandPattern>& patterns, long steps,
                           const std::optional<LeakScenario>& scenario = std::nullopt,
                           double dt_seconds = 600.0) {
    if (patterns.size() != net.node_count())
        throw std::invalid_argument("simulate: pattern vector size mismatch");
    if (steps < 1) throw std::invalid_argument("simulate: steps must be >= 1");

    int leak_upstream = -1;
    if (scenario) leak_upstream = net.conduit_from(net.conduit_index(scenario->conduit_id));

    TimeSeries ts;
    ts.dt_seconds = dt_seconds;
    ts.frames.reserve(static_cast<std::size_t>(steps));
    std::vector<double> demands(net.node_count());
    std::vector<double> leaks;
    for (long t = 0; t < steps; ++t) {
        for (std::size_t v = 0; v < net.node_count(); ++v) demands[v] = demand_at(patterns[v], t);
        StateFrame frame = solve_steady_state(net, demands);
        if (scenario && t >= scenario->start_step) {
            double upstream_flow = frame.states[static_cast<std::size_t>(leak_upstream)].flow_m3s;
            double extraction = leak_flow(*scenario, upstream_flow, t);
            if (extraction > 0.0) {
                leaks.assign(net.node_count(), 0.0);
                leaks[static_cast<std::size_t>(leak_upstream)] = extraction;
                frame = solve_steady_state(net, demands, leaks);
            }
        }
        frame.step = t;
        ts.frames.push_back(std::move(frame));
    }
    return ts;
}

}  // namespace aqua
