#pragma once

// Physics-based state estimation at unmonitored nodes ("virtual sensors"):
// minimize squared mass-conservation and head-loss mismatch plus a scaled
// graph-smoothness penalty, holding measured nodes fixed. Projected gradient
// descent with Armijo backtracking; the objective never increases.

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "aquasentinel/hydraulics.hpp"
#include "aquasentinel/network.hpp"

namespace aqua {

struct AugmentationConfig {
    double lambda_smooth = 0.1;
    int max_iters = 5000;
    double tol = 1e-10;      // stop when the objective falls below this
    double step_size = 1.0;  // initial line-search step
    // Per-channel scales (baseline-series stddevs). Both the physics
    // residuals and the smoothness differences are standardized by these,
    // otherwise the two objective terms live in incommensurate units and
    // lambda loses its meaning; they also precondition the descent steps.
    std::array<double, kChannelCount> channel_scale{1.0, 1.0, 1.0};
};

enum class Provenance : int { Measured = 0, Inferred = 1 };

struct AugmentedFrame {
    StateFrame frame;
    double residual = 0.0;         // final objective: physics + lambda * smoothness
    double physics_term = 0.0;
    double smoothness_term = 0.0;  // unweighted sum of squared scaled differences
    std::vector<Provenance> provenance;
    bool converged = false;
    int iterations = 0;
};

namespace detail {

struct PhysicsTerms {
    double mass_sq = 0.0;
    double head_sq = 0.0;
};

inline PhysicsTerms physics_terms(const Network& net, const std::vector<double>& split,
                                  const StateFrame& frame, const std::vector<double>& demands) {
    PhysicsTerms out;
    const std::size_t n = net.node_count();
    for (std::size_t v = 0; v < n; ++v) {
        double r = demands[v] - frame.states[v].flow_m3s;
        for (int e : net.in_conduits(static_cast<int>(v)))
            r += split[static_cast<std::size_t>(e)] *
                 frame.states[static_cast<std::size_t>(net.conduit_from(e))].flow_m3s;
        out.mass_sq += r * r;
    }
    for (std::size_t e = 0; e < net.conduit_count(); ++e) {
        const ConduitSpec& c = net.conduit(static_cast<int>(e));
        auto u = static_cast<std::size_t>(net.conduit_from(static_cast<int>(e)));
        auto w = static_cast<std::size_t>(net.conduit_to(static_cast<int>(e)));
        double q_e = split[e] * frame.states[u].flow_m3s;
        double drop = hazen_williams_headloss(q_e, c.length_m, c.hazen_williams_c, c.diameter_m);
        double m = (net.node(static_cast<int>(u)).elevation_m + frame.states[u].pressure_m) - drop -
                   (net.node(static_cast<int>(w)).elevation_m + frame.states[w].pressure_m);
        out.head_sq += m * m;
    }
    return out;
}

}  // namespace detail

// Squared physics imbalance of a full-network frame: junction mass residuals
// plus conduit head-loss mismatches.
inline double physics_residual(const Network& net, const StateFrame& frame,
                               const std::vector<double>& demands) {
    if (frame.states.size() != net.node_count() || demands.size() != net.node_count())
        throw std::invalid_argument("physics_residual: frame/demand size mismatch");
    auto terms = detail::physics_terms(net, conduit_split_fractions(net), frame, demands);
    return terms.mass_sq + terms.head_sq;
}

namespace detail {

inline double smoothness_term(const Network& net, const StateFrame& frame,
                              const std::array<double, kChannelCount>& scale) {
    double total = 0.0;
    for (std::size_t e = 0; e < net.conduit_count(); ++e) {
        auto u = static_cast<std::size_t>(net.conduit_from(static_cast<int>(e)));
        auto w = static_cast<std::size_t>(net.conduit_to(static_cast<int>(e)));
        for (int ch = 0; ch < kChannelCount; ++ch) {
            double d = (frame.states[w].channel(static_cast<Channel>(ch)) -
                        frame.states[u].channel(static_cast<Channel>(ch))) /
                       scale[static_cast<std::size_t>(ch)];
            total += d * d;
        }
    }
    return total;
}

inline double objective(const Network& net, const std::vector<double>& split, const StateFrame& frame,
                        const std::vector<double>& demands, const AugmentationConfig& cfg) {
    auto terms = physics_terms(net, split, frame, demands);
    double s_q = cfg.channel_scale[0];
    double s_p = cfg.channel_scale[2];
    return terms.mass_sq / (s_q * s_q) + terms.head_sq / (s_p * s_p) +
           cfg.lambda_smooth * smoothness_term(net, frame, cfg.channel_scale);
}

// Analytic gradient of `objective` wrt every (node, channel); entries for
// measured nodes are zeroed afterwards by the caller.
inline void objective_gradient(const Network& net, const std::vector<double>& split,
                               const StateFrame& frame, const std::vector<double>& demands,
                               const AugmentationConfig& cfg, std::vector<std::array<double, 3>>& grad) {
    const std::size_t n = net.node_count();
    grad.assign(n, {0.0, 0.0, 0.0});
    const double wq = 1.0 / (cfg.channel_scale[0] * cfg.channel_scale[0]);
    const double wp = 1.0 / (cfg.channel_scale[2] * cfg.channel_scale[2]);

    for (std::size_t v = 0; v < n; ++v) {
        double r = demands[v] - frame.states[v].flow_m3s;
        for (int e : net.in_conduits(static_cast<int>(v)))
            r += split[static_cast<std::size_t>(e)] *
                 frame.states[static_cast<std::size_t>(net.conduit_from(e))].flow_m3s;
        grad[v][0] += 2.0 * wq * r * (-1.0);
        for (int e : net.in_conduits(static_cast<int>(v)))
            grad[static_cast<std::size_t>(net.conduit_from(e))][0] +=
                2.0 * wq * r * split[static_cast<std::size_t>(e)];
    }

    for (std::size_t e = 0; e < net.conduit_count(); ++e) {
        const ConduitSpec& c = net.conduit(static_cast<int>(e));
        auto u = static_cast<std::size_t>(net.conduit_from(static_cast<int>(e)));
        auto w = static_cast<std::size_t>(net.conduit_to(static_cast<int>(e)));
        double q_e = split[e] * frame.states[u].flow_m3s;
        double drop = hazen_williams_headloss(q_e, c.length_m, c.hazen_williams_c, c.diameter_m);
        double m = (net.node(static_cast<int>(u)).elevation_m + frame.states[u].pressure_m) - drop -
                   (net.node(static_cast<int>(w)).elevation_m + frame.states[w].pressure_m);
        double dh_dq = hazen_williams_dhdq(q_e, c.length_m, c.hazen_williams_c, c.diameter_m) * split[e];
        grad[u][2] += 2.0 * wp * m;
        grad[w][2] -= 2.0 * wp * m;
        grad[u][0] += 2.0 * wp * m * (-dh_dq);
    }

    for (std::size_t e = 0; e < net.conduit_count(); ++e) {
        auto u = static_cast<std::size_t>(net.conduit_from(static_cast<int>(e)));
        auto w = static_cast<std::size_t>(net.conduit_to(static_cast<int>(e)));
        for (int ch = 0; ch < kChannelCount; ++ch) {
            double s = cfg.channel_scale[static_cast<std::size_t>(ch)];
            double d = (frame.states[w].channel(static_cast<Channel>(ch)) -
                        frame.states[u].channel(static_cast<Channel>(ch))) /
                       (s * s);
            grad[w][static_cast<std::size_t>(ch)] += 2.0 * cfg.lambda_smooth * d;
            grad[u][static_cast<std::size_t>(ch)] -= 2.0 * cfg.lambda_smooth * d;
        }
    }
}

}  // namespace detail

// Estimate the full-network frame from sparse sensor readings. Measured
// nodes are hard equality constraints and come back bit-identical; demands
// must cover every node (estimated base demands are acceptable). An optional
// warm start seeds the unmeasured entries (e.g. the previous step's result).
inline AugmentedFrame augment(const Network& net, const std::map<int, NodeState>& readings,
                              const std::vector<double>& demands, const AugmentationConfig& cfg,
                              const StateFrame* warm_start = nullptr,
                              std::vector<double>* objective_trace = nullptr) {
    const std::size_t n = net.node_count();
    if (demands.size() != n) throw std::invalid_argument("augment: demand vector size mismatch");
    if (cfg.max_iters < 1 || cfg.tol <= 0.0) throw std::invalid_argument("augment: invalid config");
    for (const auto& [v, reading] : readings)
        if (v < 0 || v >= static_cast<int>(n)) throw std::invalid_argument("augment: reading for unknown node");

    const std::vector<double> split = conduit_split_fractions(net);

    AugmentedFrame out;
    out.provenance.assign(n, Provenance::Inferred);
    out.frame.states.assign(n, NodeState{});

    for (const auto& [v, reading] : readings) out.provenance[static_cast<std::size_t>(v)] = Provenance::Measured;

    if (warm_start) {
        out.frame.states = warm_start->states;
    } else {
        // Staged initialization: flows by forward mass substitution from the
        // demands, depth from the rating curve, pressure by upstream head
        // propagation. On consistent readings this starts at (or next to)
        // the global minimum; a network-mean start tends to descend into a
        // wrong basin of the nonconvex head terms.
        std::vector<double> inflow(n, 0.0);
        std::vector<double> ref_d = node_reference_diameters(net);
        for (int v : net.topological_order()) {
            auto vi = static_cast<std::size_t>(v);
            double q = out.provenance[vi] == Provenance::Measured
                           ? readings.at(v).flow_m3s
                           : inflow[vi] + demands[vi];
            out.frame.states[vi].flow_m3s = q;
            out.frame.states[vi].depth_m = depth_from_flow(q, ref_d[vi]);
            for (int e : net.out_conduits(v))
                inflow[static_cast<std::size_t>(net.conduit_to(e))] += q * split[static_cast<std::size_t>(e)];
        }
        const auto& topo = net.topological_order();
        for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
            int v = *it;
            auto vi = static_cast<std::size_t>(v);
            if (out.provenance[vi] == Provenance::Measured) {
                out.frame.states[vi].pressure_m = readings.at(v).pressure_m;
                continue;
            }
            double hgl = net.node(v).elevation_m;  // outfall anchor
            if (!net.is_sink(v)) {
                hgl = -std::numeric_limits<double>::infinity();
                for (int e : net.out_conduits(v)) {
                    const ConduitSpec& c = net.conduit(e);
                    auto w = static_cast<std::size_t>(net.conduit_to(e));
                    double q_e = split[static_cast<std::size_t>(e)] * out.frame.states[vi].flow_m3s;
                    double drop = hazen_williams_headloss(q_e, c.length_m, c.hazen_williams_c, c.diameter_m);
                    hgl = std::max(hgl, net.node(static_cast<int>(w)).elevation_m +
                                            out.frame.states[w].pressure_m + drop);
                }
            }
            out.frame.states[vi].pressure_m = hgl - net.node(v).elevation_m;
        }
    }
    for (const auto& [v, reading] : readings) out.frame.states[static_cast<std::size_t>(v)] = reading;

    double f = detail::objective(net, split, out.frame, demands, cfg);
    if (objective_trace) objective_trace->push_back(f);
    std::vector<std::array<double, 3>> grad;
    // Channel-diagonal preconditioner: steps move each channel in its own
    // scale, which keeps flow and pressure curvatures comparable.
    std::array<double, kChannelCount> precond;
    for (int ch = 0; ch < kChannelCount; ++ch)
        precond[static_cast<std::size_t>(ch)] =
            cfg.channel_scale[static_cast<std::size_t>(ch)] * cfg.channel_scale[static_cast<std::size_t>(ch)];
    double step = cfg.step_size;
    int iter = 0;
    int stalled = 0;
    for (; iter < cfg.max_iters && f > cfg.tol; ++iter) {
        detail::objective_gradient(net, split, out.frame, demands, cfg, grad);
        double decrease_rate = 0.0;  // g' P g
        for (std::size_t v = 0; v < n; ++v) {
            if (out.provenance[v] == Provenance::Measured) {
                grad[v] = {0.0, 0.0, 0.0};
                continue;
            }
            for (int ch = 0; ch < kChannelCount; ++ch)
                decrease_rate += grad[v][static_cast<std::size_t>(ch)] * grad[v][static_cast<std::size_t>(ch)] *
                                 precond[static_cast<std::size_t>(ch)];
        }
        if (decrease_rate < 1e-300) break;

        // Backtracking until sufficient decrease; grow the step after success.
        bool moved = false;
        StateFrame trial = out.frame;
        while (step > 1e-30) {
            for (std::size_t v = 0; v < n; ++v) {
                if (out.provenance[v] == Provenance::Measured) continue;
                for (int ch = 0; ch < kChannelCount; ++ch)
                    trial.states[v].set_channel(
                        static_cast<Channel>(ch),
                        out.frame.states[v].channel(static_cast<Channel>(ch)) -
                            step * precond[static_cast<std::size_t>(ch)] *
                                grad[v][static_cast<std::size_t>(ch)]);
            }
            double f_trial = detail::objective(net, split, trial, demands, cfg);
            if (f_trial <= f - 1e-4 * step * decrease_rate) {
                stalled = f_trial > f - 1e-9 * std::max(f, 1e-30) ? stalled + 1 : 0;
                out.frame = trial;
                f = f_trial;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;  // no descent direction at representable step sizes
        if (objective_trace) objective_trace->push_back(f);
        if (stalled >= 3) break;  // at the constrained optimum, above tol
    }

    out.iterations = iter;
    auto terms = detail::physics_terms(net, split, out.frame, demands);
    out.physics_term = terms.mass_sq / (cfg.channel_scale[0] * cfg.channel_scale[0]) +
                       terms.head_sq / (cfg.channel_scale[2] * cfg.channel_scale[2]);
    out.smoothness_term = detail::smoothness_term(net, out.frame, cfg.channel_scale);
    out.residual = out.physics_term + cfg.lambda_smooth * out.smoothness_term;
    out.converged = out.residual <= cfg.tol;
    return out;
}

}  // namespace aqua
