#pragma once

// Real-Time Cumulative Anomaly detection: per-node dual errors against
// adaptive EMA thresholds with persistence-based confirmation, as a
// streaming state machine. One DetectorState per node, single writer per
// node, strictly ordered by timestep; distinct nodes are independent.

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aquasentinel/hydraulics.hpp"

namespace aqua {

struct RtcaConfig {
    int window = 12;          // W, cumulative-error window (2 h at 10-min steps)
    int t_persist = 3;        // consecutive dual-exceedance steps to confirm
    double alpha_ema = 0.02;  // threshold adaptation rate
    double k1 = 2.5;
    double k2 = 3.0;
    double epsilon = 1e-6;
    long warmup_steps = 288;  // adapt-only span (2 days)
    Channel channel = Channel::Flow;
};

enum class NodeStatus : int { Warmup = 0, Normal = 1, Suspect = 2, Confirmed = 3 };
inline constexpr const char* kNodeStatusNames[] = {"warmup", "normal", "suspect", "confirmed"};

struct DetectorState {
    double mu = 0.0;
    double sigma2 = 0.0;
    std::deque<double> error_window;  // last <= W values of e^RT, oldest first
    int persist_count = 0;
    NodeStatus status = NodeStatus::Warmup;
    bool frozen = false;  // threshold adaptation paused
    long last_t = -1;
};

struct AnomalyEvent {
    std::string node_id;
    long detected_at = 0;
    double confidence = 0.0;
    double e_rt = 0.0;  // at confirmation
    double e_c = 0.0;   // at confirmation
};

// Relative instantaneous error |y - yhat| / (yhat + eps).
inline double rt_error(double y, double y_hat, double epsilon) {
    return std::abs(y - y_hat) / (y_hat + epsilon);
}

// Mean of the available window values (fewer than W during ramp-up).
inline double cum_error(const std::deque<double>& window) {
    if (window.empty()) throw std::invalid_argument("cum_error: empty window");
    double sum = 0.0;
    for (double e : window) sum += e;  // oldest-first, matching a batch recomputation
    return sum / static_cast<double>(window.size());
}

// EMA threshold update; the variance uses the just-updated mean. No-op while
// the state is frozen.
inline void update_thresholds(DetectorState& state, double e_rt, const RtcaConfig& cfg) {
    if (state.frozen) return;
    double a = cfg.alpha_ema;
    state.mu = (1.0 - a) * state.mu + a * e_rt;
    double d = e_rt - state.mu;
    state.sigma2 = (1.0 - a) * state.sigma2 + a * d * d;
}

struct StepResult {
    NodeStatus status = NodeStatus::Warmup;
    double e_rt = 0.0;
    double e_c = 0.0;
    double tau_rt = 0.0;  // pre-update thresholds used for the comparison
    double tau_c = 0.0;
    bool rt_exceeded = false;
    std::optional<AnomalyEvent> event;
};

// Advance one node's detector by one observation. Thresholds are compared
// before any update so the current sample never feeds its own threshold.
// Adaptation freezes whenever either error exceeds its threshold (not only
// on dual exceedance): the cumulative error needs several steps to climb,
// and an EMA left running on the elevated-but-not-yet-dual samples would
// absorb the anomaly faster than e^C can cross tau^C, leaving sustained
// mid-size leaks permanently unconfirmed.
inline StepResult rtca_step(DetectorState& state, double y, double y_hat, const RtcaConfig& cfg, long t,
                            const std::string& node_id = {}) {
    if (t <= state.last_t) throw std::invalid_argument("rtca_step: non-monotonic timestep");
    state.last_t = t;

    StepResult res;
    res.e_rt = rt_error(y, y_hat, cfg.epsilon);
    state.error_window.push_back(res.e_rt);
    while (static_cast<int>(state.error_window.size()) > cfg.window) state.error_window.pop_front();
    res.e_c = cum_error(state.error_window);

    double sigma = std::sqrt(state.sigma2);
    res.tau_rt = state.mu + cfg.k1 * sigma;
    res.tau_c = state.mu + cfg.k2 * sigma;

    if (t <= cfg.warmup_steps) {
        state.persist_count = 0;
        state.frozen = false;
        state.status = NodeStatus::Warmup;
        update_thresholds(state, res.e_rt, cfg);
        res.status = state.status;
        return res;
    }

    res.rt_exceeded = res.e_rt > res.tau_rt;
    bool dual = res.rt_exceeded && res.e_c > res.tau_c;
    if (dual) {
        state.frozen = true;
        if (state.persist_count < cfg.t_persist) {
            ++state.persist_count;
            if (state.persist_count == cfg.t_persist) {
                state.status = NodeStatus::Confirmed;
                AnomalyEvent event;
                event.node_id = node_id;
                event.detected_at = t;
                event.e_rt = res.e_rt;
                event.e_c = res.e_c;
                event.confidence = std::clamp(
                    1.0 - std::exp(-(res.e_c - res.tau_c) / (sigma + cfg.epsilon)), 0.0, 1.0);
                res.event = event;
            } else {
                state.status = NodeStatus::Suspect;
            }
        }
        // already Confirmed: persist_count stays capped at t_persist
    } else {
        state.persist_count = 0;
        state.frozen = res.rt_exceeded;
        state.status = NodeStatus::Normal;
        if (!state.frozen) update_thresholds(state, res.e_rt, cfg);
    }
    res.status = state.status;
    return res;
}

// Network-wide detector: one state per node, fed frame pairs in step order.
class RtcaDetector {
public:
    RtcaDetector(const Network& net, RtcaConfig cfg) : net_(&net), cfg_(cfg), states_(net.node_count()) {}

    const RtcaConfig& config() const { return cfg_; }
    const std::vector<DetectorState>& states() const { return states_; }
    const std::vector<AnomalyEvent>& events() const { return events_; }

    // True when any node is currently frozen, suspect or confirmed; used to
    // pause gate adaptation upstream.
    bool any_alerting() const {
        for (const DetectorState& s : states_)
            if (s.frozen || s.status == NodeStatus::Suspect || s.status == NodeStatus::Confirmed) return true;
        return false;
    }

    std::vector<StepResult> step_frame(long t, const StateFrame& observed, const StateFrame& predicted) {
        std::vector<StepResult> results(states_.size());
        for (std::size_t v = 0; v < states_.size(); ++v) {
            double y = observed.states[v].channel(cfg_.channel);
            double y_hat = predicted.states[v].channel(cfg_.channel);
            results[v] = rtca_step(states_[v], y, y_hat, cfg_, t, net_->node(static_cast<int>(v)).id);
            if (results[v].event) events_.push_back(*results[v].event);
        }
        return results;
    }

private:
    const Network* net_;
    RtcaConfig cfg_;
    std::vector<DetectorState> states_;
    std::vector<AnomalyEvent> events_;
};

}  // namespace aqua
