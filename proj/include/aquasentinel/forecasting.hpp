#pragma once

// Online Mixture-of-Experts forecaster. Experts are pluggable; the gate
// softmax-weights them by exponentially smoothed recent loss. Baseline
// experts here are deliberately simple; anything implementing Expert can be
// registered in their place.

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aquasentinel/hydraulics.hpp"
#include "aquasentinel/network.hpp"

namespace aqua {

// Training-split standard deviations, pooled per channel (used to scale the
// augmentation smoothness term) and per node and channel (used to
// standardize expert losses, so low-flow and high-flow nodes weigh equally).
struct ChannelStats {
    std::array<double, kChannelCount> pooled{1.0, 1.0, 1.0};
    std::vector<std::array<double, kChannelCount>> per_node;

    double node_scale(std::size_t v, int ch) const {
        if (v < per_node.size()) return per_node[v][static_cast<std::size_t>(ch)];
        return pooled[static_cast<std::size_t>(ch)];
    }

    static ChannelStats from_series(const TimeSeries& series) {
        ChannelStats stats;
        if (series.frames.empty()) return stats;
        const std::size_t n = series.frames.front().states.size();
        const double steps = static_cast<double>(series.frames.size());
        stats.per_node.assign(n, {1.0, 1.0, 1.0});
        for (int ch = 0; ch < kChannelCount; ++ch) {
            double pooled_sum = 0.0, pooled_sq = 0.0;
            for (std::size_t v = 0; v < n; ++v) {
                double sum = 0.0, sum_sq = 0.0;
                for (const StateFrame& f : series.frames) {
                    double x = f.states[v].channel(static_cast<Channel>(ch));
                    sum += x;
                    sum_sq += x * x;
                }
                pooled_sum += sum;
                pooled_sq += sum_sq;
                double mean = sum / steps;
                double var = std::max(sum_sq / steps - mean * mean, 0.0);
                stats.per_node[v][static_cast<std::size_t>(ch)] = std::sqrt(var);
            }
            double mean = pooled_sum / (steps * static_cast<double>(n));
            double var = std::max(pooled_sq / (steps * static_cast<double>(n)) - mean * mean, 0.0);
            stats.pooled[static_cast<std::size_t>(ch)] = std::max(std::sqrt(var), 1e-12);
            // A constant channel at one node (an outfall's zero pressure
            // head) must not blow standardized errors up; floor each node
            // scale at a fraction of the pooled spread.
            for (std::size_t v = 0; v < n; ++v)
                stats.per_node[v][static_cast<std::size_t>(ch)] =
                    std::max(stats.per_node[v][static_cast<std::size_t>(ch)],
                             0.05 * stats.pooled[static_cast<std::size_t>(ch)]);
        }
        return stats;
    }
};

class Expert {
public:
    virtual ~Expert() = default;
    virtual const std::string& name() const = 0;
    // Optional training pass over the leak-free split.
    virtual void fit(const Network&, std::span<const StateFrame>) {}
    // Predict the frame following `history` (oldest first, length >= the
    // ensemble input window; may be longer so seasonal experts can reach
    // a full period back).
    virtual StateFrame predict(const Network& net, std::span<const StateFrame> history) const = 0;
};

// Repeat the last observed frame.
class PersistenceExpert final : public Expert {
public:
    const std::string& name() const override {
        static const std::string n = "persistence";
        return n;
    }
    StateFrame predict(const Network&, std::span<const StateFrame> history) const override {
        StateFrame out = history.back();
        out.step = history.back().step + 1;
        return out;
    }
};

// Repeat the frame one period back (falls back to the oldest frame in the
// history while less than a full period is available).
class SeasonalNaiveExpert final : public Expert {
public:
    explicit SeasonalNaiveExpert(int period_steps = 144) : period_(period_steps) {}
    const std::string& name() const override {
        static const std::string n = "seasonal_naive";
        return n;
    }
    StateFrame predict(const Network&, std::span<const StateFrame> history) const override {
        std::size_t p = static_cast<std::size_t>(period_);
        // history holds the frames before the prediction target, so the frame
        // one period before the target is history[size - period].
        std::size_t idx = history.size() >= p ? history.size() - p : 0;
        StateFrame out = history[idx];
        out.step = history.back().step + 1;
        return out;
    }

private:
    int period_;
};

// Per-node, per-channel linear autoregression fit by least squares on the
// training split (ridge-stabilized so constant series stay solvable).
class AutoregressiveExpert final : public Expert {
public:
    explicit AutoregressiveExpert(int order = 3) : order_(order) {}
    const std::string& name() const override {
        static const std::string n = "ar3";
        return n;
    }

    void fit(const Network& net, std::span<const StateFrame> training) override {
        const std::size_t n = net.node_count();
        const std::size_t dim = static_cast<std::size_t>(order_) + 1;  // intercept first
        coef_.assign(n * kChannelCount, std::vector<double>(dim, 0.0));
        if (training.size() < static_cast<std::size_t>(order_) + 2) {
            fitted_ = false;
            return;
        }
        for (std::size_t v = 0; v < n; ++v) {
            for (int ch = 0; ch < kChannelCount; ++ch) {
                std::vector<std::vector<double>> ata(dim, std::vector<double>(dim, 0.0));
                std::vector<double> atb(dim, 0.0);
                for (std::size_t t = static_cast<std::size_t>(order_); t < training.size(); ++t) {
                    std::vector<double> row(dim);
                    row[0] = 1.0;
                    for (int j = 0; j < order_; ++j)
                        row[static_cast<std::size_t>(j) + 1] =
                            training[t - 1 - static_cast<std::size_t>(j)].states[v].channel(static_cast<Channel>(ch));
                    double y = training[t].states[v].channel(static_cast<Channel>(ch));
                    for (std::size_t a = 0; a < dim; ++a) {
                        atb[a] += row[a] * y;
                        for (std::size_t b = 0; b < dim; ++b) ata[a][b] += row[a] * row[b];
                    }
                }
                double ridge = 1e-9 * (1.0 + ata[1][1]);
                for (std::size_t a = 0; a < dim; ++a) ata[a][a] += ridge;
                coef_[v * kChannelCount + static_cast<std::size_t>(ch)] = solve_dense(ata, atb);
            }
        }
        fitted_ = true;
    }

    StateFrame predict(const Network& net, std::span<const StateFrame> history) const override {
        if (!fitted_ || history.size() < static_cast<std::size_t>(order_))
            return history.back();  // untrained fallback: persistence
        StateFrame out = history.back();
        out.step = history.back().step + 1;
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            for (int ch = 0; ch < kChannelCount; ++ch) {
                const auto& c = coef_[v * kChannelCount + static_cast<std::size_t>(ch)];
                double y = c[0];
                for (int j = 0; j < order_; ++j)
                    y += c[static_cast<std::size_t>(j) + 1] *
                         history[history.size() - 1 - static_cast<std::size_t>(j)].states[v].channel(
                             static_cast<Channel>(ch));
                // flow and depth are physically nonnegative; pressure head
                // may legitimately sit below the local elevation datum
                if (ch != static_cast<int>(Channel::Pressure)) y = std::max(y, 0.0);
                out.states[v].set_channel(static_cast<Channel>(ch), y);
            }
        }
        return out;
    }

private:
    static std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
        const std::size_t n = b.size();
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < n; ++r)
                if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
            std::swap(a[col], a[pivot]);
            std::swap(b[col], b[pivot]);
            double diag = a[col][col];
            if (std::abs(diag) < 1e-300) continue;
            for (std::size_t r = col + 1; r < n; ++r) {
                double factor = a[r][col] / diag;
                for (std::size_t c2 = col; c2 < n; ++c2) a[r][c2] -= factor * a[col][c2];
                b[r] -= factor * b[col];
            }
        }
        std::vector<double> x(n, 0.0);
        for (std::size_t i = n; i-- > 0;) {
            double sum = b[i];
            for (std::size_t j = i + 1; j < n; ++j) sum -= a[i][j] * x[j];
            x[i] = std::abs(a[i][i]) < 1e-300 ? 0.0 : sum / a[i][i];
        }
        return x;
    }

    int order_;
    bool fitted_ = false;
    std::vector<std::vector<double>> coef_;  // [node * channels + ch] -> [intercept, lag1..lagK]
};

// Last frame averaged over each node's closed undirected neighborhood.
class GraphSmoothedPersistenceExpert final : public Expert {
public:
    const std::string& name() const override {
        static const std::string n = "graph_persistence";
        return n;
    }
    StateFrame predict(const Network& net, std::span<const StateFrame> history) const override {
        const StateFrame& last = history.back();
        StateFrame out = last;
        out.step = last.step + 1;
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            for (int ch = 0; ch < kChannelCount; ++ch) {
                double sum = last.states[v].channel(static_cast<Channel>(ch));
                double count = 1.0;
                for (int e : net.in_conduits(static_cast<int>(v))) {
                    sum += last.states[static_cast<std::size_t>(net.conduit_from(e))].channel(
                        static_cast<Channel>(ch));
                    count += 1.0;
                }
                for (int e : net.out_conduits(static_cast<int>(v))) {
                    sum += last.states[static_cast<std::size_t>(net.conduit_to(e))].channel(
                        static_cast<Channel>(ch));
                    count += 1.0;
                }
                out.states[v].set_channel(static_cast<Channel>(ch), sum / count);
            }
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Gating
// ---------------------------------------------------------------------------

struct GateConfig {
    // Softmax temperature on smoothed loss. Standardized-MAE gaps between
    // usable experts sit around 0.05 here, so dominance of the best expert
    // needs lambda on the order of tens.
    double lambda_gate = 50.0;
    // Loss smoothing rate; ~daily averaging. A faster EMA re-admits the
    // persistence expert during flat hours and its lag error then leaks
    // into the cumulative channel when the steep diurnal ramp begins.
    double ema_beta = 0.02;
};

struct GateState {
    std::vector<double> smoothed_loss;  // L_m, one per expert
    std::vector<double> weights;        // strictly positive, sums to 1
};

// Softmax of -lambda * loss, stabilized by subtracting the minimum loss.
inline std::vector<double> gate_weights(const std::vector<double>& losses, double lambda_gate) {
    if (losses.empty()) throw std::invalid_argument("gate_weights: no experts");
    double lo = *std::min_element(losses.begin(), losses.end());
    std::vector<double> w(losses.size());
    double total = 0.0;
    for (std::size_t m = 0; m < losses.size(); ++m) {
        w[m] = std::exp(-lambda_gate * (losses[m] - lo));
        total += w[m];
    }
    for (double& x : w) x /= total;
    return w;
}

inline GateState make_gate_state(std::size_t expert_count, double lambda_gate) {
    GateState s;
    s.smoothed_loss.assign(expert_count, 0.0);
    s.weights = gate_weights(s.smoothed_loss, lambda_gate);
    return s;
}

// L_m <- (1-beta) L_m + beta loss_m, then recompute weights.
inline void update_gate(GateState& state, const std::vector<double>& step_losses, const GateConfig& cfg) {
    if (step_losses.size() != state.smoothed_loss.size())
        throw std::invalid_argument("update_gate: loss count mismatch");
    for (std::size_t m = 0; m < step_losses.size(); ++m) {
        if (step_losses[m] < 0.0) throw std::invalid_argument("update_gate: negative loss");
        state.smoothed_loss[m] = (1.0 - cfg.ema_beta) * state.smoothed_loss[m] + cfg.ema_beta * step_losses[m];
    }
    state.weights = gate_weights(state.smoothed_loss, cfg.lambda_gate);
}

struct ForecastFrame {
    StateFrame combined;
    std::vector<StateFrame> per_expert;  // empty frame where an expert errored
    std::vector<double> weights;         // weights actually applied (renormalized)
    std::vector<bool> expert_ok;
};

class MixtureForecaster {
public:
    MixtureForecaster(GateConfig cfg, std::size_t input_window = 12) : cfg_(cfg), input_window_(input_window) {}

    void add_expert(std::unique_ptr<Expert> expert) {
        experts_.push_back(std::move(expert));
        gate_ = make_gate_state(experts_.size(), cfg_.lambda_gate);
    }

    // Four baseline experts.
    static MixtureForecaster with_default_experts(GateConfig cfg, std::size_t input_window = 12,
                                                  int seasonal_period = 144) {
        return with_experts(default_expert_names(), cfg, input_window, seasonal_period);
    }

    // Registry lookup by name; unknown names are rejected.
    static MixtureForecaster with_experts(const std::vector<std::string>& names, GateConfig cfg,
                                          std::size_t input_window = 12, int seasonal_period = 144) {
        MixtureForecaster f(cfg, input_window);
        for (const std::string& name : names) f.add_expert(make_expert(name, seasonal_period));
        return f;
    }

    static std::vector<std::string> default_expert_names() {
        return {"persistence", "seasonal_naive", "ar3", "graph_persistence"};
    }

    static std::unique_ptr<Expert> make_expert(const std::string& name, int seasonal_period = 144) {
        if (name == "persistence") return std::make_unique<PersistenceExpert>();
        if (name == "seasonal_naive") return std::make_unique<SeasonalNaiveExpert>(seasonal_period);
        if (name == "ar3") return std::make_unique<AutoregressiveExpert>(3);
        if (name == "graph_persistence") return std::make_unique<GraphSmoothedPersistenceExpert>();
        throw std::invalid_argument("unknown expert: " + name);
    }

    std::size_t expert_count() const { return experts_.size(); }
    std::size_t input_window() const { return input_window_; }
    const GateState& gate() const { return gate_; }
    GateState& gate() { return gate_; }
    const GateConfig& gate_config() const { return cfg_; }
    const ChannelStats& channel_stats() const { return stats_; }
    const std::vector<std::string>& error_log() const { return error_log_; }
    const Expert& expert(std::size_t m) const { return *experts_[m]; }

    void fit(const Network& net, std::span<const StateFrame> training) {
        TimeSeries tmp;
        tmp.frames.assign(training.begin(), training.end());
        stats_ = ChannelStats::from_series(tmp);
        for (auto& e : experts_) e->fit(net, training);
    }

    // Gate-weighted combination; erroring experts are
    // dropped for the step with weights renormalized over the survivors.
    ForecastFrame predict(const Network& net, std::span<const StateFrame> history) const {
        if (experts_.empty()) throw std::invalid_argument("predict: no experts registered");
        if (history.size() < input_window_)
            throw std::invalid_argument("predict: insufficient history (need " +
                                        std::to_string(input_window_) + " frames)");
        ForecastFrame out;
        out.per_expert.resize(experts_.size());
        out.expert_ok.assign(experts_.size(), false);
        out.weights.assign(experts_.size(), 0.0);
        double total = 0.0;
        for (std::size_t m = 0; m < experts_.size(); ++m) {
            try {
                out.per_expert[m] = experts_[m]->predict(net, history);
                out.expert_ok[m] = true;
                out.weights[m] = gate_.weights[m];
                total += gate_.weights[m];
            } catch (const std::exception& e) {
                error_log_.push_back(experts_[m]->name() + ": " + e.what());
            }
        }
        if (total <= 0.0) throw std::runtime_error("predict: every expert failed");
        for (double& w : out.weights) w /= total;

        out.combined.step = history.back().step + 1;
        out.combined.states.assign(net.node_count(), NodeState{});
        for (std::size_t m = 0; m < experts_.size(); ++m) {
            if (!out.expert_ok[m]) continue;
            for (std::size_t v = 0; v < net.node_count(); ++v)
                for (int ch = 0; ch < kChannelCount; ++ch) {
                    auto channel = static_cast<Channel>(ch);
                    out.combined.states[v].set_channel(
                        channel, out.combined.states[v].channel(channel) +
                                     out.weights[m] * out.per_expert[m].states[v].channel(channel));
                }
        }
        return out;
    }

    // Standardized mean absolute error of each expert against the realized
    // frame; the gate input. Experts that errored inherit the worst
    // surviving loss so the gate does not reward failure.
    std::vector<double> step_losses(const ForecastFrame& forecast, const StateFrame& actual) const {
        std::vector<double> losses(experts_.size(), 0.0);
        double worst = 0.0;
        for (std::size_t m = 0; m < experts_.size(); ++m) {
            if (!forecast.expert_ok[m]) continue;
            losses[m] = standardized_mae(forecast.per_expert[m], actual);
            worst = std::max(worst, losses[m]);
        }
        for (std::size_t m = 0; m < experts_.size(); ++m)
            if (!forecast.expert_ok[m]) losses[m] = worst;
        return losses;
    }

    void observe(const ForecastFrame& forecast, const StateFrame& actual, bool pause_gate) {
        if (pause_gate) return;
        update_gate(gate_, step_losses(forecast, actual), cfg_);
    }

    // h-step rollout, feeding combined predictions back into the window.
    std::vector<StateFrame> predict_sequence(const Network& net, std::span<const StateFrame> history,
                                             std::size_t horizon) const {
        std::vector<StateFrame> window(history.begin(), history.end());
        std::vector<StateFrame> result;
        for (std::size_t h = 0; h < horizon; ++h) {
            ForecastFrame f = predict(net, window);
            result.push_back(f.combined);
            window.push_back(f.combined);
        }
        return result;
    }

private:
    double standardized_mae(const StateFrame& predicted, const StateFrame& actual) const {
        double sum = 0.0;
        for (std::size_t v = 0; v < actual.states.size(); ++v)
            for (int ch = 0; ch < kChannelCount; ++ch)
                sum += std::abs(predicted.states[v].channel(static_cast<Channel>(ch)) -
                                actual.states[v].channel(static_cast<Channel>(ch))) /
                       stats_.node_scale(v, ch);
        return sum / static_cast<double>(actual.states.size() * kChannelCount);
    }

    GateConfig cfg_;
    std::size_t input_window_;
    std::vector<std::unique_ptr<Expert>> experts_;
    GateState gate_;  // initialized by add_expert
    ChannelStats stats_;
    mutable std::vector<std::string> error_log_;
};

}  // namespace aqua
