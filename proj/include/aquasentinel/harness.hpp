#pragma once

// Scenario generation, end-to-end pipeline orchestration and evaluation
// aggregates. All randomness flows from one root seed through per-case
// derived seeds, so a whole batch is reproducible from (network, config).

#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "aquasentinel/augmentation.hpp"
#include "aquasentinel/forecasting.hpp"
#include "aquasentinel/hydraulics.hpp"
#include "aquasentinel/io.hpp"
#include "aquasentinel/localization.hpp"
#include "aquasentinel/network.hpp"
#include "aquasentinel/placement.hpp"
#include "aquasentinel/random.hpp"
#include "aquasentinel/rtca.hpp"

namespace aqua {

struct DemandDefaults {
    double diurnal_amplitude = 0.3;
    int period_steps = 144;
    double noise_std = 0.002;  // multiplicative, fraction of instantaneous level
};

struct ExperimentConfig {
    long steps = 1008;  // one week at 10-minute steps
    std::uint64_t seed = 1;
    long leak_start_step = 432;  // day 3
    std::size_t input_window = 12;
    bool sparse_mode = false;
    std::string scenario_filter;  // kind name or conduit id; empty keeps everything
    std::vector<std::string> experts{"persistence", "seasonal_naive", "ar3", "graph_persistence"};
    DemandDefaults demand;
    RtcaConfig rtca;
    GateConfig gate;
    AugmentationConfig augmentation;
    PlacementConfig placement{1.0, 1.0, 1.0, 0, 3};  // k = 0 means ceil(|V|/4)
};

enum class LocalizationHit : int { Exact = 0, Adjacent = 1, Miss = 2 };
inline constexpr const char* kLocalizationHitNames[] = {"exact", "adjacent", "miss"};

struct CaseResult {
    LeakScenario scenario;
    bool detected = false;
    long detection_delay = -1;  // timesteps from leak start to first confirmation
    bool within_10 = false;
    LocalizationHit hit = LocalizationHit::Miss;
    int false_alarms_pre_leak = 0;
    std::string error;  // nonempty when the case failed to run
};

struct KindAggregate {
    int cases = 0;
    int detected = 0;
    double detection_rate = 0.0;
    double mean_delay = 0.0;       // over detected cases
    double within_10_rate = 0.0;   // over detected cases
    double localization_rate = 0.0;  // exact or adjacent, over detected cases
};

struct EvaluationReport {
    std::map<LeakKind, KindAggregate> per_kind;
    KindAggregate overall;
    int false_alarms = 0;
    int errored_cases = 0;
};

// 5 scenarios (one per kind) for every conduit; magnitudes drawn uniformly
// inside each band, ramps per the dynamic-leak profile, all starting at
// leak_start_step.
inline std::vector<LeakScenario> generate_scenarios(const Network& net, std::uint64_t seed,
                                                    long leak_start_step = 432) {
    if (net.conduit_count() == 0) throw std::invalid_argument("generate_scenarios: network has no conduits");
    std::vector<LeakScenario> scenarios;
    scenarios.reserve(net.conduit_count() * static_cast<std::size_t>(kLeakKindCount));
    for (const ConduitSpec& c : net.conduits()) {
        for (int k = 0; k < kLeakKindCount; ++k) {
            Rng rng(mix_seed(seed, mix_seed(hash_str(c.id), static_cast<std::uint64_t>(k))));
            LeakScenario s;
            s.conduit_id = c.id;
            s.kind = static_cast<LeakKind>(k);
            s.start_step = leak_start_step;
            switch (s.kind) {
                case LeakKind::ConstantLt5: s.magnitude_fraction = rng.uniform(0.01, 0.05); break;
                case LeakKind::Constant5to15: s.magnitude_fraction = rng.uniform(0.05, 0.15); break;
                case LeakKind::Constant15to25: s.magnitude_fraction = rng.uniform(0.15, 0.25); break;
                case LeakKind::ConstantGt25: s.magnitude_fraction = rng.uniform(0.25, 0.40); break;
                case LeakKind::DynamicRamp: {
                    RampSpec r;
                    r.start_fraction = rng.uniform(0.005, 0.01);
                    r.end_fraction = rng.uniform(0.25, 0.35);
                    r.ramp_steps = rng.uniform_int(24, 48);
                    s.ramp = r;
                    s.magnitude_fraction = r.end_fraction;
                    break;
                }
            }
            scenarios.push_back(std::move(s));
        }
    }
    return scenarios;
}

namespace detail {

inline std::vector<DemandPattern> case_patterns(const Network& net, const DemandDefaults& d,
                                                std::uint64_t stream_seed) {
    std::vector<DemandPattern> patterns(net.node_count());
    for (std::size_t v = 0; v < net.node_count(); ++v) {
        patterns[v].base_m3s = net.node(static_cast<int>(v)).base_demand_m3s;
        patterns[v].diurnal_amplitude = d.diurnal_amplitude;
        patterns[v].period_steps = d.period_steps;
        patterns[v].noise_std = d.noise_std;
        patterns[v].seed = mix_seed(stream_seed, static_cast<std::uint64_t>(v));
    }
    return patterns;
}

inline std::vector<double> expected_demands(const Network& net, const DemandDefaults& d, long t) {
    std::vector<double> demands(net.node_count());
    for (std::size_t v = 0; v < net.node_count(); ++v) {
        DemandPattern p;
        p.base_m3s = net.node(static_cast<int>(v)).base_demand_m3s;
        p.diurnal_amplitude = d.diurnal_amplitude;
        p.period_steps = d.period_steps;
        p.noise_std = 0.0;
        demands[v] = demand_at(p, t);
    }
    return demands;
}

inline bool conduits_adjacent(const Network& net, const std::string& a, const std::string& b) {
    int ea = net.conduit_index(a);
    int eb = net.conduit_index(b);
    int a_from = net.conduit_from(ea), a_to = net.conduit_to(ea);
    int b_from = net.conduit_from(eb), b_to = net.conduit_to(eb);
    return a_from == b_from || a_from == b_to || a_to == b_from || a_to == b_to;
}

}  // namespace detail

struct MonitoringOutcome {
    std::vector<AnomalyEvent> events;
    LocalizationResult localization;       // from the first confirmation at/after leak start
    long first_confirmation = -1;          // -1 when nothing confirmed at/after leak start
    int pre_leak_confirmations = 0;
};

// Core online loop shared by the harness and the leak-free control runs:
// forecast each step, feed the detector, pause gate updates while any node
// is alerting, and shield the experts' input window from suspect
// observations so they keep predicting the normal regime instead of
// absorbing the anomaly.
inline MonitoringOutcome run_monitoring(const Network& net, const ExperimentConfig& cfg,
                                        const TimeSeries& training, const TimeSeries& eval_series,
                                        long leak_start_step) {
    MixtureForecaster forecaster =
        MixtureForecaster::with_experts(cfg.experts, cfg.gate, cfg.input_window, cfg.demand.period_steps);
    RtcaDetector detector(net, cfg.rtca);

    // Sparse mode: sensors from placement on the training series, every
    // other node reconstructed by physics augmentation each step. The
    // experts then train on the augmented training series too, so they
    // model the process the detector will actually observe.
    std::vector<char> is_sensor(net.node_count(), 1);
    AugmentationConfig aug_cfg = cfg.augmentation;
    if (cfg.sparse_mode) {
        PlacementConfig pcfg = cfg.placement;
        if (pcfg.k <= 0)
            pcfg.k = static_cast<int>(std::ceil(static_cast<double>(net.node_count()) * 0.25));
        auto selection = select_sensors(score_nodes(net, training, pcfg), net, pcfg);
        is_sensor.assign(net.node_count(), 0);
        for (const std::string& id : selection.selected)
            is_sensor[static_cast<std::size_t>(net.node_index(id))] = 1;
        aug_cfg.channel_scale = ChannelStats::from_series(training).pooled;

        TimeSeries augmented_training;
        augmented_training.dt_seconds = training.dt_seconds;
        augmented_training.frames.reserve(training.frames.size());
        StateFrame warm;
        bool have_warm = false;
        for (long t = 0; t < static_cast<long>(training.frames.size()); ++t) {
            std::map<int, NodeState> readings;
            for (std::size_t v = 0; v < net.node_count(); ++v)
                if (is_sensor[v]) readings[static_cast<int>(v)] = training.frames[static_cast<std::size_t>(t)].states[v];
            AugmentedFrame aug = augment(net, readings, detail::expected_demands(net, cfg.demand, t),
                                         aug_cfg, have_warm ? &warm : nullptr);
            warm = aug.frame;
            have_warm = true;
            aug.frame.step = t;
            augmented_training.frames.push_back(std::move(aug.frame));
        }
        forecaster.fit(net, augmented_training.frames);
    } else {
        forecaster.fit(net, training.frames);
    }

    // The forecaster sees a history whose most recent input_window frames
    // carry forecast substitutions for alerting nodes (so short-lag experts
    // keep predicting the normal regime instead of absorbing an anomaly),
    // while everything older reverts to the raw observations. The seasonal
    // expert therefore always reads unsubstituted data one period back;
    // substituted frames echoing through the seasonal lag a day later would
    // otherwise bias the same diurnal phase and snowball into false alarms.
    const std::size_t history_cap =
        std::max(cfg.input_window, static_cast<std::size_t>(cfg.demand.period_steps)) + 2;
    std::vector<StateFrame> history_raw;
    std::vector<StateFrame> recent;  // last <= input_window frames, substituted
    history_raw.reserve(history_cap + 1);
    StateFrame prev_augmented;
    bool have_warm_start = false;

    MonitoringOutcome outcome;
    std::vector<StateFrame> predict_history;
    for (long t = 0; t < static_cast<long>(eval_series.frames.size()); ++t) {
        StateFrame observed = eval_series.frames[static_cast<std::size_t>(t)];
        if (cfg.sparse_mode) {
            std::map<int, NodeState> readings;
            for (std::size_t v = 0; v < net.node_count(); ++v)
                if (is_sensor[v]) readings[static_cast<int>(v)] = observed.states[v];
            AugmentedFrame aug =
                augment(net, readings, detail::expected_demands(net, cfg.demand, t), aug_cfg,
                        have_warm_start ? &prev_augmented : nullptr);
            prev_augmented = aug.frame;
            have_warm_start = true;
            observed = aug.frame;
            observed.step = t;
        }

        StateFrame substituted = observed;
        if (recent.size() >= cfg.input_window) {
            predict_history.assign(history_raw.begin(), history_raw.end() - static_cast<long>(recent.size()));
            predict_history.insert(predict_history.end(), recent.begin(), recent.end());
            ForecastFrame forecast = forecaster.predict(net, predict_history);
            std::vector<StepResult> results = detector.step_frame(t, observed, forecast.combined);
            forecaster.observe(forecast, observed, detector.any_alerting());
            // While a node's instantaneous error exceeds its threshold, the
            // experts' input window carries the last known-normal value at
            // the same diurnal phase instead of the suspect observation.
            // Anchoring on recorded data keeps the replacement bounded; a
            // forecast fed back here would roll out on itself and drift.
            const std::size_t period = static_cast<std::size_t>(cfg.demand.period_steps);
            for (std::size_t v = 0; v < net.node_count(); ++v)
                if (results[v].rt_exceeded)
                    substituted.states[v] = history_raw.size() >= period
                                                ? history_raw[history_raw.size() - period].states[v]
                                                : forecast.combined.states[v];
        }
        history_raw.push_back(observed);
        if (history_raw.size() > history_cap) history_raw.erase(history_raw.begin());
        recent.push_back(std::move(substituted));
        if (recent.size() > cfg.input_window) recent.erase(recent.begin());
    }

    outcome.events = detector.events();
    for (const AnomalyEvent& e : outcome.events) {
        if (e.detected_at < leak_start_step) ++outcome.pre_leak_confirmations;
        if (e.detected_at >= leak_start_step &&
            (outcome.first_confirmation < 0 || e.detected_at < outcome.first_confirmation))
            outcome.first_confirmation = e.detected_at;
    }
    if (outcome.first_confirmation >= 0) {
        std::set<std::string> anomalous =
            co_anomalous_set(outcome.events, outcome.first_confirmation, cfg.rtca.t_persist);
        std::map<std::string, double> flows;
        const StateFrame& at = eval_series.frames[static_cast<std::size_t>(outcome.first_confirmation)];
        for (std::size_t v = 0; v < net.node_count(); ++v)
            flows[net.node(static_cast<int>(v)).id] = at.states[v].flow_m3s;
        outcome.localization = localize(net, anomalous, &flows);
    }
    return outcome;
}

// One scenario through the whole pipeline: baseline week for training, leak
// week for evaluation, localization graded against the leaking conduit.
inline CaseResult run_case(const ExperimentConfig& cfg, const Network& net, const LeakScenario& scenario) {
    CaseResult result;
    result.scenario = scenario;
    try {
        std::uint64_t case_seed =
            mix_seed(cfg.seed, mix_seed(hash_str(scenario.conduit_id), static_cast<std::uint64_t>(scenario.kind)));
        TimeSeries training =
            simulate(net, detail::case_patterns(net, cfg.demand, mix_seed(case_seed, 0xA11CE)), cfg.steps);
        TimeSeries eval_series = simulate(
            net, detail::case_patterns(net, cfg.demand, mix_seed(case_seed, 0xB0B)), cfg.steps, scenario);

        MonitoringOutcome outcome = run_monitoring(net, cfg, training, eval_series, scenario.start_step);
        result.false_alarms_pre_leak = outcome.pre_leak_confirmations;
        if (outcome.first_confirmation >= 0) {
            result.detected = true;
            result.detection_delay = outcome.first_confirmation - scenario.start_step;
            result.within_10 = result.detection_delay <= 10;
            if (!outcome.localization.segments.empty() &&
                outcome.localization.segments.front() == scenario.conduit_id) {
                result.hit = LocalizationHit::Exact;
            } else {
                result.hit = LocalizationHit::Miss;
                for (const std::string& seg : outcome.localization.segments)
                    if (detail::conduits_adjacent(net, seg, scenario.conduit_id)) {
                        result.hit = LocalizationHit::Adjacent;
                        break;
                    }
            }
        }
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

// Empty filter keeps everything; otherwise match on kind name or conduit id.
inline bool scenario_matches(const LeakScenario& scenario, const std::string& filter) {
    if (filter.empty()) return true;
    return filter == kLeakKindNames[static_cast<int>(scenario.kind)] || filter == scenario.conduit_id;
}

// Cases share nothing mutable, so the batch fans out across threads; results
// land at their scenario's index and the fold stays deterministic.
inline std::vector<CaseResult> run_cases(const ExperimentConfig& cfg, const Network& net,
                                         const std::vector<LeakScenario>& scenarios,
                                         unsigned thread_count = 0) {
    std::vector<const LeakScenario*> selected;
    for (const LeakScenario& s : scenarios)
        if (scenario_matches(s, cfg.scenario_filter)) selected.push_back(&s);
    std::vector<CaseResult> results(selected.size());
    if (thread_count == 0) thread_count = std::max(1u, std::thread::hardware_concurrency());
    thread_count = std::min<unsigned>(thread_count, static_cast<unsigned>(selected.size() ? selected.size() : 1));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < selected.size(); i = next.fetch_add(1))
            results[i] = run_case(cfg, net, *selected[i]);
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < thread_count; ++w) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    return results;
}

// Deterministic fold over the case list; order-independent aggregates.
inline EvaluationReport evaluate(const std::vector<CaseResult>& cases) {
    if (cases.empty()) throw std::invalid_argument("evaluate: empty case list");
    EvaluationReport report;
    auto fold = [](KindAggregate& agg, const CaseResult& c) {
        ++agg.cases;
        if (c.detected) {
            ++agg.detected;
            agg.mean_delay += static_cast<double>(c.detection_delay);
            if (c.within_10) agg.within_10_rate += 1.0;
            if (c.hit != LocalizationHit::Miss) agg.localization_rate += 1.0;
        }
    };
    for (const CaseResult& c : cases) {
        fold(report.per_kind[c.scenario.kind], c);
        fold(report.overall, c);
        report.false_alarms += c.false_alarms_pre_leak;
        if (!c.error.empty()) ++report.errored_cases;
    }
    auto finalize = [](KindAggregate& agg) {
        agg.detection_rate = agg.cases > 0 ? static_cast<double>(agg.detected) / agg.cases : 0.0;
        if (agg.detected > 0) {
            agg.mean_delay /= agg.detected;
            agg.within_10_rate /= agg.detected;
            agg.localization_rate /= agg.detected;
        }
    };
    for (auto& [kind, agg] : report.per_kind) finalize(agg);
    finalize(report.overall);
    return report;
}

// ---------------------------------------------------------------------------
// cases.csv / summary.json
// ---------------------------------------------------------------------------

inline std::string cases_to_csv(const std::vector<CaseResult>& cases) {
    std::string out =
        "conduit_id,kind,magnitude_fraction,start_step,detected,detection_delay,within_10,"
        "localization,false_alarms_pre_leak,error\n";
    for (const CaseResult& c : cases) {
        out += c.scenario.conduit_id;
        out += ',';
        out += kLeakKindNames[static_cast<int>(c.scenario.kind)];
        out += ',';
        out += format_double(c.scenario.magnitude_fraction);
        out += ',';
        out += std::to_string(c.scenario.start_step);
        out += ',';
        out += c.detected ? "true" : "false";
        out += ',';
        out += std::to_string(c.detection_delay);
        out += ',';
        out += c.within_10 ? "true" : "false";
        out += ',';
        out += kLocalizationHitNames[static_cast<int>(c.hit)];
        out += ',';
        out += std::to_string(c.false_alarms_pre_leak);
        out += ',';
        out += c.error;
        out += '\n';
    }
    return out;
}

inline nlohmann::json evaluation_to_json(const EvaluationReport& report) {
    auto agg_json = [](const KindAggregate& a) {
        return nlohmann::json{{"cases", a.cases},
                              {"detected", a.detected},
                              {"detection_rate", a.detection_rate},
                              {"mean_delay", a.mean_delay},
                              {"within_10_rate", a.within_10_rate},
                              {"localization_rate", a.localization_rate}};
    };
    nlohmann::json per_kind = nlohmann::json::object();
    for (const auto& [kind, agg] : report.per_kind) per_kind[kLeakKindNames[static_cast<int>(kind)]] = agg_json(agg);
    return nlohmann::json{{"per_kind", per_kind},
                          {"overall", agg_json(report.overall)},
                          {"false_alarms", report.false_alarms},
                          {"errored_cases", report.errored_cases}};
}

}  // namespace aqua
