// Command-line frontend: simulate, place-sensors, augment, forecast,
// detect, localize, report, evaluate. Exit codes: 0 success, 1 input error,
// 2 runtime failure in at least one case (the batch still completes).

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aquasentinel/augmentation.hpp"
#include "aquasentinel/config.hpp"
#include "aquasentinel/forecasting.hpp"
#include "aquasentinel/harness.hpp"
#include "aquasentinel/io.hpp"
#include "aquasentinel/localization.hpp"
#include "aquasentinel/network.hpp"
#include "aquasentinel/placement.hpp"
#include "aquasentinel/reporting.hpp"
#include "aquasentinel/rtca.hpp"
#include "aquasentinel/text_client_http.hpp"

namespace {

using namespace aqua;

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

ExperimentConfig resolve_config(const GlobalOptions& global) {
    ExperimentConfig cfg;
    if (!global.config_path.empty())
        cfg = load_experiment_config(read_text_file(global.config_path));
    if (global.seed) cfg.seed = *global.seed;
    return cfg;
}

std::string out_path(const GlobalOptions& global, const std::string& name) {
    std::filesystem::create_directories(global.out_dir);
    return (std::filesystem::path(global.out_dir) / name).string();
}

std::vector<DemandPattern> demand_patterns(const Network& net, const ExperimentConfig& cfg) {
    return detail::case_patterns(net, cfg.demand, mix_seed(cfg.seed, 0xC11));
}

int cmd_simulate(const GlobalOptions& global, const std::string& network_path,
                 const std::string& scenario_path, long steps_override) {
    ExperimentConfig cfg = resolve_config(global);
    Network net = load_network_file(network_path);
    std::optional<LeakScenario> scenario;
    if (!scenario_path.empty()) scenario = load_scenario_file(scenario_path);
    long steps = steps_override > 0 ? steps_override : cfg.steps;
    TimeSeries ts = simulate(net, demand_patterns(net, cfg), steps, scenario);
    write_text_file(out_path(global, "timeseries.csv"), timeseries_to_csv(net, ts));
    std::cout << "wrote " << out_path(global, "timeseries.csv") << " (" << steps << " steps)\n";
    return 0;
}

int cmd_place_sensors(const GlobalOptions& global, const std::string& network_path,
                      const std::string& baseline_path, PlacementConfig pcfg) {
    Network net = load_network_file(network_path);
    TimeSeries baseline = timeseries_from_csv(net, read_text_file(baseline_path));
    if (pcfg.k <= 0) pcfg.k = static_cast<int>(std::ceil(static_cast<double>(net.node_count()) * 0.25));
    auto scores = score_nodes(net, baseline, pcfg);
    auto selection = select_sensors(scores, net, pcfg);
    nlohmann::json jscores = nlohmann::json::array();
    for (const NodeScore& s : scores)
        jscores.push_back({{"node_id", s.node_id},
                           {"centrality", s.centrality},
                           {"hydraulic", s.hydraulic},
                           {"risk", s.risk},
                           {"total", s.total}});
    nlohmann::json out{{"selected", selection.selected},
                       {"budget_met", selection.budget_met},
                       {"scores", jscores}};
    write_text_file(out_path(global, "placement.json"), out.dump(2) + "\n");
    std::cout << "selected " << selection.selected.size() << " sensors\n";
    return 0;
}

int cmd_augment(const GlobalOptions& global, const std::string& network_path,
                const std::string& readings_path) {
    ExperimentConfig cfg = resolve_config(global);
    Network net = load_network_file(network_path);
    auto readings = sparse_readings_from_csv(net, read_text_file(readings_path));
    std::string csv = "step,node_id,flow_m3s,depth_m,pressure_m,provenance\n";
    StateFrame warm;
    bool have_warm = false;
    for (const auto& [step, frame_readings] : readings) {
        AugmentedFrame aug = augment(net, frame_readings, detail::expected_demands(net, cfg.demand, step),
                                     cfg.augmentation, have_warm ? &warm : nullptr);
        warm = aug.frame;
        have_warm = true;
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            const NodeState& s = aug.frame.states[v];
            csv += std::to_string(step) + ',' + net.node(static_cast<int>(v)).id + ',' +
                   format_double(s.flow_m3s) + ',' + format_double(s.depth_m) + ',' +
                   format_double(s.pressure_m) + ',' +
                   (aug.provenance[v] == Provenance::Measured ? "measured" : "inferred") + '\n';
        }
    }
    write_text_file(out_path(global, "augmented.csv"), csv);
    std::cout << "augmented " << readings.size() << " steps\n";
    return 0;
}

int cmd_forecast(const GlobalOptions& global, const std::string& network_path,
                 const std::string& series_path, long train_steps, std::size_t horizon) {
    ExperimentConfig cfg = resolve_config(global);
    Network net = load_network_file(network_path);
    TimeSeries series = timeseries_from_csv(net, read_text_file(series_path));
    const long n = static_cast<long>(series.frames.size());
    if (train_steps <= 0) train_steps = std::min<long>(cfg.leak_start_step, n / 2);
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    MixtureForecaster forecaster =
        MixtureForecaster::with_experts(cfg.experts, cfg.gate, cfg.input_window, cfg.demand.period_steps);
    forecaster.fit(net, std::span<const StateFrame>(series.frames.data(),
                                                    static_cast<std::size_t>(train_steps)));

    std::string csv = "step,node_id,channel,predicted,actual\n";
    const std::size_t cap = std::max(cfg.input_window, static_cast<std::size_t>(cfg.demand.period_steps)) + 2;
    std::vector<StateFrame> history;
    for (long t = 0; t < n; ++t) {
        if (history.size() >= cfg.input_window + (horizon - 1)) {
            StateFrame predicted;
            if (horizon <= 1) {
                ForecastFrame ff = forecaster.predict(net, history);
                predicted = ff.combined;
                forecaster.observe(ff, series.frames[static_cast<std::size_t>(t)], false);
            } else {
                // roll out from a window that ends horizon-1 steps back
                std::vector<StateFrame> window(history.begin(),
                                               history.end() - static_cast<long>(horizon - 1));
                predicted = forecaster.predict_sequence(net, window, horizon).back();
            }
            const StateFrame& actual = series.frames[static_cast<std::size_t>(t)];
            for (std::size_t v = 0; v < net.node_count(); ++v)
                for (int ch = 0; ch < kChannelCount; ++ch)
                    csv += std::to_string(t) + ',' + net.node(static_cast<int>(v)).id + ',' +
                           kChannelNames[ch] + ',' +
                           format_double(predicted.states[v].channel(static_cast<Channel>(ch))) + ',' +
                           format_double(actual.states[v].channel(static_cast<Channel>(ch))) + '\n';
        }
        history.push_back(series.frames[static_cast<std::size_t>(t)]);
        if (history.size() > cap) history.erase(history.begin());
    }
    write_text_file(out_path(global, "predictions.csv"), csv);
    std::cout << "wrote " << out_path(global, "predictions.csv") << "\n";
    return 0;
}

int cmd_detect(const GlobalOptions& global, const std::string& predictions_path,
               const std::string& observations_path, const std::string& network_path) {
    ExperimentConfig cfg = resolve_config(global);
    Network net = load_network_file(network_path);
    TimeSeries observations = timeseries_from_csv(net, read_text_file(observations_path));

    // predictions.csv rows: step,node_id,channel,predicted,actual
    std::map<long, std::map<int, double>> predicted;  // monitored channel only
    {
        std::istringstream in(read_text_file(predictions_path));
        std::string line;
        if (!std::getline(in, line)) throw std::invalid_argument("predictions csv: empty input");
        const std::string channel_name = kChannelNames[static_cast<int>(cfg.rtca.channel)];
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto fields = split_csv_line(line);
            if (fields.size() != 5)
                throw std::invalid_argument("predictions csv: expected 5 fields, got: " + line);
            if (fields[2] != channel_name) continue;
            predicted[std::stol(fields[0])][net.node_index(fields[1])] = std::stod(fields[3]);
        }
    }

    std::vector<DetectorState> states(net.node_count());
    std::vector<AnomalyEvent> events;
    std::string status_csv = "step,node_id,e_rt,e_c,tau_rt,tau_c,status\n";
    for (const auto& [step, node_predictions] : predicted) {
        if (step < 0 || step >= static_cast<long>(observations.frames.size()))
            throw std::invalid_argument("predictions reference step " + std::to_string(step) +
                                        " outside the observation series");
        for (const auto& [v, y_hat] : node_predictions) {
            double y = observations.frames[static_cast<std::size_t>(step)]
                           .states[static_cast<std::size_t>(v)]
                           .channel(cfg.rtca.channel);
            StepResult res =
                rtca_step(states[static_cast<std::size_t>(v)], y, y_hat, cfg.rtca, step, net.node(v).id);
            if (res.event) events.push_back(*res.event);
            status_csv += std::to_string(step) + ',' + net.node(v).id + ',' + format_double(res.e_rt) +
                          ',' + format_double(res.e_c) + ',' + format_double(res.tau_rt) + ',' +
                          format_double(res.tau_c) + ',' + kNodeStatusNames[static_cast<int>(res.status)] +
                          '\n';
        }
    }
    write_text_file(out_path(global, "events.json"), events_to_json(events).dump(2) + "\n");
    write_text_file(out_path(global, "status.csv"), status_csv);
    std::cout << events.size() << " confirmed event(s)\n";
    return 0;
}

int cmd_localize(const GlobalOptions& global, const std::string& network_path,
                 const std::string& events_path, const std::string& observations_path) {
    ExperimentConfig cfg = resolve_config(global);
    Network net = load_network_file(network_path);
    auto events = events_from_json(nlohmann::json::parse(read_text_file(events_path)));
    LocalizationResult result;
    if (!events.empty()) {
        long first = events.front().detected_at;
        for (const AnomalyEvent& e : events) first = std::min(first, e.detected_at);
        std::set<std::string> anomalous = co_anomalous_set(events, first, cfg.rtca.t_persist);
        std::map<std::string, double> flows;
        if (!observations_path.empty()) {
            TimeSeries obs = timeseries_from_csv(net, read_text_file(observations_path));
            if (first >= 0 && first < static_cast<long>(obs.frames.size()))
                for (std::size_t v = 0; v < net.node_count(); ++v)
                    flows[net.node(static_cast<int>(v)).id] =
                        obs.frames[static_cast<std::size_t>(first)].states[v].flow_m3s;
        }
        result = localize(net, anomalous, flows.empty() ? nullptr : &flows);
    }
    write_text_file(out_path(global, "localization.json"), localization_to_json(result).dump(2) + "\n");
    std::cout << result.sources.size() << " source(s), " << result.segments.size() << " segment(s)\n";
    return 0;
}

int cmd_report(const GlobalOptions& global, const std::string& network_path, const std::string& events_path,
               const std::string& localization_path, const std::string& template_path,
               const std::string& llm_endpoint, const std::string& llm_model) {
    Network net = load_network_file(network_path);
    auto events = events_from_json(nlohmann::json::parse(read_text_file(events_path)));
    LocalizationResult localization;
    if (!localization_path.empty())
        localization = localization_from_json(nlohmann::json::parse(read_text_file(localization_path)));
    std::string template_text = read_text_file(template_path);
    std::unique_ptr<TextClient> client;
    if (!llm_endpoint.empty()) client = std::make_unique<HttpTextClient>(llm_endpoint, llm_model);
    Report report = render_report(events, localization, net, template_text, client.get());
    write_text_file(out_path(global, "report.txt"), report.rendered);
    std::cout << "wrote " << out_path(global, "report.txt") << " (digest "
              << std::to_string(report.inputs_digest) << ")\n";
    return 0;
}

int cmd_evaluate(const GlobalOptions& global, const std::string& network_path, bool sparse) {
    ExperimentConfig cfg = resolve_config(global);
    if (sparse) cfg.sparse_mode = true;
    Network net = load_network_file(network_path);
    auto scenarios = generate_scenarios(net, cfg.seed, cfg.leak_start_step);
    std::vector<CaseResult> cases = run_cases(cfg, net, scenarios);
    if (cases.empty()) throw std::invalid_argument("scenario filter matched no cases: " + cfg.scenario_filter);
    EvaluationReport report = evaluate(cases);
    write_text_file(out_path(global, "cases.csv"), cases_to_csv(cases));
    write_text_file(out_path(global, "summary.json"), evaluation_to_json(report).dump(2) + "\n");
    std::printf("cases=%d detected=%d rate=%.4f within10=%.4f localization=%.4f false_alarms=%d errors=%d\n",
                report.overall.cases, report.overall.detected, report.overall.detection_rate,
                report.overall.within_10_rate, report.overall.localization_rate, report.false_alarms,
                report.errored_cases);
    return report.errored_cases > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pipeline leak detection toolkit"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "experiment config file (TOML key/value)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "root random seed");
    app.add_option("--out", global.out_dir, "output directory (default .)");

    std::string network_path, scenario_path, baseline_path, readings_path, series_path;
    std::string predictions_path, observations_path, events_path, localization_path;
    std::string template_path = "data/report_template.txt";
    std::string llm_endpoint, llm_model = "default";
    long steps_override = 0, train_steps = 0;
    std::size_t horizon = 1;
    bool sparse = false;
    PlacementConfig pcfg{1.0, 1.0, 1.0, 0, 3};

    auto* sim = app.add_subcommand("simulate", "generate a hydraulic time series");
    sim->add_option("--network", network_path, "network JSON")->required();
    sim->add_option("--scenario", scenario_path, "leak scenario JSON");
    sim->add_option("--steps", steps_override, "override step count");

    auto* place = app.add_subcommand("place-sensors", "score nodes and select a sensor set");
    place->add_option("--network", network_path, "network JSON")->required();
    place->add_option("--baseline", baseline_path, "baseline time-series CSV")->required();
    place->add_option("--alpha", pcfg.alpha, "centrality weight");
    place->add_option("--beta", pcfg.beta, "hydraulic weight");
    place->add_option("--gamma", pcfg.gamma, "risk weight");
    place->add_option("--k", pcfg.k, "sensor budget (0 = quarter of the nodes)");
    place->add_option("--d-min", pcfg.d_min, "minimum pairwise hop distance");

    auto* aug = app.add_subcommand("augment", "reconstruct full frames from sparse readings");
    aug->add_option("--network", network_path, "network JSON")->required();
    aug->add_option("--readings", readings_path, "sparse readings CSV")->required();

    auto* fc = app.add_subcommand("forecast", "one-step-ahead predictions over a series");
    fc->add_option("--network", network_path, "network JSON")->required();
    fc->add_option("--series", series_path, "time-series CSV")->required();
    fc->add_option("--train-steps", train_steps, "training split length (default min(432, half))");
    fc->add_option("--horizon", horizon, "forecast horizon in steps (default 1)");

    auto* det = app.add_subcommand("detect", "run the streaming detector over predictions");
    det->add_option("--network", network_path, "network JSON")->required();
    det->add_option("--predictions", predictions_path, "predictions CSV")->required();
    det->add_option("--observations", observations_path, "observed time-series CSV")->required();

    auto* loc = app.add_subcommand("localize", "trace confirmed anomalies to source segments");
    loc->add_option("--network", network_path, "network JSON")->required();
    loc->add_option("--events", events_path, "events JSON")->required();
    loc->add_option("--observations", observations_path, "series CSV for flow-ranked candidates");

    auto* rep = app.add_subcommand("report", "render a maintenance report");
    rep->add_option("--network", network_path, "network JSON")->required();
    rep->add_option("--events", events_path, "events JSON")->required();
    rep->add_option("--localization", localization_path, "localization JSON");
    rep->add_option("--template", template_path, "report template with section placeholders");
    rep->add_option("--llm-endpoint", llm_endpoint, "route sections through a text-generation endpoint");
    rep->add_option("--llm-model", llm_model, "model name for the endpoint");

    auto* eval = app.add_subcommand("evaluate", "run the full leak-scenario batch");
    eval->add_option("--network", network_path, "network JSON")->required();
    eval->add_flag("--sparse", sparse, "sensor subset plus augmentation instead of full observation");

    // global flags remain usable after the subcommand name
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) global.seed = seed_value;

    try {
        if (sim->parsed()) return cmd_simulate(global, network_path, scenario_path, steps_override);
        if (place->parsed()) return cmd_place_sensors(global, network_path, baseline_path, pcfg);
        if (aug->parsed()) return cmd_augment(global, network_path, readings_path);
        if (fc->parsed()) return cmd_forecast(global, network_path, series_path, train_steps, horizon);
        if (det->parsed()) return cmd_detect(global, predictions_path, observations_path, network_path);
        if (loc->parsed()) return cmd_localize(global, network_path, events_path, observations_path);
        if (rep->parsed())
            return cmd_report(global, network_path, events_path, localization_path, template_path,
                              llm_endpoint, llm_model);
        if (eval->parsed()) return cmd_evaluate(global, network_path, sparse);
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
