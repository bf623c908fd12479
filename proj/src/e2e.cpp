#include "opsforge/e2e.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

namespace opsforge::e2e {

logparse::Lexicon default_lexicon() {
    return logparse::Lexicon::from_words({
        "volume", "block",   "node",    "shard",  "request", "session",  "user",
        "cache",  "entry",   "cell",    "instance", "host",  "server",   "disk",
        "queue",  "worker",  "container", "image", "network", "port",    "path",
        "file",   "task",    "job",     "token",  "bucket",  "cluster",  "zone",
        "region", "trace",   "span",    "partition", "replica", "endpoint",
        "address", "vm",     "service", "customer", "account", "database",
        "table",   "index",  "key",     "page",   "tenant",   "device",
    });
}

logparse::Lexicon resolve_lexicon(const std::string& path) {
    if (path.empty()) return default_lexicon();
    return logparse::Lexicon::load(path);
}

// ---- sketch ------------------------------------------------------------------

SketchRunAnalysis analyze_sketch_on_run(const sim::Scenario& scenario,
                                        const sim::RunResult& baseline,
                                        const sim::RunResult& faulted,
                                        const sketch::SketchParams& params) {
    SketchRunAnalysis out;
    for (const auto& svc : scenario.services) {
        const auto& base_err = baseline.series(svc.id, "error_rate");
        const std::size_t n = base_err.values.size();
        std::vector<bool> flags(n, false);
        if (n >= static_cast<std::size_t>(params.window)) {
            for (const char* metric : {"error_rate", "p95_latency_ms"}) {
                const auto& train = baseline.series(svc.id, metric);
                const auto& test = faulted.series(svc.id, metric);
                std::vector<bool> no_anomaly(train.values.size(), false);
                sketch::PatternSet set = sketch::discover_patterns(train, params, &no_anomaly);
                auto verdicts = sketch::detect(test, set);
                auto sample_flags =
                    sketch::per_sample_labels(test.values.size(), params.window, verdicts);
                for (std::size_t i = 0; i < n && i < sample_flags.size(); ++i)
                    if (sample_flags[i]) flags[i] = true;
            }
        }

        std::vector<bool> truth(n, false);
        for (const auto& inc : faulted.ground_truth.incidents) {
            bool affected = std::find(inc.affected_services.begin(),
                                      inc.affected_services.end(),
                                      svc.id) != inc.affected_services.end();
            if (!affected) continue;
            for (std::size_t i = 0; i < n; ++i) {
                std::int64_t ts = base_err.ts_at(i);
                if (ts >= inc.window_start && ts < inc.window_end) truth[i] = true;
            }
        }
        out.counts.add(eval::point_adjusted_counts(flags, truth));
        out.service_flags[svc.id] = std::move(flags);
    }
    return out;
}

double kpi_suite_f1(int n_series, int n_points, std::uint64_t seed,
                    const sketch::SketchParams& params) {
    eval::Counts pooled;
    for (int s = 0; s < n_series; ++s) {
        // Patterns are learned from the clean history half and detection
        // runs over the half carrying the injected anomalies.
        sim::KpiSpec spec;
        spec.n_points = n_points;
        spec.clean_prefix = n_points / 2;
        sim::LabeledSeries gen =
            sim::generate_kpi(spec, seed * 1000 + static_cast<std::uint64_t>(s),
                              "kpi" + std::to_string(s));
        const std::size_t split = gen.series.values.size() / 2;

        telemetry::MetricSeries train = gen.series;
        train.values.assign(gen.series.values.begin(),
                            gen.series.values.begin() + static_cast<std::ptrdiff_t>(split));
        std::vector<bool> train_labels(split, false);

        telemetry::MetricSeries test = gen.series;
        test.start_ts = gen.series.ts_at(split);
        test.values.assign(gen.series.values.begin() + static_cast<std::ptrdiff_t>(split),
                           gen.series.values.end());
        std::vector<bool> test_labels(gen.labels.begin() + static_cast<std::ptrdiff_t>(split),
                                      gen.labels.end());

        sketch::PatternSet set = sketch::discover_patterns(train, params, &train_labels);
        auto verdicts = sketch::detect(test, set);
        auto flags = sketch::per_sample_labels(test.values.size(), params.window, verdicts);
        pooled.add(eval::point_adjusted_counts(flags, test_labels));
    }
    return pooled.f1();
}

// ---- logs ---------------------------------------------------------------------

namespace {

struct ParsedRun {
    std::vector<telemetry::LogRecord> records;
    std::vector<logparse::ParsedLog> parsed;
};

ParsedRun joint_parse_run(const std::vector<telemetry::LogRecord>& records,
                          const logparse::Lexicon& lexicon, logparse::KnowledgeDB& db) {
    ParsedRun out;
    out.records = records;
    out.parsed.reserve(records.size());
    for (const auto& r : records) {
        auto mined = logparse::mine_semantics(r, lexicon);
        out.parsed.push_back(logparse::joint_parse(r, mined, db));
    }
    return out;
}

ParsedRun syntax_parse_run(const std::vector<telemetry::LogRecord>& records,
                           logparse::SyntaxParser& parser) {
    ParsedRun out;
    out.records = records;
    out.parsed.reserve(records.size());
    for (const auto& r : records) {
        logparse::ParsedLog p;
        p.template_str = parser.parse_one(r.message);
        p.conceptualized_template = p.template_str;
        out.parsed.push_back(std::move(p));
    }
    return out;
}

eval::Counts session_detection_counts(const std::vector<logdetect::Session>& train_sessions,
                                      const std::vector<logdetect::Session>& eval_sessions,
                                      const std::set<std::string>& truth_anomalous,
                                      double epsilon) {
    logdetect::DetectionModel model(epsilon);
    model.train(train_sessions);
    eval::Counts c;
    for (const auto& s : eval_sessions) {
        bool predicted = model.detect(s).anomalous;
        bool truth = truth_anomalous.count(s.session_id) > 0;
        if (predicted && truth) ++c.tp;
        else if (predicted && !truth) ++c.fp;
        else if (!predicted && truth) ++c.fn;
    }
    return c;
}

}  // namespace

LogAnalysis analyze_logs(const sim::RunResult& baseline, const sim::RunResult& faulted,
                         const logparse::Lexicon& lexicon, const PipelineParams& params) {
    LogAnalysis out;

    // Joint route: one knowledge DB carried from baseline into the faulted run.
    logparse::KnowledgeDB db;
    ParsedRun joint_base = joint_parse_run(baseline.logs, lexicon, db);
    ParsedRun joint_fault = joint_parse_run(faulted.logs, lexicon, db);

    // Syntax route: one parser instance, templates evolve across both phases.
    logparse::SyntaxParser drain;
    ParsedRun syn_base = syntax_parse_run(baseline.logs, drain);
    ParsedRun syn_fault = syntax_parse_run(faulted.logs, drain);

    auto sessions = [](const ParsedRun& run) {
        return logdetect::sessionize(run.records, run.parsed,
                                     logdetect::SessionizeMode::BySessionId);
    };
    const auto& truth = faulted.ground_truth.anomalous_sessions;
    out.joint_counts = session_detection_counts(sessions(joint_base), sessions(joint_fault),
                                                truth, params.logdetect_epsilon);
    out.syntax_counts = session_detection_counts(sessions(syn_base), sessions(syn_fault),
                                                 truth, params.logdetect_epsilon);
    out.f1_joint = out.joint_counts.f1();
    out.f1_syntax = out.syntax_counts.f1();

    // Failure identification over ground-truth-labeled sessions, alternating
    // split into signature-learning and evaluation halves.
    std::map<std::string, std::vector<logdetect::Session>> by_type;
    for (const auto& s : sessions(joint_fault)) {
        auto it = faulted.ground_truth.session_fault_types.find(s.session_id);
        if (it == faulted.ground_truth.session_fault_types.end()) continue;
        if (by_type[it->second].size() < 20) by_type[it->second].push_back(s);
    }
    std::vector<std::pair<logdetect::Session, std::string>> train_labeled;
    std::vector<std::pair<logdetect::Session, std::string>> eval_labeled;
    for (const auto& [type, list] : by_type) {
        for (std::size_t i = 0; i < list.size(); ++i)
            (i % 2 == 0 ? train_labeled : eval_labeled).push_back({list[i], type});
    }
    if (!train_labeled.empty() && !eval_labeled.empty()) {
        try {
            auto signatures = logdetect::learn_signatures(train_labeled,
                                                          params.signature_margin);
            int correct = 0;
            for (const auto& [session, type] : eval_labeled) {
                auto ranked = logdetect::identify_failure(session, signatures);
                if (!ranked.empty() && ranked.front().failure_type == type) ++correct;
            }
            out.identify_evaluated = static_cast<int>(eval_labeled.size());
            out.identify_precision =
                static_cast<double>(correct) / static_cast<double>(eval_labeled.size());
        } catch (const ValidationError&) {
            out.identify_evaluated = 0;
            out.identify_precision = 0.0;
        }
    }
    return out;
}

// ---- tickets -------------------------------------------------------------------

incident::AffinityMap affinity_from_scenario(const sim::Scenario& scenario) {
    incident::AffinityMap m;
    for (const auto& p : scenario.products) m.product_to_services[p.name].insert(p.service);
    return m;
}

namespace {

std::set<std::string> ticket_tokens(const std::string& text) {
    std::set<std::string> out;
    for (auto& t : text::split_ws(text)) {
        std::string w;
        for (char c : t)
            if (std::isalnum(static_cast<unsigned char>(c)))
                w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (!w.empty()) out.insert(w);
    }
    return out;
}

bool event_in_incident(const incident::Event& event, const sim::Incident& inc,
                       std::int64_t slack) {
    if (std::find(inc.affected_services.begin(), inc.affected_services.end(),
                  event.service_id) == inc.affected_services.end())
        return false;
    for (std::int64_t ts : event.occurrences)
        if (ts >= inc.window_start - slack && ts <= inc.window_end + slack) return true;
    return false;
}

}  // namespace

std::vector<std::pair<incident::Features, bool>> label_pairs(
    const sim::RunResult& run, const std::vector<incident::Event>& events,
    const incident::TfidfModel& tfidf, const incident::AffinityMap& affinity,
    double lambda_s, std::int64_t window_slack_s) {
    std::vector<std::pair<incident::Features, bool>> out;
    for (const auto& ticket : run.tickets) {
        auto inc_it = run.ground_truth.ticket_incidents.find(ticket.ticket_id);
        const std::string incident_id =
            inc_it == run.ground_truth.ticket_incidents.end() ? "NONE" : inc_it->second;
        const sim::Incident* inc = nullptr;
        for (const auto& i : run.ground_truth.incidents)
            if (i.incident_id == incident_id) inc = &i;
        for (const auto& event : events) {
            // The correct anchor is the symptom event: it belongs to the
            // ticket's incident and to the service backing the product.
            bool positive = inc != nullptr &&
                            event_in_incident(event, *inc, window_slack_s) &&
                            affinity.affinity(ticket.product, event.service_id) > 0.0;
            out.push_back({incident::compute_features(ticket, event, tfidf, affinity, lambda_s),
                           positive});
        }
    }
    return out;
}

incident::ScorerWeights train_scorer_on_runs(const sim::Scenario& scenario,
                                             const std::vector<std::uint64_t>& seeds,
                                             const PipelineParams& params) {
    std::vector<std::pair<incident::Features, bool>> pooled;
    auto affinity = affinity_from_scenario(scenario);
    for (std::uint64_t seed : seeds) {
        sim::RunResult run = sim::run_scenario(scenario, seed);
        incident::BucketGrid grid;
        auto events = incident::parse_alerts(run.alerts, params.bucket_s, &grid);
        auto graph = incident::profile_incidents(events, grid, params.gip);
        std::vector<incident::Event> indicative;
        for (const auto& e : events)
            if (graph.component_of.count(e.event_id)) indicative.push_back(e);
        std::vector<std::string> docs;
        for (const auto& e : indicative) docs.push_back(e.template_text);
        auto tfidf = incident::TfidfModel::fit(docs);
        auto labeled = label_pairs(run, indicative, tfidf, affinity,
                                   params.correlation.lambda_s, scenario.metric_interval_s);
        pooled.insert(pooled.end(), labeled.begin(), labeled.end());
    }
    return incident::train_scorer(pooled);
}

TicketAnalysis analyze_tickets(const sim::Scenario& scenario, const sim::RunResult& run,
                               const PipelineParams& params,
                               const std::optional<incident::ScorerWeights>& weights) {
    TicketAnalysis out;
    incident::BucketGrid grid;
    auto events = incident::parse_alerts(run.alerts, params.bucket_s, &grid);
    auto graph = incident::profile_incidents(events, grid, params.gip);
    out.n_events = static_cast<int>(events.size());
    out.n_components = static_cast<int>(graph.components.size());

    // Link each ticket against indicative events only; regular events are
    // not valid anchors. The text model is fitted on the same event set.
    std::vector<incident::Event> indicative;
    for (const auto& e : events)
        if (graph.component_of.count(e.event_id)) indicative.push_back(e);

    std::vector<std::string> docs;
    for (const auto& e : indicative) docs.push_back(e.template_text);
    auto tfidf = incident::TfidfModel::fit(docs);
    auto affinity = affinity_from_scenario(scenario);
    out.weights = weights.value_or(incident::ScorerWeights{});

    std::vector<incident::TicketLink> links;
    for (const auto& t : run.tickets) {
        if (indicative.empty()) {
            links.push_back({t.ticket_id, "", 0.0, false});
            continue;
        }
        links.push_back(incident::correlate_ticket_event(t, indicative, out.weights, tfidf,
                                                         affinity, params.correlation));
    }
    out.clusters = incident::aggregate_tickets(links, graph);

    std::map<std::string, int> predicted;
    for (const auto& c : out.clusters)
        for (const auto& id : c.ticket_ids) predicted[id] = c.cluster_id;

    std::map<std::string, int> truth;
    std::map<std::string, int> incident_index;
    int next_singleton = 1000000;
    for (const auto& t : run.tickets) {
        auto it = run.ground_truth.ticket_incidents.find(t.ticket_id);
        std::string inc = it == run.ground_truth.ticket_incidents.end() ? "NONE" : it->second;
        if (inc == "NONE") {
            truth[t.ticket_id] = next_singleton++;
        } else {
            auto [iit, inserted] =
                incident_index.emplace(inc, static_cast<int>(incident_index.size()));
            truth[t.ticket_id] = iit->second;
        }
    }
    out.pair_counts = eval::pairwise_cluster_counts(predicted, truth);
    out.cluster_f1 = out.pair_counts.f1();

    // Look for a genuinely duplicate pair (same incident) sharing no token.
    for (const auto& c : out.clusters) {
        if (out.zero_overlap_duplicate_found) break;
        for (std::size_t i = 0; i < c.ticket_ids.size() && !out.zero_overlap_duplicate_found;
             ++i) {
            for (std::size_t j = i + 1; j < c.ticket_ids.size(); ++j) {
                if (truth[c.ticket_ids[i]] != truth[c.ticket_ids[j]] ||
                    truth[c.ticket_ids[i]] >= 1000000)
                    continue;
                const telemetry::Ticket* a = nullptr;
                const telemetry::Ticket* b = nullptr;
                for (const auto& t : run.tickets) {
                    if (t.ticket_id == c.ticket_ids[i]) a = &t;
                    if (t.ticket_id == c.ticket_ids[j]) b = &t;
                }
                if (!a || !b) continue;
                auto ta = ticket_tokens(a->text);
                auto tb = ticket_tokens(b->text);
                bool overlap = false;
                for (const auto& w : ta)
                    if (tb.count(w)) { overlap = true; break; }
                if (!overlap) {
                    out.zero_overlap_duplicate_found = true;
                    break;
                }
            }
        }
    }
    return out;
}

// ---- RCA -----------------------------------------------------------------------

RcaAnalysis analyze_rca(const sim::Scenario& scenario, const sim::RunResult& baseline,
                        const sim::RunResult& faulted, const PipelineParams& params) {
    RcaAnalysis out;
    auto sketched = analyze_sketch_on_run(scenario, baseline, faulted, params.sketch_params);

    // Per-service fixed-window log sessions through the joint parser.
    logparse::Lexicon lexicon = resolve_lexicon(params.lexicon_path);
    logparse::KnowledgeDB db;
    ParsedRun joint_base = joint_parse_run(baseline.logs, lexicon, db);
    ParsedRun joint_fault = joint_parse_run(faulted.logs, lexicon, db);

    struct ServiceSessions {
        std::vector<logdetect::Session> sessions;
        std::vector<bool> anomalous;
    };
    std::map<std::string, ServiceSessions> per_service;
    for (const auto& svc : scenario.services) {
        auto filter = [&](const ParsedRun& run) {
            ParsedRun f;
            for (std::size_t i = 0; i < run.records.size(); ++i) {
                if (run.records[i].service_id != svc.id) continue;
                f.records.push_back(run.records[i]);
                f.parsed.push_back(run.parsed[i]);
            }
            return f;
        };
        ParsedRun base_f = filter(joint_base);
        ParsedRun fault_f = filter(joint_fault);
        if (base_f.records.empty() || fault_f.records.empty()) continue;
        // Request-scoped sessions per service: template order within one
        // request is structured; fixed windows would interleave unrelated
        // requests and turn the bigram statistics into noise.
        auto train_sessions = logdetect::sessionize(base_f.records, base_f.parsed,
                                                    logdetect::SessionizeMode::BySessionId);
        auto eval_sessions = logdetect::sessionize(fault_f.records, fault_f.parsed,
                                                   logdetect::SessionizeMode::BySessionId);
        logdetect::DetectionModel model(params.logdetect_epsilon);
        model.train(train_sessions);
        ServiceSessions ss;
        ss.sessions = eval_sessions;
        for (const auto& s : eval_sessions) ss.anomalous.push_back(model.detect(s).anomalous);
        per_service[svc.id] = std::move(ss);
    }

    // Dependency intensity over the faulted run's traces (reported edges).
    auto status = depgraph::build_status_series(faulted.spans, scenario.metric_interval_s);
    auto all_edges = depgraph::estimate_intensity(status, faulted.spans, params.intensity);
    for (const auto& e : all_edges)
        if (e.caller != "client") out.edges.push_back(e);

    // Localization uses intensities estimated inside each incident's window
    // so that an edge that cascaded during one incident does not steer the
    // walk during an unrelated one.
    auto window_edges = [&](std::int64_t w_start, std::int64_t w_end) {
        const std::int64_t margin =
            scenario.metric_interval_s * (params.intensity.max_lag + 2);
        std::vector<telemetry::TraceSpan> spans;
        for (const auto& s : faulted.spans)
            if (s.start_ts >= static_cast<double>(w_start - margin) &&
                s.start_ts < static_cast<double>(w_end + margin))
                spans.push_back(s);
        auto st = depgraph::build_status_series(spans, scenario.metric_interval_s);
        std::vector<depgraph::DependencyEdge> edges;
        for (const auto& e : depgraph::estimate_intensity(st, spans, params.intensity))
            if (e.caller != "client") edges.push_back(e);
        return edges;
    };

    int top1 = 0, top3 = 0;
    for (const auto& inc : faulted.ground_truth.incidents) {
        RcaOutcome oc;
        oc.incident_id = inc.incident_id;
        oc.culprit = inc.fault.target_service;

        std::map<std::string, double> fused;
        for (const auto& svc : scenario.services) {
            depgraph::ModalityScores scores;

            const auto& grid_series = faulted.series(svc.id, "error_rate");
            const auto& flags = sketched.service_flags.at(svc.id);
            int in_window = 0, flagged = 0;
            for (std::size_t i = 0; i < flags.size(); ++i) {
                std::int64_t ts = grid_series.ts_at(i);
                if (ts < inc.window_start || ts >= inc.window_end) continue;
                ++in_window;
                if (flags[i]) ++flagged;
            }
            if (in_window > 0)
                scores.metrics = static_cast<double>(flagged) / static_cast<double>(in_window);

            auto ps = per_service.find(svc.id);
            if (ps != per_service.end()) {
                int n_sessions = 0, n_anom = 0;
                for (std::size_t i = 0; i < ps->second.sessions.size(); ++i) {
                    const auto& s = ps->second.sessions[i];
                    if (s.end_ts <= inc.window_start || s.start_ts >= inc.window_end) continue;
                    ++n_sessions;
                    if (ps->second.anomalous[i]) ++n_anom;
                }
                if (n_sessions > 0)
                    scores.logs = static_cast<double>(n_anom) / static_cast<double>(n_sessions);
            }

            const auto& base_p95 = baseline.series(svc.id, "p95_latency_ms");
            const auto& fault_p95 = faulted.series(svc.id, "p95_latency_ms");
            double mu = stats::mean(base_p95.values);
            double sd = stats::stddev(base_p95.values);
            if (sd > 0.0) {
                double max_z = 0.0;
                for (std::size_t i = 0; i < fault_p95.values.size(); ++i) {
                    std::int64_t ts = fault_p95.ts_at(i);
                    if (ts < inc.window_start || ts >= inc.window_end) continue;
                    max_z = std::max(max_z, (fault_p95.values[i] - mu) / sd);
                }
                scores.traces = stats::clamp01(max_z / 6.0);
            }

            fused[svc.id] = depgraph::fuse_anomaly_scores(scores, params.fuse_weights);
        }
        oc.fused = fused;

        auto ranking =
            depgraph::localize(fused, window_edges(inc.window_start, inc.window_end),
                               params.localize);
        oc.alarmed = ranking.alarm;
        oc.ranking = ranking.ranking;
        if (ranking.alarm) {
            for (std::size_t k = 0; k < ranking.ranking.size() && k < 3; ++k) {
                if (ranking.ranking[k].first == oc.culprit) {
                    oc.top3 = true;
                    if (k == 0) oc.top1 = true;
                }
            }
        }
        if (oc.top1) ++top1;
        if (oc.top3) ++top3;
        out.outcomes.push_back(std::move(oc));
    }
    if (!out.outcomes.empty()) {
        out.top1_rate = static_cast<double>(top1) / static_cast<double>(out.outcomes.size());
        out.top3_rate = static_cast<double>(top3) / static_cast<double>(out.outcomes.size());
    }
    return out;
}

// ---- full pipeline ---------------------------------------------------------------

json run_e2e(const sim::Scenario& scenario, std::uint64_t seed, const std::string& out_dir,
             const PipelineParams& params, bool quiet) {
    namespace fs = std::filesystem;
    auto t0 = std::chrono::steady_clock::now();
    auto note = [&](const std::string& msg) {
        if (!quiet) std::cerr << "[e2e] " << msg << "\n";
    };

    fs::create_directories(out_dir);
    note("simulating scenario '" + scenario.name + "' (seed " + std::to_string(seed) + ")");
    sim::RunResult faulted = sim::run_scenario(scenario, seed);
    sim::RunResult baseline = sim::run_scenario(sim::without_faults(scenario), seed);
    sim::write_run(faulted, out_dir + "/run");

    json report;
    report["schema_version"] = 1;
    report["scenario"] = scenario.name;
    report["seed"] = seed;

    note("sketch: KPI suite benchmark");
    double kpi_min_f1 = 1.0;
    for (int s = 0; s < params.kpi_seeds; ++s)
        kpi_min_f1 = std::min(kpi_min_f1,
                              kpi_suite_f1(params.kpi_series_per_seed, params.kpi_points,
                                           seed + static_cast<std::uint64_t>(s),
                                           params.sketch_params));

    note("sketch: scenario metrics");
    auto sketched = analyze_sketch_on_run(scenario, baseline, faulted, params.sketch_params);
    report["sketch"] = {{"kpi_suite_min_f1", kpi_min_f1},
                        {"scenario_point_adjusted_f1", sketched.counts.f1()},
                        {"scenario_precision", sketched.counts.precision()},
                        {"scenario_recall", sketched.counts.recall()}};

    note("logs: parsing and session detection");
    logparse::Lexicon lexicon = resolve_lexicon(params.lexicon_path);
    LogAnalysis logs = analyze_logs(baseline, faulted, lexicon, params);
    report["logdetect"] = {{"f1_joint_parse", logs.f1_joint},
                           {"f1_syntax_parse", logs.f1_syntax},
                           {"identify_precision", logs.identify_precision},
                           {"identify_evaluated", logs.identify_evaluated}};

    note("tickets: aggregation");
    std::optional<incident::ScorerWeights> weights;
    if (params.train_scorer) {
        // Train the link scorer on pairs pooled over dedicated training runs
        // of the same scenario (indicative events only; tickets never link
        // to regular ones).
        try {
            weights = train_scorer_on_runs(scenario, {seed + 101, seed + 102, seed + 103},
                                           params);
        } catch (const ValidationError&) {
            // single-class labels (e.g. a no-fault scenario): default weights
        }
    }
    TicketAnalysis tickets = analyze_tickets(scenario, faulted, params, weights);
    report["tickets"] = {{"cluster_f1", tickets.cluster_f1},
                         {"pair_precision", tickets.pair_counts.precision()},
                         {"pair_recall", tickets.pair_counts.recall()},
                         {"zero_overlap_duplicate", tickets.zero_overlap_duplicate_found},
                         {"n_tickets", faulted.tickets.size()},
                         {"n_events", tickets.n_events},
                         {"n_components", tickets.n_components},
                         {"scorer", tickets.weights.to_json()}};
    {
        json clusters = json::array();
        for (const auto& c : tickets.clusters) clusters.push_back(c.to_json());
        std::ofstream f(out_dir + "/clusters.json");
        f << clusters.dump(2) << "\n";
    }

    note("dependencies: intensity and RCA");
    RcaAnalysis rca = analyze_rca(scenario, baseline, faulted, params);
    {
        json edges = json::array();
        for (const auto& e : rca.edges) edges.push_back(e.to_json());
        std::ofstream f(out_dir + "/edges.json");
        f << edges.dump(2) << "\n";
    }

    // Strong/weak edge summary against the scenario's cascade settings.
    std::set<std::string> fault_targets;
    for (const auto& f : scenario.faults) fault_targets.insert(f.target_service);
    std::optional<double> strong_min, weak_max;
    for (const auto& spec_edge : scenario.edges) {
        double estimated = 0.0;
        for (const auto& e : rca.edges)
            if (e.caller == spec_edge.caller && e.callee == spec_edge.callee)
                estimated = e.intensity;
        if (spec_edge.cascade_probability >= 0.9 && fault_targets.count(spec_edge.callee))
            strong_min = std::min(strong_min.value_or(1.0), estimated);
        if (spec_edge.cascade_probability == 0.0)
            weak_max = std::max(weak_max.value_or(0.0), estimated);
    }
    json deps_j;
    deps_j["strong_edge_min_intensity"] = strong_min ? json(*strong_min) : json();
    deps_j["weak_edge_max_intensity"] = weak_max ? json(*weak_max) : json();
    report["deps"] = deps_j;

    json rca_j;
    rca_j["top1_rate"] = rca.top1_rate;
    rca_j["top3_rate"] = rca.top3_rate;
    json outcomes = json::array();
    for (const auto& oc : rca.outcomes) {
        json oj;
        oj["incident_id"] = oc.incident_id;
        oj["culprit"] = oc.culprit;
        oj["alarmed"] = oc.alarmed;
        oj["top1"] = oc.top1;
        oj["top3"] = oc.top3;
        json rank = json::array();
        for (const auto& [svc, score] : oc.ranking)
            rank.push_back({{"service", svc}, {"score", score}});
        oj["ranking"] = rank;
        outcomes.push_back(oj);
    }
    rca_j["incidents"] = outcomes;
    report["rca"] = rca_j;

    note("resilience: CRASH campaign over non-entry services");
    {
        std::set<std::string> entries;
        for (const auto& e : scenario.entry_services()) entries.insert(e);
        std::vector<std::string> targets;
        for (const auto& svc : scenario.services)
            if (!entries.count(svc.id)) targets.push_back(svc.id);
        json res_j;
        if (!targets.empty()) {
            auto campaign = resilience::adaptive_campaign(
                scenario, targets, {sim::FaultType::CRASH}, seed, {});
            res_j = campaign.to_json();
            std::ofstream f(out_dir + "/resilience.json");
            f << res_j.dump(2) << "\n";
        }
        report["resilience"] = res_j;
    }

    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report["elapsed_s"] = elapsed;

    bool c1 = kpi_min_f1 >= 0.8;
    bool c6 = tickets.cluster_f1 >= 0.87 && tickets.zero_overlap_duplicate_found;
    bool c8 = strong_min.has_value() && weak_max.has_value() && *strong_min >= 0.7 &&
              *weak_max <= 0.3;
    bool c9 = rca.top1_rate >= 0.7 && rca.top3_rate >= 0.9;
    report["criteria"] = {
        {"sketch_kpi_f1", {{"value", kpi_min_f1}, {"threshold", 0.8}, {"pass", c1}}},
        {"ticket_cluster_f1",
         {{"value", tickets.cluster_f1},
          {"threshold", 0.87},
          {"zero_overlap_duplicate", tickets.zero_overlap_duplicate_found},
          {"pass", c6}}},
        {"dependency_intensity",
         {{"strong_min", strong_min ? json(*strong_min) : json()},
          {"weak_max", weak_max ? json(*weak_max) : json()},
          {"pass", c8}}},
        {"rca_hit_rate",
         {{"top1", rca.top1_rate}, {"top3", rca.top3_rate}, {"pass", c9}}},
        {"all_pass", c1 && c6 && c8 && c9}};

    std::ofstream f(out_dir + "/report.json");
    f << report.dump(2) << "\n";
    note("report written to " + out_dir + "/report.json (" + std::to_string(elapsed) + " s)");
    return report;
}

}  // namespace opsforge::e2e
