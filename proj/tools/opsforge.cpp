// opsforge: command-line front end for the AIOps pipeline. Every subcommand
// reads/writes JSON or JSONL files; numeric parameters resolve as
// flag > config file > built-in default.

#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "opsforge/e2e.hpp"

using json = nlohmann::json;
using namespace opsforge;

namespace {

const std::set<std::string> kConfigTopKeys = {"paths", "out_dir", "seed", "params"};
const std::set<std::string> kConfigPathKeys = {"scenario", "metrics", "logs",    "traces",
                                               "alerts",   "tickets", "lexicon", "affinity",
                                               "patterns", "model",   "signatures", "weights"};
const std::set<std::string> kConfigParamGroups = {"sketch", "logdetect", "incident",
                                                  "depgraph", "resilience", "e2e"};

struct Config {
    json data = json::object();

    static Config load(const std::string& path) {
        Config c;
        if (path.empty()) return c;
        std::ifstream in(path);
        if (!in) throw ValidationError("--config: cannot open '" + path + "'");
        try {
            c.data = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ValidationError("--config: malformed JSON: " + std::string(e.what()));
        }
        for (auto it = c.data.begin(); it != c.data.end(); ++it)
            if (!kConfigTopKeys.count(it.key()))
                throw ValidationError("config: unknown key '" + it.key() + "'");
        if (c.data.contains("paths"))
            for (auto it = c.data["paths"].begin(); it != c.data["paths"].end(); ++it) {
                if (!kConfigPathKeys.count(it.key()))
                    throw ValidationError("config paths: unknown key '" + it.key() + "'");
                if (!std::filesystem::exists(it.value().get<std::string>()))
                    throw ValidationError("config paths." + it.key() + ": file does not exist: " +
                                          it.value().get<std::string>());
            }
        if (c.data.contains("params"))
            for (auto it = c.data["params"].begin(); it != c.data["params"].end(); ++it)
                if (!kConfigParamGroups.count(it.key()))
                    throw ValidationError("config params: unknown group '" + it.key() + "'");
        return c;
    }

    double num(const std::string& group, const std::string& key, double fallback) const {
        if (data.contains("params") && data["params"].contains(group) &&
            data["params"][group].contains(key))
            return data["params"][group][key].get<double>();
        return fallback;
    }
    std::string path(const std::string& key, const std::string& fallback) const {
        if (data.contains("paths") && data["paths"].contains(key))
            return data["paths"][key].get<std::string>();
        return fallback;
    }
    std::string out_dir(const std::string& fallback) const {
        return data.value("out_dir", fallback);
    }
    std::uint64_t seed(std::uint64_t fallback) const {
        return data.value("seed", fallback);
    }
};

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    return json::parse(in);
}

// Resolve a numeric parameter with flag > config > default precedence.
double resolve(const CLI::Option* opt, double flag_value, const Config& cfg,
               const std::string& group, const std::string& key, double fallback) {
    if (opt != nullptr && opt->count() > 0) return flag_value;
    return cfg.num(group, key, fallback);
}

const telemetry::MetricSeries& select_series(const std::vector<telemetry::MetricSeries>& all,
                                             const std::string& service,
                                             const std::string& metric) {
    for (const auto& m : all)
        if ((service.empty() || m.service_id == service) &&
            (metric.empty() || m.metric_name == metric))
            return m;
    throw ValidationError("--service/--metric: no matching series in the metrics file");
}

std::vector<logparse::ParsedLog> parse_joint(const std::vector<telemetry::LogRecord>& records,
                                             const logparse::Lexicon& lexicon,
                                             logparse::KnowledgeDB& db) {
    std::vector<logparse::ParsedLog> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(logparse::joint_parse(r, logparse::mine_semantics(r, lexicon), db));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"opsforge: AIOps pipeline over simulated microservice telemetry"};
    app.require_subcommand(1);
    std::string config_path;
    bool quiet = false;
    app.add_option("--config", config_path, "RunConfig JSON (paths, params, out_dir, seed)");
    app.add_flag("--quiet", quiet, "suppress progress text on stderr");

    // ---- simulate ----
    auto* sim_cmd = app.add_subcommand("simulate", "run a scenario and write telemetry files");
    std::string sim_scenario, sim_out = "out";
    std::uint64_t sim_seed = 7;
    auto* sim_scn_opt = sim_cmd->add_option("--scenario", sim_scenario, "scenario JSON file");
    sim_cmd->add_option("--seed", sim_seed, "simulation seed");
    sim_cmd->add_option("--out", sim_out, "output directory");

    // ---- sketch ----
    auto* sketch_cmd = app.add_subcommand("sketch", "KPI pattern sketching");
    sketch_cmd->require_subcommand(1);
    std::string sk_metrics, sk_patterns, sk_out, sk_service, sk_metric;
    int sk_window = 12, sk_promote = 3;
    double sk_theta = 1.5, sk_rare = 0.05;
    auto add_sketch_common = [&](CLI::App* c) {
        c->add_option("--metrics", sk_metrics, "metrics.jsonl")->required();
        c->add_option("--service", sk_service, "series selector: service id");
        c->add_option("--metric", sk_metric, "series selector: metric name");
    };
    auto* sk_train = sketch_cmd->add_subcommand("train", "discover patterns from a series");
    add_sketch_common(sk_train);
    auto* sk_train_w = sk_train->add_option("--window", sk_window, "subsequence length");
    auto* sk_train_t = sk_train->add_option("--theta", sk_theta, "match-distance threshold");
    auto* sk_train_p = sk_train->add_option("--rare-fraction", sk_rare, "rarity threshold");
    auto* sk_train_k = sk_train->add_option("--promote-k", sk_promote, "candidate promotions");
    sk_train->add_option("--out", sk_out, "pattern set JSON")->required();
    auto* sk_detect = sketch_cmd->add_subcommand("detect", "detect against a pattern set");
    add_sketch_common(sk_detect);
    sk_detect->add_option("--patterns", sk_patterns, "pattern set JSON")->required();
    sk_detect->add_option("--out", sk_out, "verdicts JSON")->required();
    auto* sk_adapt = sketch_cmd->add_subcommand("adapt", "adapt a pattern set to a stream");
    add_sketch_common(sk_adapt);
    sk_adapt->add_option("--patterns", sk_patterns, "pattern set JSON")->required();
    sk_adapt->add_option("--out", sk_out, "updated pattern set JSON")->required();

    // ---- parse ----
    auto* parse_cmd = app.add_subcommand("parse", "semantic (or syntax-only) log parsing");
    std::string p_logs, p_lexicon, p_db, p_out = "parsed.jsonl";
    bool p_syntax_only = false;
    int p_depth = 4;
    double p_sim = 0.5;
    parse_cmd->add_option("--logs", p_logs, "logs.jsonl")->required();
    parse_cmd->add_option("--lexicon", p_lexicon, "concept noun list, one per line");
    parse_cmd->add_option("--db", p_db, "knowledge DB JSON (read and updated)");
    parse_cmd->add_option("--out", p_out, "parsed output JSONL");
    parse_cmd->add_flag("--syntax-only", p_syntax_only, "Drain-style templates only");
    auto* p_depth_opt = parse_cmd->add_option("--depth", p_depth, "syntax tree depth");
    auto* p_sim_opt = parse_cmd->add_option("--sim-threshold", p_sim, "syntax similarity");

    // ---- logdetect ----
    auto* ld_cmd = app.add_subcommand("logdetect", "session anomaly detection");
    ld_cmd->require_subcommand(1);
    std::string ld_logs, ld_lexicon, ld_model, ld_signatures, ld_labels, ld_out;
    std::string ld_mode = "id";
    double ld_epsilon = 0.01, ld_margin = 0.3;
    std::int64_t ld_window_s = 60;
    auto add_ld_common = [&](CLI::App* c) {
        c->add_option("--logs", ld_logs, "logs.jsonl")->required();
        c->add_option("--lexicon", ld_lexicon, "concept noun list");
        c->add_option("--session-mode", ld_mode, "id | window");
        c->add_option("--window-s", ld_window_s, "window seconds for window mode");
    };
    auto* ld_train = ld_cmd->add_subcommand("train", "train the normal profile");
    add_ld_common(ld_train);
    auto* ld_eps_opt = ld_train->add_option("--epsilon", ld_epsilon, "bigram probability floor");
    ld_train->add_option("--out", ld_out, "model JSON")->required();
    auto* ld_detect = ld_cmd->add_subcommand("detect", "detect anomalous sessions");
    add_ld_common(ld_detect);
    ld_detect->add_option("--model", ld_model, "model JSON")->required();
    ld_detect->add_option("--out", ld_out, "verdicts JSON")->required();
    auto* ld_learn = ld_cmd->add_subcommand("learn", "learn failure signatures");
    add_ld_common(ld_learn);
    ld_learn->add_option("--labels", ld_labels, "JSON map session_id -> failure type")
        ->required();
    auto* ld_margin_opt = ld_learn->add_option("--margin", ld_margin, "frequency margin");
    ld_learn->add_option("--out", ld_out, "signatures JSON")->required();
    auto* ld_identify = ld_cmd->add_subcommand("identify", "rank failure types per session");
    add_ld_common(ld_identify);
    ld_identify->add_option("--signatures", ld_signatures, "signatures JSON")->required();
    ld_identify->add_option("--out", ld_out, "ranking JSON")->required();

    // ---- tickets ----
    auto* tk_cmd = app.add_subcommand("tickets", "incident-aware ticket aggregation");
    tk_cmd->require_subcommand(1);
    std::string tk_alerts, tk_tickets, tk_affinity, tk_weights, tk_out = "clusters.json";
    std::int64_t tk_bucket = 300;
    double tk_regular = 0.5, tk_link_tau = 0.5, tk_lambda = 600.0, tk_score_s = 0.5;
    std::int64_t tk_delta = 1;
    auto* tk_agg = tk_cmd->add_subcommand("aggregate", "alerts + tickets -> ticket clusters");
    tk_agg->add_option("--alerts", tk_alerts, "alerts.jsonl")->required();
    tk_agg->add_option("--tickets", tk_tickets, "tickets.jsonl")->required();
    tk_agg->add_option("--affinity", tk_affinity, "product -> services JSON map");
    tk_agg->add_option("--weights", tk_weights, "scorer weights JSON");
    auto* tk_bucket_opt = tk_agg->add_option("--bucket-s", tk_bucket, "bucket seconds");
    auto* tk_regular_opt =
        tk_agg->add_option("--regular-threshold", tk_regular, "occupancy above is regular");
    auto* tk_delta_opt = tk_agg->add_option("--link-window", tk_delta, "bucket tolerance");
    auto* tk_tau_opt = tk_agg->add_option("--link-threshold", tk_link_tau, "Jaccard to link");
    auto* tk_lambda_opt = tk_agg->add_option("--lambda", tk_lambda, "temporal decay seconds");
    auto* tk_score_opt = tk_agg->add_option("--score-threshold", tk_score_s, "min link score");
    tk_agg->add_option("--out", tk_out, "clusters JSON");

    // ---- deps ----
    auto* deps_cmd = app.add_subcommand("deps", "dependency intensity estimation");
    deps_cmd->require_subcommand(1);
    std::string dp_traces, dp_out = "edges.json";
    std::int64_t dp_interval = 30;
    int dp_lag = 3;
    double dp_err = 0.1, dp_z = 3.0;
    auto* dp_intensity = deps_cmd->add_subcommand("intensity", "traces -> weighted edges");
    dp_intensity->add_option("--traces", dp_traces, "traces.jsonl")->required();
    auto* dp_interval_opt = dp_intensity->add_option("--interval-s", dp_interval, "grid step");
    auto* dp_lag_opt = dp_intensity->add_option("--max-lag", dp_lag, "propagation lag bound");
    auto* dp_err_opt =
        dp_intensity->add_option("--degraded-error-rate", dp_err, "degradation threshold");
    auto* dp_z_opt = dp_intensity->add_option("--degraded-latency-z", dp_z, "latency z bound");
    dp_intensity->add_option("--out", dp_out, "edges JSON");

    // ---- rca ----
    auto* rca_cmd = app.add_subcommand("rca", "root cause localization");
    rca_cmd->require_subcommand(1);
    std::string rc_scores, rc_edges, rc_out = "ranking.json";
    double rc_alarm = 0.3, rc_damping = 0.85;
    auto* rc_localize = rca_cmd->add_subcommand("localize", "fused scores + edges -> ranking");
    rc_localize->add_option("--scores", rc_scores, "JSON map service -> fused score")
        ->required();
    rc_localize->add_option("--edges", rc_edges, "edges JSON from deps intensity")->required();
    auto* rc_alarm_opt = rc_localize->add_option("--alarm-threshold", rc_alarm, "alarm level");
    auto* rc_damp_opt = rc_localize->add_option("--damping", rc_damping, "walk damping");
    rc_localize->add_option("--out", rc_out, "ranking JSON");

    // ---- resilience ----
    auto* res_cmd = app.add_subcommand("resilience", "fault injection resilience testing");
    res_cmd->require_subcommand(1);
    std::string rs_scenario, rs_target, rs_type = "CRASH", rs_services, rs_faults, rs_out;
    double rs_intensity = 0.5, rs_i0 = 0.1, rs_g = 2.0, rs_m = 0.2;
    std::int64_t rs_duration = 300, rs_offset = 0;
    std::uint64_t rs_seed = 7;
    auto* rs_test = res_cmd->add_subcommand("test", "one paired baseline/faulted run");
    auto* rs_test_scn = rs_test->add_option("--scenario", rs_scenario, "scenario JSON");
    rs_test->add_option("--target", rs_target, "target service")->required();
    rs_test->add_option("--fault-type", rs_type, "DELAY | ERROR | CRASH | CPU");
    rs_test->add_option("--intensity", rs_intensity, "fault intensity in (0,1]");
    rs_test->add_option("--duration-s", rs_duration, "fault duration");
    rs_test->add_option("--start-offset-s", rs_offset, "fault start offset into the run");
    rs_test->add_option("--seed", rs_seed, "paired seed");
    rs_test->add_option("--out", rs_out, "report JSON");
    auto* rs_campaign = res_cmd->add_subcommand("campaign", "adaptive escalation matrix");
    auto* rs_camp_scn = rs_campaign->add_option("--scenario", rs_scenario, "scenario JSON");
    rs_campaign->add_option("--services", rs_services, "comma-separated services")->required();
    rs_campaign->add_option("--faults", rs_faults, "comma-separated fault types")->required();
    rs_campaign->add_option("--seed", rs_seed, "paired seed");
    auto* rs_i0_opt = rs_campaign->add_option("--i0", rs_i0, "initial intensity");
    auto* rs_g_opt = rs_campaign->add_option("--escalation", rs_g, "escalation factor");
    auto* rs_m_opt = rs_campaign->add_option("--manifest-threshold", rs_m, "perf threshold");
    rs_campaign->add_option("--out", rs_out, "matrix JSON");

    // ---- e2e ----
    auto* e2e_cmd = app.add_subcommand("e2e", "simulate + full analysis + report");
    std::string ee_scenario, ee_out = "e2e_out", ee_lexicon;
    std::uint64_t ee_seed = 7;
    auto* ee_scn_opt = e2e_cmd->add_option("--scenario", ee_scenario, "scenario JSON");
    e2e_cmd->add_option("--seed", ee_seed, "simulation seed");
    e2e_cmd->add_option("--out", ee_out, "output directory");
    e2e_cmd->add_option("--lexicon", ee_lexicon, "concept noun list");

    // Global flags (--config, --quiet) remain usable after a subcommand name.
    std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
        for (auto* sub : cmd->get_subcommands({})) {
            sub->fallthrough();
            enable_fallthrough(sub);
        }
    };
    enable_fallthrough(&app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::RequiredError& e) {
        // A missing/unknown subcommand is a usage error; a missing required
        // flag is a validation error naming the flag.
        if (std::string(e.what()).find("subcommand") != std::string::npos) {
            std::cerr << "error: " << e.what() << "\n" << app.help() << "\n";
            return 2;
        }
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CLI::ConversionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help() << "\n";
        return 2;
    }

    try {
        Config cfg = Config::load(config_path);

        auto require_path = [&](const CLI::Option* opt, std::string& value,
                                const std::string& cfg_key, const char* flag) {
            if ((opt == nullptr || opt->count() == 0) && value.empty())
                value = cfg.path(cfg_key, "");
            if (value.empty())
                throw ValidationError(std::string(flag) + ": required (flag or config paths." +
                                      cfg_key + ")");
        };

        if (sim_cmd->parsed()) {
            require_path(sim_scn_opt, sim_scenario, "scenario", "--scenario");
            auto scenario = sim::Scenario::load(sim_scenario);
            auto result = sim::run_scenario(scenario, cfg.seed(sim_seed));
            sim::write_run(result, cfg.out_dir(sim_out));
            if (!quiet)
                std::cerr << "wrote " << cfg.out_dir(sim_out) << " (" << result.spans.size()
                          << " spans, " << result.logs.size() << " logs, "
                          << result.tickets.size() << " tickets)\n";
        } else if (sketch_cmd->parsed()) {
            auto all = telemetry::load_metrics(sk_metrics);
            const auto& series = select_series(all, sk_service, sk_metric);
            if (sk_train->parsed()) {
                sketch::SketchParams params;
                params.window = static_cast<int>(
                    resolve(sk_train_w, sk_window, cfg, "sketch", "window", 12));
                params.theta = resolve(sk_train_t, sk_theta, cfg, "sketch", "theta", 1.5);
                params.rare_fraction =
                    resolve(sk_train_p, sk_rare, cfg, "sketch", "rare_fraction", 0.05);
                params.promote_k = static_cast<int>(
                    resolve(sk_train_k, sk_promote, cfg, "sketch", "promote_k", 3));
                auto set = sketch::discover_patterns(series, params);
                set.save(sk_out);
                if (!quiet)
                    std::cerr << "discovered " << set.patterns.size() << " patterns\n";
            } else if (sk_detect->parsed()) {
                auto set = sketch::PatternSet::load(sk_patterns);
                auto verdicts = sketch::detect(series, set);
                json out = json::array();
                for (const auto& v : verdicts)
                    out.push_back({{"window_start", v.window_start},
                                   {"anomalous", v.anomalous},
                                   {"nearest_pattern", v.nearest_pattern},
                                   {"distance", v.distance}});
                write_json(out, sk_out);
            } else {
                auto set = sketch::PatternSet::load(sk_patterns);
                std::vector<std::vector<double>> windows;
                const auto w = static_cast<std::size_t>(set.window);
                for (std::size_t i = 0; i + w <= series.values.size(); i += w)
                    windows.push_back(std::vector<double>(series.values.begin() + i,
                                                          series.values.begin() + i + w));
                sketch::adapt(set, windows, series.ts_at(series.values.size() - 1));
                set.save(sk_out);
            }
        } else if (parse_cmd->parsed()) {
            auto records = telemetry::load_logs(p_logs);
            std::ofstream out(p_out, std::ios::trunc);
            if (!out) throw ValidationError("cannot open file for writing: " + p_out);
            if (p_syntax_only) {
                int depth = static_cast<int>(
                    resolve(p_depth_opt, p_depth, cfg, "logdetect", "depth", 4));
                double sim_t =
                    resolve(p_sim_opt, p_sim, cfg, "logdetect", "sim_threshold", 0.5);
                auto templates = logparse::syntax_parse(records, depth, sim_t);
                for (std::size_t i = 0; i < records.size(); ++i)
                    out << json{{"message", records[i].message}, {"template", templates[i]}}
                               .dump()
                        << "\n";
            } else {
                if (p_lexicon.empty()) p_lexicon = cfg.path("lexicon", "");
                auto lexicon = e2e::resolve_lexicon(p_lexicon);
                logparse::KnowledgeDB db;
                if (!p_db.empty() && std::filesystem::exists(p_db))
                    db = logparse::KnowledgeDB::load(p_db);
                for (const auto& r : records) {
                    auto parsed = logparse::joint_parse(r, logparse::mine_semantics(r, lexicon),
                                                        db);
                    out << parsed.to_json().dump() << "\n";
                }
                if (!p_db.empty()) db.save(p_db);
            }
        } else if (ld_cmd->parsed()) {
            auto records = telemetry::load_logs(ld_logs);
            if (ld_lexicon.empty()) ld_lexicon = cfg.path("lexicon", "");
            auto lexicon = e2e::resolve_lexicon(ld_lexicon);
            logparse::KnowledgeDB db;
            auto parsed = parse_joint(records, lexicon, db);
            auto mode = ld_mode == "window" ? logdetect::SessionizeMode::ByFixedWindow
                                            : logdetect::SessionizeMode::BySessionId;
            auto sessions = logdetect::sessionize(records, parsed, mode, ld_window_s);
            if (ld_train->parsed()) {
                logdetect::DetectionModel model(
                    resolve(ld_eps_opt, ld_epsilon, cfg, "logdetect", "epsilon", 0.01));
                model.train(sessions);
                write_json(model.to_json(), ld_out);
            } else if (ld_detect->parsed()) {
                auto model = logdetect::DetectionModel::from_json(read_json(ld_model));
                json out = json::array();
                for (const auto& s : sessions) {
                    auto v = model.detect(s);
                    json evidence = json::array();
                    for (const auto& e : v.evidence) {
                        if (e.kind == logdetect::Evidence::Kind::UNSEEN_TEMPLATE)
                            evidence.push_back({{"kind", "unseen_template"}, {"template", e.first}});
                        else
                            evidence.push_back({{"kind", "rare_bigram"},
                                                {"first", e.first},
                                                {"second", e.second},
                                                {"probability", e.probability}});
                    }
                    out.push_back({{"session_id", s.session_id},
                                   {"anomalous", v.anomalous},
                                   {"evidence", evidence}});
                }
                write_json(out, ld_out);
            } else if (ld_learn->parsed()) {
                json labels = read_json(ld_labels);
                std::vector<std::pair<logdetect::Session, std::string>> labeled;
                for (const auto& s : sessions)
                    if (labels.contains(s.session_id))
                        labeled.push_back({s, labels[s.session_id].get<std::string>()});
                auto signatures = logdetect::learn_signatures(
                    labeled, resolve(ld_margin_opt, ld_margin, cfg, "logdetect", "margin", 0.3));
                json out = json::array();
                for (const auto& sig : signatures) out.push_back(sig.to_json());
                write_json(out, ld_out);
            } else {
                json sigs_j = read_json(ld_signatures);
                std::vector<logdetect::FailureSignature> signatures;
                for (const auto& sj : sigs_j)
                    signatures.push_back(logdetect::FailureSignature::from_json(sj));
                json out = json::array();
                for (const auto& s : sessions) {
                    auto ranked = logdetect::identify_failure(s, signatures);
                    json rj = json::array();
                    for (const auto& r : ranked)
                        rj.push_back({{"failure_type", r.failure_type}, {"score", r.score}});
                    out.push_back({{"session_id", s.session_id}, {"ranking", rj}});
                }
                write_json(out, ld_out);
            }
        } else if (tk_cmd->parsed()) {
            auto alerts = telemetry::load_alerts(tk_alerts);
            auto tickets = telemetry::load_tickets(tk_tickets);
            incident::BucketGrid grid;
            auto bucket = static_cast<std::int64_t>(
                resolve(tk_bucket_opt, double(tk_bucket), cfg, "incident", "bucket_s", 300));
            auto events = incident::parse_alerts(alerts, bucket, &grid);
            incident::GipParams gip;
            gip.regular_threshold =
                resolve(tk_regular_opt, tk_regular, cfg, "incident", "regular_threshold", 0.5);
            gip.link_window = static_cast<std::int64_t>(
                resolve(tk_delta_opt, double(tk_delta), cfg, "incident", "link_window", 1));
            gip.link_threshold =
                resolve(tk_tau_opt, tk_link_tau, cfg, "incident", "link_threshold", 0.5);
            auto graph = incident::profile_incidents(events, grid, gip);
            std::vector<std::string> docs;
            for (const auto& e : events) docs.push_back(e.template_text);
            auto tfidf = incident::TfidfModel::fit(docs);
            incident::AffinityMap affinity;
            if (tk_affinity.empty()) tk_affinity = cfg.path("affinity", "");
            if (!tk_affinity.empty()) affinity = incident::AffinityMap::load(tk_affinity);
            incident::ScorerWeights weights;
            if (tk_weights.empty()) tk_weights = cfg.path("weights", "");
            if (!tk_weights.empty())
                weights = incident::ScorerWeights::from_json(read_json(tk_weights));
            incident::CorrelationParams corr;
            corr.lambda_s = resolve(tk_lambda_opt, tk_lambda, cfg, "incident", "lambda_s", 600);
            corr.link_threshold =
                resolve(tk_score_opt, tk_score_s, cfg, "incident", "score_threshold", 0.5);
            std::vector<incident::Event> indicative;
            for (const auto& e : events)
                if (graph.component_of.count(e.event_id)) indicative.push_back(e);
            std::vector<incident::TicketLink> links;
            for (const auto& t : tickets) {
                if (indicative.empty())
                    links.push_back({t.ticket_id, "", 0.0, false});
                else
                    links.push_back(incident::correlate_ticket_event(t, indicative, weights,
                                                                     tfidf, affinity, corr));
            }
            auto clusters = incident::aggregate_tickets(links, graph);
            json out;
            out["events"] = json::array();
            for (const auto& e : events) out["events"].push_back(e.to_json());
            out["graph"] = graph.to_json();
            out["clusters"] = json::array();
            for (const auto& c : clusters) out["clusters"].push_back(c.to_json());
            write_json(out, tk_out);
            if (!quiet)
                std::cerr << events.size() << " events, " << graph.components.size()
                          << " components, " << clusters.size() << " clusters\n";
        } else if (deps_cmd->parsed()) {
            auto spans = telemetry::load_traces(dp_traces);
            auto interval = static_cast<std::int64_t>(resolve(
                dp_interval_opt, double(dp_interval), cfg, "depgraph", "interval_s", 30));
            auto status = depgraph::build_status_series(spans, interval);
            depgraph::IntensityParams params;
            params.max_lag =
                static_cast<int>(resolve(dp_lag_opt, dp_lag, cfg, "depgraph", "max_lag", 3));
            params.degraded_error_rate =
                resolve(dp_err_opt, dp_err, cfg, "depgraph", "degraded_error_rate", 0.1);
            params.degraded_latency_z =
                resolve(dp_z_opt, dp_z, cfg, "depgraph", "degraded_latency_z", 3.0);
            auto edges = depgraph::estimate_intensity(status, spans, params);
            json out = json::array();
            for (const auto& e : edges) out.push_back(e.to_json());
            write_json(out, dp_out);
        } else if (rca_cmd->parsed()) {
            json scores_j = read_json(rc_scores);
            std::map<std::string, double> fused;
            for (auto it = scores_j.begin(); it != scores_j.end(); ++it)
                fused[it.key()] = it.value().get<double>();
            json edges_j = read_json(rc_edges);
            std::vector<depgraph::DependencyEdge> edges;
            for (const auto& ej : edges_j)
                edges.push_back({ej.at("caller").get<std::string>(),
                                 ej.at("callee").get<std::string>(),
                                 ej.at("intensity").get<double>(),
                                 ej.value("invocation_count", std::int64_t{0})});
            depgraph::LocalizeParams params;
            params.alarm_threshold =
                resolve(rc_alarm_opt, rc_alarm, cfg, "depgraph", "alarm_threshold", 0.3);
            params.damping = resolve(rc_damp_opt, rc_damping, cfg, "depgraph", "damping", 0.85);
            auto ranking = depgraph::localize(fused, edges, params);
            write_json(ranking.to_json(), rc_out);
        } else if (res_cmd->parsed()) {
            require_path(rs_test->parsed() ? rs_test_scn : rs_camp_scn, rs_scenario, "scenario",
                         "--scenario");
            auto scenario = sim::Scenario::load(rs_scenario);
            if (rs_test->parsed()) {
                sim::FaultSpec fault;
                fault.target_service = rs_target;
                fault.fault_type = sim::fault_type_from_string(rs_type);
                fault.intensity = rs_intensity;
                fault.duration_s = rs_duration;
                fault.start_ts = scenario.start_epoch +
                                 (rs_offset > 0 ? rs_offset : scenario.workload.duration_s / 3);
                auto report = resilience::run_test(scenario, fault, cfg.seed(rs_seed));
                if (!rs_out.empty()) write_json(report.to_json(), rs_out);
                std::cout << report.to_json().dump(2) << "\n";
            } else {
                auto split = [](const std::string& s) {
                    std::vector<std::string> out;
                    std::size_t start = 0;
                    while (start <= s.size()) {
                        auto comma = s.find(',', start);
                        if (comma == std::string::npos) comma = s.size();
                        if (comma > start) out.push_back(s.substr(start, comma - start));
                        start = comma + 1;
                    }
                    return out;
                };
                std::vector<sim::FaultType> types;
                for (const auto& t : split(rs_faults))
                    types.push_back(sim::fault_type_from_string(t));
                resilience::CampaignParams params;
                params.initial_intensity =
                    resolve(rs_i0_opt, rs_i0, cfg, "resilience", "i0", 0.1);
                params.escalation =
                    resolve(rs_g_opt, rs_g, cfg, "resilience", "escalation", 2.0);
                params.manifest_threshold =
                    resolve(rs_m_opt, rs_m, cfg, "resilience", "manifest_threshold", 0.2);
                auto campaign = resilience::adaptive_campaign(scenario, split(rs_services),
                                                              types, cfg.seed(rs_seed), params);
                if (!rs_out.empty()) write_json(campaign.to_json(), rs_out);
                std::cout << campaign.to_table();
            }
        } else if (e2e_cmd->parsed()) {
            require_path(ee_scn_opt, ee_scenario, "scenario", "--scenario");
            auto scenario = sim::Scenario::load(ee_scenario);
            e2e::PipelineParams params;
            params.sketch_params.window =
                static_cast<int>(cfg.num("sketch", "window", params.sketch_params.window));
            params.sketch_params.theta = cfg.num("sketch", "theta", params.sketch_params.theta);
            params.logdetect_epsilon =
                cfg.num("logdetect", "epsilon", params.logdetect_epsilon);
            if (ee_lexicon.empty()) ee_lexicon = cfg.path("lexicon", "");
            params.lexicon_path = ee_lexicon;
            json report = e2e::run_e2e(scenario, cfg.seed(ee_seed), cfg.out_dir(ee_out), params,
                                       quiet);
            bool pass = report["criteria"]["all_pass"].get<bool>();
            for (auto it = report["criteria"].begin(); it != report["criteria"].end(); ++it) {
                if (it.key() == "all_pass") continue;
                std::cout << (it.value()["pass"].get<bool>() ? "PASS " : "FAIL ") << it.key()
                          << ": " << it.value().dump() << "\n";
            }
            std::cout << (pass ? "E2E PASS" : "E2E FAIL") << "\n";
            if (!pass) return 1;
        }
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
