#include "opsforge/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace opsforge::sim {

std::string to_string(FaultType t) {
    switch (t) {
        case FaultType::DELAY: return "DELAY";
        case FaultType::ERROR: return "ERROR";
        case FaultType::CRASH: return "CRASH";
        case FaultType::CPU: return "CPU";
    }
    return "ERROR";
}

FaultType fault_type_from_string(const std::string& s) {
    if (s == "DELAY") return FaultType::DELAY;
    if (s == "ERROR") return FaultType::ERROR;
    if (s == "CRASH") return FaultType::CRASH;
    if (s == "CPU") return FaultType::CPU;
    throw ValidationError("fault_type: unknown value '" + s + "'");
}

void FaultSpec::validate() const {
    if (target_service.empty()) throw ValidationError("target_service: must be non-empty");
    if (intensity <= 0.0 || intensity > 1.0)
        throw ValidationError("intensity: must lie in (0, 1]");
    if (duration_s <= 0) throw ValidationError("duration_s: must be > 0");
}

json FaultSpec::to_json() const {
    return json{{"target_service", target_service},
                {"fault_type", to_string(fault_type)},
                {"intensity", intensity},
                {"duration_s", duration_s},
                {"start_ts", start_ts}};
}

// ---- scenario loading ------------------------------------------------------

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known)
            throw ValidationError(context + ": unknown key '" + it.key() + "'");
    }
}

}  // namespace

Scenario Scenario::from_json(const json& j) {
    check_keys(j,
               {"name", "start_epoch", "metric_interval_s", "workload", "services", "edges",
                "business_metrics", "products", "noise_ticket_templates",
                "noise_tickets_per_interval", "faults", "delay_factor", "cpu_factor",
                "error_latency_factor", "heartbeat_alerts"},
               "scenario");
    Scenario s;
    s.name = j.value("name", std::string("scenario"));
    s.start_epoch = j.value("start_epoch", std::int64_t{1700000000});
    s.metric_interval_s = j.value("metric_interval_s", std::int64_t{30});
    if (j.contains("workload")) {
        check_keys(j["workload"], {"requests_per_s", "duration_s"}, "workload");
        s.workload.requests_per_s = j["workload"].value("requests_per_s", 5.0);
        s.workload.duration_s = j["workload"].value("duration_s", std::int64_t{600});
    }
    for (const auto& sj : j.value("services", json::array())) {
        check_keys(sj,
                   {"id", "base_latency_ms", "latency_jitter", "base_error_rate",
                    "log_probability", "log_templates", "fault_log_templates", "alert_rules"},
                   "service");
        ServiceSpec svc;
        svc.id = sj.at("id").get<std::string>();
        svc.base_latency_ms = sj.value("base_latency_ms", 20.0);
        svc.latency_jitter = sj.value("latency_jitter", 0.15);
        svc.base_error_rate = sj.value("base_error_rate", 0.0);
        svc.log_probability = sj.value("log_probability", 0.7);
        for (const auto& t : sj.value("log_templates", json::array()))
            svc.log_templates.push_back(t.get<std::string>());
        if (sj.contains("fault_log_templates"))
            for (auto it = sj["fault_log_templates"].begin();
                 it != sj["fault_log_templates"].end(); ++it) {
                fault_type_from_string(it.key());  // key must be a fault type
                for (const auto& t : it.value())
                    svc.fault_log_templates[it.key()].push_back(t.get<std::string>());
            }
        for (const auto& rj : sj.value("alert_rules", json::array())) {
            check_keys(rj, {"metric", "threshold", "severity", "text"}, "alert_rule");
            AlertRule rule;
            rule.metric = rj.at("metric").get<std::string>();
            rule.threshold = rj.at("threshold").get<double>();
            rule.severity = telemetry::severity_from_string(
                rj.value("severity", std::string("CRITICAL")));
            rule.text = rj.at("text").get<std::string>();
            svc.alert_rules.push_back(std::move(rule));
        }
        s.services.push_back(std::move(svc));
    }
    for (const auto& ej : j.value("edges", json::array())) {
        check_keys(ej,
                   {"caller", "callee", "call_probability", "cascade_probability", "retries",
                    "fallback"},
                   "edge");
        EdgeSpec e;
        e.caller = ej.at("caller").get<std::string>();
        e.callee = ej.at("callee").get<std::string>();
        e.call_probability = ej.value("call_probability", 1.0);
        e.cascade_probability = ej.value("cascade_probability", 1.0);
        e.retries = ej.value("retries", 0);
        e.fallback = ej.value("fallback", false);
        s.edges.push_back(std::move(e));
    }
    if (j.contains("business_metrics")) {
        s.business_metrics.clear();
        for (const auto& b : j["business_metrics"]) s.business_metrics.push_back(b.get<std::string>());
    }
    for (const auto& pj : j.value("products", json::array())) {
        check_keys(pj,
                   {"name", "service", "ticket_templates", "tickets_per_degraded_interval",
                    "degraded_error_rate", "degraded_p95_ms"},
                   "product");
        ProductSpec p;
        p.name = pj.at("name").get<std::string>();
        p.service = pj.at("service").get<std::string>();
        for (const auto& t : pj.value("ticket_templates", json::array()))
            p.ticket_templates.push_back(t.get<std::string>());
        p.tickets_per_degraded_interval = pj.value("tickets_per_degraded_interval", 1.0);
        p.degraded_error_rate = pj.value("degraded_error_rate", 0.1);
        p.degraded_p95_ms = pj.value("degraded_p95_ms", 0.0);
        s.products.push_back(std::move(p));
    }
    for (const auto& t : j.value("noise_ticket_templates", json::array()))
        s.noise_ticket_templates.push_back(t.get<std::string>());
    s.noise_tickets_per_interval = j.value("noise_tickets_per_interval", 0.0);
    for (const auto& fj : j.value("faults", json::array())) {
        check_keys(fj,
                   {"target_service", "fault_type", "intensity", "duration_s", "start_offset_s",
                    "start_ts"},
                   "fault");
        FaultSpec f;
        f.target_service = fj.at("target_service").get<std::string>();
        f.fault_type = fault_type_from_string(fj.at("fault_type").get<std::string>());
        f.intensity = fj.value("intensity", 0.5);
        f.duration_s = fj.value("duration_s", std::int64_t{300});
        if (fj.contains("start_ts"))
            f.start_ts = fj["start_ts"].get<std::int64_t>();
        else
            f.start_ts = s.start_epoch + fj.value("start_offset_s", std::int64_t{0});
        s.faults.push_back(std::move(f));
    }
    s.delay_factor = j.value("delay_factor", 10.0);
    s.cpu_factor = j.value("cpu_factor", 10.0);
    s.error_latency_factor = j.value("error_latency_factor", 3.0);
    s.heartbeat_alerts = j.value("heartbeat_alerts", true);
    s.validate();
    return s;
}

Scenario Scenario::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("scenario: malformed JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

void Scenario::validate() const {
    if (services.empty()) throw ValidationError("services: must be non-empty");
    if (metric_interval_s <= 0) throw ValidationError("metric_interval_s: must be > 0");
    if (workload.duration_s <= 0) throw ValidationError("workload.duration_s: must be > 0");
    if (workload.requests_per_s <= 0.0)
        throw ValidationError("workload.requests_per_s: must be > 0");

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < services.size(); ++i) {
        if (services[i].id.empty()) throw ValidationError("service id: must be non-empty");
        if (!index.emplace(services[i].id, i).second)
            throw ValidationError("service id: duplicate '" + services[i].id + "'");
    }
    std::set<std::pair<std::string, std::string>> seen_edges;
    std::map<std::string, std::vector<std::string>> adj;
    std::map<std::string, int> indegree;
    for (const auto& e : edges) {
        if (!index.count(e.caller))
            throw ValidationError("edge caller: unknown service '" + e.caller + "'");
        if (!index.count(e.callee))
            throw ValidationError("edge callee: unknown service '" + e.callee + "'");
        if (e.caller == e.callee) throw ValidationError("edge: caller must differ from callee");
        if (!seen_edges.insert({e.caller, e.callee}).second)
            throw ValidationError("edge: duplicate " + e.caller + " -> " + e.callee);
        if (e.call_probability < 0.0 || e.call_probability > 1.0)
            throw ValidationError("call_probability: must lie in [0, 1]");
        if (e.cascade_probability < 0.0 || e.cascade_probability > 1.0)
            throw ValidationError("cascade_probability: must lie in [0, 1]");
        if (e.retries < 0) throw ValidationError("retries: must be >= 0");
        adj[e.caller].push_back(e.callee);
        ++indegree[e.callee];
    }
    // DAG check (Kahn).
    std::vector<std::string> queue;
    for (const auto& svc : services)
        if (indegree[svc.id] == 0) queue.push_back(svc.id);
    std::size_t visited = 0;
    while (!queue.empty()) {
        std::string u = queue.back();
        queue.pop_back();
        ++visited;
        for (const auto& v : adj[u])
            if (--indegree[v] == 0) queue.push_back(v);
    }
    if (visited != services.size())
        throw ValidationError("edges: service graph must be a DAG");

    for (const auto& f : faults) {
        f.validate();
        if (!index.count(f.target_service))
            throw ValidationError("fault target_service: unknown service '" + f.target_service +
                                  "'");
    }
    for (const auto& p : products) {
        if (!index.count(p.service))
            throw ValidationError("product service: unknown service '" + p.service + "'");
        if (p.ticket_templates.empty())
            throw ValidationError("product '" + p.name + "': ticket_templates must be non-empty");
    }
    for (const auto& m : business_metrics)
        if (m != "e2e_success_rate" && m != "e2e_p95_latency_ms")
            throw ValidationError("business_metrics: unknown metric '" + m + "'");
    for (const auto& svc : services)
        for (const auto& r : svc.alert_rules)
            if (r.metric != "error_rate" && r.metric != "p95_latency_ms" &&
                r.metric != "request_rate")
                throw ValidationError("alert_rule metric: unknown metric '" + r.metric + "'");
}

std::vector<std::string> Scenario::entry_services() const {
    std::set<std::string> callees;
    for (const auto& e : edges) callees.insert(e.callee);
    std::vector<std::string> out;
    for (const auto& s : services)
        if (!callees.count(s.id)) out.push_back(s.id);
    return out;
}

const ServiceSpec& Scenario::service(const std::string& id) const {
    for (const auto& s : services)
        if (s.id == id) return s;
    throw ValidationError("unknown service '" + id + "'");
}

Scenario without_faults(Scenario s) {
    s.faults.clear();
    return s;
}

Scenario with_fault(Scenario s, const FaultSpec& fault) {
    s.faults = {fault};
    s.validate();
    return s;
}

Scenario with_fallback_everywhere(Scenario s, bool enabled) {
    for (auto& e : s.edges) e.fallback = enabled;
    return s;
}

Scenario with_retries_everywhere(Scenario s, int retries) {
    for (auto& e : s.edges) e.retries = retries;
    return s;
}

// ---- simulation ------------------------------------------------------------

namespace {

std::string fill_slots(const std::string& tmpl, Rng& rng) {
    static const char* kHex = "0123456789abcdef";
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t close = tmpl.find('}', i);
            if (close != std::string::npos) {
                std::string slot = tmpl.substr(i + 1, close - i - 1);
                if (slot == "hex8") {
                    for (int k = 0; k < 8; ++k) out += kHex[rng.pick_index(16)];
                } else if (slot == "int") {
                    out += std::to_string(10 + rng.pick_index(9990));
                } else if (slot == "ip") {
                    out += "10." + std::to_string(rng.pick_index(256)) + "." +
                           std::to_string(rng.pick_index(256)) + "." +
                           std::to_string(1 + rng.pick_index(254));
                } else if (slot == "path") {
                    out += "/var/data/part-" + std::to_string(rng.pick_index(10000));
                } else if (slot == "uuid") {
                    const int groups[5] = {8, 4, 4, 4, 12};
                    for (int g = 0; g < 5; ++g) {
                        if (g) out += '-';
                        for (int k = 0; k < groups[g]; ++k) out += kHex[rng.pick_index(16)];
                    }
                } else {
                    out += tmpl.substr(i, close - i + 1);
                }
                i = close + 1;
                continue;
            }
        }
        out += tmpl[i];
        ++i;
    }
    return out;
}

struct CallResult {
    double latency_ms = 0.0;
    bool ok = true;
};

class Simulation {
  public:
    Simulation(const Scenario& sc, std::uint64_t seed) : sc_(sc), master_(seed) {
        for (std::size_t i = 0; i < sc_.services.size(); ++i) index_[sc_.services[i].id] = i;
        out_edges_.resize(sc_.services.size());
        for (const auto& e : sc_.edges) out_edges_[index_[e.caller]].push_back(&e);
        n_intervals_ = static_cast<std::size_t>(
            (sc_.workload.duration_s + sc_.metric_interval_s - 1) / sc_.metric_interval_s);
    }

    RunResult run() {
        simulate_requests();
        aggregate_metrics();
        emit_alerts();
        emit_tickets();
        build_ground_truth();
        finalize();
        return std::move(result_);
    }

  private:
    const FaultSpec* active_fault(const std::string& service, double t) const {
        for (const auto& f : sc_.faults)
            if (f.target_service == service && t >= static_cast<double>(f.start_ts) &&
                t < static_cast<double>(f.start_ts + f.duration_s))
                return &f;
        return nullptr;
    }

    void log(telemetry::LogLevel level, const std::string& service, std::string message,
             double t) {
        telemetry::LogRecord r;
        r.ts = static_cast<std::int64_t>(std::floor(t));
        r.service_id = service;
        r.level = level;
        r.message = std::move(message);
        r.session_id = trace_id_;
        result_.logs.push_back(std::move(r));
    }

    void mark(FaultType type, bool logged) {
        if (!logged) return;
        if (!touched_) {
            touched_ = true;
            touched_type_ = to_string(type);
        }
    }

    std::string pick_template(const std::vector<std::string>& pool, Rng& rng,
                              const std::string& fallback_text) {
        if (pool.empty()) return fallback_text;
        return fill_slots(pool[rng.pick_index(pool.size())], rng);
    }

    CallResult visit(std::size_t svc_idx, double t, const std::string& parent_span, Rng& rng) {
        const ServiceSpec& svc = sc_.services[svc_idx];
        const FaultSpec* fault = active_fault(svc.id, t);
        std::string span_id = "s" + std::to_string(span_counter_++);

        // Fixed draw layout keeps baseline and faulted runs aligned.
        double u_base = rng.u01();
        double u_fault = rng.u01();
        double jitter_n = rng.normal(0.0, 1.0);
        double u_log = rng.u01();

        CallResult res;
        if (fault && fault->fault_type == FaultType::CRASH) {
            res.latency_ms = svc.base_latency_ms * 0.2;
            res.ok = false;
            bool logged = u_log < 0.8;
            if (logged)
                log(telemetry::LogLevel::ERROR, svc.id,
                    pick_template(fault_pool(svc, FaultType::CRASH), rng,
                                  "service unavailable, connection refused"),
                    t);
            mark(FaultType::CRASH, logged);
            emit_span(span_id, parent_span, parent_name_.back(), svc.id, t, res);
            return res;
        }

        double sigma = svc.latency_jitter;
        if (fault && fault->fault_type == FaultType::CPU)
            sigma *= 1.0 + sc_.cpu_factor * fault->intensity;
        double own_latency = svc.base_latency_ms * std::exp(sigma * jitter_n);
        if (fault && fault->fault_type == FaultType::DELAY)
            own_latency *= 1.0 + sc_.delay_factor * fault->intensity;

        bool base_fail = u_base < svc.base_error_rate;
        bool fault_fail = !base_fail && fault && fault->fault_type == FaultType::ERROR &&
                          u_fault < fault->intensity;
        // Failing requests burn time in internal retries/timeouts before
        // giving up, so errors also show up on the latency channel.
        if (fault_fail)
            own_latency *= 1.0 + sc_.error_latency_factor * fault->intensity;
        else if (base_fail)
            own_latency *= 2.0;

        if (fault_fail) {
            log(telemetry::LogLevel::ERROR, svc.id,
                pick_template(fault_pool(svc, FaultType::ERROR), rng,
                              "request handler error, aborting"),
                t);
            mark(FaultType::ERROR, true);
        } else if (fault && (fault->fault_type == FaultType::DELAY ||
                             fault->fault_type == FaultType::CPU)) {
            bool logged = u_log < 0.8;
            if (logged)
                log(telemetry::LogLevel::WARN, svc.id,
                    pick_template(fault_pool(svc, fault->fault_type), rng,
                                  "slow request processing detected"),
                    t);
            mark(fault->fault_type, logged);
        } else if (base_fail) {
            log(telemetry::LogLevel::ERROR, svc.id, "unhandled exception in request handler", t);
        } else if (u_log < svc.log_probability) {
            log(telemetry::LogLevel::INFO, svc.id,
                pick_template(svc.log_templates, rng, "request processed"), t);
        }

        bool child_failed = false;
        double t_cursor = t;
        parent_name_.push_back(svc.id);
        for (const EdgeSpec* e : out_edges_[svc_idx]) {
            double u_call = rng.u01();
            double u_cascade = rng.u01();
            if (u_call >= e->call_probability) continue;
            std::size_t callee_idx = index_[e->callee];
            CallResult child = visit(callee_idx, t_cursor, span_id, rng);
            bool coupled = u_cascade < e->cascade_probability;
            double effective = 0.0;
            if (coupled) {
                effective = child.latency_ms;
                bool ok = child.ok;
                int attempts = 0;
                while (!ok && attempts < e->retries) {
                    log(telemetry::LogLevel::INFO, svc.id, "retrying call to " + e->callee,
                        t_cursor);
                    CallResult again =
                        visit(callee_idx, t_cursor + effective / 1000.0, span_id, rng);
                    effective += again.latency_ms;
                    ok = again.ok;
                    ++attempts;
                }
                if (!ok && e->fallback) {
                    log(telemetry::LogLevel::WARN, svc.id,
                        "serving " + e->callee + " response from fallback cache", t_cursor);
                    effective += sc_.services[callee_idx].base_latency_ms;
                    ok = true;
                }
                if (!ok) {
                    log(telemetry::LogLevel::ERROR, svc.id,
                        "upstream call to " + e->callee + " failed", t_cursor);
                    child_failed = true;
                }
            } else {
                // Decoupled call: answered from cache / async, nominal cost.
                effective = sc_.services[callee_idx].base_latency_ms;
            }
            t_cursor += effective / 1000.0;
        }
        parent_name_.pop_back();

        res.latency_ms = own_latency + (t_cursor - t) * 1000.0;
        res.ok = !base_fail && !fault_fail && !child_failed;
        emit_span(span_id, parent_span, parent_name_.back(), svc.id, t, res);
        return res;
    }

    const std::vector<std::string>& fault_pool(const ServiceSpec& svc, FaultType type) const {
        static const std::vector<std::string> kEmpty;
        auto it = svc.fault_log_templates.find(to_string(type));
        return it == svc.fault_log_templates.end() ? kEmpty : it->second;
    }

    void emit_span(const std::string& span_id, const std::string& parent_span,
                   const std::string& caller, const std::string& callee, double t,
                   const CallResult& res) {
        telemetry::TraceSpan s;
        s.trace_id = trace_id_;
        s.span_id = span_id;
        if (!parent_span.empty()) s.parent_span_id = parent_span;
        s.caller = caller;
        s.callee = callee;
        s.start_ts = t;
        s.duration_ms = res.latency_ms;
        s.status = res.ok ? telemetry::SpanStatus::OK : telemetry::SpanStatus::ERROR;
        result_.spans.push_back(std::move(s));
    }

    void simulate_requests() {
        std::vector<std::string> entries = sc_.entry_services();
        if (entries.empty()) throw ValidationError("scenario: needs at least one entry service");

        struct Arrival {
            double t;
            std::size_t entry_idx;
        };
        std::vector<Arrival> arrivals;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            Rng stream = master_.fork(1000 + i);
            double t = 0.0;
            while (true) {
                t += stream.exponential(sc_.workload.requests_per_s);
                if (t >= static_cast<double>(sc_.workload.duration_s)) break;
                arrivals.push_back({static_cast<double>(sc_.start_epoch) + t, index_[entries[i]]});
            }
        }
        std::stable_sort(arrivals.begin(), arrivals.end(),
                         [](const Arrival& a, const Arrival& b) { return a.t < b.t; });

        for (std::size_t q = 0; q < arrivals.size(); ++q) {
            trace_id_ = "T" + std::to_string(q);
            span_counter_ = 0;
            touched_ = false;
            touched_type_.clear();
            parent_name_ = {"client"};
            Rng req_rng = master_.fork(2000000 + q);
            CallResult root = visit(arrivals[q].entry_idx, arrivals[q].t, "", req_rng);
            root_outcomes_.push_back({arrivals[q].t, root.latency_ms, root.ok});
            if (touched_) {
                result_.ground_truth.anomalous_sessions.insert(trace_id_);
                result_.ground_truth.session_fault_types[trace_id_] = touched_type_;
            }
        }
    }

    std::size_t interval_of(double t) const {
        auto idx = static_cast<std::int64_t>(
            (static_cast<std::int64_t>(std::floor(t)) - sc_.start_epoch) / sc_.metric_interval_s);
        if (idx < 0) idx = 0;
        if (idx >= static_cast<std::int64_t>(n_intervals_))
            idx = static_cast<std::int64_t>(n_intervals_) - 1;
        return static_cast<std::size_t>(idx);
    }

    void aggregate_metrics() {
        const std::size_t n_svc = sc_.services.size();
        std::vector<std::vector<std::vector<double>>> durations(
            n_svc, std::vector<std::vector<double>>(n_intervals_));
        std::vector<std::vector<std::int64_t>> errors(n_svc,
                                                      std::vector<std::int64_t>(n_intervals_, 0));
        std::vector<std::vector<std::int64_t>> totals(n_svc,
                                                      std::vector<std::int64_t>(n_intervals_, 0));
        for (const auto& s : result_.spans) {
            std::size_t svc = index_.at(s.callee);
            std::size_t i = interval_of(s.start_ts);
            durations[svc][i].push_back(s.duration_ms);
            if (s.status == telemetry::SpanStatus::ERROR) ++errors[svc][i];
            ++totals[svc][i];
        }
        for (std::size_t svc = 0; svc < n_svc; ++svc) {
            telemetry::MetricSeries err, p95, rate;
            for (auto* m : {&err, &p95, &rate}) {
                m->service_id = sc_.services[svc].id;
                m->start_ts = sc_.start_epoch;
                m->interval_s = sc_.metric_interval_s;
            }
            err.metric_name = "error_rate";
            p95.metric_name = "p95_latency_ms";
            rate.metric_name = "request_rate";
            for (std::size_t i = 0; i < n_intervals_; ++i) {
                double e = 0.0, p = 0.0, r = 0.0;
                if (totals[svc][i] > 0) {
                    e = static_cast<double>(errors[svc][i]) /
                        static_cast<double>(totals[svc][i]);
                    p = stats::percentile_nearest_rank(durations[svc][i], 0.95);
                    r = static_cast<double>(totals[svc][i]) /
                        static_cast<double>(sc_.metric_interval_s);
                }
                err.values.push_back(e);
                p95.values.push_back(p);
                rate.values.push_back(r);
            }
            result_.metrics.push_back(std::move(err));
            result_.metrics.push_back(std::move(p95));
            result_.metrics.push_back(std::move(rate));
        }

        // Business series over root requests.
        result_.business.start_ts = sc_.start_epoch;
        result_.business.interval_s = sc_.metric_interval_s;
        std::vector<std::vector<double>> root_lat(n_intervals_);
        std::vector<std::int64_t> root_ok(n_intervals_, 0), root_total(n_intervals_, 0);
        for (const auto& r : root_outcomes_) {
            std::size_t i = interval_of(r.t);
            root_lat[i].push_back(r.latency_ms);
            if (r.ok) ++root_ok[i];
            ++root_total[i];
        }
        for (std::size_t i = 0; i < n_intervals_; ++i) {
            double sr = root_total[i] > 0 ? static_cast<double>(root_ok[i]) /
                                                static_cast<double>(root_total[i])
                                          : 1.0;
            result_.business.success_rate.push_back(sr);
            result_.business.p95_latency_ms.push_back(
                stats::percentile_nearest_rank(root_lat[i], 0.95));
            result_.business.request_count.push_back(static_cast<double>(root_total[i]));
        }
    }

    double metric_value(std::size_t svc, const std::string& metric, std::size_t interval) const {
        const auto& series = result_.metrics[svc * 3 + (metric == "error_rate"         ? 0
                                                        : metric == "p95_latency_ms" ? 1
                                                                                      : 2)];
        return series.values[interval];
    }

    void emit_alerts() {
        std::int64_t alert_seq = 0;
        for (std::size_t i = 0; i < n_intervals_; ++i) {
            std::int64_t ts = sc_.start_epoch + static_cast<std::int64_t>(i) * sc_.metric_interval_s;
            for (std::size_t svc = 0; svc < sc_.services.size(); ++svc) {
                const ServiceSpec& spec = sc_.services[svc];
                if (sc_.heartbeat_alerts) {
                    telemetry::Alert a;
                    a.alert_id = "A" + std::to_string(alert_seq++);
                    a.ts = ts;
                    a.service_id = spec.id;
                    a.severity = telemetry::AlertSeverity::INFO;
                    a.text = "Heartbeat OK from " + spec.id;
                    result_.alerts.push_back(std::move(a));
                }
                for (const auto& rule : spec.alert_rules) {
                    if (metric_value(svc, rule.metric, i) > rule.threshold) {
                        telemetry::Alert a;
                        a.alert_id = "A" + std::to_string(alert_seq++);
                        a.ts = ts;
                        a.service_id = spec.id;
                        a.severity = rule.severity;
                        a.text = rule.text;
                        result_.alerts.push_back(std::move(a));
                    }
                }
            }
        }
    }

    std::string incident_at(const std::string& service, std::int64_t ts) const {
        for (const auto& inc : incidents_) {
            if (ts < inc.window_start || ts > inc.window_end) continue;
            for (const auto& svc : inc.affected_services)
                if (svc == service) return inc.incident_id;
        }
        return "NONE";
    }

    void compute_incidents() {
        // Affected set: the target plus transitive callers over edges with
        // any chance of cascading.
        std::map<std::string, std::vector<std::string>> callers_of;
        for (const auto& e : sc_.edges)
            if (e.cascade_probability > 0.0) callers_of[e.callee].push_back(e.caller);
        int k = 0;
        for (const auto& f : sc_.faults) {
            Incident inc;
            inc.incident_id = "I" + std::to_string(k++);
            inc.fault = f;
            inc.window_start = f.start_ts;
            inc.window_end = f.start_ts + f.duration_s;
            std::set<std::string> affected;
            std::vector<std::string> frontier{f.target_service};
            while (!frontier.empty()) {
                std::string cur = frontier.back();
                frontier.pop_back();
                if (!affected.insert(cur).second) continue;
                auto it = callers_of.find(cur);
                if (it != callers_of.end())
                    for (const auto& caller : it->second) frontier.push_back(caller);
            }
            inc.affected_services.assign(affected.begin(), affected.end());
            incidents_.push_back(std::move(inc));
        }
    }

    void emit_tickets() {
        compute_incidents();
        Rng ticket_rng = master_.fork(777001);
        struct PendingTicket {
            std::int64_t ts;
            std::string product;
            std::string text;
            std::string customer;
            std::string incident;
        };
        std::vector<PendingTicket> pending;
        std::int64_t customer_seq = 0;
        for (std::size_t i = 0; i < n_intervals_; ++i) {
            std::int64_t ts0 =
                sc_.start_epoch + static_cast<std::int64_t>(i) * sc_.metric_interval_s;
            for (const auto& product : sc_.products) {
                std::size_t svc = index_.at(product.service);
                double err = metric_value(svc, "error_rate", i);
                double p95 = metric_value(svc, "p95_latency_ms", i);
                double p95_threshold = product.degraded_p95_ms > 0.0
                                           ? product.degraded_p95_ms
                                           : 4.0 * sc_.services[svc].base_latency_ms;
                if (err <= product.degraded_error_rate && p95 <= p95_threshold) continue;
                long n = ticket_rng.poisson(product.tickets_per_degraded_interval);
                for (long t = 0; t < n; ++t) {
                    PendingTicket pt;
                    pt.ts = ts0 + static_cast<std::int64_t>(
                                      ticket_rng.pick_index(
                                          static_cast<std::uint64_t>(sc_.metric_interval_s)));
                    pt.product = product.name;
                    pt.text = fill_slots(
                        product.ticket_templates[ticket_rng.pick_index(
                            product.ticket_templates.size())],
                        ticket_rng);
                    pt.customer = "C" + std::to_string(customer_seq++);
                    pt.incident = incident_at(product.service, pt.ts);
                    pending.push_back(std::move(pt));
                }
            }
            if (sc_.noise_tickets_per_interval > 0.0 && !sc_.products.empty() &&
                !sc_.noise_ticket_templates.empty()) {
                long n = ticket_rng.poisson(sc_.noise_tickets_per_interval);
                for (long t = 0; t < n; ++t) {
                    PendingTicket pt;
                    pt.ts = ts0 + static_cast<std::int64_t>(
                                      ticket_rng.pick_index(
                                          static_cast<std::uint64_t>(sc_.metric_interval_s)));
                    pt.product =
                        sc_.products[ticket_rng.pick_index(sc_.products.size())].name;
                    pt.text = fill_slots(
                        sc_.noise_ticket_templates[ticket_rng.pick_index(
                            sc_.noise_ticket_templates.size())],
                        ticket_rng);
                    pt.customer = "C" + std::to_string(customer_seq++);
                    pt.incident = "NONE";
                    pending.push_back(std::move(pt));
                }
            }
        }
        std::stable_sort(pending.begin(), pending.end(),
                         [](const PendingTicket& a, const PendingTicket& b) { return a.ts < b.ts; });
        for (std::size_t i = 0; i < pending.size(); ++i) {
            telemetry::Ticket tk;
            tk.ticket_id = "K" + std::to_string(i);
            tk.ts = pending[i].ts;
            tk.product = pending[i].product;
            tk.text = pending[i].text;
            tk.customer_id = pending[i].customer;
            result_.ground_truth.ticket_incidents[tk.ticket_id] = pending[i].incident;
            result_.tickets.push_back(std::move(tk));
        }
    }

    void build_ground_truth() {
        result_.ground_truth.incidents = incidents_;
        if (!sc_.faults.empty())
            result_.ground_truth.culprit_service = sc_.faults.front().target_service;
    }

    void finalize() {
        std::stable_sort(result_.logs.begin(), result_.logs.end(),
                         [](const telemetry::LogRecord& a, const telemetry::LogRecord& b) {
                             return a.ts < b.ts;
                         });
        std::stable_sort(result_.spans.begin(), result_.spans.end(),
                         [](const telemetry::TraceSpan& a, const telemetry::TraceSpan& b) {
                             return a.start_ts < b.start_ts;
                         });
    }

    const Scenario& sc_;
    Rng master_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<const EdgeSpec*>> out_edges_;
    std::size_t n_intervals_ = 0;

    RunResult result_;
    std::vector<Incident> incidents_;
    struct RootOutcome {
        double t;
        double latency_ms;
        bool ok;
    };
    std::vector<RootOutcome> root_outcomes_;

    std::string trace_id_;
    int span_counter_ = 0;
    bool touched_ = false;
    std::string touched_type_;
    std::vector<std::string> parent_name_;
};

}  // namespace

RunResult run_scenario(const Scenario& scenario, std::uint64_t seed) {
    scenario.validate();
    Simulation sim(scenario, seed);
    return sim.run();
}

const telemetry::MetricSeries& RunResult::series(const std::string& service,
                                                 const std::string& metric) const {
    for (const auto& m : metrics)
        if (m.service_id == service && m.metric_name == metric) return m;
    throw ValidationError("no series for service '" + service + "' metric '" + metric + "'");
}

json GroundTruth::to_json() const {
    json j;
    json inc = json::array();
    for (const auto& i : incidents) {
        json ij;
        ij["incident_id"] = i.incident_id;
        ij["fault"] = i.fault.to_json();
        ij["affected_services"] = i.affected_services;
        ij["window"] = {{"start_ts", i.window_start}, {"end_ts", i.window_end}};
        inc.push_back(ij);
    }
    j["incidents"] = inc;
    j["ticket_incidents"] = ticket_incidents;
    j["culprit_service"] = culprit_service;
    j["anomalous_sessions"] = std::vector<std::string>(anomalous_sessions.begin(),
                                                       anomalous_sessions.end());
    j["session_fault_types"] = session_fault_types;
    return j;
}

void GroundTruth::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    out << to_json().dump(2) << "\n";
}

void write_run(const RunResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto path = [&](const char* name) { return out_dir + "/" + name; };
    telemetry::save_jsonl(result.metrics, path("metrics.jsonl"));
    telemetry::save_jsonl(result.logs, path("logs.jsonl"));
    telemetry::save_jsonl(result.spans, path("traces.jsonl"));
    telemetry::save_jsonl(result.alerts, path("alerts.jsonl"));
    telemetry::save_jsonl(result.tickets, path("tickets.jsonl"));
    result.ground_truth.save(path("groundtruth.json"));
}

// ---- synthetic KPI suite ----------------------------------------------------

LabeledSeries generate_kpi(const KpiSpec& spec, std::uint64_t seed, const std::string& name) {
    if (spec.n_points <= 0) throw ValidationError("n_points: must be > 0");
    if (spec.anomaly_fraction < 0.0 || spec.anomaly_fraction >= 1.0)
        throw ValidationError("anomaly_fraction: must lie in [0, 1)");
    Rng rng(seed);
    const int n = spec.n_points;

    LabeledSeries out;
    out.series.service_id = name;
    out.series.metric_name = "synthetic";
    out.series.start_ts = 1700000000;
    out.series.interval_s = 60;
    out.series.values.resize(static_cast<std::size_t>(n));
    out.labels.assign(static_cast<std::size_t>(n), false);
    for (int t = 0; t < n; ++t)
        out.series.values[static_cast<std::size_t>(t)] =
            spec.offset +
            spec.amplitude * std::sin(2.0 * M_PI * static_cast<double>(t) / spec.period) +
            rng.normal(0.0, spec.noise_sigma);

    const int budget = static_cast<int>(spec.anomaly_fraction * n);
    const int margin = 24;  // keep segments apart so detection smear stays local
    int placed = 0;
    int attempts = 0;
    while (placed < budget && attempts < 10000) {
        ++attempts;
        int len = 40 + static_cast<int>(rng.pick_index(51));  // 40..90
        len = std::min(len, budget - placed + 20);
        if (len < 20) break;
        int lo = spec.clean_prefix;
        int hi = n - len - 1;
        if (hi <= lo) break;
        int start = lo + static_cast<int>(rng.pick_index(static_cast<std::uint64_t>(hi - lo)));
        bool clash = false;
        for (int t = std::max(0, start - margin); t < std::min(n, start + len + margin); ++t)
            if (out.labels[static_cast<std::size_t>(t)]) { clash = true; break; }
        if (clash) continue;

        // Anomaly shapes are chosen to distort every window they touch:
        // pure offsets would be invisible to z-normalized matching.
        int kind = static_cast<int>(rng.pick_index(4));
        double magnitude = spec.amplitude * rng.uniform(1.5, 2.5);
        double sign = rng.u01() < 0.5 ? 1.0 : -1.0;
        for (int t = start; t < start + len; ++t) {
            auto i = static_cast<std::size_t>(t);
            double phase = static_cast<double>(t - start) / static_cast<double>(len);
            switch (kind) {
                case 0:  // steep ramp
                    out.series.values[i] +=
                        sign * magnitude * 2.0 * phase * static_cast<double>(len) / 24.0;
                    break;
                case 1:  // frequency doubling
                    out.series.values[i] +=
                        spec.amplitude *
                            std::sin(4.0 * M_PI * static_cast<double>(t) / spec.period) -
                        spec.amplitude *
                            std::sin(2.0 * M_PI * static_cast<double>(t) / spec.period);
                    break;
                case 2:  // noise burst
                    out.series.values[i] += rng.normal(0.0, spec.amplitude);
                    break;
                default:  // seasonal collapse: the waveform goes flat
                    out.series.values[i] =
                        spec.offset + rng.normal(0.0, spec.noise_sigma);
                    break;
            }
            out.labels[i] = true;
        }
        placed += len;
    }
    return out;
}

}  // namespace opsforge::sim
