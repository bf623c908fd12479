#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsforge/common.hpp"
#include "opsforge/telemetry.hpp"

namespace opsforge::sim {

using json = nlohmann::json;

enum class FaultType { DELAY, ERROR, CRASH, CPU };
std::string to_string(FaultType t);
FaultType fault_type_from_string(const std::string& s);

/// Injected failure description; start_ts is absolute epoch seconds.
struct FaultSpec {
    std::string target_service;
    FaultType fault_type = FaultType::ERROR;
    double intensity = 0.5;  // (0, 1]
    std::int64_t duration_s = 300;
    std::int64_t start_ts = 0;

    void validate() const;
    json to_json() const;
};

struct AlertRule {
    std::string metric;  // error_rate | p95_latency_ms | request_rate
    double threshold = 0.0;
    telemetry::AlertSeverity severity = telemetry::AlertSeverity::CRITICAL;
    std::string text;
};

struct ServiceSpec {
    std::string id;
    double base_latency_ms = 20.0;
    double latency_jitter = 0.15;   // lognormal sigma of the service time
    double base_error_rate = 0.0;
    double log_probability = 0.7;   // chance a visit emits a normal log line
    std::vector<std::string> log_templates;
    std::map<std::string, std::vector<std::string>> fault_log_templates;  // keyed by fault type
    std::vector<AlertRule> alert_rules;
};

struct EdgeSpec {
    std::string caller;
    std::string callee;
    double call_probability = 1.0;
    double cascade_probability = 1.0;
    int retries = 0;
    bool fallback = false;
};

struct ProductSpec {
    std::string name;
    std::string service;  // user-facing service backing this product
    std::vector<std::string> ticket_templates;
    double tickets_per_degraded_interval = 1.0;
    double degraded_error_rate = 0.1;
    double degraded_p95_ms = 0.0;  // 0 -> 4x the service base latency
};

struct Workload {
    double requests_per_s = 5.0;  // per entry service
    std::int64_t duration_s = 600;
};

struct Scenario {
    std::string name = "scenario";
    std::int64_t start_epoch = 1700000000;
    std::int64_t metric_interval_s = 30;
    Workload workload;
    std::vector<ServiceSpec> services;
    std::vector<EdgeSpec> edges;
    std::vector<std::string> business_metrics{"e2e_success_rate", "e2e_p95_latency_ms"};
    std::vector<ProductSpec> products;
    std::vector<std::string> noise_ticket_templates;
    double noise_tickets_per_interval = 0.0;
    std::vector<FaultSpec> faults;
    double delay_factor = 10.0;       // DELAY multiplies latency by (1 + factor*intensity)
    double cpu_factor = 10.0;         // CPU multiplies jitter by (1 + factor*intensity)
    double error_latency_factor = 3.0;  // failing requests burn (1 + factor*intensity) time
    bool heartbeat_alerts = true;

    void validate() const;
    std::vector<std::string> entry_services() const;
    const ServiceSpec& service(const std::string& id) const;

    static Scenario from_json(const json& j);
    static Scenario load(const std::string& path);
};

/// Scenario variants used by paired resilience runs.
Scenario without_faults(Scenario s);
Scenario with_fault(Scenario s, const FaultSpec& fault);
Scenario with_fallback_everywhere(Scenario s, bool enabled);
Scenario with_retries_everywhere(Scenario s, int retries);

struct Incident {
    std::string incident_id;
    FaultSpec fault;
    std::vector<std::string> affected_services;
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;
};

struct GroundTruth {
    std::vector<Incident> incidents;
    std::map<std::string, std::string> ticket_incidents;  // ticket id -> incident id | NONE
    std::string culprit_service;                          // target of the first fault, if any
    std::set<std::string> anomalous_sessions;             // trace ids with log-visible effects
    std::map<std::string, std::string> session_fault_types;

    json to_json() const;
    void save(const std::string& path) const;
};

/// End-to-end success-rate / latency per metric interval, over root requests.
struct BusinessSeries {
    std::int64_t start_ts = 0;
    std::int64_t interval_s = 1;
    std::vector<double> success_rate;
    std::vector<double> p95_latency_ms;
    std::vector<double> request_count;
};

struct RunResult {
    std::vector<telemetry::MetricSeries> metrics;  // 3 series per service
    std::vector<telemetry::LogRecord> logs;
    std::vector<telemetry::TraceSpan> spans;
    std::vector<telemetry::Alert> alerts;
    std::vector<telemetry::Ticket> tickets;
    BusinessSeries business;
    GroundTruth ground_truth;

    const telemetry::MetricSeries& series(const std::string& service,
                                          const std::string& metric) const;
};

/// Single-threaded deterministic simulation: identical (scenario, seed)
/// produce identical results. Request arrival streams are independent of
/// fault behavior so paired baseline/faulted runs see the same workload.
RunResult run_scenario(const Scenario& scenario, std::uint64_t seed);

/// Writes the five telemetry JSONL files plus groundtruth.json.
void write_run(const RunResult& result, const std::string& out_dir);

// ---- synthetic KPI suite -------------------------------------------------

struct KpiSpec {
    int n_points = 10000;
    double anomaly_fraction = 0.05;
    int period = 24;  // short enough that every window spans real variation
    double amplitude = 1.0;
    double offset = 10.0;
    double noise_sigma = 0.05;
    int clean_prefix = 0;  // samples at the start kept anomaly-free
};

struct LabeledSeries {
    telemetry::MetricSeries series;
    std::vector<bool> labels;
};

/// Seasonal KPI with injected anomaly segments (spikes, dips, level shifts,
/// noise bursts) and exact per-sample labels.
LabeledSeries generate_kpi(const KpiSpec& spec, std::uint64_t seed,
                           const std::string& name = "kpi");

}  // namespace opsforge::sim
