#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsforge/common.hpp"

namespace opsforge::telemetry {

using json = nlohmann::json;

enum class LogLevel { DEBUG, INFO, WARN, ERROR };
enum class AlertSeverity { INFO, WARNING, CRITICAL };
enum class SpanStatus { OK, ERROR };

std::string to_string(LogLevel v);
std::string to_string(AlertSeverity v);
std::string to_string(SpanStatus v);
LogLevel log_level_from_string(const std::string& s);
AlertSeverity severity_from_string(const std::string& s);
SpanStatus span_status_from_string(const std::string& s);

/// Fixed-interval KPI series for one (service, metric) pair.
struct MetricSeries {
    std::string service_id;
    std::string metric_name;
    std::int64_t start_ts = 0;
    std::int64_t interval_s = 1;
    std::vector<double> values;
    json extra = json::object();

    std::int64_t ts_at(std::size_t i) const {
        return start_ts + static_cast<std::int64_t>(i) * interval_s;
    }
    void validate() const;
    json to_json() const;
    static MetricSeries from_json(const json& j);
};

struct LogRecord {
    std::int64_t ts = 0;
    std::string service_id;
    LogLevel level = LogLevel::INFO;
    std::string message;
    std::optional<std::string> session_id;
    json extra = json::object();

    void validate() const;
    json to_json() const;
    static LogRecord from_json(const json& j);
};

struct TraceSpan {
    std::string trace_id;
    std::string span_id;
    std::optional<std::string> parent_span_id;
    std::string caller;
    std::string callee;
    double start_ts = 0.0;  // fractional epoch seconds
    double duration_ms = 0.0;
    SpanStatus status = SpanStatus::OK;
    json extra = json::object();

    void validate() const;
    json to_json() const;
    static TraceSpan from_json(const json& j);
};

struct Alert {
    std::string alert_id;
    std::int64_t ts = 0;
    std::string service_id;
    AlertSeverity severity = AlertSeverity::INFO;
    std::string text;
    json extra = json::object();

    void validate() const;
    json to_json() const;
    static Alert from_json(const json& j);
};

struct Ticket {
    std::string ticket_id;
    std::int64_t ts = 0;
    std::string product;
    std::string text;
    std::string customer_id;
    json extra = json::object();

    void validate() const;
    json to_json() const;
    static Ticket from_json(const json& j);
};

enum class RecordKind { Metrics, Logs, Traces, Alerts, Tickets };
RecordKind record_kind_from_string(const std::string& s);

/// JSON-lines loaders. Each enforces the per-record invariants plus the
/// file-level ones (log timestamps non-decreasing, ticket ids unique, span
/// ids unique within a trace). Errors carry the offending line number.
std::vector<MetricSeries> load_metrics(const std::string& path);
std::vector<LogRecord> load_logs(const std::string& path);
std::vector<TraceSpan> load_traces(const std::string& path);
std::vector<Alert> load_alerts(const std::string& path);
std::vector<Ticket> load_tickets(const std::string& path);

template <typename T>
void save_jsonl(const std::vector<T>& records, const std::string& path);

struct WindowStats {
    std::int64_t window_start_ts = 0;
    double mean = 0.0;
    double max = 0.0;
    std::int64_t count = 0;
};

/// Tiles [start_ts, end] with windows of window_s seconds; the trailing
/// partial window is kept with its true count.
std::vector<WindowStats> window_metrics(const MetricSeries& series, std::int64_t window_s);

}  // namespace opsforge::telemetry
