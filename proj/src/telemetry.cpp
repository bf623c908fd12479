#include "opsforge/telemetry.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace opsforge::telemetry {

std::string to_string(LogLevel v) {
    switch (v) {
        case LogLevel::DEBUG: return "DEBUG";
        case LogLevel::INFO: return "INFO";
        case LogLevel::WARN: return "WARN";
        case LogLevel::ERROR: return "ERROR";
    }
    return "INFO";
}

std::string to_string(AlertSeverity v) {
    switch (v) {
        case AlertSeverity::INFO: return "INFO";
        case AlertSeverity::WARNING: return "WARNING";
        case AlertSeverity::CRITICAL: return "CRITICAL";
    }
    return "INFO";
}

std::string to_string(SpanStatus v) { return v == SpanStatus::OK ? "OK" : "ERROR"; }

LogLevel log_level_from_string(const std::string& s) {
    if (s == "DEBUG") return LogLevel::DEBUG;
    if (s == "INFO") return LogLevel::INFO;
    if (s == "WARN") return LogLevel::WARN;
    if (s == "ERROR") return LogLevel::ERROR;
    throw ValidationError("level: unknown value '" + s + "'");
}

AlertSeverity severity_from_string(const std::string& s) {
    if (s == "INFO") return AlertSeverity::INFO;
    if (s == "WARNING") return AlertSeverity::WARNING;
    if (s == "CRITICAL") return AlertSeverity::CRITICAL;
    throw ValidationError("severity: unknown value '" + s + "'");
}

SpanStatus span_status_from_string(const std::string& s) {
    if (s == "OK") return SpanStatus::OK;
    if (s == "ERROR") return SpanStatus::ERROR;
    throw ValidationError("status: unknown value '" + s + "'");
}

RecordKind record_kind_from_string(const std::string& s) {
    if (s == "metrics") return RecordKind::Metrics;
    if (s == "logs") return RecordKind::Logs;
    if (s == "traces") return RecordKind::Traces;
    if (s == "alerts") return RecordKind::Alerts;
    if (s == "tickets") return RecordKind::Tickets;
    throw ValidationError("kind: unknown record kind '" + s + "'");
}

namespace {

const json& require(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw ValidationError(std::string(field) + ": missing required field");
    return *it;
}

std::string require_string(const json& j, const char* field) {
    const json& v = require(j, field);
    if (!v.is_string()) throw ValidationError(std::string(field) + ": expected a string");
    return v.get<std::string>();
}

double require_number(const json& j, const char* field) {
    const json& v = require(j, field);
    if (!v.is_number()) throw ValidationError(std::string(field) + ": expected a number");
    return v.get<double>();
}

std::int64_t require_int(const json& j, const char* field) {
    const json& v = require(j, field);
    if (!v.is_number_integer()) throw ValidationError(std::string(field) + ": expected an integer");
    return v.get<std::int64_t>();
}

/// Collects every key not in `known` so serialization can reproduce them.
json collect_extra(const json& j, std::initializer_list<const char*> known) {
    json extra = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool is_known = false;
        for (const char* k : known)
            if (it.key() == k) { is_known = true; break; }
        if (!is_known) extra[it.key()] = it.value();
    }
    return extra;
}

}  // namespace

// ---- MetricSeries ----------------------------------------------------------

void MetricSeries::validate() const {
    if (interval_s <= 0) throw ValidationError("interval_s: must be > 0");
    if (values.empty()) throw ValidationError("values: must contain at least one sample");
    for (double v : values)
        if (!std::isfinite(v)) throw ValidationError("values: contains NaN or infinity");
}

json MetricSeries::to_json() const {
    json j = extra;
    j["service_id"] = service_id;
    j["metric_name"] = metric_name;
    j["start_ts"] = start_ts;
    j["interval_s"] = interval_s;
    j["values"] = values;
    return j;
}

MetricSeries MetricSeries::from_json(const json& j) {
    MetricSeries m;
    m.service_id = require_string(j, "service_id");
    m.metric_name = require_string(j, "metric_name");
    m.start_ts = require_int(j, "start_ts");
    m.interval_s = require_int(j, "interval_s");
    const json& vals = require(j, "values");
    if (!vals.is_array()) throw ValidationError("values: expected an array");
    for (const auto& v : vals) {
        if (!v.is_number()) throw ValidationError("values: expected numbers");
        m.values.push_back(v.get<double>());
    }
    m.extra = collect_extra(j, {"service_id", "metric_name", "start_ts", "interval_s", "values"});
    m.validate();
    return m;
}

// ---- LogRecord -------------------------------------------------------------

void LogRecord::validate() const {
    if (message.empty()) throw ValidationError("message: must be non-empty");
}

json LogRecord::to_json() const {
    json j = extra;
    j["ts"] = ts;
    j["service_id"] = service_id;
    j["level"] = to_string(level);
    j["message"] = message;
    if (session_id) j["session_id"] = *session_id;
    return j;
}

LogRecord LogRecord::from_json(const json& j) {
    LogRecord r;
    r.ts = require_int(j, "ts");
    r.service_id = require_string(j, "service_id");
    r.level = log_level_from_string(require_string(j, "level"));
    r.message = require_string(j, "message");
    if (j.contains("session_id")) {
        if (!j["session_id"].is_string()) throw ValidationError("session_id: expected a string");
        r.session_id = j["session_id"].get<std::string>();
    }
    r.extra = collect_extra(j, {"ts", "service_id", "level", "message", "session_id"});
    r.validate();
    return r;
}

// ---- TraceSpan -------------------------------------------------------------

void TraceSpan::validate() const {
    if (duration_ms < 0.0) throw ValidationError("duration_ms: must be >= 0");
    if (caller == callee) throw ValidationError("caller: must differ from callee");
}

json TraceSpan::to_json() const {
    json j = extra;
    j["trace_id"] = trace_id;
    j["span_id"] = span_id;
    if (parent_span_id) j["parent_span_id"] = *parent_span_id;
    j["caller"] = caller;
    j["callee"] = callee;
    j["start_ts"] = start_ts;
    j["duration_ms"] = duration_ms;
    j["status"] = to_string(status);
    return j;
}

TraceSpan TraceSpan::from_json(const json& j) {
    TraceSpan s;
    s.trace_id = require_string(j, "trace_id");
    s.span_id = require_string(j, "span_id");
    if (j.contains("parent_span_id")) {
        if (!j["parent_span_id"].is_string())
            throw ValidationError("parent_span_id: expected a string");
        s.parent_span_id = j["parent_span_id"].get<std::string>();
    }
    s.caller = require_string(j, "caller");
    s.callee = require_string(j, "callee");
    s.start_ts = require_number(j, "start_ts");
    s.duration_ms = require_number(j, "duration_ms");
    s.status = span_status_from_string(require_string(j, "status"));
    s.extra = collect_extra(j, {"trace_id", "span_id", "parent_span_id", "caller", "callee",
                                "start_ts", "duration_ms", "status"});
    s.validate();
    return s;
}

// ---- Alert -----------------------------------------------------------------

void Alert::validate() const {
    if (text.empty()) throw ValidationError("text: must be non-empty");
}

json Alert::to_json() const {
    json j = extra;
    j["alert_id"] = alert_id;
    j["ts"] = ts;
    j["service_id"] = service_id;
    j["severity"] = to_string(severity);
    j["text"] = text;
    return j;
}

Alert Alert::from_json(const json& j) {
    Alert a;
    a.alert_id = require_string(j, "alert_id");
    a.ts = require_int(j, "ts");
    a.service_id = require_string(j, "service_id");
    a.severity = severity_from_string(require_string(j, "severity"));
    a.text = require_string(j, "text");
    a.extra = collect_extra(j, {"alert_id", "ts", "service_id", "severity", "text"});
    a.validate();
    return a;
}

// ---- Ticket ----------------------------------------------------------------

void Ticket::validate() const {
    if (ticket_id.empty()) throw ValidationError("ticket_id: must be non-empty");
}

json Ticket::to_json() const {
    json j = extra;
    j["ticket_id"] = ticket_id;
    j["ts"] = ts;
    j["product"] = product;
    j["text"] = text;
    j["customer_id"] = customer_id;
    return j;
}

Ticket Ticket::from_json(const json& j) {
    Ticket t;
    t.ticket_id = require_string(j, "ticket_id");
    t.ts = require_int(j, "ts");
    t.product = require_string(j, "product");
    t.text = require_string(j, "text");
    t.customer_id = require_string(j, "customer_id");
    t.extra = collect_extra(j, {"ticket_id", "ts", "product", "text", "customer_id"});
    t.validate();
    return t;
}

// ---- streaming load / save -------------------------------------------------

namespace {

template <typename T, typename PerRecord>
std::vector<T> load_stream_impl(const std::string& path, PerRecord&& check) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::vector<T> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        try {
            T rec = T::from_json(j);
            check(rec, line_no);
            out.push_back(std::move(rec));
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

std::vector<MetricSeries> load_metrics(const std::string& path) {
    return load_stream_impl<MetricSeries>(path, [](const MetricSeries&, long) {});
}

std::vector<LogRecord> load_logs(const std::string& path) {
    std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();
    return load_stream_impl<LogRecord>(path, [&prev_ts](const LogRecord& r, long) {
        if (r.ts < prev_ts)
            throw ValidationError("ts: timestamps must be non-decreasing within a file");
        prev_ts = r.ts;
    });
}

std::vector<TraceSpan> load_traces(const std::string& path) {
    std::map<std::string, std::set<std::string>> seen;
    return load_stream_impl<TraceSpan>(path, [&seen](const TraceSpan& s, long) {
        if (!seen[s.trace_id].insert(s.span_id).second)
            throw ValidationError("span_id: duplicate '" + s.span_id + "' within trace '" +
                                  s.trace_id + "'");
    });
}

std::vector<Alert> load_alerts(const std::string& path) {
    return load_stream_impl<Alert>(path, [](const Alert&, long) {});
}

std::vector<Ticket> load_tickets(const std::string& path) {
    std::set<std::string> ids;
    return load_stream_impl<Ticket>(path, [&ids](const Ticket& t, long) {
        if (!ids.insert(t.ticket_id).second)
            throw ValidationError("ticket_id: duplicate '" + t.ticket_id + "'");
    });
}

template <typename T>
void save_jsonl(const std::vector<T>& records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    for (const auto& r : records) out << r.to_json().dump() << "\n";
}

template void save_jsonl<MetricSeries>(const std::vector<MetricSeries>&, const std::string&);
template void save_jsonl<LogRecord>(const std::vector<LogRecord>&, const std::string&);
template void save_jsonl<TraceSpan>(const std::vector<TraceSpan>&, const std::string&);
template void save_jsonl<Alert>(const std::vector<Alert>&, const std::string&);
template void save_jsonl<Ticket>(const std::vector<Ticket>&, const std::string&);

// ---- windowing -------------------------------------------------------------

std::vector<WindowStats> window_metrics(const MetricSeries& series, std::int64_t window_s) {
    series.validate();
    if (window_s <= 0 || window_s % series.interval_s != 0)
        throw ValidationError("window_s: must be a positive multiple of interval_s");
    const std::size_t per_window = static_cast<std::size_t>(window_s / series.interval_s);
    std::vector<WindowStats> out;
    for (std::size_t i = 0; i < series.values.size(); i += per_window) {
        WindowStats w;
        w.window_start_ts = series.ts_at(i);
        std::size_t end = std::min(i + per_window, series.values.size());
        w.count = static_cast<std::int64_t>(end - i);
        double sum = 0.0;
        double mx = series.values[i];
        for (std::size_t k = i; k < end; ++k) {
            sum += series.values[k];
            mx = std::max(mx, series.values[k]);
        }
        w.mean = sum / static_cast<double>(w.count);
        w.max = mx;
        out.push_back(w);
    }
    return out;
}

}  // namespace opsforge::telemetry
