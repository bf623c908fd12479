#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsforge/telemetry.hpp"

namespace opsforge::depgraph {

using json = nlohmann::json;

/// Channelized per-service health series derived from trace spans; all
/// channels share one time grid.
struct StatusSeries {
    std::string service_id;
    std::int64_t start_ts = 0;
    std::int64_t interval_s = 1;
    std::vector<double> error_rate;
    std::vector<double> p95_latency_ms;
    std::vector<double> request_rate;

    std::size_t size() const { return error_rate.size(); }
};

/// Aggregates spans by callee service into fixed intervals. Intervals
/// without spans get zeros. The grid spans min..max span start across all
/// services.
std::map<std::string, StatusSeries> build_status_series(
    const std::vector<telemetry::TraceSpan>& spans, std::int64_t interval_s);

struct DependencyEdge {
    std::string caller;
    std::string callee;
    double intensity = 0.0;
    std::int64_t invocation_count = 0;

    json to_json() const;
};

struct IntensityParams {
    int max_lag = 3;                 // L, intervals of propagation delay tried
    double degraded_error_rate = 0.1;  // d
    double degraded_latency_z = 3.0;   // z
};

/// Continuous dependency intensity per observed caller->callee pair: the max
/// over lags of the mean over the error-rate and latency channels of the
/// clamped Pearson correlation, evaluated over the callee's degraded windows
/// dilated by the lag bound. Degradation uses a median/MAD latency baseline,
/// taken from `reference` (a healthy run's status) when provided, else from
/// the series itself. Pairs with fewer than two degraded windows get
/// intensity 0.
std::vector<DependencyEdge> estimate_intensity(
    const std::map<std::string, StatusSeries>& status,
    const std::vector<telemetry::TraceSpan>& spans, const IntensityParams& params = {},
    const std::map<std::string, StatusSeries>* reference = nullptr);

struct ModalityScores {
    std::optional<double> metrics;
    std::optional<double> logs;
    std::optional<double> traces;
};

struct FuseWeights {
    double metrics = 1.0;
    double logs = 1.0;
    double traces = 1.0;
};

/// Weighted mean of the present modality indicators, weights renormalized
/// over the present set. Indicators are clamped to [0, 1]. Throws when no
/// modality is present.
double fuse_anomaly_scores(const ModalityScores& scores, const FuseWeights& weights = {});

struct RootCauseRanking {
    bool alarm = false;
    std::map<std::string, double> scores;
    std::vector<std::pair<std::string, double>> ranking;  // descending

    json to_json() const;
};

struct LocalizeParams {
    double alarm_threshold = 0.3;  // a
    double damping = 0.85;         // beta
    double tol = 1e-9;             // L1 convergence threshold
    int max_iterations = 10000;
};

/// Damped random walk along intensity-weighted caller->callee edges with
/// restart distribution proportional to the fused scores. Emits a ranking
/// only when the max fused score reaches the alarm threshold.
RootCauseRanking localize(const std::map<std::string, double>& fused_scores,
                          const std::vector<DependencyEdge>& edges,
                          const LocalizeParams& params = {});

}  // namespace opsforge::depgraph
