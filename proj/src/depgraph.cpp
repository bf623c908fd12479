#include "opsforge/depgraph.hpp"

#include <algorithm>
#include <cmath>

namespace opsforge::depgraph {

std::map<std::string, StatusSeries> build_status_series(
    const std::vector<telemetry::TraceSpan>& spans, std::int64_t interval_s) {
    if (interval_s <= 0) throw ValidationError("interval_s: must be > 0");
    std::map<std::string, StatusSeries> out;
    if (spans.empty()) return out;

    double min_ts = spans.front().start_ts, max_ts = spans.front().start_ts;
    for (const auto& s : spans) {
        min_ts = std::min(min_ts, s.start_ts);
        max_ts = std::max(max_ts, s.start_ts);
    }
    const std::int64_t t0 =
        (static_cast<std::int64_t>(std::floor(min_ts)) / interval_s) * interval_s;
    const std::size_t n = static_cast<std::size_t>(
        (static_cast<std::int64_t>(std::floor(max_ts)) - t0) / interval_s + 1);

    struct Acc {
        std::vector<std::vector<double>> durations;
        std::vector<std::int64_t> errors;
        std::vector<std::int64_t> total;
    };
    std::map<std::string, Acc> acc;
    for (const auto& s : spans) {
        Acc& a = acc[s.callee];
        if (a.total.empty()) {
            a.durations.resize(n);
            a.errors.assign(n, 0);
            a.total.assign(n, 0);
        }
        std::size_t idx = static_cast<std::size_t>(
            (static_cast<std::int64_t>(std::floor(s.start_ts)) - t0) / interval_s);
        if (idx >= n) idx = n - 1;
        a.durations[idx].push_back(s.duration_ms);
        if (s.status == telemetry::SpanStatus::ERROR) ++a.errors[idx];
        ++a.total[idx];
    }

    for (auto& [service, a] : acc) {
        StatusSeries st;
        st.service_id = service;
        st.start_ts = t0;
        st.interval_s = interval_s;
        st.error_rate.resize(n, 0.0);
        st.p95_latency_ms.resize(n, 0.0);
        st.request_rate.resize(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (a.total[i] > 0) {
                st.error_rate[i] =
                    static_cast<double>(a.errors[i]) / static_cast<double>(a.total[i]);
                st.p95_latency_ms[i] = stats::percentile_nearest_rank(a.durations[i], 0.95);
                st.request_rate[i] =
                    static_cast<double>(a.total[i]) / static_cast<double>(interval_s);
            }
        }
        out[service] = std::move(st);
    }
    return out;
}

namespace {

double clamped_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    return stats::clamp01(stats::pearson(a, b));
}

// Median/MAD z-score baseline: a fault window inside the series must not
// inflate its own baseline.
double robust_z(const std::vector<double>& v, double x) {
    if (v.size() < 2) return 0.0;
    std::vector<double> sorted(v);
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[sorted.size() / 2];
    std::vector<double> dev;
    dev.reserve(v.size());
    for (double y : v) dev.push_back(std::abs(y - median));
    std::sort(dev.begin(), dev.end());
    double mad = dev[dev.size() / 2] * 1.4826;
    if (mad <= 0.0) {
        double sd = stats::stddev(v);
        if (sd <= 0.0) return 0.0;
        return (x - stats::mean(v)) / sd;
    }
    return (x - median) / mad;
}

}  // namespace

std::vector<DependencyEdge> estimate_intensity(
    const std::map<std::string, StatusSeries>& status,
    const std::vector<telemetry::TraceSpan>& spans, const IntensityParams& params,
    const std::map<std::string, StatusSeries>* reference) {
    // Observed invocation pairs (internal edges only; synthetic callers such
    // as the client side of root spans participate if present in status).
    std::map<std::pair<std::string, std::string>, std::int64_t> pairs;
    for (const auto& s : spans) ++pairs[{s.caller, s.callee}];

    std::vector<DependencyEdge> out;
    for (const auto& [key, count] : pairs) {
        const auto& [caller, callee] = key;
        DependencyEdge edge;
        edge.caller = caller;
        edge.callee = callee;
        edge.invocation_count = count;
        edge.intensity = 0.0;

        auto caller_it = status.find(caller);
        auto callee_it = status.find(callee);
        if (caller_it == status.end() || callee_it == status.end()) {
            out.push_back(edge);
            continue;
        }
        const StatusSeries& cal = caller_it->second;
        const StatusSeries& cee = callee_it->second;
        const std::size_t n = std::min(cal.size(), cee.size());

        // Degraded windows of the callee: elevated error rate or a robust
        // latency z-score beyond the threshold. The z baseline comes from a
        // healthy reference run when one is supplied.
        const std::vector<double>* z_ref = &cee.p95_latency_ms;
        if (reference) {
            auto ref_it = reference->find(callee);
            if (ref_it != reference->end()) z_ref = &ref_it->second.p95_latency_ms;
        }
        std::vector<bool> degraded(n, false);
        int degraded_count = 0;
        for (std::size_t t = 0; t < n; ++t) {
            bool err = cee.error_rate[t] > params.degraded_error_rate;
            bool slow = robust_z(*z_ref, cee.p95_latency_ms[t]) > params.degraded_latency_z;
            if (err || slow) {
                degraded[t] = true;
                ++degraded_count;
            }
        }
        if (degraded_count >= 2) {
            // Correlation support: degraded windows dilated by the lag bound,
            // so the fault's on/off transitions carry into the estimate.
            std::vector<std::size_t> support;
            for (std::size_t t = 0; t < n; ++t) {
                bool near = false;
                for (int d = -params.max_lag; d <= params.max_lag && !near; ++d) {
                    std::int64_t u = static_cast<std::int64_t>(t) + d;
                    if (u >= 0 && u < static_cast<std::int64_t>(n) &&
                        degraded[static_cast<std::size_t>(u)])
                        near = true;
                }
                if (near) support.push_back(t);
            }
            double best = 0.0;
            for (int lag = 0; lag <= params.max_lag; ++lag) {
                std::vector<double> cee_err, cal_err, cee_lat, cal_lat;
                for (std::size_t t : support) {
                    std::size_t t2 = t + static_cast<std::size_t>(lag);
                    if (t2 >= n) continue;
                    cee_err.push_back(cee.error_rate[t]);
                    cal_err.push_back(cal.error_rate[t2]);
                    cee_lat.push_back(cee.p95_latency_ms[t]);
                    cal_lat.push_back(cal.p95_latency_ms[t2]);
                }
                if (cee_err.size() < 2) continue;
                double channel_mean = 0.5 * (clamped_pearson(cee_err, cal_err) +
                                             clamped_pearson(cee_lat, cal_lat));
                best = std::max(best, channel_mean);
            }
            edge.intensity = best;
        }
        out.push_back(edge);
    }
    return out;
}

double fuse_anomaly_scores(const ModalityScores& scores, const FuseWeights& weights) {
    double total_w = 0.0, total = 0.0;
    auto add = [&](const std::optional<double>& v, double w) {
        if (!v) return;
        total += w * stats::clamp01(*v);
        total_w += w;
    };
    add(scores.metrics, weights.metrics);
    add(scores.logs, weights.logs);
    add(scores.traces, weights.traces);
    if (total_w <= 0.0) throw ValidationError("scores: at least one modality must be present");
    return total / total_w;
}

RootCauseRanking localize(const std::map<std::string, double>& fused_scores,
                          const std::vector<DependencyEdge>& edges,
                          const LocalizeParams& params) {
    RootCauseRanking result;
    double max_score = 0.0;
    for (const auto& [svc, s] : fused_scores) max_score = std::max(max_score, s);
    result.alarm = max_score >= params.alarm_threshold;
    if (!result.alarm) return result;

    // Node universe: scored services plus any edge endpoints.
    std::map<std::string, std::size_t> index;
    std::vector<std::string> names;
    auto intern = [&](const std::string& s) {
        auto it = index.find(s);
        if (it != index.end()) return it->second;
        index[s] = names.size();
        names.push_back(s);
        return names.size() - 1;
    };
    for (const auto& [svc, s] : fused_scores) intern(svc);
    for (const auto& e : edges) {
        intern(e.caller);
        intern(e.callee);
    }
    const std::size_t n = names.size();

    // Restart distribution proportional to fused scores.
    std::vector<double> restart(n, 0.0);
    double restart_sum = 0.0;
    for (const auto& [svc, s] : fused_scores) {
        restart[index[svc]] = std::max(0.0, s);
        restart_sum += std::max(0.0, s);
    }
    for (auto& r : restart) r /= restart_sum;  // alarm implies restart_sum > 0

    // Out-edges weighted by intensity; zero-intensity edges carry no mass.
    std::vector<std::vector<std::pair<std::size_t, double>>> out_edges(n);
    std::vector<double> out_weight(n, 0.0);
    for (const auto& e : edges) {
        if (e.intensity <= 0.0) continue;
        std::size_t u = index[e.caller], v = index[e.callee];
        out_edges[u].push_back({v, e.intensity});
        out_weight[u] += e.intensity;
    }

    std::vector<double> x(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n, 0.0);
    bool converged = false;
    for (int iter = 0; iter < params.max_iterations; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        double dangling = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            if (out_weight[u] <= 0.0) {
                dangling += x[u];
                continue;
            }
            for (const auto& [v, w] : out_edges[u]) next[v] += x[u] * w / out_weight[u];
        }
        double delta = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            double val = params.damping * (next[v] + dangling * restart[v]) +
                         (1.0 - params.damping) * restart[v];
            delta += std::abs(val - x[v]);
            next[v] = val;
        }
        x.swap(next);
        if (delta < params.tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ValidationError("localize: power iteration did not converge within " +
                              std::to_string(params.max_iterations) + " iterations");

    for (std::size_t i = 0; i < n; ++i) result.scores[names[i]] = x[i];
    for (const auto& [svc, s] : result.scores) result.ranking.push_back({svc, s});
    std::sort(result.ranking.begin(), result.ranking.end(),
              [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
              });
    return result;
}

json DependencyEdge::to_json() const {
    return json{{"caller", caller},
                {"callee", callee},
                {"intensity", intensity},
                {"invocation_count", invocation_count}};
}

json RootCauseRanking::to_json() const {
    json j;
    j["alarm"] = alarm;
    j["scores"] = scores;
    json rank = json::array();
    for (const auto& [svc, s] : ranking) rank.push_back({{"service", svc}, {"score", s}});
    j["ranking"] = rank;
    return j;
}

}  // namespace opsforge::depgraph
