#include "opsforge/resilience.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace opsforge::resilience {

namespace {

struct WindowStats {
    double mean_error = 0.0;
    double p95_latency = 0.0;
};

WindowStats target_window_stats(const sim::RunResult& run, const std::string& service,
                                std::int64_t w_start, std::int64_t w_end) {
    const auto& err = run.series(service, "error_rate");
    const auto& p95 = run.series(service, "p95_latency_ms");
    WindowStats out;
    std::vector<double> errs, lats;
    for (std::size_t i = 0; i < err.values.size(); ++i) {
        std::int64_t ts = err.ts_at(i);
        if (ts < w_start || ts >= w_end) continue;
        errs.push_back(err.values[i]);
        lats.push_back(p95.values[i]);
    }
    out.mean_error = stats::mean(errs);
    out.p95_latency = lats.empty() ? 0.0 : *std::max_element(lats.begin(), lats.end());
    return out;
}

struct BusinessStats {
    double success_rate = 1.0;
    double p95_latency = 0.0;
};

BusinessStats business_window_stats(const sim::RunResult& run, std::int64_t w_start,
                                    std::int64_t w_end) {
    BusinessStats out;
    std::vector<double> srs, lats;
    const auto& b = run.business;
    for (std::size_t i = 0; i < b.success_rate.size(); ++i) {
        std::int64_t ts = b.start_ts + static_cast<std::int64_t>(i) * b.interval_s;
        if (ts < w_start || ts >= w_end) continue;
        if (b.request_count[i] > 0) {
            srs.push_back(b.success_rate[i]);
            lats.push_back(b.p95_latency_ms[i]);
        }
    }
    out.success_rate = srs.empty() ? 1.0 : stats::mean(srs);
    out.p95_latency = lats.empty() ? 0.0 : *std::max_element(lats.begin(), lats.end());
    return out;
}

}  // namespace

ResilienceReport run_test(const sim::Scenario& scenario, const sim::FaultSpec& fault,
                          std::uint64_t seed, const RunTestParams& params) {
    fault.validate();
    scenario.service(fault.target_service);  // throws on unknown target
    if (scenario.business_metrics.empty())
        throw ValidationError("business_metrics: scenario must declare at least one");

    sim::Scenario baseline_sc = sim::without_faults(scenario);
    sim::Scenario faulted_sc = sim::with_fault(scenario, fault);
    sim::RunResult baseline = sim::run_scenario(baseline_sc, seed);
    sim::RunResult faulted = sim::run_scenario(faulted_sc, seed);

    const std::int64_t w_start = fault.start_ts;
    const std::int64_t w_end = fault.start_ts + fault.duration_s;

    // Performance channels of the target: absolute worsening for the bounded
    // error-rate channel, relative worsening for latency.
    WindowStats base = target_window_stats(baseline, fault.target_service, w_start, w_end);
    WindowStats flt = target_window_stats(faulted, fault.target_service, w_start, w_end);
    double err_worsening = std::max(0.0, flt.mean_error - base.mean_error);
    double lat_worsening =
        std::max(0.0, (flt.p95_latency - base.p95_latency) /
                          std::max(base.p95_latency, params.epsilon));

    ResilienceReport report;
    report.fault = fault;
    report.perf_degradation = std::max(err_worsening, lat_worsening);

    BusinessStats bb = business_window_stats(baseline, w_start, w_end);
    BusinessStats bf = business_window_stats(faulted, w_start, w_end);
    double biz = 0.0;
    for (const auto& metric : scenario.business_metrics) {
        if (metric == "e2e_success_rate") {
            biz = std::max(biz, std::max(0.0, (bb.success_rate - bf.success_rate) /
                                                  std::max(bb.success_rate, params.epsilon)));
        } else if (metric == "e2e_p95_latency_ms") {
            biz = std::max(biz, std::max(0.0, (bf.p95_latency - bb.p95_latency) /
                                                  std::max(bb.p95_latency, params.epsilon)));
        } else {
            throw ValidationError("business_metrics: unknown metric '" + metric + "'");
        }
    }
    report.business_degradation = biz;
    report.propagation = stats::clamp01(
        report.business_degradation / std::max(report.perf_degradation, params.epsilon));
    report.resilience_index = 1.0 - report.propagation;
    return report;
}

int max_runs_per_cell(const CampaignParams& params) {
    if (params.escalation <= 1.0) throw ValidationError("escalation: must be > 1");
    if (params.initial_intensity <= 0.0 || params.initial_intensity > 1.0)
        throw ValidationError("initial_intensity: must lie in (0, 1]");
    return static_cast<int>(std::ceil(std::log(1.0 / params.initial_intensity) /
                                          std::log(params.escalation) +
                                      1.0));
}

CampaignResult adaptive_campaign(const sim::Scenario& scenario,
                                 const std::vector<std::string>& services,
                                 const std::vector<sim::FaultType>& fault_types,
                                 std::uint64_t seed, const CampaignParams& params) {
    if (services.empty()) throw ValidationError("services: must be non-empty");
    if (fault_types.empty()) throw ValidationError("fault_types: must be non-empty");
    if (params.escalation <= 1.0) throw ValidationError("escalation: must be > 1");
    if (params.manifest_threshold <= 0.0)
        throw ValidationError("manifest_threshold: must be > 0");

    std::int64_t duration = params.fault_duration_s > 0 ? params.fault_duration_s
                                                        : scenario.workload.duration_s / 3;
    std::int64_t offset = params.fault_offset_s > 0 ? params.fault_offset_s
                                                    : scenario.workload.duration_s / 3;

    CampaignResult result;
    for (const auto& service : services) {
        for (const auto& type : fault_types) {
            CampaignCell cell;
            cell.service = service;
            cell.fault_type = type;
            double intensity = params.initial_intensity;
            int runs = 0;
            while (true) {
                sim::FaultSpec fault;
                fault.target_service = service;
                fault.fault_type = type;
                fault.intensity = intensity;
                fault.duration_s = duration;
                fault.start_ts = scenario.start_epoch + offset;
                ResilienceReport report = run_test(scenario, fault, seed, params.test);
                ++runs;
                if (report.perf_degradation >= params.manifest_threshold) {
                    cell.report = report;
                    cell.report.manifested = true;
                    break;
                }
                if (intensity >= 1.0) {
                    cell.report = report;
                    cell.report.manifested = false;
                    cell.report.propagation = 0.0;
                    cell.report.resilience_index = 1.0;
                    break;
                }
                intensity = std::min(1.0, intensity * params.escalation);
            }
            cell.report.runs_attempted = runs;
            result.total_runs += runs;
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

json ResilienceReport::to_json() const {
    json j;
    j["fault"] = fault.to_json();
    j["perf_degradation"] = perf_degradation;
    j["business_degradation"] = business_degradation;
    j["propagation"] = propagation;
    j["resilience_index"] = resilience_index;
    j["manifested"] = manifested;
    j["runs_attempted"] = runs_attempted;
    return j;
}

json CampaignResult::to_json() const {
    json j;
    json cells_j = json::array();
    for (const auto& c : cells) {
        json cj;
        cj["service"] = c.service;
        cj["fault_type"] = sim::to_string(c.fault_type);
        cj["report"] = c.report.to_json();
        cells_j.push_back(cj);
    }
    j["cells"] = cells_j;
    j["total_runs"] = total_runs;
    return j;
}

std::string CampaignResult::to_table() const {
    std::ostringstream out;
    out << "service              fault   intensity  perf_deg  biz_deg  propagation  resilience  manifested\n";
    char line[256];
    for (const auto& c : cells) {
        std::snprintf(line, sizeof(line), "%-20s %-7s %9.3f %9.3f %8.3f %12.3f %11.3f  %s\n",
                      c.service.c_str(), sim::to_string(c.fault_type).c_str(),
                      c.report.fault.intensity, c.report.perf_degradation,
                      c.report.business_degradation, c.report.propagation,
                      c.report.resilience_index, c.report.manifested ? "yes" : "NOT-MANIFESTED");
        out << line;
    }
    return out.str();
}

}  // namespace opsforge::resilience
