#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "opsforge/simulator.hpp"

namespace opsforge::resilience {

using json = nlohmann::json;

/// Degradation measurements for one injected fault. resilience_index is
/// always 1 - propagation; propagation is the capped ratio of business to
/// performance degradation.
struct ResilienceReport {
    sim::FaultSpec fault;
    double perf_degradation = 0.0;      // worst worsening of the target's channels
    double business_degradation = 0.0;  // worst worsening of declared business metrics
    double propagation = 0.0;
    double resilience_index = 1.0;
    bool manifested = true;
    int runs_attempted = 1;

    json to_json() const;
};

struct RunTestParams {
    double epsilon = 1e-6;  // floor for ratio denominators
};

/// Paired baseline/faulted simulator runs with the same seed. Error-rate
/// style channels degrade by absolute difference, latency channels by
/// relative increase over the baseline.
ResilienceReport run_test(const sim::Scenario& scenario, const sim::FaultSpec& fault,
                          std::uint64_t seed, const RunTestParams& params = {});

struct CampaignParams {
    double initial_intensity = 0.1;  // i0
    double escalation = 2.0;         // g, multiplies intensity each step
    double manifest_threshold = 0.2; // m, perf degradation that counts as manifested
    std::int64_t fault_duration_s = 0;   // 0 -> a third of the workload window
    std::int64_t fault_offset_s = 0;     // 0 -> a third into the workload window
    RunTestParams test;
};

struct CampaignCell {
    std::string service;
    sim::FaultType fault_type = sim::FaultType::ERROR;
    ResilienceReport report;
};

struct CampaignResult {
    std::vector<CampaignCell> cells;
    int total_runs = 0;  // paired-run count across all escalations

    json to_json() const;
    std::string to_table() const;
};

/// Self-adaptive campaign: per (service, fault type), escalate intensity by
/// g until the fault manifests (perf degradation >= m) or intensity hits 1.
/// Cells that never manifest are flagged with propagation 0.
CampaignResult adaptive_campaign(const sim::Scenario& scenario,
                                 const std::vector<std::string>& services,
                                 const std::vector<sim::FaultType>& fault_types,
                                 std::uint64_t seed, const CampaignParams& params = {});

/// Upper bound on the escalation runs per cell for the given parameters.
int max_runs_per_cell(const CampaignParams& params);

}  // namespace opsforge::resilience
