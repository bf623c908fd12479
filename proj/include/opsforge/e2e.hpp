#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsforge/depgraph.hpp"
#include "opsforge/eval.hpp"
#include "opsforge/incident.hpp"
#include "opsforge/logdetect.hpp"
#include "opsforge/resilience.hpp"
#include "opsforge/simulator.hpp"
#include "opsforge/sketch.hpp"

namespace opsforge::e2e {

using json = nlohmann::json;

struct PipelineParams {
    sketch::SketchParams sketch_params;
    double logdetect_epsilon = 0.01;
    double signature_margin = 0.3;
    std::int64_t bucket_s = 300;
    incident::GipParams gip;
    incident::CorrelationParams correlation;
    depgraph::IntensityParams intensity;
    depgraph::LocalizeParams localize;
    depgraph::FuseWeights fuse_weights;
    std::string lexicon_path;  // empty -> builtin default lexicon
    bool train_scorer = true;
    // KPI-suite settings for the detection benchmark in the report.
    int kpi_seeds = 5;
    int kpi_series_per_seed = 10;
    int kpi_points = 10000;
};

logparse::Lexicon default_lexicon();
logparse::Lexicon resolve_lexicon(const std::string& path);

// ---- sketch over a simulated run ----------------------------------------

struct SketchRunAnalysis {
    eval::Counts counts;  // service-level point-adjusted counts, all services pooled
    // Per (service): per-sample anomaly flags over the metric grid, OR of the
    // error-rate and latency series verdicts. Used as the metric modality.
    std::map<std::string, std::vector<bool>> service_flags;
};

SketchRunAnalysis analyze_sketch_on_run(const sim::Scenario& scenario,
                                        const sim::RunResult& baseline,
                                        const sim::RunResult& faulted,
                                        const sketch::SketchParams& params);

/// Point-adjusted F1 of pattern-sketch detection on a synthetic KPI suite:
/// labeled discovery on the first half, detection on the second half.
double kpi_suite_f1(int n_series, int n_points, std::uint64_t seed,
                    const sketch::SketchParams& params);

// ---- logs over a simulated run -------------------------------------------

struct LogAnalysis {
    double f1_joint = 0.0;
    double f1_syntax = 0.0;
    double identify_precision = 0.0;
    int identify_evaluated = 0;
    eval::Counts joint_counts;
    eval::Counts syntax_counts;
};

LogAnalysis analyze_logs(const sim::RunResult& baseline, const sim::RunResult& faulted,
                         const logparse::Lexicon& lexicon, const PipelineParams& params);

// ---- tickets over a simulated run -----------------------------------------

struct TicketAnalysis {
    eval::Counts pair_counts;
    double cluster_f1 = 0.0;
    bool zero_overlap_duplicate_found = false;
    std::vector<incident::TicketCluster> clusters;
    incident::ScorerWeights weights;
    int n_events = 0;
    int n_components = 0;
};

incident::AffinityMap affinity_from_scenario(const sim::Scenario& scenario);

/// Labels (ticket, event) pairs from ground truth: an event is a correct
/// anchor when it belongs to the ticket's incident and to the service
/// backing the ticket's product.
std::vector<std::pair<incident::Features, bool>> label_pairs(
    const sim::RunResult& run, const std::vector<incident::Event>& events,
    const incident::TfidfModel& tfidf, const incident::AffinityMap& affinity,
    double lambda_s, std::int64_t window_slack_s = 30);

/// Trains the link scorer on pairs pooled from dedicated training runs of
/// the scenario (indicative events only).
incident::ScorerWeights train_scorer_on_runs(const sim::Scenario& scenario,
                                             const std::vector<std::uint64_t>& seeds,
                                             const PipelineParams& params);

TicketAnalysis analyze_tickets(const sim::Scenario& scenario, const sim::RunResult& run,
                               const PipelineParams& params,
                               const std::optional<incident::ScorerWeights>& weights);

// ---- RCA over a simulated run ----------------------------------------------

struct RcaOutcome {
    std::string incident_id;
    std::string culprit;
    bool alarmed = false;
    bool top1 = false;
    bool top3 = false;
    std::vector<std::pair<std::string, double>> ranking;
    std::map<std::string, double> fused;
};

struct RcaAnalysis {
    std::vector<RcaOutcome> outcomes;
    std::vector<depgraph::DependencyEdge> edges;
    double top1_rate = 0.0;
    double top3_rate = 0.0;
};

RcaAnalysis analyze_rca(const sim::Scenario& scenario, const sim::RunResult& baseline,
                        const sim::RunResult& faulted, const PipelineParams& params);

// ---- full pipeline -----------------------------------------------------------

/// Runs simulate -> every analysis -> consolidated report checked against
/// ground truth. Writes the telemetry set, derived artifacts, and
/// report.json under out_dir; returns the report.
json run_e2e(const sim::Scenario& scenario, std::uint64_t seed, const std::string& out_dir,
             const PipelineParams& params = {}, bool quiet = false);

}  // namespace opsforge::e2e
