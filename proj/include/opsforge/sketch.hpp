#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsforge/telemetry.hpp"

namespace opsforge::sketch {

using json = nlohmann::json;

enum class PatternLabel { NORMAL, ANOMALOUS };
std::string to_string(PatternLabel v);
PatternLabel pattern_label_from_string(const std::string& s);

/// Mean of a cluster of metric subsequences. `values` is the arithmetic mean
/// of the raw member windows; distance comparisons z-normalize both sides.
struct MetricPattern {
    std::vector<double> values;
    PatternLabel label = PatternLabel::NORMAL;
    std::int64_t member_count = 1;
    std::int64_t last_updated_ts = 0;
};

struct SketchParams {
    int window = 12;              // w, samples per subsequence
    double theta = 1.5;           // match-distance threshold (z-normalized Euclidean)
    double rare_fraction = 0.05;  // p, unlabeled clusters rarer than this are anomalous
    int promote_k = 3;            // recurrences before a candidate becomes a pattern
    std::int64_t candidate_horizon = 1000;  // windows a candidate may wait before expiring
};

struct PatternSet {
    int window = 12;
    double theta = 1.5;
    double rare_fraction = 0.05;
    int promote_k = 3;
    std::int64_t candidate_horizon = 1000;
    std::vector<MetricPattern> patterns;

    // Test mode: raw member windows per pattern, parallel to `patterns`.
    bool keep_members = false;
    std::vector<std::vector<std::vector<double>>> members;

    // Adaptation state: unmatched windows waiting for promote_k recurrences.
    struct Candidate {
        std::vector<double> sum;
        std::int64_t count = 0;
        std::int64_t first_seen = 0;  // adaptation clock value at creation
    };
    std::vector<Candidate> candidates;
    std::int64_t windows_seen = 0;

    json to_json() const;
    static PatternSet from_json(const json& j);
    void save(const std::string& path) const;
    static PatternSet load(const std::string& path);
};

/// Z-normalization; constant vectors map to the zero vector.
std::vector<double> znormalize(const std::vector<double>& v);

/// Euclidean distance between the z-normalized forms of a and b.
double zdistance(const std::vector<double>& a, const std::vector<double>& b);

/// Greedy single-pass clustering of all sliding windows. With `labels`
/// (per-sample anomaly flags) a cluster touching a labeled sample is
/// ANOMALOUS; without labels, clusters holding fewer than rare_fraction of
/// all windows are ANOMALOUS.
PatternSet discover_patterns(const telemetry::MetricSeries& series, const SketchParams& params,
                             const std::vector<bool>* labels = nullptr,
                             bool keep_members = false);

struct MatchResult {
    std::size_t pattern_index = 0;
    double distance = 0.0;
};

/// Nearest pattern by z-normalized Euclidean distance; ties break to the
/// lowest index. Throws on length mismatch or empty set.
MatchResult match(const std::vector<double>& subseq, const PatternSet& set);

struct WindowVerdict {
    std::size_t window_start = 0;
    bool anomalous = false;
    std::size_t nearest_pattern = 0;
    double distance = 0.0;
};

std::vector<WindowVerdict> detect(const telemetry::MetricSeries& series, const PatternSet& set);

/// Per-sample anomaly labels: OR over all windows covering the sample.
std::vector<bool> per_sample_labels(std::size_t n_samples, int window,
                                    const std::vector<WindowVerdict>& verdicts);

/// Online adaptation. Matched windows update the matched pattern's running
/// mean; unmatched windows accumulate as candidates and are promoted to new
/// NORMAL patterns after promote_k recurrences within the horizon. Labels of
/// existing patterns never change.
void adapt(PatternSet& set, const std::vector<std::vector<double>>& stream_windows,
           std::int64_t now_ts = 0);

}  // namespace opsforge::sketch
