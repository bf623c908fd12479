#pragma once

#include <map>
#include <string>
#include <vector>

namespace opsforge::eval {

struct Counts {
    long tp = 0;
    long fp = 0;
    long fn = 0;

    void add(const Counts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
    }
    double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
    double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
    double f1() const {
        double p = precision(), r = recall();
        return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    }
};

/// Point-adjusted counts: any hit inside a contiguous true segment counts
/// the whole segment as detected; predictions outside true segments are
/// false positives.
Counts point_adjusted_counts(const std::vector<bool>& predicted,
                             const std::vector<bool>& truth);

/// Plain per-item counts.
Counts binary_counts(const std::vector<bool>& predicted, const std::vector<bool>& truth);

/// Pairwise clustering F1: same-cluster pairs in the prediction vs the
/// ground-truth partition. Items are identified by string ids; both maps
/// must cover the same id set (missing ids count as singletons).
Counts pairwise_cluster_counts(const std::map<std::string, int>& predicted,
                               const std::map<std::string, int>& truth);

}  // namespace opsforge::eval
