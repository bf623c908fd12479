#include "opsforge/eval.hpp"

#include <set>

namespace opsforge::eval {

Counts point_adjusted_counts(const std::vector<bool>& predicted,
                             const std::vector<bool>& truth) {
    std::vector<bool> adjusted = predicted;
    std::size_t i = 0;
    const std::size_t n = truth.size();
    while (i < n) {
        if (!truth[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && truth[j]) ++j;
        bool hit = false;
        for (std::size_t k = i; k < j && k < predicted.size(); ++k)
            if (predicted[k]) { hit = true; break; }
        for (std::size_t k = i; k < j; ++k) adjusted[k] = hit;
        i = j;
    }
    return binary_counts(adjusted, truth);
}

Counts binary_counts(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
    Counts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        bool p = i < predicted.size() && predicted[i];
        if (p && truth[i]) ++c.tp;
        else if (p && !truth[i]) ++c.fp;
        else if (!p && truth[i]) ++c.fn;
    }
    return c;
}

Counts pairwise_cluster_counts(const std::map<std::string, int>& predicted,
                               const std::map<std::string, int>& truth) {
    std::set<std::string> ids;
    for (const auto& [id, c] : predicted) ids.insert(id);
    for (const auto& [id, c] : truth) ids.insert(id);
    std::vector<std::string> v(ids.begin(), ids.end());

    auto cluster = [](const std::map<std::string, int>& m, const std::string& id, int fallback) {
        auto it = m.find(id);
        return it == m.end() ? fallback : it->second;
    };

    Counts c;
    int next_singleton = -2;
    std::map<std::string, int> pred_eff, true_eff;
    for (const auto& id : v) {
        pred_eff[id] = cluster(predicted, id, next_singleton);
        true_eff[id] = cluster(truth, id, next_singleton - 1);
        next_singleton -= 2;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            bool same_pred = pred_eff[v[i]] == pred_eff[v[j]];
            bool same_true = true_eff[v[i]] == true_eff[v[j]];
            if (same_pred && same_true) ++c.tp;
            else if (same_pred && !same_true) ++c.fp;
            else if (!same_pred && same_true) ++c.fn;
        }
    }
    return c;
}

}  // namespace opsforge::eval
