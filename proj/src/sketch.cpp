#include "opsforge/sketch.hpp"

#include <cmath>
#include <fstream>

namespace opsforge::sketch {

std::string to_string(PatternLabel v) {
    return v == PatternLabel::NORMAL ? "NORMAL" : "ANOMALOUS";
}

PatternLabel pattern_label_from_string(const std::string& s) {
    if (s == "NORMAL") return PatternLabel::NORMAL;
    if (s == "ANOMALOUS") return PatternLabel::ANOMALOUS;
    throw ValidationError("label: unknown value '" + s + "'");
}

std::vector<double> znormalize(const std::vector<double>& v) {
    double m = stats::mean(v);
    double sd = stats::stddev(v);
    std::vector<double> out(v.size(), 0.0);
    if (sd <= 0.0) return out;  // constant window -> zero vector
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - m) / sd;
    return out;
}

double zdistance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ValidationError("subsequence length mismatch: " + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()));
    std::vector<double> za = znormalize(a);
    std::vector<double> zb = znormalize(b);
    double s = 0.0;
    for (std::size_t i = 0; i < za.size(); ++i) s += (za[i] - zb[i]) * (za[i] - zb[i]);
    return std::sqrt(s);
}

namespace {

double zdist_pre(const std::vector<double>& za, const std::vector<double>& zb) {
    double s = 0.0;
    for (std::size_t i = 0; i < za.size(); ++i) s += (za[i] - zb[i]) * (za[i] - zb[i]);
    return std::sqrt(s);
}

// Working cluster during discovery: running sum plus cached z-form of the mean.
struct Cluster {
    std::vector<double> sum;
    std::int64_t count = 0;
    bool any_anomalous_member = false;
    std::int64_t last_ts = 0;
    std::vector<double> zmean;
    std::vector<std::vector<double>> members;

    std::vector<double> mean() const {
        std::vector<double> m(sum.size());
        for (std::size_t i = 0; i < sum.size(); ++i)
            m[i] = sum[i] / static_cast<double>(count);
        return m;
    }
    void refresh_zmean() { zmean = znormalize(mean()); }
};

}  // namespace

PatternSet discover_patterns(const telemetry::MetricSeries& series, const SketchParams& params,
                             const std::vector<bool>* labels, bool keep_members) {
    series.validate();
    const std::size_t n = series.values.size();
    const std::size_t w = static_cast<std::size_t>(params.window);
    if (params.window <= 0) throw ValidationError("window: must be > 0");
    if (params.theta <= 0.0) throw ValidationError("theta: must be > 0");
    if (params.rare_fraction <= 0.0 || params.rare_fraction >= 1.0)
        throw ValidationError("rare_fraction: must lie in (0, 1)");
    if (n < w)
        throw ValidationError("values: series shorter than window (" + std::to_string(n) +
                              " < " + std::to_string(w) + ")");
    if (labels && labels->size() != n)
        throw ValidationError("labels: must match series length");

    std::vector<Cluster> clusters;
    const std::size_t total_windows = n - w + 1;
    for (std::size_t start = 0; start < total_windows; ++start) {
        std::vector<double> win(series.values.begin() + start, series.values.begin() + start + w);
        std::vector<double> zwin = znormalize(win);

        std::size_t best = clusters.size();
        double best_d = 0.0;
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            double d = zdist_pre(zwin, clusters[c].zmean);
            if (best == clusters.size() || d < best_d) {
                best = c;
                best_d = d;
            }
        }

        bool anomalous_member = false;
        if (labels)
            for (std::size_t k = start; k < start + w; ++k)
                if ((*labels)[k]) { anomalous_member = true; break; }

        if (best < clusters.size() && best_d <= params.theta) {
            Cluster& c = clusters[best];
            for (std::size_t i = 0; i < w; ++i) c.sum[i] += win[i];
            ++c.count;
            c.any_anomalous_member |= anomalous_member;
            c.last_ts = series.ts_at(start);
            c.refresh_zmean();
            if (keep_members) c.members.push_back(win);
        } else {
            Cluster c;
            c.sum = win;
            c.count = 1;
            c.any_anomalous_member = anomalous_member;
            c.last_ts = series.ts_at(start);
            c.refresh_zmean();
            if (keep_members) c.members.push_back(win);
            clusters.push_back(std::move(c));
        }
    }

    PatternSet set;
    set.window = params.window;
    set.theta = params.theta;
    set.rare_fraction = params.rare_fraction;
    set.promote_k = params.promote_k;
    set.candidate_horizon = params.candidate_horizon;
    set.keep_members = keep_members;
    for (const Cluster& c : clusters) {
        MetricPattern p;
        p.values = c.mean();
        p.member_count = c.count;
        p.last_updated_ts = c.last_ts;
        if (labels) {
            p.label = c.any_anomalous_member ? PatternLabel::ANOMALOUS : PatternLabel::NORMAL;
        } else {
            double share = static_cast<double>(c.count) / static_cast<double>(total_windows);
            p.label = share < params.rare_fraction ? PatternLabel::ANOMALOUS
                                                   : PatternLabel::NORMAL;
        }
        set.patterns.push_back(std::move(p));
        if (keep_members) set.members.push_back(c.members);
    }
    return set;
}

MatchResult match(const std::vector<double>& subseq, const PatternSet& set) {
    if (set.patterns.empty()) throw ValidationError("patterns: pattern set is empty");
    std::vector<double> zq = znormalize(subseq);
    MatchResult best;
    bool first = true;
    for (std::size_t i = 0; i < set.patterns.size(); ++i) {
        if (set.patterns[i].values.size() != subseq.size())
            throw ValidationError("subseq: length mismatch with pattern values");
        double d = zdist_pre(zq, znormalize(set.patterns[i].values));
        if (first || d < best.distance) {
            best.pattern_index = i;
            best.distance = d;
            first = false;
        }
    }
    return best;
}

std::vector<WindowVerdict> detect(const telemetry::MetricSeries& series, const PatternSet& set) {
    series.validate();
    const std::size_t w = static_cast<std::size_t>(set.window);
    if (series.values.size() < w)
        throw ValidationError("values: series shorter than pattern window");

    // Pre-normalize pattern means once.
    std::vector<std::vector<double>> zp;
    zp.reserve(set.patterns.size());
    for (const auto& p : set.patterns) zp.push_back(znormalize(p.values));
    if (zp.empty()) throw ValidationError("patterns: pattern set is empty");

    std::vector<WindowVerdict> out;
    for (std::size_t start = 0; start + w <= series.values.size(); ++start) {
        std::vector<double> win(series.values.begin() + start, series.values.begin() + start + w);
        std::vector<double> zwin = znormalize(win);
        WindowVerdict v;
        v.window_start = start;
        bool first = true;
        for (std::size_t i = 0; i < zp.size(); ++i) {
            double d = zdist_pre(zwin, zp[i]);
            if (first || d < v.distance) {
                v.nearest_pattern = i;
                v.distance = d;
                first = false;
            }
        }
        v.anomalous = set.patterns[v.nearest_pattern].label == PatternLabel::ANOMALOUS ||
                      v.distance > set.theta;
        out.push_back(v);
    }
    return out;
}

std::vector<bool> per_sample_labels(std::size_t n_samples, int window,
                                    const std::vector<WindowVerdict>& verdicts) {
    std::vector<bool> out(n_samples, false);
    for (const auto& v : verdicts) {
        if (!v.anomalous) continue;
        for (std::size_t k = v.window_start;
             k < std::min(n_samples, v.window_start + static_cast<std::size_t>(window)); ++k)
            out[k] = true;
    }
    return out;
}

void adapt(PatternSet& set, const std::vector<std::vector<double>>& stream_windows,
           std::int64_t now_ts) {
    const std::size_t w = static_cast<std::size_t>(set.window);
    for (const auto& win : stream_windows) {
        if (win.size() != w) throw ValidationError("stream window length != pattern window");
        ++set.windows_seen;

        // Expire candidates that outlived the horizon without promotion.
        std::erase_if(set.candidates, [&](const PatternSet::Candidate& c) {
            return set.windows_seen - c.first_seen > set.candidate_horizon;
        });

        if (!set.patterns.empty()) {
            MatchResult m = match(win, set);
            if (m.distance <= set.theta) {
                MetricPattern& p = set.patterns[m.pattern_index];
                double c = static_cast<double>(p.member_count);
                for (std::size_t i = 0; i < w; ++i)
                    p.values[i] = (p.values[i] * c + win[i]) / (c + 1.0);
                ++p.member_count;
                p.last_updated_ts = now_ts;
                if (set.keep_members && m.pattern_index < set.members.size())
                    set.members[m.pattern_index].push_back(win);
                continue;
            }
        }

        // Unmatched: join the nearest candidate within theta, else found one.
        std::vector<double> zwin = znormalize(win);
        std::size_t best = set.candidates.size();
        double best_d = 0.0;
        for (std::size_t c = 0; c < set.candidates.size(); ++c) {
            std::vector<double> cmean(w);
            for (std::size_t i = 0; i < w; ++i)
                cmean[i] = set.candidates[c].sum[i] /
                           static_cast<double>(set.candidates[c].count);
            double d = zdist_pre(zwin, znormalize(cmean));
            if (best == set.candidates.size() || d < best_d) {
                best = c;
                best_d = d;
            }
        }
        if (best < set.candidates.size() && best_d <= set.theta) {
            PatternSet::Candidate& c = set.candidates[best];
            for (std::size_t i = 0; i < w; ++i) c.sum[i] += win[i];
            ++c.count;
            if (c.count >= set.promote_k) {
                MetricPattern p;
                p.values.resize(w);
                for (std::size_t i = 0; i < w; ++i)
                    p.values[i] = c.sum[i] / static_cast<double>(c.count);
                p.label = PatternLabel::NORMAL;
                p.member_count = c.count;
                p.last_updated_ts = now_ts;
                set.patterns.push_back(std::move(p));
                if (set.keep_members) set.members.push_back({});
                set.candidates.erase(set.candidates.begin() +
                                     static_cast<std::ptrdiff_t>(best));
            }
        } else {
            PatternSet::Candidate c;
            c.sum = win;
            c.count = 1;
            c.first_seen = set.windows_seen;
            set.candidates.push_back(std::move(c));
        }
    }
}

// ---- persistence -----------------------------------------------------------

json PatternSet::to_json() const {
    json j;
    j["w"] = window;
    j["theta"] = theta;
    j["rare_fraction"] = rare_fraction;
    j["promote_k"] = promote_k;
    j["candidate_horizon"] = candidate_horizon;
    json arr = json::array();
    for (const auto& p : patterns) {
        json pj;
        pj["values"] = p.values;
        pj["label"] = to_string(p.label);
        pj["member_count"] = p.member_count;
        pj["last_updated_ts"] = p.last_updated_ts;
        arr.push_back(pj);
    }
    j["patterns"] = arr;
    return j;
}

PatternSet PatternSet::from_json(const json& j) {
    PatternSet s;
    s.window = j.at("w").get<int>();
    s.theta = j.at("theta").get<double>();
    s.rare_fraction = j.at("rare_fraction").get<double>();
    s.promote_k = j.value("promote_k", 3);
    s.candidate_horizon = j.value("candidate_horizon", std::int64_t{1000});
    for (const auto& pj : j.at("patterns")) {
        MetricPattern p;
        p.values = pj.at("values").get<std::vector<double>>();
        p.label = pattern_label_from_string(pj.at("label").get<std::string>());
        p.member_count = pj.at("member_count").get<std::int64_t>();
        p.last_updated_ts = pj.value("last_updated_ts", std::int64_t{0});
        if (static_cast<int>(p.values.size()) != s.window)
            throw ValidationError("values: pattern length differs from w");
        if (p.member_count < 1) throw ValidationError("member_count: must be >= 1");
        s.patterns.push_back(std::move(p));
    }
    return s;
}

void PatternSet::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    out << to_json().dump(2) << "\n";
}

PatternSet PatternSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    json j = json::parse(in);
    return from_json(j);
}

}  // namespace opsforge::sketch
