#include "opsforge/logdetect.hpp"

#include <algorithm>

namespace opsforge::logdetect {

std::vector<Session> sessionize(const std::vector<telemetry::LogRecord>& records,
                                const std::vector<logparse::ParsedLog>& parsed,
                                SessionizeMode mode, std::int64_t window_s) {
    if (records.size() != parsed.size())
        throw ValidationError("parsed: must run parallel to records");
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].ts < records[i - 1].ts)
            throw ValidationError("records: must be time-ordered");

    std::vector<Session> out;
    if (records.empty()) return out;

    if (mode == SessionizeMode::BySessionId) {
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (!records[i].session_id) missing.push_back(i);
        if (!missing.empty()) {
            std::string msg = "session_id: missing on record(s)";
            for (std::size_t k = 0; k < std::min<std::size_t>(missing.size(), 10); ++k)
                msg += " #" + std::to_string(missing[k]);
            if (missing.size() > 10) msg += " ...";
            throw ValidationError(msg);
        }
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const std::string& id = *records[i].session_id;
            auto it = index.find(id);
            if (it == index.end()) {
                index[id] = out.size();
                out.push_back(Session{id, {parsed[i]}, records[i].ts, records[i].ts});
            } else {
                Session& s = out[it->second];
                s.records.push_back(parsed[i]);
                s.end_ts = records[i].ts;
            }
        }
        return out;
    }

    if (window_s <= 0) throw ValidationError("window_s: must be > 0");
    const std::int64_t t0 = records.front().ts;
    std::map<std::int64_t, std::size_t> index;
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::int64_t bucket = (records[i].ts - t0) / window_s;
        auto it = index.find(bucket);
        if (it == index.end()) {
            index[bucket] = out.size();
            Session s;
            s.session_id = "w" + std::to_string(bucket);
            s.start_ts = t0 + bucket * window_s;
            s.end_ts = s.start_ts + window_s;
            s.records.push_back(parsed[i]);
            out.push_back(std::move(s));
        } else {
            out[it->second].records.push_back(parsed[i]);
        }
    }
    return out;
}

void DetectionModel::train(const std::vector<Session>& normal_sessions) {
    for (const auto& s : normal_sessions) {
        if (s.records.empty()) continue;
        for (const auto& r : s.records) ++templates_[r.conceptualized_template];
        for (std::size_t i = 0; i + 1 < s.records.size(); ++i) {
            const std::string& a = s.records[i].conceptualized_template;
            const std::string& b = s.records[i + 1].conceptualized_template;
            ++bigrams_[{a, b}];
            ++prefix_totals_[a];
        }
    }
    trained_ = true;
}

double DetectionModel::bigram_probability(const std::string& a, const std::string& b) const {
    auto pt = prefix_totals_.find(a);
    if (pt == prefix_totals_.end() || pt->second == 0) return 0.0;
    auto bg = bigrams_.find({a, b});
    if (bg == bigrams_.end()) return 0.0;
    return static_cast<double>(bg->second) / static_cast<double>(pt->second);
}

SessionVerdict DetectionModel::detect(const Session& session) const {
    if (!trained_) throw ValidationError("model: detect called before training");
    SessionVerdict v;
    std::set<std::string> cited;
    for (const auto& r : session.records) {
        if (!templates_.count(r.conceptualized_template) &&
            cited.insert(r.conceptualized_template).second) {
            Evidence e;
            e.kind = Evidence::Kind::UNSEEN_TEMPLATE;
            e.first = r.conceptualized_template;
            v.evidence.push_back(std::move(e));
        }
    }
    for (std::size_t i = 0; i + 1 < session.records.size(); ++i) {
        const std::string& a = session.records[i].conceptualized_template;
        const std::string& b = session.records[i + 1].conceptualized_template;
        double p = bigram_probability(a, b);
        if (p < epsilon_ && cited.insert(a + "\x1f" + b).second) {
            Evidence e;
            e.kind = Evidence::Kind::RARE_BIGRAM;
            e.first = a;
            e.second = b;
            e.probability = p;
            v.evidence.push_back(std::move(e));
        }
    }
    v.anomalous = !v.evidence.empty();
    return v;
}

json DetectionModel::to_json() const {
    json j;
    j["epsilon"] = epsilon_;
    j["templates"] = json::object();
    for (const auto& [t, c] : templates_) j["templates"][t] = c;
    json bg = json::array();
    for (const auto& [key, c] : bigrams_)
        bg.push_back({{"a", key.first}, {"b", key.second}, {"count", c}});
    j["bigrams"] = bg;
    return j;
}

DetectionModel DetectionModel::from_json(const json& j) {
    DetectionModel m(j.value("epsilon", 0.01));
    for (auto it = j.at("templates").begin(); it != j.at("templates").end(); ++it)
        m.templates_[it.key()] = it.value().get<std::int64_t>();
    for (const auto& e : j.at("bigrams")) {
        auto a = e.at("a").get<std::string>();
        auto b = e.at("b").get<std::string>();
        auto c = e.at("count").get<std::int64_t>();
        m.bigrams_[{a, b}] = c;
        m.prefix_totals_[a] += c;
    }
    m.trained_ = true;
    return m;
}

// ---- failure signatures ------------------------------------------------

namespace {

std::set<std::string> session_templates(const Session& s) {
    std::set<std::string> out;
    for (const auto& r : s.records) out.insert(r.conceptualized_template);
    return out;
}

std::set<std::string> session_concepts(const Session& s) {
    std::set<std::string> out;
    for (const auto& r : s.records)
        for (const auto& p : r.ci_pairs) out.insert(p.concept_name);
    return out;
}

}  // namespace

std::vector<FailureSignature> learn_signatures(
    const std::vector<std::pair<Session, std::string>>& labeled, double margin) {
    if (labeled.empty()) throw ValidationError("labeled: need at least one session");

    // Session frequency of each element within each failure type.
    std::map<std::string, std::int64_t> type_counts;
    std::map<std::string, std::map<std::string, std::int64_t>> tmpl_counts, concept_counts;
    for (const auto& [session, type] : labeled) {
        ++type_counts[type];
        for (const auto& t : session_templates(session)) ++tmpl_counts[type][t];
        for (const auto& c : session_concepts(session)) ++concept_counts[type][c];
    }

    auto freq = [&](const std::map<std::string, std::map<std::string, std::int64_t>>& counts,
                    const std::string& type, const std::string& elem) {
        auto it = counts.find(type);
        if (it == counts.end()) return 0.0;
        auto e = it->second.find(elem);
        if (e == it->second.end()) return 0.0;
        return static_cast<double>(e->second) / static_cast<double>(type_counts.at(type));
    };

    std::vector<FailureSignature> out;
    for (const auto& [type, n] : type_counts) {
        FailureSignature sig;
        sig.failure_type = type;
        for (const auto& [t, c] : tmpl_counts[type]) {
            double own = freq(tmpl_counts, type, t);
            double best_other = 0.0;
            for (const auto& [other, m] : type_counts)
                if (other != type) best_other = std::max(best_other, freq(tmpl_counts, other, t));
            if (own - best_other >= margin) sig.templates.insert(t);
        }
        for (const auto& [c, cnt] : concept_counts[type]) {
            double own = freq(concept_counts, type, c);
            double best_other = 0.0;
            for (const auto& [other, m] : type_counts)
                if (other != type)
                    best_other = std::max(best_other, freq(concept_counts, other, c));
            if (own - best_other >= margin) sig.concepts.insert(c);
        }
        if (sig.templates.empty() && sig.concepts.empty())
            throw ValidationError("failure type '" + type + "' has no discriminative element");
        out.push_back(std::move(sig));
    }
    return out;
}

std::vector<IdentifyResult> identify_failure(const Session& session,
                                             const std::vector<FailureSignature>& signatures) {
    if (signatures.empty()) throw ValidationError("signatures: must be non-empty");

    std::set<std::string> elems;
    for (const auto& t : session_templates(session)) elems.insert("T:" + t);
    for (const auto& c : session_concepts(session)) elems.insert("C:" + c);

    std::vector<IdentifyResult> out;
    for (const auto& sig : signatures) {
        std::set<std::string> sig_elems;
        for (const auto& t : sig.templates) sig_elems.insert("T:" + t);
        for (const auto& c : sig.concepts) sig_elems.insert("C:" + c);
        std::size_t inter = 0;
        for (const auto& e : sig_elems)
            if (elems.count(e)) ++inter;
        std::size_t uni = elems.size() + sig_elems.size() - inter;
        IdentifyResult r;
        r.failure_type = sig.failure_type;
        r.score = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const IdentifyResult& a, const IdentifyResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.failure_type < b.failure_type;
    });
    return out;
}

json FailureSignature::to_json() const {
    json j;
    j["failure_type"] = failure_type;
    j["templates"] = templates;
    j["concepts"] = concepts;
    return j;
}

FailureSignature FailureSignature::from_json(const json& j) {
    FailureSignature s;
    s.failure_type = j.at("failure_type").get<std::string>();
    for (const auto& t : j.at("templates")) s.templates.insert(t.get<std::string>());
    for (const auto& c : j.at("concepts")) s.concepts.insert(c.get<std::string>());
    if (s.templates.empty() && s.concepts.empty())
        throw ValidationError("signature: needs at least one discriminative element");
    return s;
}

}  // namespace opsforge::logdetect
