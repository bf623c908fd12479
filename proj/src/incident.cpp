#include "opsforge/incident.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace opsforge::incident {

// ---- alert parsing -----------------------------------------------------

std::vector<Event> parse_alerts(const std::vector<telemetry::Alert>& alerts,
                                std::int64_t bucket_s, BucketGrid* grid_out,
                                logparse::SyntaxParserParams parser_params) {
    if (bucket_s <= 0) throw ValidationError("bucket_s: must be > 0");
    for (std::size_t i = 1; i < alerts.size(); ++i)
        if (alerts[i].ts < alerts[i - 1].ts)
            throw ValidationError("alerts: must be time-ordered");

    BucketGrid grid;
    grid.bucket_s = bucket_s;
    if (!alerts.empty()) {
        grid.start_ts = (alerts.front().ts / bucket_s) * bucket_s;
        grid.n_buckets = (alerts.back().ts - grid.start_ts) / bucket_s + 1;
    }

    logparse::SyntaxParser parser(parser_params);
    std::map<std::pair<std::string, std::string>, std::size_t> index;  // (template, service)
    std::vector<Event> events;
    for (const auto& a : alerts) {
        std::string tmpl = parser.parse_one(a.text);
        auto key = std::make_pair(tmpl, a.service_id);
        auto it = index.find(key);
        if (it == index.end()) {
            index[key] = events.size();
            Event e;
            e.event_id = "E" + std::to_string(events.size());
            e.template_text = tmpl;
            e.service_id = a.service_id;
            e.occurrences.push_back(a.ts);
            events.push_back(std::move(e));
        } else {
            events[it->second].occurrences.push_back(a.ts);
        }
    }
    for (auto& e : events) {
        std::sort(e.occurrences.begin(), e.occurrences.end());
        for (std::int64_t ts : e.occurrences) e.buckets.insert(grid.index_of(ts));
    }
    if (grid_out) *grid_out = grid;
    return events;
}

json Event::to_json() const {
    json j;
    j["event_id"] = event_id;
    j["template"] = template_text;
    j["service_id"] = service_id;
    j["occurrences"] = occurrences;
    j["buckets"] = std::vector<std::int64_t>(buckets.begin(), buckets.end());
    return j;
}

// ---- graph-based incident profiling -------------------------------------

double bucket_jaccard(const std::set<std::int64_t>& a, const std::set<std::int64_t>& b,
                      std::int64_t delta) {
    if (a.empty() || b.empty()) return 0.0;
    auto dilate = [delta](const std::set<std::int64_t>& s) {
        std::set<std::int64_t> out;
        for (std::int64_t v : s)
            for (std::int64_t d = -delta; d <= delta; ++d) out.insert(v + d);
        return out;
    };
    std::set<std::int64_t> da = dilate(a);
    std::set<std::int64_t> db = dilate(b);
    std::size_t inter = 0;
    for (std::int64_t v : da)
        if (db.count(v)) ++inter;
    std::size_t uni = da.size() + db.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

EventGraph profile_incidents(const std::vector<Event>& events, const BucketGrid& grid,
                             const GipParams& params) {
    const double total_buckets = static_cast<double>(
        params.history_buckets > 0 ? params.history_buckets : std::max<std::int64_t>(grid.n_buckets, 1));

    // Remove regular events: occupancy fraction strictly above r.
    std::vector<const Event*> indicative;
    for (const auto& e : events) {
        double occupancy = static_cast<double>(e.buckets.size()) / total_buckets;
        if (occupancy <= params.regular_threshold) indicative.push_back(&e);
    }

    EventGraph g;
    for (const auto* e : indicative) g.nodes.push_back(e->event_id);

    UnionFind uf(indicative.size());
    for (std::size_t i = 0; i < indicative.size(); ++i) {
        for (std::size_t j = i + 1; j < indicative.size(); ++j) {
            double w = bucket_jaccard(indicative[i]->buckets, indicative[j]->buckets,
                                      params.link_window);
            if (w >= params.link_threshold) {
                g.edges.push_back({indicative[i]->event_id, indicative[j]->event_id, w});
                uf.unite(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }

    std::map<int, std::vector<std::string>> comp;
    for (std::size_t i = 0; i < indicative.size(); ++i)
        comp[uf.find(static_cast<int>(i))].push_back(indicative[i]->event_id);
    int cid = 0;
    for (auto& [root, ids] : comp) {
        std::sort(ids.begin(), ids.end());
        for (const auto& id : ids) g.component_of[id] = cid;
        g.components.push_back(ids);
        ++cid;
    }
    return g;
}

json EventGraph::to_json() const {
    json j;
    j["nodes"] = nodes;
    json edges_j = json::array();
    for (const auto& e : edges) edges_j.push_back({{"a", e.a}, {"b", e.b}, {"weight", e.weight}});
    j["edges"] = edges_j;
    j["components"] = components;
    return j;
}

// ---- TF-IDF ---------------------------------------------------------------

namespace {

std::vector<std::string> content_tokens(const std::string& text) {
    std::vector<std::string> out;
    for (auto& t : text::split_ws(text)) {
        std::string w;
        for (char c : t)
            if (std::isalnum(static_cast<unsigned char>(c)))
                w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (!w.empty()) out.push_back(w);
    }
    return out;
}

}  // namespace

TfidfModel TfidfModel::fit(const std::vector<std::string>& docs) {
    TfidfModel m;
    m.n_docs_ = static_cast<int>(docs.size());
    std::map<std::string, int> df;
    for (const auto& d : docs) {
        std::set<std::string> uniq;
        for (const auto& t : content_tokens(d)) uniq.insert(t);
        for (const auto& t : uniq) ++df[t];
    }
    for (const auto& [term, n] : df)
        m.idf_[term] = std::log((1.0 + m.n_docs_) / (1.0 + n)) + 1.0;
    m.default_idf_ = std::log(1.0 + m.n_docs_) + 1.0;
    return m;
}

std::map<std::string, double> TfidfModel::vectorize(const std::string& text) const {
    std::map<std::string, double> tf;
    for (const auto& t : content_tokens(text)) tf[t] += 1.0;
    double norm = 0.0;
    for (auto& [term, v] : tf) {
        auto it = idf_.find(term);
        v *= it == idf_.end() ? default_idf_ : it->second;
        norm += v * v;
    }
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (auto& [term, v] : tf) v /= norm;
    }
    return tf;
}

double TfidfModel::cosine(const std::map<std::string, double>& a,
                          const std::map<std::string, double>& b) {
    double dot = 0.0;
    for (const auto& [term, v] : a) {
        auto it = b.find(term);
        if (it != b.end()) dot += v * it->second;
    }
    return dot;  // vectors are already L2-normalized
}

double TfidfModel::similarity(const std::string& a, const std::string& b) const {
    return cosine(vectorize(a), vectorize(b));
}

// ---- feature scorer ---------------------------------------------------

double AffinityMap::affinity(const std::string& product, const std::string& service) const {
    auto it = product_to_services.find(product);
    if (it == product_to_services.end()) return 0.0;
    return it->second.count(service) ? 1.0 : 0.0;
}

json AffinityMap::to_json() const {
    json j = json::object();
    for (const auto& [product, services] : product_to_services) j[product] = services;
    return j;
}

AffinityMap AffinityMap::from_json(const json& j) {
    AffinityMap m;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::set<std::string> services;
        for (const auto& s : it.value()) services.insert(s.get<std::string>());
        m.product_to_services[it.key()] = std::move(services);
    }
    return m;
}

AffinityMap AffinityMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open affinity map: " + path);
    return from_json(json::parse(in));
}

Features compute_features(const telemetry::Ticket& ticket, const Event& event,
                          const TfidfModel& tfidf, const AffinityMap& affinity,
                          double lambda_s) {
    Features f;
    f.text_sim = tfidf.similarity(ticket.text, event.template_text);
    std::int64_t nearest = std::numeric_limits<std::int64_t>::max();
    for (std::int64_t occ : event.occurrences)
        nearest = std::min<std::int64_t>(nearest, std::abs(ticket.ts - occ));
    f.temporal = event.occurrences.empty()
                     ? 0.0
                     : std::exp(-static_cast<double>(nearest) / lambda_s);
    f.affinity = affinity.affinity(ticket.product, event.service_id);
    return f;
}

double score(const ScorerWeights& w, const Features& f) {
    double z = w.w_text * f.text_sim + w.w_time * f.temporal + w.w_affinity * f.affinity + w.bias;
    return 1.0 / (1.0 + std::exp(-z));
}

TicketLink correlate_ticket_event(const telemetry::Ticket& ticket,
                                  const std::vector<Event>& events, const ScorerWeights& weights,
                                  const TfidfModel& tfidf, const AffinityMap& affinity,
                                  const CorrelationParams& params) {
    if (events.empty()) throw ValidationError("events: must be non-empty");
    TicketLink link;
    link.ticket_id = ticket.ticket_id;
    bool first = true;
    for (const auto& e : events) {
        Features f = compute_features(ticket, e, tfidf, affinity, params.lambda_s);
        double s = score(weights, f);
        if (first || s > link.score) {
            link.score = s;
            link.event_id = e.event_id;
            first = false;
        }
    }
    link.linked = link.score >= params.link_threshold;
    return link;
}

ScorerWeights train_scorer(const std::vector<std::pair<Features, bool>>& labeled,
                           const TrainParams& params) {
    bool any_pos = false, any_neg = false;
    for (const auto& [f, y] : labeled) (y ? any_pos : any_neg) = true;
    if (!any_pos || !any_neg)
        throw ValidationError("labeled: both classes must be present");

    double w[4] = {0.0, 0.0, 0.0, 0.0};  // text, time, affinity, bias
    const double n = static_cast<double>(labeled.size());
    double prev_loss = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
        double grad[4] = {0.0, 0.0, 0.0, 0.0};
        double loss = 0.0;
        for (const auto& [f, y] : labeled) {
            double x[4] = {f.text_sim, f.temporal, f.affinity, 1.0};
            double z = 0.0;
            for (int i = 0; i < 4; ++i) z += w[i] * x[i];
            double p = 1.0 / (1.0 + std::exp(-z));
            double target = y ? 1.0 : 0.0;
            double pc = std::min(std::max(p, 1e-12), 1.0 - 1e-12);
            loss += -(target * std::log(pc) + (1.0 - target) * std::log(1.0 - pc));
            for (int i = 0; i < 4; ++i) grad[i] += (p - target) * x[i];
        }
        loss /= n;
        for (int i = 0; i < 4; ++i) w[i] -= params.learning_rate * grad[i] / n;
        if (std::abs(prev_loss - loss) < params.rel_tol * std::max(prev_loss, 1e-12)) break;
        prev_loss = loss;
    }
    return ScorerWeights{w[0], w[1], w[2], w[3]};
}

std::vector<TicketCluster> aggregate_tickets(const std::vector<TicketLink>& links,
                                             const EventGraph& graph) {
    std::map<int, std::vector<std::string>> by_component;
    std::vector<std::string> singles;
    for (const auto& link : links) {
        if (!link.linked) {
            singles.push_back(link.ticket_id);
            continue;
        }
        auto it = graph.component_of.find(link.event_id);
        if (it == graph.component_of.end())
            throw ValidationError("link: unknown event '" + link.event_id + "'");
        by_component[it->second].push_back(link.ticket_id);
    }

    std::vector<TicketCluster> out;
    int cid = 0;
    for (auto& [comp, ids] : by_component) {
        std::sort(ids.begin(), ids.end());
        out.push_back(TicketCluster{cid++, ids, comp});
    }
    std::sort(singles.begin(), singles.end());
    for (const auto& id : singles) out.push_back(TicketCluster{cid++, {id}, -1});
    return out;
}

// ---- json -----------------------------------------------------------------

json ScorerWeights::to_json() const {
    return json{{"w_text", w_text}, {"w_time", w_time}, {"w_affinity", w_affinity}, {"bias", bias}};
}

ScorerWeights ScorerWeights::from_json(const json& j) {
    ScorerWeights w;
    w.w_text = j.at("w_text").get<double>();
    w.w_time = j.at("w_time").get<double>();
    w.w_affinity = j.at("w_affinity").get<double>();
    w.bias = j.at("bias").get<double>();
    return w;
}

json TicketLink::to_json() const {
    return json{{"ticket_id", ticket_id},
                {"event_id", event_id},
                {"score", score},
                {"linked", linked}};
}

json TicketCluster::to_json() const {
    return json{{"cluster_id", cluster_id},
                {"ticket_ids", ticket_ids},
                {"event_component_id", event_component_id}};
}

}  // namespace opsforge::incident
