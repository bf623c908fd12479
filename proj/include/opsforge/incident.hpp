#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsforge/logparse.hpp"
#include "opsforge/telemetry.hpp"

namespace opsforge::incident {

using json = nlohmann::json;

/// Fixed time buckets over which event occurrences are discretized.
struct BucketGrid {
    std::int64_t start_ts = 0;
    std::int64_t bucket_s = 300;
    std::int64_t n_buckets = 0;

    std::int64_t index_of(std::int64_t ts) const { return (ts - start_ts) / bucket_s; }
};

/// Coarse-grained group of alerts sharing template and service.
struct Event {
    std::string event_id;
    std::string template_text;
    std::string service_id;
    std::vector<std::int64_t> occurrences;  // sorted alert timestamps
    std::set<std::int64_t> buckets;         // occupied bucket indices

    json to_json() const;
};

/// Templates alerts with the syntax parser and groups them by
/// (template, service). Event ids follow first-occurrence order. Alert texts
/// are short rule strings, so the template similarity bar sits higher than
/// the log-parsing default.
std::vector<Event> parse_alerts(const std::vector<telemetry::Alert>& alerts,
                                std::int64_t bucket_s, BucketGrid* grid_out = nullptr,
                                logparse::SyntaxParserParams parser_params = {4, 0.75});

struct EventGraph {
    struct Edge {
        std::string a;
        std::string b;
        double weight = 0.0;
    };
    std::vector<std::string> nodes;  // indicative events only
    std::vector<Edge> edges;
    std::vector<std::vector<std::string>> components;  // sorted ids per component
    std::map<std::string, int> component_of;

    json to_json() const;
};

struct GipParams {
    std::int64_t history_buckets = 0;  // 0 -> use the grid size
    double regular_threshold = 0.5;    // r, occupancy above this is regular
    std::int64_t link_window = 1;      // delta, bucket tolerance when matching
    double link_threshold = 0.5;       // tau, minimum Jaccard to link
};

/// Bucket-set Jaccard with each side dilated by `delta` buckets.
double bucket_jaccard(const std::set<std::int64_t>& a, const std::set<std::int64_t>& b,
                      std::int64_t delta);

/// Graph-based incident profiling: drops regular events, links indicative
/// pairs whose occurrence buckets overlap, and computes connected components.
EventGraph profile_incidents(const std::vector<Event>& events, const BucketGrid& grid,
                             const GipParams& params = {});

// ---- ticket-event correlation -----------------------------------------

/// TF-IDF vector space fitted on event template texts.
class TfidfModel {
  public:
    static TfidfModel fit(const std::vector<std::string>& docs);
    std::map<std::string, double> vectorize(const std::string& text) const;
    static double cosine(const std::map<std::string, double>& a,
                         const std::map<std::string, double>& b);
    double similarity(const std::string& a, const std::string& b) const;

  private:
    std::map<std::string, double> idf_;
    double default_idf_ = 1.0;
    int n_docs_ = 0;
};

struct AffinityMap {
    std::map<std::string, std::set<std::string>> product_to_services;

    double affinity(const std::string& product, const std::string& service) const;
    json to_json() const;
    static AffinityMap from_json(const json& j);
    static AffinityMap load(const std::string& path);
};

struct Features {
    double text_sim = 0.0;   // TF-IDF cosine of ticket text vs event template
    double temporal = 0.0;   // exp(-|dt to nearest occurrence| / lambda)
    double affinity = 0.0;   // product -> service map hit
};

struct ScorerWeights {
    double w_text = 2.0;
    double w_time = 2.0;
    double w_affinity = 2.0;
    double bias = -3.0;

    json to_json() const;
    static ScorerWeights from_json(const json& j);
};

struct CorrelationParams {
    double lambda_s = 600.0;     // temporal decay
    double link_threshold = 0.5; // s, minimum score to link
};

Features compute_features(const telemetry::Ticket& ticket, const Event& event,
                          const TfidfModel& tfidf, const AffinityMap& affinity,
                          double lambda_s);

double score(const ScorerWeights& w, const Features& f);

struct TicketLink {
    std::string ticket_id;
    std::string event_id;
    double score = 0.0;
    bool linked = false;

    json to_json() const;
};

/// Scores the ticket against every event and links to the argmax when the
/// score clears the threshold; otherwise reports the best score unlinked.
TicketLink correlate_ticket_event(const telemetry::Ticket& ticket,
                                  const std::vector<Event>& events, const ScorerWeights& weights,
                                  const TfidfModel& tfidf, const AffinityMap& affinity,
                                  const CorrelationParams& params = {});

struct TrainParams {
    double learning_rate = 1.8;
    int max_epochs = 10000;
    double rel_tol = 1e-6;
};

/// Full-batch logistic regression on the three features. Deterministic:
/// zero init, fixed iteration order.
ScorerWeights train_scorer(const std::vector<std::pair<Features, bool>>& labeled,
                           const TrainParams& params = {});

struct TicketCluster {
    int cluster_id = 0;
    std::vector<std::string> ticket_ids;    // sorted
    int event_component_id = -1;            // -1 for unlinked singletons

    json to_json() const;
};

/// Linked tickets group by the component of their linked event; unlinked
/// tickets stay singletons. Throws when a link names an unknown event.
std::vector<TicketCluster> aggregate_tickets(const std::vector<TicketLink>& links,
                                             const EventGraph& graph);

}  // namespace opsforge::incident
