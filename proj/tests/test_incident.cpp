#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "opsforge/incident.hpp"

using namespace opsforge;
using namespace opsforge::incident;

namespace {

telemetry::Alert alert(std::int64_t ts, const std::string& service, const std::string& text) {
    telemetry::Alert a;
    a.alert_id = "A" + std::to_string(ts) + service;
    a.ts = ts;
    a.service_id = service;
    a.severity = telemetry::AlertSeverity::CRITICAL;
    a.text = text;
    return a;
}

telemetry::Ticket ticket(const std::string& id, std::int64_t ts, const std::string& product,
                         const std::string& text) {
    telemetry::Ticket t;
    t.ticket_id = id;
    t.ts = ts;
    t.product = product;
    t.text = text;
    t.customer_id = "c-" + id;
    return t;
}

Event make_event(const std::string& id, const std::string& service,
                 std::vector<std::int64_t> buckets, std::int64_t bucket_s = 300) {
    Event e;
    e.event_id = id;
    e.service_id = service;
    e.template_text = "event " + id;
    for (auto b : buckets) {
        e.occurrences.push_back(b * bucket_s + 1);
        e.buckets.insert(b);
    }
    return e;
}

}  // namespace

TEST_CASE("parse_alerts: identical alerts from one service collapse to one event") {
    std::vector<telemetry::Alert> alerts;
    for (int i = 0; i < 10; ++i) alerts.push_back(alert(100 + i, "svc", "disk full on data01"));
    BucketGrid grid;
    auto events = parse_alerts(alerts, 300, &grid);
    REQUIRE(events.size() == 1);
    CHECK(events[0].occurrences.size() == 10);
    CHECK(events[0].service_id == "svc");
}

TEST_CASE("parse_alerts: same text from two services gives two events") {
    std::vector<telemetry::Alert> alerts = {alert(1, "a", "disk full"),
                                            alert(2, "b", "disk full")};
    auto events = parse_alerts(alerts, 300);
    CHECK(events.size() == 2);
}

TEST_CASE("parse_alerts: 20-alert fixture partitions occurrences exactly") {
    // Oracle: hand grouping. 3 templates x 2 services; every alert lands in
    // exactly one event and the occurrence multiset is preserved.
    const std::vector<std::string> texts = {"high cpu load detected",
                                            "memory pressure warning observed",
                                            "replica lag threshold breached"};
    std::vector<telemetry::Alert> alerts;
    int k = 0;
    for (int round = 0; round < 10; ++round) {
        std::string svc = round % 2 ? "svc-a" : "svc-b";
        alerts.push_back(alert(1000 + k, svc, texts[round % 3]));
        ++k;
        alerts.push_back(alert(1000 + k, svc, texts[(round + 1) % 3]));
        ++k;
    }
    auto events = parse_alerts(alerts, 300);
    CHECK(events.size() <= 6);
    std::size_t total = 0;
    for (const auto& e : events) total += e.occurrences.size();
    CHECK(total == alerts.size());
    // every (template,service) event holds only its own service's alerts
    for (const auto& e : events) {
        for (auto ts : e.occurrences) {
            bool matched = false;
            for (const auto& a : alerts)
                if (a.ts == ts && a.service_id == e.service_id) matched = true;
            CHECK(matched);
        }
    }
}

TEST_CASE("parse_alerts: rejects unordered alerts") {
    std::vector<telemetry::Alert> alerts = {alert(10, "a", "x y"), alert(5, "a", "x y")};
    CHECK_THROWS_AS(parse_alerts(alerts, 300), ValidationError);
}

TEST_CASE("bucket_jaccard: identical single buckets give 1.0") {
    CHECK(bucket_jaccard({5}, {5}, 1) == doctest::Approx(1.0));
    CHECK(bucket_jaccard({5}, {6}, 1) == doctest::Approx(0.5));  // dilated overlap 2 of 4
    CHECK(bucket_jaccard({5}, {9}, 1) == doctest::Approx(0.0));
}

TEST_CASE("profile_incidents: occupancy-1.0 events always removed") {
    BucketGrid grid{0, 300, 10};
    std::vector<Event> events = {make_event("heartbeat", "a", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}),
                                 make_event("incident", "a", {4})};
    auto g = profile_incidents(events, grid, {});
    REQUIRE(g.nodes.size() == 1);
    CHECK(g.nodes[0] == "incident");
}

TEST_CASE("profile_incidents: co-occurring events link into one component") {
    BucketGrid grid{0, 300, 12};
    std::vector<Event> events = {make_event("heartbeat", "x", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}),
                                 make_event("storage_err", "storage", {4}),
                                 make_event("vm_err", "vm", {4}),
                                 make_event("web_err", "webapp", {4, 5}),
                                 make_event("later_err", "dns", {9})};
    auto g = profile_incidents(events, grid, {});
    CHECK(g.nodes.size() == 4);  // heartbeat removed
    // storage, vm, webapp share bucket 4 -> one component; dns stays apart
    REQUIRE(g.component_of.count("storage_err"));
    CHECK(g.component_of.at("storage_err") == g.component_of.at("vm_err"));
    CHECK(g.component_of.at("storage_err") == g.component_of.at("web_err"));
    CHECK(g.component_of.at("storage_err") != g.component_of.at("later_err"));
}

TEST_CASE("profile_incidents: property sweep over random event sets") {
    // Criterion-style properties at unit scale: full-occupancy events always
    // removed; pairs sharing a single occupied bucket always linked;
    // dropping regular events never splits indicative components.
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        BucketGrid grid{0, 300, 12};
        std::vector<Event> events;
        int n = 3 + static_cast<int>(rng.pick_index(6));
        for (int i = 0; i < n; ++i) {
            std::vector<std::int64_t> buckets;
            if (rng.u01() < 0.2) {
                for (std::int64_t b = 0; b < grid.n_buckets; ++b) buckets.push_back(b);
            } else {
                std::int64_t start = static_cast<std::int64_t>(rng.pick_index(10));
                std::int64_t len = 1 + static_cast<std::int64_t>(rng.pick_index(3));
                for (std::int64_t b = start; b < std::min<std::int64_t>(12, start + len); ++b)
                    buckets.push_back(b);
            }
            events.push_back(make_event("e" + std::to_string(i), "s" + std::to_string(i),
                                        buckets));
        }
        GipParams params;
        auto g = profile_incidents(events, grid, params);
        for (const auto& e : events) {
            double occupancy = double(e.buckets.size()) / double(grid.n_buckets);
            bool kept = g.component_of.count(e.event_id) > 0;
            if (occupancy >= 1.0) CHECK_FALSE(kept);
            if (occupancy <= params.regular_threshold) CHECK(kept);
        }
        for (std::size_t i = 0; i < events.size(); ++i) {
            for (std::size_t j = i + 1; j < events.size(); ++j) {
                if (!g.component_of.count(events[i].event_id) ||
                    !g.component_of.count(events[j].event_id))
                    continue;
                if (events[i].buckets.size() == 1 && events[i].buckets == events[j].buckets)
                    CHECK(g.component_of.at(events[i].event_id) ==
                          g.component_of.at(events[j].event_id));
            }
        }
        // removing regular events must not change the partition of the
        // indicative ones: recompute on the indicative subset alone
        std::vector<Event> indicative_only;
        for (const auto& e : events)
            if (double(e.buckets.size()) / double(grid.n_buckets) <= params.regular_threshold)
                indicative_only.push_back(e);
        auto g2 = profile_incidents(indicative_only, grid, params);
        for (std::size_t i = 0; i < indicative_only.size(); ++i)
            for (std::size_t j = i + 1; j < indicative_only.size(); ++j) {
                bool same1 = g.component_of.at(indicative_only[i].event_id) ==
                             g.component_of.at(indicative_only[j].event_id);
                bool same2 = g2.component_of.at(indicative_only[i].event_id) ==
                             g2.component_of.at(indicative_only[j].event_id);
                CHECK(same1 == same2);
            }
    }
}

TEST_CASE("tfidf cosine: hand-computed oracle values") {
    // Corpus: two event templates. idf(in-corpus term) = ln(3/2)+1, idf(OOV)
    // = ln(3)+1. Cosine of the VM ticket against the VM template:
    //   dot = 2 * 1.4054651^2, norms 4.14285 and 2.81093 -> 0.33925.
    std::vector<std::string> docs = {"virtual machine allocation failure",
                                     "storage latency high"};
    auto model = TfidfModel::fit(docs);
    double sim_vm = model.similarity("cannot start my virtual machine", docs[0]);
    double sim_storage = model.similarity("cannot start my virtual machine", docs[1]);
    CHECK(sim_vm == doctest::Approx(0.33925).epsilon(1e-3));
    CHECK(sim_storage == doctest::Approx(0.0));
    CHECK(model.similarity(docs[0], docs[0]) == doctest::Approx(1.0));
}

TEST_CASE("correlate: maximal features link, near-zero features do not") {
    std::vector<Event> events = {make_event("E0", "vm", {4})};
    events[0].template_text = "virtual machine allocation failure";
    std::vector<std::string> docs = {events[0].template_text};
    auto tfidf = TfidfModel::fit(docs);
    AffinityMap affinity;
    affinity.product_to_services["VM"] = {"vm"};

    auto same = ticket("t1", events[0].occurrences[0], "VM",
                       "virtual machine allocation failure");
    auto link = correlate_ticket_event(same, events, {}, tfidf, affinity, {});
    CHECK(link.linked);
    CHECK(link.event_id == "E0");

    auto far = ticket("t2", events[0].occurrences[0] + 86400, "Billing",
                      "question about my invoice");
    auto link2 = correlate_ticket_event(far, events, {}, tfidf, affinity, {});
    CHECK_FALSE(link2.linked);
}

TEST_CASE("correlate: VM ticket prefers the VM event over a co-timed storage event") {
    // Oracle: features computed by hand. Both events are 120 s away
    // (temporal exp(-0.2) = 0.8187 for each); text 0.339 vs 0; affinity 1 vs 0.
    std::vector<Event> events = {make_event("E_vm", "vm", {}),
                                 make_event("E_st", "storage", {})};
    events[0].template_text = "virtual machine allocation failure";
    events[0].occurrences = {1000 + 120};
    events[1].template_text = "storage latency high";
    events[1].occurrences = {1000 + 120};
    auto tfidf = TfidfModel::fit({events[0].template_text, events[1].template_text});
    AffinityMap affinity;
    affinity.product_to_services["VM"] = {"vm"};

    auto t = ticket("t1", 1000, "VM", "cannot start my virtual machine");
    Features f_vm = compute_features(t, events[0], tfidf, affinity, 600.0);
    Features f_st = compute_features(t, events[1], tfidf, affinity, 600.0);
    CHECK(f_vm.text_sim == doctest::Approx(0.33925).epsilon(1e-3));
    CHECK(f_vm.temporal == doctest::Approx(std::exp(-0.2)).epsilon(1e-6));
    CHECK(f_vm.affinity == 1.0);
    CHECK(f_st.text_sim == doctest::Approx(0.0));
    CHECK(f_st.affinity == 0.0);

    auto link = correlate_ticket_event(t, events, {}, tfidf, affinity, {});
    CHECK(link.event_id == "E_vm");
}

TEST_CASE("train_scorer: separable toy set reaches training accuracy 1.0") {
    std::vector<std::pair<Features, bool>> data;
    for (int i = 0; i < 20; ++i) {
        data.push_back({Features{0.8, 0.9, 1.0}, true});
        data.push_back({Features{0.05, 0.1, 0.0}, false});
    }
    auto w = train_scorer(data);
    int correct = 0;
    for (const auto& [f, y] : data)
        if ((score(w, f) >= 0.5) == y) ++correct;
    CHECK(correct == static_cast<int>(data.size()));
}

TEST_CASE("train_scorer: label-flipped duplicates give near-zero weights") {
    std::vector<std::pair<Features, bool>> data;
    Rng rng(4);
    for (int i = 0; i < 30; ++i) {
        Features f{rng.u01(), rng.u01(), rng.u01() < 0.5 ? 1.0 : 0.0};
        data.push_back({f, true});
        data.push_back({f, false});
    }
    auto w = train_scorer(data);
    CHECK(std::abs(w.w_text) < 1e-6);
    CHECK(std::abs(w.w_time) < 1e-6);
    CHECK(std::abs(w.w_affinity) < 1e-6);
    CHECK(std::abs(w.bias) < 1e-6);
    int correct = 0;
    for (const auto& [f, y] : data)
        if ((score(w, f) >= 0.5) == y) ++correct;
    CHECK(std::abs(correct / double(data.size()) - 0.5) < 0.01);
}

TEST_CASE("train_scorer: single-class data is an error") {
    std::vector<std::pair<Features, bool>> data = {{Features{1, 1, 1}, true}};
    CHECK_THROWS_AS(train_scorer(data), ValidationError);
}

TEST_CASE("aggregate_tickets: same event, same component, singleton rules") {
    BucketGrid grid{0, 300, 10};
    std::vector<Event> events = {make_event("E0", "a", {2}), make_event("E1", "b", {2}),
                                 make_event("E2", "c", {8})};
    auto graph = profile_incidents(events, grid, {});
    // E0-E1 share bucket 2; E2 sits alone
    std::vector<TicketLink> links = {{"t1", "E0", 0.9, true},
                                     {"t2", "E0", 0.8, true},
                                     {"t3", "E1", 0.7, true},
                                     {"t4", "E2", 0.9, true},
                                     {"t5", "", 0.1, false}};
    auto clusters = aggregate_tickets(links, graph);
    std::map<std::string, int> cluster_of;
    for (const auto& c : clusters)
        for (const auto& id : c.ticket_ids) cluster_of[id] = c.cluster_id;
    CHECK(cluster_of["t1"] == cluster_of["t2"]);  // same event
    CHECK(cluster_of["t1"] == cluster_of["t3"]);  // same component via E0-E1 link
    CHECK(cluster_of["t1"] != cluster_of["t4"]);
    CHECK(cluster_of["t5"] != cluster_of["t1"]);
    CHECK(cluster_of["t5"] != cluster_of["t4"]);
}

TEST_CASE("aggregate_tickets: unknown event reference is an error") {
    EventGraph graph;
    std::vector<TicketLink> links = {{"t1", "GHOST", 0.9, true}};
    CHECK_THROWS_AS(aggregate_tickets(links, graph), ValidationError);
}

TEST_CASE("aggregation transitivity: the cluster relation is an equivalence") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        BucketGrid grid{0, 300, 12};
        std::vector<Event> events;
        int n_events = 4 + static_cast<int>(rng.pick_index(5));
        for (int i = 0; i < n_events; ++i)
            events.push_back(make_event("E" + std::to_string(i), "s" + std::to_string(i),
                                        {static_cast<std::int64_t>(rng.pick_index(6))}));
        auto graph = profile_incidents(events, grid, {});
        std::vector<TicketLink> links;
        for (int t = 0; t < 20; ++t) {
            bool linked = rng.u01() < 0.8;
            links.push_back({"t" + std::to_string(t),
                             linked ? "E" + std::to_string(rng.pick_index(n_events)) : "",
                             linked ? 0.9 : 0.1, linked});
        }
        auto clusters = aggregate_tickets(links, graph);
        // partition: every ticket in exactly one cluster
        std::map<std::string, int> seen;
        for (const auto& c : clusters)
            for (const auto& id : c.ticket_ids) {
                CHECK(seen.count(id) == 0);
                seen[id] = c.cluster_id;
            }
        CHECK(seen.size() == links.size());
        // same linked component <=> same cluster
        for (const auto& a : links) {
            for (const auto& b : links) {
                if (!a.linked || !b.linked) continue;
                bool same_component = graph.component_of.at(a.event_id) ==
                                      graph.component_of.at(b.event_id);
                CHECK((seen[a.ticket_id] == seen[b.ticket_id]) == same_component);
            }
        }
    }
}
