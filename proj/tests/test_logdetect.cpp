#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "opsforge/logdetect.hpp"

using namespace opsforge;
using namespace opsforge::logdetect;

namespace {

telemetry::LogRecord rec(std::int64_t ts, const std::string& session,
                         const std::string& message) {
    telemetry::LogRecord r;
    r.ts = ts;
    r.service_id = "svc";
    r.level = telemetry::LogLevel::INFO;
    r.message = message;
    if (!session.empty()) r.session_id = session;
    return r;
}

logparse::ParsedLog plog(const std::string& conceptualized,
                         std::vector<std::string> concepts = {}) {
    logparse::ParsedLog p;
    p.template_str = conceptualized;
    p.conceptualized_template = conceptualized;
    for (auto& c : concepts) p.ci_pairs.push_back({c, "x", logparse::Provenance::EXPLICIT});
    return p;
}

Session make_session(const std::string& id, std::vector<std::string> templates,
                     std::vector<std::string> concepts = {}) {
    Session s;
    s.session_id = id;
    for (std::size_t i = 0; i < templates.size(); ++i)
        s.records.push_back(plog(templates[i], i == 0 ? concepts : std::vector<std::string>{}));
    return s;
}

}  // namespace

TEST_CASE("sessionize by id: one shared id gives one session") {
    std::vector<telemetry::LogRecord> records = {rec(1, "a", "x"), rec(2, "a", "y")};
    std::vector<logparse::ParsedLog> parsed = {plog("x"), plog("y")};
    auto sessions = sessionize(records, parsed, SessionizeMode::BySessionId);
    REQUIRE(sessions.size() == 1);
    CHECK(sessions[0].records.size() == 2);
    CHECK(sessions[0].start_ts == 1);
    CHECK(sessions[0].end_ts == 2);
}

TEST_CASE("sessionize by id: interleaved ids keep internal order") {
    std::vector<telemetry::LogRecord> records = {rec(1, "a", "x"), rec(2, "b", "p"),
                                                 rec(3, "a", "y"), rec(4, "b", "q")};
    std::vector<logparse::ParsedLog> parsed = {plog("x"), plog("p"), plog("y"), plog("q")};
    auto sessions = sessionize(records, parsed, SessionizeMode::BySessionId);
    REQUIRE(sessions.size() == 2);
    CHECK(sessions[0].records[0].conceptualized_template == "x");
    CHECK(sessions[0].records[1].conceptualized_template == "y");
    CHECK(sessions[1].records[0].conceptualized_template == "p");
    CHECK(sessions[1].records[1].conceptualized_template == "q");
}

TEST_CASE("sessionize by id: missing ids are an error naming the records") {
    std::vector<telemetry::LogRecord> records = {rec(1, "a", "x"), rec(2, "", "y")};
    std::vector<logparse::ParsedLog> parsed = {plog("x"), plog("y")};
    CHECK_THROWS_WITH_AS(sessionize(records, parsed, SessionizeMode::BySessionId),
                         doctest::Contains("#1"), ValidationError);
}

TEST_CASE("sessionize by window: hand tiling at 60s") {
    // Records at t = 0, 30, 90 with 60s windows tile into {0,30} and {90}.
    std::vector<telemetry::LogRecord> records = {rec(0, "", "x"), rec(30, "", "y"),
                                                 rec(90, "", "z")};
    std::vector<logparse::ParsedLog> parsed = {plog("x"), plog("y"), plog("z")};
    auto sessions = sessionize(records, parsed, SessionizeMode::ByFixedWindow, 60);
    REQUIRE(sessions.size() == 2);
    CHECK(sessions[0].records.size() == 2);
    CHECK(sessions[1].records.size() == 1);
    CHECK(sessions[1].records[0].conceptualized_template == "z");
}

TEST_CASE("detect: training sessions stay normal (self-consistency)") {
    std::vector<Session> train = {make_session("s1", {"A", "B", "C"}),
                                  make_session("s2", {"A", "B", "C"}),
                                  make_session("s3", {"A", "C"})};
    DetectionModel model(0.01);
    model.train(train);
    for (const auto& s : train) {
        auto v = model.detect(s);
        CHECK_FALSE(v.anomalous);
        CHECK(v.evidence.empty());
    }
}

TEST_CASE("detect: unseen template is cited") {
    DetectionModel model(0.01);
    model.train({make_session("s1", {"A", "B"})});
    auto v = model.detect(make_session("x", {"A", "Z"}));
    CHECK(v.anomalous);
    bool cited = false;
    for (const auto& e : v.evidence)
        if (e.kind == Evidence::Kind::UNSEEN_TEMPLATE && e.first == "Z") cited = true;
    CHECK(cited);
}

TEST_CASE("detect: known templates in a never-seen order cite the bigram") {
    // Oracle: enumerate training bigrams {A->B} and confirm (B, A) absent.
    DetectionModel model(0.01);
    model.train({make_session("s1", {"A", "B"}), make_session("s2", {"A", "B"})});
    CHECK(model.bigram_probability("A", "B") == doctest::Approx(1.0));
    CHECK(model.bigram_probability("B", "A") == doctest::Approx(0.0));
    auto v = model.detect(make_session("x", {"B", "A"}));
    CHECK(v.anomalous);
    bool cited = false;
    for (const auto& e : v.evidence)
        if (e.kind == Evidence::Kind::RARE_BIGRAM && e.first == "B" && e.second == "A")
            cited = true;
    CHECK(cited);
}

TEST_CASE("detect: untrained model is an error") {
    DetectionModel model;
    CHECK_THROWS_AS(model.detect(make_session("x", {"A"})), ValidationError);
}

TEST_CASE("evidence soundness: every cited item is present in the session") {
    Rng rng(3);
    std::vector<std::string> vocab = {"A", "B", "C", "D", "E"};
    std::vector<Session> train;
    for (int i = 0; i < 20; ++i) {
        std::vector<std::string> templates;
        for (int k = 0; k < 6; ++k) templates.push_back(vocab[rng.pick_index(3)]);
        train.push_back(make_session("t" + std::to_string(i), templates));
    }
    DetectionModel model(0.05);
    model.train(train);
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> templates;
        for (int k = 0; k < 6; ++k) templates.push_back(vocab[rng.pick_index(5)]);
        Session s = make_session("e" + std::to_string(i), templates);
        auto v = model.detect(s);
        if (!v.anomalous) continue;
        REQUIRE(!v.evidence.empty());
        for (const auto& e : v.evidence) {
            bool found = false;
            for (std::size_t k = 0; k < templates.size(); ++k) {
                if (e.kind == Evidence::Kind::UNSEEN_TEMPLATE && templates[k] == e.first)
                    found = true;
                if (e.kind == Evidence::Kind::RARE_BIGRAM && k + 1 < templates.size() &&
                    templates[k] == e.first && templates[k + 1] == e.second)
                    found = true;
            }
            CHECK(found);
        }
    }
}

TEST_CASE("model JSON round-trip preserves detection behavior") {
    DetectionModel model(0.01);
    model.train({make_session("s1", {"A", "B", "C"}), make_session("s2", {"A", "C"})});
    auto round = DetectionModel::from_json(model.to_json());
    for (const auto& probe :
         std::vector<std::vector<std::string>>{{"A", "B"}, {"C", "A"}, {"A", "Z"}}) {
        CHECK(model.detect(make_session("p", probe)).anomalous ==
              round.detect(make_session("p", probe)).anomalous);
    }
}

TEST_CASE("learn_signatures: disjoint template sets become the signatures") {
    std::vector<std::pair<Session, std::string>> labeled = {
        {make_session("a1", {"X1", "X2"}), "alpha"},
        {make_session("a2", {"X1"}), "alpha"},
        {make_session("b1", {"Y1", "Y2"}), "beta"},
        {make_session("b2", {"Y2"}), "beta"},
    };
    auto sigs = learn_signatures(labeled, 0.3);
    REQUIRE(sigs.size() == 2);
    CHECK(sigs[0].failure_type == "alpha");
    CHECK(sigs[0].templates == std::set<std::string>{"X1", "X2"});
    CHECK(sigs[1].templates == std::set<std::string>{"Y1", "Y2"});
}

TEST_CASE("learn_signatures: shared background template excluded everywhere") {
    std::vector<std::pair<Session, std::string>> labeled = {
        {make_session("a1", {"BG", "X"}), "alpha"},
        {make_session("b1", {"BG", "Y"}), "beta"},
    };
    auto sigs = learn_signatures(labeled, 0.3);
    for (const auto& s : sigs) CHECK_FALSE(s.templates.count("BG"));
}

TEST_CASE("learn_signatures: frequency margin verified against direct counts") {
    // 3 synthetic types, 10 sessions each; each type injects its own marker
    // template in 80% of sessions plus a common background. Oracle: count
    // session frequencies directly.
    Rng rng(9);
    std::vector<std::pair<Session, std::string>> labeled;
    const std::vector<std::string> types = {"t_cpu", "t_disk", "t_net"};
    for (std::size_t ty = 0; ty < types.size(); ++ty) {
        for (int i = 0; i < 10; ++i) {
            std::vector<std::string> templates = {"BG"};
            if (i < 8) templates.push_back("MARK_" + types[ty]);
            labeled.push_back(
                {make_session(types[ty] + std::to_string(i), templates), types[ty]});
        }
    }
    auto sigs = learn_signatures(labeled, 0.3);
    REQUIRE(sigs.size() == 3);
    for (const auto& s : sigs) {
        CHECK(s.templates == std::set<std::string>{"MARK_" + s.failure_type});
        // margin check: 0.8 in own type vs 0.0 elsewhere
    }
}

TEST_CASE("learn_signatures: type with no discriminative element is an error") {
    std::vector<std::pair<Session, std::string>> labeled = {
        {make_session("a1", {"BG"}), "alpha"},
        {make_session("b1", {"BG"}), "beta"},
    };
    CHECK_THROWS_WITH_AS(learn_signatures(labeled, 0.3), doctest::Contains("alpha"),
                         ValidationError);
}

TEST_CASE("identify_failure: exact signature match ranks first with score 1") {
    std::vector<FailureSignature> sigs = {{"alpha", {"X1", "X2"}, {}},
                                          {"beta", {"Y1"}, {}}};
    auto ranked = identify_failure(make_session("s", {"X1", "X2"}), sigs);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].failure_type == "alpha");
    CHECK(ranked[0].score == doctest::Approx(1.0));
}

TEST_CASE("identify_failure: no overlap gives all zeros, alphabetical order") {
    std::vector<FailureSignature> sigs = {{"zeta", {"Z"}, {}}, {"alpha", {"A"}, {}}};
    auto ranked = identify_failure(make_session("s", {"Q"}), sigs);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].failure_type == "alpha");
    CHECK(ranked[0].score == 0.0);
    CHECK(ranked[1].failure_type == "zeta");
}

TEST_CASE("identify_failure: Jaccard overlap ranks the closer type first") {
    // Oracle (hand computation): session elements {E1, E2}; type A signature
    // {E1, E2, A3, A4} -> J = 2/4 = 0.5; type B {E1, B2, B3, B4} -> 1/5 = 0.2.
    std::vector<FailureSignature> sigs = {{"A", {"E1", "E2", "A3", "A4"}, {}},
                                          {"B", {"E1", "B2", "B3", "B4"}, {}}};
    auto ranked = identify_failure(make_session("s", {"E1", "E2"}), sigs);
    CHECK(ranked[0].failure_type == "A");
    CHECK(ranked[0].score == doctest::Approx(0.5));
    CHECK(ranked[1].score == doctest::Approx(0.2));
}

TEST_CASE("identify_failure: concepts participate in the overlap") {
    std::vector<FailureSignature> sigs = {{"alpha", {}, {"volume", "disk"}},
                                          {"beta", {}, {"zone"}}};
    auto ranked = identify_failure(
        make_session("s", {"T"}, std::vector<std::string>{"volume", "disk"}), sigs);
    CHECK(ranked[0].failure_type == "alpha");
    CHECK(ranked[0].score > ranked[1].score);
}

TEST_CASE("identify_failure: empty signatures are an error") {
    CHECK_THROWS_AS(identify_failure(make_session("s", {"A"}), {}), ValidationError);
}
