#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "opsforge/logparse.hpp"
#include "opsforge/telemetry.hpp"

using namespace opsforge;
using namespace opsforge::logparse;

namespace {

telemetry::LogRecord rec(const std::string& message, std::int64_t ts = 0) {
    telemetry::LogRecord r;
    r.ts = ts;
    r.service_id = "test";
    r.level = telemetry::LogLevel::INFO;
    r.message = message;
    return r;
}

Lexicon test_lexicon() {
    return Lexicon::load(std::string(OPSFORGE_DATA_DIR) + "/lexicon.txt");
}

ParsedLog parse_line(const std::string& message, KnowledgeDB& db, const Lexicon& lex) {
    auto r = rec(message);
    return joint_parse(r, mine_semantics(r, lex), db);
}

}  // namespace

TEST_CASE("token classes: ordered by specificity") {
    auto classify = [](const std::string& msg, std::size_t idx) {
        return tokenize(msg)[idx].cls;
    };
    CHECK(classify("id 550e8400-e29b-41d4-a716-446655440000 x", 1) == TokenClass::UUID);
    CHECK(classify("addr 10.0.0.1 x", 1) == TokenClass::IP);
    CHECK(classify("file /var/log/syslog x", 1) == TokenClass::PATH);
    CHECK(classify("ref 949e1227 x", 1) == TokenClass::HEX_ID);
    CHECK(classify("ref deadbeef x", 1) == TokenClass::HEX_ID);  // 8 hex letters
    CHECK(classify("word facade x", 1) == TokenClass::WORD);     // short, no digit
    CHECK(classify("n 42 x", 1) == TokenClass::INTEGER);
    CHECK(classify("n 7 x", 1) == TokenClass::WORD);  // single digit is not an instance
    CHECK(classify("v eth0 x", 1) == TokenClass::WORD);
}

TEST_CASE("tokenize: '=' and ':' separate into connector tokens") {
    auto tokens = tokenize("user=42 port:8080");
    REQUIRE(tokens.size() == 6);
    CHECK(tokens[0].core == "user");
    CHECK(tokens[1].cls == TokenClass::CONNECTOR);
    CHECK(tokens[2].core == "42");
    CHECK(tokens[3].core == "port");
    CHECK(tokens[5].core == "8080");
}

TEST_CASE("mine_semantics: the cell example yields an explicit pair") {
    auto lex = test_lexicon();
    auto mined = mine_semantics(rec("Listing instance in cell 949e1227"), lex);
    REQUIRE(mined.explicit_pairs.size() == 1);
    CHECK(mined.explicit_pairs[0].concept_name == "cell");
    CHECK(mined.explicit_pairs[0].instance == "949e1227");
    // "instance" carries message-level semantics; no adjacent instance token.
    REQUIRE(mined.concepts.size() == 1);
    CHECK(mined.concepts[0] == "instance");
}

TEST_CASE("mine_semantics: vacuous message yields empty outputs") {
    auto lex = test_lexicon();
    auto mined = mine_semantics(rec("System started"), lex);
    CHECK(mined.concepts.empty());
    CHECK(mined.explicit_pairs.empty());
    CHECK(mined.instances.empty());
}

TEST_CASE("mine_semantics: key=value binds through the connector") {
    auto lex = test_lexicon();
    auto mined = mine_semantics(rec("user=42 disconnected"), lex);
    REQUIRE(mined.explicit_pairs.size() == 1);
    CHECK(mined.explicit_pairs[0].concept_name == "user");
    CHECK(mined.explicit_pairs[0].instance == "42");
}

TEST_CASE("mine_semantics: hand-built corpus of adjacency shapes") {
    auto lex = test_lexicon();
    struct Case {
        std::string message;
        std::vector<std::pair<std::string, std::string>> pairs;
    };
    // Oracle: expected pairs hand-derived from the tokenizer + adjacency rule.
    std::vector<Case> cases = {
        {"volume 7d83aa10 attached", {{"volume", "7d83aa10"}}},
        {"attach volume of 7d83aa10 done", {{"volume", "7d83aa10"}}},
        {"volume for 7d83aa10", {{"volume", "7d83aa10"}}},
        {"volume in 7d83aa10", {{"volume", "7d83aa10"}}},
        {"volume=7d83aa10", {{"volume", "7d83aa10"}}},
        {"volume: 7d83aa10", {{"volume", "7d83aa10"}}},
        {"volume was 7d83aa10", {}},              // 'was' is not a connector
        {"7d83aa10 volume", {}},                  // instance precedes noun
        {"node 12 and node 13", {{"node", "12"}, {"node", "13"}}},
        {"host 10.0.0.1:8080 up", {{"host", "10.0.0.1"}}},
        {"user 42 of node 13", {{"user", "42"}, {"node", "13"}}},
        {"task running", {}},
        {"worker 31 joined queue 17", {{"worker", "31"}, {"queue", "17"}}},
        {"path /etc/hosts loaded", {{"path", "/etc/hosts"}}},
        {"session 550e8400-e29b-41d4-a716-446655440000 opened",
         {{"session", "550e8400-e29b-41d4-a716-446655440000"}}},
        {"checking disk", {}},
        {"disk sda1 failing", {}},                // sda1 is not an instance class
        {"block deadbeef rebuilt", {{"block", "deadbeef"}}},
        {"restarted 99 workers", {}},             // bare integer, no preceding noun
        {"upgrading node", {}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.message);
        auto mined = mine_semantics(rec(c.message), lex);
        REQUIRE(mined.explicit_pairs.size() == c.pairs.size());
        for (std::size_t i = 0; i < c.pairs.size(); ++i) {
            CHECK(mined.explicit_pairs[i].concept_name == c.pairs[i].first);
            CHECK(mined.explicit_pairs[i].instance == c.pairs[i].second);
        }
    }
}

TEST_CASE("joint_parse: implicit inference from the knowledge DB") {
    auto lex = test_lexicon();
    KnowledgeDB db;
    db.record("949e1227", "cell", 0);
    auto parsed = parse_line("949e1227 unreachable", db, lex);
    REQUIRE(parsed.ci_pairs.size() == 1);
    CHECK(parsed.ci_pairs[0].concept_name == "cell");
    CHECK(parsed.ci_pairs[0].instance == "949e1227");
    CHECK(parsed.ci_pairs[0].provenance == Provenance::IMPLICIT);
    CHECK(parsed.conceptualized_template == "<cell> unreachable");
    CHECK(parsed.template_str == "<*> unreachable");
}

TEST_CASE("joint_parse: unknown instance becomes an orphan") {
    auto lex = test_lexicon();
    KnowledgeDB db;
    auto parsed = parse_line("checksum deadbeef mismatch", db, lex);
    CHECK(parsed.ci_pairs.empty());
    REQUIRE(parsed.orphan_instances.size() == 1);
    CHECK(parsed.orphan_instances[0] == "deadbeef");
    CHECK(parsed.conceptualized_template == "checksum <*> mismatch");
}

TEST_CASE("joint_parse: re-parsing the same message is idempotent") {
    auto lex = test_lexicon();
    KnowledgeDB db;
    auto first = parse_line("attached volume 7d83aa10", db, lex);
    auto second = parse_line("attached volume 7d83aa10", db, lex);
    CHECK(first.conceptualized_template == second.conceptualized_template);
    REQUIRE(second.ci_pairs.size() == 1);
    CHECK(second.ci_pairs[0].provenance == Provenance::EXPLICIT);
    CHECK(first.orphan_concepts == second.orphan_concepts);
}

TEST_CASE("joint_parse: placeholder count equals pairs plus orphans") {
    auto lex = test_lexicon();
    KnowledgeDB db;
    for (const std::string msg :
         {"volume 7d83aa10 and bare f00dfeed11 at 10.1.2.3", "user=42 from 10.0.0.8",
          "nothing here", "7d83aa10 seen again"}) {
        auto parsed = parse_line(msg, db, lex);
        std::size_t placeholders = 0;
        for (std::size_t i = 0; i + 1 < parsed.conceptualized_template.size(); ++i)
            if (parsed.conceptualized_template[i] == '<') ++placeholders;
        CHECK(placeholders == parsed.ci_pairs.size() + parsed.orphan_instances.size());
    }
}

TEST_CASE("conservation: message tokens recoverable from template plus instances") {
    auto lex = test_lexicon();
    KnowledgeDB db;
    Rng rng(31);
    const std::vector<std::string> shapes = {
        "volume %s attached to node %s",  "user=%s moved to host %s",
        "bare values %s %s floating",     "path %s scanned",
        "%s retried for session %s",      "block %s of %s compacted",
    };
    const std::vector<std::string> fills = {"7d83aa10", "42", "10.0.0.9", "/var/tmp/x",
                                            "deadbeef", "1234", "550e8400-e29b-41d4-a716-446655440000"};
    for (int trial = 0; trial < 200; ++trial) {
        std::string shape = shapes[rng.pick_index(shapes.size())];
        std::string msg;
        std::vector<std::string> used;
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (shape[i] == '%' && i + 1 < shape.size() && shape[i + 1] == 's') {
                std::string f = fills[rng.pick_index(fills.size())];
                msg += f;
                used.push_back(f);
                ++i;
            } else {
                msg += shape[i];
            }
        }
        auto parsed = parse_line(msg, db, lex);
        // Rebuild by substituting extracted instances into "<*>"-normalized
        // template in order.
        std::string rebuilt;
        std::size_t instance_idx = 0;
        for (std::size_t i = 0; i < parsed.template_str.size();) {
            if (parsed.template_str.compare(i, 3, "<*>") == 0) {
                REQUIRE(instance_idx < parsed.instances_in_order.size());
                rebuilt += parsed.instances_in_order[instance_idx++];
                i += 3;
            } else {
                rebuilt += parsed.template_str[i++];
            }
        }
        CHECK(instance_idx == parsed.instances_in_order.size());
        CHECK(rebuilt == msg);
    }
}

TEST_CASE("knowledge DB: monotone growth and conflict overwrite with warning") {
    auto lex = test_lexicon();
    KnowledgeDB db;
    std::size_t prev = 0;
    std::vector<std::string> diags;
    for (const std::string msg : {"volume 7d83aa10", "node 44", "user 42"}) {
        auto r = rec(msg);
        joint_parse(r, mine_semantics(r, lex), db, &diags);
        CHECK(db.size() >= prev);
        prev = db.size();
    }
    CHECK(diags.empty());
    CHECK(db.lookup("7d83aa10") == "volume");
    // latest explicit pairing wins, with a diagnostic
    auto r = rec("disk 7d83aa10 replaced");
    joint_parse(r, mine_semantics(r, lex), db, &diags);
    REQUIRE(diags.size() == 1);
    CHECK(db.lookup("7d83aa10") == "disk");
}

TEST_CASE("implicit-inference soundness on fuzzed logs") {
    // Every IMPLICIT pair must have been recorded as an EXPLICIT pair before.
    auto lex = test_lexicon();
    KnowledgeDB db;
    Rng rng(77);
    const std::vector<std::string> nouns = {"volume", "node", "user", "session", "block"};
    std::set<std::pair<std::string, std::string>> explicit_seen;
    for (int i = 0; i < 10000; ++i) {
        std::string instance;
        int cls = static_cast<int>(rng.pick_index(3));
        if (cls == 0) {
            static const char* hex = "0123456789abcdef";
            for (int k = 0; k < 8; ++k) instance += hex[rng.pick_index(16)];
        } else if (cls == 1) {
            instance = std::to_string(10 + rng.pick_index(90));
        } else {
            instance = "10." + std::to_string(rng.pick_index(4)) + ".0." +
                       std::to_string(1 + rng.pick_index(9));
        }
        std::string msg;
        bool with_noun = rng.u01() < 0.5;
        if (with_noun)
            msg = nouns[rng.pick_index(nouns.size())] + " " + instance + " event";
        else
            msg = "observed " + instance + " event";
        auto r = rec(msg, i);
        auto mined = mine_semantics(r, lex);
        auto parsed = joint_parse(r, mined, db);
        for (const auto& p : mined.explicit_pairs)
            explicit_seen.insert({p.concept_name, p.instance});
        for (const auto& p : parsed.ci_pairs) {
            if (p.provenance == Provenance::IMPLICIT) {
                CHECK(explicit_seen.count({p.concept_name, p.instance}) == 1);
            }
        }
    }
}

TEST_CASE("annotated corpus: CI extraction F1 at or above 0.9") {
    auto lex = test_lexicon();
    auto records = telemetry::load_logs(std::string(OPSFORGE_DATA_DIR) + "/ci_corpus.jsonl");
    REQUIRE(records.size() == 50);
    KnowledgeDB db;
    long tp = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
        auto parsed = joint_parse(r, mine_semantics(r, lex), db);
        std::set<std::pair<std::string, std::string>> predicted, gold;
        for (const auto& p : parsed.ci_pairs) predicted.insert({p.concept_name, p.instance});
        for (const auto& g : r.extra.at("ci_pairs"))
            gold.insert({g[0].get<std::string>(), g[1].get<std::string>()});
        for (const auto& p : predicted)
            gold.count(p) ? ++tp : ++fp;
        for (const auto& g : gold)
            if (!predicted.count(g)) ++fn;
    }
    double precision = double(tp) / double(tp + fp);
    double recall = double(tp) / double(tp + fn);
    double f1 = 2 * precision * recall / (precision + recall);
    CAPTURE(tp);
    CAPTURE(fp);
    CAPTURE(fn);
    CHECK(f1 >= 0.9);
    CHECK(f1 < 1.0);  // the corpus includes deliberate miss cases
}

TEST_CASE("syntax_parse: identical messages share one exact template") {
    std::vector<telemetry::LogRecord> records = {rec("connection established"),
                                                 rec("connection established")};
    auto templates = syntax_parse(records);
    CHECK(templates[0] == "connection established");
    CHECK(templates[1] == "connection established");
}

TEST_CASE("syntax_parse: variable tail merges to a wildcard") {
    // Hand trace: both messages have 2 tokens and share "connect"; the
    // similarity 1/2 meets the 0.5 bar, so position 1 wildcards.
    std::vector<telemetry::LogRecord> records = {rec("connect 10.0.0.1"),
                                                 rec("connect 10.0.0.2")};
    auto templates = syntax_parse(records, 4, 0.5);
    CHECK(templates[1] == "connect <*>");
}

TEST_CASE("syntax_parse: different token counts never merge") {
    std::vector<telemetry::LogRecord> records = {rec("start worker now"),
                                                 rec("start worker")};
    auto templates = syntax_parse(records);
    CHECK(templates[0] == "start worker now");
    CHECK(templates[1] == "start worker");
}

TEST_CASE("syntax_parse: digit-bearing level tokens share a branch") {
    // First tokens carry ids; the internal node wildcards them so the leaf
    // can still merge the messages.
    std::vector<telemetry::LogRecord> records = {rec("t411 done ok"), rec("t922 done ok")};
    auto templates = syntax_parse(records, 4, 0.5);
    CHECK(templates[1] == "<*> done ok");
}

TEST_CASE("syntax parser: parameter validation") {
    CHECK_THROWS_AS(SyntaxParser(SyntaxParserParams{1, 0.5}), ValidationError);
    CHECK_THROWS_AS(SyntaxParser(SyntaxParserParams{4, 0.0}), ValidationError);
    CHECK_THROWS_AS(SyntaxParser(SyntaxParserParams{4, 1.0}), ValidationError);
}

TEST_CASE("knowledge DB persists through JSON") {
    KnowledgeDB db;
    db.record("abc123def", "volume", 5);
    db.record("abc123def", "volume", 9);
    auto round = KnowledgeDB::from_json(db.to_json());
    CHECK(round.size() == 1);
    CHECK(round.lookup("abc123def") == "volume");
    CHECK(round.entries().at("abc123def").occurrences == 2);
    CHECK(round.entries().at("abc123def").first_seen_ts == 5);
}
