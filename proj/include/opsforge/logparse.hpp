#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsforge/telemetry.hpp"

namespace opsforge::logparse {

using json = nlohmann::json;

enum class Provenance { EXPLICIT, IMPLICIT };
std::string to_string(Provenance p);

struct CiPair {
    std::string concept_name;
    std::string instance;
    Provenance provenance = Provenance::EXPLICIT;
    bool operator==(const CiPair&) const = default;
};

/// Structured outcome of parsing one log message. Every instance token shows
/// up either in ci_pairs or in orphan_instances; conceptualized_template has
/// one placeholder per instance, in message order.
struct ParsedLog {
    std::string template_str;
    std::string conceptualized_template;
    std::vector<CiPair> ci_pairs;
    std::vector<std::string> orphan_concepts;
    std::vector<std::string> orphan_instances;
    std::vector<std::string> instances_in_order;

    json to_json() const;
};

struct KnowledgeEntry {
    std::string concept_name;
    std::int64_t first_seen_ts = 0;
    std::int64_t occurrences = 0;
};

/// Accumulated explicit concept-instance knowledge: a function from instance
/// string to concept. The latest explicit pairing wins on conflict.
class KnowledgeDB {
  public:
    std::optional<std::string> lookup(const std::string& instance) const;

    /// Records an explicit pairing. Returns a warning diagnostic when an
    /// existing instance is re-bound to a different concept.
    std::optional<std::string> record(const std::string& instance, const std::string& concept_name,
                                      std::int64_t ts);

    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, KnowledgeEntry>& entries() const { return entries_; }

    json to_json() const;
    static KnowledgeDB from_json(const json& j);
    void save(const std::string& path) const;
    static KnowledgeDB load(const std::string& path);

  private:
    std::map<std::string, KnowledgeEntry> entries_;
};

/// Concept noun list, one per line; '#' starts a comment.
struct Lexicon {
    std::set<std::string> nouns;

    bool contains(const std::string& lowercased) const { return nouns.count(lowercased) > 0; }
    static Lexicon load(const std::string& path);
    static Lexicon from_words(std::vector<std::string> words);
};

enum class TokenClass { WORD, CONNECTOR, UUID, IP, PATH, HEX_ID, INTEGER };

struct Token {
    std::string text;        // raw piece, punctuation included
    std::string core;        // edge punctuation trimmed
    std::size_t core_begin = 0;  // char offsets of core in the message
    std::size_t core_end = 0;
    TokenClass cls = TokenClass::WORD;
};

/// Whitespace tokenization with '='/':' separated out and edge punctuation
/// trimmed before classification.
std::vector<Token> tokenize(const std::string& message);

bool is_instance_class(TokenClass c);

struct InstanceRef {
    std::string text;
    std::size_t core_begin = 0;
    std::size_t core_end = 0;
    bool paired = false;
    std::string concept_name;  // set when paired
    Provenance provenance = Provenance::EXPLICIT;
};

struct MinerOutput {
    std::vector<std::string> concepts;   // message-level nouns without adjacent instance
    std::vector<CiPair> explicit_pairs;
    std::vector<InstanceRef> instances;  // all instance tokens, message order
};

/// Instance detection by token class plus lexicon adjacency: a lexicon noun
/// immediately before an instance (optionally across one of in/of/for/=/:)
/// forms an explicit CI pair.
MinerOutput mine_semantics(const telemetry::LogRecord& record, const Lexicon& lexicon);

/// Implicit inference from the knowledge DB plus template construction.
/// Explicit pairs are recorded into the DB; unpaired instances known to the
/// DB become IMPLICIT pairs. Warning diagnostics (concept conflicts) are
/// appended to `diagnostics` when provided.
ParsedLog joint_parse(const telemetry::LogRecord& record, const MinerOutput& mined,
                      KnowledgeDB& db, std::vector<std::string>* diagnostics = nullptr);

struct SyntaxParserParams {
    int depth = 4;               // tree depth incl. count and leaf levels
    double sim_threshold = 0.5;  // token-wise similarity to join a template
};

/// Fixed-depth prefix-tree template miner. Stateful: templates evolve as
/// messages stream through, deterministic in input order.
class SyntaxParser {
  public:
    explicit SyntaxParser(SyntaxParserParams params = {});

    std::string parse_one(const std::string& message);
    std::vector<std::string> parse(const std::vector<std::string>& messages);
    std::vector<std::string> templates() const;

  private:
    struct Leaf {
        std::vector<std::vector<std::string>> groups;
    };
    struct Node {
        std::map<std::string, Node> children;
        Leaf leaf;
    };
    SyntaxParserParams params_;
    std::map<std::size_t, Node> by_token_count_;
};

std::vector<std::string> syntax_parse(const std::vector<telemetry::LogRecord>& records,
                                      int depth = 4, double sim_threshold = 0.5);

}  // namespace opsforge::logparse
