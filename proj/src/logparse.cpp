#include "opsforge/logparse.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace opsforge::logparse {

std::string to_string(Provenance p) { return p == Provenance::EXPLICIT ? "EXPLICIT" : "IMPLICIT"; }

namespace {

bool is_punct_edge(char c) {
    static const std::string kEdge = ".,;!?()[]{}\"'`";
    return kEdge.find(c) != std::string::npos;
}

bool is_hex_char(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

bool is_uuid(const std::string& s) {
    if (s.size() != 36) return false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i == 8 || i == 13 || i == 18 || i == 23) {
            if (s[i] != '-') return false;
        } else if (!is_hex_char(s[i])) {
            return false;
        }
    }
    return true;
}

bool is_ip(const std::string& s) {
    int parts = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t j = i;
        int val = 0;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
            val = val * 10 + (s[j] - '0');
            ++j;
        }
        if (j == i || j - i > 3 || val > 255) return false;
        ++parts;
        if (j == s.size()) break;
        if (s[j] != '.') return false;
        i = j + 1;
        if (i == s.size()) return false;  // trailing dot
        continue;
    }
    return parts == 4;
}

bool is_path(const std::string& s) {
    return s.size() >= 2 && s[0] == '/' &&
           s.find_first_not_of("/", 1) != std::string::npos;
}

// Hex-like ids: >= 6 hex chars, and either a digit is present or the token
// is at least 8 long (keeps short English words like "facade" out).
bool is_hex_id(const std::string& s) {
    if (s.size() < 6) return false;
    bool has_digit = false;
    for (char c : s) {
        if (!is_hex_char(c)) return false;
        if (c >= '0' && c <= '9') has_digit = true;
    }
    return has_digit || s.size() >= 8;
}

bool is_integer(const std::string& s) {
    if (s.size() < 2) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

TokenClass classify(const std::string& core) {
    if (core.empty()) return TokenClass::WORD;
    if (is_uuid(core)) return TokenClass::UUID;
    if (is_ip(core)) return TokenClass::IP;
    if (is_path(core)) return TokenClass::PATH;
    if (is_hex_id(core)) return TokenClass::HEX_ID;
    if (is_integer(core)) return TokenClass::INTEGER;
    return TokenClass::WORD;
}

bool is_connector(const Token& t) {
    if (t.core == "=" || t.core == ":") return true;
    std::string l = text::lower(t.core);
    return l == "in" || l == "of" || l == "for";
}

void push_piece(std::vector<Token>& out, const std::string& message, std::size_t begin,
                std::size_t end) {
    if (begin >= end) return;
    std::size_t cb = begin, ce = end;
    while (cb < ce && is_punct_edge(message[cb])) ++cb;
    while (ce > cb && is_punct_edge(message[ce - 1])) --ce;
    Token t;
    t.text = message.substr(begin, end - begin);
    t.core = message.substr(cb, ce - cb);
    t.core_begin = cb;
    t.core_end = ce;
    t.cls = classify(t.core);
    if (t.cls == TokenClass::WORD && (t.core == "=" || t.core == ":")) t.cls = TokenClass::CONNECTOR;
    out.push_back(std::move(t));
}

}  // namespace

bool is_instance_class(TokenClass c) {
    return c == TokenClass::UUID || c == TokenClass::IP || c == TokenClass::PATH ||
           c == TokenClass::HEX_ID || c == TokenClass::INTEGER;
}

std::vector<Token> tokenize(const std::string& message) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < message.size()) {
        while (i < message.size() && std::isspace(static_cast<unsigned char>(message[i]))) ++i;
        std::size_t j = i;
        while (j < message.size() && !std::isspace(static_cast<unsigned char>(message[j]))) ++j;
        if (j == i) break;
        // split the chunk at '=' and ':' so key=value binds as noun = instance
        std::size_t piece_start = i;
        for (std::size_t k = i; k < j; ++k) {
            if (message[k] == '=' || message[k] == ':') {
                push_piece(out, message, piece_start, k);
                push_piece(out, message, k, k + 1);
                piece_start = k + 1;
            }
        }
        push_piece(out, message, piece_start, j);
        i = j;
    }
    return out;
}

MinerOutput mine_semantics(const telemetry::LogRecord& record, const Lexicon& lexicon) {
    if (lexicon.nouns.empty()) throw ValidationError("lexicon: must be non-empty");
    std::vector<Token> tokens = tokenize(record.message);

    MinerOutput out;
    std::vector<int> instance_index(tokens.size(), -1);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (is_instance_class(tokens[i].cls)) {
            InstanceRef ref;
            ref.text = tokens[i].core;
            ref.core_begin = tokens[i].core_begin;
            ref.core_end = tokens[i].core_end;
            instance_index[i] = static_cast<int>(out.instances.size());
            out.instances.push_back(std::move(ref));
        }
    }

    // Lexicon noun followed by an instance (optionally across one connector)
    // forms an explicit pair; leftmost noun wins, each side pairs once.
    std::vector<bool> noun_used(tokens.size(), false);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].cls != TokenClass::WORD) continue;
        std::string noun = text::lower(tokens[i].core);
        if (noun.empty() || !lexicon.contains(noun)) continue;
        std::size_t j = i + 1;
        if (j < tokens.size() && is_connector(tokens[j])) ++j;
        if (j < tokens.size() && instance_index[j] >= 0) {
            InstanceRef& ref = out.instances[static_cast<std::size_t>(instance_index[j])];
            if (!ref.paired) {
                ref.paired = true;
                ref.concept_name = noun;
                ref.provenance = Provenance::EXPLICIT;
                noun_used[i] = true;
                out.explicit_pairs.push_back({noun, ref.text, Provenance::EXPLICIT});
            }
        }
    }

    // Remaining lexicon nouns are message-level concepts.
    std::set<std::string> seen;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].cls != TokenClass::WORD || noun_used[i]) continue;
        std::string noun = text::lower(tokens[i].core);
        if (noun.empty() || !lexicon.contains(noun)) continue;
        if (seen.insert(noun).second) out.concepts.push_back(noun);
    }
    return out;
}

ParsedLog joint_parse(const telemetry::LogRecord& record, const MinerOutput& mined,
                      KnowledgeDB& db, std::vector<std::string>* diagnostics) {
    std::vector<InstanceRef> instances = mined.instances;

    // Explicit knowledge goes in first, then implicit inference over the
    // remaining unpaired instances.
    for (const auto& p : mined.explicit_pairs) {
        auto warn = db.record(p.instance, p.concept_name, record.ts);
        if (warn && diagnostics) diagnostics->push_back(*warn);
    }
    for (auto& ref : instances) {
        if (ref.paired) continue;
        if (auto known = db.lookup(ref.text)) {
            ref.paired = true;
            ref.concept_name = *known;
            ref.provenance = Provenance::IMPLICIT;
        }
    }

    ParsedLog parsed;
    const std::string& msg = record.message;
    std::size_t cursor = 0;
    for (const auto& ref : instances) {
        parsed.template_str += msg.substr(cursor, ref.core_begin - cursor);
        parsed.conceptualized_template += msg.substr(cursor, ref.core_begin - cursor);
        parsed.template_str += "<*>";
        parsed.conceptualized_template += ref.paired ? "<" + ref.concept_name + ">" : "<*>";
        cursor = ref.core_end;

        parsed.instances_in_order.push_back(ref.text);
        if (ref.paired)
            parsed.ci_pairs.push_back({ref.concept_name, ref.text, ref.provenance});
        else
            parsed.orphan_instances.push_back(ref.text);
    }
    parsed.template_str += msg.substr(cursor);
    parsed.conceptualized_template += msg.substr(cursor);

    std::set<std::string> paired_concepts;
    for (const auto& p : parsed.ci_pairs) paired_concepts.insert(p.concept_name);
    for (const auto& c : mined.concepts)
        if (!paired_concepts.count(c)) parsed.orphan_concepts.push_back(c);
    return parsed;
}

json ParsedLog::to_json() const {
    json j;
    j["template"] = template_str;
    j["conceptualized_template"] = conceptualized_template;
    json pairs = json::array();
    for (const auto& p : ci_pairs)
        pairs.push_back({{"concept", p.concept_name},
                         {"instance", p.instance},
                         {"provenance", to_string(p.provenance)}});
    j["ci_pairs"] = pairs;
    j["orphan_concepts"] = orphan_concepts;
    j["orphan_instances"] = orphan_instances;
    return j;
}

// ---- KnowledgeDB -----------------------------------------------------------

std::optional<std::string> KnowledgeDB::lookup(const std::string& instance) const {
    auto it = entries_.find(instance);
    if (it == entries_.end()) return std::nullopt;
    return it->second.concept_name;
}

std::optional<std::string> KnowledgeDB::record(const std::string& instance,
                                               const std::string& concept_name, std::int64_t ts) {
    auto it = entries_.find(instance);
    if (it == entries_.end()) {
        entries_[instance] = KnowledgeEntry{concept_name, ts, 1};
        return std::nullopt;
    }
    ++it->second.occurrences;
    if (it->second.concept_name != concept_name) {
        std::string warn = "instance '" + instance + "' re-bound from concept '" +
                           it->second.concept_name + "' to '" + concept_name + "'";
        it->second.concept_name = concept_name;
        return warn;
    }
    return std::nullopt;
}

json KnowledgeDB::to_json() const {
    json j = json::object();
    for (const auto& [instance, e] : entries_)
        j[instance] = {{"concept", e.concept_name},
                       {"first_seen_ts", e.first_seen_ts},
                       {"occurrences", e.occurrences}};
    return j;
}

KnowledgeDB KnowledgeDB::from_json(const json& j) {
    KnowledgeDB db;
    for (auto it = j.begin(); it != j.end(); ++it) {
        KnowledgeEntry e;
        e.concept_name = it.value().at("concept").get<std::string>();
        e.first_seen_ts = it.value().value("first_seen_ts", std::int64_t{0});
        e.occurrences = it.value().value("occurrences", std::int64_t{1});
        db.entries_[it.key()] = std::move(e);
    }
    return db;
}

void KnowledgeDB::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    out << to_json().dump(2) << "\n";
}

KnowledgeDB KnowledgeDB::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    return from_json(json::parse(in));
}

// ---- Lexicon ---------------------------------------------------------------

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open lexicon file: " + path);
    Lexicon lex;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto words = text::split_ws(line);
        for (auto& w : words) lex.nouns.insert(text::lower(w));
    }
    return lex;
}

Lexicon Lexicon::from_words(std::vector<std::string> words) {
    Lexicon lex;
    for (auto& w : words) lex.nouns.insert(text::lower(w));
    return lex;
}

// ---- SyntaxParser ----------------------------------------------------------

SyntaxParser::SyntaxParser(SyntaxParserParams params) : params_(params) {
    if (params_.depth < 2) throw ValidationError("depth: must be >= 2");
    if (params_.sim_threshold <= 0.0 || params_.sim_threshold >= 1.0)
        throw ValidationError("sim_threshold: must lie in (0, 1)");
}

namespace {

bool has_digit(const std::string& s) {
    return std::any_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

double token_similarity(const std::vector<std::string>& tmpl,
                        const std::vector<std::string>& tokens) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < tmpl.size(); ++i)
        if (tmpl[i] == tokens[i] || tmpl[i] == "<*>") ++same;
    return static_cast<double>(same) / static_cast<double>(tmpl.size());
}

}  // namespace

std::string SyntaxParser::parse_one(const std::string& message) {
    std::vector<std::string> tokens = text::split_ws(message);
    Node* node = &by_token_count_[tokens.size()];
    // Internal levels: first (depth - 2) tokens; digit-bearing tokens share
    // a "<*>" branch to keep the tree from exploding on ids.
    std::size_t levels = params_.depth >= 2 ? static_cast<std::size_t>(params_.depth - 2) : 0;
    for (std::size_t i = 0; i < levels && i < tokens.size(); ++i) {
        const std::string key = has_digit(tokens[i]) ? "<*>" : tokens[i];
        node = &node->children[key];
    }

    Leaf& leaf = node->leaf;
    std::size_t best = leaf.groups.size();
    double best_sim = -1.0;
    for (std::size_t g = 0; g < leaf.groups.size(); ++g) {
        double sim = token_similarity(leaf.groups[g], tokens);
        if (sim > best_sim) {
            best_sim = sim;
            best = g;
        }
    }
    if (best < leaf.groups.size() && best_sim >= params_.sim_threshold) {
        std::vector<std::string>& tmpl = leaf.groups[best];
        for (std::size_t i = 0; i < tmpl.size(); ++i)
            if (tmpl[i] != tokens[i]) tmpl[i] = "<*>";
        return text::join(tmpl, " ");
    }
    leaf.groups.push_back(tokens);
    return text::join(tokens, " ");
}

std::vector<std::string> SyntaxParser::parse(const std::vector<std::string>& messages) {
    std::vector<std::string> out;
    out.reserve(messages.size());
    for (const auto& m : messages) out.push_back(parse_one(m));
    return out;
}

std::vector<std::string> SyntaxParser::templates() const {
    std::vector<std::string> out;
    std::vector<const Node*> stack;
    for (const auto& [count, node] : by_token_count_) {
        stack.push_back(&node);
        while (!stack.empty()) {
            const Node* n = stack.back();
            stack.pop_back();
            for (const auto& g : n->leaf.groups) out.push_back(text::join(g, " "));
            for (const auto& [key, child] : n->children) stack.push_back(&child);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> syntax_parse(const std::vector<telemetry::LogRecord>& records,
                                      int depth, double sim_threshold) {
    SyntaxParser parser(SyntaxParserParams{depth, sim_threshold});
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(parser.parse_one(r.message));
    return out;
}

}  // namespace opsforge::logparse
