#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsforge/logparse.hpp"
#include "opsforge/telemetry.hpp"

namespace opsforge::logdetect {

using json = nlohmann::json;

/// A bounded group of parsed log records analyzed as one unit.
struct Session {
    std::string session_id;
    std::vector<logparse::ParsedLog> records;
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
};

enum class SessionizeMode { BySessionId, ByFixedWindow };

/// Groups time-ordered records into sessions. `parsed` runs parallel to
/// `records`. Id mode requires a session_id on every record; window mode
/// tiles time from the first timestamp.
std::vector<Session> sessionize(const std::vector<telemetry::LogRecord>& records,
                                const std::vector<logparse::ParsedLog>& parsed,
                                SessionizeMode mode, std::int64_t window_s = 60);

struct Evidence {
    enum class Kind { UNSEEN_TEMPLATE, RARE_BIGRAM };
    Kind kind = Kind::UNSEEN_TEMPLATE;
    std::string first;
    std::string second;        // set for bigram evidence
    double probability = 0.0;  // training probability of the bigram
};

struct SessionVerdict {
    bool anomalous = false;
    std::vector<Evidence> evidence;
};

/// Normal profile over conceptualized templates: template vocabulary plus
/// adjacent-template bigram statistics. A session is anomalous when it
/// contains an unseen template or a bigram with conditional probability
/// below epsilon.
class DetectionModel {
  public:
    explicit DetectionModel(double epsilon = 0.01) : epsilon_(epsilon) {}

    void train(const std::vector<Session>& normal_sessions);
    bool trained() const { return trained_; }
    double epsilon() const { return epsilon_; }

    SessionVerdict detect(const Session& session) const;

    double bigram_probability(const std::string& a, const std::string& b) const;
    bool knows_template(const std::string& t) const { return templates_.count(t) > 0; }

    json to_json() const;
    static DetectionModel from_json(const json& j);

  private:
    double epsilon_;
    bool trained_ = false;
    std::map<std::string, std::int64_t> templates_;
    std::map<std::pair<std::string, std::string>, std::int64_t> bigrams_;
    std::map<std::string, std::int64_t> prefix_totals_;
};

struct FailureSignature {
    std::string failure_type;
    std::set<std::string> templates;  // discriminative conceptualized templates
    std::set<std::string> concepts;   // discriminative CI concept names

    json to_json() const;
    static FailureSignature from_json(const json& j);
};

/// A template (or concept) is discriminative for a type when its session
/// frequency there exceeds its frequency in every other type by `margin`.
std::vector<FailureSignature> learn_signatures(
    const std::vector<std::pair<Session, std::string>>& labeled, double margin = 0.3);

struct IdentifyResult {
    std::string failure_type;
    double score = 0.0;  // Jaccard overlap with the signature
};

/// Ranks failure types by Jaccard overlap between the session's template and
/// concept set and each signature; ties break alphabetically.
std::vector<IdentifyResult> identify_failure(const Session& session,
                                             const std::vector<FailureSignature>& signatures);

}  // namespace opsforge::logdetect
