#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tiap/audit.hpp"

// Orchestration of external LLM judges over contested cases.
//
// Each judge is an OpenAI-style chat-completion endpoint. One request is sent
// per credited memory of a case at temperature 0; the case label is the most
// supportive label over its items. Transport failures and empty completions
// are retried with exponential backoff; an unparseable completion gets one
// reprompt. A judge that never produces a label yields an absent verdict.
// 401/403 responses abort the whole run with AuthError.

namespace tiap::judge {

inline constexpr std::string_view kApiKeyEnv = "TIAP_JUDGE_API_KEY";

struct Endpoint {
    std::string name;
    /// e.g. "https://openrouter.ai/api/v1"; requests go to <base_url>/chat/completions.
    std::string base_url;
    std::string model;
    /// Minimum spacing between request starts on this endpoint.
    std::chrono::milliseconds min_interval{0};
};

struct JudgeConfig {
    std::vector<Endpoint> judges;
    std::size_t concurrency = 4;
    std::size_t attempts = 3;
    std::chrono::milliseconds backoff{1000};
    std::chrono::seconds timeout{120};
    int max_tokens = 16;
    /// Empty selects kDefaultTemplate.
    std::string prompt_template;
};

/// Reads {"judges":[{"name","url","model","min_interval_ms"}], "concurrency",
/// "attempts", "backoff_ms", "timeout_s", "max_tokens", "prompt_template"}.
JudgeConfig parse_judge_config(const nlohmann::json& j);

inline constexpr std::string_view kRubric =
    "Labels:\n"
    "supports: the memory fully supports the answer the question requires.\n"
    "partial: the memory contains related evidence but needs additional context to answer.\n"
    "does_not_support: the memory contradicts, omits, or is irrelevant to the required evidence.";

inline constexpr std::string_view kDefaultTemplate =
    "You are auditing retrieval credit for a conversational-memory benchmark.\n"
    "Decide whether the retrieved memory supports answering the question, given the source evidence.\n\n"
    "Question: {{query}}\n"
    "Reference answer: {{reference_answer}}\n"
    "Source evidence: {{source_evidence}}\n"
    "Retrieved memory: {{memory}}\n\n"
    "{{rubric}}\n\n"
    "Reply with exactly one label: supports, partial, or does_not_support.";

inline constexpr std::string_view kReprompt =
    "Your reply was not one of the allowed labels. Reply with exactly one label: supports, partial, or "
    "does_not_support.";

/// Throws ValidationError unless the template has {{query}}, {{source_evidence}},
/// {{memory}} and {{rubric}} slots.
void validate_template(std::string_view tmpl);
std::string render_prompt(std::string_view tmpl, const audit::AuditCase& c, const audit::CreditedItem& item);

/// Accepts a bare label with surrounding whitespace, quotes, trailing
/// punctuation, any case, and spaces or hyphens in place of underscores.
std::optional<Label> parse_label(std::string_view completion);

struct HttpResponse {
    int status = 0;  // 0: no response (connection error, timeout)
    std::string body;
    std::string error;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const Endpoint& endpoint, const std::vector<std::pair<std::string, std::string>>& headers,
                              const std::string& body) = 0;
};

/// cpp-httplib client; https requires the build to find OpenSSL.
class HttpTransport : public Transport {
public:
    explicit HttpTransport(std::chrono::seconds timeout = std::chrono::seconds{120}) : timeout_(timeout) {}
    HttpResponse post(const Endpoint& endpoint, const std::vector<std::pair<std::string, std::string>>& headers,
                      const std::string& body) override;

private:
    std::chrono::seconds timeout_;
};

/// Splits "scheme://host[:port]/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_url(std::string_view url);

struct TranscriptEntry {
    std::string case_id;
    std::string judge_id;
    std::size_t item = 0;
    std::size_t attempt = 0;
    bool reprompt = false;
    nlohmann::json request;
    int status = 0;
    std::string response;
    std::string error;
    std::optional<Label> label;
};

struct JudgeRun {
    std::vector<audit::JudgeVerdict> verdicts;  // case-major, judges in config order
    std::vector<TranscriptEntry> transcript;
};

/// One verdict per (case, judge). Requests carry the bearer token and the
/// headers X-TIAP-Case-Id / X-TIAP-Item so transcripts and stub servers can
/// attribute them.
JudgeRun judge_cases(std::span<const audit::AuditCase> cases, const JudgeConfig& config, const std::string& api_key,
                     Transport& transport);

/// One JSONL transcript per judge under `dir`.
void write_transcripts(const std::filesystem::path& dir, const JudgeRun& run);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view data);

}  // namespace tiap::judge
