#include "tiap/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "tiap/error.hpp"

namespace tiap::judge {

using json = nlohmann::json;

JudgeConfig parse_judge_config(const json& j) {
    JudgeConfig c;
    if (!j.is_object() || !j.contains("judges") || !j["judges"].is_array())
        throw ValidationError("judge config needs a \"judges\" array");
    for (const auto& e : j["judges"]) {
        Endpoint ep;
        ep.name = e.at("name").get<std::string>();
        ep.base_url = e.at("url").get<std::string>();
        ep.model = e.at("model").get<std::string>();
        ep.min_interval = std::chrono::milliseconds(e.value("min_interval_ms", 0));
        if (ep.name.empty() || ep.base_url.empty() || ep.model.empty())
            throw ValidationError("judge entries need non-empty name, url and model");
        for (const auto& other : c.judges)
            if (other.name == ep.name) throw ValidationError("duplicate judge name '" + ep.name + "'");
        c.judges.push_back(std::move(ep));
    }
    if (c.judges.empty()) throw ValidationError("judge config lists no judges");
    c.concurrency = j.value("concurrency", c.concurrency);
    c.attempts = j.value("attempts", c.attempts);
    c.backoff = std::chrono::milliseconds(j.value("backoff_ms", static_cast<long>(c.backoff.count())));
    c.timeout = std::chrono::seconds(j.value("timeout_s", static_cast<long>(c.timeout.count())));
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.prompt_template = j.value("prompt_template", std::string());
    if (c.concurrency == 0) throw ValidationError("judge concurrency must be at least 1");
    if (c.attempts == 0) throw ValidationError("judge attempts must be at least 1");
    return c;
}

void validate_template(std::string_view tmpl) {
    for (std::string_view slot : {"{{query}}", "{{source_evidence}}", "{{memory}}", "{{rubric}}"})
        if (tmpl.find(slot) == std::string_view::npos)
            throw ValidationError("prompt template lacks the " + std::string(slot) + " slot");
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::string render_prompt(std::string_view tmpl, const audit::AuditCase& c, const audit::CreditedItem& item) {
    // Values are substituted in one pass per slot, rubric last, so slot-like
    // text inside case material is never expanded twice.
    std::string out(tmpl);
    replace_all(out, "{{rubric}}", "\x01RUBRIC\x01");
    replace_all(out, "{{query}}", c.query_text);
    replace_all(out, "{{reference_answer}}", c.reference_answer.value_or("(not provided)"));
    replace_all(out, "{{source_evidence}}", c.source_text);
    replace_all(out, "{{memory}}", item.text);
    replace_all(out, "\x01RUBRIC\x01", kRubric);
    return out;
}

std::optional<Label> parse_label(std::string_view completion) {
    std::string s;
    for (char ch : completion) s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    auto strip = [](char ch) {
        return std::isspace(static_cast<unsigned char>(ch)) || ch == '"' || ch == '\'' || ch == '`' || ch == '.' ||
               ch == '*' || ch == ':' || ch == '!';
    };
    while (!s.empty() && strip(s.front())) s.erase(s.begin());
    while (!s.empty() && strip(s.back())) s.pop_back();
    for (auto& ch : s)
        if (ch == ' ' || ch == '-') ch = '_';
    if (s == "supports" || s == "support") return Label::supports;
    if (s == "partial") return Label::partial;
    if (s == "does_not_support" || s == "not_support") return Label::does_not_support;
    return std::nullopt;
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

class RateLimiter {
public:
    explicit RateLimiter(const std::vector<Endpoint>& eps) {
        for (const auto& e : eps) slots_[e.name].interval = e.min_interval;
    }
    void wait(const std::string& endpoint) {
        auto& slot = slots_.at(endpoint);
        if (slot.interval.count() == 0) return;
        Clock::time_point start;
        {
            std::lock_guard lock(slot.mutex);
            const auto now = Clock::now();
            start = std::max(now, slot.next);
            slot.next = start + slot.interval;
        }
        std::this_thread::sleep_until(start);
    }

private:
    struct Slot {
        std::chrono::milliseconds interval{0};
        Clock::time_point next{};
        std::mutex mutex;
    };
    std::map<std::string, Slot> slots_;
};

struct Task {
    const audit::AuditCase* c;
    const Endpoint* ep;
};

class CaseJudge {
public:
    CaseJudge(const JudgeConfig& cfg, const std::string& tmpl, const std::string& key, Transport& transport,
              RateLimiter& limiter, const std::atomic<bool>& abort)
        : cfg_(cfg), tmpl_(tmpl), key_(key), transport_(transport), limiter_(limiter), abort_(abort) {}

    audit::JudgeVerdict run(const Task& task, std::vector<TranscriptEntry>& log) {
        audit::JudgeVerdict v;
        v.case_id = task.c->case_id;
        v.judge_id = task.ep->name;
        std::string bodies;
        for (std::size_t i = 0; i < task.c->credited.size(); ++i) {
            auto label = judge_item(task, i, log, bodies);
            if (label && (!v.label || index_of(*label) < index_of(*v.label))) v.label = label;
        }
        v.raw_response_digest = fnv1a_hex(bodies);
        return v;
    }

private:
    std::optional<Label> judge_item(const Task& task, std::size_t item, std::vector<TranscriptEntry>& log,
                                    std::string& bodies) {
        json messages = json::array();
        messages.push_back({{"role", "system"}, {"content", "You are a careful evidence auditor."}});
        messages.push_back({{"role", "user"}, {"content", render_prompt(tmpl_, *task.c, task.c->credited[item])}});

        auto content = complete(task, item, messages, false, log, bodies);
        if (!content) return std::nullopt;
        if (auto l = parse_label(*content)) {
            log.back().label = l;
            return l;
        }
        messages.push_back({{"role", "assistant"}, {"content", *content}});
        messages.push_back({{"role", "user"}, {"content", kReprompt}});
        content = complete(task, item, messages, true, log, bodies);
        if (!content) return std::nullopt;
        auto l = parse_label(*content);
        log.back().label = l;
        return l;
    }

    std::optional<std::string> complete(const Task& task, std::size_t item, const json& messages, bool reprompt,
                                        std::vector<TranscriptEntry>& log, std::string& bodies) {
        json request = {{"model", task.ep->model},
                        {"temperature", 0},
                        {"max_tokens", cfg_.max_tokens},
                        {"messages", messages}};
        const auto body = request.dump();
        const std::vector<std::pair<std::string, std::string>> headers{
            {"Authorization", "Bearer " + key_},
            {"X-TIAP-Case-Id", task.c->case_id},
            {"X-TIAP-Item", std::to_string(item)},
        };
        for (std::size_t attempt = 0; attempt < cfg_.attempts; ++attempt) {
            if (abort_) throw AuthError("judging aborted");
            if (attempt > 0 && cfg_.backoff.count() > 0)
                std::this_thread::sleep_for(cfg_.backoff * (1LL << (attempt - 1)));
            limiter_.wait(task.ep->name);
            const auto resp = transport_.post(*task.ep, headers, body);
            TranscriptEntry& e = log.emplace_back();
            e.case_id = task.c->case_id;
            e.judge_id = task.ep->name;
            e.item = item;
            e.attempt = attempt;
            e.reprompt = reprompt;
            e.request = request;
            e.status = resp.status;
            e.response = resp.body;
            e.error = resp.error;
            bodies += resp.body;
            if (resp.status == 401 || resp.status == 403)
                throw AuthError("judge '" + task.ep->name + "' rejected credentials (HTTP " +
                                std::to_string(resp.status) + ")");
            if (resp.status != 200) continue;
            try {
                const auto parsed = json::parse(resp.body);
                const auto& msg = parsed.at("choices").at(0).at("message");
                if (!msg.contains("content") || !msg["content"].is_string()) continue;
                auto text = msg["content"].get<std::string>();
                if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
                return text;
            } catch (const json::exception& ex) {
                e.error = std::string("unreadable completion: ") + ex.what();
            }
        }
        return std::nullopt;
    }

    const JudgeConfig& cfg_;
    const std::string& tmpl_;
    const std::string& key_;
    Transport& transport_;
    RateLimiter& limiter_;
    const std::atomic<bool>& abort_;
};

}  // namespace

JudgeRun judge_cases(std::span<const audit::AuditCase> cases, const JudgeConfig& config, const std::string& api_key,
                     Transport& transport) {
    if (config.judges.empty()) throw ValidationError("no judges configured");
    if (api_key.empty()) throw AuthError(std::string("no judge API key (set ") + std::string(kApiKeyEnv) + ")");
    const std::string tmpl = config.prompt_template.empty() ? std::string(kDefaultTemplate) : config.prompt_template;
    validate_template(tmpl);

    std::vector<Task> tasks;
    for (const auto& c : cases)
        for (const auto& ep : config.judges) tasks.push_back({&c, &ep});

    RateLimiter limiter(config.judges);
    std::atomic<bool> abort{false};
    std::atomic<std::size_t> next{0};
    std::vector<audit::JudgeVerdict> verdicts(tasks.size());
    std::vector<std::vector<TranscriptEntry>> logs(tasks.size());
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        CaseJudge judge(config, tmpl, api_key, transport, limiter, abort);
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= tasks.size() || abort) return;
            try {
                verdicts[i] = judge.run(tasks[i], logs[i]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                abort = true;
                return;
            }
        }
    };
    const auto n_workers = std::min(config.concurrency, std::max<std::size_t>(1, tasks.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    JudgeRun run;
    run.verdicts = std::move(verdicts);
    for (auto& l : logs)
        for (auto& e : l) run.transcript.push_back(std::move(e));
    return run;
}

namespace {

std::string safe_filename(std::string_view name) {
    std::string out;
    for (char ch : name) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.' ? ch : '_';
    return out.empty() ? std::string("judge") : out;
}

}  // namespace

void write_transcripts(const std::filesystem::path& dir, const JudgeRun& run) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create transcript directory " + dir.string() + ": " + ec.message());
    std::map<std::string, std::ofstream> files;
    for (const auto& e : run.transcript) {
        auto it = files.find(e.judge_id);
        if (it == files.end()) {
            const auto path = dir / (safe_filename(e.judge_id) + ".jsonl");
            it = files.emplace(e.judge_id, std::ofstream(path)).first;
            if (!it->second) throw IoError("cannot write " + path.string());
        }
        json j = {{"case_id", e.case_id}, {"judge_id", e.judge_id}, {"item", e.item},
                  {"attempt", e.attempt}, {"reprompt", e.reprompt}, {"request", e.request},
                  {"status", e.status},   {"response", e.response}, {"error", e.error}};
        j["label"] = e.label ? json(std::string(to_string(*e.label))) : json(nullptr);
        it->second << j.dump() << '\n';
    }
}

}  // namespace tiap::judge
