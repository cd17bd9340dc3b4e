#include "tiap/io.hpp"

#include <sstream>

namespace tiap::io {

namespace {

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<std::string>();
}

std::string req_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string())
        throw ValidationError(std::string("missing or non-string field '") + key + "'");
    return j[key].get<std::string>();
}

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    return in;
}

}  // namespace

json to_json(const MemoryRecord& r) {
    return {{"memory_id", r.memory_id}, {"store_id", r.store_id}, {"source_anchor", opt(r.source_anchor)},
            {"kind", std::string(to_string(r.kind))}, {"text", opt(r.text)}};
}

MemoryRecord record_from_json(const json& j) {
    MemoryRecord r;
    r.memory_id = req_string(j, "memory_id");
    r.store_id = j.value("store_id", std::string());
    r.source_anchor = opt_string(j, "source_anchor");
    r.kind = parse_memory_kind(req_string(j, "kind"));
    r.text = opt_string(j, "text");
    return r;
}

json to_json(const QueryFixture& f) {
    json j = {{"query_id", f.query_id},
              {"source_anchors", f.source_anchors},
              {"category", opt(f.category)},
              {"reference_answer", opt(f.reference_answer)},
              {"answer_score", f.answer_score ? json(*f.answer_score) : json(nullptr)}};
    if (f.query_text) j["query_text"] = *f.query_text;
    return j;
}

QueryFixture fixture_from_json(const json& j) {
    QueryFixture f;
    f.query_id = req_string(j, "query_id");
    if (!j.contains("source_anchors")) throw ValidationError("missing field 'source_anchors'");
    const auto& a = j["source_anchors"];
    if (a.is_string())
        f.source_anchors.push_back(a.get<std::string>());
    else
        f.source_anchors = a.get<std::vector<std::string>>();
    std::sort(f.source_anchors.begin(), f.source_anchors.end());
    f.source_anchors.erase(std::unique(f.source_anchors.begin(), f.source_anchors.end()), f.source_anchors.end());
    f.category = opt_string(j, "category");
    f.reference_answer = opt_string(j, "reference_answer");
    if (j.contains("answer_score") && !j["answer_score"].is_null()) f.answer_score = j["answer_score"].get<double>();
    f.query_text = opt_string(j, "query_text");
    return f;
}

json to_json(const RankedTrace& t) {
    json ranking = json::array();
    for (const auto& e : t.ranking)
        ranking.push_back({{"memory_id", e.memory_id}, {"score", e.score ? json(*e.score) : json(nullptr)}});
    return {{"run_id", t.run_id}, {"query_id", t.query_id}, {"ranking", ranking}, {"depth", t.depth}};
}

RankedTrace trace_from_json(const json& j, std::size_t default_depth) {
    RankedTrace t;
    t.run_id = req_string(j, "run_id");
    t.query_id = req_string(j, "query_id");
    if (!j.contains("ranking") || !j["ranking"].is_array()) throw ValidationError("missing array field 'ranking'");
    for (const auto& e : j["ranking"]) {
        RankedEntry re;
        if (e.is_string()) {
            re.memory_id = e.get<std::string>();
        } else {
            re.memory_id = req_string(e, "memory_id");
            if (e.contains("score") && !e["score"].is_null()) re.score = e["score"].get<double>();
        }
        t.ranking.push_back(std::move(re));
    }
    t.depth = j.contains("depth") ? j["depth"].get<std::size_t>() : std::max(default_depth, t.ranking.size());
    validate_trace(t);
    return t;
}

json to_json(const RunManifest& m) {
    json j = {{"run_id", m.run_id},       {"dataset_id", m.dataset_id}, {"system_label", m.system_label},
              {"store_id", m.store_id},   {"depth", m.depth},           {"notes", m.notes}};
    if (m.k) j["k"] = *m.k;
    return j;
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.run_id = req_string(j, "run_id");
    m.dataset_id = j.value("dataset_id", std::string());
    m.system_label = j.value("system_label", m.run_id);
    m.store_id = j.value("store_id", std::string());
    m.depth = j.value("depth", kDefaultCutoff);
    if (j.contains("k") && !j["k"].is_null()) m.k = j["k"].get<std::size_t>();
    m.notes = j.value("notes", std::string());
    if (m.depth == 0) throw ValidationError("manifest '" + m.run_id + "' has zero depth");
    if (m.k && *m.k == 0) throw ValidationError("manifest '" + m.run_id + "' has k = 0");
    return m;
}

json to_json(const MetricRow& r) {
    return {{"type", "row"},
            {"run_id", r.run_id},
            {"query_id", r.query_id},
            {"target", std::string(to_string(r.target))},
            {"ndcg", r.ndcg},
            {"mrr", r.mrr},
            {"recall", r.recall},
            {"hit", r.hit},
            {"first_credited_rank", r.first_credited_rank ? json(*r.first_credited_rank) : json(nullptr)}};
}

MetricRow row_from_json(const json& j) {
    MetricRow r;
    r.run_id = req_string(j, "run_id");
    r.query_id = req_string(j, "query_id");
    r.target = parse_target(req_string(j, "target"));
    r.ndcg = j.at("ndcg").get<double>();
    r.mrr = j.at("mrr").get<double>();
    r.recall = j.at("recall").get<double>();
    r.hit = j.at("hit").get<bool>();
    if (j.contains("first_credited_rank") && !j["first_credited_rank"].is_null())
        r.first_credited_rank = j["first_credited_rank"].get<std::size_t>();
    return r;
}

json rescore_header(const RescoreTable& t) {
    json targets = json::array();
    json coverage = json::object();
    for (auto k : t.targets) {
        targets.push_back(std::string(to_string(k)));
        coverage[std::string(to_string(k))] = t.coverage(k);
    }
    json excluded = json::array();
    for (const auto& e : t.excluded)
        excluded.push_back({{"query_id", e.query_id},
                            {"target", e.target ? json(std::string(to_string(*e.target))) : json(nullptr)},
                            {"reason", e.reason}});
    return {{"type", "header"}, {"run_id", t.run_id},         {"k", t.k},
            {"targets", targets}, {"evaluated", t.evaluated.size()}, {"coverage", coverage},
            {"rows", t.rows.size()}, {"excluded", excluded}};
}

void write_rescore(std::ostream& os, const RescoreTable& t) {
    os << rescore_header(t).dump() << '\n';
    for (const auto& r : t.rows) os << to_json(r).dump() << '\n';
}

RescoreTable read_rescore(std::istream& is, const std::string& source) {
    RescoreTable t;
    bool have_header = false;
    std::size_t expected_rows = 0;
    for_each_jsonl(is, source, [&](const json& j, std::size_t) {
        const auto type = j.value("type", std::string("row"));
        if (type == "header") {
            if (have_header) throw ValidationError("second header line");
            have_header = true;
            t.run_id = req_string(j, "run_id");
            t.k = j.at("k").get<std::size_t>();
            for (const auto& s : j.at("targets")) t.targets.push_back(parse_target(s.get<std::string>()));
            expected_rows = j.value("rows", std::size_t{0});
            for (const auto& e : j.at("excluded")) {
                Exclusion ex;
                ex.query_id = req_string(e, "query_id");
                if (!e["target"].is_null()) ex.target = parse_target(e["target"].get<std::string>());
                ex.reason = req_string(e, "reason");
                t.excluded.push_back(std::move(ex));
                t.evaluated.push_back(t.excluded.back().query_id);
            }
            return;
        }
        if (!have_header) throw ValidationError("rescore table must start with a header line");
        auto row = row_from_json(j);
        if (row.run_id != t.run_id) throw ValidationError("row run_id '" + row.run_id + "' differs from header");
        t.evaluated.push_back(row.query_id);
        t.rows.push_back(std::move(row));
    });
    if (!have_header) throw ValidationError(source + ": empty rescore table");
    if (t.rows.size() != expected_rows)
        throw ValidationError(source + ": header announces " + std::to_string(expected_rows) + " rows, found " +
                              std::to_string(t.rows.size()));
    t.finalize();
    return t;
}

json to_json(const audit::AuditCase& c) {
    json items = json::array();
    for (const auto& i : c.credited) items.push_back({{"memory_id", i.memory_id}, {"rank", i.rank}, {"text", i.text}});
    return {{"case_id", c.case_id},         {"run_id", c.run_id},         {"query_id", c.query_id},
            {"query_index", c.query_index}, {"credited", items},          {"source_text", c.source_text},
            {"query_text", c.query_text},   {"reference_answer", opt(c.reference_answer)}};
}

audit::AuditCase case_from_json(const json& j) {
    audit::AuditCase c;
    c.case_id = req_string(j, "case_id");
    c.run_id = req_string(j, "run_id");
    c.query_id = req_string(j, "query_id");
    c.query_index = j.value("query_index", std::size_t{0});
    for (const auto& i : j.at("credited"))
        c.credited.push_back({req_string(i, "memory_id"), i.at("rank").get<std::size_t>(), i.value("text", "")});
    if (c.credited.empty()) throw ValidationError("case '" + c.case_id + "' has no credited items");
    c.source_text = j.value("source_text", std::string());
    c.query_text = j.value("query_text", c.query_id);
    c.reference_answer = opt_string(j, "reference_answer");
    return c;
}

json to_json(const audit::JudgeVerdict& v) {
    return {{"case_id", v.case_id},
            {"judge_id", v.judge_id},
            {"label", v.label ? json(std::string(to_string(*v.label))) : json(nullptr)},
            {"raw_response_digest", v.raw_response_digest}};
}

audit::JudgeVerdict verdict_from_json(const json& j) {
    audit::JudgeVerdict v;
    v.case_id = req_string(j, "case_id");
    v.judge_id = req_string(j, "judge_id");
    if (j.contains("label") && !j["label"].is_null()) v.label = parse_label(j["label"].get<std::string>());
    v.raw_response_digest = j.value("raw_response_digest", std::string());
    return v;
}

std::vector<MemoryRecord> read_store(std::istream& is, const std::string& source) {
    std::vector<MemoryRecord> out;
    for_each_jsonl(is, source, [&](const json& j, std::size_t) { out.push_back(record_from_json(j)); });
    return out;
}

std::vector<QueryFixture> read_fixtures(std::istream& is, const std::string& source) {
    std::vector<QueryFixture> out;
    for_each_jsonl(is, source, [&](const json& j, std::size_t) { out.push_back(fixture_from_json(j)); });
    return out;
}

std::vector<RankedTrace> read_traces(std::istream& is, const std::string& source, std::size_t default_depth) {
    std::vector<RankedTrace> out;
    for_each_jsonl(is, source, [&](const json& j, std::size_t) { out.push_back(trace_from_json(j, default_depth)); });
    return out;
}

std::vector<audit::AuditCase> read_cases(std::istream& is, const std::string& source) {
    std::vector<audit::AuditCase> out;
    for_each_jsonl(is, source, [&](const json& j, std::size_t) { out.push_back(case_from_json(j)); });
    return out;
}

std::vector<audit::JudgeVerdict> read_verdicts(std::istream& is, const std::string& source) {
    std::vector<audit::JudgeVerdict> out;
    for_each_jsonl(is, source, [&](const json& j, std::size_t) { out.push_back(verdict_from_json(j)); });
    return out;
}

std::vector<MemoryRecord> read_store_file(const std::filesystem::path& p) {
    auto in = open_in(p);
    return read_store(in, p.string());
}

std::vector<QueryFixture> read_fixtures_file(const std::filesystem::path& p) {
    auto in = open_in(p);
    return read_fixtures(in, p.string());
}

std::vector<RankedTrace> read_traces_file(const std::filesystem::path& p, std::size_t default_depth) {
    auto in = open_in(p);
    return read_traces(in, p.string(), default_depth);
}

json read_json_file(const std::filesystem::path& p) {
    auto in = open_in(p);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
}

RunManifest read_manifest_file(const std::filesystem::path& p) {
    try {
        return manifest_from_json(read_json_file(p));
    } catch (const json::exception& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
}

std::vector<audit::AuditCase> read_cases_file(const std::filesystem::path& p) {
    auto in = open_in(p);
    return read_cases(in, p.string());
}

std::vector<audit::JudgeVerdict> read_verdicts_file(const std::filesystem::path& p) {
    auto in = open_in(p);
    return read_verdicts(in, p.string());
}

RescoreTable read_rescore_file(const std::filesystem::path& p) {
    auto in = open_in(p);
    return read_rescore(in, p.string());
}

std::ofstream open_out(const std::filesystem::path& p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    auto out = open_out(p);
    out << text;
    if (!out) throw IoError("write failed for " + p.string());
}

std::string read_text(const std::filesystem::path& p) {
    auto in = open_in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace tiap::io
