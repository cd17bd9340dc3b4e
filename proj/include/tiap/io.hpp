#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiap/audit.hpp"
#include "tiap/error.hpp"
#include "tiap/rescore.hpp"
#include "tiap/store.hpp"

// Line-delimited JSON formats. Parse failures raise ValidationError with the
// source name and 1-based line number; unreadable or unwritable files raise
// IoError. Blank lines are skipped.
//
//   store     {memory_id, store_id, source_anchor, kind, text}
//   fixtures  {query_id, source_anchors, category, reference_answer, answer_score, query_text}
//   traces    {run_id, query_id, ranking: [{memory_id, score}], depth?}
//   manifest  one JSON object {run_id, dataset_id, system_label, store_id, depth, k?, notes}
//   rescore   header line {"type":"header", ...} followed by {"type":"row", ...} lines
//   cases     one AuditCase per line
//   verdicts  {case_id, judge_id, label|null, raw_response_digest}

namespace tiap::io {

using json = nlohmann::json;

json to_json(const MemoryRecord& r);
json to_json(const QueryFixture& f);
json to_json(const RankedTrace& t);
json to_json(const RunManifest& m);
json to_json(const MetricRow& r);
json to_json(const audit::AuditCase& c);
json to_json(const audit::JudgeVerdict& v);

MemoryRecord record_from_json(const json& j);
QueryFixture fixture_from_json(const json& j);
/// Without a "depth" field the trace depth is max(ranking length, default_depth).
RankedTrace trace_from_json(const json& j, std::size_t default_depth = kDefaultCutoff);
RunManifest manifest_from_json(const json& j);
MetricRow row_from_json(const json& j);
audit::AuditCase case_from_json(const json& j);
audit::JudgeVerdict verdict_from_json(const json& j);

/// Calls fn(json, line_number) for each non-blank line. Exceptions thrown by
/// fn are rethrown as ValidationError prefixed with "source:line: ".
template <class Fn>
void for_each_jsonl(std::istream& is, const std::string& source, Fn&& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(json::parse(line), lineno);
        } catch (const json::exception& e) {
            throw ValidationError(source + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::vector<MemoryRecord> read_store(std::istream& is, const std::string& source = "store");
std::vector<QueryFixture> read_fixtures(std::istream& is, const std::string& source = "fixtures");
std::vector<RankedTrace> read_traces(std::istream& is, const std::string& source = "traces",
                                     std::size_t default_depth = kDefaultCutoff);
std::vector<audit::AuditCase> read_cases(std::istream& is, const std::string& source = "cases");
std::vector<audit::JudgeVerdict> read_verdicts(std::istream& is, const std::string& source = "verdicts");
RescoreTable read_rescore(std::istream& is, const std::string& source = "rescore");

std::vector<MemoryRecord> read_store_file(const std::filesystem::path& p);
std::vector<QueryFixture> read_fixtures_file(const std::filesystem::path& p);
std::vector<RankedTrace> read_traces_file(const std::filesystem::path& p, std::size_t default_depth = kDefaultCutoff);
RunManifest read_manifest_file(const std::filesystem::path& p);
std::vector<audit::AuditCase> read_cases_file(const std::filesystem::path& p);
std::vector<audit::JudgeVerdict> read_verdicts_file(const std::filesystem::path& p);
RescoreTable read_rescore_file(const std::filesystem::path& p);
json read_json_file(const std::filesystem::path& p);

json rescore_header(const RescoreTable& t);
void write_rescore(std::ostream& os, const RescoreTable& t);

/// Writes one value per line.
template <class T>
void write_jsonl(std::ostream& os, const std::vector<T>& items) {
    for (const auto& x : items) os << to_json(x).dump() << '\n';
}

std::ofstream open_out(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);

}  // namespace tiap::io
