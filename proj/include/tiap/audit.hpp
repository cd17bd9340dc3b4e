#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tiap/rescore.hpp"
#include "tiap/stats.hpp"
#include "tiap/store.hpp"

namespace tiap::audit {

struct CreditedItem {
    MemoryId memory_id;
    std::size_t rank = 0;
    std::string text;
};

/// One contested credit: Raw misses at k while Source and Canonical both hit.
struct AuditCase {
    std::string case_id;
    std::string run_id;
    QueryId query_id;
    /// Position of the query in the fixture file; orders cases inside a sampling bucket.
    std::size_t query_index = 0;
    /// Canonical-target items found in the top k, lowest rank first.
    std::vector<CreditedItem> credited;
    std::string source_text;
    std::string query_text;
    std::optional<std::string> reference_answer;

    std::size_t first_rank() const { return credited.empty() ? 0 : credited.front().rank; }
};

std::string make_case_id(std::string_view run_id, std::string_view query_id);

/// Cases over every table, ordered by (run_id, query_id). Only queries scored
/// under all three targets are considered. `traces` must contain the traces
/// the tables were scored from.
std::vector<AuditCase> extract_contested(std::span<const RescoreTable> tables, const TargetMap& map,
                                         std::span<const RankedTrace> traces, const MemoryStore& store,
                                         std::span<const QueryFixture> fixtures);

/// Inclusive credited-rank ranges.
using RankBucket = std::pair<std::size_t, std::size_t>;
inline const std::vector<RankBucket> kDefaultBuckets{{1, 5}, {6, 20}, {21, 60}};

struct SampleResult {
    std::vector<AuditCase> sample;  // extraction order
    std::vector<std::size_t> bucket_sizes;
    std::vector<std::size_t> quotas;
    std::vector<std::string> warnings;
};

/// Rank-stratified validation sample. Each bucket gets size / |buckets|
/// cases, the remainder going to the earliest buckets; quota a bucket cannot
/// fill moves to the remaining buckets. Inside a bucket, cases sorted by
/// (query_index, run_id) are taken at evenly spaced positions
/// round(i * (n - 1) / (q - 1)).
SampleResult stratified_sample(std::span<const AuditCase> cases, std::size_t size,
                               std::span<const RankBucket> buckets = kDefaultBuckets);

struct JudgeVerdict {
    std::string case_id;
    std::string judge_id;
    std::optional<Label> label;
    std::string raw_response_digest;
};

struct CaseMajority {
    std::string case_id;
    std::string dataset;
    std::optional<Label> label;
    std::size_t valid_votes = 0;
};

inline constexpr std::string_view kMajorityRow = "Majority";

struct DistributionRow {
    std::string dataset;
    std::string rater;  // judge id, or "Majority"
    std::size_t n = 0;
    std::array<std::size_t, 3> counts{};

    double percent(Label l) const;
};

struct VerdictSummary {
    std::vector<std::string> judges;  // first-appearance order
    std::vector<CaseMajority> cases;  // sorted by case_id
    std::vector<DistributionRow> rows;  // per dataset: judges in order, then Majority
    std::map<std::string, std::size_t> excluded;  // per dataset: cases with no valid label
};

/// Majority label per case and the label distribution per dataset and judge.
/// `dataset_of` maps case ids to datasets; unmapped cases fall under "all".
VerdictSummary aggregate_verdicts(std::span<const JudgeVerdict> verdicts,
                                  const std::map<std::string, std::string>& dataset_of = {});

/// Cases x judges label grid, cases sorted by id.
stats::LabelMatrix label_matrix(std::span<const JudgeVerdict> verdicts);

}  // namespace tiap::audit
