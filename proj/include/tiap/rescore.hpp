#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tiap/stats.hpp"
#include "tiap/store.hpp"

namespace tiap {

inline constexpr std::size_t kDefaultCutoff = 60;

/// Machine-readable exclusion reasons.
inline constexpr std::string_view kReasonTargetless = "targetless";
inline constexpr std::string_view kReasonMissingTrace = "missing-trace";

struct MetricRow {
    std::string run_id;
    QueryId query_id;
    TargetKind target = TargetKind::raw;
    double ndcg = 0.0;
    double mrr = 0.0;
    double recall = 0.0;
    bool hit = false;
    std::optional<std::size_t> first_credited_rank;

    double value(MetricKind m) const;
    bool top1_credited() const { return first_credited_rank == std::size_t{1}; }
};

struct Exclusion {
    QueryId query_id;
    /// Absent when the query is excluded under every target (missing trace).
    std::optional<TargetKind> target;
    std::string reason;
};

/// Metric rows of one run under one or more targets. Rows are sorted by
/// (query_id, target); exclusions by (query_id, target).
class RescoreTable {
public:
    std::string run_id;
    std::size_t k = kDefaultCutoff;
    std::vector<TargetKind> targets;
    std::vector<MetricRow> rows;
    std::vector<Exclusion> excluded;
    std::vector<QueryId> evaluated;

    /// Sorts rows/exclusions and rebuilds the lookup index. Call after
    /// populating the public fields by hand. Throws on duplicate rows.
    void finalize();

    const MetricRow* find(std::string_view query_id, TargetKind t) const;
    const MetricRow& at(std::string_view query_id, TargetKind t) const;

    /// Queries that have a row under every listed target, ascending.
    std::vector<QueryId> shared_queries(std::span<const TargetKind> ts) const;
    std::size_t coverage(TargetKind t) const;
    /// Mean of a metric over the given queries under one target.
    double mean(MetricKind m, TargetKind t, std::span<const QueryId> queries) const;

private:
    std::map<QueryId, std::array<int, 3>, std::less<>> index_;
};

/// Rescores the fixed traces of a single run. Rankings are consumed as saved
/// and only the credited ids vary across targets. Every query of the map is
/// evaluated; queries without a trace and (query, target) pairs with an empty
/// target are recorded as exclusions. Throws ValidationError for a trace of an
/// unknown query, duplicate traces, mixed run ids or malformed rankings.
RescoreTable rescore_run(std::span<const RankedTrace> traces, const TargetMap& map,
                         std::span<const TargetKind> targets, std::size_t k = kDefaultCutoff);

/// Queries whose every compared target is non-empty, ascending.
std::vector<QueryId> shared_subset(const TargetMap& map, std::span<const TargetKind> targets);

struct QueryDelta {
    QueryId query_id;
    double delta = 0.0;
};

/// metric(t2) - metric(t1) for each query shared by both targets. When
/// `queries` is given, only those are reported and each must be shared.
std::vector<QueryDelta> per_query_deltas(const RescoreTable& table, TargetKind t1, TargetKind t2, MetricKind metric,
                                         std::optional<std::span<const QueryId>> queries = std::nullopt);

/// Counts of |delta| in bins [0, w), [w, 2w), ...; values >= 1 go to the last bin.
std::vector<std::size_t> delta_histogram(std::span<const QueryDelta> deltas, double bin_width = 0.1);

struct RunGap {
    std::string run_id;
    std::size_t covered_n = 0;
    std::size_t uncovered_n = 0;
    double covered_mean = 0.0;
    double uncovered_mean = 0.0;
    double gap = 0.0;
};

struct CoverageGapReport {
    MetricKind metric = MetricKind::ndcg;
    std::vector<RunGap> runs;
    std::vector<std::string> skipped;
    std::vector<std::string> warnings;
    /// Mean of the per-run gaps with a percentile CI. The CI resamples runs
    /// when at least two runs contribute and queries (per population) otherwise.
    stats::BootstrapResult aggregate;
    bool bootstrap_over_runs = false;
};

/// Per run: mean Raw metric on canonical-covered queries minus mean on
/// canonical-uncovered queries. Runs lacking either population are skipped
/// with a warning; throws if no run remains.
CoverageGapReport coverage_gap(std::span<const RescoreTable> tables, const TargetMap& map,
                               MetricKind metric = MetricKind::ndcg,
                               std::size_t resamples = stats::kDefaultResamples,
                               std::uint64_t seed = stats::kDefaultSeed, double level = stats::kDefaultLevel);

/// Same, with the target map of each run's store (`maps` parallel to `tables`,
/// or a single map shared by all runs).
CoverageGapReport coverage_gap(std::span<const RescoreTable> tables, std::span<const TargetMap* const> maps,
                               MetricKind metric = MetricKind::ndcg,
                               std::size_t resamples = stats::kDefaultResamples,
                               std::uint64_t seed = stats::kDefaultSeed, double level = stats::kDefaultLevel);

}  // namespace tiap
