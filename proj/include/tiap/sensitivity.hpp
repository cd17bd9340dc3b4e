#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiap/rescore.hpp"
#include "tiap/stats.hpp"
#include "tiap/store.hpp"

namespace tiap {

/// Query-level instability between two targets on their shared subset.
struct ComparisonCell {
    TargetKind t1 = TargetKind::raw;
    TargetKind t2 = TargetKind::canonical;
    std::size_t shared_n = 0;
    std::size_t hit_flips = 0;
    /// Rank-1 item credited under exactly one of the two targets.
    std::size_t top1_flips = 0;
    /// Queries with nDCG(t1) != nDCG(t2), compared exactly.
    std::size_t ndcg_changed = 0;
    double change_rate = 0.0;
};

/// Throws ValidationError when the shared subset (optionally intersected with
/// `restrict_to`) is empty.
ComparisonCell instability_matrix(const RescoreTable& table, TargetKind t1, TargetKind t2,
                                  std::optional<std::span<const QueryId>> restrict_to = std::nullopt);

/// A rescored run with the label it is reported under.
struct LabeledTable {
    std::string label;
    const RescoreTable* table = nullptr;
};

/// Queries scored under every target in every table, ascending.
std::vector<QueryId> common_subset(std::span<const LabeledTable> tables, std::span<const TargetKind> targets);

/// Delta_t(A, B) = mean metric of A minus mean metric of B under target t on
/// `subset`, or on the common subset of both runs for t when omitted.
double system_gap(const RescoreTable& a, const RescoreTable& b, MetricKind metric, TargetKind target,
                  std::optional<std::span<const QueryId>> subset = std::nullopt);

inline constexpr std::string_view kTie = "tie";

struct BootstrapOptions {
    std::size_t resamples = stats::kDefaultResamples;
    std::uint64_t seed = stats::kDefaultSeed;
    double level = stats::kDefaultLevel;
};

struct TargetGap {
    TargetKind target = TargetKind::raw;
    double gap = 0.0;
    stats::BootstrapResult ci;
    std::string winner;
};

struct WinnerReport {
    MetricKind metric = MetricKind::ndcg;
    std::string label_a;
    std::string label_b;
    std::size_t shared_n = 0;
    std::vector<TargetGap> per_target;
    /// True iff two targets give nonzero gaps of opposite sign.
    bool flip = false;
};

/// Gaps of A over B under each target, all on one subset common to both runs
/// and every requested target. Throws when that subset is empty.
WinnerReport winner_flip(const LabeledTable& a, const LabeledTable& b, MetricKind metric,
                         std::span<const TargetKind> targets, const BootstrapOptions& boot = {});

struct SweepCell {
    std::string config_a;
    std::string config_b;
    std::vector<double> gaps;          // per target, a minus b
    std::vector<std::string> winners;  // per target: a label, b label or "tie"
};

struct SweepTable {
    MetricKind metric = MetricKind::ndcg;
    std::vector<TargetKind> targets;
    std::vector<std::string> configs;
    std::size_t matched_n = 0;
    std::vector<SweepCell> cells;  // every config pair (i < j) in input order
};

/// Pairwise winners across configurations on one matched subset. Without
/// `matched`, every config must have the same shared subset for the targets.
SweepTable sweep_winner_table(std::span<const LabeledTable> configs, MetricKind metric,
                              std::span<const TargetKind> targets,
                              std::optional<std::span<const QueryId>> matched = std::nullopt);

enum class Aggregation { arith_mean, geom_mean, min };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view s);
double aggregate_triplet(Aggregation a, double raw, double source, double canonical);

struct ProviderScore {
    std::string label;
    double score = 0.0;
    std::size_t n = 0;
};

struct ProviderRanking {
    std::string method;  // aggregation or target name
    std::vector<ProviderScore> scores;  // input order
    std::vector<std::string> ordering;  // best first; ties by label
};

/// Per provider, the mean over its all-three-target subset of the aggregated
/// per-query nDCG triplet, and the induced ordering.
ProviderRanking aggregate_rankings(std::span<const LabeledTable> providers, Aggregation aggregation);

/// Provider ordering by mean nDCG under one target, on the same subsets that
/// aggregate_rankings uses.
ProviderRanking target_ranking(std::span<const LabeledTable> providers, TargetKind target);

/// Number of discordant pairs between two total orders of the same labels.
std::size_t kendall_tau_distance(std::span<const std::string> order_a, std::span<const std::string> order_b);

struct AgreementFilterReport {
    std::size_t considered = 0;
    std::vector<QueryId> retained;
    double retained_fraction = 0.0;
    /// Mean over retained queries of max - min nDCG across the three targets.
    double mean_spread = 0.0;
};

/// Keeps queries whose hit@k agrees across raw, source and canonical.
AgreementFilterReport agreement_filter(const RescoreTable& table);

struct CategoryCell {
    std::string category;
    ComparisonCell cell;
};

inline constexpr std::string_view kUncategorized = "uncategorized";

/// instability_matrix within each fixture category, on the shared subset.
/// Categories with no shared query are omitted.
std::vector<CategoryCell> category_breakdown(const RescoreTable& table, std::span<const QueryFixture> fixtures,
                                             TargetKind t1, TargetKind t2);

struct AlignmentCell {
    std::size_t n = 0;
    double mean_score = 0.0;
    double strong_fraction = 0.0;
};

struct AlignmentReport {
    std::string run_id;
    TargetKind t1 = TargetKind::raw;
    TargetKind t2 = TargetKind::canonical;
    double strong_threshold = 0.5;
    AlignmentCell only_t1;  // hit under t1, miss under t2
    AlignmentCell only_t2;
    std::size_t skipped_no_score = 0;
};

inline constexpr double kDefaultStrongThreshold = 0.5;

/// Joins disagreeing hit labels on the shared subset to precomputed answer scores.
AlignmentReport answer_alignment(const RescoreTable& table, std::span<const QueryFixture> fixtures, TargetKind t1,
                                 TargetKind t2, double strong_threshold = kDefaultStrongThreshold);

/// Counts summed across runs; means and strong fractions averaged over the
/// runs whose cell is non-empty.
AlignmentReport combine_alignment(std::span<const AlignmentReport> reports, const std::string& label);

}  // namespace tiap
