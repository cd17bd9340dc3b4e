#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tiap/audit.hpp"
#include "tiap/rescore.hpp"
#include "tiap/sensitivity.hpp"
#include "tiap/stats.hpp"
#include "tiap/store.hpp"

// Report emission. Every Markdown/CSV table is built from values that are
// also written, unrounded, to the JSON summary next to it.

namespace tiap::report {

using json = nlohmann::json;

struct Table {
    std::string title;
    std::vector<std::string> headers;
    std::vector<std::vector<std::string>> rows;

    std::string markdown() const;
    std::string csv() const;
};

std::string num(double x, int precision = 3);
/// Fraction rendered as a percentage, "84.3%".
std::string pct(double fraction, int precision = 1);
std::string signed_num(double x, int precision = 3);
std::string ci(const stats::BootstrapResult& r, int precision = 3);

struct TargetMeans {
    TargetKind target = TargetKind::raw;
    std::size_t n = 0;
    double ndcg = 0.0;
    double mrr = 0.0;
    double recall = 0.0;
    double hit = 0.0;

    double value(MetricKind m) const;
};

/// Everything `compare` reports for one run.
struct RunSummary {
    std::string run_id;
    std::string label;
    std::vector<TargetKind> targets;
    std::size_t evaluated = 0;
    std::size_t missing_trace = 0;
    std::vector<std::size_t> targetless;  // parallel to targets
    std::vector<TargetMeans> full;        // each target over all its scored queries
    std::size_t shared_n = 0;
    std::vector<TargetMeans> shared;      // on the shared subset of all targets
    /// Last target minus first target on the shared subset, per query, bootstrapped.
    std::optional<stats::BootstrapResult> delta;
    std::vector<ComparisonCell> pairs;
    /// Raw miss, Source hit, Canonical hit; only when all three targets are scored.
    std::optional<std::size_t> contested;
};

RunSummary summarize_run(const RescoreTable& table, const std::string& label, MetricKind metric,
                         const BootstrapOptions& boot);

std::string pair_key(TargetKind a, TargetKind b);

json to_json(const stats::BootstrapResult& r);
json to_json(const TargetMeans& m);
json to_json(const RunSummary& s);
json to_json(const ComparisonCell& c);
json to_json(const WinnerReport& w);
json to_json(const SweepTable& s);
json to_json(const ProviderRanking& r);
json to_json(const AgreementFilterReport& r, bool with_ids = false);
json to_json(const CategoryCell& c);
json to_json(const AlignmentReport& r);
json to_json(const CoverageReport& r);
json to_json(const CoverageGapReport& r);
json to_json(const audit::VerdictSummary& s);
json to_json(const stats::AgreementReport& r);
json to_json(const audit::SampleResult& r);

/// Coverage per store ("Dataset coverage" layout).
Table coverage_table(std::span<const std::pair<std::string, CoverageReport>> stores);
/// Run | n | one column per target | last–first with CI.
Table summary_table(std::span<const RunSummary> runs, MetricKind metric);
/// Per-target Recall / MRR / nDCG on each run's shared subset.
Table multi_metric_table(std::span<const RunSummary> runs);
Table instability_table(std::span<const std::pair<std::string, ComparisonCell>> cells);
Table winner_table(std::span<const WinnerReport> reports);
Table sweep_table(const SweepTable& s);
Table mitigation_table(std::span<const ProviderRanking> rankings, const ProviderRanking& reference,
                       std::span<const std::size_t> distances);
Table agreement_filter_table(std::span<const std::pair<std::string, AgreementFilterReport>> reports);
Table category_table(std::span<const std::pair<std::string, std::vector<CategoryCell>>> runs);
Table alignment_table(std::span<const AlignmentReport> reports);
Table coverage_gap_table(const CoverageGapReport& r);
Table distribution_table(const audit::VerdictSummary& s);
Table agreement_table(const stats::AgreementReport& r, std::optional<double> fleiss_three,
                      std::optional<double> fleiss_binary);

/// Writes <name>.json (the summary), <name>.md (all tables) and one
/// <name>-<i>.csv per table.
void write_bundle(const std::filesystem::path& dir, const std::string& name, const json& summary,
                  std::span<const Table> tables);

}  // namespace tiap::report
