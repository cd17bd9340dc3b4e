#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiap/store.hpp"

// Synthetic datasets with planted effects.
//
// Every query owns one source anchor with one raw turn. In each store a
// `canonical_coverage_rate` fraction of queries also gets `facts_per_turn`
// transformed descendants of that turn. A run ranks `depth` memories per
// query: planted patterns place the raw turn and descendants at fixed ranks
// and the remaining slots hold noise memories anchored nowhere. Queries no
// pattern claims get nothing credited in their ranking.
//
// The expected report is computed with tiap::oracle while generating, so it
// is independent of the production scoring path.

namespace tiap::fixtures {

enum class Population { any, covered, uncovered };

struct Pattern {
    std::size_t count = 0;
    Population population = Population::any;
    std::optional<std::string> category;
    std::optional<std::size_t> raw_rank;
    /// Rank of descendant j; at most facts_per_turn entries.
    std::vector<std::size_t> desc_ranks;
    /// Emit no trace for these queries (tests "missing-trace" exclusions).
    bool omit_trace = false;
};

struct StoreSpec {
    std::string store_id;
    std::size_t facts_per_turn = 1;
    double canonical_coverage_rate = 1.0;
};

struct RunSpec {
    std::string run_id;
    std::string store_id;
    std::string system_label;
    std::vector<Pattern> patterns;
};

/// Planted judge labels for the contested cases the runs produce.
struct JudgePlan {
    std::vector<std::string> judges;
    std::size_t supports = 0;
    std::size_t partial = 0;
    std::size_t does_not_support = 0;
    /// Cases where every judge returns no label.
    std::size_t absent_cases = 0;
};

struct SynthConfig {
    std::string dataset_id = "synth";
    std::uint64_t seed = 1337;
    std::size_t n_queries = 0;
    std::size_t k = 60;
    std::size_t depth = 60;
    std::vector<std::string> categories;
    bool answer_scores = true;
    std::vector<StoreSpec> stores;
    std::vector<RunSpec> runs;
    std::optional<JudgePlan> judges;
};

SynthConfig parse_synth_config(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& c);

struct PlannedCase {
    std::string case_id;
    std::vector<std::optional<Label>> labels;  // one per judge
    std::optional<Label> expected_majority;
};

struct SynthDataset {
    SynthConfig config;
    std::vector<MemoryRecord> records;
    std::vector<QueryFixture> fixtures;
    std::vector<RankedTrace> traces;
    std::vector<RunManifest> manifests;
    std::vector<PlannedCase> judge_plan;
    nlohmann::json expected;
};

/// Throws ValidationError before producing anything when a planted effect
/// cannot be realized (pattern counts exceeding their population, ranks out
/// of range or colliding, descendants on uncovered queries, judge plan
/// counts that do not add up to the contested cases).
SynthDataset synth_dataset(const SynthConfig& config);

/// Writes store.jsonl, fixtures.jsonl, traces.jsonl, manifests/<run>.json,
/// expected_report.json, synth_config.json and, with a judge plan,
/// judge_plan.jsonl.
void write_dataset(const std::filesystem::path& dir, const SynthDataset& ds);

/// Brute-force expected report for arbitrary inputs (records may span several
/// stores; each run scores against the records of its manifest's store).
nlohmann::json oracle_report(const std::vector<MemoryRecord>& records, const std::vector<QueryFixture>& fixtures,
                             const std::vector<RankedTrace>& traces, const std::vector<RunManifest>& manifests,
                             std::size_t k);

}  // namespace tiap::fixtures
