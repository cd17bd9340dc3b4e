#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tiap/types.hpp"

namespace tiap {

/// One stored memory and the lineage facts the store exports for it.
struct MemoryRecord {
    MemoryId memory_id;
    std::string store_id;
    std::optional<std::string> source_anchor;
    MemoryKind kind = MemoryKind::raw;
    std::optional<std::string> text;
};

/// An ingested memory store, indexed by memory id and by source anchor.
/// Immutable after ingestion.
class MemoryStore {
public:
    MemoryStore() = default;

    /// Throws ValidationError on a duplicate memory_id (the message names it)
    /// or on a raw record without a source anchor.
    static MemoryStore ingest(std::vector<MemoryRecord> records);

    const MemoryRecord* find(std::string_view memory_id) const;
    bool contains(std::string_view memory_id) const { return find(memory_id) != nullptr; }

    /// Indices into records() of every memory anchored at `anchor`, in ingestion order.
    std::span<const std::size_t> anchored_at(std::string_view anchor) const;

    const std::vector<MemoryRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    std::size_t count(MemoryKind kind) const { return kind == MemoryKind::raw ? n_raw_ : n_transformed_; }
    std::size_t anchor_count() const { return by_anchor_.size(); }
    bool has_store_id(std::string_view store_id) const;
    const std::vector<std::string>& store_ids() const { return store_ids_; }

private:
    std::vector<MemoryRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> by_anchor_;
    std::vector<std::string> store_ids_;
    std::size_t n_raw_ = 0;
    std::size_t n_transformed_ = 0;
};

/// A benchmark query and the evidence anchors that ground its gold answer.
struct QueryFixture {
    QueryId query_id;
    std::vector<std::string> source_anchors;
    std::optional<std::string> category;
    std::optional<std::string> reference_answer;
    std::optional<double> answer_score;
    std::optional<std::string> query_text;
};

/// Throws ValidationError on duplicate query ids, empty anchor sets or an
/// answer_score outside [0, 1].
void validate_fixtures(std::span<const QueryFixture> fixtures);

struct RankedEntry {
    MemoryId memory_id;
    std::optional<double> score;
};

/// A saved, fixed ranked output for one query of one run.
struct RankedTrace {
    std::string run_id;
    QueryId query_id;
    std::vector<RankedEntry> ranking;
    std::size_t depth = 0;

    std::vector<MemoryId> ids() const;
};

/// Throws ValidationError on duplicate ids in the ranking, ranking longer than
/// depth, or a zero depth.
void validate_trace(const RankedTrace& trace);

struct RunManifest {
    std::string run_id;
    std::string dataset_id;
    std::string system_label;
    std::string store_id;
    std::size_t depth = 60;
    std::optional<std::size_t> k;
    std::string notes;
};

/// Per-query credited id sets. raw and canonical are disjoint subsets of source.
struct QueryTargets {
    IdSet raw;
    IdSet source;
    IdSet canonical;

    const IdSet& get(TargetKind t) const;
    bool has(TargetKind t) const { return !get(t).empty(); }
};

struct TargetMap {
    std::map<QueryId, QueryTargets, std::less<>> queries;

    const QueryTargets* find(std::string_view query_id) const;
    std::size_t size() const { return queries.size(); }
};

/// Target sets are unions over every anchor of the query. A query whose
/// anchors match nothing stays in the map with three empty sets.
TargetMap build_target_map(const MemoryStore& store, std::span<const QueryFixture> fixtures);

struct CoverageReport {
    std::size_t queries = 0;
    std::array<std::size_t, 3> covered{};
    /// shared[i][j]: queries where both targets i and j are non-empty.
    std::array<std::array<std::size_t, 3>, 3> shared{};
    std::size_t all_three = 0;
    std::size_t targetless = 0;

    std::size_t coverage(TargetKind t) const { return covered[index_of(t)]; }
    std::size_t shared_count(TargetKind a, TargetKind b) const { return shared[index_of(a)][index_of(b)]; }
};

CoverageReport coverage_stats(const TargetMap& map);

}  // namespace tiap
