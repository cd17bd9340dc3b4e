#include "tiap/store.hpp"

#include <algorithm>
#include <unordered_set>

#include "tiap/error.hpp"

namespace tiap {

MemoryStore MemoryStore::ingest(std::vector<MemoryRecord> records) {
    MemoryStore store;
    store.records_ = std::move(records);
    store.by_id_.reserve(store.records_.size());
    for (std::size_t i = 0; i < store.records_.size(); ++i) {
        const auto& rec = store.records_[i];
        if (rec.memory_id.empty()) throw ValidationError("memory record with empty memory_id");
        if (!store.by_id_.emplace(rec.memory_id, i).second)
            throw ValidationError("duplicate memory_id '" + rec.memory_id + "'");
        if (rec.kind == MemoryKind::raw) {
            if (!rec.source_anchor)
                throw ValidationError("raw memory '" + rec.memory_id + "' has no source_anchor");
            ++store.n_raw_;
        } else {
            ++store.n_transformed_;
        }
        if (rec.source_anchor) {
            auto it = store.by_anchor_.find(*rec.source_anchor);
            if (it == store.by_anchor_.end())
                it = store.by_anchor_.emplace(*rec.source_anchor, std::vector<std::size_t>{}).first;
            it->second.push_back(i);
        }
        if (std::find(store.store_ids_.begin(), store.store_ids_.end(), rec.store_id) == store.store_ids_.end())
            store.store_ids_.push_back(rec.store_id);
    }
    std::sort(store.store_ids_.begin(), store.store_ids_.end());
    return store;
}

const MemoryRecord* MemoryStore::find(std::string_view memory_id) const {
    auto it = by_id_.find(std::string(memory_id));
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::span<const std::size_t> MemoryStore::anchored_at(std::string_view anchor) const {
    auto it = by_anchor_.find(anchor);
    if (it == by_anchor_.end()) return {};
    return it->second;
}

bool MemoryStore::has_store_id(std::string_view store_id) const {
    return std::binary_search(store_ids_.begin(), store_ids_.end(), store_id);
}

void validate_fixtures(std::span<const QueryFixture> fixtures) {
    std::unordered_set<std::string> seen;
    for (const auto& f : fixtures) {
        if (f.query_id.empty()) throw ValidationError("fixture with empty query_id");
        if (!seen.insert(f.query_id).second)
            throw ValidationError("duplicate query_id '" + f.query_id + "'");
        if (f.source_anchors.empty())
            throw ValidationError("query '" + f.query_id + "' has no source_anchors");
        if (f.answer_score && !(*f.answer_score >= 0.0 && *f.answer_score <= 1.0))
            throw ValidationError("query '" + f.query_id + "' has answer_score outside [0,1]");
    }
}

std::vector<MemoryId> RankedTrace::ids() const {
    std::vector<MemoryId> out;
    out.reserve(ranking.size());
    for (const auto& e : ranking) out.push_back(e.memory_id);
    return out;
}

void validate_trace(const RankedTrace& trace) {
    const auto where = "trace (" + trace.run_id + ", " + trace.query_id + ")";
    if (trace.depth == 0) throw ValidationError(where + " has zero depth");
    if (trace.ranking.size() > trace.depth)
        throw ValidationError(where + " ranking longer than its depth");
    std::unordered_set<std::string_view> seen;
    for (const auto& e : trace.ranking) {
        if (!seen.insert(e.memory_id).second)
            throw ValidationError(where + " ranks memory '" + e.memory_id + "' twice");
    }
}

const IdSet& QueryTargets::get(TargetKind t) const {
    switch (t) {
        case TargetKind::raw: return raw;
        case TargetKind::source: return source;
        case TargetKind::canonical: return canonical;
    }
    return source;
}

const QueryTargets* TargetMap::find(std::string_view query_id) const {
    auto it = queries.find(query_id);
    return it == queries.end() ? nullptr : &it->second;
}

TargetMap build_target_map(const MemoryStore& store, std::span<const QueryFixture> fixtures) {
    if (fixtures.empty()) throw ValidationError("no query fixtures supplied");
    validate_fixtures(fixtures);
    TargetMap map;
    for (const auto& f : fixtures) {
        QueryTargets t;
        for (const auto& anchor : f.source_anchors) {
            for (auto idx : store.anchored_at(anchor)) {
                const auto& rec = store.records()[idx];
                t.source.insert(rec.memory_id);
                if (rec.kind == MemoryKind::raw)
                    t.raw.insert(rec.memory_id);
                else
                    t.canonical.insert(rec.memory_id);
            }
        }
        map.queries.emplace(f.query_id, std::move(t));
    }
    return map;
}

CoverageReport coverage_stats(const TargetMap& map) {
    CoverageReport r;
    r.queries = map.size();
    for (const auto& [qid, t] : map.queries) {
        bool all = true;
        bool any = false;
        for (auto a : kAllTargets) {
            if (!t.has(a)) {
                all = false;
                continue;
            }
            any = true;
            ++r.covered[index_of(a)];
            for (auto b : kAllTargets)
                if (t.has(b)) ++r.shared[index_of(a)][index_of(b)];
        }
        if (all) ++r.all_three;
        if (!any) ++r.targetless;
    }
    return r;
}

}  // namespace tiap
