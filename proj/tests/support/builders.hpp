#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tiap/rescore.hpp"
#include "tiap/store.hpp"

namespace tiap::testing {

/// Small hand-built stores, fixtures and rankings.
struct Builder {
    std::string store_id = "s";
    std::vector<MemoryRecord> records;
    std::vector<QueryFixture> fixtures;
    std::map<std::string, std::vector<std::string>> rankings;  // query -> ranked ids

    Builder& raw(const std::string& id, const std::string& anchor, const std::string& text = "") {
        records.push_back({id, store_id, anchor, MemoryKind::raw, text.empty() ? std::optional<std::string>() : text});
        return *this;
    }
    Builder& fact(const std::string& id, const std::string& anchor, const std::string& text = "") {
        records.push_back(
            {id, store_id, anchor, MemoryKind::transformed, text.empty() ? std::optional<std::string>() : text});
        return *this;
    }
    Builder& noise(const std::string& id) {
        records.push_back({id, store_id, std::nullopt, MemoryKind::transformed, std::nullopt});
        return *this;
    }
    Builder& query(const std::string& id, std::vector<std::string> anchors,
                   std::optional<std::string> category = std::nullopt, std::optional<double> score = std::nullopt) {
        QueryFixture f;
        f.query_id = id;
        f.source_anchors = std::move(anchors);
        f.category = std::move(category);
        f.answer_score = score;
        fixtures.push_back(std::move(f));
        return *this;
    }
    Builder& rank(const std::string& query, std::vector<std::string> ids) {
        rankings[query] = std::move(ids);
        return *this;
    }

    MemoryStore store() const { return MemoryStore::ingest(records); }
    TargetMap map() const { return build_target_map(store(), fixtures); }

    std::vector<RankedTrace> traces(const std::string& run_id, std::size_t depth = 100) const {
        std::vector<RankedTrace> out;
        for (const auto& [q, ids] : rankings) {
            RankedTrace t;
            t.run_id = run_id;
            t.query_id = q;
            t.depth = std::max(depth, ids.size());
            for (const auto& id : ids) t.ranking.push_back({id, std::nullopt});
            out.push_back(std::move(t));
        }
        return out;
    }

    RescoreTable rescore(const std::string& run_id, std::size_t k = 60,
                         std::vector<TargetKind> targets = {kAllTargets.begin(), kAllTargets.end()}) const {
        return rescore_run(traces(run_id), map(), targets, k);
    }
};

/// A table from explicit per-query values; rank 1 hit when ndcg == 1.
struct RowSpec {
    std::string query;
    TargetKind target;
    double ndcg;
    bool hit;
    std::optional<std::size_t> rank = std::nullopt;
};

inline RescoreTable manual_table(const std::string& run_id, const std::vector<RowSpec>& specs,
                                 std::vector<TargetKind> targets = {kAllTargets.begin(), kAllTargets.end()}) {
    RescoreTable t;
    t.run_id = run_id;
    t.targets = std::move(targets);
    for (const auto& s : specs) {
        MetricRow r;
        r.run_id = run_id;
        r.query_id = s.query;
        r.target = s.target;
        r.ndcg = s.ndcg;
        r.hit = s.hit;
        r.first_credited_rank = s.rank ? s.rank : (s.hit ? std::optional<std::size_t>(1) : std::nullopt);
        r.mrr = r.first_credited_rank ? 1.0 / static_cast<double>(*r.first_credited_rank) : 0.0;
        r.recall = s.hit ? 1.0 : 0.0;
        t.rows.push_back(r);
        if (std::find(t.evaluated.begin(), t.evaluated.end(), s.query) == t.evaluated.end())
            t.evaluated.push_back(s.query);
    }
    t.finalize();
    return t;
}

}  // namespace tiap::testing
