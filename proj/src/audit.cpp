#include "tiap/audit.hpp"

#include <algorithm>
#include <unordered_map>

#include "tiap/error.hpp"

namespace tiap::audit {

std::string make_case_id(std::string_view run_id, std::string_view query_id) {
    std::string id(run_id);
    id += ':';
    id += query_id;
    return id;
}

std::vector<AuditCase> extract_contested(std::span<const RescoreTable> tables, const TargetMap& map,
                                         std::span<const RankedTrace> traces, const MemoryStore& store,
                                         std::span<const QueryFixture> fixtures) {
    std::map<std::pair<std::string_view, std::string_view>, const RankedTrace*> trace_of;
    for (const auto& t : traces) trace_of[{t.run_id, t.query_id}] = &t;
    std::unordered_map<std::string_view, std::size_t> fixture_index;
    for (std::size_t i = 0; i < fixtures.size(); ++i) fixture_index.emplace(fixtures[i].query_id, i);

    std::vector<const RescoreTable*> ordered;
    for (const auto& t : tables) ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(),
              [](const RescoreTable* a, const RescoreTable* b) { return a->run_id < b->run_id; });

    std::vector<AuditCase> cases;
    for (const auto* table : ordered) {
        for (const auto& q : table->shared_queries(kAllTargets)) {
            if (table->at(q, TargetKind::raw).hit) continue;
            if (!table->at(q, TargetKind::source).hit || !table->at(q, TargetKind::canonical).hit) continue;

            auto tr = trace_of.find({table->run_id, q});
            if (tr == trace_of.end())
                throw ValidationError("no trace for contested query '" + q + "' in run '" + table->run_id + "'");
            auto fx = fixture_index.find(q);
            if (fx == fixture_index.end()) throw ValidationError("no fixture for query '" + q + "'");
            const auto& fixture = fixtures[fx->second];
            const auto& canonical = map.find(q)->canonical;

            AuditCase c;
            c.case_id = make_case_id(table->run_id, q);
            c.run_id = table->run_id;
            c.query_id = q;
            c.query_index = fx->second;
            c.query_text = fixture.query_text.value_or(q);
            c.reference_answer = fixture.reference_answer;
            const auto& ranking = tr->second->ranking;
            const auto depth = std::min(table->k, ranking.size());
            for (std::size_t i = 0; i < depth; ++i) {
                if (!canonical.contains(ranking[i].memory_id)) continue;
                const auto* rec = store.find(ranking[i].memory_id);
                c.credited.push_back({ranking[i].memory_id, i + 1, rec && rec->text ? *rec->text : std::string()});
            }
            for (const auto& anchor : fixture.source_anchors) {
                for (auto idx : store.anchored_at(anchor)) {
                    const auto& rec = store.records()[idx];
                    if (rec.kind != MemoryKind::raw || !rec.text) continue;
                    if (!c.source_text.empty()) c.source_text += '\n';
                    c.source_text += *rec.text;
                }
            }
            cases.push_back(std::move(c));
        }
    }
    return cases;
}

SampleResult stratified_sample(std::span<const AuditCase> cases, std::size_t size,
                               std::span<const RankBucket> buckets) {
    if (buckets.empty()) throw ValidationError("no rank buckets given");
    if (size > cases.size())
        throw ValidationError("sample size " + std::to_string(size) + " exceeds " + std::to_string(cases.size()) +
                              " cases");
    SampleResult r;
    std::vector<std::vector<std::size_t>> members(buckets.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto rank = cases[i].first_rank();
        bool placed = false;
        for (std::size_t b = 0; b < buckets.size() && !placed; ++b) {
            if (rank >= buckets[b].first && rank <= buckets[b].second) {
                members[b].push_back(i);
                placed = true;
            }
        }
        if (!placed)
            r.warnings.push_back("case '" + cases[i].case_id + "' has credited rank " + std::to_string(rank) +
                                 " outside every bucket");
    }
    for (auto& m : members) {
        std::stable_sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
            return std::tie(cases[a].query_index, cases[a].run_id) < std::tie(cases[b].query_index, cases[b].run_id);
        });
        r.bucket_sizes.push_back(m.size());
    }
    for (std::size_t b = 0; b < buckets.size(); ++b)
        if (members[b].empty())
            r.warnings.push_back("rank bucket " + std::to_string(buckets[b].first) + "-" +
                                 std::to_string(buckets[b].second) + " is empty; its quota moves to other buckets");

    std::size_t placeable = 0;
    for (auto n : r.bucket_sizes) placeable += n;
    if (size > placeable)
        throw ValidationError("sample size " + std::to_string(size) + " exceeds the " + std::to_string(placeable) +
                              " cases inside the rank buckets");

    // Water-fill: split the unassigned quota evenly over buckets with spare
    // capacity, remainder to the earliest, until everything is placed.
    r.quotas.assign(buckets.size(), 0);
    std::size_t remaining = size;
    while (remaining > 0) {
        std::vector<std::size_t> open;
        for (std::size_t b = 0; b < buckets.size(); ++b)
            if (r.quotas[b] < r.bucket_sizes[b]) open.push_back(b);
        const std::size_t share = remaining / open.size();
        std::size_t extra = remaining % open.size();
        for (auto b : open) {
            std::size_t want = share + (extra > 0 ? 1 : 0);
            if (extra > 0) --extra;
            const std::size_t give = std::min(want, r.bucket_sizes[b] - r.quotas[b]);
            r.quotas[b] += give;
            remaining -= give;
        }
    }
    for (std::size_t b = 0; b < buckets.size(); ++b)
        if (r.quotas[b] != size / buckets.size() + (b < size % buckets.size() ? 1 : 0))
            r.warnings.push_back("rank bucket " + std::to_string(buckets[b].first) + "-" +
                                 std::to_string(buckets[b].second) + " quota adjusted to " +
                                 std::to_string(r.quotas[b]));

    std::vector<std::size_t> chosen;
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        const auto n = members[b].size();
        const auto q = r.quotas[b];
        for (std::size_t i = 0; i < q; ++i) {
            const std::size_t pos = q == 1 ? 0 : (2 * i * (n - 1) + (q - 1)) / (2 * (q - 1));
            chosen.push_back(members[b][pos]);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    for (auto i : chosen) r.sample.push_back(cases[i]);
    return r;
}

double DistributionRow::percent(Label l) const {
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(counts[index_of(l)]) / static_cast<double>(n);
}

stats::LabelMatrix label_matrix(std::span<const JudgeVerdict> verdicts) {
    stats::LabelMatrix m;
    std::map<std::string, std::vector<const JudgeVerdict*>> by_case;
    for (const auto& v : verdicts) {
        m.add_rater(v.judge_id);
        by_case[v.case_id].push_back(&v);
    }
    for (const auto& [cid, vs] : by_case) {
        const auto item = m.add_item(cid);
        for (const auto* v : vs) m.set(item, m.add_rater(v->judge_id), v->label);
    }
    return m;
}

VerdictSummary aggregate_verdicts(std::span<const JudgeVerdict> verdicts,
                                  const std::map<std::string, std::string>& dataset_of) {
    VerdictSummary s;
    const auto matrix = label_matrix(verdicts);
    s.judges = matrix.raters;

    auto dataset = [&](const std::string& case_id) {
        auto it = dataset_of.find(case_id);
        return it == dataset_of.end() ? std::string("all") : it->second;
    };

    std::vector<std::string> datasets;
    std::map<std::string, std::vector<DistributionRow>> judge_rows;
    std::map<std::string, DistributionRow> majority_rows;
    for (std::size_t i = 0; i < matrix.items.size(); ++i) {
        const auto ds = dataset(matrix.items[i]);
        if (!judge_rows.count(ds)) {
            datasets.push_back(ds);
            auto& rows = judge_rows[ds];
            for (const auto& j : matrix.raters) rows.push_back({ds, j, 0, {}});
            majority_rows[ds] = {ds, std::string(kMajorityRow), 0, {}};
            s.excluded[ds] = 0;
        }
        const auto& row = matrix.cells[i];
        std::size_t valid = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (!row[j]) continue;
            ++valid;
            auto& jr = judge_rows[ds][j];
            ++jr.n;
            ++jr.counts[index_of(*row[j])];
        }
        const auto maj = stats::majority_vote(row);
        s.cases.push_back({matrix.items[i], ds, maj, valid});
        if (!maj) {
            ++s.excluded[ds];
            continue;
        }
        auto& mr = majority_rows[ds];
        ++mr.n;
        ++mr.counts[index_of(*maj)];
    }
    std::sort(datasets.begin(), datasets.end());
    for (const auto& ds : datasets) {
        for (auto& r : judge_rows[ds]) s.rows.push_back(r);
        s.rows.push_back(majority_rows[ds]);
    }
    return s;
}

}  // namespace tiap::audit
