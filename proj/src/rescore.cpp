#include "tiap/rescore.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "tiap/detail/parallel.hpp"
#include "tiap/error.hpp"
#include "tiap/metrics.hpp"

namespace tiap {

double MetricRow::value(MetricKind m) const {
    switch (m) {
        case MetricKind::ndcg: return ndcg;
        case MetricKind::mrr: return mrr;
        case MetricKind::recall: return recall;
        case MetricKind::hit: return hit ? 1.0 : 0.0;
    }
    return 0.0;
}

void RescoreTable::finalize() {
    std::sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.query_id, a.target) < std::tie(b.query_id, b.target);
    });
    std::sort(excluded.begin(), excluded.end(), [](const Exclusion& a, const Exclusion& b) {
        return std::tie(a.query_id, a.target) < std::tie(b.query_id, b.target);
    });
    std::sort(evaluated.begin(), evaluated.end());
    evaluated.erase(std::unique(evaluated.begin(), evaluated.end()), evaluated.end());
    std::sort(targets.begin(), targets.end());
    index_.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto it = index_.find(rows[i].query_id);
        if (it == index_.end()) it = index_.emplace(rows[i].query_id, std::array<int, 3>{-1, -1, -1}).first;
        auto& slot = it->second[index_of(rows[i].target)];
        if (slot >= 0)
            throw ValidationError("run '" + run_id + "' has two " + std::string(to_string(rows[i].target)) +
                                  " rows for query '" + rows[i].query_id + "'");
        slot = static_cast<int>(i);
    }
}

const MetricRow* RescoreTable::find(std::string_view query_id, TargetKind t) const {
    auto it = index_.find(query_id);
    if (it == index_.end()) return nullptr;
    const int slot = it->second[index_of(t)];
    return slot < 0 ? nullptr : &rows[static_cast<std::size_t>(slot)];
}

const MetricRow& RescoreTable::at(std::string_view query_id, TargetKind t) const {
    const auto* row = find(query_id, t);
    if (!row)
        throw ValidationError("run '" + run_id + "' has no " + std::string(to_string(t)) + " score for query '" +
                              std::string(query_id) + "'");
    return *row;
}

std::vector<QueryId> RescoreTable::shared_queries(std::span<const TargetKind> ts) const {
    std::vector<QueryId> out;
    for (const auto& [qid, slots] : index_) {
        bool all = true;
        for (auto t : ts) all = all && slots[index_of(t)] >= 0;
        if (all) out.push_back(qid);
    }
    return out;
}

std::size_t RescoreTable::coverage(TargetKind t) const {
    std::size_t n = 0;
    for (const auto& [qid, slots] : index_)
        if (slots[index_of(t)] >= 0) ++n;
    return n;
}

double RescoreTable::mean(MetricKind m, TargetKind t, std::span<const QueryId> queries) const {
    if (queries.empty()) throw ValidationError("mean over an empty query set");
    double sum = 0.0;
    for (const auto& q : queries) sum += at(q, t).value(m);
    return sum / static_cast<double>(queries.size());
}

RescoreTable rescore_run(std::span<const RankedTrace> traces, const TargetMap& map,
                         std::span<const TargetKind> targets, std::size_t k) {
    if (k == 0) throw ValidationError("cutoff k must be at least 1");
    if (targets.empty()) throw ValidationError("no targets requested");

    RescoreTable table;
    table.k = k;
    table.targets.assign(targets.begin(), targets.end());
    std::sort(table.targets.begin(), table.targets.end());
    table.targets.erase(std::unique(table.targets.begin(), table.targets.end()), table.targets.end());

    std::unordered_map<std::string_view, const RankedTrace*> by_query;
    for (const auto& tr : traces) {
        if (table.run_id.empty()) table.run_id = tr.run_id;
        if (tr.run_id != table.run_id)
            throw ValidationError("traces from runs '" + table.run_id + "' and '" + tr.run_id +
                                  "' passed to one rescore");
        if (!map.find(tr.query_id))
            throw ValidationError("trace in run '" + tr.run_id + "' references unknown query '" + tr.query_id + "'");
        validate_trace(tr);
        if (!by_query.emplace(tr.query_id, &tr).second)
            throw ValidationError("duplicate trace for run '" + tr.run_id + "', query '" + tr.query_id + "'");
    }

    struct Work {
        const std::string* query_id;
        const QueryTargets* targets;
        const RankedTrace* trace;
    };
    std::vector<Work> work;
    work.reserve(map.size());
    for (const auto& [qid, t] : map.queries) {
        table.evaluated.push_back(qid);
        auto it = by_query.find(qid);
        if (it == by_query.end()) {
            table.excluded.push_back({qid, std::nullopt, std::string(kReasonMissingTrace)});
            continue;
        }
        work.push_back({&qid, &t, it->second});
    }

    const auto& kinds = table.targets;
    std::vector<std::vector<MetricRow>> rows(work.size());
    detail::parallel_for(work.size(), [&](std::size_t i) {
        const auto& w = work[i];
        const auto ids = w.trace->ids();
        for (auto t : kinds) {
            const auto& credited = w.targets->get(t);
            if (credited.empty()) continue;
            const auto v = metrics::evaluate(ids, credited, k);
            rows[i].push_back({table.run_id, *w.query_id, t, v.ndcg, v.mrr, v.recall, v.hit, v.first_credited_rank});
        }
    });
    for (std::size_t i = 0; i < work.size(); ++i) {
        for (auto t : kinds)
            if (!work[i].targets->has(t))
                table.excluded.push_back({*work[i].query_id, t, std::string(kReasonTargetless)});
        for (auto& r : rows[i]) table.rows.push_back(std::move(r));
    }
    table.finalize();
    return table;
}

std::vector<QueryId> shared_subset(const TargetMap& map, std::span<const TargetKind> targets) {
    std::vector<QueryId> out;
    for (const auto& [qid, t] : map.queries) {
        bool all = true;
        for (auto k : targets) all = all && t.has(k);
        if (all) out.push_back(qid);
    }
    return out;
}

std::vector<QueryDelta> per_query_deltas(const RescoreTable& table, TargetKind t1, TargetKind t2, MetricKind metric,
                                         std::optional<std::span<const QueryId>> queries) {
    const std::array<TargetKind, 2> pair{t1, t2};
    std::vector<QueryDelta> out;
    if (!queries) {
        for (const auto& q : table.shared_queries(pair))
            out.push_back({q, table.at(q, t2).value(metric) - table.at(q, t1).value(metric)});
        return out;
    }
    for (const auto& q : *queries) {
        const auto* a = table.find(q, t1);
        const auto* b = table.find(q, t2);
        if (!a || !b)
            throw ValidationError("query '" + q + "' is not in the " + std::string(to_string(t1)) + "/" +
                                  std::string(to_string(t2)) + " shared subset of run '" + table.run_id + "'");
        out.push_back({q, b->value(metric) - a->value(metric)});
    }
    return out;
}

std::vector<std::size_t> delta_histogram(std::span<const QueryDelta> deltas, double bin_width) {
    if (!(bin_width > 0.0 && bin_width <= 1.0)) throw ValidationError("histogram bin width must lie in (0, 1]");
    const auto bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& d : deltas) {
        auto b = static_cast<std::size_t>(std::floor(std::abs(d.delta) / bin_width));
        counts[std::min(b, bins - 1)]++;
    }
    return counts;
}

namespace {

double plain_mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

}  // namespace

CoverageGapReport coverage_gap(std::span<const RescoreTable> tables, const TargetMap& map, MetricKind metric,
                               std::size_t resamples, std::uint64_t seed, double level) {
    const TargetMap* one = &map;
    return coverage_gap(tables, std::span<const TargetMap* const>(&one, 1), metric, resamples, seed, level);
}

CoverageGapReport coverage_gap(std::span<const RescoreTable> tables, std::span<const TargetMap* const> maps,
                               MetricKind metric, std::size_t resamples, std::uint64_t seed, double level) {
    if (tables.empty()) throw ValidationError("coverage_gap needs at least one run");
    if (maps.size() != 1 && maps.size() != tables.size())
        throw ValidationError("coverage_gap needs one target map or one per run");
    CoverageGapReport report;
    report.metric = metric;
    std::vector<std::vector<double>> covered_vals, uncovered_vals;

    for (std::size_t ti = 0; ti < tables.size(); ++ti) {
        const auto& table = tables[ti];
        const auto& map = *maps[maps.size() == 1 ? 0 : ti];
        std::vector<double> cov, unc;
        for (const auto& row : table.rows) {
            if (row.target != TargetKind::raw) continue;
            const auto* t = map.find(row.query_id);
            if (!t) throw ValidationError("rescored query '" + row.query_id + "' missing from the target map");
            (t->has(TargetKind::canonical) ? cov : unc).push_back(row.value(metric));
        }
        if (cov.empty() || unc.empty()) {
            report.skipped.push_back(table.run_id);
            report.warnings.push_back("run '" + table.run_id + "' skipped: no " +
                                      (cov.empty() ? std::string("canonical-covered") : std::string("uncovered")) +
                                      " queries with a Raw score");
            continue;
        }
        RunGap g;
        g.run_id = table.run_id;
        g.covered_n = cov.size();
        g.uncovered_n = unc.size();
        g.covered_mean = plain_mean(cov);
        g.uncovered_mean = plain_mean(unc);
        g.gap = g.covered_mean - g.uncovered_mean;
        report.runs.push_back(g);
        covered_vals.push_back(std::move(cov));
        uncovered_vals.push_back(std::move(unc));
    }
    if (report.runs.empty()) throw ValidationError("no run has both canonical-covered and uncovered queries");

    if (report.runs.size() >= 2) {
        report.bootstrap_over_runs = true;
        std::vector<double> gaps;
        for (const auto& g : report.runs) gaps.push_back(g.gap);
        report.aggregate = stats::paired_bootstrap_ci(gaps, resamples, seed, level);
        report.aggregate.point_estimate = plain_mean(gaps);
        return report;
    }

    // One run: resample the covered and uncovered populations independently,
    // covered indices first within each resample.
    const auto& cov = covered_vals.front();
    const auto& unc = uncovered_vals.front();
    auto& agg = report.aggregate;
    agg.point_estimate = report.runs.front().gap;
    agg.resamples = resamples;
    agg.seed = seed;
    agg.level = level;
    stats::Resampler rs(seed);
    std::vector<double> reps(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        double sc = 0.0, su = 0.0;
        for (std::size_t i = 0; i < cov.size(); ++i) sc += cov[rs.next_index(cov.size())];
        for (std::size_t i = 0; i < unc.size(); ++i) su += unc[rs.next_index(unc.size())];
        reps[b] = sc / static_cast<double>(cov.size()) - su / static_cast<double>(unc.size());
    }
    stats::finish_percentile_ci(agg, reps);
    return report;
}

}  // namespace tiap
