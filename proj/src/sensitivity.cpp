#include "tiap/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "tiap/error.hpp"

namespace tiap {

namespace {

std::vector<QueryId> intersect_sorted(const std::vector<QueryId>& a, std::span<const QueryId> b) {
    std::vector<QueryId> sb(b.begin(), b.end());
    std::sort(sb.begin(), sb.end());
    std::vector<QueryId> out;
    std::set_intersection(a.begin(), a.end(), sb.begin(), sb.end(), std::back_inserter(out));
    return out;
}

std::string winner_label(double gap, const std::string& a, const std::string& b) {
    if (gap > 0.0) return a;
    if (gap < 0.0) return b;
    return std::string(kTie);
}

}  // namespace

ComparisonCell instability_matrix(const RescoreTable& table, TargetKind t1, TargetKind t2,
                                  std::optional<std::span<const QueryId>> restrict_to) {
    const std::array<TargetKind, 2> pair{t1, t2};
    auto shared = table.shared_queries(pair);
    if (restrict_to) shared = intersect_sorted(shared, *restrict_to);
    if (shared.empty())
        throw ValidationError("run '" + table.run_id + "': empty " + std::string(to_string(t1)) + "/" +
                              std::string(to_string(t2)) + " shared subset");
    ComparisonCell c;
    c.t1 = t1;
    c.t2 = t2;
    c.shared_n = shared.size();
    for (const auto& q : shared) {
        const auto& a = table.at(q, t1);
        const auto& b = table.at(q, t2);
        if (a.hit != b.hit) ++c.hit_flips;
        if (a.top1_credited() != b.top1_credited()) ++c.top1_flips;
        if (a.ndcg != b.ndcg) ++c.ndcg_changed;
    }
    c.change_rate = static_cast<double>(c.ndcg_changed) / static_cast<double>(c.shared_n);
    return c;
}

std::vector<QueryId> common_subset(std::span<const LabeledTable> tables, std::span<const TargetKind> targets) {
    if (tables.empty()) return {};
    auto out = tables.front().table->shared_queries(targets);
    for (std::size_t i = 1; i < tables.size(); ++i) out = intersect_sorted(out, tables[i].table->shared_queries(targets));
    return out;
}

double system_gap(const RescoreTable& a, const RescoreTable& b, MetricKind metric, TargetKind target,
                  std::optional<std::span<const QueryId>> subset) {
    std::vector<QueryId> owned;
    if (!subset) {
        const std::array<LabeledTable, 2> both{LabeledTable{"a", &a}, LabeledTable{"b", &b}};
        const std::array<TargetKind, 1> ts{target};
        owned = common_subset(both, ts);
        subset = owned;
    }
    if (subset->empty())
        throw ValidationError("runs '" + a.run_id + "' and '" + b.run_id + "' share no scored query");
    std::vector<double> deltas;
    deltas.reserve(subset->size());
    for (const auto& q : *subset) deltas.push_back(a.at(q, target).value(metric) - b.at(q, target).value(metric));
    double sum = 0.0;
    for (double d : deltas) sum += d;
    return sum / static_cast<double>(deltas.size());
}

WinnerReport winner_flip(const LabeledTable& a, const LabeledTable& b, MetricKind metric,
                         std::span<const TargetKind> targets, const BootstrapOptions& boot) {
    if (targets.empty()) throw ValidationError("winner_flip needs at least one target");
    const std::array<LabeledTable, 2> both{a, b};
    const auto subset = common_subset(both, targets);
    if (subset.empty())
        throw ValidationError("runs '" + a.label + "' and '" + b.label + "' share no query scored under every target");

    WinnerReport r;
    r.metric = metric;
    r.label_a = a.label;
    r.label_b = b.label;
    r.shared_n = subset.size();
    for (auto t : targets) {
        TargetGap g;
        g.target = t;
        std::vector<double> deltas;
        deltas.reserve(subset.size());
        for (const auto& q : subset)
            deltas.push_back(a.table->at(q, t).value(metric) - b.table->at(q, t).value(metric));
        g.gap = system_gap(*a.table, *b.table, metric, t, subset);
        g.ci = stats::paired_bootstrap_ci(deltas, boot.resamples, boot.seed, boot.level);
        g.winner = winner_label(g.gap, a.label, b.label);
        r.per_target.push_back(std::move(g));
    }
    bool pos = false, neg = false;
    for (const auto& g : r.per_target) {
        pos = pos || g.gap > 0.0;
        neg = neg || g.gap < 0.0;
    }
    r.flip = pos && neg;
    return r;
}

SweepTable sweep_winner_table(std::span<const LabeledTable> configs, MetricKind metric,
                              std::span<const TargetKind> targets, std::optional<std::span<const QueryId>> matched) {
    if (configs.size() < 2) throw ValidationError("sweep needs at least two configurations");
    SweepTable s;
    s.metric = metric;
    s.targets.assign(targets.begin(), targets.end());
    for (const auto& c : configs) s.configs.push_back(c.label);

    std::vector<QueryId> subset;
    if (matched) {
        subset.assign(matched->begin(), matched->end());
        std::sort(subset.begin(), subset.end());
        for (const auto& c : configs) {
            const auto shared = c.table->shared_queries(targets);
            if (!std::includes(shared.begin(), shared.end(), subset.begin(), subset.end()))
                throw ValidationError("config '" + c.label + "' is not scored on the whole matched subset");
        }
    } else {
        subset = configs.front().table->shared_queries(targets);
        for (const auto& c : configs)
            if (c.table->shared_queries(targets) != subset)
                throw ValidationError("mismatched subsets: config '" + c.label + "' differs from '" +
                                      configs.front().label + "'");
    }
    if (subset.empty()) throw ValidationError("sweep matched subset is empty");
    s.matched_n = subset.size();

    for (std::size_t i = 0; i < configs.size(); ++i) {
        for (std::size_t j = i + 1; j < configs.size(); ++j) {
            SweepCell cell;
            cell.config_a = configs[i].label;
            cell.config_b = configs[j].label;
            for (auto t : targets) {
                const double gap = system_gap(*configs[i].table, *configs[j].table, metric, t, subset);
                cell.gaps.push_back(gap);
                cell.winners.push_back(winner_label(gap, cell.config_a, cell.config_b));
            }
            s.cells.push_back(std::move(cell));
        }
    }
    return s;
}

std::string_view to_string(Aggregation a) {
    switch (a) {
        case Aggregation::arith_mean: return "arith_mean";
        case Aggregation::geom_mean: return "geom_mean";
        case Aggregation::min: return "min";
    }
    return "?";
}

Aggregation parse_aggregation(std::string_view s) {
    if (s == "arith_mean" || s == "arith") return Aggregation::arith_mean;
    if (s == "geom_mean" || s == "geom") return Aggregation::geom_mean;
    if (s == "min") return Aggregation::min;
    throw ValidationError("unknown aggregation '" + std::string(s) + "'");
}

double aggregate_triplet(Aggregation a, double raw, double source, double canonical) {
    switch (a) {
        case Aggregation::arith_mean: return raw + ((source - raw) + (canonical - raw)) / 3.0;
        case Aggregation::geom_mean:
            if (raw == source && source == canonical) return raw;
            return std::cbrt(raw * source * canonical);
        case Aggregation::min: return std::min({raw, source, canonical});
    }
    return 0.0;
}

namespace {

void order_scores(ProviderRanking& r) {
    std::vector<const ProviderScore*> ptrs;
    for (const auto& s : r.scores) ptrs.push_back(&s);
    std::stable_sort(ptrs.begin(), ptrs.end(), [](const ProviderScore* x, const ProviderScore* y) {
        if (x->score != y->score) return x->score > y->score;
        return x->label < y->label;
    });
    for (const auto* p : ptrs) r.ordering.push_back(p->label);
}

std::vector<QueryId> provider_subset(const LabeledTable& p) {
    for (auto t : kAllTargets)
        if (std::find(p.table->targets.begin(), p.table->targets.end(), t) == p.table->targets.end())
            throw ValidationError("provider '" + p.label + "' was not scored under the " +
                                  std::string(to_string(t)) + " target");
    auto subset = p.table->shared_queries(kAllTargets);
    if (subset.empty()) throw ValidationError("provider '" + p.label + "' has no query scored under all targets");
    return subset;
}

}  // namespace

ProviderRanking aggregate_rankings(std::span<const LabeledTable> providers, Aggregation aggregation) {
    if (providers.empty()) throw ValidationError("no providers to rank");
    ProviderRanking r;
    r.method = std::string(to_string(aggregation));
    for (const auto& p : providers) {
        const auto subset = provider_subset(p);
        double sum = 0.0;
        for (const auto& q : subset) {
            sum += aggregate_triplet(aggregation, p.table->at(q, TargetKind::raw).ndcg,
                                     p.table->at(q, TargetKind::source).ndcg,
                                     p.table->at(q, TargetKind::canonical).ndcg);
        }
        r.scores.push_back({p.label, sum / static_cast<double>(subset.size()), subset.size()});
    }
    order_scores(r);
    return r;
}

ProviderRanking target_ranking(std::span<const LabeledTable> providers, TargetKind target) {
    if (providers.empty()) throw ValidationError("no providers to rank");
    ProviderRanking r;
    r.method = std::string(to_string(target));
    for (const auto& p : providers) {
        const auto subset = provider_subset(p);
        r.scores.push_back({p.label, p.table->mean(MetricKind::ndcg, target, subset), subset.size()});
    }
    order_scores(r);
    return r;
}

std::size_t kendall_tau_distance(std::span<const std::string> order_a, std::span<const std::string> order_b) {
    if (order_a.size() != order_b.size()) throw ValidationError("kendall_tau_distance: orders differ in length");
    std::unordered_map<std::string_view, std::size_t> pos_b;
    for (std::size_t i = 0; i < order_b.size(); ++i)
        if (!pos_b.emplace(order_b[i], i).second)
            throw ValidationError("kendall_tau_distance: label '" + order_b[i] + "' repeated");
    std::vector<std::size_t> mapped;
    std::unordered_set<std::string_view> seen_a;
    for (const auto& l : order_a) {
        if (!seen_a.insert(l).second) throw ValidationError("kendall_tau_distance: label '" + l + "' repeated");
        auto it = pos_b.find(l);
        if (it == pos_b.end()) throw ValidationError("kendall_tau_distance: label '" + l + "' missing from one order");
        mapped.push_back(it->second);
    }
    std::size_t discordant = 0;
    for (std::size_t i = 0; i < mapped.size(); ++i)
        for (std::size_t j = i + 1; j < mapped.size(); ++j)
            if (mapped[i] > mapped[j]) ++discordant;
    return discordant;
}

AgreementFilterReport agreement_filter(const RescoreTable& table) {
    AgreementFilterReport r;
    const auto subset = table.shared_queries(kAllTargets);
    r.considered = subset.size();
    double spread_sum = 0.0;
    for (const auto& q : subset) {
        const auto& a = table.at(q, TargetKind::raw);
        const auto& b = table.at(q, TargetKind::source);
        const auto& c = table.at(q, TargetKind::canonical);
        if (a.hit != b.hit || b.hit != c.hit) continue;
        r.retained.push_back(q);
        spread_sum += std::max({a.ndcg, b.ndcg, c.ndcg}) - std::min({a.ndcg, b.ndcg, c.ndcg});
    }
    if (r.considered > 0) r.retained_fraction = static_cast<double>(r.retained.size()) / static_cast<double>(r.considered);
    if (!r.retained.empty()) r.mean_spread = spread_sum / static_cast<double>(r.retained.size());
    return r;
}

std::vector<CategoryCell> category_breakdown(const RescoreTable& table, std::span<const QueryFixture> fixtures,
                                             TargetKind t1, TargetKind t2) {
    std::map<std::string, std::vector<QueryId>> groups;
    for (const auto& f : fixtures) groups[f.category.value_or(std::string(kUncategorized))].push_back(f.query_id);
    const std::array<TargetKind, 2> pair{t1, t2};
    const auto shared = table.shared_queries(pair);
    std::vector<CategoryCell> out;
    for (auto& [cat, qs] : groups) {
        if (intersect_sorted(shared, qs).empty()) continue;
        out.push_back({cat, instability_matrix(table, t1, t2, std::span<const QueryId>(qs))});
    }
    return out;
}

namespace {

void finish_cell(AlignmentCell& c, const std::vector<double>& scores, double threshold) {
    c.n = scores.size();
    if (scores.empty()) return;
    double sum = 0.0;
    std::size_t strong = 0;
    for (double s : scores) {
        sum += s;
        if (s >= threshold) ++strong;
    }
    c.mean_score = sum / static_cast<double>(scores.size());
    c.strong_fraction = static_cast<double>(strong) / static_cast<double>(scores.size());
}

}  // namespace

AlignmentReport answer_alignment(const RescoreTable& table, std::span<const QueryFixture> fixtures, TargetKind t1,
                                 TargetKind t2, double strong_threshold) {
    AlignmentReport r;
    r.run_id = table.run_id;
    r.t1 = t1;
    r.t2 = t2;
    r.strong_threshold = strong_threshold;
    std::unordered_map<std::string_view, const QueryFixture*> by_id;
    for (const auto& f : fixtures) by_id.emplace(f.query_id, &f);

    const std::array<TargetKind, 2> pair{t1, t2};
    std::vector<double> s1, s2;
    for (const auto& q : table.shared_queries(pair)) {
        const bool h1 = table.at(q, t1).hit;
        const bool h2 = table.at(q, t2).hit;
        if (h1 == h2) continue;
        auto it = by_id.find(q);
        if (it == by_id.end() || !it->second->answer_score) {
            ++r.skipped_no_score;
            continue;
        }
        (h1 ? s1 : s2).push_back(*it->second->answer_score);
    }
    finish_cell(r.only_t1, s1, strong_threshold);
    finish_cell(r.only_t2, s2, strong_threshold);
    return r;
}

AlignmentReport combine_alignment(std::span<const AlignmentReport> reports, const std::string& label) {
    AlignmentReport out;
    out.run_id = label;
    if (reports.empty()) return out;
    out.t1 = reports.front().t1;
    out.t2 = reports.front().t2;
    out.strong_threshold = reports.front().strong_threshold;
    auto combine = [&](AlignmentCell AlignmentReport::*cell) {
        AlignmentCell c;
        std::size_t runs = 0;
        for (const auto& r : reports) {
            const auto& x = r.*cell;
            c.n += x.n;
            if (x.n == 0) continue;
            ++runs;
            c.mean_score += x.mean_score;
            c.strong_fraction += x.strong_fraction;
        }
        if (runs) {
            c.mean_score /= static_cast<double>(runs);
            c.strong_fraction /= static_cast<double>(runs);
        }
        return c;
    };
    out.only_t1 = combine(&AlignmentReport::only_t1);
    out.only_t2 = combine(&AlignmentReport::only_t2);
    for (const auto& r : reports) out.skipped_no_score += r.skipped_no_score;
    return out;
}

}  // namespace tiap
