#include "tiap/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tiap/error.hpp"

namespace tiap::metrics {

namespace {

void check_args(const IdSet& target, std::size_t k) {
    if (target.empty()) throw ValidationError("targetless query");
    if (k == 0) throw ValidationError("cutoff k must be at least 1");
}

inline double discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

}  // namespace

double ideal_dcg(std::size_t n) {
    double idcg = 0.0;
    for (std::size_t i = 1; i <= n; ++i) idcg += discount(i);
    return idcg;
}

double MetricValues::value(MetricKind m) const {
    switch (m) {
        case MetricKind::ndcg: return ndcg;
        case MetricKind::mrr: return mrr;
        case MetricKind::recall: return recall;
        case MetricKind::hit: return hit ? 1.0 : 0.0;
    }
    return 0.0;
}

MetricValues evaluate(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k) {
    check_args(target, k);
    MetricValues v;
    const auto depth = std::min(k, ranking.size());
    double dcg = 0.0;
    std::size_t found = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (!target.contains(ranking[i])) continue;
        const auto rank = i + 1;
        dcg += discount(rank);
        ++found;
        if (!v.first_credited_rank) v.first_credited_rank = rank;
    }
    v.hit = found > 0;
    v.mrr = v.first_credited_rank ? 1.0 / static_cast<double>(*v.first_credited_rank) : 0.0;
    v.recall = static_cast<double>(found) / static_cast<double>(target.size());
    v.ndcg = dcg / ideal_dcg(std::min(target.size(), k));
    return v;
}

double ndcg_at_k(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k) {
    return evaluate(ranking, target, k).ndcg;
}

double recall_at_k(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k) {
    return evaluate(ranking, target, k).recall;
}

double mrr(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k) {
    return evaluate(ranking, target, k).mrr;
}

bool hit_at_k(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k) {
    return evaluate(ranking, target, k).hit;
}

std::optional<std::size_t> first_credited_rank(std::span<const MemoryId> ranking, const IdSet& target,
                                               std::size_t k) {
    return evaluate(ranking, target, k).first_credited_rank;
}

}  // namespace tiap::metrics
