#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "tiap/types.hpp"

// Binary-relevance ranked-list metrics against a credited id set.
//
// Positions are 1-based. A ranked id is relevant iff it is a member of the
// target set; gains are binary and discounts are 1/log2(rank + 1). IDCG
// places min(|target|, k) relevant items at the top. Every function throws
// ValidationError for an empty target ("targetless query") or k == 0; callers
// are expected to exclude targetless queries before scoring.

namespace tiap::metrics {

double ndcg_at_k(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k);
double recall_at_k(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k);
double mrr(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k);
bool hit_at_k(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k);
std::optional<std::size_t> first_credited_rank(std::span<const MemoryId> ranking, const IdSet& target,
                                               std::size_t k);

/// Sum of 1/log2(i + 1) for i = 1..n.
double ideal_dcg(std::size_t n);

struct MetricValues {
    double ndcg = 0.0;
    double mrr = 0.0;
    double recall = 0.0;
    bool hit = false;
    std::optional<std::size_t> first_credited_rank;

    double value(MetricKind m) const;
};

/// All metrics in one pass over the top k.
MetricValues evaluate(std::span<const MemoryId> ranking, const IdSet& target, std::size_t k);

}  // namespace tiap::metrics
