#include "tiap/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace tiap::oracle {

namespace {

bool member(const std::vector<std::string>& xs, const std::string& x) {
    for (const auto& y : xs)
        if (y == x) return true;
    return false;
}

double dcg(const std::vector<int>& gains) {
    double total = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i) total += gains[i] / std::log2(static_cast<double>(i) + 2.0);
    return total;
}

}  // namespace

Scores score(const std::vector<std::string>& ranking, const std::vector<std::string>& target, int k) {
    Scores s;
    std::vector<int> gains(static_cast<std::size_t>(k), 0);
    std::vector<int> ideal(static_cast<std::size_t>(k), 0);
    int found = 0;
    for (int pos = 0; pos < k; ++pos) {
        if (pos < static_cast<int>(ranking.size()) && member(target, ranking[pos])) {
            gains[pos] = 1;
            ++found;
            if (s.first_rank == 0) s.first_rank = pos + 1;
        }
        if (pos < static_cast<int>(target.size())) ideal[pos] = 1;
    }
    s.hit = s.first_rank != 0;
    s.mrr = s.hit ? 1.0 / s.first_rank : 0.0;
    s.recall = static_cast<double>(found) / static_cast<double>(target.size());
    s.ndcg = dcg(gains) / dcg(ideal);
    return s;
}

std::vector<std::string> credited(const std::vector<MemoryRecord>& records,
                                  const std::vector<std::string>& anchors, TargetKind target) {
    std::vector<std::string> out;
    for (const auto& rec : records) {
        if (!rec.source_anchor || !member(anchors, *rec.source_anchor)) continue;
        const bool ok = target == TargetKind::source ||
                        (target == TargetKind::raw && rec.kind == MemoryKind::raw) ||
                        (target == TargetKind::canonical && rec.kind == MemoryKind::transformed);
        if (ok && !member(out, rec.memory_id)) out.push_back(rec.memory_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace tiap::oracle
