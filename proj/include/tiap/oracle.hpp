#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tiap/store.hpp"

// Brute-force reference scorer. It shares no code with tiap::metrics or
// tiap::build_target_map: ranked lists and target sets are plain vectors
// scanned linearly, and nDCG is computed from explicit gain vectors for the
// observed and the ideal ranking. The synthetic fixture generator uses it to
// write expected reports, and tests compare production output against it.

namespace tiap::oracle {

struct Scores {
    double ndcg = 0.0;
    double mrr = 0.0;
    double recall = 0.0;
    bool hit = false;
    int first_rank = 0;  // 0 when nothing is credited
};

/// `target` must be non-empty and duplicate-free.
Scores score(const std::vector<std::string>& ranking, const std::vector<std::string>& target, int k);

/// Members of `records` credited under `target` for the given anchors,
/// found by testing every record against the target definition.
std::vector<std::string> credited(const std::vector<MemoryRecord>& records,
                                  const std::vector<std::string>& anchors, TargetKind target);

}  // namespace tiap::oracle
