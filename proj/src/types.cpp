#include "tiap/types.hpp"

#include <algorithm>

#include "tiap/error.hpp"

namespace tiap {

std::string_view to_string(TargetKind t) {
    switch (t) {
        case TargetKind::raw: return "raw";
        case TargetKind::source: return "source";
        case TargetKind::canonical: return "canonical";
    }
    return "?";
}

std::string_view to_string(MemoryKind k) {
    return k == MemoryKind::raw ? "raw" : "transformed";
}

std::string_view to_string(MetricKind m) {
    switch (m) {
        case MetricKind::ndcg: return "ndcg";
        case MetricKind::mrr: return "mrr";
        case MetricKind::recall: return "recall";
        case MetricKind::hit: return "hit";
    }
    return "?";
}

std::string_view to_string(Label l) {
    switch (l) {
        case Label::supports: return "supports";
        case Label::partial: return "partial";
        case Label::does_not_support: return "does_not_support";
    }
    return "?";
}

std::string_view display_name(TargetKind t) {
    switch (t) {
        case TargetKind::raw: return "Raw";
        case TargetKind::source: return "Source";
        case TargetKind::canonical: return "Canonical";
    }
    return "?";
}

TargetKind parse_target(std::string_view s) {
    if (s == "raw") return TargetKind::raw;
    if (s == "source" || s == "src") return TargetKind::source;
    if (s == "canonical" || s == "can") return TargetKind::canonical;
    throw ValidationError("unknown target kind '" + std::string(s) + "'");
}

MemoryKind parse_memory_kind(std::string_view s) {
    if (s == "raw") return MemoryKind::raw;
    if (s == "transformed") return MemoryKind::transformed;
    throw ValidationError("unknown memory kind '" + std::string(s) + "'");
}

MetricKind parse_metric(std::string_view s) {
    if (s == "ndcg") return MetricKind::ndcg;
    if (s == "mrr") return MetricKind::mrr;
    if (s == "recall") return MetricKind::recall;
    if (s == "hit") return MetricKind::hit;
    throw ValidationError("unknown metric '" + std::string(s) + "'");
}

Label parse_label(std::string_view s) {
    if (s == "supports") return Label::supports;
    if (s == "partial") return Label::partial;
    if (s == "does_not_support") return Label::does_not_support;
    throw ValidationError("unknown label '" + std::string(s) + "'");
}

std::vector<TargetKind> parse_target_list(std::string_view csv) {
    std::vector<TargetKind> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        auto comma = csv.find(',', pos);
        if (comma == std::string_view::npos) comma = csv.size();
        auto item = csv.substr(pos, comma - pos);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) {
            auto t = parse_target(item);
            if (std::find(out.begin(), out.end(), t) != out.end())
                throw ValidationError("duplicate target '" + std::string(item) + "'");
            out.push_back(t);
        }
        pos = comma + 1;
    }
    if (out.empty()) throw ValidationError("empty target list");
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace tiap
