#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tiap {

/// Memory identifiers are opaque, case-sensitive text.
using MemoryId = std::string;
using QueryId = std::string;
using IdSet = std::set<std::string, std::less<>>;

/// Which stored memories may receive credit for a query.
enum class TargetKind { raw, source, canonical };

inline constexpr std::array<TargetKind, 3> kAllTargets{TargetKind::raw, TargetKind::source,
                                                        TargetKind::canonical};

/// Lineage kind of a stored memory. Any richer provenance taxonomy is mapped
/// onto these two values at ingestion time.
enum class MemoryKind { raw, transformed };

enum class MetricKind { ndcg, mrr, recall, hit };

/// Three-way rubric label for a contested credit.
enum class Label { supports, partial, does_not_support };

inline constexpr std::array<Label, 3> kAllLabels{Label::supports, Label::partial,
                                                  Label::does_not_support};

std::string_view to_string(TargetKind t);
std::string_view to_string(MemoryKind k);
std::string_view to_string(MetricKind m);
std::string_view to_string(Label l);

/// Display name used in report headers ("Raw", "Source", "Canonical").
std::string_view display_name(TargetKind t);

TargetKind parse_target(std::string_view s);
MemoryKind parse_memory_kind(std::string_view s);
MetricKind parse_metric(std::string_view s);
Label parse_label(std::string_view s);

/// Parses a comma separated target list such as "raw,canonical".
/// Duplicates are rejected; the result keeps canonical order raw < source < canonical.
std::vector<TargetKind> parse_target_list(std::string_view csv);

inline constexpr std::size_t index_of(TargetKind t) { return static_cast<std::size_t>(t); }
inline constexpr std::size_t index_of(Label l) { return static_cast<std::size_t>(l); }

/// supports and partial collapse to "relevant".
inline constexpr bool is_relevant(Label l) { return l != Label::does_not_support; }

}  // namespace tiap
