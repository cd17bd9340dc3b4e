#include "tiap/report.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "tiap/error.hpp"
#include "tiap/io.hpp"

namespace tiap::report {

namespace {

std::string name_of(TargetKind t) { return std::string(to_string(t)); }
std::string display(TargetKind t) { return std::string(display_name(t)); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string md_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace

std::string Table::markdown() const {
    std::string out;
    if (!title.empty()) out += "### " + title + "\n\n";
    out += "|";
    for (const auto& h : headers) out += " " + md_cell(h) + " |";
    out += "\n|";
    for (std::size_t i = 0; i < headers.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
    out += "\n";
    for (const auto& row : rows) {
        out += "|";
        for (const auto& cell : row) out += " " + md_cell(cell) + " |";
        out += "\n";
    }
    return out;
}

std::string Table::csv() const {
    std::string out;
    for (std::size_t i = 0; i < headers.size(); ++i) out += (i ? "," : "") + csv_field(headers[i]);
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(row[i]);
        out += "\n";
    }
    return out;
}

std::string num(double x, int precision) {
    auto s = fmt::format("{:.{}f}", x, precision);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

std::string pct(double fraction, int precision) { return num(100.0 * fraction, precision) + "%"; }

std::string signed_num(double x, int precision) {
    auto s = num(x, precision);
    return s.front() == '-' ? s : "+" + s;
}

std::string ci(const stats::BootstrapResult& r, int precision) {
    return fmt::format("[{}, {}]", signed_num(r.ci_low, precision), signed_num(r.ci_high, precision));
}

double TargetMeans::value(MetricKind m) const {
    switch (m) {
        case MetricKind::ndcg: return ndcg;
        case MetricKind::mrr: return mrr;
        case MetricKind::recall: return recall;
        case MetricKind::hit: return hit;
    }
    return 0.0;
}

namespace {

TargetMeans means_over(const RescoreTable& table, TargetKind t, std::span<const QueryId> queries) {
    TargetMeans m;
    m.target = t;
    m.n = queries.size();
    if (queries.empty()) return m;
    m.ndcg = table.mean(MetricKind::ndcg, t, queries);
    m.mrr = table.mean(MetricKind::mrr, t, queries);
    m.recall = table.mean(MetricKind::recall, t, queries);
    m.hit = table.mean(MetricKind::hit, t, queries);
    return m;
}

}  // namespace

RunSummary summarize_run(const RescoreTable& table, const std::string& label, MetricKind metric,
                         const BootstrapOptions& boot) {
    RunSummary s;
    s.run_id = table.run_id;
    s.label = label;
    s.targets = table.targets;
    s.evaluated = table.evaluated.size();
    s.targetless.assign(s.targets.size(), 0);
    for (const auto& e : table.excluded) {
        if (!e.target) {
            ++s.missing_trace;
            continue;
        }
        for (std::size_t i = 0; i < s.targets.size(); ++i)
            if (s.targets[i] == *e.target && e.reason == kReasonTargetless) ++s.targetless[i];
    }
    for (auto t : s.targets) {
        const std::array<TargetKind, 1> one{t};
        const auto qs = table.shared_queries(one);
        s.full.push_back(means_over(table, t, qs));
    }
    const auto shared = table.shared_queries(s.targets);
    s.shared_n = shared.size();
    for (auto t : s.targets) s.shared.push_back(means_over(table, t, shared));
    if (s.targets.size() >= 2 && !shared.empty()) {
        const auto deltas = per_query_deltas(table, s.targets.front(), s.targets.back(), metric, shared);
        std::vector<double> xs;
        xs.reserve(deltas.size());
        for (const auto& d : deltas) xs.push_back(d.delta);
        s.delta = stats::paired_bootstrap_ci(xs, boot.resamples, boot.seed, boot.level);
    }
    for (std::size_t i = 0; i < s.targets.size(); ++i) {
        for (std::size_t j = i + 1; j < s.targets.size(); ++j) {
            const std::array<TargetKind, 2> pair{s.targets[i], s.targets[j]};
            if (table.shared_queries(pair).empty()) continue;
            s.pairs.push_back(instability_matrix(table, s.targets[i], s.targets[j]));
        }
    }
    if (s.targets.size() == 3) {
        std::size_t n = 0;
        for (const auto& q : shared)
            if (!table.at(q, TargetKind::raw).hit && table.at(q, TargetKind::source).hit &&
                table.at(q, TargetKind::canonical).hit)
                ++n;
        s.contested = n;
    }
    return s;
}

std::string pair_key(TargetKind a, TargetKind b) { return name_of(a) + "-" + name_of(b); }

json to_json(const stats::BootstrapResult& r) {
    return {{"estimate", r.point_estimate}, {"ci_low", r.ci_low}, {"ci_high", r.ci_high},
            {"resamples", r.resamples},     {"seed", r.seed},     {"level", r.level}};
}

json to_json(const TargetMeans& m) {
    if (m.n == 0) return {{"n", 0}};
    return {{"n", m.n}, {"ndcg", m.ndcg}, {"mrr", m.mrr}, {"recall", m.recall}, {"hit", m.hit}};
}

json to_json(const ComparisonCell& c) {
    return {{"t1", name_of(c.t1)},          {"t2", name_of(c.t2)},
            {"shared_n", c.shared_n},       {"hit_flips", c.hit_flips},
            {"top1_flips", c.top1_flips},   {"ndcg_changed", c.ndcg_changed},
            {"change_rate", c.change_rate}};
}

json to_json(const RunSummary& s) {
    json j{{"run_id", s.run_id}, {"label", s.label}, {"evaluated", s.evaluated}, {"missing_trace", s.missing_trace}};
    j["targets"] = json::object();
    j["targetless"] = json::object();
    json shared{{"n", s.shared_n}};
    for (std::size_t i = 0; i < s.targets.size(); ++i) {
        j["targets"][name_of(s.targets[i])] = to_json(s.full[i]);
        j["targetless"][name_of(s.targets[i])] = s.targetless[i];
        if (s.shared_n) shared[name_of(s.targets[i])] = to_json(s.shared[i]);
    }
    if (s.delta) {
        shared["delta"] = to_json(*s.delta);
        shared["delta"]["from"] = name_of(s.targets.front());
        shared["delta"]["to"] = name_of(s.targets.back());
    }
    j["shared"] = shared;
    j["pairs"] = json::object();
    for (const auto& c : s.pairs) j["pairs"][pair_key(c.t1, c.t2)] = to_json(c);
    j["contested"] = s.contested ? json(*s.contested) : json(nullptr);
    return j;
}

json to_json(const WinnerReport& w) {
    json j{{"metric", to_string(w.metric)}, {"a", w.label_a}, {"b", w.label_b}, {"shared_n", w.shared_n},
           {"flip", w.flip}};
    j["targets"] = json::object();
    for (const auto& g : w.per_target)
        j["targets"][name_of(g.target)] = {{"gap", g.gap}, {"winner", g.winner}, {"ci", to_json(g.ci)}};
    return j;
}

json to_json(const SweepTable& s) {
    json j{{"metric", to_string(s.metric)}, {"configs", s.configs}, {"matched_n", s.matched_n}};
    json targets = json::array();
    for (auto t : s.targets) targets.push_back(name_of(t));
    j["targets"] = targets;
    j["cells"] = json::array();
    for (const auto& c : s.cells) {
        json cell{{"a", c.config_a}, {"b", c.config_b}};
        for (std::size_t i = 0; i < s.targets.size(); ++i)
            cell[name_of(s.targets[i])] = {{"gap", c.gaps[i]}, {"winner", c.winners[i]}};
        j["cells"].push_back(cell);
    }
    return j;
}

json to_json(const ProviderRanking& r) {
    json j{{"method", r.method}, {"ordering", r.ordering}};
    j["scores"] = json::array();
    for (const auto& s : r.scores) j["scores"].push_back({{"label", s.label}, {"score", s.score}, {"n", s.n}});
    return j;
}

json to_json(const AgreementFilterReport& r, bool with_ids) {
    json j{{"considered", r.considered},
           {"retained_n", r.retained.size()},
           {"retained_fraction", r.retained_fraction},
           {"mean_spread", r.mean_spread}};
    if (with_ids) j["retained"] = r.retained;
    return j;
}

json to_json(const CategoryCell& c) {
    auto j = to_json(c.cell);
    j["category"] = c.category;
    return j;
}

namespace {

json cell_json(const AlignmentCell& c) {
    return {{"n", c.n}, {"mean_score", c.mean_score}, {"strong_fraction", c.strong_fraction}};
}

}  // namespace

json to_json(const AlignmentReport& r) {
    return {{"run_id", r.run_id},
            {"t1", name_of(r.t1)},
            {"t2", name_of(r.t2)},
            {"strong_threshold", r.strong_threshold},
            {"only_t1", cell_json(r.only_t1)},
            {"only_t2", cell_json(r.only_t2)},
            {"skipped_no_score", r.skipped_no_score}};
}

json to_json(const CoverageReport& r) {
    json j{{"queries", r.queries}, {"all_three", r.all_three}, {"targetless", r.targetless}};
    j["covered"] = json::object();
    j["shared"] = json::object();
    for (auto a : kAllTargets) {
        j["covered"][name_of(a)] = r.coverage(a);
        for (auto b : kAllTargets)
            if (index_of(a) < index_of(b)) j["shared"][pair_key(a, b)] = r.shared_count(a, b);
    }
    return j;
}

json to_json(const CoverageGapReport& r) {
    json j{{"metric", to_string(r.metric)},
           {"skipped", r.skipped},
           {"warnings", r.warnings},
           {"bootstrap_over_runs", r.bootstrap_over_runs},
           {"aggregate", to_json(r.aggregate)}};
    j["runs"] = json::array();
    for (const auto& g : r.runs)
        j["runs"].push_back({{"run_id", g.run_id},
                             {"covered_n", g.covered_n},
                             {"uncovered_n", g.uncovered_n},
                             {"covered_mean", g.covered_mean},
                             {"uncovered_mean", g.uncovered_mean},
                             {"gap", g.gap}});
    return j;
}

json to_json(const audit::VerdictSummary& s) {
    json j{{"judges", s.judges}};
    j["excluded"] = s.excluded;
    j["rows"] = json::array();
    for (const auto& r : s.rows) {
        json row{{"dataset", r.dataset}, {"rater", r.rater}, {"n", r.n}};
        for (auto l : kAllLabels) {
            row[std::string(to_string(l))] = r.counts[index_of(l)];
            row["percent_" + std::string(to_string(l))] = r.percent(l);
        }
        j["rows"].push_back(row);
    }
    j["cases"] = json::array();
    for (const auto& c : s.cases)
        j["cases"].push_back({{"case_id", c.case_id},
                              {"dataset", c.dataset},
                              {"label", c.label ? json(to_string(*c.label)) : json(nullptr)},
                              {"valid_votes", c.valid_votes}});
    return j;
}

json to_json(const stats::AgreementReport& r) {
    json j{{"mean_three_class", r.mean_three_class}, {"mean_binary", r.mean_binary}, {"common_valid", r.common_valid}};
    j["pairs"] = json::array();
    for (const auto& p : r.pairs)
        j["pairs"].push_back({{"a", p.rater_a},
                              {"b", p.rater_b},
                              {"n", p.n},
                              {"three_class", p.three_class},
                              {"binary", p.binary},
                              {"kappa_three_class", p.kappa_three_class ? json(*p.kappa_three_class) : json(nullptr)},
                              {"kappa_binary", p.kappa_binary ? json(*p.kappa_binary) : json(nullptr)}});
    return j;
}

json to_json(const audit::SampleResult& r) {
    json ids = json::array();
    for (const auto& c : r.sample) ids.push_back(c.case_id);
    return {{"size", r.sample.size()},
            {"bucket_sizes", r.bucket_sizes},
            {"quotas", r.quotas},
            {"warnings", r.warnings},
            {"case_ids", ids}};
}

Table coverage_table(std::span<const std::pair<std::string, CoverageReport>> stores) {
    Table t{"Dataset coverage", {"Store", "Eval", "Raw", "Source", "Canonical", "All three", "Targetless"}, {}};
    for (const auto& [name, r] : stores)
        t.rows.push_back({name, std::to_string(r.queries), std::to_string(r.coverage(TargetKind::raw)),
                          std::to_string(r.coverage(TargetKind::source)),
                          std::to_string(r.coverage(TargetKind::canonical)), std::to_string(r.all_three),
                          std::to_string(r.targetless)});
    return t;
}

Table summary_table(std::span<const RunSummary> runs, MetricKind metric) {
    Table t;
    t.title = fmt::format("Fixed-subset rescoring, {} on shared subsets", to_string(metric));
    t.headers = {"Run", "n"};
    if (runs.empty()) return t;
    const auto& targets = runs.front().targets;
    for (auto tk : targets) t.headers.push_back(display(tk));
    const bool delta = targets.size() >= 2;
    if (delta) {
        const auto head = display(targets.back()) + "–" + display(targets.front());
        t.headers.push_back(head);
        t.headers.push_back(head + " 95% CI");
    }
    for (const auto& s : runs) {
        std::vector<std::string> row{s.label, std::to_string(s.shared_n)};
        for (std::size_t i = 0; i < s.targets.size(); ++i)
            row.push_back(s.shared_n ? num(s.shared[i].value(metric)) : "n/a");
        if (delta) {
            row.push_back(s.delta ? signed_num(s.delta->point_estimate) : "n/a");
            row.push_back(s.delta ? ci(*s.delta) : "n/a");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table multi_metric_table(std::span<const RunSummary> runs) {
    Table t{"Shared-subset Recall, MRR and nDCG", {"Run", "Target", "n", "Recall", "MRR", "nDCG", "Hit"}, {}};
    for (const auto& s : runs)
        for (std::size_t i = 0; i < s.targets.size(); ++i)
            t.rows.push_back({s.label, display(s.targets[i]), std::to_string(s.shared_n),
                              s.shared_n ? num(s.shared[i].recall) : "n/a", s.shared_n ? num(s.shared[i].mrr) : "n/a",
                              s.shared_n ? num(s.shared[i].ndcg) : "n/a", s.shared_n ? num(s.shared[i].hit) : "n/a"});
    return t;
}

Table instability_table(std::span<const std::pair<std::string, ComparisonCell>> cells) {
    Table t{"Query-level instability between targets",
            {"Run", "Comparison", "Shared", "Hit flips", "Top-1 flips", "nDCG changed", "Rate"},
            {}};
    for (const auto& [label, c] : cells)
        t.rows.push_back({label, display(c.t1) + " vs " + display(c.t2), std::to_string(c.shared_n),
                          std::to_string(c.hit_flips), std::to_string(c.top1_flips), std::to_string(c.ndcg_changed),
                          pct(c.change_rate)});
    return t;
}

Table winner_table(std::span<const WinnerReport> reports) {
    Table t{"Winner by target", {"A", "B", "n"}, {}};
    if (reports.empty()) return t;
    for (const auto& g : reports.front().per_target) {
        t.headers.push_back(display(g.target) + " gap");
        t.headers.push_back(display(g.target) + " winner");
    }
    t.headers.push_back("Flip");
    for (const auto& w : reports) {
        std::vector<std::string> row{w.label_a, w.label_b, std::to_string(w.shared_n)};
        for (const auto& g : w.per_target) {
            row.push_back(signed_num(g.gap) + " " + ci(g.ci));
            row.push_back(g.winner);
        }
        row.push_back(w.flip ? "yes" : "no");
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table sweep_table(const SweepTable& s) {
    Table t{fmt::format("Target-dependent winner ({}, matched n={})", to_string(s.metric), s.matched_n),
            {"Pair"},
            {}};
    for (auto tk : s.targets) t.headers.push_back(display(tk));
    for (const auto& c : s.cells) {
        std::vector<std::string> row{c.config_a + " vs " + c.config_b};
        for (std::size_t i = 0; i < s.targets.size(); ++i)
            row.push_back(c.winners[i] + " (" + signed_num(c.gaps[i]) + ")");
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table mitigation_table(std::span<const ProviderRanking> rankings, const ProviderRanking& reference,
                       std::span<const std::size_t> distances) {
    Table t{"Aggregation mitigation", {"Method", "Ordering", "Kendall distance from " + reference.method}, {}};
    for (std::size_t i = 0; i < rankings.size(); ++i) {
        std::string order;
        for (std::size_t j = 0; j < rankings[i].ordering.size(); ++j)
            order += (j ? " > " : "") + rankings[i].ordering[j];
        t.rows.push_back({rankings[i].method, order, std::to_string(distances[i])});
    }
    return t;
}

Table agreement_filter_table(std::span<const std::pair<std::string, AgreementFilterReport>> reports) {
    Table t{"Agreement filter", {"Run", "Considered", "Retained", "Retained %", "Mean spread"}, {}};
    for (const auto& [label, r] : reports)
        t.rows.push_back({label, std::to_string(r.considered), std::to_string(r.retained.size()),
                          pct(r.retained_fraction), num(r.mean_spread)});
    return t;
}

Table category_table(std::span<const std::pair<std::string, std::vector<CategoryCell>>> runs) {
    Table t{"Category breakdown", {"Run", "Category", "Shared", "Hit flips", "nDCG changed", "Rate"}, {}};
    for (const auto& [label, cells] : runs)
        for (const auto& c : cells)
            t.rows.push_back({label, c.category, std::to_string(c.cell.shared_n), std::to_string(c.cell.hit_flips),
                              std::to_string(c.cell.ndcg_changed), pct(c.cell.change_rate)});
    return t;
}

Table alignment_table(std::span<const AlignmentReport> reports) {
    Table t{"Answer alignment of disagreeing hits", {"Run"}, {}};
    if (reports.empty()) return t;
    const auto a = display(reports.front().t1), b = display(reports.front().t2);
    t.headers = {"Run", a + "-only n", a + "-only mean", a + "-only strong",
                 b + "-only n", b + "-only mean", b + "-only strong", "Skipped"};
    for (const auto& r : reports)
        t.rows.push_back({r.run_id, std::to_string(r.only_t1.n), num(r.only_t1.mean_score),
                          pct(r.only_t1.strong_fraction), std::to_string(r.only_t2.n), num(r.only_t2.mean_score),
                          pct(r.only_t2.strong_fraction), std::to_string(r.skipped_no_score)});
    return t;
}

Table coverage_gap_table(const CoverageGapReport& r) {
    Table t{fmt::format("Raw {} on canonical-covered minus uncovered queries", to_string(r.metric)),
            {"Run", "Covered n", "Uncovered n", "Covered", "Uncovered", "Gap"},
            {}};
    for (const auto& g : r.runs)
        t.rows.push_back({g.run_id, std::to_string(g.covered_n), std::to_string(g.uncovered_n), num(g.covered_mean),
                          num(g.uncovered_mean), signed_num(g.gap)});
    t.rows.push_back({"Mean", "", "", "", "", signed_num(r.aggregate.point_estimate) + " " + ci(r.aggregate)});
    return t;
}

Table distribution_table(const audit::VerdictSummary& s) {
    Table t{"Semantic audit of contested credits", {"Dataset", "Rater", "n", "Supports", "Partial", "Not support"}, {}};
    for (const auto& r : s.rows)
        t.rows.push_back({r.dataset, r.rater, std::to_string(r.n), num(r.percent(Label::supports), 1) + "%",
                          num(r.percent(Label::partial), 1) + "%",
                          num(r.percent(Label::does_not_support), 1) + "%"});
    return t;
}

Table agreement_table(const stats::AgreementReport& r, std::optional<double> fleiss_three,
                      std::optional<double> fleiss_binary) {
    Table t{"Pairwise agreement among judges",
            {"Pair", "n", "3-class agree", "Binary agree", "Cohen 3-class", "Cohen binary"},
            {}};
    auto opt = [](const std::optional<double>& x) { return x ? num(*x) : std::string("n/a"); };
    for (const auto& p : r.pairs)
        t.rows.push_back({p.rater_a + " / " + p.rater_b, std::to_string(p.n), pct(p.three_class), pct(p.binary),
                          opt(p.kappa_three_class), opt(p.kappa_binary)});
    t.rows.push_back({"Mean", "", pct(r.mean_three_class), pct(r.mean_binary), "", ""});
    t.rows.push_back({"Fleiss", std::to_string(r.common_valid), "", "", opt(fleiss_three), opt(fleiss_binary)});
    return t;
}

void write_bundle(const std::filesystem::path& dir, const std::string& name, const json& summary,
                  std::span<const Table> tables) {
    io::write_text(dir / (name + ".json"), summary.dump(2) + "\n");
    std::string md;
    for (std::size_t i = 0; i < tables.size(); ++i) {
        if (i) md += "\n";
        md += tables[i].markdown();
        io::write_text(dir / fmt::format("{}-{}.csv", name, i + 1), tables[i].csv());
    }
    io::write_text(dir / (name + ".md"), md);
}

}  // namespace tiap::report
