#include "tiap/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tiap/audit.hpp"
#include "tiap/error.hpp"
#include "tiap/fixtures.hpp"
#include "tiap/io.hpp"
#include "tiap/judge.hpp"
#include "tiap/report.hpp"
#include "tiap/rescore.hpp"
#include "tiap/sensitivity.hpp"
#include "tiap/stats.hpp"

namespace fs = std::filesystem;

namespace tiap {

namespace {

using json = nlohmann::json;

struct Globals {
    std::size_t k = kDefaultCutoff;
    std::uint64_t seed = stats::kDefaultSeed;
    std::size_t resamples = stats::kDefaultResamples;
    double level = stats::kDefaultLevel;
    std::string targets = "raw,source,canonical";
    std::string metric = "ndcg";
    std::string out = "out";
    bool k_set = false;
    bool targets_set = false;
};

struct Context {
    Globals g;
    std::ostream& out;
    std::ostream& err;
    std::vector<std::string> args;
    std::vector<fs::path> inputs;

    fs::path outdir() const { return fs::path(g.out); }
    BootstrapOptions boot() const { return {g.resamples, g.seed, g.level}; }
    MetricKind metric() const { return parse_metric(g.metric); }
};

void note_input(Context& ctx, const fs::path& p) { ctx.inputs.push_back(p); }

/// Files named directly, plus every file with `ext` inside named directories (sorted).
std::vector<fs::path> expand(Context& ctx, const std::vector<std::string>& paths, const std::string& ext) {
    std::vector<fs::path> out;
    for (const auto& s : paths) {
        const fs::path p(s);
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p, ec))
                if (e.is_regular_file() && e.path().extension() == ext) found.push_back(e.path());
            if (ec) throw IoError("cannot list " + p.string() + ": " + ec.message());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            if (!fs::exists(p, ec)) throw IoError("no such file: " + p.string());
            out.push_back(p);
        }
    }
    for (const auto& p : out) note_input(ctx, p);
    return out;
}

struct World {
    std::vector<QueryFixture> fixtures;
    std::map<std::string, MemoryStore> stores;
    std::map<std::string, TargetMap> maps;
    std::map<std::string, RunManifest> manifests;

    const RunManifest* manifest(const std::string& run_id) const {
        auto it = manifests.find(run_id);
        return it == manifests.end() ? nullptr : &it->second;
    }

    std::string store_id_for(const std::string& run_id) const {
        if (const auto* m = manifest(run_id)) return m->store_id;
        if (stores.size() == 1) return stores.begin()->first;
        throw ValidationError(fmt::format("run '{}' has no manifest and the store file holds {} stores", run_id,
                                          stores.size()));
    }
};

std::map<std::string, RunManifest> load_manifests(Context& ctx, const std::vector<std::string>& paths) {
    std::map<std::string, RunManifest> out;
    for (const auto& p : expand(ctx, paths, ".json")) {
        auto m = io::read_manifest_file(p);
        if (out.count(m.run_id)) throw ValidationError("duplicate manifest for run '" + m.run_id + "'");
        out.emplace(m.run_id, std::move(m));
    }
    return out;
}

World load_world(Context& ctx, const std::string& store_path, const std::string& fixtures_path,
                 const std::vector<std::string>& manifest_paths) {
    World w;
    if (!fixtures_path.empty()) {
        note_input(ctx, fixtures_path);
        w.fixtures = io::read_fixtures_file(fixtures_path);
        validate_fixtures(w.fixtures);
    }
    if (!store_path.empty()) {
        note_input(ctx, store_path);
        auto records = io::read_store_file(store_path);
        std::map<std::string, std::vector<MemoryRecord>> by_store;
        for (auto& r : records) by_store[r.store_id].push_back(std::move(r));
        if (by_store.empty()) by_store[""];
        for (auto& [id, recs] : by_store) {
            auto store = MemoryStore::ingest(std::move(recs));
            if (!w.fixtures.empty()) w.maps.emplace(id, build_target_map(store, w.fixtures));
            w.stores.emplace(id, std::move(store));
        }
    }
    w.manifests = load_manifests(ctx, manifest_paths);
    if (!w.stores.empty())
        for (const auto& [run, m] : w.manifests)
            if (!w.stores.count(m.store_id))
                throw ValidationError("manifest '" + run + "' references unknown store '" + m.store_id + "'");
    return w;
}

std::vector<RescoreTable> load_tables(Context& ctx, const std::vector<std::string>& paths, bool sort_by_run = true) {
    std::vector<RescoreTable> tables;
    std::set<std::string> seen;
    for (const auto& p : expand(ctx, paths, ".jsonl")) {
        auto t = io::read_rescore_file(p);
        if (!seen.insert(t.run_id).second) throw ValidationError("run '" + t.run_id + "' given twice");
        tables.push_back(std::move(t));
    }
    if (tables.empty()) throw ValidationError("no rescore tables given");
    if (sort_by_run)
        std::sort(tables.begin(), tables.end(),
                  [](const RescoreTable& a, const RescoreTable& b) { return a.run_id < b.run_id; });
    return tables;
}

std::vector<TargetKind> resolve_targets(const Context& ctx, std::span<const RescoreTable> tables) {
    std::vector<TargetKind> ts =
        ctx.g.targets_set || tables.empty() ? parse_target_list(ctx.g.targets) : tables.front().targets;
    for (const auto& t : tables)
        for (auto tk : ts)
            if (std::find(t.targets.begin(), t.targets.end(), tk) == t.targets.end())
                throw ValidationError(fmt::format("run '{}' was not rescored under {}", t.run_id, to_string(tk)));
    return ts;
}

std::vector<LabeledTable> labeled(std::span<const RescoreTable> tables, const std::vector<std::string>& labels = {}) {
    std::vector<LabeledTable> out;
    for (std::size_t i = 0; i < tables.size(); ++i)
        out.push_back({i < labels.size() ? labels[i] : tables[i].run_id, &tables[i]});
    return out;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(',', start);
        if (end == std::string::npos) end = s.size();
        if (end > start) out.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

// ---------------------------------------------------------------- commands

void cmd_build_targets(Context& ctx, const std::string& store, const std::string& fixtures) {
    auto w = load_world(ctx, store, fixtures, {});
    auto os = io::open_out(ctx.outdir() / "targets.jsonl");
    std::vector<std::pair<std::string, CoverageReport>> cov;
    json summary = json::object();
    for (const auto& [id, map] : w.maps) {
        for (const auto& [q, t] : map.queries) {
            json j{{"store_id", id}, {"query_id", q}};
            for (auto tk : kAllTargets) {
                j[std::string(to_string(tk))] = std::vector<std::string>(t.get(tk).begin(), t.get(tk).end());
                j["has_" + std::string(to_string(tk))] = t.has(tk);
            }
            os << j.dump() << '\n';
        }
        const auto& st = w.stores.at(id);
        cov.emplace_back(id, coverage_stats(map));
        summary[id] = report::to_json(cov.back().second);
        summary[id]["records"] = {{"total", st.size()},
                                  {"raw", st.count(MemoryKind::raw)},
                                  {"transformed", st.count(MemoryKind::transformed)},
                                  {"anchors", st.anchor_count()}};
    }
    const std::vector<report::Table> tables{report::coverage_table(cov)};
    report::write_bundle(ctx.outdir(), "coverage", summary, tables);
    ctx.out << tables.front().markdown();
}

void cmd_rescore(Context& ctx, const std::string& store, const std::string& fixtures,
                 const std::vector<std::string>& trace_paths, const std::vector<std::string>& manifest_paths) {
    auto w = load_world(ctx, store, fixtures, manifest_paths);
    const auto targets = parse_target_list(ctx.g.targets);
    std::map<std::string, std::vector<RankedTrace>> by_run;
    for (const auto& p : expand(ctx, trace_paths, ".jsonl"))
        for (auto& t : io::read_traces_file(p)) by_run[t.run_id].push_back(std::move(t));
    if (by_run.empty()) throw ValidationError("no traces given");

    json summary{{"runs", json::object()}};
    auto excl = io::open_out(ctx.outdir() / "exclusions.jsonl");
    std::vector<std::pair<std::string, CoverageReport>> cov;
    for (const auto& [id, map] : w.maps) cov.emplace_back(id, coverage_stats(map));
    for (const auto& [run, traces] : by_run) {
        const auto store_id = w.store_id_for(run);
        const auto* m = w.manifest(run);
        std::size_t k = ctx.g.k;
        if (!ctx.g.k_set && m && m->k) k = *m->k;
        const auto table = rescore_run(traces, w.maps.at(store_id), targets, k);
        {
            auto os = io::open_out(ctx.outdir() / "rescore" / (run + ".jsonl"));
            io::write_rescore(os, table);
        }
        for (const auto& e : table.excluded) {
            json j{{"run_id", run}, {"query_id", e.query_id}, {"reason", e.reason}};
            j["target"] = e.target ? json(to_string(*e.target)) : json(nullptr);
            excl << j.dump() << '\n';
        }
        auto header = io::rescore_header(table);
        header["store_id"] = store_id;
        summary["runs"][run] = header;
        ctx.out << fmt::format("{}: {} rows, {} exclusions, k={}\n", run, table.rows.size(), table.excluded.size(), k);
    }
    summary["coverage"] = json::object();
    for (const auto& [id, c] : cov) summary["coverage"][id] = report::to_json(c);
    const std::vector<report::Table> tables{report::coverage_table(cov)};
    report::write_bundle(ctx.outdir(), "rescore", summary, tables);
}

struct CompareArgs {
    std::vector<std::string> tables;
    std::vector<std::string> manifests;
    std::string store;
    std::string fixtures;
    bool flips = true;
};

void cmd_compare(Context& ctx, const CompareArgs& a) {
    auto tables = load_tables(ctx, a.tables);
    auto w = load_world(ctx, a.store, a.fixtures, a.manifests);
    const auto targets = resolve_targets(ctx, tables);
    const auto metric = ctx.metric();

    // Narrow each table to the requested targets.
    for (auto& t : tables) {
        if (t.targets == targets) continue;
        std::vector<MetricRow> rows;
        for (auto& r : t.rows)
            if (std::find(targets.begin(), targets.end(), r.target) != targets.end()) rows.push_back(std::move(r));
        std::vector<Exclusion> ex;
        for (auto& e : t.excluded)
            if (!e.target || std::find(targets.begin(), targets.end(), *e.target) != targets.end())
                ex.push_back(std::move(e));
        t.rows = std::move(rows);
        t.excluded = std::move(ex);
        t.targets = targets;
        t.finalize();
    }

    json summary{{"metric", to_string(metric)}, {"runs", json::object()}};
    summary["targets"] = json::array();
    for (auto t : targets) summary["targets"].push_back(to_string(t));

    std::vector<report::RunSummary> runs;
    std::vector<std::pair<std::string, ComparisonCell>> cells;
    std::size_t contested = 0;
    bool have_contested = false;
    for (const auto& t : tables) {
        auto s = report::summarize_run(t, t.run_id, metric, ctx.boot());
        auto j = report::to_json(s);
        j["k"] = t.k;
        if (const auto* m = w.manifest(t.run_id)) {
            j["system_label"] = m->system_label;
            j["dataset_id"] = m->dataset_id;
            j["store_id"] = m->store_id;
        }
        summary["runs"][t.run_id] = j;
        for (const auto& c : s.pairs) cells.emplace_back(t.run_id, c);
        if (s.contested) {
            contested += *s.contested;
            have_contested = true;
        }
        runs.push_back(std::move(s));
    }
    summary["contested_total"] = have_contested ? json(contested) : json(nullptr);

    std::vector<WinnerReport> winners;
    summary["winner_flips"] = json::array();
    summary["warnings"] = json::array();
    if (a.flips && targets.size() >= 2) {
        const auto lt = labeled(tables);
        for (std::size_t i = 0; i < lt.size(); ++i) {
            for (std::size_t j = i + 1; j < lt.size(); ++j) {
                const auto* mi = w.manifest(lt[i].label);
                const auto* mj = w.manifest(lt[j].label);
                if (mi && mj && mi->dataset_id != mj->dataset_id) continue;
                try {
                    winners.push_back(winner_flip(lt[i], lt[j], metric, targets, ctx.boot()));
                    summary["winner_flips"].push_back(report::to_json(winners.back()));
                } catch (const ValidationError& e) {
                    summary["warnings"].push_back(e.what());
                }
            }
        }
    }

    std::vector<report::Table> out{report::summary_table(runs, metric), report::multi_metric_table(runs),
                                   report::instability_table(cells)};
    if (!winners.empty()) out.push_back(report::winner_table(winners));

    if (!w.maps.empty()) {
        std::vector<const TargetMap*> maps;
        for (const auto& t : tables) maps.push_back(&w.maps.at(w.store_id_for(t.run_id)));
        try {
            const auto gap = coverage_gap(tables, maps, metric, ctx.g.resamples, ctx.g.seed, ctx.g.level);
            summary["coverage_gap"] = report::to_json(gap);
            out.push_back(report::coverage_gap_table(gap));
            for (const auto& msg : gap.warnings) ctx.err << "warning: " << msg << '\n';
        } catch (const ValidationError& e) {
            summary["warnings"].push_back(std::string("coverage gap: ") + e.what());
        }
    }
    for (const auto& msg : summary["warnings"]) ctx.err << "warning: " << msg.get<std::string>() << '\n';
    report::write_bundle(ctx.outdir(), "compare", summary, out);
    for (const auto& t : out) ctx.out << t.markdown() << '\n';
}

void cmd_sweep(Context& ctx, const std::vector<std::string>& table_paths, const std::string& labels_csv,
               const std::string& matched_path) {
    auto tables = load_tables(ctx, table_paths, false);
    const auto targets = resolve_targets(ctx, tables);
    const auto lt = labeled(tables, split_csv(labels_csv));
    std::optional<std::vector<QueryId>> matched;
    if (!matched_path.empty()) {
        note_input(ctx, matched_path);
        std::vector<QueryId> ids;
        std::istringstream is(io::read_text(matched_path));
        for (std::string line; std::getline(is, line);)
            if (!line.empty()) ids.push_back(line);
        std::sort(ids.begin(), ids.end());
        matched = std::move(ids);
    }
    const auto sweep = matched ? sweep_winner_table(lt, ctx.metric(), targets, std::span<const QueryId>(*matched))
                               : sweep_winner_table(lt, ctx.metric(), targets);
    const std::vector<report::Table> out{report::sweep_table(sweep)};
    report::write_bundle(ctx.outdir(), "sweep", report::to_json(sweep), out);
    ctx.out << out.front().markdown();
}

void cmd_mitigate(Context& ctx, const std::vector<std::string>& table_paths, const std::string& labels_csv) {
    auto tables = load_tables(ctx, table_paths, false);
    const auto lt = labeled(tables, split_csv(labels_csv));
    const auto reference = target_ranking(lt, TargetKind::raw);
    std::vector<ProviderRanking> rankings;
    for (auto t : {TargetKind::source, TargetKind::canonical}) rankings.push_back(target_ranking(lt, t));
    for (auto a : {Aggregation::arith_mean, Aggregation::geom_mean, Aggregation::min})
        rankings.push_back(aggregate_rankings(lt, a));
    std::vector<std::size_t> dist;
    json summary{{"reference", report::to_json(reference)}, {"rankings", json::array()}};
    for (const auto& r : rankings) {
        dist.push_back(kendall_tau_distance(r.ordering, reference.ordering));
        auto j = report::to_json(r);
        j["kendall_from_raw"] = dist.back();
        summary["rankings"].push_back(j);
    }
    std::vector<std::pair<std::string, AgreementFilterReport>> filters;
    summary["agreement_filter"] = json::object();
    for (const auto& l : lt) {
        filters.emplace_back(l.label, agreement_filter(*l.table));
        summary["agreement_filter"][l.label] = report::to_json(filters.back().second);
    }
    std::vector<ProviderRanking> all{reference};
    all.insert(all.end(), rankings.begin(), rankings.end());
    std::vector<std::size_t> all_dist{0};
    all_dist.insert(all_dist.end(), dist.begin(), dist.end());
    const std::vector<report::Table> out{report::mitigation_table(all, reference, all_dist),
                                         report::agreement_filter_table(filters)};
    report::write_bundle(ctx.outdir(), "mitigate", summary, out);
    for (const auto& t : out) ctx.out << t.markdown() << '\n';
}

void cmd_coverage_gap(Context& ctx, const std::vector<std::string>& table_paths, const std::string& store,
                      const std::string& fixtures, const std::vector<std::string>& manifests) {
    auto tables = load_tables(ctx, table_paths);
    auto w = load_world(ctx, store, fixtures, manifests);
    std::vector<const TargetMap*> maps;
    for (const auto& t : tables) maps.push_back(&w.maps.at(w.store_id_for(t.run_id)));
    const auto gap = coverage_gap(tables, maps, ctx.metric(), ctx.g.resamples, ctx.g.seed, ctx.g.level);
    for (const auto& msg : gap.warnings) ctx.err << "warning: " << msg << '\n';
    const std::vector<report::Table> out{report::coverage_gap_table(gap)};
    report::write_bundle(ctx.outdir(), "coverage-gap", report::to_json(gap), out);
    ctx.out << out.front().markdown();
}

void cmd_categories(Context& ctx, const std::vector<std::string>& table_paths, const std::string& fixtures,
                    const std::string& t1, const std::string& t2) {
    auto tables = load_tables(ctx, table_paths);
    auto w = load_world(ctx, "", fixtures, {});
    const auto a = parse_target(t1), b = parse_target(t2);
    std::vector<std::pair<std::string, std::vector<CategoryCell>>> runs;
    json summary{{"t1", to_string(a)}, {"t2", to_string(b)}, {"runs", json::object()}};
    for (const auto& t : tables) {
        runs.emplace_back(t.run_id, category_breakdown(t, w.fixtures, a, b));
        json cells = json::array();
        for (const auto& c : runs.back().second) cells.push_back(report::to_json(c));
        summary["runs"][t.run_id] = cells;
    }
    const std::vector<report::Table> out{report::category_table(runs)};
    report::write_bundle(ctx.outdir(), "categories", summary, out);
    ctx.out << out.front().markdown();
}

void cmd_align(Context& ctx, const std::vector<std::string>& table_paths, const std::string& fixtures,
               const std::string& t1, const std::string& t2, double threshold) {
    auto tables = load_tables(ctx, table_paths);
    auto w = load_world(ctx, "", fixtures, {});
    const auto a = parse_target(t1), b = parse_target(t2);
    std::vector<AlignmentReport> reports;
    for (const auto& t : tables) reports.push_back(answer_alignment(t, w.fixtures, a, b, threshold));
    const auto combined = combine_alignment(reports, "all");
    json summary{{"runs", json::array()}, {"combined", report::to_json(combined)}};
    for (const auto& r : reports) summary["runs"].push_back(report::to_json(r));
    auto rows = reports;
    rows.push_back(combined);
    const std::vector<report::Table> out{report::alignment_table(rows)};
    report::write_bundle(ctx.outdir(), "alignment", summary, out);
    ctx.out << out.front().markdown();
}

void cmd_extract(Context& ctx, const std::vector<std::string>& table_paths, const std::string& store,
                 const std::string& fixtures, const std::vector<std::string>& trace_paths,
                 const std::vector<std::string>& manifests) {
    auto tables = load_tables(ctx, table_paths);
    auto w = load_world(ctx, store, fixtures, manifests);
    std::vector<RankedTrace> traces;
    for (const auto& p : expand(ctx, trace_paths, ".jsonl"))
        for (auto& t : io::read_traces_file(p)) traces.push_back(std::move(t));

    std::map<std::string, std::vector<RescoreTable>> by_store;
    for (auto& t : tables) {
        const auto id = w.store_id_for(t.run_id);
        by_store[id].push_back(std::move(t));
    }
    std::vector<audit::AuditCase> cases;
    for (const auto& [id, group] : by_store) {
        auto part = audit::extract_contested(group, w.maps.at(id), traces, w.stores.at(id), w.fixtures);
        cases.insert(cases.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    std::sort(cases.begin(), cases.end(), [](const audit::AuditCase& a, const audit::AuditCase& b) {
        return std::tie(a.run_id, a.query_id) < std::tie(b.run_id, b.query_id);
    });
    {
        auto os = io::open_out(ctx.outdir() / "cases.jsonl");
        io::write_jsonl(os, cases);
    }
    json per_run = json::object();
    for (const auto& c : cases) per_run[c.run_id] = per_run.value(c.run_id, 0) + 1;
    io::write_text(ctx.outdir() / "cases.json", json{{"n", cases.size()}, {"per_run", per_run}}.dump(2) + "\n");
    ctx.out << fmt::format("{} contested cases\n", cases.size());
}

std::vector<audit::RankBucket> parse_buckets(const std::string& s) {
    std::vector<audit::RankBucket> out;
    for (const auto& part : split_csv(s)) {
        const auto dash = part.find('-');
        try {
            if (dash == std::string::npos) throw std::invalid_argument(part);
            out.emplace_back(std::stoul(part.substr(0, dash)), std::stoul(part.substr(dash + 1)));
        } catch (const std::exception&) {
            throw ValidationError("bad rank bucket '" + part + "' (expected lo-hi)");
        }
        if (out.back().first == 0 || out.back().first > out.back().second)
            throw ValidationError("bad rank bucket '" + part + "'");
    }
    if (out.empty()) throw ValidationError("no rank buckets given");
    return out;
}

void cmd_sample(Context& ctx, const std::string& cases_path, std::size_t size, const std::string& buckets) {
    note_input(ctx, cases_path);
    const auto cases = io::read_cases_file(cases_path);
    const auto b = parse_buckets(buckets);
    const auto result = audit::stratified_sample(cases, size, b);
    for (const auto& w : result.warnings) ctx.err << "warning: " << w << '\n';
    {
        auto os = io::open_out(ctx.outdir() / "sample.jsonl");
        io::write_jsonl(os, result.sample);
    }
    io::write_text(ctx.outdir() / "sample.json", report::to_json(result).dump(2) + "\n");
    ctx.out << fmt::format("sampled {} of {} cases\n", result.sample.size(), cases.size());
}

void cmd_judge(Context& ctx, const std::string& cases_path, const std::string& config_path) {
    note_input(ctx, cases_path);
    note_input(ctx, config_path);
    const auto cases = io::read_cases_file(cases_path);
    const auto config = judge::parse_judge_config(io::read_json_file(config_path));
    const char* key = std::getenv(std::string(judge::kApiKeyEnv).c_str());
    if (!key || !*key) throw AuthError(std::string(judge::kApiKeyEnv) + " is not set");
    judge::HttpTransport transport(config.timeout);
    const auto run = judge::judge_cases(cases, config, key, transport);
    {
        auto os = io::open_out(ctx.outdir() / "verdicts.jsonl");
        io::write_jsonl(os, run.verdicts);
    }
    judge::write_transcripts(ctx.outdir() / "transcripts", run);
    std::map<std::string, std::size_t> absent;
    for (const auto& v : run.verdicts)
        if (!v.label) ++absent[v.judge_id];
    json summary{{"cases", cases.size()}, {"verdicts", run.verdicts.size()}, {"requests", run.transcript.size()}};
    summary["absent"] = absent;
    io::write_text(ctx.outdir() / "judge.json", summary.dump(2) + "\n");
    ctx.out << fmt::format("{} verdicts for {} cases\n", run.verdicts.size(), cases.size());
}

void cmd_agreement(Context& ctx, const std::string& verdicts_path, const std::string& cases_path,
                   const std::vector<std::string>& manifests, bool common_valid) {
    note_input(ctx, verdicts_path);
    const auto verdicts = io::read_verdicts_file(verdicts_path);
    std::map<std::string, std::string> dataset_of;
    if (!cases_path.empty()) {
        note_input(ctx, cases_path);
        const auto ms = load_manifests(ctx, manifests);
        for (const auto& c : io::read_cases_file(cases_path)) {
            auto it = ms.find(c.run_id);
            if (it != ms.end()) dataset_of[c.case_id] = it->second.dataset_id;
        }
    }
    const auto summary = audit::aggregate_verdicts(verdicts, dataset_of);
    const auto matrix = audit::label_matrix(verdicts);
    const auto pairs = stats::pairwise_agreement(matrix, common_valid);
    auto fleiss = [&](stats::Collapse c) -> std::optional<double> {
        try {
            return stats::fleiss_kappa(matrix, c);
        } catch (const ValidationError&) {
            return std::nullopt;
        }
    };
    const auto f3 = fleiss(stats::Collapse::none);
    const auto f2 = fleiss(stats::Collapse::binary);

    json j{{"distribution", report::to_json(summary)}, {"agreement", report::to_json(pairs)}};
    j["fleiss"] = {{"three_class", f3 ? json(*f3) : json(nullptr)}, {"binary", f2 ? json(*f2) : json(nullptr)}};
    j["majority"] = json::object();
    for (const auto& r : summary.rows) {
        if (r.rater != audit::kMajorityRow) continue;
        auto it = summary.excluded.find(r.dataset);
        j["majority"][r.dataset] = {{"n", r.n},
                                    {"supports", r.counts[index_of(Label::supports)]},
                                    {"partial", r.counts[index_of(Label::partial)]},
                                    {"does_not_support", r.counts[index_of(Label::does_not_support)]},
                                    {"excluded", it == summary.excluded.end() ? 0 : it->second}};
    }
    const std::vector<report::Table> out{report::distribution_table(summary), report::agreement_table(pairs, f3, f2)};
    report::write_bundle(ctx.outdir(), "agreement", j, out);
    for (const auto& t : out) ctx.out << t.markdown() << '\n';
}

void cmd_synth(Context& ctx, const std::string& config_path) {
    note_input(ctx, config_path);
    const auto cfg = fixtures::parse_synth_config(io::read_json_file(config_path));
    const auto ds = fixtures::synth_dataset(cfg);
    fixtures::write_dataset(ctx.outdir(), ds);
    ctx.out << fmt::format("{} records, {} fixtures, {} traces, {} runs, {} contested cases\n", ds.records.size(),
                           ds.fixtures.size(), ds.traces.size(), ds.manifests.size(),
                           ds.expected["contested_total"].get<std::size_t>());
}

void cmd_report(Context& ctx, const std::string& in_dir) {
    const fs::path dir = in_dir.empty() ? ctx.outdir() : fs::path(in_dir);
    std::error_code ec;
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        if (!e.is_regular_file() || e.path().extension() != ".md") continue;
        const auto stem = e.path().stem().string();
        if (stem == "report") continue;
        if (fs::exists(dir / (stem + ".json"))) names.push_back(stem);
    }
    if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
    if (names.empty()) throw ValidationError("no report bundles found in " + dir.string());
    std::sort(names.begin(), names.end());
    std::string md = "# Target sensitivity report\n";
    json all = json::object();
    for (const auto& n : names) {
        note_input(ctx, dir / (n + ".json"));
        md += "\n## " + n + "\n\n" + io::read_text(dir / (n + ".md"));
        all[n] = io::read_json_file(dir / (n + ".json"));
    }
    io::write_text(ctx.outdir() / "report.md", md);
    io::write_text(ctx.outdir() / "report.json", all.dump(2) + "\n");
    ctx.out << fmt::format("combined {} bundles\n", names.size());
}

void write_manifest_echo(const Context& ctx, const std::string& command, int status) {
    json inputs = json::array();
    for (const auto& p : ctx.inputs) {
        json e{{"path", p.string()}};
        std::error_code ec;
        if (fs::is_regular_file(p, ec)) {
            const auto text = io::read_text(p);
            e["bytes"] = text.size();
            e["fnv1a"] = judge::fnv1a_hex(text);
        }
        inputs.push_back(e);
    }
    json j{{"tool", "tiap"},
           {"version", kToolVersion},
           {"command", command},
           {"args", ctx.args},
           {"status", status},
           {"flags",
            {{"k", ctx.g.k},
             {"k_explicit", ctx.g.k_set},
             {"seed", ctx.g.seed},
             {"resamples", ctx.g.resamples},
             {"level", ctx.g.level},
             {"targets", ctx.g.targets},
             {"metric", ctx.g.metric},
             {"out", ctx.g.out}}},
           {"inputs", inputs}};
    io::write_text(ctx.outdir() / "manifest_echo.json", j.dump(2) + "\n");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Context ctx{{}, out, err, args, {}};
    auto& g = ctx.g;

    CLI::App app{"Audit retrieval benchmarks for scoring-target sensitivity", "tiap"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kToolVersion);
    auto* k_opt = app.add_option("--k", g.k, "Metric cutoff")->capture_default_str();
    app.add_option("--seed", g.seed, "Bootstrap seed")->capture_default_str();
    app.add_option("--resamples", g.resamples, "Bootstrap resamples")->capture_default_str();
    app.add_option("--level", g.level, "Confidence level")->capture_default_str();
    auto* t_opt = app.add_option("--targets", g.targets, "Comma separated targets")->capture_default_str();
    app.add_option("--metric", g.metric, "ndcg, mrr, recall or hit")->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();

    std::string store, fixtures_path, cases_path, config_path, verdicts_path, in_dir, labels, matched, t1 = "raw",
                                                                                                  t2 = "canonical";
    std::string buckets = "1-5,6-20,21-60";
    std::vector<std::string> traces, manifests, tables;
    std::size_t size = 0;
    double threshold = kDefaultStrongThreshold;
    bool common_valid = false, no_flips = false;

    auto* build = app.add_subcommand("build-targets", "Build Raw/Source/Canonical target sets and coverage");
    build->add_option("--store", store)->required();
    build->add_option("--fixtures", fixtures_path)->required();

    auto* rescore = app.add_subcommand("rescore", "Rescore saved traces under each target");
    rescore->add_option("--store", store)->required();
    rescore->add_option("--fixtures", fixtures_path)->required();
    rescore->add_option("--traces", traces, "Trace files or directories")->required();
    rescore->add_option("--manifests", manifests, "Manifest files or directories");

    auto* compare = app.add_subcommand("compare", "Shared-subset summaries, instability and winner flips");
    compare->add_option("--tables", tables, "Rescore tables or directories")->required();
    compare->add_option("--manifests", manifests);
    compare->add_option("--store", store, "With --fixtures, adds the coverage gap");
    compare->add_option("--fixtures", fixtures_path);
    compare->add_flag("--no-flips", no_flips, "Skip pairwise winner flips");

    auto* sweep = app.add_subcommand("sweep", "Pairwise winners across configurations on a matched subset");
    sweep->add_option("--tables", tables, "One table per configuration, in order")->required();
    sweep->add_option("--labels", labels, "Comma separated configuration labels");
    sweep->add_option("--matched", matched, "File of query ids, one per line");

    auto* mitigate = app.add_subcommand("mitigate", "Aggregation orderings, Kendall distances and agreement filter");
    mitigate->add_option("--tables", tables, "One table per provider")->required();
    mitigate->add_option("--labels", labels, "Comma separated provider labels");

    auto* gap = app.add_subcommand("coverage-gap", "Raw score gap between canonical-covered and uncovered queries");
    gap->add_option("--tables", tables)->required();
    gap->add_option("--store", store)->required();
    gap->add_option("--fixtures", fixtures_path)->required();
    gap->add_option("--manifests", manifests);

    auto* cats = app.add_subcommand("categories", "Instability per fixture category");
    cats->add_option("--tables", tables)->required();
    cats->add_option("--fixtures", fixtures_path)->required();
    cats->add_option("--t1", t1)->capture_default_str();
    cats->add_option("--t2", t2)->capture_default_str();

    auto* align = app.add_subcommand("align-answers", "Join disagreeing hits with answer scores");
    align->add_option("--tables", tables)->required();
    align->add_option("--fixtures", fixtures_path)->required();
    align->add_option("--t1", t1)->capture_default_str();
    align->add_option("--t2", t2)->capture_default_str();
    align->add_option("--strong-threshold", threshold)->capture_default_str();

    auto* extract = app.add_subcommand("extract-cases", "Extract contested credits");
    extract->add_option("--tables", tables)->required();
    extract->add_option("--store", store)->required();
    extract->add_option("--fixtures", fixtures_path)->required();
    extract->add_option("--traces", traces)->required();
    extract->add_option("--manifests", manifests);

    auto* sample = app.add_subcommand("sample-validation", "Rank-stratified validation sample");
    sample->add_option("--cases", cases_path)->required();
    sample->add_option("--size", size)->required();
    sample->add_option("--buckets", buckets)->capture_default_str();

    auto* judge_cmd = app.add_subcommand("judge", "Label contested cases with external judges");
    judge_cmd->add_option("--cases", cases_path)->required();
    judge_cmd->add_option("--judge-config", config_path)->required();

    auto* agree = app.add_subcommand("agreement", "Majority labels, distributions and judge agreement");
    agree->add_option("--verdicts", verdicts_path)->required();
    agree->add_option("--cases", cases_path, "Maps cases to datasets through their run manifests");
    agree->add_option("--manifests", manifests);
    agree->add_flag("--common-valid", common_valid, "Use only cases every judge labeled");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted effects");
    synth->add_option("--config", config_path)->required();

    auto* rep = app.add_subcommand("report", "Combine report bundles");
    rep->add_option("--in", in_dir, "Directory holding bundles (default: --out)");

    std::vector<const char*> argv{"tiap"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return 0;
    } catch (const CLI::Success&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }
    g.k_set = k_opt->count() > 0;
    g.targets_set = t_opt->count() > 0;

    std::string command;
    for (const auto* sc : app.get_subcommands()) command = sc->get_name();

    int status = 0;
    try {
        if (g.k == 0) throw ValidationError("--k must be at least 1");
        if (g.resamples == 0) throw ValidationError("--resamples must be at least 1");
        if (!(g.level > 0.0 && g.level < 1.0)) throw ValidationError("--level must lie in (0, 1)");
        parse_target_list(g.targets);
        parse_metric(g.metric);
        fs::create_directories(ctx.outdir());

        if (build->parsed()) cmd_build_targets(ctx, store, fixtures_path);
        else if (rescore->parsed()) cmd_rescore(ctx, store, fixtures_path, traces, manifests);
        else if (compare->parsed()) cmd_compare(ctx, {tables, manifests, store, fixtures_path, !no_flips});
        else if (sweep->parsed()) cmd_sweep(ctx, tables, labels, matched);
        else if (mitigate->parsed()) cmd_mitigate(ctx, tables, labels);
        else if (gap->parsed()) cmd_coverage_gap(ctx, tables, store, fixtures_path, manifests);
        else if (cats->parsed()) cmd_categories(ctx, tables, fixtures_path, t1, t2);
        else if (align->parsed()) cmd_align(ctx, tables, fixtures_path, t1, t2, threshold);
        else if (extract->parsed()) cmd_extract(ctx, tables, store, fixtures_path, traces, manifests);
        else if (sample->parsed()) cmd_sample(ctx, cases_path, size, buckets);
        else if (judge_cmd->parsed()) cmd_judge(ctx, cases_path, config_path);
        else if (agree->parsed()) cmd_agreement(ctx, verdicts_path, cases_path, manifests, common_valid);
        else if (synth->parsed()) cmd_synth(ctx, config_path);
        else if (rep->parsed()) cmd_report(ctx, in_dir);
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        status = 2;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << '\n';
        status = 2;
    } catch (const AuthError& e) {
        err << "authentication error: " << e.what() << '\n';
        status = 1;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        status = 1;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        status = 1;
    }
    try {
        write_manifest_echo(ctx, command, status);
    } catch (const std::exception& e) {
        err << "io error: " << e.what() << '\n';
        if (status == 0) status = 2;
    }
    return status;
}

}  // namespace tiap
