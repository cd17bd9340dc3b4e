#include "tiap/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "tiap/error.hpp"
#include "tiap/io.hpp"
#include "tiap/oracle.hpp"
#include "tiap/stats.hpp"

namespace tiap::fixtures {

using json = nlohmann::json;

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Fisher-Yates over 0..n-1 driven by the bootstrap index generator.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    stats::Resampler rs(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rs.next_index(i)]);
    return p;
}

std::string_view to_string(Population p) {
    switch (p) {
        case Population::any: return "any";
        case Population::covered: return "covered";
        case Population::uncovered: return "uncovered";
    }
    return "any";
}

Population parse_population(const std::string& s) {
    if (s == "any") return Population::any;
    if (s == "covered") return Population::covered;
    if (s == "uncovered") return Population::uncovered;
    throw ValidationError("unknown population '" + s + "' (expected any, covered or uncovered)");
}

std::optional<Label> plurality(const std::vector<std::optional<Label>>& labels) {
    int s = 0, p = 0, d = 0;
    for (const auto& l : labels) {
        if (!l) continue;
        if (*l == Label::supports) ++s;
        else if (*l == Label::partial) ++p;
        else ++d;
    }
    if (s + p + d == 0) return std::nullopt;
    const int top = std::max({s, p, d});
    const int tied = (s == top) + (p == top) + (d == top);
    if (tied == 1) return s == top ? Label::supports : p == top ? Label::partial : Label::does_not_support;
    if (p == top) return Label::partial;
    return Label::does_not_support;
}

// Vote templates for five judges, indexed by intended majority label. "-" is
// a judge that never produces a parseable label.
const std::map<Label, std::vector<std::string>>& five_judge_templates() {
    static const std::map<Label, std::vector<std::string>> t{
        {Label::supports, {"SSSSS", "SSSPD", "SSPD-", "SSS-D"}},
        {Label::partial, {"PPPPP", "PPPSD", "SSPPD", "PPDDS", "PPPP-"}},
        {Label::does_not_support, {"DDDDD", "DDDSP", "SSDD-", "DDSP-"}},
    };
    return t;
}

std::optional<Label> template_label(char c) {
    switch (c) {
        case 'S': return Label::supports;
        case 'P': return Label::partial;
        case 'D': return Label::does_not_support;
        default: return std::nullopt;
    }
}

std::vector<std::optional<Label>> planned_votes(Label target, std::size_t judges, std::size_t variant,
                                                std::size_t rotate) {
    std::vector<std::optional<Label>> out(judges, target);
    if (judges == 5) {
        const auto& options = five_judge_templates().at(target);
        const auto& tmpl = options[variant % options.size()];
        for (std::size_t j = 0; j < 5; ++j) out[(j + rotate) % 5] = template_label(tmpl[j]);
    } else if (judges >= 2 && variant % 2 == 1) {
        out[rotate % judges] = std::nullopt;
    }
    return out;
}

struct QueryInfo {
    std::string query_id;
    std::string anchor;
    std::optional<std::string> category;
};

std::string padded(char prefix, std::size_t i, std::size_t width) { return fmt::format("{}{:0{}}", prefix, i, width); }

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

}  // namespace

SynthConfig parse_synth_config(const json& j) {
    try {
        SynthConfig c;
        c.dataset_id = j.value("dataset_id", c.dataset_id);
        c.seed = j.value("seed", c.seed);
        c.n_queries = j.at("n_queries").get<std::size_t>();
        c.k = j.value("k", c.k);
        c.depth = j.value("depth", c.k);
        c.categories = j.value("categories", std::vector<std::string>{});
        c.answer_scores = j.value("answer_scores", true);
        for (const auto& s : j.at("stores")) {
            StoreSpec st;
            st.store_id = s.at("store_id").get<std::string>();
            st.facts_per_turn = s.value("facts_per_turn", std::size_t{1});
            st.canonical_coverage_rate = s.value("canonical_coverage_rate", 1.0);
            c.stores.push_back(st);
        }
        for (const auto& r : j.at("runs")) {
            RunSpec run;
            run.run_id = r.at("run_id").get<std::string>();
            run.store_id = r.at("store_id").get<std::string>();
            run.system_label = r.value("system_label", run.store_id);
            for (const auto& p : r.value("patterns", json::array())) {
                Pattern pat;
                pat.count = p.at("count").get<std::size_t>();
                pat.population = parse_population(p.value("population", std::string("any")));
                if (p.contains("category") && !p["category"].is_null()) pat.category = p["category"].get<std::string>();
                if (p.contains("raw_rank") && !p["raw_rank"].is_null()) pat.raw_rank = p["raw_rank"].get<std::size_t>();
                pat.desc_ranks = p.value("desc_ranks", std::vector<std::size_t>{});
                pat.omit_trace = p.value("omit_trace", false);
                run.patterns.push_back(pat);
            }
            c.runs.push_back(run);
        }
        if (j.contains("judges") && !j["judges"].is_null()) {
            const auto& jp = j["judges"];
            JudgePlan plan;
            plan.judges = jp.at("names").get<std::vector<std::string>>();
            plan.supports = jp.value("supports", std::size_t{0});
            plan.partial = jp.value("partial", std::size_t{0});
            plan.does_not_support = jp.value("does_not_support", std::size_t{0});
            plan.absent_cases = jp.value("absent_cases", std::size_t{0});
            c.judges = plan;
        }
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("synth config: ") + e.what());
    }
}

json to_json(const SynthConfig& c) {
    json j{{"dataset_id", c.dataset_id}, {"seed", c.seed},   {"n_queries", c.n_queries},
           {"k", c.k},                   {"depth", c.depth}, {"categories", c.categories},
           {"answer_scores", c.answer_scores}};
    j["stores"] = json::array();
    for (const auto& s : c.stores)
        j["stores"].push_back({{"store_id", s.store_id},
                               {"facts_per_turn", s.facts_per_turn},
                               {"canonical_coverage_rate", s.canonical_coverage_rate}});
    j["runs"] = json::array();
    for (const auto& r : c.runs) {
        json pats = json::array();
        for (const auto& p : r.patterns) {
            json pj{{"count", p.count}, {"population", to_string(p.population)}, {"desc_ranks", p.desc_ranks}};
            pj["category"] = p.category ? json(*p.category) : json(nullptr);
            pj["raw_rank"] = p.raw_rank ? json(*p.raw_rank) : json(nullptr);
            if (p.omit_trace) pj["omit_trace"] = true;
            pats.push_back(pj);
        }
        j["runs"].push_back(
            {{"run_id", r.run_id}, {"store_id", r.store_id}, {"system_label", r.system_label}, {"patterns", pats}});
    }
    if (c.judges) {
        const auto& p = *c.judges;
        j["judges"] = {{"names", p.judges},
                       {"supports", p.supports},
                       {"partial", p.partial},
                       {"does_not_support", p.does_not_support},
                       {"absent_cases", p.absent_cases}};
    }
    return j;
}

json oracle_report(const std::vector<MemoryRecord>& records, const std::vector<QueryFixture>& fixtures,
                   const std::vector<RankedTrace>& traces, const std::vector<RunManifest>& manifests, std::size_t k) {
    constexpr TargetKind kinds[3] = {TargetKind::raw, TargetKind::source, TargetKind::canonical};
    const int kk = static_cast<int>(k);

    std::vector<const QueryFixture*> queries;
    for (const auto& f : fixtures) queries.push_back(&f);
    std::sort(queries.begin(), queries.end(),
              [](const QueryFixture* a, const QueryFixture* b) { return a->query_id < b->query_id; });
    std::vector<const RunManifest*> runs;
    for (const auto& m : manifests) runs.push_back(&m);
    std::sort(runs.begin(), runs.end(),
              [](const RunManifest* a, const RunManifest* b) { return a->run_id < b->run_id; });

    json report;
    report["k"] = k;
    report["runs"] = json::object();
    json cases = json::array();
    std::vector<double> gaps;

    for (const auto* m : runs) {
        std::vector<MemoryRecord> recs;
        for (const auto& r : records)
            if (r.store_id == m->store_id) recs.push_back(r);

        struct Scored {
            bool present[3] = {false, false, false};
            oracle::Scores s[3];
            bool covered = false;
        };
        std::vector<Scored> scored(queries.size());
        std::size_t targetless[3] = {0, 0, 0};
        std::size_t missing = 0;

        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            const auto& q = *queries[qi];
            const RankedTrace* trace = nullptr;
            for (const auto& t : traces)
                if (t.run_id == m->run_id && t.query_id == q.query_id) trace = &t;
            std::vector<std::string> ranking;
            if (trace)
                for (const auto& e : trace->ranking) ranking.push_back(e.memory_id);
            scored[qi].covered = !oracle::credited(recs, q.source_anchors, TargetKind::canonical).empty();
            if (!trace) {
                ++missing;
                continue;
            }
            for (int t = 0; t < 3; ++t) {
                const auto target = oracle::credited(recs, q.source_anchors, kinds[t]);
                if (target.empty()) {
                    ++targetless[t];
                    continue;
                }
                scored[qi].present[t] = true;
                scored[qi].s[t] = oracle::score(ranking, target, kk);
            }
        }

        auto metric_means = [&](int t, const std::vector<std::size_t>& idx) {
            double nd = 0, mr = 0, rc = 0, ht = 0;
            for (auto i : idx) {
                nd += scored[i].s[t].ndcg;
                mr += scored[i].s[t].mrr;
                rc += scored[i].s[t].recall;
                ht += scored[i].s[t].hit ? 1.0 : 0.0;
            }
            const double n = static_cast<double>(idx.size());
            return json{{"n", idx.size()}, {"ndcg", nd / n}, {"mrr", mr / n}, {"recall", rc / n}, {"hit", ht / n}};
        };

        json run;
        run["store_id"] = m->store_id;
        run["evaluated"] = queries.size();
        run["missing_trace"] = missing;
        run["targets"] = json::object();
        run["targetless"] = json::object();
        for (int t = 0; t < 3; ++t) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < queries.size(); ++i)
                if (scored[i].present[t]) idx.push_back(i);
            const std::string name(tiap::to_string(kinds[t]));
            run["targetless"][name] = targetless[t];
            run["targets"][name] = idx.empty() ? json{{"n", 0}} : metric_means(t, idx);
        }

        std::vector<std::size_t> all3;
        for (std::size_t i = 0; i < queries.size(); ++i)
            if (scored[i].present[0] && scored[i].present[1] && scored[i].present[2]) all3.push_back(i);
        json shared{{"n", all3.size()}};
        if (!all3.empty())
            for (int t = 0; t < 3; ++t) shared[std::string(tiap::to_string(kinds[t]))] = metric_means(t, all3);
        run["shared"] = shared;

        run["pairs"] = json::object();
        for (int a = 0; a < 3; ++a) {
            for (int b = a + 1; b < 3; ++b) {
                std::size_t n = 0, hit = 0, top1 = 0, changed = 0;
                for (const auto& sq : scored) {
                    if (!sq.present[a] || !sq.present[b]) continue;
                    ++n;
                    if (sq.s[a].hit != sq.s[b].hit) ++hit;
                    if ((sq.s[a].first_rank == 1) != (sq.s[b].first_rank == 1)) ++top1;
                    if (sq.s[a].ndcg != sq.s[b].ndcg) ++changed;
                }
                const auto key = fmt::format("{}-{}", tiap::to_string(kinds[a]), tiap::to_string(kinds[b]));
                run["pairs"][key] = {{"shared_n", n}, {"hit_flips", hit}, {"top1_flips", top1}, {"ndcg_changed", changed}};
            }
        }

        std::size_t contested = 0;
        for (auto i : all3) {
            const auto& sq = scored[i];
            if (!sq.s[0].hit && sq.s[1].hit && sq.s[2].hit) {
                ++contested;
                cases.push_back(m->run_id + ":" + queries[i]->query_id);
            }
        }
        run["contested"] = contested;

        std::vector<double> cov, unc;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            if (!scored[i].present[0]) continue;
            (scored[i].covered ? cov : unc).push_back(scored[i].s[0].ndcg);
        }
        if (cov.empty() || unc.empty()) {
            run["coverage_gap"] = nullptr;
        } else {
            const double c = mean_of(cov), u = mean_of(unc);
            run["coverage_gap"] = {{"covered_n", cov.size()},
                                   {"uncovered_n", unc.size()},
                                   {"covered_mean", c},
                                   {"uncovered_mean", u},
                                   {"gap", c - u}};
            gaps.push_back(c - u);
        }
        report["runs"][m->run_id] = run;
    }
    report["contested_total"] = cases.size();
    report["cases"] = cases;
    report["coverage_gap_mean"] = gaps.empty() ? json(nullptr) : json(mean_of(gaps));
    return report;
}

SynthDataset synth_dataset(const SynthConfig& config) {
    const auto& c = config;
    if (c.n_queries == 0) throw ValidationError("synth config: n_queries must be positive");
    if (c.k == 0 || c.depth == 0) throw ValidationError("synth config: k and depth must be positive");
    if (c.stores.empty()) throw ValidationError("synth config: at least one store is required");

    std::map<std::string, const StoreSpec*> stores;
    for (const auto& s : c.stores) {
        if (s.canonical_coverage_rate < 0.0 || s.canonical_coverage_rate > 1.0)
            throw ValidationError("store '" + s.store_id + "': canonical_coverage_rate must lie in [0, 1]");
        if (s.facts_per_turn == 0 && s.canonical_coverage_rate > 0.0)
            throw ValidationError("store '" + s.store_id + "': covered queries need facts_per_turn >= 1");
        if (!stores.emplace(s.store_id, &s).second)
            throw ValidationError("duplicate store_id '" + s.store_id + "'");
    }
    std::set<std::string> run_ids;
    for (const auto& r : c.runs) {
        if (!run_ids.insert(r.run_id).second) throw ValidationError("duplicate run_id '" + r.run_id + "'");
        if (!stores.count(r.store_id))
            throw ValidationError("run '" + r.run_id + "' references unknown store '" + r.store_id + "'");
    }

    const std::size_t width = std::max<std::size_t>(4, fmt::format("{}", c.n_queries).size());
    std::vector<QueryInfo> queries(c.n_queries);
    for (std::size_t i = 0; i < c.n_queries; ++i) {
        queries[i].query_id = padded('q', i + 1, width);
        queries[i].anchor = padded('s', i + 1, width);
        if (!c.categories.empty()) queries[i].category = c.categories[i % c.categories.size()];
    }

    SynthDataset ds;
    ds.config = c;

    // Fixtures.
    stats::Resampler score_rng(c.seed ^ fnv1a64("answer_score"));
    for (std::size_t i = 0; i < c.n_queries; ++i) {
        QueryFixture f;
        f.query_id = queries[i].query_id;
        f.source_anchors = {queries[i].anchor};
        f.category = queries[i].category;
        f.reference_answer = fmt::format("Answer {}.", i + 1);
        f.query_text = fmt::format("Question {} about {}?", i + 1, queries[i].anchor);
        if (c.answer_scores) f.answer_score = static_cast<double>(score_rng.next_index(101)) / 100.0;
        ds.fixtures.push_back(std::move(f));
    }

    // Stores: coverage flags, records, noise pools.
    std::map<std::string, std::vector<bool>> covered;
    for (const auto& s : c.stores) {
        const auto n_cov =
            static_cast<std::size_t>(std::llround(s.canonical_coverage_rate * static_cast<double>(c.n_queries)));
        auto& flags = covered[s.store_id];
        flags.assign(c.n_queries, false);
        const auto order = permutation(c.n_queries, c.seed ^ fnv1a64("coverage/" + s.store_id));
        for (std::size_t i = 0; i < n_cov; ++i) flags[order[i]] = true;

        for (std::size_t i = 0; i < c.n_queries; ++i) {
            const auto& q = queries[i];
            ds.records.push_back({s.store_id + "/" + q.anchor + "/raw", s.store_id, q.anchor, MemoryKind::raw,
                                  fmt::format("Turn {}: the speaker mentions detail {}.", q.anchor, i + 1)});
            if (!flags[i]) continue;
            for (std::size_t j = 0; j < s.facts_per_turn; ++j)
                ds.records.push_back({fmt::format("{}/{}/f{}", s.store_id, q.anchor, j + 1), s.store_id, q.anchor,
                                      MemoryKind::transformed,
                                      fmt::format("Fact {} extracted from {}.", j + 1, q.anchor)});
        }
        for (std::size_t n = 0; n < c.depth; ++n)
            ds.records.push_back({fmt::format("{}/noise/{}", s.store_id, n + 1), s.store_id, std::nullopt,
                                  MemoryKind::transformed, fmt::format("Unrelated note {}.", n + 1)});
    }

    // Runs.
    for (std::size_t ri = 0; ri < c.runs.size(); ++ri) {
        const auto& run = c.runs[ri];
        const auto& store = *stores.at(run.store_id);
        const auto& flags = covered.at(run.store_id);

        struct Assigned {
            const Pattern* pattern = nullptr;
        };
        std::vector<Assigned> assigned(c.n_queries);
        const auto order = permutation(c.n_queries, c.seed ^ fnv1a64("run/" + run.run_id));

        for (std::size_t pi = 0; pi < run.patterns.size(); ++pi) {
            const auto& p = run.patterns[pi];
            const auto where = fmt::format("run '{}' pattern {}", run.run_id, pi + 1);
            std::set<std::size_t> used;
            if (p.raw_rank) {
                if (*p.raw_rank == 0 || *p.raw_rank > c.depth)
                    throw ValidationError(fmt::format("{}: raw_rank {} outside 1..{}", where, *p.raw_rank, c.depth));
                used.insert(*p.raw_rank);
            }
            if (p.desc_ranks.size() > store.facts_per_turn)
                throw ValidationError(fmt::format("{}: {} descendants requested but store '{}' extracts {} per turn",
                                                  where, p.desc_ranks.size(), store.store_id, store.facts_per_turn));
            for (auto r : p.desc_ranks) {
                if (r == 0 || r > c.depth)
                    throw ValidationError(fmt::format("{}: descendant rank {} outside 1..{}", where, r, c.depth));
                if (!used.insert(r).second) throw ValidationError(fmt::format("{}: rank {} used twice", where, r));
            }
            if (!p.desc_ranks.empty() && p.population == Population::uncovered)
                throw ValidationError(where + ": uncovered queries have no descendants to rank");

            const bool need_covered = p.population == Population::covered || !p.desc_ranks.empty();
            std::size_t taken = 0;
            for (auto qi : order) {
                if (taken == p.count) break;
                if (assigned[qi].pattern) continue;
                if (need_covered && !flags[qi]) continue;
                if (p.population == Population::uncovered && flags[qi]) continue;
                if (p.category && queries[qi].category != p.category) continue;
                assigned[qi].pattern = &p;
                ++taken;
            }
            if (taken < p.count)
                throw ValidationError(fmt::format("{}: asks for {} queries but only {} eligible remain", where,
                                                  p.count, taken));
        }

        for (std::size_t qi = 0; qi < c.n_queries; ++qi) {
            const auto* p = assigned[qi].pattern;
            if (p && p->omit_trace) continue;
            const auto& q = queries[qi];
            std::vector<std::string> slots(c.depth);
            if (p) {
                if (p->raw_rank) slots[*p->raw_rank - 1] = run.store_id + "/" + q.anchor + "/raw";
                for (std::size_t j = 0; j < p->desc_ranks.size(); ++j)
                    slots[p->desc_ranks[j] - 1] = fmt::format("{}/{}/f{}", run.store_id, q.anchor, j + 1);
            }
            const auto noise = permutation(c.depth, c.seed ^ fnv1a64(run.run_id + "/" + q.query_id));
            std::size_t ni = 0;
            for (auto& slot : slots)
                if (slot.empty()) slot = fmt::format("{}/noise/{}", run.store_id, noise[ni++] + 1);

            RankedTrace t;
            t.run_id = run.run_id;
            t.query_id = q.query_id;
            t.depth = c.depth;
            for (std::size_t pos = 0; pos < slots.size(); ++pos)
                t.ranking.push_back({slots[pos], static_cast<double>(c.depth - pos) / static_cast<double>(c.depth)});
            ds.traces.push_back(std::move(t));
        }

        RunManifest m;
        m.run_id = run.run_id;
        m.dataset_id = c.dataset_id;
        m.system_label = run.system_label;
        m.store_id = run.store_id;
        m.depth = c.depth;
        m.k = c.k;
        m.notes = "synthetic";
        ds.manifests.push_back(m);
    }
    std::sort(ds.traces.begin(), ds.traces.end(), [](const RankedTrace& a, const RankedTrace& b) {
        return std::tie(a.run_id, a.query_id) < std::tie(b.run_id, b.query_id);
    });

    ds.expected = oracle_report(ds.records, ds.fixtures, ds.traces, ds.manifests, c.k);

    if (c.judges) {
        const auto& plan = *c.judges;
        if (plan.judges.empty()) throw ValidationError("judge plan lists no judges");
        const auto case_ids = ds.expected["cases"].get<std::vector<std::string>>();
        const auto planned = plan.supports + plan.partial + plan.does_not_support + plan.absent_cases;
        if (planned != case_ids.size())
            throw ValidationError(fmt::format("judge plan covers {} cases but the runs produce {} contested cases",
                                              planned, case_ids.size()));

        const auto order = permutation(case_ids.size(), c.seed ^ fnv1a64("judge-plan"));
        std::vector<std::optional<Label>> intended(case_ids.size());
        std::vector<std::size_t> variant(case_ids.size(), 0);
        std::size_t pos = 0;
        auto fill = [&](std::optional<Label> l, std::size_t count) {
            for (std::size_t i = 0; i < count; ++i, ++pos) {
                intended[order[pos]] = l;
                variant[order[pos]] = i;
            }
        };
        fill(std::nullopt, plan.absent_cases);
        fill(Label::supports, plan.supports);
        fill(Label::partial, plan.partial);
        fill(Label::does_not_support, plan.does_not_support);

        std::size_t counts[3] = {0, 0, 0};
        for (std::size_t i = 0; i < case_ids.size(); ++i) {
            PlannedCase pc;
            pc.case_id = case_ids[i];
            if (intended[i])
                pc.labels = planned_votes(*intended[i], plan.judges.size(), variant[i], i);
            else
                pc.labels.assign(plan.judges.size(), std::nullopt);
            pc.expected_majority = plurality(pc.labels);
            if (pc.expected_majority != intended[i])
                throw ValidationError("judge plan template does not yield its intended majority");
            if (pc.expected_majority) ++counts[index_of(*pc.expected_majority)];
            ds.judge_plan.push_back(std::move(pc));
        }
        const auto valid = counts[0] + counts[1] + counts[2];
        ds.expected["majority"] = {{"judges", plan.judges},
                                   {"n", valid},
                                   {"excluded", plan.absent_cases},
                                   {"supports", counts[0]},
                                   {"partial", counts[1]},
                                   {"does_not_support", counts[2]}};
    }
    return ds;
}

void write_dataset(const std::filesystem::path& dir, const SynthDataset& ds) {
    std::filesystem::create_directories(dir / "manifests");
    {
        auto os = io::open_out(dir / "store.jsonl");
        io::write_jsonl(os, ds.records);
    }
    {
        auto os = io::open_out(dir / "fixtures.jsonl");
        io::write_jsonl(os, ds.fixtures);
    }
    {
        auto os = io::open_out(dir / "traces.jsonl");
        io::write_jsonl(os, ds.traces);
    }
    for (const auto& m : ds.manifests) io::write_text(dir / "manifests" / (m.run_id + ".json"), io::to_json(m).dump(2) + "\n");
    io::write_text(dir / "expected_report.json", ds.expected.dump(2) + "\n");
    io::write_text(dir / "synth_config.json", to_json(ds.config).dump(2) + "\n");
    if (!ds.judge_plan.empty()) {
        auto os = io::open_out(dir / "judge_plan.jsonl");
        for (const auto& pc : ds.judge_plan) {
            json labels = json::array();
            for (const auto& l : pc.labels) labels.push_back(l ? json(tiap::to_string(*l)) : json(nullptr));
            json j{{"case_id", pc.case_id}, {"labels", labels}};
            j["expected_majority"] = pc.expected_majority ? json(tiap::to_string(*pc.expected_majority)) : json(nullptr);
            os << j.dump() << '\n';
        }
    }
}

}  // namespace tiap::fixtures
