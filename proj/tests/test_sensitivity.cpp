#include <doctest.h>

#include "support/builders.hpp"
#include "support/synth_tables.hpp"
#include "tiap/error.hpp"
#include "tiap/sensitivity.hpp"

using namespace tiap;
using tiap::testing::manual_table;
using tiap::testing::RowSpec;

namespace {

constexpr auto R = TargetKind::raw;
constexpr auto S = TargetKind::source;
constexpr auto C = TargetKind::canonical;

std::vector<RowSpec> triplet(const std::string& q, double r, double s, double c) {
    return {{q, R, r, r > 0}, {q, S, s, s > 0}, {q, C, c, c > 0}};
}

RescoreTable from_triplets(const std::string& run, const std::vector<std::array<double, 3>>& xs) {
    std::vector<RowSpec> rows;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto t = triplet("q" + std::to_string(10 + i), xs[i][0], xs[i][1], xs[i][2]);
        rows.insert(rows.end(), t.begin(), t.end());
    }
    return manual_table(run, rows);
}

std::vector<LabeledTable> labeled(const testing::SynthTables& st) {
    std::vector<LabeledTable> out;
    for (const auto& t : st.tables) out.push_back({t.run_id, &t});
    return out;
}

}  // namespace

TEST_CASE("instability: identity and planted change rate") {
    std::vector<std::array<double, 3>> xs;
    for (int i = 0; i < 10; ++i) xs.push_back({i == 0 ? 0.5 : 1.0, 0.5, 0.5});
    const auto t = from_triplets("run", xs);
    for (auto k : kAllTargets) {
        const auto same = instability_matrix(t, k, k);
        CHECK(same.hit_flips == 0);
        CHECK(same.top1_flips == 0);
        CHECK(same.ndcg_changed == 0);
        CHECK(same.change_rate == 0.0);
    }
    const auto c = instability_matrix(t, R, C);
    CHECK(c.shared_n == 10);
    CHECK(c.ndcg_changed == 9);
    CHECK(c.change_rate == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("instability: hit and top-1 flips") {
    const auto t = manual_table("run", {{"q1", R, 1.0, true, 1},
                                        {"q1", C, 0.0, false},
                                        {"q2", R, 0.5, true, 3},
                                        {"q2", C, 1.0, true, 1},
                                        {"q3", R, 0.5, true, 3},
                                        {"q3", C, 0.5, true, 3}});
    const auto a = instability_matrix(t, R, C);
    const auto b = instability_matrix(t, C, R);
    CHECK(a.hit_flips == 1);
    CHECK(a.top1_flips == 2);
    CHECK(a.ndcg_changed == 2);
    CHECK(a.hit_flips == b.hit_flips);
    CHECK(a.top1_flips == b.top1_flips);
}

TEST_CASE("instability schema holds a fully populated row") {
    // 899 shared, 758 changed
    std::vector<std::array<double, 3>> xs;
    for (int i = 0; i < 899; ++i) xs.push_back({i < 758 ? 0.25 : 0.5, 0.5, 0.5});
    const auto c = instability_matrix(from_triplets("lexical", xs), R, C);
    CHECK(c.shared_n == 899);
    CHECK(c.ndcg_changed == 758);
    CHECK(c.change_rate == doctest::Approx(0.843).epsilon(5e-4));
}

TEST_CASE("instability on an empty shared subset throws") {
    const auto t = manual_table("run", {{"q1", R, 1.0, true}}, {R, C});
    CHECK_THROWS_AS(instability_matrix(t, R, C), ValidationError);
}

TEST_CASE("system gap identity and antisymmetry") {
    const auto a = from_triplets("a", {{1.0, 0.5, 0.25}, {0.0, 1.0, 0.5}});
    const auto b = from_triplets("b", {{0.5, 0.5, 1.0}, {0.5, 0.0, 0.25}});
    for (auto t : kAllTargets) {
        CHECK(system_gap(a, a, MetricKind::ndcg, t) == 0.0);
        CHECK(system_gap(a, b, MetricKind::ndcg, t) == -system_gap(b, a, MetricKind::ndcg, t));
    }
    const LabeledTable la{"A", &a};
    const auto w = winner_flip(la, la, MetricKind::ndcg, kAllTargets);
    CHECK_FALSE(w.flip);
    for (const auto& g : w.per_target) {
        CHECK(g.gap == 0.0);
        CHECK(g.winner == kTie);
    }
    const auto disjoint = manual_table("c", {{"zz", R, 1.0, true}, {"zz", S, 1.0, true}, {"zz", C, 1.0, true}});
    CHECK_THROWS_AS(system_gap(a, disjoint, MetricKind::ndcg, R), ValidationError);
}

TEST_CASE("winner flip flag equals a sign change among nonzero gaps") {
    const auto a = from_triplets("a", {{1.0, 0.5, 0.5}, {1.0, 0.5, 0.5}});
    const auto b = from_triplets("b", {{0.5, 0.5, 1.0}, {0.5, 0.5, 1.0}});
    const auto w = winner_flip({"A", &a}, {"B", &b}, MetricKind::ndcg, kAllTargets);
    CHECK(w.flip);
    CHECK(w.per_target[0].winner == "A");
    CHECK(w.per_target[1].winner == kTie);
    CHECK(w.per_target[2].winner == "B");
    const std::vector<TargetKind> rs{R, S};
    CHECK_FALSE(winner_flip({"A", &a}, {"B", &b}, MetricKind::ndcg, rs).flip);
}

TEST_CASE("bundled flip fixture") {
    const auto st = testing::rescore_synth(testing::load_config("flip.json"));
    REQUIRE(st.tables.size() == 2);
    const auto w = winner_flip({"F1", &st.tables[0]}, {"F5", &st.tables[1]}, MetricKind::ndcg, kAllTargets);
    CHECK(w.flip);
    CHECK(w.per_target[0].winner == "F1");
    CHECK(w.per_target[1].winner == "F5");
    CHECK(w.per_target[2].winner == "F1");
    CHECK(w.shared_n == 40);
}

TEST_CASE("density sweep reproduces the target-dependent winner grid") {
    const auto st = testing::rescore_synth(testing::load_config("density_sweep.json"));
    const auto configs = labeled(st);
    const auto s = sweep_winner_table(configs, MetricKind::ndcg, kAllTargets);
    REQUIRE(s.cells.size() == 3);
    CHECK(s.matched_n == 40);
    using V = std::vector<std::string>;
    CHECK(s.cells[0].winners == V{"lexical-F1", "lexical-F5", "lexical-F1"});
    CHECK(s.cells[1].winners == V{"lexical-F1", "lexical-F8", "lexical-F1"});
    CHECK(s.cells[2].winners == V{"lexical-F5", "lexical-F8", "lexical-F8"});
}

TEST_CASE("identical configs tie everywhere") {
    const auto st = testing::rescore_synth(testing::load_config("flip.json"));
    std::vector<LabeledTable> configs{{"x", &st.tables[0]}, {"y", &st.tables[0]}, {"z", &st.tables[0]}};
    const auto s = sweep_winner_table(configs, MetricKind::ndcg, kAllTargets);
    for (const auto& c : s.cells)
        for (const auto& w : c.winners) CHECK(w == kTie);
}

TEST_CASE("planted ordering F1 < F5 < F8 under all targets") {
    fixtures::SynthConfig cfg;
    cfg.dataset_id = "order";
    cfg.n_queries = 30;
    cfg.k = 60;
    cfg.depth = 60;
    cfg.stores = {{"F1", 1, 1.0}, {"F5", 5, 1.0}, {"F8", 8, 1.0}};
    cfg.runs = {{"F1", "F1", "F1", {{30, fixtures::Population::covered, std::nullopt, 5, {6}, false}}},
                {"F5", "F5", "F5", {{30, fixtures::Population::covered, std::nullopt, 3, {4, 5, 6, 7, 8}, false}}},
                {"F8", "F8", "F8",
                 {{30, fixtures::Population::covered, std::nullopt, 1, {2, 3, 4, 5, 6, 7, 8, 9}, false}}}};
    const auto st = testing::rescore_synth(cfg);
    const auto s = sweep_winner_table(labeled(st), MetricKind::ndcg, kAllTargets);
    CHECK(s.cells[0].winners == std::vector<std::string>{"F5", "F5", "F5"});
    CHECK(s.cells[1].winners == std::vector<std::string>{"F8", "F8", "F8"});
    CHECK(s.cells[2].winners == std::vector<std::string>{"F8", "F8", "F8"});
}

TEST_CASE("sweep rejects mismatched subsets") {
    const auto a = from_triplets("a", {{1.0, 1.0, 1.0}, {0.5, 0.5, 0.5}});
    const auto b = from_triplets("b", {{1.0, 1.0, 1.0}});
    std::vector<LabeledTable> configs{{"a", &a}, {"b", &b}};
    CHECK_THROWS_AS(sweep_winner_table(configs, MetricKind::ndcg, kAllTargets), ValidationError);
    const std::vector<QueryId> matched{"q10"};
    CHECK(sweep_winner_table(configs, MetricKind::ndcg, kAllTargets, std::span<const QueryId>(matched)).matched_n == 1);
}

TEST_CASE("aggregation of triplets") {
    for (auto a : {Aggregation::arith_mean, Aggregation::geom_mean, Aggregation::min})
        CHECK(aggregate_triplet(a, 0.37, 0.37, 0.37) == 0.37);
    CHECK(aggregate_triplet(Aggregation::arith_mean, 0.0, 0.5, 1.0) == 0.5);
    CHECK(aggregate_triplet(Aggregation::min, 0.0, 0.5, 1.0) == 0.0);
    CHECK(aggregate_triplet(Aggregation::geom_mean, 0.0, 0.5, 1.0) == 0.0);
    CHECK(parse_aggregation("geom") == Aggregation::geom_mean);
    CHECK_THROWS_AS(parse_aggregation("max"), ValidationError);
}

TEST_CASE("min aggregation recovers a planted raw ordering") {
    // Raw is the per-query minimum for every provider, so min-aggregation equals Raw.
    std::vector<RescoreTable> ts;
    const std::vector<std::string> labels{"p1", "p2", "p3", "p4"};
    const std::vector<double> raw{0.3, 0.7, 0.5, 0.1};
    for (std::size_t i = 0; i < labels.size(); ++i)
        ts.push_back(from_triplets(labels[i], {{raw[i], 0.9, 1.0}, {raw[i], 1.0, 0.95}}));
    std::vector<LabeledTable> ps;
    for (std::size_t i = 0; i < ts.size(); ++i) ps.push_back({labels[i], &ts[i]});
    const auto by_raw = target_ranking(ps, R);
    const auto by_min = aggregate_rankings(ps, Aggregation::min);
    CHECK(by_raw.ordering == std::vector<std::string>{"p2", "p3", "p1", "p4"});
    CHECK(kendall_tau_distance(by_raw.ordering, by_min.ordering) == 0);

    std::vector<LabeledTable> one{ps[0]};
    for (auto a : {Aggregation::arith_mean, Aggregation::geom_mean, Aggregation::min})
        CHECK(aggregate_rankings(one, a).ordering == std::vector<std::string>{"p1"});

    const auto partial = manual_table("x", {{"q", R, 1.0, true}}, {R});
    std::vector<LabeledTable> bad{{"x", &partial}};
    CHECK_THROWS_AS(aggregate_rankings(bad, Aggregation::min), ValidationError);
}

TEST_CASE("kendall tau distance") {
    const std::vector<std::string> a{"a", "b", "c", "d"};
    const std::vector<std::string> rev{"d", "c", "b", "a"};
    const std::vector<std::string> swap{"b", "a", "c", "d"};
    CHECK(kendall_tau_distance(a, a) == 0);
    CHECK(kendall_tau_distance(a, rev) == 6);
    CHECK(kendall_tau_distance(a, swap) == 1);
    const std::vector<std::string> other{"a", "b", "c", "e"};
    CHECK_THROWS_AS(kendall_tau_distance(a, other), ValidationError);
}

TEST_CASE("agreement filter") {
    const auto all = from_triplets("a", {{1.0, 1.0, 1.0}, {0.5, 0.5, 0.5}});
    CHECK(agreement_filter(all).retained_fraction == 1.0);

    const auto src_only = from_triplets("b", {{0.0, 0.5, 0.0}, {1.0, 1.0, 1.0}});
    const auto f = agreement_filter(src_only);
    CHECK(f.retained == std::vector<QueryId>{"q11"});

    // 8 of 10 agree; retained spreads average to 0.2
    std::vector<std::array<double, 3>> xs;
    for (int i = 0; i < 4; ++i) xs.push_back({0.5, 0.6, 0.7});
    for (int i = 0; i < 4; ++i) xs.push_back({0.4, 0.5, 0.6});
    xs.push_back({0.0, 1.0, 1.0});
    xs.push_back({1.0, 0.0, 0.0});
    const auto p = agreement_filter(from_triplets("c", xs));
    CHECK(p.considered == 10);
    CHECK(p.retained.size() == 8);
    CHECK(p.retained_fraction == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(p.mean_spread == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("category breakdown") {
    std::vector<RowSpec> rows;
    std::vector<QueryFixture> fx;
    for (int i = 0; i < 8; ++i) {
        const auto q = "q" + std::to_string(i);
        const bool change = i < 4 ? (i % 2 == 0) : true;
        rows.push_back({q, R, 0.5, true});
        rows.push_back({q, C, change ? 1.0 : 0.5, true});
        QueryFixture f;
        f.query_id = q;
        f.source_anchors = {"s"};
        f.category = i < 4 ? "A" : "B";
        fx.push_back(f);
    }
    rows.push_back({"q9", R, 0.5, true});
    rows.push_back({"q9", C, 0.5, true});
    fx.push_back({"q9", {"s"}, std::nullopt, std::nullopt, std::nullopt, std::nullopt});
    const auto t = manual_table("run", rows, {R, C});
    const auto cells = category_breakdown(t, fx, R, C);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].category == "A");
    CHECK(cells[0].cell.change_rate == 0.5);
    CHECK(cells[1].category == "B");
    CHECK(cells[1].cell.change_rate == 1.0);
    CHECK(cells[2].category == kUncategorized);
    CHECK(cells[2].cell.change_rate == 0.0);

    for (auto& f : fx) f.category = "only";
    const auto single = category_breakdown(t, fx, R, C);
    REQUIRE(single.size() == 1);
    const auto global = instability_matrix(t, R, C);
    CHECK(single[0].cell.ndcg_changed == global.ndcg_changed);
    CHECK(single[0].cell.shared_n == global.shared_n);
}

TEST_CASE("answer alignment") {
    std::vector<QueryFixture> fx;
    auto add = [&](const std::string& q, std::optional<double> s) {
        fx.push_back({q, {"s"}, std::nullopt, std::nullopt, s, std::nullopt});
    };
    add("q1", 0.2);
    add("q2", 0.4);
    add("q3", 0.9);
    add("q4", std::nullopt);
    const auto t = manual_table("run", {{"q1", R, 1.0, true},
                                        {"q1", C, 0.0, false},
                                        {"q2", R, 1.0, true},
                                        {"q2", C, 0.0, false},
                                        {"q3", R, 0.0, false},
                                        {"q3", C, 1.0, true},
                                        {"q4", R, 0.0, false},
                                        {"q4", C, 1.0, true}},
                                    {R, C});
    const auto a = answer_alignment(t, fx, R, C, 0.5);
    CHECK(a.only_t1.n == 2);
    CHECK(a.only_t1.mean_score == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(a.only_t1.strong_fraction == 0.0);
    CHECK(a.only_t2.n == 1);
    CHECK(a.only_t2.strong_fraction == 1.0);
    CHECK(a.skipped_no_score == 1);

    const auto agree = manual_table("run", {{"q1", R, 1.0, true}, {"q1", C, 1.0, true}}, {R, C});
    const auto z = answer_alignment(agree, fx, R, C);
    CHECK(z.only_t1.n == 0);
    CHECK(z.only_t2.n == 0);
}
