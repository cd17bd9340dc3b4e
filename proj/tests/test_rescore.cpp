#include <doctest.h>

#include <sstream>

#include "support/builders.hpp"
#include "tiap/error.hpp"
#include "tiap/io.hpp"
#include "tiap/rescore.hpp"

using namespace tiap;
using tiap::testing::Builder;
using tiap::testing::manual_table;
using tiap::testing::RowSpec;

namespace {

constexpr auto R = TargetKind::raw;
constexpr auto S = TargetKind::source;
constexpr auto C = TargetKind::canonical;

std::string dump(const RescoreTable& t) {
    std::ostringstream os;
    io::write_rescore(os, t);
    return os.str();
}

}  // namespace

TEST_CASE("raw at rank 1, single descendant further down") {
    Builder b;
    b.raw("r1", "s1").fact("f1", "s1").raw("r2", "s2").fact("f2", "s2").noise("n1").noise("n2");
    b.query("q1", {"s1"}).rank("q1", {"r1", "f1", "n1", "n2"});
    b.query("q2", {"s2"}).rank("q2", {"r2", "n1", "f2", "n2"});
    const auto t = b.rescore("run", 60);
    CHECK(t.at("q1", R).ndcg == 1.0);
    CHECK(t.at("q1", C).ndcg == doctest::Approx(0.63093).epsilon(1e-5));
    CHECK(t.at("q2", R).ndcg == 1.0);
    // 1 / log2(4)
    CHECK(t.at("q2", C).ndcg == 0.5);
    CHECK(t.at("q2", C).first_credited_rank == std::optional<std::size_t>(3));
    CHECK(t.excluded.empty());
}

TEST_CASE("targetless and missing-trace exclusions") {
    Builder b;
    b.raw("r1", "s1").raw("r2", "s2").fact("f2", "s2");
    b.query("q1", {"s1"}).query("q2", {"s2"}).query("q3", {"s2"});
    b.rank("q1", {"r1"}).rank("q2", {"f2", "r2"});
    const auto t = b.rescore("run");
    CHECK(t.find("q1", C) == nullptr);
    CHECK(t.find("q1", R) != nullptr);
    REQUIRE(t.excluded.size() == 2);
    CHECK(t.excluded[0].query_id == "q1");
    CHECK(t.excluded[0].target == std::optional<TargetKind>(C));
    CHECK(t.excluded[0].reason == kReasonTargetless);
    CHECK(t.excluded[1].query_id == "q3");
    CHECK_FALSE(t.excluded[1].target);
    CHECK(t.excluded[1].reason == kReasonMissingTrace);
    CHECK(t.evaluated == std::vector<QueryId>{"q1", "q2", "q3"});
    CHECK(t.coverage(C) == 1);
    CHECK(t.coverage(R) == 2);
}

TEST_CASE("unknown query and duplicate trace are fatal") {
    Builder b;
    b.raw("r1", "s1").query("q1", {"s1"});
    std::vector<RankedTrace> traces{{"run", "q9", {{"r1", std::nullopt}}, 10}};
    try {
        (void)rescore_run(traces, b.map(), kAllTargets);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("q9") != std::string::npos);
    }
    traces = {{"run", "q1", {{"r1", std::nullopt}}, 10}, {"run", "q1", {{"r1", std::nullopt}}, 10}};
    CHECK_THROWS_AS(rescore_run(traces, b.map(), kAllTargets), ValidationError);
    traces = {{"run", "q1", {{"r1", std::nullopt}}, 10}, {"other", "q1", {{"r1", std::nullopt}}, 10}};
    CHECK_THROWS_AS(rescore_run(traces, b.map(), kAllTargets), ValidationError);
}

TEST_CASE("rescoring is pure") {
    Builder b;
    for (int i = 0; i < 30; ++i) {
        const auto a = "s" + std::to_string(i);
        b.raw("r" + std::to_string(i), a);
        if (i % 3) b.fact("f" + std::to_string(i), a);
        b.query("q" + std::to_string(i), {a});
        b.rank("q" + std::to_string(i), {"f" + std::to_string(i), "x", "r" + std::to_string((i * 7) % 30)});
    }
    CHECK(dump(b.rescore("run")) == dump(b.rescore("run")));
}

TEST_CASE("deleting a targetless query changes no shared-subset number") {
    Builder b;
    for (int i = 0; i < 8; ++i) {
        const auto a = "s" + std::to_string(i);
        b.raw("r" + std::to_string(i), a).fact("f" + std::to_string(i), a);
        b.query("q" + std::to_string(i), {a});
        b.rank("q" + std::to_string(i), {"x" + std::to_string(i), "f" + std::to_string(i), "r" + std::to_string(i)});
    }
    Builder with = b;
    with.query("qz", {"nowhere"}).rank("qz", {"r1"});
    const auto t1 = b.rescore("run");
    const auto t2 = with.rescore("run");
    const auto s1 = t1.shared_queries(kAllTargets);
    const auto s2 = t2.shared_queries(kAllTargets);
    CHECK(s1 == s2);
    for (auto t : kAllTargets)
        for (auto m : {MetricKind::ndcg, MetricKind::mrr, MetricKind::recall, MetricKind::hit})
            CHECK(t1.mean(m, t, s1) == t2.mean(m, t, s2));
}

TEST_CASE("shared_subset") {
    Builder b;
    for (int i = 0; i < 10; ++i) {
        const auto a = "s" + std::to_string(i);
        b.raw("r" + std::to_string(i), a);
        if (i < 7) b.fact("f" + std::to_string(i), a);
        b.query("q" + std::to_string(i), {a});
    }
    const auto m = b.map();
    const std::vector<TargetKind> rc{R, C};
    CHECK(shared_subset(m, rc).size() == 7);
    const std::vector<TargetKind> r{R};
    CHECK(shared_subset(m, r).size() == 10);
}

TEST_CASE("shared subset size is echoed for a full-sized fixture") {
    Builder b;
    for (int i = 0; i < 1000; ++i) {
        const auto a = "s" + std::to_string(i);
        b.raw("r" + std::to_string(i), a);
        if (i < 899) b.fact("f" + std::to_string(i), a);
        b.query("q" + std::to_string(i), {a});
    }
    const std::vector<TargetKind> rc{R, C};
    CHECK(shared_subset(b.map(), rc).size() == 899);
}

TEST_CASE("per-query deltas") {
    const auto t = manual_table("run", {{"q1", R, 1.0, true}, {"q1", C, 0.0, false}, {"q2", R, 0.5, true},
                                        {"q2", C, 0.5, true}, {"q3", R, 0.2, true}});
    const auto d = per_query_deltas(t, R, C, MetricKind::ndcg);
    REQUIRE(d.size() == 2);
    CHECK(d[0].query_id == "q1");
    CHECK(d[0].delta == -1.0);
    CHECK(d[1].delta == 0.0);
    const std::vector<QueryId> bad{"q3"};
    CHECK_THROWS_AS(per_query_deltas(t, R, C, MetricKind::ndcg, std::span<const QueryId>(bad)), ValidationError);
}

TEST_CASE("delta histogram matches a brute-force recount") {
    std::vector<QueryDelta> d;
    for (int i = 0; i <= 100; ++i) {
        const double v = (i % 2 ? -1.0 : 1.0) * i / 100.0;
        d.push_back({"q" + std::to_string(i), v});
    }
    const auto h = delta_histogram(d, 0.1);
    REQUIRE(h.size() == 10);
    std::size_t total = 0;
    for (auto c : h) total += c;
    CHECK(total == d.size());
    // values at exact multiples of 0.1 land in floating-point bins; the recount only
    // has to agree on values strictly inside bins
    std::vector<QueryDelta> interior;
    std::vector<std::size_t> expect2(10, 0);
    for (int i = 0; i < 100; ++i) {
        if (i % 10 == 0) continue;
        interior.push_back({"q", (i % 2 ? -1.0 : 1.0) * (i + 0.5) / 100.0});
        expect2[static_cast<std::size_t>(i / 10)]++;
    }
    CHECK(delta_histogram(interior, 0.1) == expect2);
    CHECK_THROWS_AS(delta_histogram(d, 0.0), ValidationError);
}

namespace {

// Raw scores for covered (c*) and uncovered (u*) queries in one run.
std::pair<RescoreTable, TargetMap> gap_run(const std::string& run, std::vector<double> covered,
                                           std::vector<double> uncovered) {
    std::vector<RowSpec> rows;
    TargetMap map;
    for (std::size_t i = 0; i < covered.size(); ++i) {
        const auto q = "c" + std::to_string(i);
        rows.push_back({q, R, covered[i], covered[i] > 0});
        map.queries[q] = QueryTargets{{"r" + q}, {"r" + q, "f" + q}, {"f" + q}};
    }
    for (std::size_t i = 0; i < uncovered.size(); ++i) {
        const auto q = "u" + std::to_string(i);
        rows.push_back({q, R, uncovered[i], uncovered[i] > 0});
        map.queries[q] = QueryTargets{{"r" + q}, {"r" + q}, {}};
    }
    return {manual_table(run, rows, {R}), map};
}

}  // namespace

TEST_CASE("coverage gap examples") {
    {
        auto [t, m] = gap_run("a", {0.5, 0.5}, {0.5, 0.5, 0.5});
        std::vector<RescoreTable> ts{t};
        const auto g = coverage_gap(ts, m);
        CHECK(g.runs[0].gap == 0.0);
        CHECK(g.aggregate.ci_low == 0.0);
        CHECK(g.aggregate.ci_high == 0.0);
        CHECK_FALSE(g.bootstrap_over_runs);
    }
    {
        auto [t, m] = gap_run("a", {0.3, 0.3}, {0.2, 0.2});
        std::vector<RescoreTable> ts{t};
        const auto g = coverage_gap(ts, m);
        CHECK(g.runs[0].gap == doctest::Approx(0.10).epsilon(1e-12));
        CHECK(g.runs[0].covered_n == 2);
        CHECK(g.runs[0].uncovered_n == 2);
    }
}

TEST_CASE("coverage gap over runs skips runs lacking a population") {
    auto [a, ma] = gap_run("a", {0.4, 0.2}, {0.1});
    auto [b, mb] = gap_run("b", {0.6}, {0.2, 0.4});
    auto [c, mc] = gap_run("c", {0.6}, {});
    std::vector<RescoreTable> ts{a, b, c};
    std::vector<const TargetMap*> maps{&ma, &mb, &mc};
    const auto g = coverage_gap(ts, std::span<const TargetMap* const>(maps));
    REQUIRE(g.runs.size() == 2);
    CHECK(g.skipped == std::vector<std::string>{"c"});
    CHECK(g.warnings.size() == 1);
    CHECK(g.bootstrap_over_runs);
    CHECK(g.aggregate.point_estimate == doctest::Approx((0.2 + 0.3) / 2).epsilon(1e-12));
    CHECK(g.aggregate.ci_low <= g.aggregate.ci_high);

    std::vector<RescoreTable> only_c{c};
    CHECK_THROWS_AS(coverage_gap(only_c, mc), ValidationError);
}

TEST_CASE("rescore file round trip") {
    Builder b;
    b.raw("r1", "s1").fact("f1", "s1").raw("r2", "s2").query("q1", {"s1"}).query("q2", {"s2"});
    b.rank("q1", {"x", "f1", "r1"}).rank("q2", {"r2"});
    const auto t = b.rescore("run", 2);
    std::istringstream is(dump(t));
    const auto back = io::read_rescore(is);
    CHECK(dump(back) == dump(t));
    CHECK(back.k == 2);
    CHECK(back.excluded.size() == t.excluded.size());
}
