#include <doctest.h>

#include <fstream>

#include "support/synth_tables.hpp"
#include "support/temp_dir.hpp"
#include "tiap/error.hpp"
#include "tiap/metrics.hpp"
#include "tiap/report.hpp"

using namespace tiap;
using namespace tiap::fixtures;

namespace {

SynthConfig base_config(double coverage) {
    SynthConfig c;
    c.dataset_id = "t";
    c.seed = 42;
    c.n_queries = 20;
    c.k = 10;
    c.depth = 12;
    c.categories = {"a", "b"};
    c.stores = {{"s", 2, coverage}};
    return c;
}

}  // namespace

TEST_CASE("generation is seed-deterministic") {
    const auto cfg = testing::load_config("flip.json");
    const auto a = synth_dataset(cfg);
    const auto b = synth_dataset(cfg);
    CHECK(a.expected == b.expected);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].memory_id == b.records[i].memory_id);
    REQUIRE(a.traces.size() == b.traces.size());
    for (std::size_t i = 0; i < a.traces.size(); ++i) CHECK(a.traces[i].ids() == b.traces[i].ids());

    auto other = cfg;
    other.seed = 7;
    CHECK(synth_dataset(other).expected != a.expected);
}

TEST_CASE("config survives a json round trip") {
    const auto cfg = testing::load_config("plant8.json");
    const auto again = parse_synth_config(to_json(cfg));
    CHECK(to_json(again) == to_json(cfg));
    REQUIRE(again.judges);
    CHECK(again.judges->judges.size() == 5);
}

TEST_CASE("full coverage with descendants outranking raw") {
    auto cfg = base_config(1.0);
    cfg.runs = {{"r", "s", "r", {{20, Population::covered, std::nullopt, 5, {1, 2}, false}}}};
    const auto st = testing::rescore_synth(cfg);
    const auto& t = st.tables[0];
    CHECK(t.coverage(TargetKind::canonical) == 20);
    for (const auto& q : t.shared_queries(kAllTargets))
        CHECK(t.at(q, TargetKind::canonical).ndcg > t.at(q, TargetKind::raw).ndcg);
}

TEST_CASE("zero coverage leaves canonical comparisons empty") {
    auto cfg = base_config(0.0);
    cfg.runs = {{"r", "s", "r", {{10, Population::any, std::nullopt, 1, {}, false}}}};
    const auto st = testing::rescore_synth(cfg);
    const auto& t = st.tables[0];
    CHECK(t.coverage(TargetKind::canonical) == 0);
    CHECK(t.shared_queries(kAllTargets).empty());
    CHECK(st.ds.expected["runs"]["r"]["shared"]["n"] == 0);
    CHECK(st.ds.expected["contested_total"] == 0);
}

TEST_CASE("unsatisfiable plants fail before emission") {
    auto cfg = base_config(0.5);
    cfg.runs = {{"r", "s", "r", {{11, Population::covered, std::nullopt, 1, {2}, false}}}};
    CHECK_THROWS_AS(synth_dataset(cfg), ValidationError);

    cfg.runs = {{"r", "s", "r", {{2, Population::covered, std::nullopt, 2, {2}, false}}}};
    CHECK_THROWS_AS(synth_dataset(cfg), ValidationError);

    cfg.runs = {{"r", "s", "r", {{2, Population::covered, std::nullopt, 13, {}, false}}}};
    CHECK_THROWS_AS(synth_dataset(cfg), ValidationError);

    cfg.runs = {{"r", "s", "r", {{2, Population::covered, std::nullopt, 1, {2, 3, 4}, false}}}};
    CHECK_THROWS_AS(synth_dataset(cfg), ValidationError);

    cfg.runs = {{"r", "s", "r", {{2, Population::uncovered, std::nullopt, 1, {2}, false}}}};
    CHECK_THROWS_AS(synth_dataset(cfg), ValidationError);

    cfg.runs = {{"r", "missing", "r", {}}};
    CHECK_THROWS_AS(synth_dataset(cfg), ValidationError);

    cfg.runs = {{"r", "s", "r", {{4, Population::covered, std::nullopt, std::nullopt, {1}, false}}}};
    cfg.judges = JudgePlan{{"a", "b", "c"}, 1, 1, 1, 0};
    CHECK_THROWS_AS(synth_dataset(cfg), ValidationError);
}

TEST_CASE("omitted traces become missing-trace exclusions") {
    auto cfg = base_config(1.0);
    cfg.runs = {{"r", "s", "r",
                 {{5, Population::any, std::nullopt, 1, {}, false}, {3, Population::any, std::nullopt, 1, {}, true}}}};
    const auto st = testing::rescore_synth(cfg);
    std::size_t missing = 0;
    for (const auto& e : st.tables[0].excluded)
        if (e.reason == kReasonMissingTrace) ++missing;
    CHECK(missing == 3);
    CHECK(st.ds.expected["runs"]["r"]["missing_trace"] == 3);
}

TEST_CASE("production scoring reproduces the expected report") {
    for (const char* name : {"flip.json", "density_sweep.json"}) {
        const auto cfg = testing::load_config(name);
        const auto st = testing::rescore_synth(cfg);
        for (const auto& t : st.tables) {
            const auto s = report::summarize_run(t, t.run_id, MetricKind::ndcg, {});
            const auto got = report::to_json(s);
            const auto& exp = st.ds.expected["runs"][t.run_id];
            CHECK(got["targets"] == exp["targets"]);
            CHECK(got["targetless"] == exp["targetless"]);
            for (const auto& [pair, cell] : exp["pairs"].items())
                for (const auto& [key, value] : cell.items()) CHECK(got["pairs"][pair][key] == value);
            CHECK(got["contested"] == exp["contested"]);
            CHECK(got["shared"]["n"] == exp["shared"]["n"]);
            for (const char* k : {"raw", "source", "canonical"}) CHECK(got["shared"][k] == exp["shared"][k]);
        }
    }
}

TEST_CASE("oracle report matches the expected report") {
    const auto ds = synth_dataset(testing::load_config("density_sweep.json"));
    const auto again = oracle_report(ds.records, ds.fixtures, ds.traces, ds.manifests, ds.config.k);
    CHECK(again["runs"] == ds.expected["runs"]);
}

TEST_CASE("write_dataset emits every file") {
    const auto ds = synth_dataset(testing::load_config("plant8.json"));
    testing::TempDir dir("synth");
    write_dataset(dir.path(), ds);
    for (const char* f : {"store.jsonl", "fixtures.jsonl", "traces.jsonl", "expected_report.json", "synth_config.json",
                          "judge_plan.jsonl"})
        CHECK(std::filesystem::exists(dir.path() / f));
    std::size_t manifests = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir.path() / "manifests")) {
        (void)e;
        ++manifests;
    }
    CHECK(manifests == 8);
    const auto recs = io::read_store_file(dir.path() / "store.jsonl");
    CHECK(recs.size() == ds.records.size());
    CHECK(ds.judge_plan.size() == 1902);
}
