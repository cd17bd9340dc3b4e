#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support/temp_dir.hpp"
#include "tiap/cli.hpp"
#include "tiap/io.hpp"

using namespace tiap;
using tiap::testing::TempDir;

namespace {

struct Result {
    int status;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int rc = run_cli(args, out, err);
    return {rc, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) { return io::read_text(p); }

// synth -> rescore for a bundled config; returns the scratch dir layout.
void synth_and_rescore(const TempDir& dir, const std::string& config) {
    const auto cfg = (testing::data_dir() / config).string();
    REQUIRE(run({"synth", "--config", cfg, "--out", dir / "syn"}).status == 0);
    REQUIRE(run({"rescore", "--store", dir / "syn/store.jsonl", "--fixtures", dir / "syn/fixtures.jsonl", "--traces",
                 dir / "syn/traces.jsonl", "--manifests", dir / "syn/manifests", "--out", dir / "rs"})
                .status == 0);
}

void write(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    os << text;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
    auto r = run({"frobnicate"});
    CHECK(r.status == 1);
    r = run({"rescore", "--bogus"});
    CHECK(r.status == 1);
    CHECK_FALSE((r.out + r.err).empty());
    r = run({});
    CHECK(r.status == 1);
    CHECK(run({"--version"}).status == 0);
    CHECK(run({"--help"}).status == 0);
}

TEST_CASE("unknown query exits 1 and names it") {
    TempDir dir("cli-unknown");
    write(dir / "store.jsonl", R"({"memory_id":"m1","store_id":"s","source_anchor":"a","kind":"raw"})"
                               "\n");
    write(dir / "fixtures.jsonl", R"({"query_id":"q1","source_anchors":["a"]})"
                                  "\n");
    write(dir / "traces.jsonl", R"({"run_id":"r","query_id":"q-ghost","ranking":[{"memory_id":"m1"}]})"
                                "\n");
    const auto r = run({"rescore", "--store", dir / "store.jsonl", "--fixtures", dir / "fixtures.jsonl", "--traces",
                        dir / "traces.jsonl", "--out", dir / "out"});
    CHECK(r.status == 1);
    CHECK(r.err.find("q-ghost") != std::string::npos);
}

TEST_CASE("missing input file exits 2") {
    TempDir dir("cli-missing");
    const auto r = run({"build-targets", "--store", dir / "nope.jsonl", "--fixtures", dir / "nope2.jsonl", "--out",
                        dir / "out"});
    CHECK(r.status == 2);
}

TEST_CASE("flip fixture through the CLI") {
    TempDir dir("cli-flip");
    synth_and_rescore(dir, "flip.json");
    REQUIRE(run({"compare", "--tables", dir / "rs/rescore", "--manifests", dir / "syn/manifests", "--out",
                 dir / "cmp"})
                .status == 0);
    const auto j = io::read_json_file(dir.path() / "cmp/compare.json");
    REQUIRE(j["winner_flips"].size() == 1);
    const auto& w = j["winner_flips"][0];
    CHECK(w["flip"] == true);
    CHECK(w["targets"]["raw"]["winner"] == "lexical-F1");
    CHECK(w["targets"]["source"]["winner"] == "lexical-F5");
    CHECK(w["targets"]["canonical"]["winner"] == "lexical-F1");

    // the compare summary reproduces the expected report
    const auto exp = io::read_json_file(dir.path() / "syn/expected_report.json");
    for (const auto& [run_id, e] : exp["runs"].items()) {
        CHECK(j["runs"][run_id]["targets"] == e["targets"]);
        CHECK(j["runs"][run_id]["contested"] == e["contested"]);
    }
    CHECK(j["contested_total"] == exp["contested_total"]);
}

TEST_CASE("compare with two targets drops the Source column") {
    TempDir dir("cli-targets");
    synth_and_rescore(dir, "flip.json");
    REQUIRE(run({"compare", "--tables", dir / "rs/rescore", "--targets", "raw,canonical", "--out", dir / "cmp"})
                .status == 0);
    const auto md = slurp(dir.path() / "cmp/compare.md");
    CHECK(md.find("| Run | n | Raw | Canonical | Canonical–Raw |") != std::string::npos);
    const auto first_table = md.substr(0, md.find("\n\n###"));
    CHECK(first_table.find("Source") == std::string::npos);
    const auto csv = slurp(dir.path() / "cmp/compare-1.csv");
    CHECK(csv.rfind("Run,n,Raw,Canonical,", 0) == 0);
}

TEST_CASE("identical invocations give byte-identical summaries and a manifest echo") {
    TempDir dir("cli-repeat");
    synth_and_rescore(dir, "flip.json");
    for (const char* out : {"a", "b"})
        REQUIRE(run({"compare", "--tables", dir / "rs/rescore", "--manifests", dir / "syn/manifests", "--out",
                     dir / out})
                    .status == 0);
    CHECK(slurp(dir.path() / "a/compare.json") == slurp(dir.path() / "b/compare.json"));
    CHECK(slurp(dir.path() / "a/compare.md") == slurp(dir.path() / "b/compare.md"));

    const auto echo = io::read_json_file(dir.path() / "a/manifest_echo.json");
    CHECK(echo["tool"] == "tiap");
    CHECK(echo["version"] == kToolVersion);
    CHECK(echo["command"] == "compare");
    CHECK(echo["status"] == 0);
    CHECK(echo["flags"]["seed"] == 1337);
    CHECK(echo["flags"]["resamples"] == 3000);
    CHECK(echo["flags"]["k"] == 60);
    CHECK_FALSE(echo["inputs"].empty());
}

TEST_CASE("subcommand smoke runs") {
    TempDir dir("cli-smoke");
    synth_and_rescore(dir, "density_sweep.json");
    const auto store = dir / "syn/store.jsonl";
    const auto fx = dir / "syn/fixtures.jsonl";
    const auto f1 = dir / "rs/rescore/lexical-F1.jsonl";
    const auto f5 = dir / "rs/rescore/lexical-F5.jsonl";
    const auto f8 = dir / "rs/rescore/lexical-F8.jsonl";

    CHECK(run({"build-targets", "--store", store, "--fixtures", fx, "--out", dir / "bt"}).status == 0);
    CHECK(std::filesystem::exists(dir.path() / "bt/coverage.json"));

    CHECK(run({"sweep", "--tables", f1, f5, f8, "--labels", "F1,F5,F8", "--out", dir / "sw"}).status == 0);
    const auto sw = io::read_json_file(dir.path() / "sw/sweep.json");
    CHECK(sw["cells"].size() == 3);

    CHECK(run({"mitigate", "--tables", f1, f5, f8, "--labels", "F1,F5,F8", "--out", dir / "mi"}).status == 0);
    CHECK(run({"categories", "--tables", f1, "--fixtures", fx, "--out", dir / "ca"}).status == 0);
    CHECK(run({"align-answers", "--tables", f1, f5, "--fixtures", fx, "--out", dir / "al"}).status == 0);

    CHECK(run({"extract-cases", "--tables", dir / "rs/rescore", "--store", store, "--fixtures", fx, "--traces",
               dir / "syn/traces.jsonl", "--manifests", dir / "syn/manifests", "--out", dir / "ex"})
              .status == 0);
    const auto cases = io::read_cases_file(dir.path() / "ex/cases.jsonl");
    CHECK_FALSE(cases.empty());
    CHECK(run({"sample-validation", "--cases", dir / "ex/cases.jsonl", "--size", "6", "--out", dir / "sv"}).status ==
          0);
    CHECK(run({"sample-validation", "--cases", dir / "ex/cases.jsonl", "--size", "100000", "--out", dir / "sv2"})
              .status == 1);

    CHECK(run({"report", "--in", dir / "sw", "--out", dir / "rep"}).status == 0);
    CHECK(std::filesystem::exists(dir.path() / "rep/report.md"));
}

TEST_CASE("coverage-gap subcommand") {
    TempDir dir("cli-gap");
    const auto cfg = (testing::data_dir() / "plant8.json").string();
    REQUIRE(run({"synth", "--config", cfg, "--out", dir / "syn"}).status == 0);
    REQUIRE(run({"rescore", "--store", dir / "syn/store.jsonl", "--fixtures", dir / "syn/fixtures.jsonl", "--traces",
                 dir / "syn/traces.jsonl", "--manifests", dir / "syn/manifests", "--out", dir / "rs"})
                .status == 0);
    REQUIRE(run({"coverage-gap", "--tables", dir / "rs/rescore", "--store", dir / "syn/store.jsonl", "--fixtures",
                 dir / "syn/fixtures.jsonl", "--manifests", dir / "syn/manifests", "--out", dir / "gap"})
                .status == 0);
    const auto gap = io::read_json_file(dir.path() / "gap/coverage-gap.json");
    const auto exp = io::read_json_file(dir.path() / "syn/expected_report.json");
    CHECK(gap["aggregate"]["estimate"] == exp["coverage_gap_mean"]);
}

TEST_CASE("judge without an API key exits 1") {
    TempDir dir("cli-judge");
    ::unsetenv("TIAP_JUDGE_API_KEY");
    write(dir / "cases.jsonl", "");
    write(dir / "judges.json", R"({"judges":[{"name":"a","url":"http://127.0.0.1:9","model":"m"}]})");
    const auto r = run({"judge", "--cases", dir / "cases.jsonl", "--judge-config", dir / "judges.json", "--out",
                        dir / "out"});
    CHECK(r.status == 1);
    CHECK(r.err.find("TIAP_JUDGE_API_KEY") != std::string::npos);
}

TEST_CASE("bad targets flag exits 1") {
    TempDir dir("cli-badtargets");
    synth_and_rescore(dir, "flip.json");
    CHECK(run({"compare", "--tables", dir / "rs/rescore", "--targets", "raw,raw", "--out", dir / "x"}).status == 1);
    CHECK(run({"compare", "--tables", dir / "rs/rescore", "--targets", "lexical", "--out", dir / "x"}).status == 1);
}
