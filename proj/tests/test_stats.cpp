#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "support/temp_dir.hpp"
#include "tiap/error.hpp"
#include "tiap/stats.hpp"

using namespace tiap;
using namespace tiap::stats;

namespace {

constexpr auto SP = Label::supports;
constexpr auto PA = Label::partial;
constexpr auto DN = Label::does_not_support;

std::vector<std::vector<std::size_t>> golden_indices() {
    std::ifstream in(testing::data_dir() / "resample_indices_n10_seed1337.txt");
    REQUIRE(in);
    return read_resample_indices(in);
}

// Brute-force percentile bootstrap from an explicit index table.
std::pair<double, double> brute_ci(const std::vector<double>& xs, const std::vector<std::vector<std::size_t>>& idx,
                                   double level) {
    std::vector<double> means;
    for (const auto& row : idx) {
        double acc = 0.0;
        for (auto i : row) acc += xs[i] - xs[0];
        means.push_back(xs[0] + acc / static_cast<double>(row.size()));
    }
    std::sort(means.begin(), means.end());
    auto at = [&](double q) {
        const double h = q * static_cast<double>(means.size() - 1);
        const auto lo = static_cast<std::size_t>(h);
        const auto hi = std::min(lo + 1, means.size() - 1);
        return means[lo] + (h - static_cast<double>(lo)) * (means[hi] - means[lo]);
    };
    const double a = (1.0 - level) / 2.0;
    return {at(a), at(1.0 - a)};
}

}  // namespace

TEST_CASE("generator is the standard mt19937_64") {
    std::mt19937_64 g;
    g.discard(9999);
    CHECK(g() == 9981545732273789042ULL);
}

TEST_CASE("constant deltas give a degenerate interval") {
    for (double c : {0.0, 0.1, -0.37, 1.0}) {
        const std::vector<double> xs(57, c);
        const auto r = paired_bootstrap_ci(xs);
        CHECK(r.point_estimate == c);
        CHECK(r.ci_low == c);
        CHECK(r.ci_high == c);
        CHECK(r.resamples == 3000);
        CHECK(r.seed == 1337);
    }
}

TEST_CASE("symmetric pair stays in bounds") {
    const std::vector<double> xs{-1.0, 1.0};
    const auto r = paired_bootstrap_ci(xs);
    CHECK(r.point_estimate == 0.0);
    CHECK(r.ci_low >= -1.0);
    CHECK(r.ci_high <= 1.0);
    CHECK(r.ci_low <= r.ci_high);
}

TEST_CASE("index stream matches the exported oracle") {
    const auto golden = golden_indices();
    REQUIRE(golden.size() == 3000);
    const auto flat = resample_indices(10, 3000, 1337);
    for (std::size_t b = 0; b < 3000; ++b)
        for (std::size_t i = 0; i < 10; ++i) REQUIRE(flat[b * 10 + i] == golden[b][i]);

    std::ostringstream os;
    write_resample_indices(os, 10, 3000, 1337);
    std::ifstream in(testing::data_dir() / "resample_indices_n10_seed1337.txt");
    std::stringstream file;
    file << in.rdbuf();
    CHECK(os.str() == file.str());
}

TEST_CASE("bootstrap equals a brute-force run over the shared index sequence") {
    std::mt19937_64 g(99);
    std::normal_distribution<double> nd(0.05, 0.3);
    std::vector<double> xs(10);
    for (auto& x : xs) x = nd(g);
    const auto r = paired_bootstrap_ci(xs, 3000, 1337, 0.95);
    const auto [lo, hi] = brute_ci(xs, golden_indices(), 0.95);
    CHECK(r.ci_low == lo);
    CHECK(r.ci_high == hi);
}

TEST_CASE("bootstrap determinism and seed dependence") {
    std::vector<double> xs;
    for (int i = 0; i < 40; ++i) xs.push_back(((i * 37) % 11) / 10.0 - 0.5);
    const auto a = paired_bootstrap_ci(xs);
    const auto b = paired_bootstrap_ci(xs);
    CHECK(a.ci_low == b.ci_low);
    CHECK(a.ci_high == b.ci_high);
    const auto c = paired_bootstrap_ci(xs, 3000, 7);
    CHECK(c.point_estimate == a.point_estimate);
    CHECK((c.ci_low != a.ci_low || c.ci_high != a.ci_high));
    CHECK_THROWS_AS(paired_bootstrap_ci(std::vector<double>{}), ValidationError);
}

TEST_CASE("cohen kappa") {
    const std::vector<Label> a{SP, PA, DN, SP};
    CHECK(cohen_kappa(a, a) == 1.0);

    // a=20 (yes,yes) b=5 (yes,no) c=10 (no,yes) d=15 (no,no)
    std::vector<int> x, y;
    auto push = [&](int n, int u, int v) {
        for (int i = 0; i < n; ++i) {
            x.push_back(u);
            y.push_back(v);
        }
    };
    push(20, 0, 0);
    push(5, 0, 1);
    push(10, 1, 0);
    push(15, 1, 1);
    // po = 35/50 = 0.7; pe = 0.5*0.6 + 0.5*0.4 = 0.5; kappa = 0.2/0.5
    CHECK(std::abs(cohen_kappa_codes(x, y, 2) - 0.4) < 1e-9);

    const std::vector<Label> same{SP, SP, SP};
    CHECK(cohen_kappa(same, same) == 1.0);
    const std::vector<Label> other{PA, PA, PA};
    CHECK(cohen_kappa(same, other) == 0.0);
    CHECK_THROWS_AS(cohen_kappa(same, a), ValidationError);
}

TEST_CASE("cohen kappa near zero for independent raters") {
    std::mt19937_64 g(2024);
    std::uniform_int_distribution<int> u(0, 2);
    std::vector<int> x(10000), y(10000);
    for (auto& v : x) v = u(g);
    for (auto& v : y) v = u(g);
    CHECK(std::abs(cohen_kappa_codes(x, y, 3)) < 0.05);
}

TEST_CASE("fleiss kappa") {
    const std::vector<std::vector<std::size_t>> wiki{{0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0},
                                                     {2, 2, 8, 1, 1},  {7, 7, 0, 0, 0}, {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2},
                                                     {6, 5, 2, 1, 0},  {0, 2, 2, 3, 7}};
    CHECK(std::abs(fleiss_kappa(wiki) - 0.210) < 1e-3);
    CHECK(std::abs(fleiss_kappa(wiki) - 4211.0 / 20059.0) < 1e-12);

    const std::vector<std::vector<std::size_t>> unanimous{{3, 0, 0}, {0, 3, 0}, {0, 0, 3}};
    CHECK(fleiss_kappa(unanimous) == 1.0);
    const std::vector<std::vector<std::size_t>> single{{4, 0, 0}, {4, 0, 0}};
    CHECK(fleiss_kappa(single) == 1.0);

    const std::vector<std::vector<std::size_t>> ragged{{2, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS(fleiss_kappa(ragged), ValidationError);
    const std::vector<std::vector<std::size_t>> one_rater{{1, 0, 0}};
    CHECK_THROWS_AS(fleiss_kappa(one_rater), ValidationError);
}

TEST_CASE("fleiss over a label matrix uses complete rows only") {
    LabelMatrix m;
    m.add_rater("a");
    m.add_rater("b");
    m.add_rater("c");
    const auto i0 = m.add_item("x");
    const auto i1 = m.add_item("y");
    const auto i2 = m.add_item("z");
    for (std::size_t r = 0; r < 3; ++r) {
        m.set(i0, r, SP);
        m.set(i1, r, DN);
    }
    m.set(i2, 0, PA);
    CHECK(fleiss_kappa(m) == 1.0);
    CHECK(fleiss_kappa(m, Collapse::binary) == 1.0);
}

TEST_CASE("majority vote examples") {
    using L = std::optional<Label>;
    const std::vector<L> a{SP, SP, PA, DN, SP};
    CHECK(majority_vote(a) == L(SP));
    const std::vector<L> b{SP, SP, DN, DN, std::nullopt};
    CHECK(majority_vote(b) == L(DN));
    const std::vector<L> c{SP, SP, PA, PA, DN};
    CHECK(majority_vote(c) == L(PA));
    const std::vector<L> none(5);
    CHECK_FALSE(majority_vote(none));
}

TEST_CASE("majority vote is permutation invariant") {
    using L = std::optional<Label>;
    std::vector<L> v{SP, std::nullopt, DN, PA, DN};
    std::sort(v.begin(), v.end());
    const auto first = majority_vote(v);
    do {
        CHECK(majority_vote(v) == first);
    } while (std::next_permutation(v.begin(), v.end()));
}

TEST_CASE("pairwise agreement") {
    LabelMatrix m;
    m.add_rater("a");
    m.add_rater("b");
    for (int i = 0; i < 6; ++i) {
        const auto it = m.add_item("i" + std::to_string(i));
        const auto l = kAllLabels[static_cast<std::size_t>(i % 3)];
        m.set(it, 0, l);
        m.set(it, 1, l);
    }
    const auto same = pairwise_agreement(m);
    CHECK(same.pairs.size() == 1);
    CHECK(same.pairs[0].three_class == 1.0);
    CHECK(same.pairs[0].binary == 1.0);
    CHECK(same.mean_three_class == 1.0);

    std::mt19937_64 g(5);
    std::uniform_int_distribution<int> u(0, 2);
    LabelMatrix r;
    r.add_rater("x");
    r.add_rater("y");
    r.add_rater("z");
    for (int i = 0; i < 9000; ++i) {
        const auto it = r.add_item("i" + std::to_string(i));
        for (std::size_t k = 0; k < 3; ++k)
            r.set(it, k, (k == 2 && i % 10 == 0) ? std::nullopt : std::optional<Label>(kAllLabels[u(g)]));
    }
    const auto rep = pairwise_agreement(r);
    CHECK(std::abs(rep.mean_three_class - 1.0 / 3.0) < 0.02);
    for (const auto& p : rep.pairs) CHECK(p.binary >= p.three_class);
    CHECK(rep.pairs[0].n == 9000);
    CHECK(rep.pairs[1].n == 8100);
    const auto cv = pairwise_agreement(r, true);
    CHECK(cv.common_valid == 8100);
    CHECK(cv.pairs[0].n == 8100);
}

TEST_CASE("kappa stays in range on random input") {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> len(2, 30), u(0, 2);
        const int n = len(g);
        std::vector<int> x(n), y(n);
        for (auto& v : x) v = u(g);
        for (auto& v : y) v = u(g);
        try {
            const double k = cohen_kappa_codes(x, y, 3);
            CHECK(k >= -1.0);
            CHECK(k <= 1.0);
        } catch (const ValidationError&) {
        }
    }
}
