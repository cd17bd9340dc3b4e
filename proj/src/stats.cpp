#include "tiap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "tiap/error.hpp"

namespace tiap::stats {

std::size_t Resampler::next_index(std::size_t n) {
    const unsigned __int128 wide = static_cast<unsigned __int128>(engine_()) * static_cast<unsigned __int128>(n);
    return static_cast<std::size_t>(wide >> 64);
}

void Resampler::draw(std::size_t n, std::span<std::size_t> out) {
    for (auto& idx : out) idx = next_index(n);
}

std::vector<std::size_t> resample_indices(std::size_t n, std::size_t resamples, std::uint64_t seed) {
    std::vector<std::size_t> out(n * resamples);
    Resampler rs(seed);
    rs.draw(n, out);
    return out;
}

void write_resample_indices(std::ostream& os, std::size_t n, std::size_t resamples, std::uint64_t seed) {
    Resampler rs(seed);
    for (std::size_t b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            if (i) os << ' ';
            os << rs.next_index(n);
        }
        os << '\n';
    }
}

std::vector<std::vector<std::size_t>> read_resample_indices(std::istream& is) {
    std::vector<std::vector<std::size_t>> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        auto& row = out.emplace_back();
        std::size_t v = 0;
        while (ls >> v) row.push_back(v);
    }
    return out;
}

double stable_mean(std::span<const double> xs) {
    if (xs.empty()) throw ValidationError("mean of an empty sample");
    const double base = xs[0];
    double acc = 0.0;
    for (double x : xs) acc += x - base;
    return base + acc / static_cast<double>(xs.size());
}

double percentile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ValidationError("percentile of an empty sample");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

void finish_percentile_ci(BootstrapResult& result, std::vector<double>& replicates) {
    std::sort(replicates.begin(), replicates.end());
    const double alpha = 1.0 - result.level;
    result.ci_low = percentile(replicates, alpha / 2.0);
    result.ci_high = percentile(replicates, 1.0 - alpha / 2.0);
}

BootstrapResult paired_bootstrap_ci(std::span<const double> deltas, std::size_t resamples, std::uint64_t seed,
                                    double level) {
    if (deltas.empty()) throw ValidationError("bootstrap over an empty delta list");
    if (resamples == 0) throw ValidationError("bootstrap needs at least one resample");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");

    BootstrapResult r;
    r.point_estimate = stable_mean(deltas);
    r.resamples = resamples;
    r.seed = seed;
    r.level = level;

    const auto n = deltas.size();
    const double base = deltas[0];
    Resampler rs(seed);
    std::vector<double> means(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += deltas[rs.next_index(n)] - base;
        means[b] = base + acc / static_cast<double>(n);
    }
    finish_percentile_ci(r, means);
    return r;
}

int label_code(Label l, Collapse collapse) {
    if (collapse == Collapse::binary) return is_relevant(l) ? 0 : 1;
    return static_cast<int>(index_of(l));
}

int category_count(Collapse collapse) { return collapse == Collapse::binary ? 2 : 3; }

double cohen_kappa_codes(std::span<const int> a, std::span<const int> b, int categories) {
    if (a.size() != b.size()) throw ValidationError("cohen_kappa: rater label lists differ in length");
    if (a.empty()) throw ValidationError("cohen_kappa: no items");
    const auto n = a.size();
    std::vector<std::size_t> ca(categories, 0), cb(categories, 0);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] < 0 || a[i] >= categories || b[i] < 0 || b[i] >= categories)
            throw ValidationError("cohen_kappa: category code out of range");
        ++ca[a[i]];
        ++cb[b[i]];
        if (a[i] == b[i]) ++agree;
    }
    const double dn = static_cast<double>(n);
    const double po = static_cast<double>(agree) / dn;
    double pe = 0.0;
    std::size_t pe_num = 0;
    for (int c = 0; c < categories; ++c) {
        pe += (static_cast<double>(ca[c]) / dn) * (static_cast<double>(cb[c]) / dn);
        pe_num += ca[c] * cb[c];
    }
    if (pe_num == n * n) {
        if (agree == n) return 1.0;
        throw ValidationError("cohen_kappa: undefined (expected agreement is 1 but observed is not)");
    }
    return (po - pe) / (1.0 - pe);
}

double cohen_kappa(std::span<const Label> a, std::span<const Label> b, Collapse collapse) {
    std::vector<int> ca, cb;
    ca.reserve(a.size());
    cb.reserve(b.size());
    for (auto l : a) ca.push_back(label_code(l, collapse));
    for (auto l : b) cb.push_back(label_code(l, collapse));
    return cohen_kappa_codes(ca, cb, category_count(collapse));
}

double fleiss_kappa(const std::vector<std::vector<std::size_t>>& counts) {
    if (counts.empty()) throw ValidationError("fleiss_kappa: no items");
    const auto cats = counts.front().size();
    std::size_t raters = 0;
    for (auto c : counts.front()) raters += c;
    if (raters < 2) throw ValidationError("fleiss_kappa: fewer than 2 raters");

    const double m = static_cast<double>(raters);
    const double big_n = static_cast<double>(counts.size());
    std::vector<std::size_t> totals(cats, 0);
    double p_bar = 0.0;
    for (const auto& row : counts) {
        if (row.size() != cats) throw ValidationError("fleiss_kappa: ragged category table");
        std::size_t sum = 0, sq = 0;
        for (std::size_t j = 0; j < cats; ++j) {
            sum += row[j];
            sq += row[j] * row[j];
            totals[j] += row[j];
        }
        if (sum != raters) throw ValidationError("fleiss_kappa: items rated by different numbers of raters");
        p_bar += static_cast<double>(sq - raters) / (m * (m - 1.0));
    }
    p_bar /= big_n;

    double pe = 0.0;
    for (std::size_t j = 0; j < cats; ++j) {
        if (totals[j] == raters * counts.size()) return 1.0;
        const double pj = static_cast<double>(totals[j]) / (big_n * m);
        pe += pj * pj;
    }
    return (p_bar - pe) / (1.0 - pe);
}

std::size_t LabelMatrix::add_rater(const std::string& name) {
    auto it = std::find(raters.begin(), raters.end(), name);
    if (it != raters.end()) return static_cast<std::size_t>(it - raters.begin());
    raters.push_back(name);
    for (auto& row : cells) row.resize(raters.size());
    return raters.size() - 1;
}

std::size_t LabelMatrix::add_item(const std::string& name) {
    items.push_back(name);
    cells.emplace_back(raters.size());
    return items.size() - 1;
}

void LabelMatrix::set(std::size_t item, std::size_t rater, std::optional<Label> label) {
    cells.at(item).at(rater) = label;
}

bool LabelMatrix::complete(std::size_t item) const {
    const auto& row = cells.at(item);
    return std::all_of(row.begin(), row.end(), [](const auto& l) { return l.has_value(); });
}

double fleiss_kappa(const LabelMatrix& m, Collapse collapse) {
    if (m.raters.size() < 2) throw ValidationError("fleiss_kappa: fewer than 2 raters");
    std::vector<std::vector<std::size_t>> counts;
    for (std::size_t i = 0; i < m.items.size(); ++i) {
        if (!m.complete(i)) continue;
        std::vector<std::size_t> row(category_count(collapse), 0);
        for (const auto& l : m.cells[i]) ++row[label_code(*l, collapse)];
        counts.push_back(std::move(row));
    }
    if (counts.empty()) throw ValidationError("fleiss_kappa: no item rated by every rater");
    return fleiss_kappa(counts);
}

std::optional<Label> majority_vote(std::span<const std::optional<Label>> labels) {
    std::array<std::size_t, 3> counts{};
    std::size_t valid = 0;
    for (const auto& l : labels) {
        if (!l) continue;
        ++counts[index_of(*l)];
        ++valid;
    }
    if (valid == 0) return std::nullopt;
    const auto top = *std::max_element(counts.begin(), counts.end());
    std::size_t tied = 0;
    for (auto c : counts)
        if (c == top) ++tied;
    if (tied == 1) {
        for (auto l : kAllLabels)
            if (counts[index_of(l)] == top) return l;
    }
    if (counts[index_of(Label::partial)] == top) return Label::partial;
    return Label::does_not_support;
}

AgreementReport pairwise_agreement(const LabelMatrix& m, bool common_valid_only) {
    if (m.raters.size() < 2) throw ValidationError("pairwise_agreement: fewer than 2 raters");
    AgreementReport report;
    for (std::size_t i = 0; i < m.items.size(); ++i)
        if (m.complete(i)) ++report.common_valid;

    double sum3 = 0.0, sum2 = 0.0;
    for (std::size_t a = 0; a < m.raters.size(); ++a) {
        for (std::size_t b = a + 1; b < m.raters.size(); ++b) {
            PairAgreement p;
            p.rater_a = m.raters[a];
            p.rater_b = m.raters[b];
            std::vector<Label> la, lb;
            for (std::size_t i = 0; i < m.items.size(); ++i) {
                const auto& x = m.cells[i][a];
                const auto& y = m.cells[i][b];
                if (!x || !y) continue;
                if (common_valid_only && !m.complete(i)) continue;
                la.push_back(*x);
                lb.push_back(*y);
            }
            p.n = la.size();
            if (p.n > 0) {
                std::size_t agree3 = 0, agree2 = 0;
                for (std::size_t i = 0; i < p.n; ++i) {
                    if (la[i] == lb[i]) ++agree3;
                    if (is_relevant(la[i]) == is_relevant(lb[i])) ++agree2;
                }
                p.three_class = static_cast<double>(agree3) / static_cast<double>(p.n);
                p.binary = static_cast<double>(agree2) / static_cast<double>(p.n);
                try {
                    p.kappa_three_class = cohen_kappa(la, lb, Collapse::none);
                } catch (const ValidationError&) {
                }
                try {
                    p.kappa_binary = cohen_kappa(la, lb, Collapse::binary);
                } catch (const ValidationError&) {
                }
            }
            sum3 += p.three_class;
            sum2 += p.binary;
            report.pairs.push_back(std::move(p));
        }
    }
    report.mean_three_class = sum3 / static_cast<double>(report.pairs.size());
    report.mean_binary = sum2 / static_cast<double>(report.pairs.size());
    return report;
}

}  // namespace tiap::stats
