#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tiap/types.hpp"

namespace tiap::stats {

inline constexpr std::size_t kDefaultResamples = 3000;
inline constexpr std::uint64_t kDefaultSeed = 1337;
inline constexpr double kDefaultLevel = 0.95;

/// Draws bootstrap resample indices.
///
/// The generator is std::mt19937_64 seeded with the 64-bit seed; its output
/// sequence is fixed by the C++ standard. An index in [0, n) is taken from
/// one 64-bit draw x as floor(x * n / 2^64) (a 128-bit multiply-shift), so
/// the sequence is reproducible across compilers and standard libraries.
/// Indices are produced resample by resample, n per resample, in order.
class Resampler {
public:
    explicit Resampler(std::uint64_t seed) : engine_(seed) {}

    std::size_t next_index(std::size_t n);
    /// Fills `out` with out.size() indices drawn from [0, n).
    void draw(std::size_t n, std::span<std::size_t> out);

private:
    std::mt19937_64 engine_;
};

/// Flat resamples x n index sequence, exactly as paired_bootstrap_ci draws it.
std::vector<std::size_t> resample_indices(std::size_t n, std::size_t resamples, std::uint64_t seed);

/// Writes the index sequence one resample per line, indices space separated.
void write_resample_indices(std::ostream& os, std::size_t n, std::size_t resamples, std::uint64_t seed);
std::vector<std::vector<std::size_t>> read_resample_indices(std::istream& is);

/// Mean computed as x[0] + mean(x[i] - x[0]); a constant sample returns its value exactly.
double stable_mean(std::span<const double> xs);

/// Linear interpolation between order statistics of an ascending sample
/// (position q * (n - 1)).
double percentile(std::span<const double> sorted, double q);

struct BootstrapResult {
    double point_estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t resamples = 0;
    std::uint64_t seed = 0;
    double level = kDefaultLevel;
};

/// Percentile bootstrap CI for the mean of paired per-query deltas.
/// Resamples indices with replacement; the interval is taken at
/// (1 - level) / 2 and 1 - (1 - level) / 2. Throws on empty input.
BootstrapResult paired_bootstrap_ci(std::span<const double> deltas, std::size_t resamples = kDefaultResamples,
                                    std::uint64_t seed = kDefaultSeed, double level = kDefaultLevel);

/// Percentile interval over precomputed resample statistics (sorted in place).
void finish_percentile_ci(BootstrapResult& result, std::vector<double>& replicates);

enum class Collapse { none, binary };

/// Category code of a label: 0..2 three-class, 0..1 (relevant, not) under binary collapse.
int label_code(Label l, Collapse collapse);
int category_count(Collapse collapse);

/// Cohen's kappa between two raters over the same items. When expected
/// agreement is 1, returns 1.0 if observed agreement is also perfect and
/// throws otherwise.
double cohen_kappa(std::span<const Label> a, std::span<const Label> b, Collapse collapse = Collapse::none);
double cohen_kappa_codes(std::span<const int> a, std::span<const int> b, int categories);

/// Fleiss' kappa from an items x categories count table. Every row must sum
/// to the same number of raters (>= 2). A table whose ratings all fall in one
/// category returns 1.0.
double fleiss_kappa(const std::vector<std::vector<std::size_t>>& counts);

/// Items x raters grid of rubric labels; an absent entry means the rater
/// returned no valid label.
struct LabelMatrix {
    std::vector<std::string> raters;
    std::vector<std::string> items;
    std::vector<std::vector<std::optional<Label>>> cells;  // [item][rater]

    std::size_t add_rater(const std::string& name);
    std::size_t add_item(const std::string& name);
    void set(std::size_t item, std::size_t rater, std::optional<Label> label);
    bool complete(std::size_t item) const;
};

/// Fleiss' kappa over the rows where every rater gave a valid label.
double fleiss_kappa(const LabelMatrix& m, Collapse collapse = Collapse::none);

/// Plurality label. Ties go to partial when partial is tied for the lead,
/// otherwise to does_not_support. Returns nullopt when no label is valid.
std::optional<Label> majority_vote(std::span<const std::optional<Label>> labels);

struct PairAgreement {
    std::string rater_a;
    std::string rater_b;
    std::size_t n = 0;
    double three_class = 0.0;
    double binary = 0.0;
    std::optional<double> kappa_three_class;
    std::optional<double> kappa_binary;
};

struct AgreementReport {
    std::vector<PairAgreement> pairs;
    double mean_three_class = 0.0;
    double mean_binary = 0.0;
    std::size_t common_valid = 0;
};

/// Per rater pair agreement on rows where both are valid, or on rows where
/// every rater is valid when `common_valid_only` is set. Kappas are absent
/// when undefined for the rows used.
AgreementReport pairwise_agreement(const LabelMatrix& m, bool common_valid_only = false);

}  // namespace tiap::stats
