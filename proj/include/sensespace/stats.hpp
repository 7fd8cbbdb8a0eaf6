#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sensespace::stats {

/// Image-content counts for one generation condition.
struct CountTable {
  std::string condition;
  std::int64_t sense1_only = 0;
  std::int64_t sense2_only = 0;
  std::int64_t both = 0;
  std::int64_t neither = 0;

  std::int64_t total() const noexcept { return sense1_only + sense2_only + both + neither; }
};

enum class Column { Sense1Only, Sense2Only, Both, Neither };

std::int64_t column_value(const CountTable& t, Column c) noexcept;
std::optional<Column> parse_column(std::string_view name);

inline constexpr std::string_view kCsvHeader = "condition,sense1_only,sense2_only,both,neither";

std::vector<CountTable> parse_count_csv(std::string_view text);
std::string format_count_csv(std::span<const CountTable> tables);
std::vector<CountTable> load_count_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Permutation test

enum class PermutationMode { Exact, Sampled };

inline constexpr std::uint64_t kDefaultExactCap = 2'000'000;
inline constexpr std::uint64_t kDefaultDraws = 100'000;
inline constexpr std::uint64_t kDefaultSeed = 0x5E45E;

struct PermutationOptions {
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t exact_cap = kDefaultExactCap;
  std::uint64_t draws = kDefaultDraws;
};

struct PermutationResult {
  std::int64_t observed_statistic = 0;
  double p_value = 1.0;
  PermutationMode mode = PermutationMode::Exact;
  /// Label assignments enumerated (exact) or random draws taken (sampled).
  std::uint64_t permutations_evaluated = 0;
  /// Assignments or draws whose statistic was >= the observed one. In exact
  /// mode p_value == tail_count / permutations_evaluated.
  std::uint64_t tail_count = 0;
};

/// One-sided unpaired permutation test on binary outcomes. The statistic is
/// (successes in A) - (successes in B); the p-value is the probability of a
/// statistic at least as large under random relabeling of the pooled outcomes.
/// Exact when C(|A|+|B|, |A|) <= exact_cap, otherwise Monte Carlo with the
/// add-one correction (hits + 1) / (draws + 1).
PermutationResult permutation_test(std::span<const int> group_a, std::span<const int> group_b,
                                   const PermutationOptions& options = {});

/// Same test given success counts and group sizes.
PermutationResult permutation_test_counts(std::int64_t successes_a, std::int64_t size_a,
                                          std::int64_t successes_b, std::int64_t size_b,
                                          const PermutationOptions& options = {});

/// C(n, k), or nullopt when it does not fit in 63 bits.
std::optional<std::uint64_t> binomial(std::uint64_t n, std::uint64_t k);

// ---------------------------------------------------------------------------
// Proportions

struct ProportionRow {
  std::string condition;
  std::int64_t total = 0;
  std::array<double, 4> percent{};  // sense1_only, sense2_only, both, neither
};

struct ProportionsReport {
  std::vector<ProportionRow> rows;
  ProportionRow aggregate;  // counts summed across all tables, then divided
};

ProportionsReport proportions_report(std::span<const CountTable> tables);

/// Rounds to one decimal place for display.
double round1(double x);

// ---------------------------------------------------------------------------
// Paper-style comparisons

struct SignificanceConfig {
  PermutationOptions permutation;
  /// Count "both" images as realising the intended sense in edit comparisons.
  bool both_counts_as_success = false;
  double alpha = 0.05;
};

/// Weighted-sum condition vs one of the single prompts, success = "both".
struct SumComparison {
  std::string pair;
  std::string baseline;  // "s1" or "s2"
  std::int64_t sum_successes = 0;
  std::int64_t sum_total = 0;
  std::int64_t baseline_successes = 0;
  std::int64_t baseline_total = 0;
  PermutationResult result;
  bool significant = false;
};

/// Edited condition vs unedited, success = intended sense realised.
struct EditComparison {
  std::string prompt;
  int target_sense = 1;
  std::int64_t edited_successes = 0;
  std::int64_t edited_total = 0;
  std::int64_t unedited_successes = 0;
  std::int64_t unedited_total = 0;
  PermutationResult result;
  bool significant = false;
  std::optional<bool> reference_bolded;  // published marking, when known
};

/// Condition labels are "<group>/<role>". Sum tables use roles s1, s2, sum;
/// edit tables use unedited, to_sense1, to_sense2.
std::vector<SumComparison> compare_sum_tables(std::span<const CountTable> tables,
                                              const SignificanceConfig& config = {});
std::vector<EditComparison> compare_edit_tables(std::span<const CountTable> tables,
                                                const SignificanceConfig& config = {});

struct BoldingEntry {
  std::string prompt;
  int target_sense = 1;
  bool bolded = false;
};

/// CSV with header `prompt,target_sense,bolded`.
std::vector<BoldingEntry> parse_bolding_csv(std::string_view text);

struct SignificanceSuite {
  std::vector<SumComparison> sums;
  std::vector<EditComparison> edits;
  /// Edit comparisons whose significance differs from the reference marking.
  std::vector<EditComparison> disagreements;
};

inline constexpr std::string_view kSumFixture = "sum_tables.csv";
inline constexpr std::string_view kEditFixture = "edit_tables.csv";
inline constexpr std::string_view kBoldingFixture = "edit_bolding.csv";

/// Recomputes every comparison from the fixture directory. Throws
/// MissingFixture when a fixture file is absent.
SignificanceSuite significance_suite(const std::filesystem::path& fixture_dir,
                                     const SignificanceConfig& config = {});

}  // namespace sensespace::stats
