#include "sensespace/stats.hpp"

#include "sensespace/embedding_io.hpp"
#include "sensespace/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace sensespace::stats {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    if (!line.empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

/// Splits one CSV record; double-quoted fields may contain commas and "".
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  for (auto& f : fields) f = std::string(trim(f));
  return fields;
}

std::int64_t parse_count(const std::string& field, std::size_t line_no) {
  std::int64_t v = 0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end || v < 0) {
    throw Error(ErrorCode::InvalidFormat, "line " + std::to_string(line_no) +
                                              ": expected a nonnegative integer, got \"" +
                                              field + "\"");
  }
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t range) {
  // Rejection sampling on raw engine output keeps draws platform independent.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % range;
}

std::pair<std::string, std::string> split_condition(const std::string& condition) {
  const auto slash = condition.rfind('/');
  if (slash == std::string::npos) {
    throw Error(ErrorCode::InvalidFormat,
                "condition \"" + condition + "\" is not of the form <group>/<role>");
  }
  return {condition.substr(0, slash), condition.substr(slash + 1)};
}

/// Groups tables by condition prefix, preserving first-appearance order.
std::vector<std::pair<std::string, std::map<std::string, const CountTable*>>> group_tables(
    std::span<const CountTable> tables) {
  std::vector<std::pair<std::string, std::map<std::string, const CountTable*>>> groups;
  for (const auto& t : tables) {
    auto [group, role] = split_condition(t.condition);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == group; });
    if (it == groups.end()) {
      groups.push_back({group, {}});
      it = std::prev(groups.end());
    }
    it->second[role] = &t;
  }
  return groups;
}

const CountTable& require_role(const std::map<std::string, const CountTable*>& roles,
                               const std::string& group, const std::string& role) {
  const auto it = roles.find(role);
  if (it == roles.end()) {
    throw Error(ErrorCode::MissingFixture, "group \"" + group + "\" has no \"" + role + "\" row");
  }
  return *it->second;
}

std::string read_fixture(const std::filesystem::path& dir, std::string_view name) {
  const auto path = dir / name;
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingFixture, "missing fixture " + path.string());
  }
  return read_text_file(path);
}

}  // namespace

std::int64_t column_value(const CountTable& t, Column c) noexcept {
  switch (c) {
    case Column::Sense1Only: return t.sense1_only;
    case Column::Sense2Only: return t.sense2_only;
    case Column::Both: return t.both;
    case Column::Neither: return t.neither;
  }
  return 0;
}

std::optional<Column> parse_column(std::string_view name) {
  if (name == "sense1_only") return Column::Sense1Only;
  if (name == "sense2_only") return Column::Sense2Only;
  if (name == "both") return Column::Both;
  if (name == "neither") return Column::Neither;
  return std::nullopt;
}

std::vector<CountTable> parse_count_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kCsvHeader) {
    throw Error(ErrorCode::InvalidFormat,
                "count table must start with header \"" + std::string(kCsvHeader) + "\"");
  }
  std::vector<CountTable> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_record(lines[i]);
    if (f.size() != 5) {
      throw Error(ErrorCode::InvalidFormat,
                  "line " + std::to_string(i + 1) + ": expected 5 fields, got " +
                      std::to_string(f.size()));
    }
    out.push_back({f[0], parse_count(f[1], i + 1), parse_count(f[2], i + 1),
                   parse_count(f[3], i + 1), parse_count(f[4], i + 1)});
  }
  return out;
}

std::string format_count_csv(std::span<const CountTable> tables) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& t : tables) {
    os << csv_field(t.condition) << ',' << t.sense1_only << ',' << t.sense2_only << ','
       << t.both << ',' << t.neither << '\n';
  }
  return os.str();
}

std::vector<CountTable> load_count_csv(const std::filesystem::path& path) {
  return parse_count_csv(read_text_file(path));
}

std::optional<std::uint64_t> binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    c = c * (n - i) / (i + 1);
    if (c > static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max())) {
      return std::nullopt;
    }
  }
  return static_cast<std::uint64_t>(c);
}

PermutationResult permutation_test_counts(std::int64_t successes_a, std::int64_t size_a,
                                          std::int64_t successes_b, std::int64_t size_b,
                                          const PermutationOptions& options) {
  if (size_a <= 0 || size_b <= 0) throw Error(ErrorCode::EmptyGroup, "both groups must be nonempty");
  if (successes_a < 0 || successes_a > size_a || successes_b < 0 || successes_b > size_b) {
    throw Error(ErrorCode::NonBinaryOutcome, "success counts must lie within group sizes");
  }
  const auto n = static_cast<std::uint64_t>(size_a + size_b);
  const auto na = static_cast<std::uint64_t>(size_a);
  const auto total_successes = static_cast<std::uint64_t>(successes_a + successes_b);
  const auto observed_a = static_cast<std::uint64_t>(successes_a);

  PermutationResult r;
  r.observed_statistic = successes_a - successes_b;

  const auto assignments = binomial(n, na);
  if (assignments && *assignments <= options.exact_cap) {
    // Every relabeling with j successes in A has statistic 2j - S, so the
    // enumeration groups into C(S, j) * C(n - S, |A| - j) assignments per j.
    std::uint64_t tail = 0;
    const std::uint64_t j_max = std::min(total_successes, na);
    for (std::uint64_t j = observed_a; j <= j_max; ++j) {
      if (na - j > n - total_successes) continue;
      tail += *binomial(total_successes, j) * *binomial(n - total_successes, na - j);
    }
    r.mode = PermutationMode::Exact;
    r.permutations_evaluated = *assignments;
    r.tail_count = tail;
    r.p_value = static_cast<double>(tail) / static_cast<double>(*assignments);
    return r;
  }

  if (options.draws == 0) throw Error(ErrorCode::UsageError, "sampled mode needs at least one draw");
  std::mt19937_64 rng(options.seed);
  std::uint64_t hits = 0;
  for (std::uint64_t d = 0; d < options.draws; ++d) {
    // Draw |A| items without replacement from the pooled outcomes.
    std::uint64_t remaining = n;
    std::uint64_t remaining_successes = total_successes;
    std::uint64_t in_a = 0;
    for (std::uint64_t i = 0; i < na; ++i) {
      if (bounded(rng, remaining) < remaining_successes) {
        ++in_a;
        --remaining_successes;
      }
      --remaining;
    }
    if (in_a >= observed_a) ++hits;
  }
  r.mode = PermutationMode::Sampled;
  r.permutations_evaluated = options.draws;
  r.tail_count = hits;
  r.p_value = static_cast<double>(hits + 1) / static_cast<double>(options.draws + 1);
  return r;
}

PermutationResult permutation_test(std::span<const int> group_a, std::span<const int> group_b,
                                   const PermutationOptions& options) {
  if (group_a.empty() || group_b.empty()) {
    throw Error(ErrorCode::EmptyGroup, "both groups must be nonempty");
  }
  auto successes = [](std::span<const int> g) {
    std::int64_t s = 0;
    for (int x : g) {
      if (x != 0 && x != 1) {
        throw Error(ErrorCode::NonBinaryOutcome,
                    "outcome " + std::to_string(x) + " is not 0 or 1");
      }
      s += x;
    }
    return s;
  };
  return permutation_test_counts(successes(group_a), static_cast<std::int64_t>(group_a.size()),
                                 successes(group_b), static_cast<std::int64_t>(group_b.size()),
                                 options);
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

ProportionsReport proportions_report(std::span<const CountTable> tables) {
  if (tables.empty()) throw Error(ErrorCode::EmptyInput, "no count tables");
  auto row_for = [](const std::string& label, const std::array<std::int64_t, 4>& c) {
    const std::int64_t total = c[0] + c[1] + c[2] + c[3];
    if (total <= 0) throw Error(ErrorCode::ZeroTotal, "condition \"" + label + "\" has no images");
    ProportionRow row{label, total, {}};
    for (std::size_t i = 0; i < 4; ++i) {
      row.percent[i] = 100.0 * static_cast<double>(c[i]) / static_cast<double>(total);
    }
    return row;
  };

  ProportionsReport report;
  std::array<std::int64_t, 4> sum{};
  for (const auto& t : tables) {
    const std::array<std::int64_t, 4> c{t.sense1_only, t.sense2_only, t.both, t.neither};
    report.rows.push_back(row_for(t.condition, c));
    for (std::size_t i = 0; i < 4; ++i) sum[i] += c[i];
  }
  report.aggregate = row_for("aggregate", sum);
  return report;
}

std::vector<SumComparison> compare_sum_tables(std::span<const CountTable> tables,
                                              const SignificanceConfig& config) {
  std::vector<SumComparison> out;
  for (const auto& [group, roles] : group_tables(tables)) {
    const CountTable& sum = require_role(roles, group, "sum");
    for (const char* baseline : {"s1", "s2"}) {
      const CountTable& base = require_role(roles, group, baseline);
      SumComparison c;
      c.pair = group;
      c.baseline = baseline;
      c.sum_successes = sum.both;
      c.sum_total = sum.total();
      c.baseline_successes = base.both;
      c.baseline_total = base.total();
      c.result = permutation_test_counts(c.sum_successes, c.sum_total, c.baseline_successes,
                                         c.baseline_total, config.permutation);
      c.significant = c.result.p_value < config.alpha;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<EditComparison> compare_edit_tables(std::span<const CountTable> tables,
                                                const SignificanceConfig& config) {
  std::vector<EditComparison> out;
  for (const auto& [group, roles] : group_tables(tables)) {
    const CountTable& unedited = require_role(roles, group, "unedited");
    for (int sense : {1, 2}) {
      const CountTable& edited =
          require_role(roles, group, sense == 1 ? "to_sense1" : "to_sense2");
      auto successes = [&](const CountTable& t) {
        const std::int64_t only = sense == 1 ? t.sense1_only : t.sense2_only;
        return only + (config.both_counts_as_success ? t.both : 0);
      };
      EditComparison c;
      c.prompt = group;
      c.target_sense = sense;
      c.edited_successes = successes(edited);
      c.edited_total = edited.total();
      c.unedited_successes = successes(unedited);
      c.unedited_total = unedited.total();
      c.result = permutation_test_counts(c.edited_successes, c.edited_total,
                                         c.unedited_successes, c.unedited_total,
                                         config.permutation);
      c.significant = c.result.p_value < config.alpha;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<BoldingEntry> parse_bolding_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != "prompt,target_sense,bolded") {
    throw Error(ErrorCode::InvalidFormat, "bolding file must start with prompt,target_sense,bolded");
  }
  std::vector<BoldingEntry> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_record(lines[i]);
    if (f.size() != 3 || (f[1] != "1" && f[1] != "2") || (f[2] != "0" && f[2] != "1")) {
      throw Error(ErrorCode::InvalidFormat, "bolding line " + std::to_string(i + 1) + " malformed");
    }
    out.push_back({f[0], f[1] == "1" ? 1 : 2, f[2] == "1"});
  }
  return out;
}

SignificanceSuite significance_suite(const std::filesystem::path& fixture_dir,
                                     const SignificanceConfig& config) {
  const auto sum_tables = parse_count_csv(read_fixture(fixture_dir, kSumFixture));
  const auto edit_tables = parse_count_csv(read_fixture(fixture_dir, kEditFixture));
  const auto bolding = parse_bolding_csv(read_fixture(fixture_dir, kBoldingFixture));

  SignificanceSuite suite;
  suite.sums = compare_sum_tables(sum_tables, config);
  suite.edits = compare_edit_tables(edit_tables, config);
  for (auto& c : suite.edits) {
    const auto it = std::find_if(bolding.begin(), bolding.end(), [&](const BoldingEntry& b) {
      return b.prompt == c.prompt && b.target_sense == c.target_sense;
    });
    if (it == bolding.end()) {
      throw Error(ErrorCode::MissingFixture, "no reference marking for \"" + c.prompt +
                                                 "\" sense " + std::to_string(c.target_sense));
    }
    c.reference_bolded = it->bolded;
    if (c.significant != it->bolded) suite.disagreements.push_back(c);
  }
  return suite;
}

}  // namespace sensespace::stats
