#include "sensespace/cli.hpp"

#include "sensespace/embedding_io.hpp"
#include "sensespace/error.hpp"
#include "sensespace/sense_edit.hpp"
#include "sensespace/sense_space.hpp"
#include "sensespace/serialization.hpp"
#include "sensespace/stats.hpp"
#include "sensespace/synth_oracle.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sensespace::cli {

namespace {

struct RunConfig {
  std::string bundle;
  std::string second_bundle;
  std::string triples;
  std::string directions;
  std::string out;
  std::string report;
  std::string counts;
  std::string bolding;
  std::string spec;
  std::string out_prefix;

  std::string prompt;
  std::optional<std::size_t> prompt_index;
  std::vector<std::size_t> tokens;
  std::string word;
  int target = 0;

  std::string first;
  std::string second;
  double alpha1 = kDefaultAlpha;
  double alpha2 = kDefaultAlpha;

  double threshold = kDefaultThreshold;

  std::string mode = "proportions";
  std::string success = "both";
  std::optional<std::uint64_t> seed;
  std::uint64_t exact_cap = stats::kDefaultExactCap;
  std::uint64_t draws = stats::kDefaultDraws;
  bool both_counts_as_success = false;

  // synth overrides
  std::optional<std::size_t> dim;
  std::optional<std::size_t> n_sentences;
  std::optional<double> noise_sigma;
  std::optional<double> context_scale;

  bool pretty = false;
};

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("SENSE_SPACE_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(raw, &used, 0);
    if (raw[used] != '\0') throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::UsageError, std::string("SENSE_SPACE_SEED is not an integer: ") + raw);
  }
}

std::uint64_t resolve_seed(const RunConfig& cfg, std::uint64_t fallback) {
  if (cfg.seed) return *cfg.seed;
  if (auto s = env_seed()) return *s;
  return fallback;
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

void warn(std::ostream& err, const std::string& message) {
  err << json{{"warning", message}}.dump() << '\n';
}

Sense parse_target(int target) {
  if (target == 1) return Sense::One;
  if (target == 2) return Sense::Two;
  throw Error(ErrorCode::UsageError, "--target must be 1 or 2");
}

void check_dim(const EmbeddingBundle& bundle, const DirectionsFile& dirs) {
  if (bundle.dim != dirs.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "bundle dim " + std::to_string(bundle.dim) + " differs from directions dim " +
                    std::to_string(dirs.dim));
  }
}

// ---------------------------------------------------------------------------

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto bundle = load_bundle(cfg.bundle);
  const auto triples = load_triples(cfg.triples);
  const auto fit = fit_senses(bundle, triples, cfg.threshold);
  for (int s = 0; s < 2; ++s) {
    if (fit.report.rank_limited[s]) {
      warn(err, "sense " + std::to_string(s + 1) + ": difference spectrum has rank " +
                    std::to_string(fit.report.k[s]) + " < 3; using the rank-limited basis");
    }
  }
  write_text_file(cfg.out,
                  directions_to_json({fit.v1, fit.v2, bundle.dim, bundle.encoder_tag}).dump(2) +
                      "\n");
  const json report = fit_report_to_json(fit.report);
  if (!cfg.report.empty()) write_text_file(cfg.report, report.dump(2) + "\n");

  if (cfg.pretty) {
    out << "k: sense1=" << fit.report.k[0] << " sense2=" << fit.report.k[1]
        << "  scale: sense1=" << fit.v1.scale << " sense2=" << fit.v2.scale << '\n';
    out << std::left << std::setw(44) << "ambiguous sentence" << std::right;
    for (const char* h : {"amb.v1", "amb.v2", "s1.v1", "s1.v2", "s2.v1", "s2.v2"}) {
      out << std::setw(10) << h;
    }
    out << '\n' << std::fixed << std::setprecision(3);
    for (const auto& row : fit.report.sentences) {
      out << std::left << std::setw(44) << row.amb_text << std::right;
      for (double v : {row.amb[0], row.amb[1], row.s1[0], row.s1[1], row.s2[0], row.s2[1]}) {
        out << std::setw(10) << v;
      }
      out << '\n';
    }
  } else {
    emit(out, report);
  }
  return kExitOk;
}

int cmd_edit(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  auto bundle = load_bundle(cfg.bundle);
  const auto dirs = load_directions(cfg.directions);
  check_dim(bundle, dirs);
  const Sense target = parse_target(cfg.target);
  const MeaningDirection& keep = target == Sense::One ? dirs.v1 : dirs.v2;
  const MeaningDirection& remove = target == Sense::One ? dirs.v2 : dirs.v1;

  std::size_t p = 0;
  if (cfg.prompt_index) {
    p = *cfg.prompt_index;
    if (p >= bundle.prompts.size()) {
      throw Error(ErrorCode::IndexOutOfBounds, "prompt index " + std::to_string(p) +
                                                   " out of range (" +
                                                   std::to_string(bundle.prompts.size()) +
                                                   " prompts)");
    }
  } else if (!cfg.prompt.empty()) {
    p = bundle.find_prompt(cfg.prompt);
  } else {
    throw Error(ErrorCode::UsageError, "edit needs --prompt or --prompt-index");
  }

  std::vector<std::size_t> tokens = cfg.tokens;
  const PromptEncoding& original = bundle.prompts[p];
  if (tokens.empty()) {
    if (cfg.word.empty()) throw Error(ErrorCode::UsageError, "edit needs --token or --word");
    for (std::size_t i = 0; i < original.tokens.size(); ++i) {
      if (token_matches(original.tokens[i], cfg.word)) tokens.push_back(i);
    }
    if (tokens.empty()) {
      throw Error(ErrorCode::TokenMismatch,
                  "no token of \"" + original.text + "\" matches \"" + cfg.word + "\"");
    }
  }

  json edits = json::array();
  for (std::size_t idx : tokens) {
    if (idx >= original.tokens.size()) {
      throw Error(ErrorCode::IndexOutOfBounds,
                  "token index " + std::to_string(idx) + " out of range for \"" + original.text +
                      "\" (" + std::to_string(original.tokens.size()) + " tokens)");
    }
    const linalg::Vector row = original.matrix.row(static_cast<Eigen::Index>(idx)).transpose();
    json e = edit_outcome_to_json(edit_sense(row, keep, remove));
    e["token_index"] = idx;
    e["token"] = original.tokens[idx];
    edits.push_back(std::move(e));
  }
  bundle.prompts[p] = edit_prompt(original, tokens, keep, remove);
  bundle.encoder_tag += "+edit(sense" + std::to_string(cfg.target) + ")";
  save_bundle(bundle, cfg.out);

  emit(out, {{"prompt", original.text}, {"target_sense", cfg.target}, {"edits", edits}});
  return kExitOk;
}

int cmd_combine(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto bundle = load_bundle(cfg.bundle);
  const EmbeddingBundle other =
      cfg.second_bundle.empty() ? EmbeddingBundle{} : load_bundle(cfg.second_bundle);
  const EmbeddingBundle& source2 = cfg.second_bundle.empty() ? bundle : other;
  if (source2.dim != bundle.dim) {
    throw Error(ErrorCode::ShapeMismatch, "bundles differ in embedding width");
  }
  const auto& e1 = bundle.prompts[bundle.find_prompt(cfg.first)];
  const auto& e2 = source2.prompts[source2.find_prompt(cfg.second)];

  EmbeddingBundle result;
  result.dim = bundle.dim;
  result.encoder_tag = bundle.encoder_tag + "+sum";
  result.prompts.push_back(combine_encodings(e1, e2, cfg.alpha1, cfg.alpha2));
  save_bundle(result, cfg.out);
  emit(out, {{"text", result.prompts.front().text},
             {"tokens_from", e1.text},
             {"alpha1", cfg.alpha1},
             {"alpha2", cfg.alpha2},
             {"rows", result.prompts.front().matrix.rows()},
             {"dim", result.dim}});
  return kExitOk;
}

int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto bundle = load_bundle(cfg.bundle);
  const auto dirs = load_directions(cfg.directions);
  if (bundle.prompts.empty()) throw Error(ErrorCode::EmptyBundle, "bundle has no prompts to score");
  check_dim(bundle, dirs);

  json prompts = json::array();
  for (const auto& p : bundle.prompts) {
    json rows = json::array();
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      if (!cfg.word.empty() && !token_matches(p.tokens[i], cfg.word)) continue;
      const linalg::Vector v = p.matrix.row(static_cast<Eigen::Index>(i)).transpose();
      rows.push_back({{"index", i},
                      {"token", p.tokens[i]},
                      {"dot_sense1", v.dot(dirs.v1.unit)},
                      {"dot_sense2", v.dot(dirs.v2.unit)},
                      {"norm", v.norm()}});
    }
    prompts.push_back({{"text", p.text}, {"tokens", rows}});
  }

  if (cfg.pretty) {
    out << std::fixed << std::setprecision(4);
    for (const auto& p : prompts) {
      out << p["text"].get<std::string>() << '\n';
      for (const auto& r : p["tokens"]) {
        out << "  " << std::setw(4) << r["index"].get<std::size_t>() << "  " << std::left
            << std::setw(20) << r["token"].get<std::string>() << std::right << std::setw(12)
            << r["dot_sense1"].get<double>() << std::setw(12) << r["dot_sense2"].get<double>()
            << '\n';
      }
    }
  } else {
    emit(out, {{"prompts", prompts}});
  }
  return kExitOk;
}

void print_pvalue_row(std::ostream& out, const std::string& label, std::int64_t a,
                      std::int64_t na, std::int64_t b, std::int64_t nb,
                      const stats::PermutationResult& r, bool significant,
                      std::optional<bool> reference = std::nullopt) {
  out << std::left << std::setw(48) << label << std::right << std::setw(4) << a << "/" << na
      << " vs " << std::setw(3) << b << "/" << nb << "  p=" << std::setprecision(5) << std::fixed
      << r.p_value << (significant ? "  *" : "   ");
  if (reference) out << (significant == *reference ? "" : "  (differs from reference)");
  out << '\n';
}

int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto tables = stats::load_count_csv(cfg.counts);
  stats::SignificanceConfig sig;
  sig.permutation = {resolve_seed(cfg, stats::kDefaultSeed), cfg.exact_cap, cfg.draws};
  sig.both_counts_as_success = cfg.both_counts_as_success;

  if (cfg.mode == "proportions") {
    const auto report = stats::proportions_report(tables);
    if (cfg.pretty) {
      out << std::left << std::setw(40) << "condition" << std::right << std::setw(10) << "s1"
          << std::setw(10) << "s2" << std::setw(10) << "both" << std::setw(10) << "neither"
          << '\n'
          << std::fixed << std::setprecision(1);
      auto line = [&](const stats::ProportionRow& r) {
        out << std::left << std::setw(40) << r.condition << std::right;
        for (double pct : r.percent) out << std::setw(10) << stats::round1(pct);
        out << '\n';
      };
      for (const auto& r : report.rows) line(r);
      line(report.aggregate);
    } else {
      emit(out, proportions_to_json(report));
    }
  } else if (cfg.mode == "sum") {
    const auto comps = stats::compare_sum_tables(tables, sig);
    if (cfg.pretty) {
      for (const auto& c : comps) {
        print_pvalue_row(out, c.pair + " sum vs " + c.baseline, c.sum_successes, c.sum_total,
                         c.baseline_successes, c.baseline_total, c.result, c.significant);
      }
    } else {
      json arr = json::array();
      for (const auto& c : comps) arr.push_back(sum_comparison_to_json(c));
      emit(out, {{"comparisons", arr}});
    }
  } else if (cfg.mode == "edit") {
    auto comps = stats::compare_edit_tables(tables, sig);
    if (!cfg.bolding.empty()) {
      const auto bolding = stats::parse_bolding_csv(read_text_file(cfg.bolding));
      for (auto& c : comps) {
        for (const auto& b : bolding) {
          if (b.prompt == c.prompt && b.target_sense == c.target_sense) c.reference_bolded = b.bolded;
        }
      }
    }
    std::size_t disagreements = 0;
    for (const auto& c : comps) {
      if (c.reference_bolded && *c.reference_bolded != c.significant) ++disagreements;
    }
    if (cfg.pretty) {
      for (const auto& c : comps) {
        print_pvalue_row(out, c.prompt + " ->sense" + std::to_string(c.target_sense),
                         c.edited_successes, c.edited_total, c.unedited_successes,
                         c.unedited_total, c.result, c.significant, c.reference_bolded);
      }
    } else {
      json arr = json::array();
      for (const auto& c : comps) arr.push_back(edit_comparison_to_json(c));
      json doc = {{"comparisons", arr}, {"both_counts_as_success", cfg.both_counts_as_success}};
      if (!cfg.bolding.empty()) doc["disagreements"] = disagreements;
      emit(out, doc);
    }
  } else if (cfg.mode == "compare") {
    if (tables.size() != 2) {
      throw Error(ErrorCode::InvalidFormat, "compare mode needs exactly two count rows");
    }
    const auto column = stats::parse_column(cfg.success);
    if (!column) throw Error(ErrorCode::UsageError, "unknown --success column " + cfg.success);
    const auto a = stats::column_value(tables[0], *column);
    const auto b = stats::column_value(tables[1], *column);
    const auto r = stats::permutation_test_counts(a, tables[0].total(), b, tables[1].total(),
                                                  sig.permutation);
    if (cfg.pretty) {
      print_pvalue_row(out, tables[0].condition + " vs " + tables[1].condition, a,
                       tables[0].total(), b, tables[1].total(), r, r.p_value < sig.alpha);
    } else {
      emit(out, {{"group_a", tables[0].condition},
                 {"group_b", tables[1].condition},
                 {"success", cfg.success},
                 {"test", permutation_to_json(r)},
                 {"significant", r.p_value < sig.alpha}});
    }
  } else {
    throw Error(ErrorCode::UsageError, "unknown stats mode " + cfg.mode);
  }
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  synth::SynthSpec spec;
  bool seed_from_file = false;
  if (!cfg.spec.empty()) {
    const json j = parse_json(read_text_file(cfg.spec), cfg.spec);
    spec = synth_spec_from_json(j);
    seed_from_file = j.contains("seed");
  }
  if (cfg.dim) spec.dim = *cfg.dim;
  if (cfg.n_sentences) spec.n_sentences = *cfg.n_sentences;
  if (cfg.noise_sigma) spec.noise_sigma = *cfg.noise_sigma;
  if (cfg.context_scale) spec.context_scale = *cfg.context_scale;
  if (cfg.seed || !seed_from_file) spec.seed = resolve_seed(cfg, spec.seed);

  const auto result = synth::generate_synthetic(spec);
  const std::string bundle_path = cfg.out_prefix + ".semb";
  const std::string triples_path = cfg.out_prefix + ".triples.json";
  const std::string truth_path = cfg.out_prefix + ".truth.json";
  save_bundle(result.bundle, bundle_path);
  save_triples(result.triples, triples_path);
  write_text_file(truth_path,
                  json{{"spec", synth_spec_to_json(spec)}, {"truth", truth_to_json(result.truth)}}
                          .dump(2) +
                      "\n");
  emit(out, {{"bundle", bundle_path},
             {"triples", triples_path},
             {"truth", truth_path},
             {"spec", synth_spec_to_json(spec)}});
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Fit, apply and evaluate word-sense directions in prompt encodings",
               "sense-space"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--pretty", cfg.pretty, "Human-readable tables instead of JSON");

  auto* fit = app.add_subcommand("fit", "Fit the two meaning directions from sentence triples");
  fit->add_option("--bundle", cfg.bundle, "Embedding bundle")->required();
  fit->add_option("--triples", cfg.triples, "Triple file (JSON)")->required();
  fit->add_option("--threshold", cfg.threshold, "Cumulative spectrum threshold for k")
      ->capture_default_str();
  fit->add_option("--out", cfg.out, "Directions file to write")->required();
  fit->add_option("--report", cfg.report, "Also write the fit report to this path");

  auto* edit = app.add_subcommand("edit", "Edit a prompt encoding towards one sense");
  edit->add_option("--bundle", cfg.bundle, "Embedding bundle")->required();
  edit->add_option("--directions", cfg.directions, "Directions file from `fit`")->required();
  edit->add_option("--prompt", cfg.prompt, "Prompt text to edit");
  edit->add_option("--prompt-index", cfg.prompt_index, "Prompt position in the bundle");
  edit->add_option("--token", cfg.tokens, "Token index to edit (repeatable)");
  edit->add_option("--word", cfg.word, "Edit every token matching this word");
  edit->add_option("--target", cfg.target, "Sense to favour (1 or 2)")->required();
  edit->add_option("--out", cfg.out, "Edited bundle to write")->required();

  auto* combine = app.add_subcommand("combine", "Weighted sum of two prompt encodings");
  combine->add_option("--bundle", cfg.bundle, "Embedding bundle")->required();
  combine->add_option("--bundle2", cfg.second_bundle, "Bundle holding the second prompt");
  combine->add_option("--first", cfg.first, "First prompt text")->required();
  combine->add_option("--second", cfg.second, "Second prompt text")->required();
  combine->add_option("--alpha1", cfg.alpha1, "Weight of the first prompt")->capture_default_str();
  combine->add_option("--alpha2", cfg.alpha2, "Weight of the second prompt")->capture_default_str();
  combine->add_option("--out", cfg.out, "Bundle to write")->required();

  auto* score = app.add_subcommand("score", "Dot products of every token with both directions");
  score->add_option("--bundle", cfg.bundle, "Embedding bundle")->required();
  score->add_option("--directions", cfg.directions, "Directions file from `fit`")->required();
  score->add_option("--word", cfg.word, "Only score tokens matching this word");

  auto* st = app.add_subcommand("stats", "Proportions and permutation tests over count tables");
  st->add_option("--counts", cfg.counts, "Count table CSV")->required();
  st->add_option("--mode", cfg.mode, "proportions | sum | edit | compare")
      ->check(CLI::IsMember({"proportions", "sum", "edit", "compare"}))
      ->capture_default_str();
  st->add_option("--bolding", cfg.bolding, "Reference significance markings (edit mode)");
  st->add_option("--success", cfg.success, "Success column for compare mode")
      ->capture_default_str();
  st->add_option("--seed", cfg.seed, "Monte Carlo seed");
  st->add_option("--exact-cap", cfg.exact_cap, "Largest enumeration done exactly")
      ->capture_default_str();
  st->add_option("--draws", cfg.draws, "Monte Carlo draws")->capture_default_str();
  st->add_flag("--both-counts-as-success", cfg.both_counts_as_success,
               "Count 'both' images as realising the intended sense");

  auto* sy = app.add_subcommand("synth", "Generate a synthetic bundle with planted senses");
  sy->add_option("--spec", cfg.spec, "Synth spec (JSON)");
  sy->add_option("--out-prefix", cfg.out_prefix, "Output path prefix")->required();
  sy->add_option("--dim", cfg.dim, "Embedding width");
  sy->add_option("--sentences", cfg.n_sentences, "Number of sentence triples");
  sy->add_option("--noise", cfg.noise_sigma, "Per-coordinate noise standard deviation");
  sy->add_option("--context", cfg.context_scale, "Context vector norm");
  sy->add_option("--seed", cfg.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "UsageError"}, {"message", e.what()}}.dump() << '\n';
    return kExitInput;
  }

  try {
    if (fit->parsed()) return cmd_fit(cfg, out, err);
    if (edit->parsed()) return cmd_edit(cfg, out, err);
    if (combine->parsed()) return cmd_combine(cfg, out, err);
    if (score->parsed()) return cmd_score(cfg, out, err);
    if (st->parsed()) return cmd_stats(cfg, out, err);
    if (sy->parsed()) return cmd_synth(cfg, out, err);
  } catch (const Error& e) {
    err << json{{"error", std::string(e.name())}, {"message", e.what()}}.dump() << '\n';
    return is_numerical(e.code()) ? kExitNumerical : kExitInput;
  } catch (const std::exception& e) {
    err << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace sensespace::cli
