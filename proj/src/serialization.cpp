#include "sensespace/serialization.hpp"

#include "sensespace/embedding_io.hpp"
#include "sensespace/error.hpp"

#include <cmath>

namespace sensespace {

namespace {

const char* mode_name(stats::PermutationMode m) {
  return m == stats::PermutationMode::Exact ? "exact" : "sampled";
}

json pair_to_json(const double (&v)[2]) { return json{{"sense1", v[0]}, {"sense2", v[1]}}; }

json direction_to_json(const MeaningDirection& d) {
  return {{"sense", sense_number(d.which)}, {"scale", d.scale}, {"unit", vector_to_json(d.unit)}};
}

MeaningDirection direction_from_json(const json& j, Sense expected) {
  MeaningDirection d;
  d.which = expected;
  d.scale = j.at("scale").get<double>();
  d.unit = vector_from_json(j.at("unit"));
  if (!(d.scale > 0.0) || !std::isfinite(d.scale)) {
    throw Error(ErrorCode::InvalidFormat, "direction scale must be positive");
  }
  if (std::abs(d.unit.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidFormat, "direction unit vector is not normalized");
  }
  // Stored values are decimal round-trips of the fitted doubles; renormalizing
  // keeps the unit-norm invariant at full precision.
  d.unit /= d.unit.norm();
  return d;
}

}  // namespace

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidFormat, what + " is not valid JSON: " + e.what());
  }
}

json vector_to_json(const linalg::Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

linalg::Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  linalg::Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  linalg::require_finite(v, "vector");
  return v;
}

json directions_to_json(const DirectionsFile& d) {
  return {{"format", "sense-directions"},
          {"version", 1},
          {"dim", d.dim},
          {"encoder_tag", d.encoder_tag},
          {"sense1", direction_to_json(d.v1)},
          {"sense2", direction_to_json(d.v2)}};
}

DirectionsFile directions_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "sense-directions") {
      throw Error(ErrorCode::InvalidFormat, "not a directions file");
    }
    DirectionsFile d;
    d.dim = j.at("dim").get<std::size_t>();
    d.encoder_tag = j.at("encoder_tag").get<std::string>();
    d.v1 = direction_from_json(j.at("sense1"), Sense::One);
    d.v2 = direction_from_json(j.at("sense2"), Sense::Two);
    if (static_cast<std::size_t>(d.v1.unit.size()) != d.dim ||
        static_cast<std::size_t>(d.v2.unit.size()) != d.dim) {
      throw Error(ErrorCode::DimensionMismatch, "direction length differs from declared dim");
    }
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidFormat, std::string("malformed directions file: ") + e.what());
  }
}

DirectionsFile load_directions(const std::filesystem::path& path) {
  return directions_from_json(parse_json(read_text_file(path), path.string()));
}

json fit_report_to_json(const FitReport& r) {
  json sentences = json::array();
  for (const auto& s : r.sentences) {
    sentences.push_back({{"amb", s.amb_text},
                         {"amb_dot", pair_to_json(s.amb)},
                         {"s1_dot", pair_to_json(s.s1)},
                         {"s2_dot", pair_to_json(s.s2)}});
  }
  json senses = json::array();
  for (int s = 0; s < 2; ++s) {
    senses.push_back({{"sense", s + 1},
                      {"k", r.k[s]},
                      {"rank_limited", r.rank_limited[s]},
                      {"spectrum", vector_to_json(r.spectrum[s])},
                      {"scale", r.scale[s]},
                      {"scale_index", r.scale_index[s]},
                      {"max_residual_overlap", r.max_residual_overlap[s]}});
  }
  return {{"sentences", sentences},
          {"senses", senses},
          {"principal_cosines", r.principal_cosines},
          {"unit_cosine", r.unit_cosine}};
}

json edit_outcome_to_json(const SenseEditOutcome& o) {
  return {{"original_dot", pair_to_json(o.diagnostics.original)},
          {"edited_dot", pair_to_json(o.diagnostics.edited)},
          {"removed_norm", o.removed_component.norm()},
          {"injected_norm", o.injected_component.norm()}};
}

json synth_spec_to_json(const synth::SynthSpec& spec) {
  json j = {{"dim", spec.dim},
            {"n_sentences", spec.n_sentences},
            {"amb_coeffs", {spec.amb_a, spec.amb_b}},
            {"sense_coeffs", spec.sense_scale},
            {"context_scale", spec.context_scale},
            {"noise_sigma", spec.noise_sigma},
            {"seed", spec.seed}};
  if (spec.planted_m1.size() != 0) {
    j["planted_m1"] = vector_to_json(spec.planted_m1);
    j["planted_m2"] = vector_to_json(spec.planted_m2);
  }
  return j;
}

synth::SynthSpec synth_spec_from_json(const json& j) {
  try {
    synth::SynthSpec spec;
    spec.dim = j.value("dim", spec.dim);
    spec.n_sentences = j.value("n_sentences", spec.n_sentences);
    if (j.contains("amb_coeffs")) {
      const auto ab = j.at("amb_coeffs").get<std::vector<double>>();
      if (ab.size() != 2) throw Error(ErrorCode::InvalidSpec, "amb_coeffs must have two entries");
      spec.amb_a = ab[0];
      spec.amb_b = ab[1];
    }
    spec.sense_scale = j.value("sense_coeffs", spec.sense_scale);
    spec.context_scale = j.value("context_scale", spec.context_scale);
    spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("planted_m1")) spec.planted_m1 = vector_from_json(j.at("planted_m1"));
    if (j.contains("planted_m2")) spec.planted_m2 = vector_from_json(j.at("planted_m2"));
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("malformed synth spec: ") + e.what());
  }
}

json truth_to_json(const synth::Truth& t) {
  return {{"m1", vector_to_json(t.m1)}, {"m2", vector_to_json(t.m2)}};
}

synth::Truth truth_from_json(const json& j) {
  try {
    return {vector_from_json(j.at("m1")), vector_from_json(j.at("m2"))};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidFormat, std::string("malformed truth file: ") + e.what());
  }
}

json recovery_to_json(const synth::RecoveryReport& r) {
  return {{"cos_unit1_m1", r.cos[0][0]}, {"cos_unit1_m2", r.cos[0][1]},
          {"cos_unit2_m1", r.cos[1][0]}, {"cos_unit2_m2", r.cos[1][1]},
          {"min_cosine", r.min_cosine},  {"pass", r.pass},
          {"cross_assigned", r.cross_assigned}, {"message", r.message}};
}

json permutation_to_json(const stats::PermutationResult& r) {
  return {{"observed_statistic", r.observed_statistic},
          {"p_value", r.p_value},
          {"mode", mode_name(r.mode)},
          {"permutations_evaluated", r.permutations_evaluated},
          {"tail_count", r.tail_count}};
}

json proportions_to_json(const stats::ProportionsReport& r) {
  auto row = [](const stats::ProportionRow& p) {
    return json{{"condition", p.condition},
                {"total", p.total},
                {"sense1_only", stats::round1(p.percent[0])},
                {"sense2_only", stats::round1(p.percent[1])},
                {"both", stats::round1(p.percent[2])},
                {"neither", stats::round1(p.percent[3])}};
  };
  json rows = json::array();
  for (const auto& p : r.rows) rows.push_back(row(p));
  return {{"rows", rows}, {"aggregate", row(r.aggregate)}};
}

json sum_comparison_to_json(const stats::SumComparison& c) {
  return {{"pair", c.pair},
          {"baseline", c.baseline},
          {"sum_both", c.sum_successes},
          {"sum_total", c.sum_total},
          {"baseline_both", c.baseline_successes},
          {"baseline_total", c.baseline_total},
          {"test", permutation_to_json(c.result)},
          {"significant", c.significant}};
}

json edit_comparison_to_json(const stats::EditComparison& c) {
  json j = {{"prompt", c.prompt},
            {"target_sense", c.target_sense},
            {"edited_successes", c.edited_successes},
            {"edited_total", c.edited_total},
            {"unedited_successes", c.unedited_successes},
            {"unedited_total", c.unedited_total},
            {"test", permutation_to_json(c.result)},
            {"significant", c.significant}};
  if (c.reference_bolded) j["reference_bolded"] = *c.reference_bolded;
  return j;
}

}  // namespace sensespace
