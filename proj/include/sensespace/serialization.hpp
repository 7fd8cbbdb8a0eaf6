#pragma once

#include "sensespace/sense_edit.hpp"
#include "sensespace/sense_space.hpp"
#include "sensespace/stats.hpp"
#include "sensespace/synth_oracle.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace sensespace {

using json = nlohmann::json;

/// Fitted direction pair as written by `fit` and read by `edit` / `score`.
struct DirectionsFile {
  MeaningDirection v1;
  MeaningDirection v2;
  std::size_t dim = 0;
  std::string encoder_tag;
};

json vector_to_json(const linalg::Vector& v);
linalg::Vector vector_from_json(const json& j);

json directions_to_json(const DirectionsFile& d);
DirectionsFile directions_from_json(const json& j);
DirectionsFile load_directions(const std::filesystem::path& path);

json fit_report_to_json(const FitReport& r);
json edit_outcome_to_json(const SenseEditOutcome& o);

json synth_spec_to_json(const synth::SynthSpec& spec);
synth::SynthSpec synth_spec_from_json(const json& j);
json truth_to_json(const synth::Truth& t);
synth::Truth truth_from_json(const json& j);
json recovery_to_json(const synth::RecoveryReport& r);

json permutation_to_json(const stats::PermutationResult& r);
json proportions_to_json(const stats::ProportionsReport& r);
json sum_comparison_to_json(const stats::SumComparison& c);
json edit_comparison_to_json(const stats::EditComparison& c);

/// Parses JSON text, mapping parse failures to InvalidFormat.
json parse_json(const std::string& text, const std::string& what);

}  // namespace sensespace
