#pragma once

#include "sensespace/embedding_io.hpp"
#include "sensespace/linalg.hpp"
#include "sensespace/sense_space.hpp"

#include <cstddef>
#include <span>
#include <string>

namespace sensespace {

struct EditDiagnostics {
  // dot products with the unit directions: [0] = sense 1, [1] = sense 2
  double original[2] = {0, 0};
  double edited[2] = {0, 0};
};

struct SenseEditOutcome {
  linalg::Vector edited_vector;
  linalg::Vector removed_component;   // projection of the original onto span(v_r, v_k)
  linalg::Vector injected_component;  // keep direction made orthogonal to remove, |.| = keep.scale
  EditDiagnostics diagnostics;
};

/// Replaces the component of `original` inside span(remove, keep) with the
/// part of the scaled keep direction orthogonal to the remove direction,
/// rescaled to the keep direction's full magnitude.
SenseEditOutcome edit_sense(const linalg::Vector& original, const MeaningDirection& keep,
                            const MeaningDirection& remove);

/// Applies edit_sense to the rows at `token_indices`; every other row is
/// copied unchanged.
PromptEncoding edit_prompt(const PromptEncoding& encoding,
                           std::span<const std::size_t> token_indices,
                           const MeaningDirection& keep, const MeaningDirection& remove);

/// Weights must sum to one within this tolerance.
inline constexpr double kWeightSumTolerance = 1e-9;
inline constexpr double kDefaultAlpha = 0.5;

/// alpha1 * e1 + alpha2 * e2 over equal-shape encodings. Tokens come from e1;
/// the text becomes a "SUM(a1·s1, a2·s2)" label.
PromptEncoding combine_encodings(const PromptEncoding& e1, const PromptEncoding& e2,
                                 double alpha1, double alpha2);

std::string combined_label(const PromptEncoding& e1, const PromptEncoding& e2, double alpha1,
                           double alpha2);

}  // namespace sensespace
