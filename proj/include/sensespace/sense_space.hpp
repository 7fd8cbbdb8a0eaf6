#pragma once

#include "sensespace/embedding_io.hpp"
#include "sensespace/linalg.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sensespace {

enum class Sense { One = 1, Two = 2 };

inline int sense_number(Sense s) noexcept { return static_cast<int>(s); }
inline Sense other_sense(Sense s) noexcept { return s == Sense::One ? Sense::Two : Sense::One; }

/// Cumulative-spectrum threshold used to pick the subspace dimension.
inline constexpr double kDefaultThreshold = 0.95;
/// Smallest subspace dimension selected when the spectrum allows it.
inline constexpr std::size_t kMinSubspaceDim = 3;

/// Orthonormal basis for the span of differences between ambiguous and
/// sense-specific token vectors. `which` is the sense the differences point
/// towards (amb -> 1 or amb -> 2).
struct DifferenceSubspace {
  std::vector<linalg::Vector> basis;
  linalg::Vector singular_values;  // one per sentence, descending
  std::size_t k = 0;
  Sense which = Sense::One;
  /// Set when fewer than kMinSubspaceDim eigenvalues are numerically nonzero
  /// and the basis was truncated to the available rank.
  bool rank_limited = false;
};

struct MeaningDirection {
  linalg::Vector unit;
  double scale = 0.0;
  Sense which = Sense::One;

  linalg::Vector scaled() const { return scale * unit; }
};

struct KSelection {
  std::size_t k = 0;
  bool rank_limited = false;
};

/// Smallest k >= 3 whose leading eigenvalues carry strictly more than
/// `threshold` of the spectrum's total, capped at the count of eigenvalues
/// above 1e-12 of the largest. Ratios within 1e-12 of the threshold count as
/// equal to it (and therefore do not exceed it).
KSelection select_k(std::span<const double> spectrum, double threshold);

struct VectorPair {
  linalg::Vector ambiguous;
  linalg::Vector sense;
};

DifferenceSubspace build_difference_subspace(std::span<const VectorPair> pairs, double threshold,
                                             Sense which = Sense::One);

/// Intermediate vectors of the direction estimate, kept for diagnostics.
struct DirectionTrace {
  linalg::Vector initial;          // average projection into the subspace
  linalg::Vector deflated;         // after removing every other-sense vector
  std::size_t skipped_others = 0;  // others already spanned by earlier ones
  std::size_t scale_index = 0;     // which own-sense vector attained the max
};

/// Average projection of the own-sense vectors into `subspace`, deflated
/// against the other-sense vectors in input order, normalized, then scaled by
/// the largest own-sense projection onto the result.
MeaningDirection estimate_direction(const DifferenceSubspace& subspace,
                                    std::span<const linalg::Vector> own_sense_vectors,
                                    std::span<const linalg::Vector> other_sense_vectors,
                                    DirectionTrace* trace = nullptr);

struct SentenceScores {
  std::string amb_text;
  // dot products with the unit directions: [0] = sense 1, [1] = sense 2
  double amb[2] = {0, 0};
  double s1[2] = {0, 0};
  double s2[2] = {0, 0};
};

struct FitReport {
  std::vector<SentenceScores> sentences;
  std::size_t k[2] = {0, 0};
  bool rank_limited[2] = {false, false};
  linalg::Vector spectrum[2];
  double scale[2] = {0, 0};
  std::size_t scale_index[2] = {0, 0};
  /// Cosines of the principal angles between the amb->1 and amb->2 bases.
  std::vector<double> principal_cosines;
  /// max_n |unit . other_n| / |other_n| after deflation, per sense.
  double max_residual_overlap[2] = {0, 0};
  double unit_cosine = 0.0;  // cosine between the two fitted units
};

struct SenseFit {
  MeaningDirection v1;
  MeaningDirection v2;
  FitReport report;
};

SenseFit fit_senses(const EmbeddingBundle& bundle, std::span<const SentenceTriple> triples,
                    double threshold = kDefaultThreshold);

}  // namespace sensespace
