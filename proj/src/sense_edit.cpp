#include "sensespace/sense_edit.hpp"

#include "sensespace/error.hpp"

#include <charconv>
#include <cmath>
#include <string>

namespace sensespace {

using linalg::Vector;

namespace {

std::string shortest(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

const MeaningDirection& by_sense(const MeaningDirection& a, const MeaningDirection& b, Sense s) {
  return a.which == s ? a : b;
}

}  // namespace

SenseEditOutcome edit_sense(const Vector& original, const MeaningDirection& keep,
                            const MeaningDirection& remove) {
  if (keep.which == remove.which) {
    throw Error(ErrorCode::UsageError, "keep and remove directions must be different senses");
  }
  if (original.size() != keep.unit.size() || original.size() != remove.unit.size()) {
    throw Error(ErrorCode::DimensionMismatch, "edit vector and directions differ in length");
  }
  linalg::require_finite(original, "vector to edit");

  const Vector v_remove = remove.scaled();
  const Vector v_keep = keep.scaled();
  const auto [u_remove, u_keep] = linalg::gram_schmidt_pair(v_remove, v_keep);

  SenseEditOutcome out;
  out.removed_component = original.dot(u_remove) * u_remove + original.dot(u_keep) * u_keep;
  // (|v_k| / |v_k - proj(v_k, v_r)|) (v_k - proj(v_k, v_r)) is |v_k| times the
  // second Gram-Schmidt vector; u_keep carries the re-orthogonalized form.
  out.injected_component = v_keep.norm() * u_keep;
  out.edited_vector = original - out.removed_component + out.injected_component;

  const MeaningDirection& d1 = by_sense(keep, remove, Sense::One);
  const MeaningDirection& d2 = by_sense(keep, remove, Sense::Two);
  out.diagnostics.original[0] = original.dot(d1.unit);
  out.diagnostics.original[1] = original.dot(d2.unit);
  out.diagnostics.edited[0] = out.edited_vector.dot(d1.unit);
  out.diagnostics.edited[1] = out.edited_vector.dot(d2.unit);
  return out;
}

PromptEncoding edit_prompt(const PromptEncoding& encoding,
                           std::span<const std::size_t> token_indices,
                           const MeaningDirection& keep, const MeaningDirection& remove) {
  for (std::size_t idx : token_indices) {
    if (idx >= static_cast<std::size_t>(encoding.matrix.rows())) {
      throw Error(ErrorCode::IndexOutOfBounds,
                  "token index " + std::to_string(idx) + " out of range for \"" + encoding.text +
                      "\" (" + std::to_string(encoding.matrix.rows()) + " tokens)");
    }
  }
  PromptEncoding out = encoding;
  for (std::size_t idx : token_indices) {
    const auto row = static_cast<Eigen::Index>(idx);
    const Vector original = encoding.matrix.row(row).transpose();
    out.matrix.row(row) = edit_sense(original, keep, remove).edited_vector.transpose();
  }
  return out;
}

std::string combined_label(const PromptEncoding& e1, const PromptEncoding& e2, double alpha1,
                           double alpha2) {
  return "SUM(" + shortest(alpha1) + "·" + e1.text + ", " + shortest(alpha2) + "·" +
         e2.text + ")";
}

PromptEncoding combine_encodings(const PromptEncoding& e1, const PromptEncoding& e2,
                                 double alpha1, double alpha2) {
  if (!std::isfinite(alpha1) || !std::isfinite(alpha2) ||
      std::abs(alpha1 + alpha2 - 1.0) > kWeightSumTolerance) {
    throw Error(ErrorCode::WeightsInvalid,
                "weights must be finite and sum to 1 (got " + shortest(alpha1) + " + " +
                    shortest(alpha2) + ")");
  }
  if (e1.matrix.rows() != e2.matrix.rows() || e1.matrix.cols() != e2.matrix.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                "encodings differ in shape: " + std::to_string(e1.matrix.rows()) + "x" +
                    std::to_string(e1.matrix.cols()) + " vs " + std::to_string(e2.matrix.rows()) +
                    "x" + std::to_string(e2.matrix.cols()));
  }
  PromptEncoding out;
  out.text = combined_label(e1, e2, alpha1, alpha2);
  out.tokens = e1.tokens;
  out.matrix = alpha1 * e1.matrix + alpha2 * e2.matrix;
  return out;
}

}  // namespace sensespace
