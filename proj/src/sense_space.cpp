#include "sensespace/sense_space.hpp"

#include "sensespace/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sensespace {

using linalg::Matrix;
using linalg::Vector;

namespace {

constexpr double kNonzeroEigenRatio = 1e-12;
constexpr double kRatioSlack = 1e-12;
constexpr double kCollapseRatio = 1e-10;

std::string sense_label(Sense s) { return "sense " + std::to_string(sense_number(s)); }

template <typename F>
auto annotated(Sense s, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), sense_label(s) + ": " + e.what());
  }
}

void require_dim(const Vector& v, Eigen::Index d, const char* what) {
  if (v.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has length " +
                                                  std::to_string(v.size()) + ", expected " +
                                                  std::to_string(d));
  }
}

}  // namespace

KSelection select_k(std::span<const double> spectrum, double threshold) {
  if (spectrum.empty()) throw Error(ErrorCode::EmptyInput, "empty spectrum");
  const double largest = *std::max_element(spectrum.begin(), spectrum.end());
  if (!(largest > 0.0)) {
    throw Error(ErrorCode::NumericalFailure, "spectrum is identically zero");
  }
  double total = 0.0;
  std::size_t nonzero = 0;
  for (double s : spectrum) {
    total += s;
    if (s > kNonzeroEigenRatio * largest) ++nonzero;
  }

  double cumulative = 0.0;
  for (std::size_t k = 1; k <= nonzero; ++k) {
    cumulative += spectrum[k - 1];
    if (k >= kMinSubspaceDim && cumulative / total - threshold > kRatioSlack) {
      return {k, false};
    }
  }
  return {nonzero, nonzero < kMinSubspaceDim};
}

DifferenceSubspace build_difference_subspace(std::span<const VectorPair> pairs, double threshold,
                                             Sense which) {
  if (pairs.size() < 2) {
    throw Error(ErrorCode::TooFewSentences,
                "need at least 2 sentence pairs, got " + std::to_string(pairs.size()));
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::UsageError, "threshold must lie in (0, 1)");
  }
  const Eigen::Index d = pairs.front().ambiguous.size();

  // Each pair {amb, sense} contributes its two deviations about the pair mean.
  std::vector<Vector> deviations;
  deviations.reserve(2 * pairs.size());
  for (const auto& [amb, sense] : pairs) {
    require_dim(amb, d, "ambiguous vector");
    require_dim(sense, d, "sense vector");
    linalg::require_finite(amb, "ambiguous vector");
    linalg::require_finite(sense, "sense vector");
    const Vector mean = 0.5 * (amb + sense);
    deviations.push_back(amb - mean);
    deviations.push_back(sense - mean);
  }

  const auto eig = linalg::symmetric_eigendecomposition(linalg::accumulate_outer(deviations));

  // The pair deviations are +/- of one vector, so rank is at most N.
  const auto n_values = std::min<Eigen::Index>(static_cast<Eigen::Index>(pairs.size()), d);
  DifferenceSubspace out;
  out.which = which;
  out.singular_values = eig.eigenvalues.head(n_values);

  const KSelection sel = select_k(
      std::span<const double>(out.singular_values.data(), out.singular_values.size()), threshold);
  out.k = sel.k;
  out.rank_limited = sel.rank_limited;
  for (std::size_t j = 0; j < sel.k; ++j) {
    out.basis.push_back(eig.eigenvectors.col(static_cast<Eigen::Index>(j)));
  }
  return out;
}

MeaningDirection estimate_direction(const DifferenceSubspace& subspace,
                                    std::span<const Vector> own_sense_vectors,
                                    std::span<const Vector> other_sense_vectors,
                                    DirectionTrace* trace) {
  if (own_sense_vectors.empty() || other_sense_vectors.empty()) {
    throw Error(ErrorCode::EmptyInput, "direction estimate needs own and other sense vectors");
  }
  if (subspace.basis.empty()) {
    throw Error(ErrorCode::CollapsedDirection, "difference subspace is empty");
  }
  const Eigen::Index d = subspace.basis.front().size();
  for (const auto& v : own_sense_vectors) require_dim(v, d, "own-sense vector");
  for (const auto& v : other_sense_vectors) require_dim(v, d, "other-sense vector");

  Vector mean_own = Vector::Zero(d);
  for (const auto& v : own_sense_vectors) mean_own += v;
  mean_own /= static_cast<double>(own_sense_vectors.size());

  Vector initial = Vector::Zero(d);
  for (const auto& u : subspace.basis) initial += mean_own.dot(u) * u;
  const double initial_norm = initial.norm();
  if (initial_norm <= linalg::kZeroNorm) {
    throw Error(ErrorCode::CollapsedDirection, "average projection into the subspace is zero");
  }

  // Sequential deflation in input order. Each other-sense vector is first
  // orthogonalized against the ones already processed, so every step keeps
  // the orthogonality earned by the previous steps; for mutually orthogonal
  // others this is exactly v <- v - proj(v, other_n).
  Vector v = initial;
  std::vector<Vector> processed;
  std::size_t skipped = 0;
  for (const auto& other : other_sense_vectors) {
    Vector q = other;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& p : processed) q -= q.dot(p) * p;
    }
    const double qn = q.norm();
    if (qn <= kCollapseRatio * other.norm() || qn <= linalg::kZeroNorm) {
      ++skipped;
      continue;
    }
    q /= qn;
    v -= linalg::proj(v, q);
    processed.push_back(std::move(q));
  }
  // Clean-up pass against accumulated rounding.
  for (const auto& p : processed) v -= v.dot(p) * p;

  const double deflated_norm = v.norm();
  if (deflated_norm <= kCollapseRatio * initial_norm) {
    throw Error(ErrorCode::CollapsedDirection,
                "deflation against the other sense removed the whole direction");
  }

  MeaningDirection out;
  out.which = subspace.which;
  out.unit = v / deflated_norm;
  std::size_t best = 0;
  double best_dot = own_sense_vectors[0].dot(out.unit);
  for (std::size_t n = 1; n < own_sense_vectors.size(); ++n) {
    const double dot = own_sense_vectors[n].dot(out.unit);
    if (dot > best_dot) {
      best_dot = dot;
      best = n;
    }
  }
  if (!(best_dot > 0.0)) {
    throw Error(ErrorCode::NonPositiveScale,
                "own-sense vectors do not project positively onto the fitted direction");
  }
  out.scale = best_dot;

  if (trace != nullptr) {
    trace->initial = std::move(initial);
    trace->deflated = std::move(v);
    trace->skipped_others = skipped;
    trace->scale_index = best;
  }
  return out;
}

SenseFit fit_senses(const EmbeddingBundle& bundle, std::span<const SentenceTriple> triples,
                    double threshold) {
  std::vector<TripleVectors> vecs;
  vecs.reserve(triples.size());
  for (const auto& t : triples) vecs.push_back(extract_triple_vectors(bundle, t));

  std::vector<VectorPair> pairs1, pairs2;
  std::vector<Vector> s1_list, s2_list;
  for (const auto& tv : vecs) {
    pairs1.push_back({tv.amb, tv.s1});
    pairs2.push_back({tv.amb, tv.s2});
    s1_list.push_back(tv.s1);
    s2_list.push_back(tv.s2);
  }

  const auto sub1 = annotated(Sense::One, [&] {
    return build_difference_subspace(pairs1, threshold, Sense::One);
  });
  const auto sub2 = annotated(Sense::Two, [&] {
    return build_difference_subspace(pairs2, threshold, Sense::Two);
  });

  DirectionTrace trace1, trace2;
  SenseFit fit;
  fit.v1 = annotated(Sense::One,
                     [&] { return estimate_direction(sub1, s1_list, s2_list, &trace1); });
  fit.v2 = annotated(Sense::Two,
                     [&] { return estimate_direction(sub2, s2_list, s1_list, &trace2); });

  FitReport& r = fit.report;
  for (std::size_t n = 0; n < vecs.size(); ++n) {
    SentenceScores row;
    row.amb_text = triples[n].amb;
    const MeaningDirection* dirs[2] = {&fit.v1, &fit.v2};
    for (int s = 0; s < 2; ++s) {
      row.amb[s] = vecs[n].amb.dot(dirs[s]->unit);
      row.s1[s] = vecs[n].s1.dot(dirs[s]->unit);
      row.s2[s] = vecs[n].s2.dot(dirs[s]->unit);
    }
    r.sentences.push_back(std::move(row));
  }
  const DifferenceSubspace* subs[2] = {&sub1, &sub2};
  const DirectionTrace* traces[2] = {&trace1, &trace2};
  const MeaningDirection* dirs[2] = {&fit.v1, &fit.v2};
  const std::vector<Vector>* others[2] = {&s2_list, &s1_list};
  for (int s = 0; s < 2; ++s) {
    r.k[s] = subs[s]->k;
    r.rank_limited[s] = subs[s]->rank_limited;
    r.spectrum[s] = subs[s]->singular_values;
    r.scale[s] = dirs[s]->scale;
    r.scale_index[s] = traces[s]->scale_index;
    double worst = 0.0;
    for (const auto& o : *others[s]) {
      const double on = o.norm();
      if (on > 0) worst = std::max(worst, std::abs(dirs[s]->unit.dot(o)) / on);
    }
    r.max_residual_overlap[s] = worst;
  }

  const Eigen::Index d = static_cast<Eigen::Index>(bundle.dim);
  Matrix b1(d, static_cast<Eigen::Index>(sub1.k)), b2(d, static_cast<Eigen::Index>(sub2.k));
  for (std::size_t j = 0; j < sub1.k; ++j) b1.col(static_cast<Eigen::Index>(j)) = sub1.basis[j];
  for (std::size_t j = 0; j < sub2.k; ++j) b2.col(static_cast<Eigen::Index>(j)) = sub2.basis[j];
  const Eigen::JacobiSVD<Matrix> svd(b1.transpose() * b2);
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    r.principal_cosines.push_back(std::min(1.0, svd.singularValues()[i]));
  }
  r.unit_cosine = fit.v1.unit.dot(fit.v2.unit);
  return fit;
}

}  // namespace sensespace
