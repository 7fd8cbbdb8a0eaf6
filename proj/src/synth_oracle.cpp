#include "sensespace/synth_oracle.hpp"

#include "sensespace/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sensespace::synth {

using linalg::Vector;

GaussianSource::GaussianSource(std::uint64_t seed) : engine_(seed) {}

double GaussianSource::uniform_open() {
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianSource::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open()));
  const double theta = 2.0 * std::numbers::pi * uniform_open();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Vector GaussianSource::vector(std::size_t dim, double sigma) {
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = sigma * next();
  return v;
}

void validate_spec(const SynthSpec& spec) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, why); };
  if (spec.dim < 8) fail("dim must be at least 8");
  if (spec.n_sentences < 2) fail("n_sentences must be at least 2");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    fail("noise_sigma must be finite and nonnegative");
  }
  if (!(spec.context_scale >= 0.0) || !std::isfinite(spec.context_scale)) {
    fail("context_scale must be finite and nonnegative");
  }
  if (!std::isfinite(spec.amb_a) || !std::isfinite(spec.amb_b) ||
      !std::isfinite(spec.sense_scale)) {
    fail("coefficients must be finite");
  }
  if (spec.planted_m1.size() != spec.planted_m2.size()) {
    fail("planted_m1 and planted_m2 must both be given or both omitted");
  }
  if (spec.planted_m1.size() != 0) {
    if (static_cast<std::size_t>(spec.planted_m1.size()) != spec.dim) {
      fail("planted directions must have length dim");
    }
    if (!spec.planted_m1.allFinite() || !spec.planted_m2.allFinite()) {
      fail("planted directions must be finite");
    }
    try {
      linalg::gram_schmidt_pair(spec.planted_m1, spec.planted_m2);
    } catch (const Error& e) {
      fail(std::string("planted directions unusable: ") + e.what());
    }
  }
}

SynthResult generate_synthetic(const SynthSpec& spec) {
  validate_spec(spec);
  GaussianSource rng(spec.seed);
  const std::size_t d = spec.dim;

  SynthResult out;
  if (spec.planted_m1.size() == 0) {
    const Vector a = rng.vector(d, 1.0);
    const Vector b = rng.vector(d, 1.0);
    auto [m1, m2] = linalg::gram_schmidt_pair(a, b);
    out.truth = {std::move(m1), std::move(m2)};
  } else {
    out.truth = {spec.planted_m1, spec.planted_m2};
  }
  const auto [q1, q2] = linalg::gram_schmidt_pair(out.truth.m1, out.truth.m2);

  const Vector bos = rng.vector(d, 1.0);
  const Vector eos = rng.vector(d, 1.0);
  const double context_norm_factor = spec.context_scale / std::sqrt(static_cast<double>(d - 2));

  out.bundle.dim = d;
  {
    std::ostringstream tag;
    tag << "synthetic:seed=" << spec.seed;
    out.bundle.encoder_tag = tag.str();
  }

  auto make_prompt = [&](const std::string& label, std::size_t n, const Vector& target,
                         const Vector& context_row) {
    PromptEncoding p;
    p.text = "synthetic " + label + " sentence " + std::to_string(n);
    p.tokens = {"<|startoftext|>", label + std::to_string(n), kTargetWord, "<|endoftext|>"};
    p.matrix.resize(4, static_cast<Eigen::Index>(d));
    p.matrix.row(0) = bos.transpose();
    p.matrix.row(1) = context_row.transpose();
    p.matrix.row(kTargetTokenIndex) = target.transpose();
    p.matrix.row(3) = eos.transpose();
    return p;
  };

  for (std::size_t n = 0; n < spec.n_sentences; ++n) {
    Vector c = rng.vector(d, 1.0);
    c -= c.dot(q1) * q1;
    c -= c.dot(q2) * q2;
    c *= context_norm_factor;

    // Noise is drawn unconditionally so the stream layout does not depend on sigma.
    const Vector e_amb = rng.vector(d, 1.0) * spec.noise_sigma;
    const Vector e_s1 = rng.vector(d, 1.0) * spec.noise_sigma;
    const Vector e_s2 = rng.vector(d, 1.0) * spec.noise_sigma;
    const Vector filler = rng.vector(d, 1.0);

    Vector amb = spec.amb_a * out.truth.m1 + spec.amb_b * out.truth.m2;
    Vector s1 = spec.sense_scale * out.truth.m1;
    Vector s2 = spec.sense_scale * out.truth.m2;
    if (spec.context_scale > 0) {
      amb += c;
      s1 += c;
      s2 += c;
    }
    if (spec.noise_sigma > 0) {
      amb += e_amb;
      s1 += e_s1;
      s2 += e_s2;
    }

    auto p_amb = make_prompt("amb", n, amb, filler);
    auto p_s1 = make_prompt("one", n, s1, filler);
    auto p_s2 = make_prompt("two", n, s2, filler);
    out.triples.push_back({p_amb.text, p_s1.text, p_s2.text, kTargetWord, kTargetTokenIndex,
                           kTargetTokenIndex, kTargetTokenIndex});
    out.bundle.prompts.push_back(std::move(p_amb));
    out.bundle.prompts.push_back(std::move(p_s1));
    out.bundle.prompts.push_back(std::move(p_s2));
  }
  return out;
}

RecoveryReport verify_recovery(const Truth& truth, const MeaningDirection& fitted1,
                               const MeaningDirection& fitted2, double min_cosine) {
  const Vector* planted[2] = {&truth.m1, &truth.m2};
  const MeaningDirection* fitted[2] = {&fitted1, &fitted2};
  for (int i = 0; i < 2; ++i) {
    if (planted[i]->size() != fitted[0]->unit.size() ||
        planted[i]->size() != fitted[1]->unit.size()) {
      throw Error(ErrorCode::DimensionMismatch, "planted and fitted directions differ in length");
    }
  }
  RecoveryReport r;
  r.min_cosine = min_cosine;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const Vector& f = fitted[i]->unit;
      const Vector& m = *planted[j];
      r.cos[i][j] = std::abs(f.dot(m)) / (f.norm() * m.norm());
    }
  }
  r.pass = r.cos[0][0] >= min_cosine && r.cos[1][1] >= min_cosine;
  r.cross_assigned = r.cos[0][1] > r.cos[0][0] || r.cos[1][0] > r.cos[1][1];
  std::ostringstream msg;
  msg << "cos(unit1, m1)=" << r.cos[0][0] << " cos(unit2, m2)=" << r.cos[1][1];
  if (r.cross_assigned) {
    msg << "; fitted senses look swapped: cos(unit1, m2)=" << r.cos[0][1]
        << " cos(unit2, m1)=" << r.cos[1][0];
  }
  msg << (r.pass ? " (pass)" : " (fail)");
  r.message = msg.str();
  return r;
}

}  // namespace sensespace::synth
