#pragma once

#include "sensespace/embedding_io.hpp"
#include "sensespace/linalg.hpp"
#include "sensespace/sense_space.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sensespace::synth {

/// Generative model for token vectors whose sense structure is known:
///   amb_n = a m1 + b m2 + c_n + e,  s1_n = s m1 + c_n + e,  s2_n = s m2 + c_n + e
/// where c_n is a per-sentence context vector orthogonal to span(m1, m2) and e
/// is fresh isotropic Gaussian noise for every vector.
struct SynthSpec {
  std::size_t dim = 64;
  std::size_t n_sentences = 8;
  /// Planted sense directions. Left empty, a random orthonormal pair is drawn.
  linalg::Vector planted_m1;
  linalg::Vector planted_m2;
  double amb_a = 0.5;
  double amb_b = 0.5;
  double sense_scale = 1.0;  // s
  /// Expected norm of each context vector c_n.
  double context_scale = 0.25;
  /// Per-coordinate standard deviation of e.
  double noise_sigma = 0.0;
  std::uint64_t seed = 7;
};

void validate_spec(const SynthSpec& spec);

struct Truth {
  linalg::Vector m1;
  linalg::Vector m2;
};

struct SynthResult {
  EmbeddingBundle bundle;
  std::vector<SentenceTriple> triples;
  Truth truth;
};

/// Token layout of every generated prompt; the target word sits at index 2.
inline constexpr std::size_t kTargetTokenIndex = 2;
inline constexpr const char* kTargetWord = "word";

SynthResult generate_synthetic(const SynthSpec& spec);

struct RecoveryReport {
  // |cos| between fitted unit i and planted direction j: cos[i][j], 0-based
  double cos[2][2] = {{0, 0}, {0, 0}};
  double min_cosine = 0.0;
  bool pass = false;
  bool cross_assigned = false;
  std::string message;
};

RecoveryReport verify_recovery(const Truth& truth, const MeaningDirection& fitted1,
                               const MeaningDirection& fitted2, double min_cosine);

/// Deterministic standard-normal source: mt19937_64 feeding Box-Muller.
class GaussianSource {
public:
  explicit GaussianSource(std::uint64_t seed);
  double next();
  linalg::Vector vector(std::size_t dim, double sigma);

private:
  double uniform_open();  // (0, 1)

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sensespace::synth
