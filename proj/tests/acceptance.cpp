// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "sensespace/embedding_io.hpp"
#include "sensespace/error.hpp"
#include "sensespace/sense_edit.hpp"
#include "sensespace/sense_space.hpp"
#include "sensespace/serialization.hpp"
#include "sensespace/stats.hpp"
#include "sensespace/synth_oracle.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace sensespace;
using linalg::Vector;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail << "first failure: " << why << "; ";
    pass = false;
  }
};

int failures = 0;

void report(const std::string& name, const std::function<void(Check&)>& body) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!c.pass) ++failures;
  std::cout << (c.pass ? "PASS " : "FAIL ") << name << " -- " << c.detail.str() << "("
            << std::fixed << std::setprecision(2) << secs << " s)" << std::endl;
}

double elapsed_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

struct EditInstance {
  Vector original;
  MeaningDirection keep;
  MeaningDirection remove;
};

std::vector<EditInstance> edit_instances() {
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  const std::array<Eigen::Index, 3> dims{8, 64, 768};
  std::vector<EditInstance> out;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index d = dims[static_cast<std::size_t>(i % 3)];
    auto draw = [&] {
      Vector v(d);
      for (Eigen::Index j = 0; j < d; ++j) v[j] = g(rng);
      return v;
    };
    Vector a = draw(), b = draw();
    const bool keep_one = i % 2 == 0;
    MeaningDirection keep{a / a.norm(), scale(rng), keep_one ? Sense::One : Sense::Two};
    MeaningDirection remove{b / b.norm(), scale(rng), keep_one ? Sense::Two : Sense::One};
    out.push_back({scale(rng) * draw(), keep, remove});
  }
  return out;
}

double fixture_number(const json& j, const char* key) { return j.at(key).get<double>(); }

}  // namespace

int main() {
  const fs::path fixtures = SENSESPACE_FIXTURE_DIR;
  const auto instances = edit_instances();

  report("edit orthogonality (1000 instances, dims 8/64/768)", [&](Check& c) {
    const auto start = std::chrono::steady_clock::now();
    double worst_orth = 0, worst_norm = 0;
    for (const auto& inst : instances) {
      const auto out = edit_sense(inst.original, inst.keep, inst.remove);
      const Vector v_r = inst.remove.scaled();
      const double orth =
          std::abs(out.edited_vector.dot(v_r)) / (out.edited_vector.norm() * v_r.norm());
      const double norm_err = std::abs(out.injected_component.norm() - inst.keep.scale);
      worst_orth = std::max(worst_orth, orth);
      worst_norm = std::max(worst_norm, norm_err);
    }
    const double secs = elapsed_since(start);
    c.detail << "max |v~.v_r|/(|v~||v_r|)=" << std::scientific << std::setprecision(2)
             << worst_orth << " (<=1e-8), max injected-norm error=" << worst_norm
             << " (<=1e-10), runtime " << std::fixed << secs << " s (<5 s); ";
    if (worst_orth > 1e-8) c.fail("orthogonality");
    if (worst_norm > 1e-10) c.fail("injected norm");
    if (secs >= 5.0) c.fail("runtime");
  });

  report("edit idempotence and nullspace preservation", [&](Check& c) {
    double worst_idem = 0, worst_null = 0;
    for (const auto& inst : instances) {
      const auto once = edit_sense(inst.original, inst.keep, inst.remove);
      const auto twice = edit_sense(once.edited_vector, inst.keep, inst.remove);
      worst_idem = std::max(worst_idem, (twice.edited_vector - once.edited_vector).norm() /
                                            once.edited_vector.norm());

      const auto [u1, u2] =
          linalg::gram_schmidt_pair(inst.remove.scaled(), inst.keep.scaled());
      Vector x = inst.original;
      x -= x.dot(u1) * u1;
      x -= x.dot(u2) * u2;
      const auto out = edit_sense(x, inst.keep, inst.remove);
      const double denom = std::max(x.norm(), out.injected_component.norm());
      worst_null =
          std::max(worst_null, (out.edited_vector - x - out.injected_component).norm() / denom);
    }
    c.detail << std::scientific << std::setprecision(2) << "max idempotence gap=" << worst_idem
             << ", max nullspace gap=" << worst_null << " (both <=1e-10 relative); ";
    if (worst_idem > 1e-10) c.fail("idempotence");
    if (worst_null > 1e-10) c.fail("nullspace");
  });

  report("oracle recovery on synthetic data", [&](Check& c) {
    const auto start = std::chrono::steady_clock::now();
    const json fx = parse_json(read_text_file(fixtures / "synth" / "recovery.json"), "recovery fixture");
    const double zero_bar = fixture_number(fx, "zero_noise_min_cosine");
    const double mean_bar = fixture_number(fx, "min_mean_cosine");
    const double per_seed_tol = fixture_number(fx, "per_seed_tolerance");
    const auto base = synth_spec_from_json(fx.at("spec"));

    double zero_min = 1.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      synth::SynthSpec spec = base;
      spec.noise_sigma = 0.0;
      spec.context_scale = 0.0;
      spec.seed = seed;
      const auto data = synth::generate_synthetic(spec);
      const auto fit = fit_senses(data.bundle, data.triples);
      const auto r = synth::verify_recovery(data.truth, fit.v1, fit.v2, zero_bar);
      zero_min = std::min({zero_min, r.cos[0][0], r.cos[1][1]});
      if (!r.pass) c.fail("zero-noise seed " + std::to_string(seed) + ": " + r.message);
    }

    double sum = 0, worst_oracle_gap = 0;
    std::size_t count = 0;
    for (const auto& row : fx.at("per_seed")) {
      synth::SynthSpec spec = base;
      spec.seed = row.at("seed").get<std::uint64_t>();
      const auto data = synth::generate_synthetic(spec);
      const auto fit = fit_senses(data.bundle, data.triples);
      const auto r = synth::verify_recovery(data.truth, fit.v1, fit.v2, 0.0);
      sum += r.cos[0][0] + r.cos[1][1];
      count += 2;
      worst_oracle_gap = std::max({worst_oracle_gap,
                                   std::abs(r.cos[0][0] - row.at("cos_sense1").get<double>()),
                                   std::abs(r.cos[1][1] - row.at("cos_sense2").get<double>())});
    }
    const double mean = sum / static_cast<double>(count);
    const double secs = elapsed_since(start);
    c.detail << std::setprecision(6) << "zero-noise min cos=" << zero_min << " (>=" << zero_bar
             << "), noisy mean cos over " << count / 2 << " seeds=" << mean << " (>=" << mean_bar
             << "), max gap to recorded oracle=" << std::scientific << std::setprecision(1)
             << worst_oracle_gap << ", runtime " << std::fixed << std::setprecision(2) << secs
             << " s (<30 s); ";
    if (count != 40) c.fail("fixture must list 20 seeds");
    if (mean < mean_bar) c.fail("noisy mean cosine");
    if (worst_oracle_gap > per_seed_tol) c.fail("disagrees with recorded oracle cosines");
    if (secs >= 30.0) c.fail("runtime");
  });

  report("k selection on constructed spectra", [&](Check& c) {
    struct Case {
      std::vector<double> spectrum;
      std::size_t expected;
    };
    const std::vector<Case> cases{
        {{0.8, 0.1, 0.06, 0.03, 0.01}, 3},  // 0.96 > 0.95
        {{0.8, 0.1, 0.05, 0.03, 0.02}, 4},  // exactly 0.95 at k=3
        {{80, 10, 5, 3, 2}, 4},             // same, unnormalized
        {{16, 2, 1, 0.6, 0.4}, 4},          // 19/20 at k=3
        {{0.9, 0.02, 0.02, 0.02, 0.02, 0.02}, 4},
        {{0.99, 0.005, 0.003, 0.002}, 3},   // never below three
        {{0.5, 0.2, 0.1, 0.1, 0.05, 0.05}, 6},  // 0.95 at k=5
        {{40, 30, 20, 5, 4, 1}, 5},         // 0.95 at k=4, 0.99 at k=5
        {{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, 20},  // 19/20 at k=19
    };
    std::size_t ok = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto got = select_k(cases[i].spectrum, 0.95).k;
      if (got == cases[i].expected) {
        ++ok;
      } else {
        c.fail("case " + std::to_string(i) + " got k=" + std::to_string(got) + ", expected " +
               std::to_string(cases[i].expected));
      }
    }
    c.detail << ok << "/" << cases.size() << " spectra match hand-computed k; ";
  });

  report("permutation test: sampled vs exact, group sizes up to 12", [&](Check& c) {
    const std::vector<int> a{1, 1, 1}, b{0, 0, 0};
    const auto toy = stats::permutation_test(a, b);
    c.detail << "3-vs-3 p=" << toy.tail_count << "/" << toy.permutations_evaluated << "; ";
    if (!(toy.mode == stats::PermutationMode::Exact && toy.p_value == 1.0 / 20.0))
      c.fail("3-vs-3 not exactly 1/20");

    stats::PermutationOptions exact;
    exact.exact_cap = std::numeric_limits<std::uint64_t>::max();
    stats::PermutationOptions sampled;
    sampled.exact_cap = 0;
    sampled.draws = stats::kDefaultDraws;
    double worst_z = 0;
    int configs = 0;
    for (int na = 1; na <= 12; ++na) {
      for (int nb = 1; nb <= 12; ++nb) {
        const int sa = (2 * na + 2) / 3, sb = nb / 3;
        const auto e = stats::permutation_test_counts(sa, na, sb, nb, exact);
        const auto s = stats::permutation_test_counts(sa, na, sb, nb, sampled);
        const double d = static_cast<double>(sampled.draws);
        const double expected = (d * e.p_value + 1.0) / (d + 1.0);
        const double se = std::max(std::sqrt(e.p_value * (1 - e.p_value) / d), 1.0 / d);
        const double z = std::abs(s.p_value - expected) / se;
        worst_z = std::max(worst_z, z);
        ++configs;
        if (z > 3.0) {
          std::ostringstream why;
          why << sa << "/" << na << " vs " << sb << "/" << nb << ": exact " << e.p_value
              << ", sampled " << s.p_value << " (" << z << " SE)";
          c.fail(why.str());
        }
      }
    }
    c.detail << configs << " size pairs, " << sampled.draws << " draws each, worst deviation "
             << std::setprecision(2) << std::fixed << worst_z << " SE (<=3); ";
  });

  report("significance of the published count tables", [&](Check& c) {
    const auto suite = stats::significance_suite(fixtures / "stats");
    std::size_t significant = 0;
    double worst_p = 0;
    for (const auto& s : suite.sums) {
      worst_p = std::max(worst_p, s.result.p_value);
      if (s.significant) {
        ++significant;
      } else {
        c.fail(s.pair + " sum vs " + s.baseline + " p=" + std::to_string(s.result.p_value));
      }
    }
    c.detail << "weighted-sum comparisons significant: " << significant << "/" << suite.sums.size()
             << " (largest p=" << std::setprecision(4) << std::fixed << worst_p
             << "); edit markings differing from the published tables: "
             << suite.disagreements.size() << "/" << suite.edits.size() << " (<=2)";
    for (const auto& d : suite.disagreements) {
      c.detail << " [" << d.prompt << " -> sense " << d.target_sense << ": "
               << d.edited_successes << "/" << d.edited_total << " vs "
               << d.unedited_successes << "/" << d.unedited_total << ", p="
               << d.result.p_value << ", published " << (*d.reference_bolded ? "bold" : "plain")
               << "]";
    }
    c.detail << "; ";
    if (suite.sums.size() != 18) c.fail("expected 18 weighted-sum comparisons");
    if (suite.disagreements.size() > 2) c.fail("too many edit disagreements");
  });

  report("aggregate of the nine weighted-sum tables", [&](Check& c) {
    const auto tables = stats::load_count_csv(fixtures / "stats" / std::string(stats::kSumFixture));
    std::vector<stats::CountTable> sums;
    for (const auto& t : tables)
      if (t.condition.ends_with("/sum")) sums.push_back(t);
    const auto agg = stats::proportions_report(sums).aggregate;
    const std::array<double, 4> published{35.2, 20.0, 41.5, 3.3};
    c.detail << sums.size() << " tables, aggregate (" << std::setprecision(2) << std::fixed;
    for (std::size_t i = 0; i < 4; ++i) {
      c.detail << agg.percent[i] << (i < 3 ? ", " : "");
      if (std::abs(agg.percent[i] - published[i]) > 0.15) c.fail("column " + std::to_string(i));
    }
    c.detail << ") vs (35.2, 20, 41.5, 3.3) within 0.15; ";
    if (sums.size() != 9) c.fail("expected nine tables");
  });

  report("bundle format round trip (100 random bundles)", [&](Check& c) {
    const auto dir = fs::temp_directory_path() / "sensespace-acceptance";
    fs::create_directories(dir);
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<float> val(-1e3f, 1e3f);
    int exact = 0;
    for (int t = 0; t < 100; ++t) {
      EmbeddingBundle b;
      b.dim = 1 + rng() % 96;
      b.encoder_tag = "random-" + std::to_string(t);
      const std::size_t prompts = rng() % 6;
      for (std::size_t p = 0; p < prompts; ++p) {
        PromptEncoding e;
        e.text = "prompt " + std::to_string(t) + "." + std::to_string(p);
        const std::size_t tokens = 1 + rng() % 12;
        for (std::size_t k = 0; k < tokens; ++k) e.tokens.push_back("tok" + std::to_string(k));
        e.matrix.resize(static_cast<Eigen::Index>(tokens), static_cast<Eigen::Index>(b.dim));
        for (Eigen::Index i = 0; i < e.matrix.size(); ++i) e.matrix.data()[i] = val(rng);
        b.prompts.push_back(std::move(e));
      }
      const auto path = dir / ("b" + std::to_string(t) + ".semb");
      save_bundle(b, path);
      const auto back = load_bundle(path);
      bool same = back.dim == b.dim && back.encoder_tag == b.encoder_tag &&
                  back.prompts.size() == b.prompts.size();
      for (std::size_t p = 0; same && p < b.prompts.size(); ++p) {
        const auto& x = b.prompts[p];
        const auto& y = back.prompts[p];
        same = x.text == y.text && x.tokens == y.tokens && x.matrix.rows() == y.matrix.rows() &&
               x.matrix.cols() == y.matrix.cols() &&
               std::memcmp(x.matrix.data(), y.matrix.data(),
                           sizeof(double) * static_cast<std::size_t>(x.matrix.size())) == 0;
      }
      // Saving the reloaded bundle must reproduce the file byte for byte.
      same = same && encode_bundle(back) == encode_bundle(b);
      if (same) {
        ++exact;
      } else {
        c.fail("bundle " + std::to_string(t));
      }
    }
    fs::remove_all(dir);
    c.detail << exact << "/100 bit-exact; ";
  });

  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
