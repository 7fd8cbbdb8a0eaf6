#include "helpers.hpp"

#include "sensespace/cli.hpp"
#include "sensespace/embedding_io.hpp"
#include "sensespace/serialization.hpp"

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

using namespace sensespace;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;

  json out_json() const { return json::parse(out); }
  json err_json() const { return json::parse(err.substr(err.rfind('{'))); }
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "sense-space");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

/// Synthesizes a bundle and fits directions to it inside `dir`.
void prepare(const fs::path& dir, const std::vector<std::string>& synth_flags = {}) {
  std::vector<std::string> args{"synth", "--out-prefix", (dir / "s").string()};
  args.insert(args.end(), synth_flags.begin(), synth_flags.end());
  REQUIRE(run(args).code == 0);
  const auto fit = run({"fit", "--bundle", (dir / "s.semb").string(), "--triples",
                        (dir / "s.triples.json").string(), "--out", (dir / "dirs.json").string()});
  REQUIRE_MESSAGE(fit.code == 0, fit.err);
}

}  // namespace

TEST_CASE("help exits cleanly; bad usage exits 2") {
  CHECK(run({"--help"}).code == cli::kExitOk);
  const auto none = run({});
  CHECK(none.code == cli::kExitInput);
  CHECK(none.err_json()["error"] == "UsageError");
  CHECK(run({"fit", "--bundle", "x"}).code == cli::kExitInput);
  CHECK(run({"frobnicate"}).code == cli::kExitInput);
}

TEST_CASE("synth then fit recovers the planted directions") {
  const auto dir = testing::scratch_dir("cli-fit");
  prepare(dir, {"--context", "0"});
  const auto truth = truth_from_json(json::parse(read_text_file(dir / "s.truth.json"))["truth"]);
  const auto dirs = load_directions(dir / "dirs.json");
  CHECK(std::abs(dirs.v1.unit.dot(truth.m1)) >= 0.999);
  CHECK(std::abs(dirs.v2.unit.dot(truth.m2)) >= 0.999);
  CHECK(dirs.dim == 64);
}

TEST_CASE("fit prints a report and warns about rank-limited spectra") {
  const auto dir = testing::scratch_dir("cli-report");
  REQUIRE(run({"synth", "--out-prefix", (dir / "s").string(), "--context", "0"}).code == 0);
  const auto fit = run({"fit", "--bundle", (dir / "s.semb").string(), "--triples",
                        (dir / "s.triples.json").string(), "--out", (dir / "d.json").string(),
                        "--report", (dir / "r.json").string()});
  REQUIRE(fit.code == 0);
  const auto report = fit.out_json();
  CHECK(report["sentences"].size() == 8);
  CHECK(report["senses"][0]["rank_limited"] == true);
  CHECK(fit.err.find("warning") != std::string::npos);
  CHECK(json::parse(read_text_file(dir / "r.json")) == report);
}

TEST_CASE("fit is deterministic") {
  const auto dir = testing::scratch_dir("cli-determinism");
  prepare(dir, {"--noise", "0.01"});
  const auto first = read_text_file(dir / "dirs.json");
  prepare(dir, {"--noise", "0.01"});
  CHECK(read_text_file(dir / "dirs.json") == first);
}

TEST_CASE("fit with a missing triples file exits 2 with FileNotFound") {
  const auto dir = testing::scratch_dir("cli-missing");
  REQUIRE(run({"synth", "--out-prefix", (dir / "s").string()}).code == 0);
  const auto r = run({"fit", "--bundle", (dir / "s.semb").string(), "--triples",
                      (dir / "nope.json").string(), "--out", (dir / "d.json").string()});
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err_json()["error"] == "FileNotFound");
  CHECK(r.out.empty());
}

TEST_CASE("numerical failures exit 3") {
  const auto dir = testing::scratch_dir("cli-numerical");
  EmbeddingBundle b;
  b.dim = 4;
  for (const char* text : {"a0", "s0", "a1", "s1"}) {
    PromptEncoding p;
    p.text = text;
    p.tokens = {"w"};
    p.matrix = linalg::Matrix::Ones(1, 4);
    b.prompts.push_back(p);
  }
  save_bundle(b, dir / "flat.semb");
  std::vector<SentenceTriple> ts{{"a0", "s0", "s0", "w", 0, 0, 0}, {"a1", "s1", "s1", "w", 0, 0, 0}};
  save_triples(ts, dir / "flat.json");
  const auto r = run({"fit", "--bundle", (dir / "flat.semb").string(), "--triples",
                      (dir / "flat.json").string(), "--out", (dir / "d.json").string()});
  CHECK(r.code == cli::kExitNumerical);
  CHECK(r.err_json()["error"] == "NumericalFailure");
}

TEST_CASE("edit toward a sense then score") {
  const auto dir = testing::scratch_dir("cli-edit");
  prepare(dir, {"--noise", "0.01"});
  const auto bundle = (dir / "s.semb").string(), dirs = (dir / "dirs.json").string();

  const auto before = run({"score", "--bundle", bundle, "--directions", dirs, "--word", "word"});
  REQUIRE(before.code == 0);
  const auto amb_row = before.out_json()["prompts"][0]["tokens"][0];
  CHECK(std::abs(amb_row["dot_sense1"].get<double>()) > 0.1);
  CHECK(std::abs(amb_row["dot_sense2"].get<double>()) > 0.1);

  for (int target : {2, 1}) {
    const auto out = (dir / ("e" + std::to_string(target) + ".semb")).string();
    const auto e = run({"edit", "--bundle", bundle, "--directions", dirs, "--prompt-index", "0",
                        "--word", "word", "--target", std::to_string(target), "--out", out});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    CHECK(e.out_json()["edits"].size() == 1);
    const auto edited = load_bundle(out);
    const auto original = load_bundle(bundle);
    CHECK(edited.prompts.size() == original.prompts.size());
    CHECK(edited.prompts[1].matrix == original.prompts[1].matrix);
    CHECK(edited.prompts[0].matrix.row(0) == original.prompts[0].matrix.row(0));

    const auto s = run({"score", "--bundle", out, "--directions", dirs, "--word", "word"});
    const auto row = s.out_json()["prompts"][0]["tokens"][0];
    const std::string removed = target == 2 ? "dot_sense1" : "dot_sense2";
    // The bundle stores f32, so the orthogonality survives only to single precision.
    CHECK(std::abs(row[removed].get<double>()) < 1e-6 * row["norm"].get<double>());
  }
}

TEST_CASE("edit selector errors") {
  const auto dir = testing::scratch_dir("cli-edit-errors");
  prepare(dir);
  const auto bundle = (dir / "s.semb").string(), dirs = (dir / "dirs.json").string();
  const auto out = (dir / "e.semb").string();
  auto r = run({"edit", "--bundle", bundle, "--directions", dirs, "--prompt-index", "0",
                "--token", "9", "--target", "1", "--out", out});
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err_json()["error"] == "IndexOutOfBounds");
  r = run({"edit", "--bundle", bundle, "--directions", dirs, "--prompt", "missing", "--token", "2",
           "--target", "1", "--out", out});
  CHECK(r.err_json()["error"] == "PromptNotFound");
  r = run({"edit", "--bundle", bundle, "--directions", dirs, "--prompt-index", "0", "--token", "2",
           "--target", "3", "--out", out});
  CHECK(r.err_json()["error"] == "UsageError");
  r = run({"edit", "--bundle", bundle, "--directions", dirs, "--prompt-index", "0", "--word",
           "absent", "--target", "1", "--out", out});
  CHECK(r.err_json()["error"] == "TokenMismatch");
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("score rejects an empty bundle") {
  const auto dir = testing::scratch_dir("cli-empty");
  prepare(dir);
  EmbeddingBundle empty;
  empty.dim = 64;
  save_bundle(empty, dir / "empty.semb");
  const auto r = run({"score", "--bundle", (dir / "empty.semb").string(), "--directions",
                      (dir / "dirs.json").string()});
  CHECK(r.code == cli::kExitInput);
  CHECK(r.err_json()["error"] == "EmptyBundle");
}

TEST_CASE("combine writes the weighted sum") {
  const auto dir = testing::scratch_dir("cli-combine");
  REQUIRE(run({"synth", "--out-prefix", (dir / "s").string()}).code == 0);
  const auto b = load_bundle(dir / "s.semb");
  const auto r = run({"combine", "--bundle", (dir / "s.semb").string(), "--first",
                      b.prompts[1].text, "--second", b.prompts[2].text, "--out",
                      (dir / "c.semb").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto c = load_bundle(dir / "c.semb");
  REQUIRE(c.prompts.size() == 1);
  const linalg::Matrix expected = 0.5 * b.prompts[1].matrix + 0.5 * b.prompts[2].matrix;
  CHECK((c.prompts[0].matrix - expected).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(c.prompts[0].text.starts_with("SUM(0.5"));

  const auto bad = run({"combine", "--bundle", (dir / "s.semb").string(), "--first",
                        b.prompts[1].text, "--second", b.prompts[2].text, "--alpha1", "0.9",
                        "--out", (dir / "c2.semb").string()});
  CHECK(bad.code == cli::kExitInput);
  CHECK(bad.err_json()["error"] == "WeightsInvalid");
}

TEST_CASE("stats modes over the bundled fixtures") {
  const auto fx = testing::fixture_dir() / "stats";
  const auto sums = run({"stats", "--counts", (fx / "sum_tables.csv").string(), "--mode", "sum"});
  REQUIRE(sums.code == 0);
  const auto comps = sums.out_json()["comparisons"];
  CHECK(comps.size() == 18);
  CHECK(comps[0]["pair"] == "dog+lake");
  for (const auto& c : comps) CHECK(c["test"]["p_value"].get<double>() < 0.05);

  const auto edits = run({"stats", "--counts", (fx / "edit_tables.csv").string(), "--mode", "edit",
                          "--bolding", (fx / "edit_bolding.csv").string()});
  REQUIRE(edits.code == 0);
  CHECK(edits.out_json()["disagreements"] == 0);

  const auto props = run({"stats", "--counts", (fx / "sum_tables.csv").string()});
  REQUIRE(props.code == 0);
  CHECK(props.out_json()["rows"][2]["both"] == 53.3);

  CHECK(run({"stats", "--counts", (fx / "sum_tables.csv").string(), "--pretty"}).code == 0);
}

TEST_CASE("stats compare mode on a toy table") {
  const auto dir = testing::scratch_dir("cli-compare");
  write_text_file(dir / "toy.csv", "condition,sense1_only,sense2_only,both,neither\nA,0,0,3,0\nB,3,0,0,0\n");
  const auto r = run({"stats", "--counts", (dir / "toy.csv").string(), "--mode", "compare"});
  REQUIRE(r.code == 0);
  CHECK(r.out_json()["test"]["p_value"] == 0.05);
  CHECK(r.out_json()["test"]["mode"] == "exact");

  write_text_file(dir / "same.csv", "condition,sense1_only,sense2_only,both,neither\nA,1,0,2,0\nB,1,0,2,0\n");
  const auto same = run({"stats", "--counts", (dir / "same.csv").string(), "--mode", "compare"});
  CHECK(same.out_json()["test"]["p_value"].get<double>() >= 0.5);

  const auto bad = run({"stats", "--counts", (dir / "toy.csv").string(), "--mode", "median"});
  CHECK(bad.code == cli::kExitInput);
}

TEST_CASE("seed precedence: flag, then spec file, then environment") {
  const auto dir = testing::scratch_dir("cli-seed");
  auto seed_of = [&](const std::vector<std::string>& extra) {
    std::vector<std::string> args{"synth", "--out-prefix", (dir / "s").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run(args);
    REQUIRE(r.code == 0);
    return r.out_json()["spec"]["seed"].get<std::uint64_t>();
  };
  write_text_file(dir / "spec.json", R"({"seed": 21, "dim": 16})");
  ::setenv("SENSE_SPACE_SEED", "99", 1);
  CHECK(seed_of({}) == 99);
  CHECK(seed_of({"--spec", (dir / "spec.json").string()}) == 21);
  CHECK(seed_of({"--seed", "5"}) == 5);
  ::setenv("SENSE_SPACE_SEED", "nonsense", 1);
  CHECK(run({"synth", "--out-prefix", (dir / "s").string()}).code == cli::kExitInput);
  ::unsetenv("SENSE_SPACE_SEED");
  CHECK(seed_of({}) == 7);
}
