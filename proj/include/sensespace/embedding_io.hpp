#pragma once

#include "sensespace/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sensespace {

/// Per-token encoder output for one prompt: rows are tokens, columns are the
/// embedding width. Entries are held at double precision; on disk they are f32.
struct PromptEncoding {
  std::string text;
  std::vector<std::string> tokens;
  linalg::Matrix matrix;

  std::size_t token_count() const noexcept { return tokens.size(); }
};

struct EmbeddingBundle {
  std::vector<PromptEncoding> prompts;
  std::size_t dim = 0;
  std::string encoder_tag;

  /// Index of the first prompt whose text equals `text` exactly.
  /// Throws PromptNotFound.
  std::size_t find_prompt(std::string_view text) const;
};

/// An ambiguous prompt plus its two sense-disambiguated rewrites, with the
/// token position of the target word in each.
struct SentenceTriple {
  std::string amb;
  std::string s1;
  std::string s2;
  std::string target_word;
  std::size_t token_index_amb = 0;
  std::size_t token_index_s1 = 0;
  std::size_t token_index_s2 = 0;
};

struct TripleVectors {
  linalg::Vector amb;
  linalg::Vector s1;
  linalg::Vector s2;
};

inline constexpr char kBundleMagic[4] = {'S', 'E', 'M', 'B'};
inline constexpr std::uint16_t kBundleVersion = 1;

/// Throws on any violated bundle invariant (shape, token count, finiteness).
void validate_bundle(const EmbeddingBundle& bundle);

std::vector<std::byte> encode_bundle(const EmbeddingBundle& bundle);
EmbeddingBundle decode_bundle(std::span<const std::byte> bytes);

EmbeddingBundle load_bundle(const std::filesystem::path& path);
void save_bundle(const EmbeddingBundle& bundle, const std::filesystem::path& path);

linalg::Vector extract_token_vector(const EmbeddingBundle& bundle, std::size_t prompt_index,
                                    std::size_t token_index);

/// Case-folded comparison of a stored token against the target word. Common
/// subword markers ("</w>", leading "Ġ", "▁", "##") are ignored.
bool token_matches(std::string_view token, std::string_view target_word);

/// Checks that all three prompts exist and each index points at the target
/// word. Throws PromptNotFound, IndexOutOfBounds, or TokenMismatch.
void validate_triple(const EmbeddingBundle& bundle, const SentenceTriple& triple);

TripleVectors extract_triple_vectors(const EmbeddingBundle& bundle,
                                     const SentenceTriple& triple);

std::vector<SentenceTriple> load_triples(const std::filesystem::path& path);
void save_triples(std::span<const SentenceTriple> triples, const std::filesystem::path& path);
std::vector<SentenceTriple> parse_triples(std::string_view json_text);
std::string dump_triples(std::span<const SentenceTriple> triples);

/// Reads a whole file; throws FileNotFound.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace sensespace
