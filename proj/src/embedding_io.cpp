#include "sensespace/embedding_io.hpp"

#include "sensespace/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace sensespace {

using json = nlohmann::json;

namespace {

constexpr std::size_t kPreambleSize = 4 + 2 + 4;

void put_u16(std::vector<std::byte>& out, std::uint16_t v) {
  out.push_back(static_cast<std::byte>(v & 0xFFu));
  out.push_back(static_cast<std::byte>((v >> 8) & 0xFFu));
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::byte>((v >> shift) & 0xFFu));
  }
}

std::uint32_t get_u32(std::span<const std::byte> b, std::size_t at) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(b[at + i])) << (8 * i);
  }
  return v;
}

std::uint16_t get_u16(std::span<const std::byte> b, std::size_t at) {
  return static_cast<std::uint16_t>(std::to_integer<std::uint8_t>(b[at]) |
                                    (std::to_integer<std::uint8_t>(b[at + 1]) << 8));
}

[[noreturn]] void corrupt(const std::string& why) {
  throw Error(ErrorCode::CorruptPayload, "corrupt bundle: " + why);
}

std::string fold_case(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string strip_subword_markers(std::string_view token) {
  constexpr std::string_view kEndOfWord = "</w>";
  constexpr std::string_view kGpt2Space = "\xC4\xA0";       // U+0120
  constexpr std::string_view kSentencePiece = "\xE2\x96\x81";  // U+2581
  constexpr std::string_view kWordPiece = "##";
  if (token.ends_with(kEndOfWord)) token.remove_suffix(kEndOfWord.size());
  for (std::string_view prefix : {kGpt2Space, kSentencePiece, kWordPiece}) {
    if (token.starts_with(prefix)) {
      token.remove_prefix(prefix.size());
      break;
    }
  }
  return std::string(token);
}

void check_token_index(const EmbeddingBundle& bundle, std::size_t prompt_index,
                       std::size_t token_index) {
  if (prompt_index >= bundle.prompts.size()) {
    throw Error(ErrorCode::IndexOutOfBounds,
                "prompt index " + std::to_string(prompt_index) + " out of range (" +
                    std::to_string(bundle.prompts.size()) + " prompts)");
  }
  const auto& p = bundle.prompts[prompt_index];
  if (token_index >= p.token_count()) {
    throw Error(ErrorCode::IndexOutOfBounds,
                "token index " + std::to_string(token_index) + " out of range for \"" + p.text +
                    "\" (" + std::to_string(p.token_count()) + " tokens)");
  }
}

SentenceTriple triple_from_json(const json& j) {
  SentenceTriple t;
  t.amb = j.at("amb").get<std::string>();
  t.s1 = j.at("s1").get<std::string>();
  t.s2 = j.at("s2").get<std::string>();
  t.target_word = j.at("target_word").get<std::string>();
  t.token_index_amb = j.at("token_index_amb").get<std::size_t>();
  t.token_index_s1 = j.at("token_index_s1").get<std::size_t>();
  t.token_index_s2 = j.at("token_index_s2").get<std::size_t>();
  return t;
}

}  // namespace

std::size_t EmbeddingBundle::find_prompt(std::string_view text) const {
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (prompts[i].text == text) return i;
  }
  throw Error(ErrorCode::PromptNotFound, "prompt not in bundle: \"" + std::string(text) + "\"");
}

void validate_bundle(const EmbeddingBundle& bundle) {
  if (bundle.dim == 0) {
    throw Error(ErrorCode::InvalidFormat, "bundle dim must be positive");
  }
  for (const auto& p : bundle.prompts) {
    if (p.tokens.empty()) {
      throw Error(ErrorCode::ShapeMismatch, "prompt \"" + p.text + "\" has no tokens");
    }
    if (static_cast<std::size_t>(p.matrix.rows()) != p.tokens.size() ||
        static_cast<std::size_t>(p.matrix.cols()) != bundle.dim) {
      throw Error(ErrorCode::ShapeMismatch,
                  "prompt \"" + p.text + "\" matrix is " + std::to_string(p.matrix.rows()) + "x" +
                      std::to_string(p.matrix.cols()) + ", expected " +
                      std::to_string(p.tokens.size()) + "x" + std::to_string(bundle.dim));
    }
    if (!p.matrix.allFinite()) {
      throw Error(ErrorCode::NonFiniteEntry, "prompt \"" + p.text + "\" has non-finite entries");
    }
  }
}

std::vector<std::byte> encode_bundle(const EmbeddingBundle& bundle) {
  validate_bundle(bundle);

  json header;
  header["encoder_tag"] = bundle.encoder_tag;
  header["dim"] = bundle.dim;
  header["prompts"] = json::array();
  std::size_t payload_floats = 0;
  for (const auto& p : bundle.prompts) {
    header["prompts"].push_back({{"text", p.text}, {"tokens", p.tokens}});
    payload_floats += p.tokens.size() * bundle.dim;
  }
  std::string header_text;
  try {
    header_text = header.dump();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidFormat, std::string("bundle header not encodable: ") + e.what());
  }

  std::vector<std::byte> out;
  out.reserve(kPreambleSize + header_text.size() + payload_floats * 4);
  for (char c : kBundleMagic) out.push_back(static_cast<std::byte>(c));
  put_u16(out, kBundleVersion);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  for (char c : header_text) out.push_back(static_cast<std::byte>(c));

  for (const auto& p : bundle.prompts) {
    for (Eigen::Index r = 0; r < p.matrix.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.matrix.cols(); ++c) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(p.matrix(r, c))));
      }
    }
  }
  return out;
}

EmbeddingBundle decode_bundle(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 ||
      !std::equal(std::begin(kBundleMagic), std::end(kBundleMagic), bytes.begin(),
                  [](char a, std::byte b) { return static_cast<std::byte>(a) == b; })) {
    throw Error(ErrorCode::MagicMismatch, "not a bundle file (bad magic)");
  }
  if (bytes.size() < kPreambleSize) corrupt("truncated preamble");
  const std::uint16_t version = get_u16(bytes, 4);
  if (version != kBundleVersion) {
    throw Error(ErrorCode::VersionUnsupported,
                "bundle version " + std::to_string(version) + " is not supported");
  }
  const std::size_t header_len = get_u32(bytes, 6);
  if (header_len > bytes.size() - kPreambleSize) corrupt("header length exceeds file size");

  const auto* header_begin = reinterpret_cast<const char*>(bytes.data() + kPreambleSize);
  json header;
  try {
    header = json::parse(header_begin, header_begin + header_len);
  } catch (const json::exception& e) {
    corrupt(std::string("header is not valid JSON: ") + e.what());
  }

  EmbeddingBundle bundle;
  std::vector<std::size_t> rows;
  try {
    bundle.encoder_tag = header.at("encoder_tag").get<std::string>();
    bundle.dim = header.at("dim").get<std::size_t>();
    for (const auto& jp : header.at("prompts")) {
      PromptEncoding p;
      p.text = jp.at("text").get<std::string>();
      p.tokens = jp.at("tokens").get<std::vector<std::string>>();
      rows.push_back(p.tokens.size());
      bundle.prompts.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    corrupt(std::string("malformed header: ") + e.what());
  }
  if (bundle.dim == 0) corrupt("dim must be positive");

  const std::size_t payload_bytes = bytes.size() - kPreambleSize - header_len;
  std::size_t expected = 0;
  for (std::size_t r : rows) {
    if (r == 0) corrupt("prompt with zero tokens");
    expected += r * bundle.dim * 4;
  }
  if (payload_bytes != expected) {
    corrupt("payload is " + std::to_string(payload_bytes) + " bytes, header declares " +
            std::to_string(expected));
  }

  std::size_t at = kPreambleSize + header_len;
  for (auto& p : bundle.prompts) {
    const auto n_rows = static_cast<Eigen::Index>(p.tokens.size());
    const auto n_cols = static_cast<Eigen::Index>(bundle.dim);
    p.matrix.resize(n_rows, n_cols);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
      for (Eigen::Index c = 0; c < n_cols; ++c) {
        const float f = std::bit_cast<float>(get_u32(bytes, at));
        at += 4;
        if (!std::isfinite(f)) {
          throw Error(ErrorCode::NonFiniteEntry,
                      "prompt \"" + p.text + "\" has a non-finite entry at row " +
                          std::to_string(r) + ", column " + std::to_string(c));
        }
        p.matrix(r, c) = static_cast<double>(f);
      }
    }
  }
  return bundle;
}

EmbeddingBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open bundle: " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_bundle(std::as_bytes(std::span<const char>(raw)));
}

void save_bundle(const EmbeddingBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = encode_bundle(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write bundle: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::FileNotFound, "write failed: " + path.string());
}

linalg::Vector extract_token_vector(const EmbeddingBundle& bundle, std::size_t prompt_index,
                                    std::size_t token_index) {
  check_token_index(bundle, prompt_index, token_index);
  return bundle.prompts[prompt_index].matrix.row(static_cast<Eigen::Index>(token_index)).transpose();
}

bool token_matches(std::string_view token, std::string_view target_word) {
  return fold_case(strip_subword_markers(token)) == fold_case(target_word);
}

void validate_triple(const EmbeddingBundle& bundle, const SentenceTriple& triple) {
  const std::pair<const std::string*, std::size_t> slots[] = {
      {&triple.amb, triple.token_index_amb},
      {&triple.s1, triple.token_index_s1},
      {&triple.s2, triple.token_index_s2},
  };
  for (const auto& [text, index] : slots) {
    const std::size_t p = bundle.find_prompt(*text);
    check_token_index(bundle, p, index);
    const std::string& token = bundle.prompts[p].tokens[index];
    if (!token_matches(token, triple.target_word)) {
      throw Error(ErrorCode::TokenMismatch, "token \"" + token + "\" at index " +
                                                std::to_string(index) + " of \"" + *text +
                                                "\" is not \"" + triple.target_word + "\"");
    }
  }
}

TripleVectors extract_triple_vectors(const EmbeddingBundle& bundle,
                                     const SentenceTriple& triple) {
  validate_triple(bundle, triple);
  return {
      extract_token_vector(bundle, bundle.find_prompt(triple.amb), triple.token_index_amb),
      extract_token_vector(bundle, bundle.find_prompt(triple.s1), triple.token_index_s1),
      extract_token_vector(bundle, bundle.find_prompt(triple.s2), triple.token_index_s2),
  };
}

std::vector<SentenceTriple> parse_triples(std::string_view json_text) {
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_array()) throw Error(ErrorCode::InvalidFormat, "triple file must be a JSON array");
    std::vector<SentenceTriple> out;
    for (const auto& j : doc) out.push_back(triple_from_json(j));
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidFormat, std::string("malformed triple file: ") + e.what());
  }
}

std::string dump_triples(std::span<const SentenceTriple> triples) {
  json doc = json::array();
  for (const auto& t : triples) {
    doc.push_back({{"amb", t.amb},
                   {"s1", t.s1},
                   {"s2", t.s2},
                   {"target_word", t.target_word},
                   {"token_index_amb", t.token_index_amb},
                   {"token_index_s1", t.token_index_s1},
                   {"token_index_s2", t.token_index_s2}});
  }
  return doc.dump(2) + "\n";
}

std::vector<SentenceTriple> load_triples(const std::filesystem::path& path) {
  return parse_triples(read_text_file(path));
}

void save_triples(std::span<const SentenceTriple> triples, const std::filesystem::path& path) {
  write_text_file(path, dump_triples(triples));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::FileNotFound, "write failed: " + path.string());
}

}  // namespace sensespace
