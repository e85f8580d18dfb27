#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "smra/corpus.hpp"

namespace smra {

// Fixed-length token view of one text. After padding, all vectors have
// length L == max_len. Offsets are code-point ranges into the original
// text with the (0,0) sentinel on special and pad positions. validity is
// true only on content tokens; attendable additionally covers the special
// tokens (everything except padding).
struct TokenizedText {
  std::vector<int> token_ids;
  std::vector<CharSpan> offsets;
  std::vector<std::uint8_t> validity;
  std::vector<std::uint8_t> attendable;
  std::vector<std::string> tokens;  // surface forms, specials as "[CLS]" etc.
  bool truncated = false;           // content was dropped to fit max_len

  int length() const { return static_cast<int>(token_ids.size()); }
  int valid_count() const;
};

// Minimal backend interface: segment text into surface tokens with
// code-point offsets and map them to vocabulary ids.
class Tokenizer {
 public:
  struct RawToken {
    std::string text;
    int begin = -1;  // code points; a backend that cannot provide offsets
    int end = -1;    // leaves these at -1 and tokenize_with_offsets rejects it
  };

  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kClsId = 2;
  static constexpr int kSepId = 3;
  static constexpr int kNumSpecialIds = 4;

  virtual ~Tokenizer() = default;
  virtual std::vector<RawToken> run(const std::string& text) const = 0;
  virtual int token_to_id(const std::string& token) const = 0;
  virtual int vocab_size() const = 0;
};

// Whitespace/punctuation word tokenizer with a lowercased vocabulary.
// Punctuation marks become standalone single-character tokens.
class WordTokenizer : public Tokenizer {
 public:
  WordTokenizer();

  std::vector<RawToken> run(const std::string& text) const override;
  int token_to_id(const std::string& token) const override;
  int vocab_size() const override;
  const std::string& id_to_token(int id) const;

  // Vocabulary from the texts' tokens, by descending frequency then
  // lexicographic order; ids start after the reserved specials.
  static WordTokenizer fit(const std::vector<Instance>& instances, int min_count = 1,
                           int max_vocab = 50000);
  static WordTokenizer fit_texts(const std::vector<std::string>& texts, int min_count = 1,
                                 int max_vocab = 50000);

  void save(const std::string& path) const;
  static WordTokenizer load(const std::string& path);

 private:
  std::unordered_map<std::string, int> vocab_;
  std::vector<std::string> id_to_token_;
  void add_token(const std::string& token);
};

// Splits a text into word/punctuation pieces with code-point offsets
// (no vocabulary involved).
std::vector<Tokenizer::RawToken> segment_words(const std::string& text);

// [CLS] + content + [SEP], truncated to max_len, padded to max_len.
// max_len must be >= 2; throws TokenizerError when the backend yields
// tokens without offsets.
TokenizedText tokenize_with_offsets(const std::string& text, const Tokenizer& tokenizer,
                                    int max_len);

// Rebuild a padded sequence from a subset of an existing tokenization's
// content positions (used for rationale erasure: drop or keep tokens, then
// re-encode). `keep` is indexed by token position in `tok`.
TokenizedText reencode_subset(const TokenizedText& tok, const std::vector<std::uint8_t>& keep,
                              int max_len);

}  // namespace smra
