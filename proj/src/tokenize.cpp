#include "smra/tokenize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "smra/errors.hpp"
#include "smra/unicode.hpp"

namespace smra {

namespace {

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const char* kSpecialNames[Tokenizer::kNumSpecialIds] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

}  // namespace

int TokenizedText::valid_count() const {
  int v = 0;
  for (auto f : validity) v += f ? 1 : 0;
  return v;
}

std::vector<Tokenizer::RawToken> segment_words(const std::string& text) {
  std::vector<Tokenizer::RawToken> out;
  const auto cps = unicode::decode(text);
  const auto offs = unicode::codepoint_byte_offsets(text);
  const auto n = cps.size();
  std::size_t i = 0;
  auto emit = [&](std::size_t begin, std::size_t end) {
    out.push_back({text.substr(offs[begin], offs[end] - offs[begin]),
                   static_cast<int>(begin), static_cast<int>(end)});
  };
  while (i < n) {
    if (unicode::is_space(cps[i])) {
      ++i;
    } else if (unicode::is_punct(cps[i])) {
      emit(i, i + 1);
      ++i;
    } else {
      std::size_t j = i;
      while (j < n && !unicode::is_space(cps[j]) && !unicode::is_punct(cps[j])) ++j;
      emit(i, j);
      i = j;
    }
  }
  return out;
}

WordTokenizer::WordTokenizer() {
  for (const char* name : kSpecialNames) add_token(name);
}

void WordTokenizer::add_token(const std::string& token) {
  if (vocab_.count(token)) return;
  vocab_[token] = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(token);
}

std::vector<Tokenizer::RawToken> WordTokenizer::run(const std::string& text) const {
  return segment_words(text);
}

int WordTokenizer::token_to_id(const std::string& token) const {
  const auto it = vocab_.find(ascii_lower(token));
  return it == vocab_.end() ? kUnkId : it->second;
}

int WordTokenizer::vocab_size() const { return static_cast<int>(id_to_token_.size()); }

const std::string& WordTokenizer::id_to_token(int id) const {
  if (id < 0 || id >= vocab_size()) throw ValueError("token id out of range");
  return id_to_token_[id];
}

WordTokenizer WordTokenizer::fit_texts(const std::vector<std::string>& texts, int min_count,
                                       int max_vocab) {
  std::map<std::string, int> counts;  // ordered: deterministic tie-break
  for (const auto& text : texts) {
    for (const auto& tok : segment_words(text)) counts[ascii_lower(tok.text)] += 1;
  }
  std::vector<std::pair<std::string, int>> by_freq(counts.begin(), counts.end());
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  WordTokenizer tok;
  for (const auto& [word, count] : by_freq) {
    if (count < min_count) continue;
    if (tok.vocab_size() >= max_vocab) break;
    tok.add_token(word);
  }
  return tok;
}

WordTokenizer WordTokenizer::fit(const std::vector<Instance>& instances, int min_count,
                                 int max_vocab) {
  std::vector<std::string> texts;
  texts.reserve(instances.size());
  for (const auto& inst : instances) texts.push_back(inst.text);
  return fit_texts(texts, min_count, max_vocab);
}

void WordTokenizer::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary: " + path);
  for (const auto& token : id_to_token_) out << token << '\n';
}

WordTokenizer WordTokenizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary: " + path);
  WordTokenizer tok;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no <= kNumSpecialIds) {
      if (line != kSpecialNames[line_no - 1])
        throw IoError("vocabulary file does not start with the reserved special tokens");
      continue;
    }
    tok.add_token(line);
  }
  return tok;
}

TokenizedText tokenize_with_offsets(const std::string& text, const Tokenizer& tokenizer,
                                    int max_len) {
  if (max_len < 2) throw ValueError("max_len must be >= 2");
  auto raw = tokenizer.run(text);
  for (const auto& tok : raw) {
    if (tok.begin < 0 || tok.end < tok.begin) {
      throw TokenizerError("tokenizer backend yielded no offsets for token \"" + tok.text + "\"");
    }
  }

  TokenizedText out;
  const int capacity = max_len - 2;  // room for [CLS] and [SEP]
  if (static_cast<int>(raw.size()) > capacity) {
    raw.resize(capacity);
    out.truncated = true;
  }

  auto push = [&](int id, const std::string& surface, CharSpan span, bool valid, bool attend) {
    out.token_ids.push_back(id);
    out.tokens.push_back(surface);
    out.offsets.push_back(span);
    out.validity.push_back(valid ? 1 : 0);
    out.attendable.push_back(attend ? 1 : 0);
  };

  push(Tokenizer::kClsId, kSpecialNames[Tokenizer::kClsId], {0, 0}, false, true);
  for (const auto& tok : raw) {
    push(tokenizer.token_to_id(tok.text), tok.text, {tok.begin, tok.end}, true, true);
  }
  push(Tokenizer::kSepId, kSpecialNames[Tokenizer::kSepId], {0, 0}, false, true);
  while (out.length() < max_len) {
    push(Tokenizer::kPadId, kSpecialNames[Tokenizer::kPadId], {0, 0}, false, false);
  }
  return out;
}

TokenizedText reencode_subset(const TokenizedText& tok, const std::vector<std::uint8_t>& keep,
                              int max_len) {
  if (keep.size() != tok.token_ids.size()) throw ShapeError("keep mask length mismatch");
  TokenizedText out;
  auto push = [&](int id, const std::string& surface, CharSpan span, bool valid, bool attend) {
    out.token_ids.push_back(id);
    out.tokens.push_back(surface);
    out.offsets.push_back(span);
    out.validity.push_back(valid ? 1 : 0);
    out.attendable.push_back(attend ? 1 : 0);
  };
  push(Tokenizer::kClsId, kSpecialNames[Tokenizer::kClsId], {0, 0}, false, true);
  for (int i = 0; i < tok.length(); ++i) {
    if (!tok.validity[i] || !keep[i]) continue;
    if (out.length() >= max_len - 1) {
      out.truncated = true;
      break;
    }
    push(tok.token_ids[i], tok.tokens[i], tok.offsets[i], true, true);
  }
  push(Tokenizer::kSepId, kSpecialNames[Tokenizer::kSepId], {0, 0}, false, true);
  while (out.length() < max_len) {
    push(Tokenizer::kPadId, kSpecialNames[Tokenizer::kPadId], {0, 0}, false, false);
  }
  return out;
}

}  // namespace smra
