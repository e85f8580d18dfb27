#pragma once

#include <cstdint>
#include <vector>

#include "smra/corpus.hpp"
#include "smra/tokenize.hpp"

namespace smra {

// Per-token binary rationale vector aligned with one TokenizedText.
// values[i] is always 0 where the tokenization's validity is false.
struct RationaleMask {
  std::vector<std::uint8_t> values;
  MoralLabel source_label = MoralLabel::NN;

  int sum() const {
    int s = 0;
    for (auto v : values) s += v;
    return s;
  }
};

struct MaskResult {
  RationaleMask mask;
  // Set when content was truncated and some span reaches past the last
  // covered character, i.e. rationale material was lost to truncation.
  bool truncated_rationale = false;
};

// Token i is marked iff it is a content token and its character range
// overlaps any span by at least one character.
MaskResult spans_to_mask(const TokenizedText& tok, const std::vector<CharSpan>& spans,
                         MoralLabel source_label = MoralLabel::NN);

// Maximal runs of marked content tokens merged back into character ranges.
std::vector<CharSpan> mask_to_spans(const TokenizedText& tok, const RationaleMask& mask);

// r / sum(r). Throws EmptyRationale when the mask is all zero and
// ShapeError when the mask is not aligned with tok.
std::vector<double> normalize_mask(const RationaleMask& mask);

}  // namespace smra
