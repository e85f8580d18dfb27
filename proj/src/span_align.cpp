#include "smra/span_align.hpp"

#include <algorithm>

#include "smra/errors.hpp"

namespace smra {

MaskResult spans_to_mask(const TokenizedText& tok, const std::vector<CharSpan>& spans,
                         MoralLabel source_label) {
  MaskResult result;
  result.mask.source_label = source_label;
  result.mask.values.assign(tok.token_ids.size(), 0);

  int covered_end = 0;
  for (int i = 0; i < tok.length(); ++i) {
    if (!tok.validity[i]) continue;
    covered_end = std::max(covered_end, tok.offsets[i].end);
    for (const auto& span : spans) {
      if (std::max(span.begin, tok.offsets[i].begin) < std::min(span.end, tok.offsets[i].end)) {
        result.mask.values[i] = 1;
        break;
      }
    }
  }
  if (tok.truncated) {
    for (const auto& span : spans) {
      if (span.end > covered_end) {
        result.truncated_rationale = true;
        break;
      }
    }
  }
  return result;
}

std::vector<CharSpan> mask_to_spans(const TokenizedText& tok, const RationaleMask& mask) {
  if (mask.values.size() != tok.token_ids.size())
    throw ShapeError("mask not aligned with tokenization");
  std::vector<CharSpan> out;
  int i = 0;
  const int L = tok.length();
  while (i < L) {
    if (!tok.validity[i] || !mask.values[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < L && tok.validity[j + 1] && mask.values[j + 1]) ++j;
    out.push_back({tok.offsets[i].begin, tok.offsets[j].end});
    i = j + 1;
  }
  return out;
}

std::vector<double> normalize_mask(const RationaleMask& mask) {
  const int total = mask.sum();
  if (total == 0) throw EmptyRationale("cannot normalize an all-zero rationale mask");
  std::vector<double> out(mask.values.size(), 0.0);
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    if (mask.values[i]) out[i] = 1.0 / total;
  }
  return out;
}

}  // namespace smra
