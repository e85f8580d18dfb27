#pragma once

// Brute-force reference computations for the test suites. These stay
// deliberately independent of the library's implementation paths: set
// arithmetic instead of incremental counters, pair counting instead of
// rank sums, threshold enumeration instead of grouped sweeps.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "smra/metrics.hpp"
#include "smra/tape.hpp"
#include "smra/tokenize.hpp"

namespace oracles {

// Character-membership rule: a content token is marked iff at least one of
// its characters lies inside some span.
inline std::vector<std::uint8_t> span_mask_bruteforce(const smra::TokenizedText& tok,
                                                      const std::vector<smra::CharSpan>& spans) {
  std::vector<std::uint8_t> mask(tok.token_ids.size(), 0);
  for (int i = 0; i < tok.length(); ++i) {
    if (!tok.validity[i]) continue;
    for (int c = tok.offsets[i].begin; c < tok.offsets[i].end; ++c) {
      bool inside = false;
      for (const auto& span : spans) {
        if (c >= span.begin && c < span.end) {
          inside = true;
          break;
        }
      }
      if (inside) {
        mask[static_cast<std::size_t>(i)] = 1;
        break;
      }
    }
  }
  return mask;
}

inline std::set<std::size_t> mask_set(const std::vector<std::uint8_t>& mask) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.insert(i);
  return out;
}

inline double iou_bruteforce(const smra::PredictionRecord& r, bool strict_greater) {
  const auto m = mask_set(r.model_mask);
  const auto h = mask_set(r.gold_mask);
  std::set<std::size_t> inter, uni;
  std::set_intersection(m.begin(), m.end(), h.begin(), h.end(),
                        std::inserter(inter, inter.begin()));
  std::set_union(m.begin(), m.end(), h.begin(), h.end(), std::inserter(uni, uni.begin()));
  const double iou = uni.empty() ? 1.0 : static_cast<double>(inter.size()) / uni.size();
  return (strict_greater ? iou > 0.5 : iou >= 0.5) ? 1.0 : 0.0;
}

inline double dice_bruteforce(const smra::PredictionRecord& r) {
  const auto m = mask_set(r.model_mask);
  const auto h = mask_set(r.gold_mask);
  if (m.empty() && h.empty()) return 1.0;
  std::set<std::size_t> inter;
  std::set_intersection(m.begin(), m.end(), h.begin(), h.end(),
                        std::inserter(inter, inter.begin()));
  return 2.0 * static_cast<double>(inter.size()) / static_cast<double>(m.size() + h.size());
}

inline double macro_f1_bruteforce(const std::vector<smra::PredictionRecord>& records,
                                  smra::F1Mode mode, smra::Task task) {
  auto primary = [&](const smra::PredictionRecord& r) -> std::string {
    return task == smra::Task::hate ? smra::to_string(*r.gold_hate) : r.gold_moral.front();
  };
  auto in_gold = [&](const smra::PredictionRecord& r, const std::string& c) {
    if (task == smra::Task::hate || mode == smra::F1Mode::strict) return primary(r) == c;
    return std::find(r.gold_moral.begin(), r.gold_moral.end(), c) != r.gold_moral.end();
  };
  std::set<std::string> classes;
  for (const auto& r : records) {
    classes.insert(primary(r));
    if (!r.predicted.empty()) classes.insert(r.predicted);
    if (mode == smra::F1Mode::adapted)
      for (const auto& g : r.gold_moral) classes.insert(g);
  }
  double sum = 0;
  int used = 0;
  for (const auto& c : classes) {
    long tp = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
      if (r.predicted.empty()) {
        if (primary(r) == c) fn += 1;
        continue;
      }
      if (mode == smra::F1Mode::strict) {
        const bool pred_c = r.predicted == c;
        const bool gold_c = primary(r) == c;
        if (pred_c && gold_c) tp += 1;
        if (pred_c && !gold_c) fp += 1;
        if (!pred_c && gold_c) fn += 1;
      } else {
        const bool correct = in_gold(r, r.predicted);
        if (r.predicted == c && correct) tp += 1;
        if (r.predicted == c && !correct) fp += 1;
        if (!correct && primary(r) == c) fn += 1;
      }
    }
    if (tp + fp + fn == 0) continue;
    sum += (2.0 * tp + fp + fn) == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    used += 1;
  }
  return used == 0 ? 0.0 : sum / used;
}

// AUROC by pair counting: P(score_pos > score_neg) + 0.5 P(tie).
inline double auroc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1;
      if (scores[i] > scores[j]) {
        wins += 1;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

// Average precision by explicit threshold enumeration over distinct scores.
inline double auprc_thresholds(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
  long total_pos = 0;
  for (int y : labels) total_pos += y ? 1 : 0;
  double ap = 0, prev_recall = 0;
  for (const double t : thresholds) {
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) (labels[i] ? tp : fp) += 1;
    }
    const double recall = static_cast<double>(tp) / total_pos;
    const double precision = static_cast<double>(tp) / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

inline double power_mean_direct(const std::vector<double>& values, double p) {
  double acc = 0;
  for (double v : values) acc += std::pow(v, p);
  return std::pow(acc / static_cast<double>(values.size()), 1.0 / p);
}

// Kappa through the agreement-weight route (p_o - p_e)/(1 - p_e) with
// w = 1 - d; algebraically equal to the production formula but a separate
// code path.
inline std::optional<double> kappa_agreement_route(const std::vector<int>& a,
                                                   const std::vector<int>& b, int k) {
  const auto n = static_cast<double>(a.size());
  std::vector<std::vector<double>> O(static_cast<std::size_t>(k),
                                     std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (std::size_t t = 0; t < a.size(); ++t)
    O[static_cast<std::size_t>(a[t])][static_cast<std::size_t>(b[t])] += 1.0 / n;
  std::vector<double> row(static_cast<std::size_t>(k), 0), col(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      row[static_cast<std::size_t>(i)] += O[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      col[static_cast<std::size_t>(j)] += O[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  double po = 0, pe = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double w = 1.0 - static_cast<double>((i - j)) * (i - j) /
                                 (static_cast<double>((k - 1)) * (k - 1));
      po += w * O[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      pe += w * row[static_cast<std::size_t>(i)] * col[static_cast<std::size_t>(j)];
    }
  if (1.0 - pe == 0.0) return std::nullopt;
  return (po - pe) / (1.0 - pe);
}

// Central finite difference of a scalar function with respect to one flat
// parameter coordinate.
inline double central_difference(const std::function<double()>& f, smra::ad::ParamStore& params,
                                 std::size_t idx, double h) {
  const double saved = params.flat_get(idx);
  params.flat_set(idx, saved + h);
  const double fp = f();
  params.flat_set(idx, saved - h);
  const double fm = f();
  params.flat_set(idx, saved);
  return (fp - fm) / (2.0 * h);
}

}  // namespace oracles
