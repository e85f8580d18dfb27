#include "smra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "smra/errors.hpp"

namespace smra {

using nlohmann::json;

namespace {

json record_to_json(const PredictionRecord& r) {
  json j;
  j["id"] = r.id;
  if (r.gold_hate) {
    j["gold_hate"] = to_string(*r.gold_hate);
  } else {
    j["gold_hate"] = nullptr;
  }
  j["gold_moral"] = r.gold_moral;
  j["predicted"] = r.predicted;
  j["class_probs"] = r.class_probs;
  j["logits"] = r.logits;
  if (r.attention) {
    j["attention"] = *r.attention;
  } else {
    j["attention"] = nullptr;
  }
  j["validity"] = r.validity;
  j["gold_mask"] = r.gold_mask;
  j["model_mask"] = r.model_mask;
  if (r.probs_erased) {
    j["probs_erased"] = *r.probs_erased;
  } else {
    j["probs_erased"] = nullptr;
  }
  if (r.probs_rationale_only) {
    j["probs_rationale_only"] = *r.probs_rationale_only;
  } else {
    j["probs_rationale_only"] = nullptr;
  }
  j["subgroup_tags"] = r.subgroup_tags;
  return j;
}

template <typename T>
std::vector<T> array_of(const json& j, const char* field, int line_no) {
  if (!j.contains(field) || !j[field].is_array())
    throw SchemaError(line_no, field, "missing or non-array field");
  std::vector<T> out;
  for (const auto& v : j[field]) out.push_back(v.get<T>());
  return out;
}

PredictionRecord record_from_json(const json& j, int line_no) {
  PredictionRecord r;
  r.id = j.value("id", std::string{});
  if (j.contains("gold_hate") && !j["gold_hate"].is_null())
    r.gold_hate = hate_label_from_string(j["gold_hate"].get<std::string>());
  if (j.contains("gold_moral")) {
    for (const auto& g : j["gold_moral"]) r.gold_moral.push_back(g.get<std::string>());
  }
  r.predicted = j.value("predicted", std::string{});
  r.class_probs = array_of<double>(j, "class_probs", line_no);
  if (j.contains("logits") && j["logits"].is_array())
    r.logits = array_of<double>(j, "logits", line_no);
  if (j.contains("attention") && !j["attention"].is_null())
    r.attention = array_of<double>(j, "attention", line_no);
  if (j.contains("validity")) r.validity = array_of<std::uint8_t>(j, "validity", line_no);
  if (j.contains("gold_mask")) r.gold_mask = array_of<std::uint8_t>(j, "gold_mask", line_no);
  if (j.contains("model_mask")) r.model_mask = array_of<std::uint8_t>(j, "model_mask", line_no);
  if (j.contains("probs_erased") && !j["probs_erased"].is_null())
    r.probs_erased = array_of<double>(j, "probs_erased", line_no);
  if (j.contains("probs_rationale_only") && !j["probs_rationale_only"].is_null())
    r.probs_rationale_only = array_of<double>(j, "probs_rationale_only", line_no);
  if (j.contains("subgroup_tags")) {
    for (const auto& t : j["subgroup_tags"]) r.subgroup_tags.push_back(t.get<std::string>());
  }
  const auto len = r.gold_mask.size();
  if (r.model_mask.size() != len || r.validity.size() != len ||
      (r.attention && r.attention->size() != len)) {
    throw SchemaError(line_no, "masks", "mask/attention lengths disagree");
  }
  return r;
}

}  // namespace

void write_dump(std::ostream& out, const DumpHeader& header,
                const std::vector<PredictionRecord>& records) {
  json h;
  h["header"] = {{"schema", "smra.predictions.v1"},
                 {"task", to_string(header.task)},
                 {"classes", header.classes},
                 {"rationale_strategy", header.rationale_strategy},
                 {"rationale_top_k", header.rationale_top_k},
                 {"model_kind", header.model_kind},
                 {"seed", header.seed}};
  out << h.dump() << '\n';
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

PredictionDump load_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prediction dump: " + path);
  PredictionDump dump;
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(line_no, "<record>", std::string("invalid JSON: ") + e.what());
    }
    if (!saw_header) {
      if (!j.contains("header")) throw SchemaError(line_no, "header", "first line must be the header");
      const auto& h = j["header"];
      dump.header.task = task_from_string(h.at("task").get<std::string>());
      for (const auto& c : h.at("classes")) dump.header.classes.push_back(c.get<std::string>());
      dump.header.rationale_strategy = h.value("rationale_strategy", std::string("threshold"));
      dump.header.rationale_top_k = h.value("rationale_top_k", 5);
      dump.header.model_kind = h.value("model_kind", std::string{});
      dump.header.seed = h.value("seed", std::uint64_t{0});
      saw_header = true;
      continue;
    }
    dump.records.push_back(record_from_json(j, line_no));
  }
  if (!saw_header) throw SchemaError(0, "header", "prediction dump is empty");
  return dump;
}

int adapted_correct(const std::string& predicted, const std::vector<std::string>& gold_set) {
  return std::find(gold_set.begin(), gold_set.end(), predicted) != gold_set.end() ? 1 : 0;
}

namespace {

std::string primary_gold(const PredictionRecord& r, Task task) {
  if (task == Task::hate) {
    if (!r.gold_hate) throw ValueError("record " + r.id + " lacks a hate label");
    return to_string(*r.gold_hate);
  }
  if (r.gold_moral.empty()) throw ValueError("record " + r.id + " lacks moral labels");
  return r.gold_moral.front();
}

std::vector<std::string> gold_set_for(const PredictionRecord& r, Task task) {
  if (task == Task::hate) return {primary_gold(r, task)};
  return r.gold_moral;
}

}  // namespace

double macro_f1(const std::vector<PredictionRecord>& records, F1Mode mode, Task task) {
  if (records.empty()) throw EmptyInput("macro_f1 over empty records");
  std::map<std::string, std::array<long, 3>> cm;  // class -> {TP, FP, FN}
  auto touch = [&](const std::string& cls) { cm.try_emplace(cls, std::array<long, 3>{0, 0, 0}); };
  for (const auto& r : records) {
    const std::string gold = primary_gold(r, task);
    touch(gold);
    if (r.predicted.empty()) {
      cm[gold][2] += 1;  // unusable prediction: a miss for the gold class
      continue;
    }
    touch(r.predicted);
    if (mode == F1Mode::strict) {
      if (r.predicted == gold) {
        cm[gold][0] += 1;
      } else {
        cm[r.predicted][1] += 1;
        cm[gold][2] += 1;
      }
    } else {
      const auto gold_set = gold_set_for(r, task);
      for (const auto& g : gold_set) touch(g);
      if (adapted_correct(r.predicted, gold_set)) {
        cm[r.predicted][0] += 1;
      } else {
        cm[r.predicted][1] += 1;
        cm[gold][2] += 1;
      }
    }
  }
  double sum = 0;
  int classes = 0;
  for (const auto& [cls, counts] : cm) {
    const auto [tp, fp, fn] = counts;
    if (tp + fp + fn == 0) continue;  // no support either way
    const double denom = 2.0 * tp + fp + fn;
    sum += denom == 0 ? 0.0 : 2.0 * tp / denom;
    classes += 1;
  }
  return classes == 0 ? 0.0 : sum / classes;
}

double accuracy(const std::vector<PredictionRecord>& records, Task task) {
  if (records.empty()) throw EmptyInput("accuracy over empty records");
  double correct = 0;
  for (const auto& r : records) {
    if (r.predicted.empty()) continue;
    if (task == Task::hate) {
      correct += r.predicted == primary_gold(r, task) ? 1 : 0;
    } else {
      correct += adapted_correct(r.predicted, r.gold_moral);
    }
  }
  return correct / static_cast<double>(records.size());
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores/labels length mismatch");
  const auto n = scores.size();
  long pos = 0;
  for (int y : labels) pos += y ? 1 : 0;
  const long neg = static_cast<long>(n) - pos;
  if (pos == 0 || neg == 0) throw ValueError("AUROC needs both classes");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // midranks over tied scores
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
    i = j + 1;
  }
  double rank_sum_pos = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (labels[k]) rank_sum_pos += rank[k];
  return (rank_sum_pos - 0.5 * pos * (pos + 1)) / (static_cast<double>(pos) * neg);
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores/labels length mismatch");
  long pos = 0;
  for (int y : labels) pos += y ? 1 : 0;
  if (pos == 0) throw ValueError("AUPRC needs at least one positive");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0;
  long tp = 0, fp = 0;
  double prev_recall = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) (labels[idx[k]] ? tp : fp) += 1;
    const double recall = static_cast<double>(tp) / pos;
    const double precision = static_cast<double>(tp) / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j + 1;
  }
  return ap;
}

std::optional<double> report_auroc(const std::vector<PredictionRecord>& records, Task task,
                                   const std::vector<std::string>& classes) {
  if (task == Task::hate) {
    const auto it = std::find(classes.begin(), classes.end(), "Hate");
    if (it == classes.end()) return std::nullopt;
    const auto hate_idx = static_cast<std::size_t>(it - classes.begin());
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : records) {
      if (!r.gold_hate || r.class_probs.size() <= hate_idx) continue;
      scores.push_back(r.class_probs[hate_idx]);
      labels.push_back(*r.gold_hate == HateLabel::Hate ? 1 : 0);
    }
    try {
      return auroc(scores, labels);
    } catch (const ValueError&) {
      return std::nullopt;
    }
  }
  // one-vs-rest over set membership
  double sum = 0;
  int used = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& r : records) {
      if (r.class_probs.size() <= c) continue;
      scores.push_back(r.class_probs[c]);
      labels.push_back(adapted_correct(classes[c], r.gold_moral));
    }
    try {
      sum += auroc(scores, labels);
      used += 1;
    } catch (const ValueError&) {
      // class absent or universal: skip
    }
  }
  if (used == 0) return std::nullopt;
  return sum / used;
}

namespace {

struct MaskSets {
  long inter = 0;
  long m_size = 0;
  long h_size = 0;
  long uni = 0;
};

MaskSets mask_sets(const PredictionRecord& r) {
  MaskSets s;
  const auto n = std::min(r.model_mask.size(), r.gold_mask.size());
  for (std::size_t i = 0; i < n; ++i) {
    const bool m = r.model_mask[i] != 0;
    const bool h = r.gold_mask[i] != 0;
    s.inter += (m && h) ? 1 : 0;
    s.uni += (m || h) ? 1 : 0;
    s.m_size += m ? 1 : 0;
    s.h_size += h ? 1 : 0;
  }
  return s;
}

}  // namespace

double iou_f1(const std::vector<PredictionRecord>& records, bool strict_greater) {
  if (records.empty()) throw EmptyInput("iou_f1 over empty records");
  double sum = 0;
  for (const auto& r : records) {
    const auto s = mask_sets(r);
    const double iou = s.uni == 0 ? 1.0 : static_cast<double>(s.inter) / s.uni;
    sum += (strict_greater ? iou > 0.5 : iou >= 0.5) ? 1.0 : 0.0;
  }
  return sum / static_cast<double>(records.size());
}

double token_f1(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw EmptyInput("token_f1 over empty records");
  double sum = 0;
  for (const auto& r : records) {
    const auto s = mask_sets(r);
    sum += (s.m_size + s.h_size) == 0
               ? 1.0
               : 2.0 * s.inter / static_cast<double>(s.m_size + s.h_size);
  }
  return sum / static_cast<double>(records.size());
}

double token_auprc(const std::vector<PredictionRecord>& records) {
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& r : records) {
    if (!r.attention) continue;
    for (std::size_t i = 0; i < r.validity.size(); ++i) {
      if (!r.validity[i]) continue;
      scores.push_back((*r.attention)[i]);
      labels.push_back(r.gold_mask[i] ? 1 : 0);
    }
  }
  if (scores.empty()) throw NoAttention("no record carries an attention distribution");
  return auprc(scores, labels);
}

const char* to_string(RationaleStrategy s) {
  return s == RationaleStrategy::threshold ? "threshold" : "top_k";
}

RationaleStrategy rationale_strategy_from_string(const std::string& s) {
  if (s == "threshold") return RationaleStrategy::threshold;
  if (s == "top_k") return RationaleStrategy::top_k;
  throw ValueError("unknown rationale strategy: " + s);
}

std::vector<std::uint8_t> extract_model_rationale(const std::vector<double>& attention,
                                                  const std::vector<std::uint8_t>& validity,
                                                  RationaleStrategy strategy, int top_k) {
  if (attention.size() != validity.size()) throw ShapeError("attention/validity length mismatch");
  std::vector<std::uint8_t> mask(attention.size(), 0);
  std::vector<std::size_t> valid_idx;
  for (std::size_t i = 0; i < validity.size(); ++i)
    if (validity[i]) valid_idx.push_back(i);
  if (valid_idx.empty()) return mask;

  if (strategy == RationaleStrategy::threshold) {
    const double cut = 1.0 / static_cast<double>(valid_idx.size());
    for (auto i : valid_idx)
      if (attention[i] >= cut) mask[i] = 1;
  } else {
    std::stable_sort(valid_idx.begin(), valid_idx.end(), [&](std::size_t a, std::size_t b) {
      if (attention[a] != attention[b]) return attention[a] > attention[b];
      return a < b;
    });
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(top_k, 0)),
                                         valid_idx.size());
    for (std::size_t i = 0; i < k; ++i) mask[valid_idx[i]] = 1;
  }
  return mask;
}

namespace {

int predicted_index(const PredictionRecord& r, const std::vector<std::string>& classes) {
  const auto it = std::find(classes.begin(), classes.end(), r.predicted);
  if (it == classes.end()) throw ValueError("predicted class not in header classes: " + r.predicted);
  return static_cast<int>(it - classes.begin());
}

}  // namespace

FaithfulnessScore comprehensiveness(const std::vector<PredictionRecord>& records,
                                    const std::vector<std::string>& classes) {
  FaithfulnessScore out;
  double sum = 0;
  for (const auto& r : records) {
    if (!r.probs_erased || r.predicted.empty()) {
      out.skipped += 1;
      continue;
    }
    const int j = predicted_index(r, classes);
    sum += r.class_probs[static_cast<std::size_t>(j)] -
           (*r.probs_erased)[static_cast<std::size_t>(j)];
    out.used += 1;
  }
  if (out.used == 0) throw MissingErasedProbs("no record carries erased-input probabilities");
  out.value = sum / out.used;
  return out;
}

FaithfulnessScore sufficiency(const std::vector<PredictionRecord>& records,
                              const std::vector<std::string>& classes) {
  FaithfulnessScore out;
  double sum = 0;
  for (const auto& r : records) {
    const bool empty_rationale =
        std::none_of(r.model_mask.begin(), r.model_mask.end(), [](std::uint8_t b) { return b; });
    if (!r.probs_rationale_only || r.predicted.empty() || empty_rationale) {
      out.skipped += 1;
      continue;
    }
    const int j = predicted_index(r, classes);
    sum += r.class_probs[static_cast<std::size_t>(j)] -
           (*r.probs_rationale_only)[static_cast<std::size_t>(j)];
    out.used += 1;
  }
  if (out.used == 0)
    throw MissingRationaleProbs("no record carries rationale-only probabilities");
  out.value = sum / out.used;
  return out;
}

std::optional<SubgroupAucs> subgroup_aucs(const std::vector<PredictionRecord>& records,
                                          const std::string& tag,
                                          const std::vector<std::string>& classes) {
  const auto it = std::find(classes.begin(), classes.end(), "Hate");
  if (it == classes.end()) return std::nullopt;
  const auto hate_idx = static_cast<std::size_t>(it - classes.begin());

  struct Scored {
    double score;
    int label;
    bool in_subgroup;
  };
  std::vector<Scored> all;
  for (const auto& r : records) {
    if (!r.gold_hate || r.class_probs.size() <= hate_idx) continue;
    const bool in_sub =
        std::find(r.subgroup_tags.begin(), r.subgroup_tags.end(), tag) != r.subgroup_tags.end();
    all.push_back({r.class_probs[hate_idx], *r.gold_hate == HateLabel::Hate ? 1 : 0, in_sub});
  }

  auto pool_auc = [&](auto include) -> std::optional<double> {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& s : all) {
      if (!include(s)) continue;
      scores.push_back(s.score);
      labels.push_back(s.label);
    }
    try {
      return auroc(scores, labels);
    } catch (const ValueError&) {
      return std::nullopt;
    }
  };

  SubgroupAucs out;
  out.tag = tag;
  out.sub = pool_auc([](const Scored& s) { return s.in_subgroup; });
  out.bpsn = pool_auc(
      [](const Scored& s) { return s.in_subgroup ? s.label == 0 : s.label == 1; });
  out.bnsp = pool_auc(
      [](const Scored& s) { return s.in_subgroup ? s.label == 1 : s.label == 0; });
  if (!out.sub) return std::nullopt;
  for (const auto& s : all) out.subgroup_size += s.in_subgroup ? 1 : 0;
  return out;
}

double gmb(const std::vector<double>& values, double p) {
  if (values.empty()) throw EmptyInput("gmb over empty values");
  if (p == 0.0) {
    double log_sum = 0;
    for (double v : values) {
      if (v <= 0) throw ValueError("geometric mean requires positive values");
      log_sum += std::log(v);
    }
    return std::exp(log_sum / static_cast<double>(values.size()));
  }
  double sum = 0;
  for (double v : values) {
    if (v <= 0 && p < 0) throw ValueError("power mean with negative exponent requires positive values");
    sum += std::pow(v, p);
  }
  return std::pow(sum / static_cast<double>(values.size()), 1.0 / p);
}

std::optional<double> weighted_cohen_kappa(const std::vector<int>& labels_a,
                                           const std::vector<int>& labels_b, int k) {
  if (labels_a.size() != labels_b.size()) throw ShapeError("label vectors differ in length");
  if (labels_a.empty()) throw EmptyInput("kappa over empty labels");
  if (k < 2) return std::nullopt;
  const auto n = static_cast<double>(labels_a.size());
  std::vector<std::vector<double>> observed(static_cast<std::size_t>(k),
                                            std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (std::size_t t = 0; t < labels_a.size(); ++t) {
    const int i = labels_a[t];
    const int j = labels_b[t];
    if (i < 0 || i >= k || j < 0 || j >= k) throw ValueError("label outside {0..k-1}");
    observed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += 1.0 / n;
  }
  std::vector<double> row(static_cast<std::size_t>(k), 0.0), col(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      row[static_cast<std::size_t>(i)] += observed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      col[static_cast<std::size_t>(j)] += observed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  const double denom_scale = static_cast<double>((k - 1)) * (k - 1);
  double num = 0, den = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double d = static_cast<double>((i - j)) * (i - j) / denom_scale;
      num += d * observed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      den += d * row[static_cast<std::size_t>(i)] * col[static_cast<std::size_t>(j)];
    }
  }
  if (den == 0) return std::nullopt;
  return 1.0 - num / den;
}

std::pair<std::vector<int>, std::vector<int>> annotator_label_pairs(
    const std::vector<Instance>& instances, const std::string& annotator_a,
    const std::string& annotator_b, int order) {
  std::vector<int> a, b;
  auto label_at_order = [order](const std::vector<RationaleAnnotation>& anns) -> std::optional<int> {
    for (const auto& ann : anns) {
      if (ann.order == order) return moral_label_index(ann.label);
    }
    return std::nullopt;
  };
  for (const auto& inst : instances) {
    const auto ia = inst.all_annotators.find(annotator_a);
    const auto ib = inst.all_annotators.find(annotator_b);
    if (ia == inst.all_annotators.end() || ib == inst.all_annotators.end()) continue;
    const auto la = label_at_order(ia->second);
    const auto lb = label_at_order(ib->second);
    if (!la || !lb) continue;  // both annotators must label the slot
    a.push_back(*la);
    b.push_back(*lb);
  }
  return {std::move(a), std::move(b)};
}

EvalReport evaluate_dump(const PredictionDump& dump, const EvalOptions& options) {
  EvalReport rep;
  rep.task = dump.header.task;
  rep.n_records = static_cast<int>(dump.records.size());
  rep.rationale_strategy = options.strategy ? to_string(*options.strategy)
                                            : dump.header.rationale_strategy;
  if (dump.records.empty()) return rep;

  std::vector<PredictionRecord> records = dump.records;
  if (options.strategy) {
    for (auto& r : records) {
      if (!r.attention) continue;
      r.model_mask = extract_model_rationale(*r.attention, r.validity, *options.strategy,
                                             options.top_k);
    }
  }

  const F1Mode mode = rep.task == Task::hate ? F1Mode::strict : F1Mode::adapted;
  rep.accuracy = accuracy(records, rep.task);
  rep.macro_f1 = macro_f1(records, mode, rep.task);
  rep.auroc = report_auroc(records, rep.task, dump.header.classes);

  const bool any_attention =
      std::any_of(records.begin(), records.end(),
                  [](const PredictionRecord& r) { return r.attention.has_value(); });
  if (any_attention) {
    rep.iou_f1 = iou_f1(records, options.strict_iou);
    rep.token_f1 = token_f1(records);
    try {
      rep.auprc = token_auprc(records);
    } catch (const Error&) {
      rep.auprc = std::nullopt;
    }
    try {
      const auto comp = comprehensiveness(records, dump.header.classes);
      rep.comprehensiveness = comp.value;
      rep.comp_skipped = comp.skipped;
    } catch (const MissingErasedProbs&) {
    }
    try {
      const auto suff = sufficiency(records, dump.header.classes);
      rep.sufficiency = suff.value;
      rep.suff_skipped = suff.skipped;
    } catch (const MissingRationaleProbs&) {
    }
  }

  std::set<std::string> tags;
  for (const auto& r : records)
    for (const auto& t : r.subgroup_tags) tags.insert(t);
  std::vector<double> subs, bpsns, bnsps;
  for (const auto& tag : tags) {
    const auto aucs = subgroup_aucs(records, tag, dump.header.classes);
    if (!aucs) {
      rep.degenerate_subgroups.push_back(tag);
      continue;
    }
    rep.subgroups.push_back(*aucs);
    if (aucs->sub) subs.push_back(*aucs->sub);
    if (aucs->bpsn) bpsns.push_back(*aucs->bpsn);
    if (aucs->bnsp) bnsps.push_back(*aucs->bnsp);
  }
  // an exact-zero AUC (tiny pools) violates the power-mean domain; the
  // report degrades to null rather than failing the whole evaluation
  auto safe_gmb = [&](const std::vector<double>& values) -> std::optional<double> {
    if (values.empty()) return std::nullopt;
    try {
      return gmb(values, options.gmb_power);
    } catch (const ValueError&) {
      return std::nullopt;
    }
  };
  rep.gmb_sub = safe_gmb(subs);
  rep.gmb_bpsn = safe_gmb(bpsns);
  rep.gmb_bnsp = safe_gmb(bnsps);
  return rep;
}

std::string report_to_json(const EvalReport& rep) {
  json j;
  j["task"] = to_string(rep.task);
  j["n_records"] = rep.n_records;
  j["rationale_strategy"] = rep.rationale_strategy;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("accuracy", rep.accuracy);
  put("macro_f1", rep.macro_f1);
  put("auroc", rep.auroc);
  put("iou_f1", rep.iou_f1);
  put("token_f1", rep.token_f1);
  put("auprc", rep.auprc);
  put("comprehensiveness", rep.comprehensiveness);
  put("sufficiency", rep.sufficiency);
  j["comp_skipped"] = rep.comp_skipped;
  j["suff_skipped"] = rep.suff_skipped;
  put("gmb_sub", rep.gmb_sub);
  put("gmb_bpsn", rep.gmb_bpsn);
  put("gmb_bnsp", rep.gmb_bnsp);
  put("kappa", rep.kappa);
  json subs = json::array();
  for (const auto& s : rep.subgroups) {
    json e;
    e["tag"] = s.tag;
    auto put_pool = [&e](const char* key, const std::optional<double>& v) {
      if (v) {
        e[key] = *v;
      } else {
        e[key] = nullptr;
      }
    };
    put_pool("sub", s.sub);
    put_pool("bpsn", s.bpsn);
    put_pool("bnsp", s.bnsp);
    e["n"] = s.subgroup_size;
    subs.push_back(std::move(e));
  }
  j["subgroups"] = std::move(subs);
  j["degenerate_subgroups"] = rep.degenerate_subgroups;
  return j.dump(2);
}

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "    --";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *v;
  return os.str();
}

}  // namespace

void print_report_table(std::ostream& out, const EvalReport& rep) {
  out << "task: " << to_string(rep.task) << "  records: " << rep.n_records
      << "  rationale strategy: " << rep.rationale_strategy << "\n";
  out << "                Classification            | Plausibility              | Faithfulness    | Fairness (AUC)\n";
  out << "  Acc.    Macro F1  AUROC   | IOU F1  Token F1  AUPRC  | Comp.   Suff.   | GMB-Sub GMB-BPSN GMB-BNSP\n";
  out << "  " << cell(rep.accuracy) << "  " << cell(rep.macro_f1) << "  " << cell(rep.auroc)
      << "  | " << cell(rep.iou_f1) << "  " << cell(rep.token_f1) << "  " << cell(rep.auprc)
      << " | " << cell(rep.comprehensiveness) << "  " << cell(rep.sufficiency) << " | "
      << cell(rep.gmb_sub) << "  " << cell(rep.gmb_bpsn) << "  " << cell(rep.gmb_bnsp) << "\n";
  for (const auto& tag : rep.degenerate_subgroups) {
    out << "  warning: subgroup \"" << tag << "\" skipped (degenerate pool)\n";
  }
}

}  // namespace smra
