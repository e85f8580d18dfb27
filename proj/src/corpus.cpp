#include "smra/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smra/unicode.hpp"

namespace smra {

using nlohmann::json;

namespace {

const std::array<const char*, kNumMoralLabels> kMoralNames = {"NN", "HN", "FN",
                                                              "PN", "AN", "LN"};

}  // namespace

const char* to_string(MoralLabel label) { return kMoralNames[moral_label_index(label)]; }

MoralLabel moral_label_from_string(const std::string& s) {
  for (int i = 0; i < kNumMoralLabels; ++i) {
    if (s == kMoralNames[i]) return moral_label_at(i);
  }
  throw ValueError("unknown moral label: " + s);
}

int moral_label_index(MoralLabel label) { return static_cast<int>(label); }

MoralLabel moral_label_at(int index) {
  if (index < 0 || index >= kNumMoralLabels) throw ValueError("moral label index out of range");
  return static_cast<MoralLabel>(index);
}

const char* to_string(HateLabel label) {
  return label == HateLabel::Hate ? "Hate" : "NonHate";
}

HateLabel hate_label_from_string(const std::string& s) {
  if (s == "Hate") return HateLabel::Hate;
  if (s == "NonHate") return HateLabel::NonHate;
  throw ValueError("unknown hate label: " + s);
}

namespace {

void validate_annotation(const std::string& prefix, const RationaleAnnotation& ann,
                         std::size_t text_len, const std::string& text,
                         std::vector<Violation>& out) {
  if (ann.order < 1 || ann.order > 3) {
    out.push_back({Violation::Severity::error, prefix + ".order",
                   "order must be in {1,2,3}, got " + std::to_string(ann.order)});
  }
  for (std::size_t s = 0; s < ann.spans.size(); ++s) {
    const auto& sp = ann.spans[s];
    const std::string field = prefix + ".spans[" + std::to_string(s) + "]";
    if (sp.begin < 0 || sp.end > static_cast<int>(text_len)) {
      out.push_back({Violation::Severity::error, field,
                     "span [" + std::to_string(sp.begin) + "," + std::to_string(sp.end) +
                         ") outside text of length " + std::to_string(text_len)});
    }
    if (sp.begin >= sp.end) {
      out.push_back({Violation::Severity::error, field, "span start must be < end"});
    }
  }
  // overlap within one annotation
  auto sorted = ann.spans;
  std::sort(sorted.begin(), sorted.end(),
            [](const CharSpan& a, const CharSpan& b) { return a.begin < b.begin; });
  for (std::size_t s = 1; s < sorted.size(); ++s) {
    if (sorted[s].begin < sorted[s - 1].end) {
      out.push_back({Violation::Severity::error, prefix + ".spans",
                     "overlapping spans within one annotation"});
      break;
    }
  }
  if (ann.label == MoralLabel::NN && !ann.spans.empty()) {
    out.push_back({Violation::Severity::error, prefix + ".spans",
                   "NN annotation must have empty spans"});
  }
  if (ann.label != MoralLabel::NN && ann.spans.empty()) {
    out.push_back({Violation::Severity::error, prefix + ".spans",
                   "non-NN annotation must have at least one span"});
  }
  if (ann.rationale_text) {
    std::string joined;
    for (const auto& sp : sorted) {
      if (sp.begin < 0 || sp.end > static_cast<int>(text_len) || sp.begin >= sp.end) continue;
      if (!joined.empty()) joined += ' ';
      joined += unicode::substr(text, static_cast<std::size_t>(sp.begin),
                                static_cast<std::size_t>(sp.end));
    }
    if (*ann.rationale_text != joined) {
      out.push_back({Violation::Severity::error, prefix + ".rationale_text",
                     "rationale_text does not match span contents: expected \"" + joined +
                         "\", got \"" + *ann.rationale_text + "\""});
    }
  }
}

void validate_annotation_list(const std::string& prefix,
                              const std::vector<RationaleAnnotation>& anns,
                              std::size_t text_len, const std::string& text,
                              bool is_primary, std::vector<Violation>& out) {
  if (is_primary && anns.empty()) {
    out.push_back({Violation::Severity::error, prefix, "must be non-empty"});
  }
  if (anns.size() > 3) {
    out.push_back({Violation::Severity::error, prefix,
                   "at most 3 annotations allowed, got " + std::to_string(anns.size())});
  }
  std::vector<int> orders;
  std::vector<MoralLabel> labels;
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string p = prefix + "[" + std::to_string(i) + "]";
    validate_annotation(p, anns[i], text_len, text, out);
    orders.push_back(anns[i].order);
    labels.push_back(anns[i].label);
  }
  std::sort(orders.begin(), orders.end());
  if (std::adjacent_find(orders.begin(), orders.end()) != orders.end()) {
    out.push_back({Violation::Severity::error, prefix + ".order",
                   "order values within one instance must be distinct"});
  }
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    out.push_back({Violation::Severity::warning, prefix + ".label",
                   "duplicate moral label across annotation slots"});
  }
}

}  // namespace

std::vector<Violation> validate_instance(const Instance& inst) {
  std::vector<Violation> out;
  const std::size_t text_len = unicode::length(inst.text);
  if (inst.id.empty()) {
    out.push_back({Violation::Severity::error, "id", "id must be non-empty"});
  }
  validate_annotation_list("moral_annotations", inst.moral_annotations, text_len, inst.text,
                           /*is_primary=*/true, out);
  for (const auto& [annotator, anns] : inst.all_annotators) {
    validate_annotation_list("all_annotators." + annotator, anns, text_len, inst.text,
                             /*is_primary=*/false, out);
  }
  return out;
}

namespace {

RationaleAnnotation annotation_from_json(const json& j, int line_no, const std::string& field) {
  RationaleAnnotation ann;
  if (!j.is_object()) throw SchemaError(line_no, field, "annotation must be an object");
  if (!j.contains("label") || !j["label"].is_string())
    throw SchemaError(line_no, field + ".label", "missing or non-string label");
  try {
    ann.label = moral_label_from_string(j["label"].get<std::string>());
  } catch (const ValueError& e) {
    throw SchemaError(line_no, field + ".label", e.what());
  }
  if (!j.contains("order") || !j["order"].is_number_integer())
    throw SchemaError(line_no, field + ".order", "missing or non-integer order");
  ann.order = j["order"].get<int>();
  if (j.contains("spans")) {
    if (!j["spans"].is_array()) throw SchemaError(line_no, field + ".spans", "spans must be an array");
    for (std::size_t s = 0; s < j["spans"].size(); ++s) {
      const auto& sp = j["spans"][s];
      const std::string sf = field + ".spans[" + std::to_string(s) + "]";
      if (!sp.is_array() || sp.size() != 2 || !sp[0].is_number_integer() ||
          !sp[1].is_number_integer())
        throw SchemaError(line_no, sf, "span must be [start,end] integers");
      ann.spans.push_back({sp[0].get<int>(), sp[1].get<int>()});
    }
  }
  if (j.contains("rationale_text")) {
    if (!j["rationale_text"].is_string())
      throw SchemaError(line_no, field + ".rationale_text", "must be a string");
    ann.rationale_text = j["rationale_text"].get<std::string>();
  }
  return ann;
}

json annotation_to_json(const RationaleAnnotation& ann) {
  json j;
  j["label"] = to_string(ann.label);
  j["order"] = ann.order;
  j["spans"] = json::array();
  for (const auto& sp : ann.spans) j["spans"].push_back({sp.begin, sp.end});
  if (ann.rationale_text) j["rationale_text"] = *ann.rationale_text;
  return j;
}

}  // namespace

Instance instance_from_json_line(const std::string& line, int line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw SchemaError(line_no, "<record>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError(line_no, "<record>", "record must be a JSON object");

  Instance inst;
  if (!j.contains("id") || !j["id"].is_string())
    throw SchemaError(line_no, "id", "missing or non-string id");
  inst.id = j["id"].get<std::string>();
  if (!j.contains("text") || !j["text"].is_string())
    throw SchemaError(line_no, "text", "missing or non-string text");
  inst.text = j["text"].get<std::string>();
  if (!j.contains("hate_label") || !j["hate_label"].is_string())
    throw SchemaError(line_no, "hate_label", "missing or non-string hate_label");
  try {
    inst.hate_label = hate_label_from_string(j["hate_label"].get<std::string>());
  } catch (const ValueError& e) {
    throw SchemaError(line_no, "hate_label", e.what());
  }
  if (!j.contains("moral_annotations") || !j["moral_annotations"].is_array())
    throw SchemaError(line_no, "moral_annotations", "missing or non-array moral_annotations");
  for (std::size_t i = 0; i < j["moral_annotations"].size(); ++i) {
    inst.moral_annotations.push_back(annotation_from_json(
        j["moral_annotations"][i], line_no, "moral_annotations[" + std::to_string(i) + "]"));
  }
  if (j.contains("all_annotators")) {
    if (!j["all_annotators"].is_object())
      throw SchemaError(line_no, "all_annotators", "must be an object");
    for (const auto& [key, value] : j["all_annotators"].items()) {
      if (!value.is_array())
        throw SchemaError(line_no, "all_annotators." + key, "must be an array");
      std::vector<RationaleAnnotation> anns;
      for (std::size_t i = 0; i < value.size(); ++i) {
        anns.push_back(annotation_from_json(
            value[i], line_no, "all_annotators." + key + "[" + std::to_string(i) + "]"));
      }
      inst.all_annotators[key] = std::move(anns);
    }
  }
  if (j.contains("metadata")) {
    const auto& m = j["metadata"];
    if (!m.is_object()) throw SchemaError(line_no, "metadata", "must be an object");
    auto get_str = [&](const char* key) -> std::optional<std::string> {
      if (!m.contains(key)) return std::nullopt;
      if (!m[key].is_string()) throw SchemaError(line_no, std::string("metadata.") + key, "must be a string");
      return m[key].get<std::string>();
    };
    inst.metadata.politician_gender = get_str("politician_gender");
    inst.metadata.politician_party = get_str("politician_party");
    inst.metadata.post_link = get_str("post_link");
    inst.metadata.post_summary = get_str("post_summary");
    if (m.contains("post_themes")) {
      if (!m["post_themes"].is_array())
        throw SchemaError(line_no, "metadata.post_themes", "must be an array");
      for (const auto& t : m["post_themes"]) {
        if (!t.is_string()) throw SchemaError(line_no, "metadata.post_themes", "must be strings");
        inst.metadata.post_themes.push_back(t.get<std::string>());
      }
    }
  }
  return inst;
}

std::string instance_to_json_line(const Instance& inst) {
  json j;
  j["id"] = inst.id;
  j["text"] = inst.text;
  j["hate_label"] = to_string(inst.hate_label);
  j["moral_annotations"] = json::array();
  for (const auto& ann : inst.moral_annotations)
    j["moral_annotations"].push_back(annotation_to_json(ann));
  if (!inst.all_annotators.empty()) {
    json all = json::object();
    for (const auto& [key, anns] : inst.all_annotators) {
      json arr = json::array();
      for (const auto& ann : anns) arr.push_back(annotation_to_json(ann));
      all[key] = std::move(arr);
    }
    j["all_annotators"] = std::move(all);
  }
  const auto& md = inst.metadata;
  if (md.politician_gender || md.politician_party || md.post_link || md.post_summary ||
      !md.post_themes.empty()) {
    json m = json::object();
    if (md.politician_gender) m["politician_gender"] = *md.politician_gender;
    if (md.politician_party) m["politician_party"] = *md.politician_party;
    if (md.post_link) m["post_link"] = *md.post_link;
    if (md.post_summary) m["post_summary"] = *md.post_summary;
    if (!md.post_themes.empty()) m["post_themes"] = md.post_themes;
    j["metadata"] = std::move(m);
  }
  return j.dump();
}

LoadResult load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  LoadResult result;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Instance inst;
    try {
      inst = instance_from_json_line(line, line_no);
    } catch (const SchemaError& e) {
      result.rejected.push_back({line_no, e.field, e.what()});
      continue;
    }
    auto violations = validate_instance(inst);
    bool has_error = false;
    for (const auto& v : violations) {
      if (v.severity == Violation::Severity::error) {
        result.rejected.push_back(
            {line_no, v.field, "line " + std::to_string(line_no) + ", " + v.field + ": " + v.message});
        has_error = true;
      }
    }
    if (!has_error) result.instances.push_back(std::move(inst));
  }
  return result;
}

void save_corpus(const std::string& path, const std::vector<Instance>& instances) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& inst : instances) out << instance_to_json_line(inst) << '\n';
}

DatasetSplit split_dataset(const std::vector<Instance>& instances, SplitRatios ratios,
                           std::uint64_t seed) {
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ValueError("split ratios must be positive and sum to 1");
  }
  if (instances.size() < 10) throw ValueError("need at least 10 instances to split");

  const double r[3] = {ratios.train, ratios.validation, ratios.test};
  const auto n = static_cast<int>(instances.size());

  // Global bucket targets by largest remainder.
  int target[3];
  {
    double frac[3];
    int assigned = 0;
    for (int b = 0; b < 3; ++b) {
      const double q = n * r[b];
      target[b] = static_cast<int>(std::floor(q));
      frac[b] = q - target[b];
      assigned += target[b];
    }
    int rem = n - assigned;
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (frac[a] != frac[b]) return frac[a] > frac[b];
      return a < b;
    });
    for (int k = 0; k < rem; ++k) target[order[k]] += 1;
  }

  // Stratify by hate label; shuffle each class deterministically.
  std::vector<int> by_class[2];
  for (int i = 0; i < n; ++i) {
    by_class[instances[i].hate_label == HateLabel::Hate ? 1 : 0].push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (auto& idx : by_class) std::shuffle(idx.begin(), idx.end(), rng);

  DatasetSplit split;
  split.seed = seed;
  split.ratios = ratios;
  int allocated[3] = {0, 0, 0};
  for (const auto& idx : by_class) {
    const auto nc = static_cast<int>(idx.size());
    int take[3];
    double frac[3];
    int assigned = 0;
    for (int b = 0; b < 3; ++b) {
      const double q = nc * r[b];
      take[b] = static_cast<int>(std::floor(q));
      frac[b] = q - take[b];
      assigned += take[b];
    }
    // Per-class remainders go where the fraction is largest; ties break
    // toward the bucket furthest below its global target so totals land
    // on round(n * ratio).
    int rem = nc - assigned;
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (frac[a] != frac[b]) return frac[a] > frac[b];
      const int da = target[a] - (allocated[a] + take[a]);
      const int db = target[b] - (allocated[b] + take[b]);
      if (da != db) return da > db;
      return a < b;
    });
    for (int k = 0; k < rem; ++k) take[order[k]] += 1;

    int cursor = 0;
    std::vector<Instance>* buckets[3] = {&split.train, &split.validation, &split.test};
    for (int b = 0; b < 3; ++b) {
      for (int k = 0; k < take[b]; ++k) buckets[b]->push_back(instances[idx[cursor++]]);
      allocated[b] += take[b];
    }
  }
  return split;
}

CorpusStats corpus_stats(const std::vector<Instance>& instances) {
  if (instances.empty()) throw EmptyInput("corpus_stats requires a non-empty corpus");
  CorpusStats stats;
  stats.total = static_cast<int>(instances.size());
  for (const auto& inst : instances) {
    (inst.hate_label == HateLabel::Hate ? stats.hate : stats.non_hate) += 1;
    for (const auto& ann : inst.moral_annotations) {
      const int rank = std::clamp(ann.order, 1, 3) - 1;
      stats.label_by_rank[moral_label_index(ann.label)][rank] += 1;
      if (ann.label != MoralLabel::NN) {
        stats.non_nn_annotations += 1;
        if (!ann.spans.empty()) stats.non_nn_with_spans += 1;
      }
    }
    const auto& md = inst.metadata;
    bool any_md = false;
    if (md.politician_gender) {
      stats.gender_counts[*md.politician_gender] += 1;
      any_md = true;
    }
    if (md.politician_party) {
      stats.party_counts[*md.politician_party] += 1;
      any_md = true;
    }
    for (const auto& theme : md.post_themes) {
      stats.theme_counts[theme] += 1;
      any_md = true;
    }
    if (md.post_link || md.post_summary) any_md = true;
    if (any_md) stats.with_metadata += 1;
    if (inst.all_annotators.size() >= 2) stats.with_multiple_annotators += 1;
  }
  stats.rationale_coverage =
      stats.non_nn_annotations == 0
          ? 0.0
          : static_cast<double>(stats.non_nn_with_spans) / stats.non_nn_annotations;
  return stats;
}

std::string stats_to_json(const CorpusStats& stats) {
  json j;
  j["total"] = stats.total;
  j["hate_label_counts"] = {{"Hate", stats.hate}, {"NonHate", stats.non_hate}};
  json by_rank = json::object();
  for (int label = 0; label < kNumMoralLabels; ++label) {
    by_rank[to_string(moral_label_at(label))] = {stats.label_by_rank[label][0],
                                                 stats.label_by_rank[label][1],
                                                 stats.label_by_rank[label][2]};
  }
  j["moral_label_counts_by_rank"] = std::move(by_rank);
  j["rationale_coverage"] = stats.rationale_coverage;
  j["metadata"] = {{"gender", stats.gender_counts},
                   {"party", stats.party_counts},
                   {"themes", stats.theme_counts},
                   {"instances_with_metadata", stats.with_metadata},
                   {"instances_with_multiple_annotators", stats.with_multiple_annotators}};
  return j.dump(2);
}

}  // namespace smra
