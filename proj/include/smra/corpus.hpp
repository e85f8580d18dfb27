#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smra/errors.hpp"

namespace smra {

// The six moral categories. NN (non-morality) is the "no moral content"
// value and excludes the other five on a single annotation slot.
enum class MoralLabel { NN, HN, FN, PN, AN, LN };
inline constexpr int kNumMoralLabels = 6;

const char* to_string(MoralLabel label);
MoralLabel moral_label_from_string(const std::string& s);  // throws ValueError

// Canonical ordinal index used for class vectors and agreement scoring:
// NN=0, HN=1, FN=2, PN=3, AN=4, LN=5.
int moral_label_index(MoralLabel label);
MoralLabel moral_label_at(int index);

enum class HateLabel { NonHate, Hate };
const char* to_string(HateLabel label);
HateLabel hate_label_from_string(const std::string& s);  // throws ValueError

// Character span in code points, [begin, end).
struct CharSpan {
  int begin = 0;
  int end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct RationaleAnnotation {
  MoralLabel label = MoralLabel::NN;
  int order = 1;  // salience rank, 1..3
  std::vector<CharSpan> spans;
  std::optional<std::string> rationale_text;
  friend bool operator==(const RationaleAnnotation&, const RationaleAnnotation&) = default;
};

struct InstanceMetadata {
  std::optional<std::string> politician_gender;
  std::optional<std::string> politician_party;
  std::optional<std::string> post_link;
  std::optional<std::string> post_summary;
  std::vector<std::string> post_themes;
  friend bool operator==(const InstanceMetadata&, const InstanceMetadata&) = default;
};

// One social-media comment. moral_annotations holds the designated
// annotator's labels (the ones that supervise training); all_annotators
// keeps every annotator's labels for agreement analysis.
struct Instance {
  std::string id;
  std::string text;
  HateLabel hate_label = HateLabel::NonHate;
  std::vector<RationaleAnnotation> moral_annotations;
  std::map<std::string, std::vector<RationaleAnnotation>> all_annotators;
  InstanceMetadata metadata;
  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Violation {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::string field;    // e.g. "moral_annotations[1].spans[0]"
  std::string message;
};

// Empty iff every invariant holds. Violations are data, not exceptions;
// duplicate labels across annotation slots are reported as warnings only.
std::vector<Violation> validate_instance(const Instance& inst);

struct RejectedRecord {
  int line = 0;
  std::string field;
  std::string message;
};

struct LoadResult {
  std::vector<Instance> instances;
  std::vector<RejectedRecord> rejected;
};

// JSONL, one instance per line, UTF-8. Missing file throws IoError;
// malformed or invalid records are collected in `rejected`, never dropped
// silently. Records with warning-level violations are kept.
LoadResult load_corpus(const std::string& path);

void save_corpus(const std::string& path, const std::vector<Instance>& instances);

std::string instance_to_json_line(const Instance& inst);
Instance instance_from_json_line(const std::string& line, int line_no);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<Instance> train;
  std::vector<Instance> validation;
  std::vector<Instance> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

// Deterministic stratified split by hate_label. Ratios must be positive and
// sum to 1; requires at least 10 instances. Per-class bucket counts are
// rounded by largest remainder against running global targets, so totals
// match round(n * ratio) and class balance stays within +-2 per bucket.
DatasetSplit split_dataset(const std::vector<Instance>& instances, SplitRatios ratios,
                           std::uint64_t seed);

struct CorpusStats {
  int total = 0;
  int hate = 0;
  int non_hate = 0;
  // counts[label][rank-1], rank = salience order 1..3
  int label_by_rank[kNumMoralLabels][3] = {};
  int non_nn_annotations = 0;
  int non_nn_with_spans = 0;
  double rationale_coverage = 0.0;  // fraction of non-NN annotations with >=1 span
  std::map<std::string, int> gender_counts;
  std::map<std::string, int> party_counts;
  std::map<std::string, int> theme_counts;
  int with_metadata = 0;
  int with_multiple_annotators = 0;
};

CorpusStats corpus_stats(const std::vector<Instance>& instances);  // throws EmptyInput

std::string stats_to_json(const CorpusStats& stats);

}  // namespace smra
