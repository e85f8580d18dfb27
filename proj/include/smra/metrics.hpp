#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "smra/corpus.hpp"
#include "smra/smra_loss.hpp"

namespace smra {

// One scored instance as written by the trainer (or the prompt harness).
// Everything the metric battery needs is in the record; no model calls
// happen inside the metrics themselves.
struct PredictionRecord {
  std::string id;
  std::optional<HateLabel> gold_hate;
  std::vector<std::string> gold_moral;  // ordered by salience, primary first
  std::string predicted;                // class name; "" means no usable prediction
  std::vector<double> class_probs;
  std::vector<double> logits;
  std::optional<std::vector<double>> attention;  // full padded length
  std::vector<std::uint8_t> validity;
  std::vector<std::uint8_t> gold_mask;
  std::vector<std::uint8_t> model_mask;
  std::optional<std::vector<double>> probs_erased;
  std::optional<std::vector<double>> probs_rationale_only;
  std::vector<std::string> subgroup_tags;
};

struct DumpHeader {
  Task task = Task::hate;
  std::vector<std::string> classes;
  std::string rationale_strategy = "threshold";
  int rationale_top_k = 5;
  std::string model_kind;
  std::uint64_t seed = 0;
};

struct PredictionDump {
  DumpHeader header;
  std::vector<PredictionRecord> records;
};

PredictionDump load_dump(const std::string& path);  // throws IoError / SchemaError
void write_dump(std::ostream& out, const DumpHeader& header,
                const std::vector<PredictionRecord>& records);

// ---- classification ----

// 1 iff the single predicted label belongs to the gold label set.
int adapted_correct(const std::string& predicted, const std::vector<std::string>& gold_set);

enum class F1Mode { strict, adapted };

// strict: one-vs-rest F1 against the primary gold label. adapted: a
// prediction inside the gold set counts as TP for its class, otherwise FP
// for the predicted class and FN for the primary gold label. Classes with
// no support in either gold or predictions are excluded from the mean.
// An empty predicted string contributes only an FN for the gold label.
double macro_f1(const std::vector<PredictionRecord>& records, F1Mode mode, Task task);

// Exact match for the hate task; adapted correctness for set-valued moral gold.
double accuracy(const std::vector<PredictionRecord>& records, Task task);

// Rank-based AUROC with midrank tie handling. Throws ValueError when a
// class is missing from labels.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Average precision over the PR curve, descending score order with tied
// scores collapsed into one step.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

// Hate task: AUROC of the hate-class probability. Moral task: one-vs-rest
// AUROC per class (positive iff the class is in the gold set) averaged over
// classes with both outcomes present; nullopt when every class is degenerate.
std::optional<double> report_auroc(const std::vector<PredictionRecord>& records, Task task,
                                   const std::vector<std::string>& classes);

// ---- plausibility ----

// Mean of [IoU >= 0.5] over instances; two empty masks count as IoU 1.
// strict_greater switches the threshold test to a strict >.
double iou_f1(const std::vector<PredictionRecord>& records, bool strict_greater = false);

// Mean per-instance Dice score; both-empty -> 1, one-empty -> 0.
double token_f1(const std::vector<PredictionRecord>& records);

// AUPRC over all valid tokens pooled, scores = attention, labels = gold
// mask. Throws NoAttention when no record carries attention.
double token_auprc(const std::vector<PredictionRecord>& records);

enum class RationaleStrategy { threshold, top_k };
const char* to_string(RationaleStrategy s);
RationaleStrategy rationale_strategy_from_string(const std::string& s);

// threshold: tokens with attention >= 1/V (V = valid count).
// top_k: the k highest-attention valid tokens, ties to the lower index.
std::vector<std::uint8_t> extract_model_rationale(const std::vector<double>& attention,
                                                  const std::vector<std::uint8_t>& validity,
                                                  RationaleStrategy strategy, int top_k = 5);

// ---- faithfulness ----

struct FaithfulnessScore {
  double value = 0.0;
  int used = 0;
  int skipped = 0;
};

// Mean drop of the predicted-class probability when the extracted
// rationale tokens are erased. Records without erased probabilities are
// skipped and tallied; throws MissingErasedProbs when none are usable.
FaithfulnessScore comprehensiveness(const std::vector<PredictionRecord>& records,
                                    const std::vector<std::string>& classes);

// Mean drop when keeping only the rationale tokens; empty-rationale
// records are skipped and tallied. Throws MissingRationaleProbs when none
// are usable.
FaithfulnessScore sufficiency(const std::vector<PredictionRecord>& records,
                              const std::vector<std::string>& classes);

// ---- fairness ----

struct SubgroupAucs {
  std::string tag;
  std::optional<double> sub;   // AUROC within the subgroup
  std::optional<double> bpsn;  // subgroup negatives vs background positives
  std::optional<double> bnsp;  // subgroup positives vs background negatives
  int subgroup_size = 0;
};

// Scores are the hate-class probability. Each pool is computed
// independently; a pool lacking one of the classes comes back null.
// nullopt for the subgroup as a whole when even the within-subgroup pool
// is degenerate (the caller reports the skip).
std::optional<SubgroupAucs> subgroup_aucs(const std::vector<PredictionRecord>& records,
                                          const std::string& tag,
                                          const std::vector<std::string>& classes);

// Generalized power mean (sum v^p / n)^(1/p); p=0 falls back to the
// geometric mean. Values must be positive when p <= 0.
double gmb(const std::vector<double>& values, double p = -5.0);

// ---- agreement ----

// Quadratic-weighted Cohen's kappa over ordinal labels {0..k-1} using the
// standard disagreement-weight convention d_ij = (i-j)^2/(k-1)^2,
// kappa = 1 - sum(d*O)/sum(d*E). Returns nullopt on degenerate marginals
// (chance-expected disagreement zero).
std::optional<double> weighted_cohen_kappa(const std::vector<int>& labels_a,
                                           const std::vector<int>& labels_b, int k);

// Label pairs for one salience rank where both annotators labeled the
// instance; values are canonical moral label indices.
std::pair<std::vector<int>, std::vector<int>> annotator_label_pairs(
    const std::vector<Instance>& instances, const std::string& annotator_a,
    const std::string& annotator_b, int order);

// ---- report ----

struct EvalOptions {
  std::optional<RationaleStrategy> strategy;  // re-derive model masks when set
  int top_k = 5;
  bool strict_iou = false;
  double gmb_power = -5.0;
};

struct EvalReport {
  Task task = Task::hate;
  int n_records = 0;
  std::string rationale_strategy;
  std::optional<double> accuracy;
  std::optional<double> macro_f1;
  std::optional<double> auroc;
  std::optional<double> iou_f1;
  std::optional<double> token_f1;
  std::optional<double> auprc;
  std::optional<double> comprehensiveness;
  std::optional<double> sufficiency;
  int comp_skipped = 0;
  int suff_skipped = 0;
  std::optional<double> gmb_sub;
  std::optional<double> gmb_bpsn;
  std::optional<double> gmb_bnsp;
  std::vector<SubgroupAucs> subgroups;
  std::vector<std::string> degenerate_subgroups;
  std::optional<double> kappa;
};

EvalReport evaluate_dump(const PredictionDump& dump, const EvalOptions& options = {});

std::string report_to_json(const EvalReport& report);
void print_report_table(std::ostream& out, const EvalReport& report);

}  // namespace smra
