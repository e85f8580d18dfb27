#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "smra/corpus.hpp"
#include "smra/metrics.hpp"
#include "smra/models.hpp"
#include "smra/smra_loss.hpp"
#include "smra/span_align.hpp"
#include "smra/tokenize.hpp"

namespace smra {

// Seeds the process-wide generator used by code paths that do not take an
// explicit seed. Training itself derives every stream (parameter init,
// epoch shuffles) from TrainConfig::seed, so two runs with equal configs
// are bit-identical on one machine and build.
void set_global_seed(std::uint64_t seed);
std::mt19937_64& global_rng();

struct TrainConfig {
  int batch_size = 16;
  double lr = 2e-5;
  int max_len = 128;
  int epochs = 20;
  double alpha = 0.001;
  double weight_decay = 0.01;
  std::uint64_t seed = 42;
  Task task = Task::hate;
  ModelConfig model;
  bool grad_clip = true;
  double clip_norm = 1.0;
  // Builds the CE-only step with the alignment term absent from the graph;
  // used to verify that alpha=0 runs are bitwise identical to a build
  // without the term.
  bool disable_alignment = false;
  std::string rationale_strategy = "threshold";
  int rationale_top_k = 5;

  void validate() const;  // throws ConfigError / ValueError
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

struct BatchLogEntry {
  int epoch = 0;
  int step = 0;  // global optimizer step
  double ce = 0;
  double aal = 0;
  double total = 0;
  double gate_rate = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_ce = 0;
  double train_aal = 0;
  double train_total = 0;
  double gate_rate = 0;
  double val_macro_f1 = 0;
};

struct History {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // 1-based; -1 when no epochs ran
  double best_val_macro_f1 = 0;
};

void write_history_jsonl(std::ostream& out, const History& history);

// Tokenization, gold index, rationale mask and tags for one instance.
// Hate task: gold is {NonHate=0, Hate=1} and the mask is the union of all
// non-NN spans. Moral task: gold is the primary (order 1) annotation's
// label and the mask is that annotation's spans.
struct PreparedInstance {
  std::string id;
  TokenizedText tok;
  int gold = 0;
  std::optional<HateLabel> gold_hate;
  std::vector<std::string> gold_moral;  // ordered, primary first
  std::optional<RationaleMask> mask;
  bool truncated_rationale = false;
  std::vector<std::string> subgroup_tags;
};

PreparedInstance prepare_instance(const Instance& inst, const Tokenizer& tokenizer, Task task,
                                  int max_len);

std::vector<std::string> task_classes(Task task);

struct TrainedModel {
  std::unique_ptr<Model> model;
  WordTokenizer tokenizer;
  TrainConfig config;
  History history;
};

// Deterministic fine-tuning loop: AdamW, per-epoch validation macro-F1
// (strict for hate, adapted for moral), best-validation weights restored
// at the end. Per-batch LossBreakdown means go to `batch_log` as JSONL
// when provided. Throws NonFiniteLoss with the offending batch id.
TrainedModel train(const TrainConfig& config, const DatasetSplit& split,
                   std::ostream* batch_log = nullptr);

// Scores instances with a frozen model and materializes the prediction
// records consumed by the eval module, including erased / rationale-only
// probabilities for attention-bearing models.
std::vector<PredictionRecord> evaluate_checkpoint(TrainedModel& trained,
                                                  const std::vector<Instance>& instances);

DumpHeader dump_header_for(const TrainedModel& trained);

// Checkpoint directory: model.bin + model.json + vocab.txt + train_config.json.
void save_trained(const TrainedModel& trained, const std::string& dir);
TrainedModel load_trained(const std::string& dir);

}  // namespace smra
