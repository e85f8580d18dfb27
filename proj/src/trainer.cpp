#include "smra/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "smra/errors.hpp"

namespace smra {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::mt19937_64 g_rng{0x5eed};

}  // namespace

void set_global_seed(std::uint64_t seed) { g_rng.seed(seed); }

std::mt19937_64& global_rng() { return g_rng; }

void TrainConfig::validate() const {
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (lr <= 0) throw ConfigError("lr must be positive");
  if (max_len < 2) throw ConfigError("max_len must be >= 2");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (alpha < 0) throw ValueError("alpha must be >= 0");
  if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
  if (clip_norm <= 0) throw ConfigError("clip_norm must be positive");
  rationale_strategy_from_string(rationale_strategy);
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["max_len"] = cfg.max_len;
  j["epochs"] = cfg.epochs;
  j["alpha"] = cfg.alpha;
  j["weight_decay"] = cfg.weight_decay;
  j["seed"] = cfg.seed;
  j["task"] = to_string(cfg.task);
  j["grad_clip"] = cfg.grad_clip;
  j["clip_norm"] = cfg.clip_norm;
  j["disable_alignment"] = cfg.disable_alignment;
  j["rationale_strategy"] = cfg.rationale_strategy;
  j["rationale_top_k"] = cfg.rationale_top_k;
  j["model"] = json::parse(model_config_to_json(cfg.model));
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  json j = json::parse(text);
  TrainConfig cfg;
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.max_len = j.value("max_len", cfg.max_len);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("task")) cfg.task = task_from_string(j["task"].get<std::string>());
  cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
  cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
  cfg.disable_alignment = j.value("disable_alignment", cfg.disable_alignment);
  cfg.rationale_strategy = j.value("rationale_strategy", cfg.rationale_strategy);
  cfg.rationale_top_k = j.value("rationale_top_k", cfg.rationale_top_k);
  if (j.contains("model")) cfg.model = model_config_from_json(j["model"].dump());
  return cfg;
}

void write_history_jsonl(std::ostream& out, const History& history) {
  for (const auto& e : history.epochs) {
    json j;
    j["epoch"] = e.epoch;
    j["train_ce"] = e.train_ce;
    j["train_aal"] = e.train_aal;
    j["train_total"] = e.train_total;
    j["gate_rate"] = e.gate_rate;
    j["val_macro_f1"] = e.val_macro_f1;
    out << j.dump() << '\n';
  }
  json tail;
  tail["seed"] = history.seed;
  tail["best_epoch"] = history.best_epoch;
  tail["best_val_macro_f1"] = history.best_val_macro_f1;
  out << tail.dump() << '\n';
}

std::vector<std::string> task_classes(Task task) {
  if (task == Task::hate) return {"NonHate", "Hate"};
  std::vector<std::string> out;
  for (int i = 0; i < kNumMoralLabels; ++i) out.push_back(to_string(moral_label_at(i)));
  return out;
}

PreparedInstance prepare_instance(const Instance& inst, const Tokenizer& tokenizer, Task task,
                                  int max_len) {
  PreparedInstance out;
  out.id = inst.id;
  out.tok = tokenize_with_offsets(inst.text, tokenizer, max_len);
  out.gold_hate = inst.hate_label;

  std::vector<const RationaleAnnotation*> ordered;
  for (const auto& ann : inst.moral_annotations) ordered.push_back(&ann);
  std::sort(ordered.begin(), ordered.end(),
            [](const RationaleAnnotation* a, const RationaleAnnotation* b) {
              return a->order < b->order;
            });
  for (const auto* ann : ordered) out.gold_moral.push_back(to_string(ann->label));

  if (task == Task::hate) {
    out.gold = inst.hate_label == HateLabel::Hate ? 1 : 0;
    std::vector<CharSpan> spans;
    for (const auto* ann : ordered) {
      if (ann->label == MoralLabel::NN) continue;
      spans.insert(spans.end(), ann->spans.begin(), ann->spans.end());
    }
    auto mr = spans_to_mask(out.tok, spans);
    out.mask = std::move(mr.mask);
    out.truncated_rationale = mr.truncated_rationale;
  } else {
    const RationaleAnnotation* primary = ordered.empty() ? nullptr : ordered.front();
    if (primary == nullptr) throw ValueError("instance " + inst.id + " has no annotations");
    out.gold = moral_label_index(primary->label);
    auto mr = spans_to_mask(out.tok, primary->spans, primary->label);
    out.mask = std::move(mr.mask);
    out.truncated_rationale = mr.truncated_rationale;
  }

  if (inst.metadata.politician_gender)
    out.subgroup_tags.push_back("gender:" + *inst.metadata.politician_gender);
  if (inst.metadata.politician_party)
    out.subgroup_tags.push_back("party:" + *inst.metadata.politician_party);
  return out;
}

namespace {

struct ParamSnapshot {
  std::vector<ad::Mat> values;
};

ParamSnapshot snapshot_params(const ad::ParamStore& params) {
  ParamSnapshot snap;
  for (const auto& p : params.all()) snap.values.push_back(p->value);
  return snap;
}

void restore_params(ad::ParamStore& params, const ParamSnapshot& snap) {
  const auto& all = params.all();
  for (std::size_t i = 0; i < all.size(); ++i) all[i]->value = snap.values[i];
}

PredictionRecord basic_record(const PreparedInstance& prep, const ForwardOutput& fwd,
                              const std::vector<std::string>& classes) {
  PredictionRecord rec;
  rec.id = prep.id;
  rec.gold_hate = prep.gold_hate;
  rec.gold_moral = prep.gold_moral;
  rec.predicted = classes[static_cast<std::size_t>(fwd.predicted)];
  rec.class_probs.assign(fwd.probs.data(), fwd.probs.data() + fwd.probs.size());
  rec.logits.assign(fwd.logits.data(), fwd.logits.data() + fwd.logits.size());
  rec.validity = prep.tok.validity;
  rec.gold_mask = prep.mask ? prep.mask->values
                            : std::vector<std::uint8_t>(prep.tok.validity.size(), 0);
  rec.model_mask.assign(prep.tok.validity.size(), 0);
  rec.subgroup_tags = prep.subgroup_tags;
  return rec;
}

double validation_macro_f1(Model& model, const std::vector<PreparedInstance>& val, Task task,
                           const std::vector<std::string>& classes) {
  if (val.empty()) return 0.0;
  std::vector<PredictionRecord> records;
  records.reserve(val.size());
  for (const auto& prep : val) {
    records.push_back(basic_record(prep, forward_one(model, prep.tok), classes));
  }
  return macro_f1(records, task == Task::hate ? F1Mode::strict : F1Mode::adapted, task);
}

}  // namespace

TrainedModel train(const TrainConfig& config, const DatasetSplit& split,
                   std::ostream* batch_log) {
  config.validate();
  if (split.train.empty()) throw ValueError("training split is empty");

  TrainedModel out{.model = nullptr,
                   .tokenizer = WordTokenizer::fit(split.train),
                   .config = config,
                   .history = {}};
  out.history.seed = config.seed;

  ModelConfig mc = config.model;
  mc.vocab_size = out.tokenizer.vocab_size();
  mc.max_len = config.max_len;
  mc.num_classes = config.task == Task::hate ? 2 : kNumMoralLabels;
  out.config.model = mc;
  out.model = build_model(mc, config.seed);

  const auto classes = task_classes(config.task);
  std::vector<PreparedInstance> train_set, val_set;
  for (const auto& inst : split.train)
    train_set.push_back(prepare_instance(inst, out.tokenizer, config.task, config.max_len));
  for (const auto& inst : split.validation)
    val_set.push_back(prepare_instance(inst, out.tokenizer, config.task, config.max_len));

  ad::AdamW opt;
  opt.lr = config.lr;
  opt.weight_decay = config.weight_decay;
  opt.clip = config.grad_clip;
  opt.clip_norm = config.clip_norm;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  std::optional<ParamSnapshot> best;
  int global_step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double ep_ce = 0, ep_aal = 0, ep_total = 0;
    long ep_gated = 0, ep_seen = 0;

    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(config.batch_size)) {
      const auto end = std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
      const int bsz = static_cast<int>(end - at);
      out.model->params().zero_grads();
      double batch_ce = 0, batch_aal = 0, batch_total = 0;
      int batch_gated = 0;
      for (std::size_t bi = at; bi < end; ++bi) {
        const auto& prep = train_set[order[bi]];
        ad::Tape tape;
        const GraphOutput g = out.model->build_graph(tape, prep.tok);
        const LossNodes loss =
            attach_loss(tape, g.logits, prep.gold, g.attention, prep.mask, g.content_positions,
                        config.alpha, config.task, !config.disable_alignment);
        const double total_v = tape.value(loss.total)(0, 0);
        if (!std::isfinite(total_v)) {
          throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(global_step + 1) + ", instance " + prep.id);
        }
        tape.backward(loss.total, 1.0 / bsz);
        batch_ce += tape.value(loss.ce)(0, 0);
        batch_aal += loss.aal >= 0 ? tape.value(loss.aal)(0, 0) : 0.0;
        batch_total += total_v;
        batch_gated += loss.gate;
      }
      opt.step(out.model->params());
      ++global_step;
      if (batch_log) {
        json j;
        j["epoch"] = epoch;
        j["step"] = global_step;
        j["ce"] = batch_ce / bsz;
        j["aal"] = batch_aal / bsz;
        j["total"] = batch_total / bsz;
        j["gate_rate"] = static_cast<double>(batch_gated) / bsz;
        (*batch_log) << j.dump() << '\n';
      }
      ep_ce += batch_ce;
      ep_aal += batch_aal;
      ep_total += batch_total;
      ep_gated += batch_gated;
      ep_seen += bsz;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_ce = ep_ce / static_cast<double>(ep_seen);
    rec.train_aal = ep_aal / static_cast<double>(ep_seen);
    rec.train_total = ep_total / static_cast<double>(ep_seen);
    rec.gate_rate = static_cast<double>(ep_gated) / static_cast<double>(ep_seen);
    rec.val_macro_f1 = validation_macro_f1(*out.model, val_set, config.task, classes);
    out.history.epochs.push_back(rec);

    // ties prefer the later epoch so auxiliary objectives keep training
    // after the classification score saturates
    if (out.history.best_epoch < 0 || rec.val_macro_f1 >= out.history.best_val_macro_f1) {
      out.history.best_epoch = epoch;
      out.history.best_val_macro_f1 = rec.val_macro_f1;
      best = snapshot_params(out.model->params());
    }
  }
  if (best) restore_params(out.model->params(), *best);
  return out;
}

std::vector<PredictionRecord> evaluate_checkpoint(TrainedModel& trained,
                                                  const std::vector<Instance>& instances) {
  const auto classes = task_classes(trained.config.task);
  const auto strategy = rationale_strategy_from_string(trained.config.rationale_strategy);
  std::vector<PredictionRecord> records;
  records.reserve(instances.size());
  for (const auto& inst : instances) {
    const auto prep =
        prepare_instance(inst, trained.tokenizer, trained.config.task, trained.config.max_len);
    const auto fwd = forward_one(*trained.model, prep.tok);
    PredictionRecord rec = basic_record(prep, fwd, classes);
    if (fwd.attention) {
      rec.attention = std::vector<double>(fwd.attention->data(),
                                          fwd.attention->data() + fwd.attention->size());
      rec.model_mask = extract_model_rationale(*rec.attention, rec.validity, strategy,
                                               trained.config.rationale_top_k);
      // ERASER-style erasure: drop the rationale tokens and re-encode
      std::vector<std::uint8_t> keep_erased(rec.model_mask.size(), 1);
      std::vector<std::uint8_t> keep_only(rec.model_mask.size(), 0);
      for (std::size_t i = 0; i < rec.model_mask.size(); ++i) {
        keep_erased[i] = rec.model_mask[i] ? 0 : 1;
        keep_only[i] = rec.model_mask[i];
      }
      const auto erased = forward_one(
          *trained.model, reencode_subset(prep.tok, keep_erased, trained.config.max_len));
      const auto only = forward_one(
          *trained.model, reencode_subset(prep.tok, keep_only, trained.config.max_len));
      rec.probs_erased =
          std::vector<double>(erased.probs.data(), erased.probs.data() + erased.probs.size());
      rec.probs_rationale_only =
          std::vector<double>(only.probs.data(), only.probs.data() + only.probs.size());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

DumpHeader dump_header_for(const TrainedModel& trained) {
  DumpHeader header;
  header.task = trained.config.task;
  header.classes = task_classes(trained.config.task);
  header.rationale_strategy = trained.config.rationale_strategy;
  header.rationale_top_k = trained.config.rationale_top_k;
  header.model_kind = to_string(trained.config.model.kind);
  header.seed = trained.config.seed;
  return header;
}

void save_trained(const TrainedModel& trained, const std::string& dir) {
  fs::create_directories(dir);
  save_checkpoint(*trained.model, dir, trained.config.seed);
  trained.tokenizer.save((fs::path(dir) / "vocab.txt").string());
  std::ofstream cfg(fs::path(dir) / "train_config.json");
  if (!cfg) throw IoError("cannot write train config in " + dir);
  cfg << train_config_to_json(trained.config) << '\n';
}

TrainedModel load_trained(const std::string& dir) {
  std::ifstream cfg_in(fs::path(dir) / "train_config.json");
  if (!cfg_in) throw IoError("no train_config.json in " + dir);
  std::string text((std::istreambuf_iterator<char>(cfg_in)), std::istreambuf_iterator<char>());
  TrainConfig config = train_config_from_json(text);
  auto loaded = load_checkpoint(dir, config.model);
  TrainedModel out{.model = std::move(loaded.model),
                   .tokenizer = WordTokenizer::load((fs::path(dir) / "vocab.txt").string()),
                   .config = std::move(config),
                   .history = {}};
  out.history.seed = out.config.seed;
  return out;
}

}  // namespace smra
