// smra: rationale-supervised attention text classification and its
// evaluation battery behind one subcommand-style binary.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <functional>
#include <map>
#include <set>

#include "smra/corpus.hpp"
#include "smra/errors.hpp"
#include "smra/llm_client.hpp"
#include "smra/metrics.hpp"
#include "smra/prompt_eval.hpp"
#include "smra/prompts.hpp"
#include "smra/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smra;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<Instance> load_or_fail(const std::string& path, bool allow_rejects = false) {
  auto result = load_corpus(path);
  if (!result.rejected.empty() && !allow_rejects) {
    std::ostringstream os;
    os << result.rejected.size() << " invalid record(s) in " << path << "; first: "
       << result.rejected.front().message;
    throw IoError(os.str());
  }
  return std::move(result.instances);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- validate ----

int cmd_validate(const std::string& corpus_path, bool as_json) {
  const auto result = load_corpus(corpus_path);
  int warnings = 0;
  json report;
  report["instances"] = result.instances.size();
  report["rejected"] = json::array();
  for (const auto& r : result.rejected) {
    report["rejected"].push_back({{"line", r.line}, {"field", r.field}, {"message", r.message}});
  }
  json warn_list = json::array();
  for (const auto& inst : result.instances) {
    for (const auto& v : validate_instance(inst)) {
      if (v.severity == Violation::Severity::warning) {
        ++warnings;
        warn_list.push_back({{"id", inst.id}, {"field", v.field}, {"message", v.message}});
      }
    }
  }
  report["warnings"] = std::move(warn_list);
  if (as_json) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::cout << result.instances.size() << " valid instance(s), " << result.rejected.size()
              << " rejected, " << warnings << " warning(s)\n";
    for (const auto& r : result.rejected) std::cout << "  reject: " << r.message << "\n";
    for (const auto& w : report["warnings"])
      std::cout << "  warning: " << w["id"].get<std::string>() << " "
                << w["message"].get<std::string>() << "\n";
  }
  return result.rejected.empty() ? kExitOk : kExitRuntime;
}

// ---- stats ----

int cmd_stats(const std::string& corpus_path, bool as_json) {
  const auto instances = load_or_fail(corpus_path);
  const auto stats = corpus_stats(instances);
  if (as_json) {
    std::cout << stats_to_json(stats) << "\n";
    return kExitOk;
  }
  std::cout << "instances: " << stats.total << "  (Hate " << stats.hate << " / NonHate "
            << stats.non_hate << ")\n";
  std::cout << "rationale coverage (non-NN annotations with spans): " << stats.rationale_coverage
            << "\n";
  std::cout << "moral labels by salience rank (rows: label, cols: rank 1..3)\n";
  for (int l = 0; l < kNumMoralLabels; ++l) {
    std::cout << "  " << to_string(moral_label_at(l));
    for (int r = 0; r < 3; ++r) std::cout << "\t" << stats.label_by_rank[l][r];
    std::cout << "\n";
  }
  if (!stats.gender_counts.empty() || !stats.party_counts.empty()) {
    std::cout << "metadata marginals:\n";
    for (const auto& [key, n] : stats.gender_counts)
      std::cout << "  gender:" << key << " = " << n << "\n";
    for (const auto& [key, n] : stats.party_counts)
      std::cout << "  party:" << key << " = " << n << "\n";
  }
  return kExitOk;
}

// ---- config file ----

// Flat key=value lines; keys mirror the long option names without the
// leading dashes. Values from the file apply only where the flag was not
// given on the command line.
void apply_config_file(const std::string& path, const CLI::App* cmd,
                       const std::map<std::string, std::function<void(const std::string&)>>&
                           setters) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw UsageError("config line " + std::to_string(line_no) + " is not key=value");
      continue;
    }
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t\r");
      const auto e = v.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw UsageError("unknown config key \"" + key + "\" (line " + std::to_string(line_no) +
                       ")");
    const auto* opt = cmd->get_option_no_throw("--" + key);
    if (opt != nullptr && opt->count() > 0) continue;  // flag wins
    it->second(value);
  }
}

// ---- train ----

struct TrainArgs {
  std::string corpus_path;
  std::string output_dir;
  std::string config_file;
  TrainConfig cfg;
  std::string task = "hate";
  std::string model_kind = "birnn_attn";
  std::string encoder_id;
  double ratio_train = 0.8, ratio_val = 0.1, ratio_test = 0.1;
};

int cmd_train(const TrainArgs& args) {
  TrainConfig cfg = args.cfg;
  cfg.task = task_from_string(args.task);
  cfg.model.kind = model_kind_from_string(args.model_kind);
  cfg.model.encoder_id = args.encoder_id;
  cfg.validate();
  set_global_seed(cfg.seed);

  const auto instances = load_or_fail(args.corpus_path);
  const SplitRatios ratios{args.ratio_train, args.ratio_val, args.ratio_test};
  const auto split = split_dataset(instances, ratios, cfg.seed);

  fs::create_directories(args.output_dir);
  const fs::path out_dir(args.output_dir);

  {
    std::ofstream echo(out_dir / "config_effective.json");
    json j = json::parse(train_config_to_json(cfg));
    j["corpus"] = args.corpus_path;
    j["ratios"] = {ratios.train, ratios.validation, ratios.test};
    j["output_dir"] = args.output_dir;
    echo << j.dump(2) << "\n";
  }

  std::ofstream batch_log(out_dir / "trainlog.jsonl");
  auto trained = train(cfg, split, &batch_log);

  {
    std::ofstream hist(out_dir / "history.jsonl");
    write_history_jsonl(hist, trained.history);
  }
  save_trained(trained, (out_dir / "checkpoint").string());

  const auto records = evaluate_checkpoint(trained, split.test);
  {
    std::ofstream dump(out_dir / "predictions.jsonl");
    write_dump(dump, dump_header_for(trained), records);
  }
  const auto dump = load_dump((out_dir / "predictions.jsonl").string());
  const auto report = evaluate_dump(dump);
  {
    std::ofstream rep(out_dir / "eval.json");
    rep << report_to_json(report) << "\n";
  }
  print_report_table(std::cout, report);
  std::cout << "artifacts in " << args.output_dir << "\n";
  return kExitOk;
}

// ---- eval ----

int cmd_eval(const std::string& dump_path, const std::string& report_path,
             const std::string& strategy, int top_k, bool strict_iou, double gmb_power,
             bool as_json) {
  const auto dump = load_dump(dump_path);
  EvalOptions opts;
  if (!strategy.empty()) opts.strategy = rationale_strategy_from_string(strategy);
  opts.top_k = top_k;
  opts.strict_iou = strict_iou;
  opts.gmb_power = gmb_power;
  const auto report = evaluate_dump(dump, opts);
  if (as_json) {
    std::cout << report_to_json(report) << "\n";
  } else {
    print_report_table(std::cout, report);
  }
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw IoError("cannot write report: " + report_path);
    out << report_to_json(report) << "\n";
  }
  return kExitOk;
}

// ---- explain ----

int cmd_explain(const std::string& checkpoint_dir, const std::string& instance_id,
                const std::string& corpus_path, const std::string& free_text, bool as_json) {
  auto trained = load_trained(checkpoint_dir);
  if (!trained.model->has_attention())
    throw NoAttention("checkpoint model kind \"" +
                      std::string(to_string(trained.config.model.kind)) +
                      "\" exposes no attention");

  std::optional<Instance> inst;
  if (!instance_id.empty()) {
    if (corpus_path.empty()) throw UsageError("--id requires --corpus");
    const auto instances = load_or_fail(corpus_path);
    for (const auto& cand : instances) {
      if (cand.id == instance_id) {
        inst = cand;
        break;
      }
    }
    if (!inst) throw ValueError("no instance with id " + instance_id + " in " + corpus_path);
  } else if (!free_text.empty()) {
    Instance synth;
    synth.id = "<text>";
    synth.text = free_text;
    synth.hate_label = HateLabel::NonHate;
    RationaleAnnotation nn;
    nn.label = MoralLabel::NN;
    nn.order = 1;
    synth.moral_annotations.push_back(nn);
    inst = std::move(synth);
  } else {
    throw UsageError("explain needs --id or --text");
  }

  const bool has_gold = !instance_id.empty();
  const auto prep =
      prepare_instance(*inst, trained.tokenizer, trained.config.task, trained.config.max_len);
  const auto fwd = forward_one(*trained.model, prep.tok);
  const auto attention = extract_attention(fwd);
  const auto strategy = rationale_strategy_from_string(trained.config.rationale_strategy);
  std::vector<double> attn(attention.a.data(), attention.a.data() + attention.a.size());
  const auto model_mask = extract_model_rationale(attn, prep.tok.validity, strategy,
                                                  trained.config.rationale_top_k);

  PredictionRecord rec;
  rec.id = inst->id;
  rec.gold_hate = inst->hate_label;
  rec.gold_moral = prep.gold_moral;
  rec.predicted = task_classes(trained.config.task)[static_cast<std::size_t>(fwd.predicted)];
  rec.class_probs.assign(fwd.probs.data(), fwd.probs.data() + fwd.probs.size());
  rec.attention = attn;
  rec.validity = prep.tok.validity;
  rec.gold_mask = has_gold && prep.mask ? prep.mask->values
                                        : std::vector<std::uint8_t>(prep.tok.validity.size(), 0);
  rec.model_mask = model_mask;

  const double inst_iou = has_gold ? iou_f1({rec}) : 0.0;
  const double inst_dice = has_gold ? token_f1({rec}) : 0.0;

  if (as_json) {
    json j;
    j["id"] = rec.id;
    j["predicted"] = rec.predicted;
    j["class_probs"] = rec.class_probs;
    j["tokens"] = json::array();
    for (int i = 0; i < prep.tok.length(); ++i) {
      if (!prep.tok.validity[i]) continue;
      j["tokens"].push_back(
          {{"token", prep.tok.tokens[i]},
           {"attention", attn[static_cast<std::size_t>(i)]},
           {"model_rationale", static_cast<int>(model_mask[static_cast<std::size_t>(i)])},
           {"gold_rationale", static_cast<int>(rec.gold_mask[static_cast<std::size_t>(i)])}});
    }
    if (has_gold) {
      j["iou_f1"] = inst_iou;
      j["token_f1"] = inst_dice;
      j["gold"] = rec.gold_moral;
      j["gold_hate"] = to_string(*rec.gold_hate);
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }

  std::cout << "instance: " << rec.id << "  predicted: " << rec.predicted << "\n";
  std::cout << "token            attention  model  gold\n";
  for (int i = 0; i < prep.tok.length(); ++i) {
    if (!prep.tok.validity[i]) continue;
    std::printf("%-16s %9.4f  %5d  %4d\n", prep.tok.tokens[i].c_str(),
                attn[static_cast<std::size_t>(i)],
                static_cast<int>(model_mask[static_cast<std::size_t>(i)]),
                static_cast<int>(rec.gold_mask[static_cast<std::size_t>(i)]));
  }
  if (has_gold) {
    std::cout << "per-instance IoU-F1: " << inst_iou << "  Token-F1: " << inst_dice << "\n";
  }
  return kExitOk;
}

// ---- agreement ----

int cmd_agreement(const std::string& corpus_path, const std::string& annotators_arg,
                  bool as_json) {
  const auto instances = load_or_fail(corpus_path);
  std::string ann_a, ann_b;
  if (!annotators_arg.empty()) {
    const auto comma = annotators_arg.find(',');
    if (comma == std::string::npos) throw UsageError("--annotators expects \"a,b\"");
    ann_a = annotators_arg.substr(0, comma);
    ann_b = annotators_arg.substr(comma + 1);
  } else {
    std::set<std::string> ids;
    for (const auto& inst : instances)
      for (const auto& [id, anns] : inst.all_annotators) ids.insert(id);
    if (ids.size() < 2)
      throw UsageError("corpus has fewer than two annotators; agreement needs at least two");
    auto it = ids.begin();
    ann_a = *it++;
    ann_b = *it;
  }

  json j;
  j["annotators"] = {ann_a, ann_b};
  j["classes"] = json::array();
  const char* class_names[3] = {"Class A", "Class B", "Class C"};
  for (int order = 1; order <= 3; ++order) {
    const auto [a, b] = annotator_label_pairs(instances, ann_a, ann_b, order);
    json entry;
    entry["class"] = class_names[order - 1];
    entry["salience_rank"] = order;
    entry["pairs"] = a.size();
    if (a.empty()) {
      entry["kappa"] = nullptr;
      entry["note"] = "no jointly labeled instances";
    } else {
      const auto kappa = weighted_cohen_kappa(a, b, kNumMoralLabels);
      if (kappa) {
        entry["kappa"] = *kappa;
      } else {
        entry["kappa"] = nullptr;
        entry["note"] = "degenerate marginals";
      }
    }
    j["classes"].push_back(std::move(entry));
  }
  if (as_json) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "quadratic weighted kappa (" << ann_a << " vs " << ann_b << ")\n";
    for (const auto& entry : j["classes"]) {
      std::cout << "  " << entry["class"].get<std::string>() << " (rank "
                << entry["salience_rank"].get<int>() << ", n=" << entry["pairs"].get<int>()
                << "): ";
      if (entry["kappa"].is_null()) {
        std::cout << "undefined (" << entry.value("note", std::string{}) << ")\n";
      } else {
        std::printf("%.3f\n", entry["kappa"].get<double>());
      }
    }
  }
  return kExitOk;
}

// ---- prompt-eval ----

int cmd_prompt_eval(const std::string& corpus_path, const std::string& template_name,
                    const std::string& model_id, const std::string& cache_dir,
                    const std::string& client_spec, const std::string& output_dir,
                    const std::string& definition_file, const std::string& context_file,
                    int max_attempts, int backoff_ms) {
  const auto instances = load_or_fail(corpus_path);

  PromptEvalConfig cfg;
  cfg.model_id = model_id;
  cfg.template_id = template_id_from_string(template_name);
  cfg.cache_dir = cache_dir;
  cfg.max_attempts = max_attempts;
  cfg.backoff_ms = backoff_ms;
  if (!definition_file.empty()) cfg.definition = read_file(definition_file);
  if (!context_file.empty()) cfg.context = read_file(context_file);

  std::unique_ptr<ChatClient> client;
  if (client_spec.rfind("script:", 0) == 0) {
    client = std::make_unique<ScriptedClient>(ScriptedClient::from_file(client_spec.substr(7)));
  } else if (client_spec == "openai") {
    const char* base = std::getenv("SMRA_API_BASE");
    const char* key = std::getenv("SMRA_API_KEY");
    client = std::make_unique<HttpChatClient>(base ? base : "https://api.openai.com",
                                              key ? key : "");
  } else if (client_spec == "replay") {
    struct ReplayOnly : ChatClient {
      std::string complete(const std::string&, const std::string&, double) override {
        throw ClientError("replay client: response not in cache");
      }
    };
    client = std::make_unique<ReplayOnly>();
  } else {
    throw UsageError("unknown --client: " + client_spec +
                     " (expected script:<file>, openai, or replay)");
  }

  const auto result = run_prompt_eval(*client, instances, cfg);

  if (!output_dir.empty()) {
    fs::create_directories(output_dir);
    std::ofstream dump(fs::path(output_dir) / "prompt_dump.jsonl");
    write_prompt_dump(dump, result, cfg);
    std::ofstream scores(fs::path(output_dir) / "prompt_scores.json");
    scores << prompt_scores_json(result, cfg) << "\n";
  }
  std::cout << prompt_scores_json(result, cfg) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rationale-supervised attention classifier and evaluation engine"};
  app.require_subcommand(1);

  // validate
  std::string v_corpus;
  bool v_json = false;
  auto* validate_cmd = app.add_subcommand("validate", "check a corpus file against the schema");
  validate_cmd->add_option("--corpus", v_corpus, "corpus JSONL path")->required();
  validate_cmd->add_flag("--json", v_json, "machine-readable output");

  // stats
  std::string s_corpus;
  bool s_json = false;
  auto* stats_cmd = app.add_subcommand("stats", "descriptive statistics for a corpus");
  stats_cmd->add_option("--corpus", s_corpus, "corpus JSONL path")->required();
  stats_cmd->add_flag("--json", s_json, "machine-readable output");

  // train
  TrainArgs t;
  auto* train_cmd = app.add_subcommand("train", "fine-tune a classifier and evaluate it");
  train_cmd->add_option("--config", t.config_file,
                        "flat key=value file; flags override file values");
  train_cmd->add_option("--corpus", t.corpus_path, "corpus JSONL path")->required();
  train_cmd->add_option("--output-dir", t.output_dir, "artifact directory")->required();
  train_cmd->add_option("--task", t.task, "hate | moral")->capture_default_str();
  train_cmd->add_option("--model", t.model_kind,
                        "bow | cnn | birnn_max | birnn_attn | transformer")
      ->capture_default_str();
  train_cmd->add_option("--encoder-id", t.encoder_id,
                        "transformer preset or checkpoint directory");
  train_cmd->add_option("--batch-size", t.cfg.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", t.cfg.lr)->capture_default_str();
  train_cmd->add_option("--max-len", t.cfg.max_len)->capture_default_str();
  train_cmd->add_option("--epochs", t.cfg.epochs)->capture_default_str();
  train_cmd->add_option("--alpha", t.cfg.alpha, "attention supervision weight")
      ->capture_default_str();
  train_cmd->add_option("--weight-decay", t.cfg.weight_decay)->capture_default_str();
  train_cmd->add_option("--seed", t.cfg.seed)->capture_default_str();
  train_cmd->add_option("--hidden-dim", t.cfg.model.hidden_dim)->capture_default_str();
  train_cmd->add_option("--embed-dim", t.cfg.model.embed_dim)->capture_default_str();
  train_cmd->add_option("--attn-dim", t.cfg.model.attn_dim)->capture_default_str();
  train_cmd->add_option("--cnn-filters", t.cfg.model.cnn_filters)->capture_default_str();
  train_cmd->add_option("--tf-layers", t.cfg.model.tf_layers)->capture_default_str();
  train_cmd->add_option("--tf-heads", t.cfg.model.tf_heads)->capture_default_str();
  train_cmd->add_flag(
      "--no-grad-clip", [&t](std::int64_t) { t.cfg.grad_clip = false; },
      "disable gradient norm clipping");
  train_cmd->add_option("--clip-norm", t.cfg.clip_norm)->capture_default_str();
  train_cmd->add_flag("--disable-alignment", t.cfg.disable_alignment,
                      "build the CE-only objective (alignment term compiled out)");
  train_cmd->add_option("--rationale-strategy", t.cfg.rationale_strategy, "threshold | top_k")
      ->capture_default_str();
  train_cmd->add_option("--top-k", t.cfg.rationale_top_k)->capture_default_str();
  train_cmd->add_option("--ratio-train", t.ratio_train)->capture_default_str();
  train_cmd->add_option("--ratio-val", t.ratio_val)->capture_default_str();
  train_cmd->add_option("--ratio-test", t.ratio_test)->capture_default_str();

  // eval
  std::string e_dump, e_report, e_strategy;
  int e_top_k = 5;
  bool e_strict = false, e_json = false;
  double e_gmb_power = -5.0;
  auto* eval_cmd = app.add_subcommand("eval", "score a prediction dump");
  eval_cmd->add_option("--dump", e_dump, "prediction dump JSONL")->required();
  eval_cmd->add_option("--report", e_report, "write the report JSON here");
  eval_cmd->add_option("--strategy", e_strategy,
                       "override rationale extraction: threshold | top_k");
  eval_cmd->add_option("--top-k", e_top_k)->capture_default_str();
  eval_cmd->add_flag("--strict-iou", e_strict, "count IoU strictly greater than 0.5");
  eval_cmd->add_option("--gmb-power", e_gmb_power)->capture_default_str();
  eval_cmd->add_flag("--json", e_json, "print the JSON report instead of the table");

  // explain
  std::string x_checkpoint, x_id, x_corpus, x_text;
  bool x_json = false;
  auto* explain_cmd = app.add_subcommand("explain", "per-instance attention and rationale view");
  explain_cmd->add_option("--checkpoint", x_checkpoint, "checkpoint directory")->required();
  explain_cmd->add_option("--id", x_id, "instance id (requires --corpus)");
  explain_cmd->add_option("--corpus", x_corpus, "corpus JSONL path");
  explain_cmd->add_option("--text", x_text, "free text instead of a corpus instance");
  explain_cmd->add_flag("--json", x_json, "machine-readable output");

  // agreement
  std::string a_corpus, a_annotators;
  bool a_json = false;
  auto* agreement_cmd =
      app.add_subcommand("agreement", "quadratic weighted kappa per salience rank");
  agreement_cmd->add_option("--corpus", a_corpus, "corpus JSONL path")->required();
  agreement_cmd->add_option("--annotators", a_annotators, "pair as \"a,b\" (default: first two)");
  agreement_cmd->add_flag("--json", a_json, "machine-readable output");

  // prompt-eval
  std::string p_corpus, p_template = "hate", p_model = "gpt-4o-mini", p_cache = "prompt_cache";
  std::string p_client = "openai", p_output, p_def_file, p_ctx_file;
  int p_attempts = 3, p_backoff = 250;
  auto* prompt_cmd =
      app.add_subcommand("prompt-eval", "run a prompt configuration through a chat client");
  prompt_cmd->add_option("--corpus", p_corpus, "corpus JSONL path")->required();
  prompt_cmd->add_option("--template", p_template,
                         "hate | hate_def | hate_context | hate_moral | hate_moral_def | "
                         "hate_moral_context | moral | moral_def | moral_context | ablation")
      ->capture_default_str();
  prompt_cmd->add_option("--model", p_model, "model id passed to the client")
      ->capture_default_str();
  prompt_cmd->add_option("--cache-dir", p_cache, "response cache directory")
      ->capture_default_str();
  prompt_cmd->add_option("--client", p_client, "openai | replay | script:<file>")
      ->capture_default_str();
  prompt_cmd->add_option("--output-dir", p_output, "write prompt_dump.jsonl and scores here");
  prompt_cmd->add_option("--definition-file", p_def_file,
                         "override the built-in hate speech definition");
  prompt_cmd->add_option("--context-file", p_ctx_file, "override the built-in context block");
  prompt_cmd->add_option("--max-attempts", p_attempts)->capture_default_str();
  prompt_cmd->add_option("--backoff-ms", p_backoff)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(v_corpus, v_json);
    if (*stats_cmd) return cmd_stats(s_corpus, s_json);
    if (*train_cmd) {
      if (!t.config_file.empty()) {
        const std::map<std::string, std::function<void(const std::string&)>> setters = {
            {"task", [&](const std::string& v) { t.task = v; }},
            {"model", [&](const std::string& v) { t.model_kind = v; }},
            {"encoder-id", [&](const std::string& v) { t.encoder_id = v; }},
            {"batch-size", [&](const std::string& v) { t.cfg.batch_size = std::stoi(v); }},
            {"lr", [&](const std::string& v) { t.cfg.lr = std::stod(v); }},
            {"max-len", [&](const std::string& v) { t.cfg.max_len = std::stoi(v); }},
            {"epochs", [&](const std::string& v) { t.cfg.epochs = std::stoi(v); }},
            {"alpha", [&](const std::string& v) { t.cfg.alpha = std::stod(v); }},
            {"weight-decay", [&](const std::string& v) { t.cfg.weight_decay = std::stod(v); }},
            {"seed", [&](const std::string& v) { t.cfg.seed = std::stoull(v); }},
            {"hidden-dim", [&](const std::string& v) { t.cfg.model.hidden_dim = std::stoi(v); }},
            {"embed-dim", [&](const std::string& v) { t.cfg.model.embed_dim = std::stoi(v); }},
            {"attn-dim", [&](const std::string& v) { t.cfg.model.attn_dim = std::stoi(v); }},
            {"cnn-filters",
             [&](const std::string& v) { t.cfg.model.cnn_filters = std::stoi(v); }},
            {"tf-layers", [&](const std::string& v) { t.cfg.model.tf_layers = std::stoi(v); }},
            {"tf-heads", [&](const std::string& v) { t.cfg.model.tf_heads = std::stoi(v); }},
            {"grad-clip", [&](const std::string& v) { t.cfg.grad_clip = v == "true" || v == "1"; }},
            {"clip-norm", [&](const std::string& v) { t.cfg.clip_norm = std::stod(v); }},
            {"disable-alignment",
             [&](const std::string& v) { t.cfg.disable_alignment = v == "true" || v == "1"; }},
            {"rationale-strategy",
             [&](const std::string& v) { t.cfg.rationale_strategy = v; }},
            {"top-k", [&](const std::string& v) { t.cfg.rationale_top_k = std::stoi(v); }},
            {"ratio-train", [&](const std::string& v) { t.ratio_train = std::stod(v); }},
            {"ratio-val", [&](const std::string& v) { t.ratio_val = std::stod(v); }},
            {"ratio-test", [&](const std::string& v) { t.ratio_test = std::stod(v); }},
        };
        apply_config_file(t.config_file, train_cmd, setters);
      }
      if (t.ratio_train <= 0 || t.ratio_val <= 0 || t.ratio_test <= 0 ||
          std::abs(t.ratio_train + t.ratio_val + t.ratio_test - 1.0) > 1e-9) {
        std::cerr << "error: split ratios must be positive and sum to 1\n"
                  << train_cmd->help() << "\n";
        return kExitUsage;
      }
      return cmd_train(t);
    }
    if (*eval_cmd)
      return cmd_eval(e_dump, e_report, e_strategy, e_top_k, e_strict, e_gmb_power, e_json);
    if (*explain_cmd) return cmd_explain(x_checkpoint, x_id, x_corpus, x_text, x_json);
    if (*agreement_cmd) return cmd_agreement(a_corpus, a_annotators, a_json);
    if (*prompt_cmd)
      return cmd_prompt_eval(p_corpus, p_template, p_model, p_cache, p_client, p_output,
                             p_def_file, p_ctx_file, p_attempts, p_backoff);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << json({{"error", e.what()}}).dump() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << json({{"error", e.what()}}).dump() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
