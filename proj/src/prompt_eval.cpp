#include "smra/prompt_eval.hpp"

#include <ostream>

#include <nlohmann/json.hpp>

#include "smra/errors.hpp"
#include "smra/metrics.hpp"

namespace smra {

using nlohmann::json;

PromptEvalResult run_prompt_eval(ChatClient& client, const std::vector<Instance>& instances,
                                 const PromptEvalConfig& cfg) {
  const auto& tpl = get_template(cfg.template_id);
  std::optional<std::string> definition = cfg.definition;
  std::optional<std::string> context = cfg.context;
  if (tpl.needs_definition && !definition) definition = hate_speech_definition();
  if (tpl.needs_context && !context) context = collection_context();

  ResponseCache cache(cfg.cache_dir);
  RetryingClient retrying(client, cfg.max_attempts, cfg.backoff_ms);

  PromptEvalResult result;
  result.n = static_cast<int>(instances.size());

  std::vector<PredictionRecord> hate_records, moral_records;
  for (const auto& inst : instances) {
    const std::string prompt =
        render_prompt(cfg.template_id, inst.text, definition, context, nullptr);
    const std::string key =
        response_cache_key(cfg.model_id, to_string(cfg.template_id), inst.id, prompt);

    PromptEvalRow row;
    row.instance_id = inst.id;
    std::string response;
    if (auto hit = cache.get(key)) {
      response = *hit;
      row.from_cache = true;
      result.cache_hits += 1;
    } else {
      response = retrying.complete(cfg.model_id, prompt, /*temperature=*/0.0);
      cache.put(key, cfg.model_id, to_string(cfg.template_id), inst.id, fnv1a64(prompt),
                response);
    }

    row.parsed = parse_response(response, cfg.template_id);
    if (!row.parsed.parse_ok) result.parse_failures += 1;
    if (row.parsed.hate) row.predicted_hate = *row.parsed.hate ? "Hate" : "NonHate";
    if (row.parsed.moral_none) {
      row.predicted_moral = to_string(MoralLabel::NN);
    } else if (row.parsed.moral_value) {
      if (const auto label = map_moral_word(*row.parsed.moral_value))
        row.predicted_moral = to_string(*label);
    }

    if (tpl.has_hate_field) {
      PredictionRecord rec;
      rec.id = inst.id;
      rec.gold_hate = inst.hate_label;
      rec.predicted = row.predicted_hate;
      hate_records.push_back(std::move(rec));
    }
    if (tpl.has_moral_field) {
      PredictionRecord rec;
      rec.id = inst.id;
      std::vector<const RationaleAnnotation*> ordered;
      for (const auto& ann : inst.moral_annotations) ordered.push_back(&ann);
      std::sort(ordered.begin(), ordered.end(),
                [](const RationaleAnnotation* a, const RationaleAnnotation* b) {
                  return a->order < b->order;
                });
      for (const auto* ann : ordered) rec.gold_moral.push_back(to_string(ann->label));
      rec.predicted = row.predicted_moral;
      moral_records.push_back(std::move(rec));
    }
    result.rows.push_back(std::move(row));
  }

  if (!hate_records.empty())
    result.hate_f1 = macro_f1(hate_records, F1Mode::strict, Task::hate);
  if (!moral_records.empty())
    result.moral_f1 = macro_f1(moral_records, F1Mode::adapted, Task::moral);
  return result;
}

void write_prompt_dump(std::ostream& out, const PromptEvalResult& result,
                       const PromptEvalConfig& cfg) {
  json header;
  header["header"] = {{"schema", "smra.prompt_eval.v1"},
                      {"model_id", cfg.model_id},
                      {"template", to_string(cfg.template_id)}};
  out << header.dump() << '\n';
  for (const auto& row : result.rows) {
    json j;
    j["id"] = row.instance_id;
    j["parse_ok"] = row.parsed.parse_ok;
    j["from_cache"] = row.from_cache;
    if (row.parsed.hate) {
      j["hate"] = *row.parsed.hate ? "YES" : "NO";
    } else {
      j["hate"] = nullptr;
    }
    if (row.parsed.moral_none) {
      j["moral_value"] = "None";
    } else if (row.parsed.moral_value) {
      j["moral_value"] = *row.parsed.moral_value;
    } else {
      j["moral_value"] = nullptr;
    }
    j["predicted_hate"] = row.predicted_hate;
    j["predicted_moral"] = row.predicted_moral;
    if (row.parsed.explanation_none) {
      j["explanation"] = "None";
    } else if (row.parsed.explanation) {
      j["explanation"] = *row.parsed.explanation;
    } else {
      j["explanation"] = nullptr;
    }
    if (!row.parsed.parse_ok) j["raw"] = row.parsed.raw;
    if (!row.parsed.warnings.empty()) j["warnings"] = row.parsed.warnings;
    out << j.dump() << '\n';
  }
}

std::string prompt_scores_json(const PromptEvalResult& result, const PromptEvalConfig& cfg) {
  json j;
  j["model_id"] = cfg.model_id;
  j["template"] = to_string(cfg.template_id);
  j["n"] = result.n;
  j["parse_failures"] = result.parse_failures;
  j["cache_hits"] = result.cache_hits;
  if (result.hate_f1) {
    j["hate_f1"] = *result.hate_f1;
  } else {
    j["hate_f1"] = nullptr;
  }
  if (result.moral_f1) {
    j["moral_f1"] = *result.moral_f1;
  } else {
    j["moral_f1"] = nullptr;
  }
  return j.dump(2);
}

}  // namespace smra
