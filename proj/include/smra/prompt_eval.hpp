#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "smra/corpus.hpp"
#include "smra/llm_client.hpp"
#include "smra/prompts.hpp"

namespace smra {

struct PromptEvalConfig {
  std::string model_id;
  TemplateId template_id = TemplateId::hate;
  std::string cache_dir;
  // Defaults to the canned fixtures when the template needs a slot.
  std::optional<std::string> definition;
  std::optional<std::string> context;
  int max_attempts = 3;
  int backoff_ms = 250;
};

struct PromptEvalRow {
  std::string instance_id;
  ParsedPrediction parsed;
  std::string predicted_hate;   // "Hate" / "NonHate" / "" when unavailable
  std::string predicted_moral;  // corpus label name or "" when unavailable
  bool from_cache = false;
};

struct PromptEvalResult {
  std::vector<PromptEvalRow> rows;
  std::optional<double> hate_f1;   // strict macro F1, hate-bearing templates
  std::optional<double> moral_f1;  // adapted macro F1, moral-bearing templates
  int parse_failures = 0;
  int cache_hits = 0;
  int n = 0;
};

// Renders the template per instance, resolves responses through the cache
// (then the client, with retries), parses, maps moral words onto corpus
// labels, and scores. Temperature is pinned to 0. Unparseable responses
// score as wrong and are tallied in parse_failures. A fully warm cache
// makes the run replayable with a client that always fails.
PromptEvalResult run_prompt_eval(ChatClient& client, const std::vector<Instance>& instances,
                                 const PromptEvalConfig& cfg);

// Per-instance JSONL (deterministic bytes given identical responses).
void write_prompt_dump(std::ostream& out, const PromptEvalResult& result,
                       const PromptEvalConfig& cfg);

std::string prompt_scores_json(const PromptEvalResult& result, const PromptEvalConfig& cfg);

}  // namespace smra
