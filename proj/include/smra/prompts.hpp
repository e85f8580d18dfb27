#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smra/corpus.hpp"

namespace smra {

// The ten prompt configurations. Naming follows the task scope plus the
// optional information block (hate-speech definition or data-collection
// context); `ablation` strips the MFT guidance down to bare field skeletons.
enum class TemplateId {
  hate,
  hate_def,
  hate_context,
  hate_moral,
  hate_moral_def,
  hate_moral_context,
  moral,
  moral_def,
  moral_context,
  ablation,
};

const char* to_string(TemplateId id);
TemplateId template_id_from_string(const std::string& s);
const std::vector<TemplateId>& all_template_ids();

struct PromptTemplate {
  TemplateId id;
  std::string body;  // contains {text} and optionally {definition} / {context}
  bool needs_definition = false;
  bool needs_context = false;
  bool has_hate_field = false;
  bool has_moral_field = false;
};

const PromptTemplate& get_template(TemplateId id);

// Canned information blocks used by the *_def / *_context templates.
const std::string& hate_speech_definition();
const std::string& collection_context();

// Byte-stable slot substitution. Throws MissingSlot when a required slot
// is absent; supplying a slot the template does not use only adds a warning.
std::string render_prompt(TemplateId id, const std::string& text,
                          const std::optional<std::string>& definition = std::nullopt,
                          const std::optional<std::string>& context = std::nullopt,
                          std::vector<std::string>* warnings = nullptr);

struct ParsedPrediction {
  std::optional<bool> hate;  // true = YES
  bool moral_none = false;   // explicit "None"
  std::optional<std::string> moral_value;  // one of the ten MFT words
  bool explanation_none = false;
  std::optional<std::string> explanation;
  bool parse_ok = true;  // false only when no recognized field was found
  std::string raw;
  std::vector<std::string> warnings;
};

// Case-insensitive key matching on hate_label / moral_value / explanation,
// tolerant of reordered lines, surrounding whitespace and bracketed values.
// Unknown moral words leave moral_value absent with a warning; a response
// with no recognizable field keeps only `raw` with parse_ok = false.
ParsedPrediction parse_response(const std::string& raw, TemplateId id);

// The ten MFT words accepted in moral_value answers.
const std::vector<std::string>& moral_vocabulary();

// care/harm -> HN, fairness/cheating -> FN, loyalty/betrayal -> LN,
// authority/subversion -> AN, sanctity/degradation -> PN. The "None"
// marker maps to NN at the caller (see ParsedPrediction::moral_none).
std::optional<MoralLabel> map_moral_word(const std::string& word);

}  // namespace smra
