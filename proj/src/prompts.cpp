#include "smra/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "smra/errors.hpp"

namespace smra {

namespace {

// clang-format off
const std::string kMftBlock =
    "The Moral Foundations Theory framework represents core ethical ad psychological concerns that come in paired positive vs negative expressions:\n"
    "- care vs harm: Involves concern for the well-being of others, with virtues expressed through care, protection, or nurturance, and vices involving harm, cruelty, or indifference to suffering.\n"
    "- fairness vs cheating: morals related to justice, rights, and reciprocity, with fairness indicating equity, rule-following, and cheating denoting exploitation, dishonesty, or manipulation.\n"
    "- loyalty vs betrayal: morals related to group-based morality, where loyalty refers to solidarity, allegiance, and in-group defense, while betrayal signals disloyalty or abandonment of one's group.\n"
    "- authority vs subversion: morals related to respect for tradition, and legitimate hierarchies, with authority indicating respect or deference to leadership or norms, and subversion indicating rebellion, disrespect, or disobedience.\n"
    "- sanctity vs degradation: morals related to purity, contamination, with Purity is associated with cleanliness, modesty, or moral elevation, while degradation includes defilement, obscenity,or perceived corruption.\n";

const std::string kHateFormat =
    "Provide your analysis in this exact format:\n"
    "hate_label: [YES if the text contains hate speech, NO otherwise]\n"
    "Provide ONLY the required output format with no additional text, explanations, or justifications.\n";

const std::string kHateMoralFormat =
    "Provide your analysis in this exact format:\n"
    "hate_label: [YES if the text contains hate speech, NO otherwise]\n"
    "moral_value: [the single most prominent moral foundations from: care, harm, fairness, cheating, authority, subversion, sanctity, degradation, loyalty, betrayal. If no clear moral foundation applies, write \"None\"]\n"
    "explanation: [provide a brief evidence based justification, specifically highlighting the words or phrases that triggered your moral value classification. If none, write \"None\"]\n"
    "Provide ONLY the required output format with no additional text, explanations, or justifications.\n";

const std::string kMoralFormat =
    "Provide your analysis in this exact format:\n"
    "moral_value: [the single most prominent moral foundations from: care, harm, fairness, cheating, authority, subversion, sanctity, degradation, loyalty, betrayal. If no clear moral foundation applies, write \"None\"]\n"
    "explanation: [provide a brief evidence based justification, specifically highlighting the words or phrases that triggered your moral value classification. If none, write \"None\"]\n"
    "\n"
    "Provide ONLY the required output format with no additional text, explanations, or justifications.\n";

const std::string kDefinition =
    "Hate Speech can result due to some of the followings:\n"
    "- Having a term or expression with any pejorative connotation.\n"
    "- Having a sequence of swear words.\n"
    "- Having a sequence of at least two terms, or/and expressions with any pejorative connotation expressed explicitly or implicitly.\n";

const std::string kContext =
    "The data was collected during the Bolsonaro government in 2019. We collected balanced data "
    "from left- and right-wing Brazilian politicians, ensuring balanced gender representation. "
    "The Jair Bolsonaro government began on 1 January 2019, after his election in late 2018 — "
    "Bolsonaro won on a wave of anti-establishment sentiment, capitalizing on widespread "
    "frustration with corruption scandals and economic stagnation. Early in his presidency, he "
    "pursued a conservative, pro-market agenda: notably, he enacted a major pension-reform in "
    "2019 aiming to reduce social-security costs. His government was marked by sharp shifts in "
    "environmental and Indigenous-land policy — protections were scaled back, enforcement "
    "relaxed, and deforestation pressures increased, drawing both domestic and international "
    "criticism.\n";
// clang-format on

std::vector<PromptTemplate> make_templates() {
  const std::string hate_head = "Analyze the following text \"{text}\" for hate speech.\n";
  const std::string hate_moral_head =
      "Analyze the following text \"{text}\" for hate speech and identify its underlying moral "
      "value dimensions:\n";
  const std::string moral_head =
      "Identify the underlying moral value dimensions in the following text \"{text}\".\n";

  std::vector<PromptTemplate> t;
  t.push_back({TemplateId::hate, hate_head + kHateFormat, false, false, true, false});
  t.push_back({TemplateId::hate_def, hate_head + "{definition}\n" + kHateFormat, true, false,
               true, false});
  t.push_back({TemplateId::hate_context, hate_head + "{context}\n" + kHateFormat, false, true,
               true, false});
  t.push_back({TemplateId::hate_moral, hate_moral_head + kMftBlock + "\n" + kHateMoralFormat,
               false, false, true, true});
  t.push_back({TemplateId::hate_moral_def,
               hate_moral_head + kMftBlock + "{definition}\n" + kHateMoralFormat, true, false,
               true, true});
  t.push_back({TemplateId::hate_moral_context,
               hate_moral_head + kMftBlock + "{context}\n" + kHateMoralFormat, false, true, true,
               true});
  t.push_back({TemplateId::moral, moral_head + kMftBlock + "\n" + kMoralFormat, false, false,
               false, true});
  t.push_back({TemplateId::moral_def, moral_head + kMftBlock + "{definition}\n" + kMoralFormat,
               true, false, false, true});
  t.push_back({TemplateId::moral_context,
               moral_head + kMftBlock + "{context}\n" + kMoralFormat, false, true, false, true});
  t.push_back({TemplateId::ablation,
               "Analyze the following text \"{text}\" for hate speech and identify its moral "
               "value:\n"
               "hate_label : [YES or NO]\n"
               "moral_value: [care, harm, fairness, cheating, authority, subversion, sanctity, "
               "degradation, loyalty, betrayal, None]\n"
               "explanation: [brief justification]\n",
               false, false, true, true});
  return t;
}

const std::vector<PromptTemplate>& templates() {
  static const std::vector<PromptTemplate> t = make_templates();
  return t;
}

std::string replace_all(std::string body, const std::string& slot, const std::string& value) {
  std::size_t at = 0;
  while ((at = body.find(slot, at)) != std::string::npos) {
    body.replace(at, slot.size(), value);
    at += value.size();
  }
  return body;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// strips one layer of [ ] or quotes, then edge punctuation
std::string strip_value(std::string v) {
  v = trim(v);
  if (v.size() >= 2 && ((v.front() == '[' && v.back() == ']') ||
                        (v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\''))) {
    v = trim(v.substr(1, v.size() - 2));
  }
  while (!v.empty() && (v.back() == '.' || v.back() == ',' || v.back() == ';')) v.pop_back();
  return trim(v);
}

}  // namespace

const char* to_string(TemplateId id) {
  switch (id) {
    case TemplateId::hate: return "hate";
    case TemplateId::hate_def: return "hate_def";
    case TemplateId::hate_context: return "hate_context";
    case TemplateId::hate_moral: return "hate_moral";
    case TemplateId::hate_moral_def: return "hate_moral_def";
    case TemplateId::hate_moral_context: return "hate_moral_context";
    case TemplateId::moral: return "moral";
    case TemplateId::moral_def: return "moral_def";
    case TemplateId::moral_context: return "moral_context";
    case TemplateId::ablation: return "ablation";
  }
  return "?";
}

TemplateId template_id_from_string(const std::string& s) {
  for (const auto& t : templates()) {
    if (s == to_string(t.id)) return t.id;
  }
  throw ValueError("unknown prompt template: " + s);
}

const std::vector<TemplateId>& all_template_ids() {
  static const std::vector<TemplateId> ids = [] {
    std::vector<TemplateId> out;
    for (const auto& t : templates()) out.push_back(t.id);
    return out;
  }();
  return ids;
}

const PromptTemplate& get_template(TemplateId id) {
  for (const auto& t : templates()) {
    if (t.id == id) return t;
  }
  throw ValueError("unknown template id");
}

const std::string& hate_speech_definition() { return kDefinition; }
const std::string& collection_context() { return kContext; }

std::string render_prompt(TemplateId id, const std::string& text,
                          const std::optional<std::string>& definition,
                          const std::optional<std::string>& context,
                          std::vector<std::string>* warnings) {
  const auto& tpl = get_template(id);
  if (tpl.needs_definition && !definition)
    throw MissingSlot(std::string("template ") + to_string(id) + " requires {definition}");
  if (tpl.needs_context && !context)
    throw MissingSlot(std::string("template ") + to_string(id) + " requires {context}");
  if (warnings) {
    if (!tpl.needs_definition && definition)
      warnings->push_back("definition supplied but template has no {definition} slot; ignored");
    if (!tpl.needs_context && context)
      warnings->push_back("context supplied but template has no {context} slot; ignored");
  }
  std::string body = replace_all(tpl.body, "{text}", text);
  if (tpl.needs_definition) body = replace_all(body, "{definition}", *definition);
  if (tpl.needs_context) body = replace_all(body, "{context}", *context);
  return body;
}

const std::vector<std::string>& moral_vocabulary() {
  static const std::vector<std::string> words = {"care",      "harm",       "fairness",
                                                 "cheating",  "authority",  "subversion",
                                                 "sanctity",  "degradation", "loyalty",
                                                 "betrayal"};
  return words;
}

std::optional<MoralLabel> map_moral_word(const std::string& word) {
  static const std::map<std::string, MoralLabel> mapping = {
      {"care", MoralLabel::HN},      {"harm", MoralLabel::HN},
      {"fairness", MoralLabel::FN},  {"cheating", MoralLabel::FN},
      {"loyalty", MoralLabel::LN},   {"betrayal", MoralLabel::LN},
      {"authority", MoralLabel::AN}, {"subversion", MoralLabel::AN},
      {"sanctity", MoralLabel::PN},  {"degradation", MoralLabel::PN},
  };
  const auto it = mapping.find(lower(word));
  if (it == mapping.end()) return std::nullopt;
  return it->second;
}

ParsedPrediction parse_response(const std::string& raw, TemplateId /*id*/) {
  ParsedPrediction out;
  out.raw = raw;
  bool any_field = false;

  std::size_t start = 0;
  while (start <= raw.size()) {
    const std::size_t nl = raw.find('\n', start);
    const std::string line =
        raw.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
    start = nl == std::string::npos ? raw.size() + 1 : nl + 1;

    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = lower(trim(line.substr(0, colon)));
    const std::string value = strip_value(line.substr(colon + 1));
    if (key == "hate_label") {
      const std::string v = lower(value);
      if (v == "yes") {
        out.hate = true;
        any_field = true;
      } else if (v == "no") {
        out.hate = false;
        any_field = true;
      } else if (!value.empty()) {
        out.warnings.push_back("unrecognized hate_label value: " + value);
        any_field = true;
      }
    } else if (key == "moral_value") {
      any_field = true;
      const std::string v = lower(value);
      if (v == "none") {
        out.moral_none = true;
      } else if (map_moral_word(v)) {
        out.moral_value = v;
      } else if (!value.empty()) {
        out.warnings.push_back("unknown moral word: " + value);
      }
    } else if (key == "explanation") {
      any_field = true;
      if (lower(value) == "none") {
        out.explanation_none = true;
      } else if (!value.empty()) {
        out.explanation = value;
      }
    }
  }
  if (!any_field) {
    out.parse_ok = false;
    out.hate.reset();
    out.moral_value.reset();
    out.explanation.reset();
    out.moral_none = false;
    out.explanation_none = false;
  }
  return out;
}

}  // namespace smra
