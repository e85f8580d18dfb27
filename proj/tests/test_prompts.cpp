#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "smra/corpus.hpp"
#include "smra/errors.hpp"
#include "smra/llm_client.hpp"
#include "smra/prompt_eval.hpp"
#include "smra/prompts.hpp"

using namespace smra;

namespace {

std::vector<Instance> tiny_corpus() {
  std::vector<Instance> out;
  auto add = [&](const std::string& id, const std::string& text, HateLabel hate,
                 MoralLabel moral) {
    Instance inst;
    inst.id = id;
    inst.text = text;
    inst.hate_label = hate;
    RationaleAnnotation ann;
    ann.label = moral;
    ann.order = 1;
    if (moral != MoralLabel::NN) ann.spans = {{0, 4}};
    inst.moral_annotations.push_back(ann);
    out.push_back(inst);
  };
  add("p1", "texto ofensivo um", HateLabel::Hate, MoralLabel::HN);
  add("p2", "texto neutro dois", HateLabel::NonHate, MoralLabel::NN);
  add("p3", "texto ofensivo tres", HateLabel::Hate, MoralLabel::FN);
  return out;
}

// A client that fails a fixed number of times before succeeding.
struct FlakyClient : ChatClient {
  int failures_left;
  int calls = 0;
  explicit FlakyClient(int failures) : failures_left(failures) {}
  std::string complete(const std::string&, const std::string&, double) override {
    ++calls;
    if (failures_left-- > 0) throw ClientError("transient");
    return "hate_label: YES";
  }
};

struct AlwaysFailClient : ChatClient {
  std::string complete(const std::string&, const std::string&, double) override {
    throw ClientError("offline");
  }
};

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("render_prompt slots and stability") {
  SUBCASE("hate template carries neither definition nor context") {
    const auto p = render_prompt(TemplateId::hate, "um texto");
    CHECK(p.find("um texto") != std::string::npos);
    CHECK(p.find("{text}") == std::string::npos);
    CHECK(p.find("Moral Foundations") == std::string::npos);
    CHECK(p.find("hate_label:") != std::string::npos);
  }
  SUBCASE("hate_moral_def contains the MFT bullets and the definition") {
    const auto p = render_prompt(TemplateId::hate_moral_def, "um texto",
                                 hate_speech_definition());
    CHECK(p.find("care vs harm") != std::string::npos);
    CHECK(p.find("sanctity vs degradation") != std::string::npos);
    CHECK(p.find("pejorative connotation") != std::string::npos);
    CHECK(p.find("moral_value:") != std::string::npos);
  }
  SUBCASE("missing required slot raises MissingSlot") {
    CHECK_THROWS_AS(render_prompt(TemplateId::hate_def, "x"), MissingSlot);
    CHECK_THROWS_AS(render_prompt(TemplateId::moral_context, "x"), MissingSlot);
  }
  SUBCASE("unused slot warns and is ignored") {
    std::vector<std::string> warnings;
    const auto p = render_prompt(TemplateId::moral, "x", hate_speech_definition(),
                                 std::nullopt, &warnings);
    CHECK(p.find("pejorative") == std::string::npos);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("definition") != std::string::npos);
  }
  SUBCASE("rendering is byte stable") {
    const auto a = render_prompt(TemplateId::hate_moral_context, "x", std::nullopt,
                                 collection_context());
    const auto b = render_prompt(TemplateId::hate_moral_context, "x", std::nullopt,
                                 collection_context());
    CHECK(a == b);
  }
  SUBCASE("every moral-bearing template carries all five MFT bullets verbatim") {
    for (const auto id : {TemplateId::hate_moral, TemplateId::hate_moral_def,
                          TemplateId::hate_moral_context, TemplateId::moral,
                          TemplateId::moral_def, TemplateId::moral_context}) {
      const auto& body = get_template(id).body;
      for (const char* bullet :
           {"care vs harm", "fairness vs cheating", "loyalty vs betrayal",
            "authority vs subversion", "sanctity vs degradation"}) {
        CHECK(body.find(bullet) != std::string::npos);
      }
    }
  }
}

TEST_CASE("parse_response") {
  SUBCASE("canonical three-field response") {
    const auto p = parse_response("hate_label: YES\nmoral_value: harm\nexplanation: slur X",
                                  TemplateId::hate_moral);
    CHECK(p.parse_ok);
    REQUIRE(p.hate.has_value());
    CHECK(*p.hate == true);
    REQUIRE(p.moral_value.has_value());
    CHECK(*p.moral_value == "harm");
    REQUIRE(p.explanation.has_value());
    CHECK(*p.explanation == "slur X");
  }
  SUBCASE("hate-only response leaves the other fields absent") {
    const auto p = parse_response("hate_label: NO", TemplateId::hate);
    CHECK(p.parse_ok);
    CHECK(*p.hate == false);
    CHECK_FALSE(p.moral_value.has_value());
    CHECK_FALSE(p.explanation.has_value());
  }
  SUBCASE("reordered lines, casing and brackets are tolerated") {
    const auto p = parse_response(
        "  EXPLANATION:  [because of wording]\nMORAL_VALUE: [Betrayal]\nHate_Label: [yes]",
        TemplateId::hate_moral);
    CHECK(*p.hate == true);
    CHECK(*p.moral_value == "betrayal");
    CHECK(*p.explanation == "because of wording");
  }
  SUBCASE("None maps to the none markers") {
    const auto p = parse_response("hate_label: NO\nmoral_value: None\nexplanation: None",
                                  TemplateId::hate_moral);
    CHECK(p.moral_none);
    CHECK_FALSE(p.moral_value.has_value());
    CHECK(p.explanation_none);
  }
  SUBCASE("unknown moral word keeps parse_ok with a warning") {
    const auto p = parse_response("hate_label: YES\nmoral_value: valor", TemplateId::hate_moral);
    CHECK(p.parse_ok);
    CHECK_FALSE(p.moral_value.has_value());
    REQUIRE_FALSE(p.warnings.empty());
    CHECK(p.warnings[0].find("valor") != std::string::npos);
  }
  SUBCASE("garbage keeps raw and clears fields") {
    const auto p = parse_response("I think the answer is definitely maybe",
                                  TemplateId::hate_moral);
    CHECK_FALSE(p.parse_ok);
    CHECK_FALSE(p.hate.has_value());
    CHECK(p.raw.find("definitely") != std::string::npos);
  }
}

TEST_CASE("render/parse closure across all ten templates") {
  for (const auto id : all_template_ids()) {
    const auto& tpl = get_template(id);
    // synthetic response following the template's own field skeleton
    std::string response;
    if (tpl.has_hate_field) response += "hate_label: YES\n";
    if (tpl.has_moral_field) {
      response += "moral_value: loyalty\n";
      response += "explanation: grupo e aliança\n";
    }
    const auto parsed = parse_response(response, id);
    CHECK(parsed.parse_ok);
    if (tpl.has_hate_field) {
      REQUIRE(parsed.hate.has_value());
      CHECK(*parsed.hate == true);
    }
    if (tpl.has_moral_field) {
      REQUIRE(parsed.moral_value.has_value());
      CHECK(*parsed.moral_value == "loyalty");
      CHECK(*parsed.explanation == "grupo e aliança");
    }
    // the rendered prompt embeds its own format keys
    const auto prompt = render_prompt(id, "txt",
                                      tpl.needs_definition
                                          ? std::optional<std::string>(hate_speech_definition())
                                          : std::nullopt,
                                      tpl.needs_context
                                          ? std::optional<std::string>(collection_context())
                                          : std::nullopt);
    if (tpl.has_hate_field) CHECK(prompt.find("hate_label") != std::string::npos);
    if (tpl.has_moral_field) CHECK(prompt.find("moral_value") != std::string::npos);
  }
}

TEST_CASE("moral word mapping is total and surjective") {
  std::set<MoralLabel> reached;
  for (const auto& word : moral_vocabulary()) {
    const auto label = map_moral_word(word);
    REQUIRE(label.has_value());
    CHECK(*label != MoralLabel::NN);  // None handles NN separately
    reached.insert(*label);
  }
  reached.insert(MoralLabel::NN);  // via the None marker
  CHECK(reached.size() == static_cast<std::size_t>(kNumMoralLabels));
  CHECK_FALSE(map_moral_word("pureza").has_value());
}

TEST_CASE("cache keys are content addressed") {
  const auto base = response_cache_key("m", "hate", "i1", "prompt body");
  CHECK(base == response_cache_key("m", "hate", "i1", "prompt body"));
  CHECK(base != response_cache_key("m", "hate", "i1", "prompt body CHANGED"));
  CHECK(base != response_cache_key("m", "hate", "i2", "prompt body"));
  CHECK(base != response_cache_key("m2", "hate", "i1", "prompt body"));
  CHECK(base != response_cache_key("m", "hate_def", "i1", "prompt body"));
}

TEST_CASE("retrying client recovers from transient failures") {
  FlakyClient flaky(2);
  RetryingClient retrying(flaky, 3, 0);
  CHECK(retrying.complete("m", "p", 0.0) == "hate_label: YES");
  CHECK(flaky.calls == 3);

  FlakyClient dead(10);
  RetryingClient bounded(dead, 3, 0);
  CHECK_THROWS_AS(bounded.complete("m", "p", 0.0), ClientError);
  CHECK(dead.calls == 3);
}

TEST_CASE("scripted client matches by substring") {
  ScriptedClient client({{"ofensivo", "hate_label: YES"}, {"", "hate_label: NO"}});
  CHECK(client.complete("m", "texto ofensivo aqui", 0.0) == "hate_label: YES");
  CHECK(client.complete("m", "texto neutro", 0.0) == "hate_label: NO");
}

TEST_CASE("run_prompt_eval end to end with cache replay") {
  const auto corpus = tiny_corpus();
  const auto cache_dir = temp_dir("smra_prompt_cache");

  ScriptedClient scripted({
      {"ofensivo um", "hate_label: YES\nmoral_value: harm\nexplanation: ofensa direta"},
      {"neutro dois", "hate_label: NO\nmoral_value: None\nexplanation: None"},
      {"ofensivo tres", "hate_label: YES\nmoral_value: cheating\nexplanation: engano"},
  });

  PromptEvalConfig cfg;
  cfg.model_id = "scripted-model";
  cfg.template_id = TemplateId::hate_moral;
  cfg.cache_dir = cache_dir;
  cfg.backoff_ms = 0;

  const auto first = run_prompt_eval(scripted, corpus, cfg);
  CHECK(first.n == 3);
  CHECK(first.cache_hits == 0);
  CHECK(first.parse_failures == 0);
  REQUIRE(first.hate_f1.has_value());
  CHECK(*first.hate_f1 == 1.0);  // all three hate answers correct
  REQUIRE(first.moral_f1.has_value());
  CHECK(*first.moral_f1 == 1.0);  // harm->HN, None->NN, cheating->FN all match

  std::ostringstream dump_a, dump_b;
  write_prompt_dump(dump_a, first, cfg);

  // warm cache: a dead client must replay byte-identically
  AlwaysFailClient dead;
  const auto second = run_prompt_eval(dead, corpus, cfg);
  CHECK(second.cache_hits == 3);
  CHECK(second.hate_f1 == first.hate_f1);
  write_prompt_dump(dump_b, second, cfg);
  std::string a = dump_a.str(), b = dump_b.str();
  // from_cache flags differ between a cold and warm run; blank them out
  auto scrub = [](std::string& s) {
    std::size_t at = 0;
    while ((at = s.find("\"from_cache\":true", at)) != std::string::npos)
      s.replace(at, 17, "\"from_cache\":....");
    at = 0;
    while ((at = s.find("\"from_cache\":false", at)) != std::string::npos)
      s.replace(at, 18, "\"from_cache\":....");
  };
  scrub(a);
  scrub(b);
  CHECK(a == b);

  // adapted scoring counts the gold-set membership
  const auto rows = first.rows;
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].predicted_moral == "HN");
  CHECK(rows[1].predicted_moral == "NN");
  CHECK(rows[2].predicted_moral == "FN");
  std::filesystem::remove_all(cache_dir);
}

TEST_CASE("unparseable responses score as wrong and are tallied") {
  const auto corpus = tiny_corpus();
  const auto cache_dir = temp_dir("smra_prompt_cache2");
  ScriptedClient garbage(std::vector<ScriptedClient::Rule>{{"", "no fields here at all"}});
  PromptEvalConfig cfg;
  cfg.model_id = "garbage";
  cfg.template_id = TemplateId::hate;
  cfg.cache_dir = cache_dir;
  cfg.backoff_ms = 0;
  const auto out = run_prompt_eval(garbage, corpus, cfg);
  CHECK(out.parse_failures == 3);
  REQUIRE(out.hate_f1.has_value());
  CHECK(*out.hate_f1 == 0.0);
  std::filesystem::remove_all(cache_dir);
}
