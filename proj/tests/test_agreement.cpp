#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "smra/corpus.hpp"
#include "smra/metrics.hpp"

using namespace smra;

namespace {

const std::string kAgreementFixture =
    std::string(SMRA_SOURCE_DIR) + "/data/fixtures/agreement_corpus.jsonl";

// Spot checks frozen from scikit-learn's cohen_kappa_score with
// weights="quadratic" on fixed label vectors.
struct FrozenKappa {
  int k;
  std::vector<int> a;
  std::vector<int> b;
  double kappa;
};

const std::vector<FrozenKappa> kFrozen = {
    {6,
     {3, 4, 2, 4, 4, 1, 2, 2, 2, 4, 3, 2, 5, 4, 1, 3, 5, 5, 1, 3,
      4, 0, 3, 1, 5, 4, 3, 0, 0, 2, 2, 1, 3, 3, 5, 5, 5, 2, 3, 3},
     {3, 4, 0, 4, 4, 2, 2, 0, 2, 4, 0, 2, 5, 4, 1, 0, 5, 0, 1, 3,
      4, 0, 4, 2, 3, 5, 3, 2, 0, 2, 2, 1, 3, 3, 4, 5, 5, 2, 3, 1},
     0.65999999999999992},
    {4,
     {3, 0, 2, 2, 3, 2, 0, 3, 0, 3, 3, 1, 0, 2, 2, 0, 2, 2, 0, 3,
      0, 3, 2, 2, 2, 1, 3, 1, 1, 0, 1, 0, 0, 1, 3, 3, 3, 3, 3, 1},
     {0, 0, 2, 2, 0, 2, 1, 3, 0, 3, 3, 1, 0, 0, 2, 0, 2, 2, 0, 3,
      0, 3, 2, 2, 3, 1, 1, 1, 2, 0, 1, 0, 2, 3, 3, 3, 3, 3, 3, 1},
     0.66696669666966701},
    {3,
     {2, 0, 0, 1, 2, 2, 1, 1, 2, 2, 1, 0, 0, 1, 0, 1, 0, 0, 2, 2,
      0, 0, 2, 2, 2, 1, 0, 2, 0, 1, 1, 2, 1, 0, 2, 0, 0, 1, 1, 1},
     {2, 0, 2, 1, 2, 2, 1, 1, 2, 1, 1, 0, 0, 1, 0, 1, 2, 0, 2, 2,
      0, 1, 1, 0, 2, 1, 0, 1, 0, 0, 1, 2, 1, 2, 1, 0, 0, 1, 2, 1},
     0.5490196078431373},
    {3,
     {0, 1, 1, 2, 2, 2, 1, 1, 2, 2, 1, 2, 0, 1, 2, 1, 0, 1, 1, 1,
      1, 0, 1, 1, 2, 1, 2, 0, 0, 0, 0, 2, 1, 0, 1, 2, 2, 2, 0, 1},
     {0, 1, 2, 2, 2, 2, 1, 0, 0, 0, 1, 2, 0, 1, 2, 2, 0, 1, 0, 2,
      1, 0, 1, 1, 2, 1, 2, 0, 0, 0, 1, 1, 1, 0, 1, 2, 2, 2, 0, 0},
     0.68095712861415758},
    {4,
     {1, 1, 1, 1, 2, 0, 2, 3, 1, 0, 1, 0, 2, 0, 3, 3, 0, 0, 0, 0,
      3, 1, 0, 0, 3, 3, 2, 0, 2, 3, 3, 1, 0, 2, 3, 3, 2, 1, 3, 0},
     {1, 1, 2, 1, 2, 0, 2, 3, 1, 0, 1, 3, 0, 0, 1, 3, 0, 0, 0, 0,
      0, 1, 0, 1, 3, 3, 2, 0, 3, 3, 2, 1, 1, 1, 2, 2, 1, 2, 3, 0},
     0.66165413533834583},
};

}  // namespace

TEST_CASE("perfect agreement is exactly 1") {
  const std::vector<int> labels = {0, 1, 2, 1, 0, 2, 2, 1};
  const auto kappa = weighted_cohen_kappa(labels, labels, 3);
  REQUIRE(kappa.has_value());
  CHECK(*kappa == 1.0);
}

TEST_CASE("degenerate marginals report null") {
  const std::vector<int> constant = {1, 1, 1, 1};
  CHECK_FALSE(weighted_cohen_kappa(constant, constant, 3).has_value());
  CHECK_FALSE(weighted_cohen_kappa({0, 1}, {0, 1}, 1).has_value());
}

TEST_CASE("matches the frozen scikit-learn values") {
  for (const auto& fc : kFrozen) {
    const auto kappa = weighted_cohen_kappa(fc.a, fc.b, fc.k);
    REQUIRE(kappa.has_value());
    CHECK(std::abs(*kappa - fc.kappa) < 1e-9);
  }
}

TEST_CASE("random labels match the independent agreement-weight route (100 trials)") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 5);
    const int n = 50 + static_cast<int>(rng() % 400);
    std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
      b[static_cast<std::size_t>(i)] =
          rng() % 3 == 0 ? a[static_cast<std::size_t>(i)]
                         : static_cast<int>(rng() % static_cast<std::uint64_t>(k));
    }
    const auto ours = weighted_cohen_kappa(a, b, k);
    const auto reference = oracles::kappa_agreement_route(a, b, k);
    REQUIRE(ours.has_value() == reference.has_value());
    if (ours) CHECK(std::abs(*ours - *reference) < 1e-9);
  }
}

TEST_CASE("errors on malformed inputs") {
  CHECK_THROWS_AS(weighted_cohen_kappa({0, 1}, {0}, 3), ShapeError);
  CHECK_THROWS_AS(weighted_cohen_kappa({}, {}, 3), EmptyInput);
  CHECK_THROWS_AS(weighted_cohen_kappa({0, 5}, {0, 1}, 3), ValueError);
}

TEST_CASE("agreement fixture reproduces the reference kappas to 3 decimals") {
  const auto loaded = load_corpus(kAgreementFixture);
  REQUIRE(loaded.rejected.empty());
  REQUIRE(loaded.instances.size() == 500);

  const double expected[3] = {0.811, 0.671, 0.612};
  for (int order = 1; order <= 3; ++order) {
    const auto [a, b] = annotator_label_pairs(loaded.instances, "a1", "a2", order);
    REQUIRE(a.size() == 500);
    const auto kappa = weighted_cohen_kappa(a, b, kNumMoralLabels);
    REQUIRE(kappa.has_value());
    CHECK(std::round(*kappa * 1000) / 1000 == doctest::Approx(expected[order - 1]));
  }
}

TEST_CASE("annotator pairs require both annotators to label the slot") {
  Instance inst;
  inst.id = "x";
  inst.text = "abc def";
  inst.hate_label = HateLabel::Hate;
  RationaleAnnotation a1{MoralLabel::HN, 1, {{0, 3}}, std::nullopt};
  RationaleAnnotation a1b{MoralLabel::FN, 2, {{4, 7}}, std::nullopt};
  RationaleAnnotation a2{MoralLabel::HN, 1, {{0, 3}}, std::nullopt};
  inst.moral_annotations = {a1, a1b};
  inst.all_annotators["a1"] = {a1, a1b};
  inst.all_annotators["a2"] = {a2};  // no rank-2 annotation

  const auto [r1a, r1b] = annotator_label_pairs({inst}, "a1", "a2", 1);
  CHECK(r1a.size() == 1);
  const auto [r2a, r2b] = annotator_label_pairs({inst}, "a1", "a2", 2);
  CHECK(r2a.empty());  // slot excluded when either side is missing
}
