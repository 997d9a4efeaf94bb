#include <random>

#include <doctest.h>

#include "pancap/caption.hpp"
#include "pancap/mocks.hpp"
#include "pancap/scoring.hpp"

using namespace pancap;

namespace {

const char* kGoldenRef =
    "ID 1: dog <box>[[100, 200, 500, 600]]</box>\n"
    "ID 2: ball <box>[[600, 620, 700, 720]]</box>\n"
    "ID 3: tree <box>[[20, 30, 220, 630]]</box>\n"
    "ID 1: is brown\n"
    "ID 2: is red\n"
    "ID 3: is tall\n"
    "ID 1 -> ID 2: chases\n"
    "ID 2 -> ID 3: lies under\n"
    "Global: the lighting is dim\n";

const char* kGoldenPred =
    "ID 1: puppy <box>[[100, 200, 500, 600]]</box>\n"
    "ID 2: ball <box>[[650, 620, 750, 720]]</box>\n"
    "ID 3: car <box>[[800, 100, 950, 300]]</box>\n"
    "ID 1: is brown\n"
    "ID 1: is fluffy\n"
    "ID 3: is blue\n"
    "ID 1 -> ID 2: chases\n"
    "Global: the lighting is dim\n";

SynonymLexicon golden_lexicon() {
  SynonymLexicon lexicon;
  lexicon.add("dog", "puppy");
  return lexicon;
}

class CountingExtractor : public ExtractionProvider {
 public:
  SemanticContent extract(const std::string& caption) override {
    ++calls_;
    return inner_.extract(caption);
  }
  int calls() const { return calls_; }

 private:
  OracleExtractionProvider inner_;
  int calls_ = 0;
};

MatchResult flags_match(int consistent_tag, int consistent_loc, int pairs) {
  MatchResult match;
  for (int i = 0; i < pairs; ++i) {
    PairMatch pair;
    pair.gt_index = i;
    pair.pred_index = i;
    pair.tag_consistent = i < consistent_tag;
    pair.loc_consistent = i < consistent_loc;
    match.pairs.push_back(pair);
  }
  return match;
}

// Random structured caption over a small vocabulary.
std::string random_caption(std::mt19937& rng) {
  static const char* kTags[] = {"dog",  "puppy", "car",  "tree",
                                "ball", "lamp",  "bird", "chair"};
  static const char* kAttrs[] = {"is red", "is small", "is old", "is shiny"};
  static const char* kRels[] = {"chases", "sits on", "faces"};
  std::uniform_int_distribution<int> count(0, 4);
  std::uniform_int_distribution<int> coord(0, 800);
  std::uniform_int_distribution<int> extent(1, 199);
  SemanticContent content;
  int n = count(rng);
  for (int i = 1; i <= n; ++i) {
    int x = coord(rng);
    int y = coord(rng);
    content.instances.push_back(
        {i, kTags[rng() % 8], {x, y, x + extent(rng), y + extent(rng)}});
  }
  if (n > 0) {
    int items = count(rng);
    for (int i = 0; i < items; ++i) {
      int subject = 1 + static_cast<int>(rng() % n);
      if (rng() % 3 == 0 && n >= 2) {
        int object = 1 + static_cast<int>(rng() % n);
        content.items.push_back(
            {ItemDim::relation, subject, object, kRels[rng() % 3]});
      } else {
        content.items.push_back(
            {ItemDim::attribute, subject, std::nullopt, kAttrs[rng() % 4]});
      }
    }
  }
  if (rng() % 2 == 0) {
    content.items.push_back({ItemDim::global_state, std::nullopt, std::nullopt,
                             rng() % 2 ? "the light is dim" : "it is raining"});
  }
  return render_semantic_lines(content);
}

}  // namespace

TEST_CASE("prf follows the percentage formulas") {
  DimensionScore even = prf(5, 10, 10);
  CHECK(even.precision == doctest::Approx(50.0));
  CHECK(even.recall == doctest::Approx(50.0));
  CHECK(even.f1 == doctest::Approx(50.0));

  CHECK(prf(0, 3, 3).f1 == doctest::Approx(0.0));

  DimensionScore vacuous = prf(0, 0, 0);
  CHECK(vacuous.precision == 100.0);
  CHECK(vacuous.recall == 100.0);
  CHECK(vacuous.f1 == 100.0);

  DimensionScore skew = prf(2, 2, 4);
  CHECK(skew.precision == doctest::Approx(100.0));
  CHECK(skew.recall == doctest::Approx(50.0));
  CHECK(skew.f1 == doctest::Approx(200.0 / 3.0));

  // one-sided emptiness is failure, not vacuous success
  CHECK(prf(0, 0, 2).precision == 0.0);
  CHECK(prf(0, 0, 2).f1 == 0.0);
  CHECK(prf(0, 2, 0).recall == 0.0);
}

TEST_CASE("prf is exactly 100 on perfect counts") {
  for (int n = 1; n <= 50; ++n) {
    DimensionScore score = prf(n, n, n);
    CHECK(score.precision == 100.0);
    CHECK(score.recall == 100.0);
    CHECK(score.f1 == 100.0);
  }
}

TEST_CASE("prf rejects impossible counts") {
  CHECK_THROWS_AS(prf(3, 2, 5), PancapError);
  CHECK_THROWS_AS(prf(3, 5, 2), PancapError);
  CHECK_THROWS_AS(prf(-1, 2, 2), PancapError);
  try {
    prf(4, 3, 3);
  } catch (const PancapError& err) {
    CHECK(err.code() == Errc::count_inconsistency);
  }
}

TEST_CASE("tag and localization scores share denominators") {
  SUBCASE("perfect prediction") {
    TagLocScores scores = tag_and_loc_scores(flags_match(3, 3, 3), 3, 3);
    CHECK(scores.tag.f1 == 100.0);
    CHECK(scores.loc.f1 == 100.0);
  }
  SUBCASE("right tags, wrong places") {
    TagLocScores scores = tag_and_loc_scores(flags_match(3, 0, 3), 3, 3);
    CHECK(scores.tag.f1 == 100.0);
    CHECK(scores.loc.f1 == 0.0);
  }
  SUBCASE("2 of 3 consistent") {
    TagLocScores scores = tag_and_loc_scores(flags_match(2, 1, 3), 3, 3);
    CHECK(scores.tag.precision == doctest::Approx(200.0 / 3.0));
    CHECK(scores.tag.recall == doctest::Approx(200.0 / 3.0));
    CHECK(scores.tag.f1 == doctest::Approx(200.0 / 3.0));
    CHECK(scores.loc.f1 == doctest::Approx(100.0 / 3.0));
  }
}

TEST_CASE("overall score matches published weighted sums") {
  CHECK(overall_score(57.56, 30.34, 44.78, 34.61, 84.59, 0.1) ==
        doctest::Approx(175.75).epsilon(0.0001));
  CHECK(overall_score(56.45, 31.76, 44.46, 32.54, 79.85, 0.1) ==
        doctest::Approx(173.19).epsilon(0.0001));
  CHECK(overall_score(100, 100, 100, 100, 100, 0.1) == 410.0);
  CHECK(overall_score(0, 0, 0, 0, 0, 0.1) == 0.0);
  CHECK_THROWS_AS(overall_score(101, 0, 0, 0, 0, 0.1), PancapError);
  CHECK_THROWS_AS(overall_score(0, -5, 0, 0, 0, 0.1), PancapError);
}

TEST_CASE("overall score is monotone in each component") {
  double base = overall_score(50, 40, 30, 20, 10, 0.1);
  CHECK(overall_score(51, 40, 30, 20, 10, 0.1) > base);
  CHECK(overall_score(50, 41, 30, 20, 10, 0.1) > base);
  CHECK(overall_score(50, 40, 31, 20, 10, 0.1) > base);
  CHECK(overall_score(50, 40, 30, 21, 10, 0.1) > base);
  CHECK(overall_score(50, 40, 30, 20, 11, 0.1) > base);
}

TEST_CASE("self-evaluation with oracle providers is perfect") {
  Providers providers = make_mock_providers();
  EvalConfig cfg;
  PancapReport report = evaluate_pair(kGoldenRef, kGoldenRef, cfg, providers);
  CHECK(report.tag.f1 == 100.0);
  CHECK(report.loc.f1 == 100.0);
  CHECK(report.att.f1 == 100.0);
  CHECK(report.rel.f1 == 100.0);
  CHECK(report.glo.f1 == 100.0);
  CHECK(report.overall == 410.0);
}

TEST_CASE("zero-instance prediction scores zero tag and localization") {
  Providers providers = make_mock_providers();
  EvalConfig cfg;
  PancapReport report = evaluate_pair("", kGoldenRef, cfg, providers);
  CHECK(report.tag.f1 == 0.0);
  CHECK(report.loc.f1 == 0.0);
  CHECK(report.att.f1 == 0.0);
  CHECK(report.overall == 0.0);
}

TEST_CASE("golden pair reproduces the hand-computed report") {
  Providers providers = make_mock_providers(golden_lexicon());
  EvalConfig cfg;
  PairEvaluation eval =
      evaluate_pair_detailed(kGoldenPred, kGoldenRef, std::nullopt, cfg,
                             providers);

  // matching: puppy<->dog (synonym heads, IoU 1), ball<->ball (IoU 1/3),
  // car<->tree forced at score 0
  REQUIRE(eval.match.pairs.size() == 3);
  CHECK(eval.match.pairs[0].tag_consistent);
  CHECK(eval.match.pairs[0].loc_consistent);
  CHECK(eval.match.pairs[1].tag_consistent);
  CHECK_FALSE(eval.match.pairs[1].loc_consistent);
  CHECK(eval.match.pairs[1].iou == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(eval.match.pairs[2].tag_consistent);

  CHECK(eval.report.tag.f1 == doctest::Approx(200.0 / 3.0));
  CHECK(eval.report.loc.f1 == doctest::Approx(100.0 / 3.0));
  CHECK(eval.report.att.precision == doctest::Approx(100.0 / 3.0));
  CHECK(eval.report.att.recall == doctest::Approx(100.0 / 3.0));
  CHECK(eval.report.att.f1 == doctest::Approx(100.0 / 3.0));
  CHECK(eval.report.rel.precision == doctest::Approx(100.0));
  CHECK(eval.report.rel.recall == doctest::Approx(50.0));
  CHECK(eval.report.rel.f1 == doctest::Approx(200.0 / 3.0));
  CHECK(eval.report.glo.f1 == doctest::Approx(100.0));
  CHECK(eval.report.overall == doctest::Approx(210.0));

  // every item was verifiable: the forced pair still remaps ids
  CHECK(eval.dropped_pred.empty());
  CHECK(eval.dropped_ref.empty());
  CHECK(eval.pred_verdicts.size() == 5);
  CHECK(eval.ref_verdicts.size() == 6);
}

TEST_CASE("pre-extracted reference content skips one extraction") {
  auto counting = std::make_shared<CountingExtractor>();
  Providers providers = make_mock_providers(golden_lexicon());
  providers.extractor = counting;
  EvalConfig cfg;

  SemanticContent ref_content = OracleExtractionProvider{}.extract(kGoldenRef);
  PairEvaluation cached = evaluate_pair_detailed(kGoldenPred, kGoldenRef,
                                                 ref_content, cfg, providers);
  CHECK(counting->calls() == 1);  // prediction only

  PairEvaluation direct = evaluate_pair_detailed(kGoldenPred, kGoldenRef,
                                                 std::nullopt, cfg, providers);
  CHECK(counting->calls() == 3);
  CHECK(to_json(cached.report) == to_json(direct.report));
}

TEST_CASE("localization F1 never exceeds tag F1") {
  std::mt19937 rng(20250817);
  Providers providers = make_mock_providers(golden_lexicon());
  EvalConfig cfg;
  for (int trial = 0; trial < 60; ++trial) {
    std::string pred = random_caption(rng);
    std::string ref = random_caption(rng);
    CAPTURE(trial);
    PancapReport report = evaluate_pair(pred, ref, cfg, providers);
    CHECK(report.loc.f1 <= report.tag.f1 + 1e-9);
    CHECK(report.overall ==
          doctest::Approx(report.tag.f1 + report.loc.f1 + report.att.f1 +
                          report.rel.f1 + 0.1 * report.glo.f1));
  }
}

TEST_CASE("deleting a tag-consistent predicted instance never helps") {
  Providers providers = make_mock_providers(golden_lexicon());
  EvalConfig cfg;
  PairEvaluation base =
      evaluate_pair_detailed(kGoldenPred, kGoldenRef, std::nullopt, cfg,
                             providers);

  for (const PairMatch& pair : base.match.pairs) {
    if (!pair.tag_consistent) continue;
    int victim = base.pred_content.instances[pair.pred_index].id;
    SemanticContent pruned;
    for (const auto& instance : base.pred_content.instances) {
      if (instance.id != victim) pruned.instances.push_back(instance);
    }
    for (const auto& item : base.pred_content.items) {
      if (item.subject == victim || item.object == victim) continue;
      pruned.items.push_back(item);
    }
    CAPTURE(victim);
    PancapReport report =
        evaluate_pair(render_semantic_lines(pruned), kGoldenRef, cfg, providers);
    CHECK(report.tag.recall <= base.report.tag.recall + 1e-9);
    CHECK(report.overall <= base.report.overall + 1e-9);
  }
}

// Overall can legitimately rise when deleting an instance empties a QA
// dimension on both sides (vacuous 100) or removes wrong claims, so only
// tag recall is asserted on arbitrary content; the golden test above covers
// the full never-helps behavior on well-formed pairs.
TEST_CASE("deleting a consistent instance never raises tag recall") {
  std::mt19937 rng(99123);
  Providers providers = make_mock_providers();
  EvalConfig cfg;
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 25; ++trial) {
    std::string pred_text = random_caption(rng);
    std::string ref_text = random_caption(rng);
    PairEvaluation base =
        evaluate_pair_detailed(pred_text, ref_text, std::nullopt, cfg,
                               providers);
    for (const PairMatch& pair : base.match.pairs) {
      if (!pair.tag_consistent) continue;
      int victim = base.pred_content.instances[pair.pred_index].id;
      SemanticContent pruned;
      for (const auto& instance : base.pred_content.instances) {
        if (instance.id != victim) pruned.instances.push_back(instance);
      }
      for (const auto& item : base.pred_content.items) {
        if (item.subject == victim || item.object == victim) continue;
        pruned.items.push_back(item);
      }
      PancapReport report = evaluate_pair(render_semantic_lines(pruned),
                                          ref_text, cfg, providers);
      CAPTURE(trial);
      CHECK(report.tag.recall <= base.report.tag.recall + 1e-9);
      ++checked;
      break;
    }
  }
  CHECK(checked >= 10);  // the corpus actually exercised the property
}

TEST_CASE("report JSON round-trips losslessly") {
  Providers providers = make_mock_providers(golden_lexicon());
  EvalConfig cfg;
  PancapReport report = evaluate_pair(kGoldenPred, kGoldenRef, cfg, providers);
  PancapReport back = report_from_json(to_json(report));
  CHECK(back == report);
  CHECK(to_json(back).dump() == to_json(report).dump());
}

TEST_CASE("unparseable prediction surfaces as extraction failure") {
  Providers providers = make_mock_providers();
  // extractor that always fails, standing in for a broken backend
  class Broken : public ExtractionProvider {
   public:
    SemanticContent extract(const std::string&) override {
      throw PancapError(Errc::timeout, "backend gone");
    }
  };
  providers.extractor = std::make_shared<Broken>();
  EvalConfig cfg;
  try {
    evaluate_pair("a dog", "a cat", cfg, providers);
    FAIL("expected extraction failure");
  } catch (const PancapError& err) {
    CHECK(err.code() == Errc::extraction_failed);
  }
}
