#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pancap/matching.hpp"

using namespace pancap;

namespace {

// Embeds every distinct word on its own axis; multi-word texts average.
class WordAxisEmbedder : public EmbeddingProvider {
 public:
  std::vector<double> embed(const std::string& text) override {
    std::vector<double> v(64, 0.0);
    std::size_t start = 0;
    int words = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
      if (i == text.size() || text[i] == ' ') {
        if (i > start) {
          std::size_t bucket = std::hash<std::string>{}(text.substr(start, i - start)) % v.size();
          v[bucket] += 1.0;
          ++words;
        }
        start = i + 1;
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
    } else {
      v[0] = 1.0;
    }
    return v;
  }
};

// Fixed vectors for exact-cosine test points.
class TableEmbedder : public EmbeddingProvider {
 public:
  explicit TableEmbedder(std::map<std::string, std::vector<double>> table)
      : table_(std::move(table)) {}
  std::vector<double> embed(const std::string& text) override {
    return table_.at(text);
  }

 private:
  std::map<std::string, std::vector<double>> table_;
};

SynonymLexicon fixture_lexicon() {
  SynonymLexicon lexicon;
  lexicon.add("dog", "puppy");
  lexicon.add("car", "automobile");
  lexicon.add("tree", "oak");
  return lexicon;
}

// Maximum of sum(score) over all one-to-one partial assignments.
double enumerate_max(const std::vector<std::vector<double>>& score, int row,
                     std::vector<char>& used, double acc) {
  int rows = static_cast<int>(score.size());
  if (row == rows) return acc;
  int cols = static_cast<int>(score[0].size());
  double best = enumerate_max(score, row + 1, used, acc);  // row unmatched
  for (int j = 0; j < cols; ++j) {
    if (used[j]) continue;
    used[j] = 1;
    best = std::max(best, enumerate_max(score, row + 1, used, acc + score[row][j]));
    used[j] = 0;
  }
  return best;
}

double enumerate_max(const std::vector<std::vector<double>>& score) {
  if (score.empty() || score[0].empty()) return 0.0;
  std::vector<char> used(score[0].size(), 0);
  return enumerate_max(score, 0, used, 0.0);
}

}  // namespace

TEST_CASE("iou of identical boxes is 1") {
  CHECK(iou(BoundingBox{0, 0, 10, 10}, BoundingBox{0, 0, 10, 10}) ==
        doctest::Approx(1.0));
}

TEST_CASE("iou of disjoint boxes is 0") {
  CHECK(iou(BoundingBox{0, 0, 10, 10}, BoundingBox{20, 20, 30, 30}) ==
        doctest::Approx(0.0));
}

TEST_CASE("iou of partially overlapping boxes") {
  CHECK(iou(BoundingBox{0, 0, 10, 10}, BoundingBox{5, 5, 15, 15}) ==
        doctest::Approx(25.0 / 175.0));
}

TEST_CASE("iou is symmetric and bounded on random boxes") {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> lo(0, 900);
  std::uniform_int_distribution<int> len(1, 99);
  for (int trial = 0; trial < 20000; ++trial) {
    BoundingBox a{lo(rng), lo(rng), 0, 0};
    a.x2 = a.x1 + len(rng);
    a.y2 = a.y1 + len(rng);
    BoundingBox b{lo(rng), lo(rng), 0, 0};
    b.x2 = b.x1 + len(rng);
    b.y2 = b.y1 + len(rng);
    double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
  BoundingBox a{3, 4, 50, 60};
  CHECK(iou(a, a) == doctest::Approx(1.0));
}

TEST_CASE("synonym lexicon symmetrizes on load") {
  SynonymLexicon lexicon = SynonymLexicon::from_json(
      Json::parse(R"({"dog": ["puppy", "hound"]})"));
  CHECK(lexicon.synonyms("dog", "puppy"));
  CHECK(lexicon.synonyms("puppy", "dog"));
  CHECK(lexicon.synonyms("Hound", "DOG"));
  CHECK_FALSE(lexicon.synonyms("puppy", "hound"));
  CHECK_FALSE(lexicon.synonyms("dog", "car"));
}

TEST_CASE("synonym lexicon rejects malformed documents") {
  CHECK_THROWS_AS(SynonymLexicon::from_json(Json::parse(R"(["dog"])")),
                  PancapError);
  CHECK_THROWS_AS(SynonymLexicon::from_json(Json::parse(R"({"dog": "puppy"})")),
                  PancapError);
}

TEST_CASE("tag similarity of identical tags with unit cosine") {
  TableEmbedder embedder({{"dog", {1.0, 0.0}}});
  SimilarityComponents sim =
      tag_similarity("dog", "dog", fixture_lexicon(), embedder, 10.0);
  CHECK(sim.s_eq == 1.0);
  CHECK(sim.s_sy == 1.0);
  CHECK(sim.cos == doctest::Approx(1.0));
  CHECK(sim.total == doctest::Approx(111.0));
}

TEST_CASE("tag similarity of unrelated tags is zero") {
  TableEmbedder embedder({{"dog", {1.0, 0.0}}, {"car", {0.0, 1.0}}});
  SimilarityComponents sim =
      tag_similarity("dog", "car", fixture_lexicon(), embedder, 10.0);
  CHECK(sim.total == doctest::Approx(0.0));
}

TEST_CASE("tag similarity of synonym tags with cosine 0.8") {
  TableEmbedder embedder({{"puppy", {1.0, 0.0}}, {"dog", {0.8, 0.6}}});
  SimilarityComponents sim =
      tag_similarity("puppy", "dog", fixture_lexicon(), embedder, 10.0);
  CHECK(sim.s_eq == 0.0);
  CHECK(sim.s_sy == 1.0);
  CHECK(sim.total == doctest::Approx(10.8));
}

TEST_CASE("tag equality ignores case and whitespace") {
  WordAxisEmbedder embedder;
  SimilarityComponents sim = tag_similarity("Red  Ball", "red ball",
                                            fixture_lexicon(), embedder, 10.0);
  CHECK(sim.s_eq == 1.0);
}

TEST_CASE("synonym channel uses the head noun of multi-word tags") {
  WordAxisEmbedder embedder;
  SimilarityComponents sim = tag_similarity(
      "small dog", "brown puppy", fixture_lexicon(), embedder, 10.0);
  CHECK(sim.s_eq == 0.0);
  CHECK(sim.s_sy == 1.0);
}

TEST_CASE("negative cosine clamps to zero") {
  TableEmbedder embedder({{"up", {1.0, 0.0}}, {"down", {-1.0, 0.0}}});
  SimilarityComponents sim =
      tag_similarity("up", "down", SynonymLexicon{}, embedder, 10.0);
  CHECK(sim.cos == 0.0);
  CHECK(sim.total == 0.0);
}

TEST_CASE("similarity total stays within its algebraic bounds") {
  WordAxisEmbedder embedder;
  SynonymLexicon lexicon = fixture_lexicon();
  const char* tags[] = {"dog", "puppy", "car", "automobile", "tree",
                        "oak", "red ball", "small dog", "dog"};
  for (const char* a : tags) {
    for (const char* b : tags) {
      SimilarityComponents sim = tag_similarity(a, b, lexicon, embedder, 10.0);
      CHECK(sim.total >= 0.0);
      CHECK(sim.total <= 111.0);
      if (sim.s_eq == 1.0) CHECK(sim.total >= 100.0);
    }
  }
}

TEST_CASE("tag similarity rejects empty tags") {
  WordAxisEmbedder embedder;
  CHECK_THROWS_AS(tag_similarity("", "dog", SynonymLexicon{}, embedder, 10.0),
                  PancapError);
}

TEST_CASE("match of two empty sets is empty") {
  WordAxisEmbedder embedder;
  MatchResult match =
      match_instances({}, {}, EvalConfig{}, fixture_lexicon(), embedder);
  CHECK(match.pairs.empty());
  CHECK(match.unmatched_gt.empty());
  CHECK(match.unmatched_pred.empty());
  CHECK(match.objective() == 0.0);
}

TEST_CASE("identity match is tag and location consistent") {
  WordAxisEmbedder embedder;
  std::vector<EntityInstance> side = {{1, "dog", {100, 200, 500, 600}}};
  MatchResult match =
      match_instances(side, side, EvalConfig{}, fixture_lexicon(), embedder);
  REQUIRE(match.pairs.size() == 1);
  CHECK(match.pairs[0].gt_index == 0);
  CHECK(match.pairs[0].pred_index == 0);
  CHECK(match.pairs[0].tag_consistent);
  CHECK(match.pairs[0].loc_consistent);
  CHECK(match.pairs[0].iou == doctest::Approx(1.0));
  CHECK(match.pairs[0].similarity == doctest::Approx(111.0));
}

TEST_CASE("iou breaks the tie between same-tag instances") {
  WordAxisEmbedder embedder;
  std::vector<EntityInstance> gt = {{1, "dog", {0, 0, 100, 100}},
                                    {2, "dog", {200, 200, 300, 300}}};
  std::vector<EntityInstance> pred = {{1, "dog", {200, 200, 300, 300}},
                                      {2, "dog", {0, 0, 100, 100}}};
  MatchResult match =
      match_instances(gt, pred, EvalConfig{}, fixture_lexicon(), embedder);
  REQUIRE(match.pairs.size() == 2);
  CHECK(match.pairs[0].gt_index == 0);
  CHECK(match.pairs[0].pred_index == 1);
  CHECK(match.pairs[1].gt_index == 1);
  CHECK(match.pairs[1].pred_index == 0);
  CHECK(match.pairs[0].iou == doctest::Approx(1.0));
  CHECK(match.pairs[1].iou == doctest::Approx(1.0));
}

TEST_CASE("pair count is min(n, m) and leftovers are reported") {
  WordAxisEmbedder embedder;
  std::vector<EntityInstance> gt = {{1, "dog", {0, 0, 100, 100}},
                                    {2, "cat", {200, 200, 300, 300}},
                                    {3, "bird", {400, 400, 500, 500}}};
  std::vector<EntityInstance> pred = {{1, "cat", {200, 200, 300, 300}}};
  MatchResult match =
      match_instances(gt, pred, EvalConfig{}, fixture_lexicon(), embedder);
  REQUIRE(match.pairs.size() == 1);
  CHECK(match.pairs[0].gt_index == 1);
  CHECK(match.pairs[0].pred_index == 0);
  CHECK(match.unmatched_gt == std::vector<int>{0, 2});
  CHECK(match.unmatched_pred.empty());
}

TEST_CASE("one-sided match leaves everything unmatched") {
  WordAxisEmbedder embedder;
  std::vector<EntityInstance> gt = {{1, "dog", {0, 0, 100, 100}}};
  MatchResult match =
      match_instances(gt, {}, EvalConfig{}, fixture_lexicon(), embedder);
  CHECK(match.pairs.empty());
  CHECK(match.unmatched_gt == std::vector<int>{0});
}

TEST_CASE("equal-size inputs pair every instance even at zero score") {
  WordAxisEmbedder embedder;
  std::vector<EntityInstance> gt = {{1, "dog", {0, 0, 100, 100}}};
  std::vector<EntityInstance> pred = {{1, "car", {800, 800, 900, 900}}};
  MatchResult match =
      match_instances(gt, pred, EvalConfig{}, fixture_lexicon(), embedder);
  REQUIRE(match.pairs.size() == 1);
  CHECK_FALSE(match.pairs[0].tag_consistent);
  CHECK_FALSE(match.pairs[0].loc_consistent);
  CHECK(match.pairs[0].similarity == doctest::Approx(0.0));
}

TEST_CASE("loc_consistent implies tag_consistent on random inputs") {
  WordAxisEmbedder embedder;
  SynonymLexicon lexicon = fixture_lexicon();
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> lo(0, 800);
  std::uniform_int_distribution<int> len(50, 199);
  std::uniform_int_distribution<int> count(0, 5);
  const char* vocab[] = {"dog", "puppy", "car", "automobile", "tree",
                         "oak", "ball", "chair", "lamp", "rug"};
  std::uniform_int_distribution<int> word(0, 9);
  auto random_side = [&](int n) {
    std::vector<EntityInstance> side;
    for (int i = 0; i < n; ++i) {
      BoundingBox box{lo(rng), lo(rng), 0, 0};
      box.x2 = box.x1 + len(rng);
      box.y2 = box.y1 + len(rng);
      side.push_back({i + 1, vocab[word(rng)], box});
    }
    return side;
  };
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<EntityInstance> gt = random_side(count(rng));
    std::vector<EntityInstance> pred = random_side(count(rng));
    MatchResult match = match_instances(gt, pred, EvalConfig{}, lexicon, embedder);
    CHECK(match.pairs.size() == std::min(gt.size(), pred.size()));
    for (const auto& pair : match.pairs) {
      if (pair.loc_consistent) CHECK(pair.tag_consistent);
      CHECK(pair.similarity >= 0.0);
      CHECK(pair.iou >= 0.0);
      CHECK(pair.iou <= 1.0);
    }
  }
}

TEST_CASE("equal tags stay consistent for any positive mu") {
  WordAxisEmbedder embedder;
  for (double mu : {0.01, 0.5, 1.0, 10.0, 250.0}) {
    EvalConfig cfg;
    cfg.mu = mu;
    std::vector<EntityInstance> gt = {{1, "dog", {0, 0, 100, 100}}};
    std::vector<EntityInstance> pred = {{1, "dog", {500, 500, 600, 600}}};
    MatchResult match =
        match_instances(gt, pred, cfg, fixture_lexicon(), embedder);
    REQUIRE(match.pairs.size() == 1);
    CHECK(match.pairs[0].tag_consistent);
  }
}

TEST_CASE("solver matches the enumeration maximum on random problems") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> value(0.0, 112.0);
  std::uniform_int_distribution<int> dim(0, 5);
  for (int trial = 0; trial < 400; ++trial) {
    int rows = dim(rng);
    int cols = dim(rng);
    std::vector<std::vector<double>> score(rows, std::vector<double>(cols));
    for (auto& r : score) {
      for (double& x : r) x = value(rng);
    }
    std::vector<int> assignment;
    double solved = solve_assignment(score, assignment);
    double brute = enumerate_max(score);
    CHECK(solved == doctest::Approx(brute).epsilon(1e-12));
    double achieved = 0.0;
    std::vector<char> used(std::max(cols, 1), 0);
    int matched = 0;
    for (int i = 0; i < rows; ++i) {
      int j = assignment[i];
      if (j < 0) continue;
      CHECK_FALSE(used[j]);
      used[j] = 1;
      achieved += score[i][j];
      ++matched;
    }
    CHECK(matched == std::min(rows, cols));
    CHECK(achieved == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("tie-break picks the lowest column per row") {
  std::vector<std::vector<double>> score = {{5.0, 5.0}, {5.0, 5.0}};
  std::vector<int> assignment;
  solve_assignment(score, assignment);
  CHECK(assignment == std::vector<int>{0, 1});
}

TEST_CASE("matched identity pairs survive permutation of either side") {
  WordAxisEmbedder embedder;
  SynonymLexicon lexicon = fixture_lexicon();
  std::mt19937 rng(41);
  std::uniform_int_distribution<int> lo(0, 800);
  std::uniform_int_distribution<int> len(50, 199);
  const char* vocab[] = {"dog", "puppy", "car", "tree", "ball", "chair"};
  std::uniform_int_distribution<int> word(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EntityInstance> gt, pred;
    for (int i = 0; i < 4; ++i) {
      BoundingBox box{lo(rng), lo(rng), 0, 0};
      box.x2 = box.x1 + len(rng);
      box.y2 = box.y1 + len(rng);
      gt.push_back({i + 1, vocab[word(rng)], box});
      BoundingBox box2{lo(rng), lo(rng), 0, 0};
      box2.x2 = box2.x1 + len(rng);
      box2.y2 = box2.y1 + len(rng);
      pred.push_back({i + 1, vocab[word(rng)], box2});
    }
    MatchResult base = match_instances(gt, pred, EvalConfig{}, lexicon, embedder);

    std::vector<EntityInstance> gt_shuffled = gt;
    std::shuffle(gt_shuffled.begin(), gt_shuffled.end(), rng);
    std::vector<EntityInstance> pred_shuffled = pred;
    std::shuffle(pred_shuffled.begin(), pred_shuffled.end(), rng);
    MatchResult shuffled = match_instances(gt_shuffled, pred_shuffled,
                                           EvalConfig{}, lexicon, embedder);

    CHECK(base.objective() == doctest::Approx(shuffled.objective()).epsilon(1e-12));

    // Identity pairs (by instance id) must agree whenever the optimum is
    // unique; with ties the tie-break is index-based, so compare score
    // multisets instead.
    std::vector<double> base_scores, shuffled_scores;
    for (const auto& pair : base.pairs) {
      base_scores.push_back(pair.similarity + pair.iou);
    }
    for (const auto& pair : shuffled.pairs) {
      shuffled_scores.push_back(pair.similarity + pair.iou);
    }
    std::sort(base_scores.begin(), base_scores.end());
    std::sort(shuffled_scores.begin(), shuffled_scores.end());
    REQUIRE(base_scores.size() == shuffled_scores.size());
    for (std::size_t i = 0; i < base_scores.size(); ++i) {
      CHECK(base_scores[i] == doctest::Approx(shuffled_scores[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("duplicate gt instances match deterministically by lowest index") {
  WordAxisEmbedder embedder;
  std::vector<EntityInstance> gt = {{1, "dog", {0, 0, 100, 100}},
                                    {2, "dog", {0, 0, 100, 100}}};
  std::vector<EntityInstance> pred = {{1, "dog", {0, 0, 100, 100}}};
  MatchResult match =
      match_instances(gt, pred, EvalConfig{}, fixture_lexicon(), embedder);
  REQUIRE(match.pairs.size() == 1);
  CHECK(match.pairs[0].gt_index == 0);
  CHECK(match.unmatched_gt == std::vector<int>{1});
}
