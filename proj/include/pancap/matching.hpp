#pragma once

// Tag similarity, box IoU, and the optimal one-to-one assignment between
// ground-truth and predicted instance sets.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pancap/core.hpp"
#include "pancap/providers.hpp"

namespace pancap {

double iou(const BoundingBox& a, const BoundingBox& b);

// Lowercase lemma -> lowercase synonym set, symmetric after loading.
class SynonymLexicon {
 public:
  SynonymLexicon() = default;

  void add(const std::string& a, const std::string& b);
  bool synonyms(const std::string& a, const std::string& b) const;
  std::size_t size() const { return entries_.size(); }

  static SynonymLexicon from_json(const Json& doc);
  static SynonymLexicon load(const std::filesystem::path& file);
  Json to_json() const;

 private:
  std::map<std::string, std::set<std::string>> entries_;
};

struct SimilarityComponents {
  double s_eq = 0.0;  // {0,1} exact-word equality
  double s_sy = 0.0;  // {0,1} synonym-set overlap of head nouns
  double cos = 0.0;   // embedding cosine clamped to [0,1]
  double total = 0.0; // s_eq*mu^2 + s_sy*mu + cos
};

// Combines precomputed cosine with the lexical channels.
SimilarityComponents combine_similarity(const std::string& t1,
                                        const std::string& t2,
                                        const SynonymLexicon& lexicon,
                                        double cosine, double mu);

SimilarityComponents tag_similarity(const std::string& t1, const std::string& t2,
                                    const SynonymLexicon& lexicon,
                                    EmbeddingProvider& embedder, double mu);

// Maximizes sum(score[i][j]) over one-to-one row->column assignments; rows
// and columns may stay unmatched (equivalent to dummy pairs of score 0).
// Scores must be non-negative. Writes row_to_col (-1 = unmatched) in the
// canonical form: scanning rows ascending, each row takes the lowest column
// consistent with a maximum-total completion. Returns the maximum total.
double solve_assignment(const std::vector<std::vector<double>>& score,
                        std::vector<int>& row_to_col);

MatchResult match_instances(const std::vector<EntityInstance>& gt,
                            const std::vector<EntityInstance>& pred,
                            const EvalConfig& cfg, const SynonymLexicon& lexicon,
                            EmbeddingProvider& embedder);

}  // namespace pancap
