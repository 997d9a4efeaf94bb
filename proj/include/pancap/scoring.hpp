#pragma once

// Per-dimension precision/recall/F1 and the weighted overall score, plus the
// full caption-pair evaluation: extraction, matching, QA in both directions,
// report assembly.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pancap/core.hpp"
#include "pancap/matching.hpp"
#include "pancap/providers.hpp"
#include "pancap/qa.hpp"

namespace pancap {

// Percent scores. Both totals zero is vacuous perfection (100); a zero
// denominator on one side only zeroes that side. Throws CountInconsistency
// when tp exceeds either total.
DimensionScore prf(int true_positives, int pred_total, int gt_total);

struct TagLocScores {
  DimensionScore tag;
  DimensionScore loc;
};

// tp = consistent pair count (tag_consistent for tag, loc_consistent for
// localization), denominators are the full instance counts on each side.
TagLocScores tag_and_loc_scores(const MatchResult& match, int gt_total,
                                int pred_total);

// s_t + s_l + s_a + s_r + lambda_g * s_g over F1 percentages.
double overall_score(double tag_f1, double loc_f1, double att_f1, double rel_f1,
                     double glo_f1, double lambda_g);

// Everything evaluate_pair needs, shareable across threads.
struct Providers {
  std::shared_ptr<ExtractionProvider> extractor;
  std::shared_ptr<JudgeProvider> judge;
  std::shared_ptr<QuestionNegator> negator;
  std::shared_ptr<EmbeddingProvider> embedder;
  SynonymLexicon lexicon;
};

// Oracle extractor/judge, template negator, hashed bag-of-words embedder.
// Fully offline and deterministic.
Providers make_mock_providers(SynonymLexicon lexicon = {});

// Full evaluation detail behind a report, for dumps and audits.
struct PairEvaluation {
  PancapReport report;
  SemanticContent pred_content;
  SemanticContent ref_content;
  MatchResult match;
  std::vector<Verdict> pred_verdicts;  // precision side, judged against ref
  std::vector<Verdict> ref_verdicts;   // recall side, judged against pred
  std::vector<SemanticItem> dropped_pred;
  std::vector<SemanticItem> dropped_ref;
};

// Evaluates one prediction against one reference. `ref_content` skips
// reference extraction when the caller already has it (batch runs cache it);
// the reference text is still what judges read. Deterministic given
// deterministic providers.
PairEvaluation evaluate_pair_detailed(
    const std::string& pred_caption, const std::string& ref_caption,
    const std::optional<SemanticContent>& ref_content, const EvalConfig& cfg,
    const Providers& providers);

PancapReport evaluate_pair(const std::string& pred_caption,
                           const std::string& ref_caption, const EvalConfig& cfg,
                           const Providers& providers);

}  // namespace pancap
