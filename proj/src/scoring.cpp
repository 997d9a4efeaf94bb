#include "pancap/scoring.hpp"

#include <algorithm>

#include "pancap/errors.hpp"
#include "pancap/mocks.hpp"

namespace pancap {

DimensionScore prf(int true_positives, int pred_total, int gt_total) {
  if (true_positives < 0 || pred_total < 0 || gt_total < 0) {
    throw PancapError(Errc::count_inconsistency, "negative count");
  }
  if (true_positives > std::min(pred_total, gt_total)) {
    throw PancapError(Errc::count_inconsistency,
                      "tp " + std::to_string(true_positives) + " exceeds min(" +
                          std::to_string(pred_total) + ", " +
                          std::to_string(gt_total) + ")");
  }
  DimensionScore score;
  if (pred_total == 0 && gt_total == 0) {
    score.precision = score.recall = score.f1 = 100.0;
    return score;
  }
  score.precision =
      pred_total == 0 ? 0.0 : 100.0 * true_positives / pred_total;
  score.recall = gt_total == 0 ? 0.0 : 100.0 * true_positives / gt_total;
  double sum = score.precision + score.recall;
  score.f1 = sum == 0.0 ? 0.0 : 2.0 * score.precision * score.recall / sum;
  return score;
}

TagLocScores tag_and_loc_scores(const MatchResult& match, int gt_total,
                                int pred_total) {
  int tag_tp = 0;
  int loc_tp = 0;
  for (const PairMatch& pair : match.pairs) {
    if (pair.tag_consistent) ++tag_tp;
    if (pair.loc_consistent) ++loc_tp;
  }
  return {prf(tag_tp, pred_total, gt_total), prf(loc_tp, pred_total, gt_total)};
}

double overall_score(double tag_f1, double loc_f1, double att_f1, double rel_f1,
                     double glo_f1, double lambda_g) {
  for (double f1 : {tag_f1, loc_f1, att_f1, rel_f1, glo_f1}) {
    if (f1 < -1e-6 || f1 > 100.0 + 1e-6) {
      throw PancapError(Errc::out_of_range,
                        "F1 " + std::to_string(f1) + " outside [0, 100]");
    }
  }
  return tag_f1 + loc_f1 + att_f1 + rel_f1 + lambda_g * glo_f1;
}

Providers make_mock_providers(SynonymLexicon lexicon) {
  Providers providers;
  providers.extractor = std::make_shared<OracleExtractionProvider>();
  providers.judge = std::make_shared<OracleJudge>();
  providers.negator = std::make_shared<MockNegator>();
  providers.embedder = std::make_shared<HashedBowEmbedder>();
  providers.lexicon = std::move(lexicon);
  return providers;
}

PairEvaluation evaluate_pair_detailed(
    const std::string& pred_caption, const std::string& ref_caption,
    const std::optional<SemanticContent>& ref_content, const EvalConfig& cfg,
    const Providers& providers) {
  cfg.validate();

  PairEvaluation eval;
  try {
    eval.pred_content = providers.extractor->extract(pred_caption);
    eval.ref_content = ref_content.has_value()
                           ? *ref_content
                           : providers.extractor->extract(ref_caption);
  } catch (const PancapError& err) {
    if (err.code() == Errc::extraction_failed) throw;
    throw PancapError(Errc::extraction_failed, err.what());
  }

  eval.match = match_instances(eval.ref_content.instances,
                               eval.pred_content.instances, cfg,
                               providers.lexicon, *providers.embedder);

  TagLocScores tag_loc = tag_and_loc_scores(
      eval.match, static_cast<int>(eval.ref_content.instances.size()),
      static_cast<int>(eval.pred_content.instances.size()));

  // Precision: pred items asked against the reference text. Recall: ref
  // items asked against the prediction text.
  RemapResult pred_remap = remap_instance_ids(
      eval.pred_content.items, eval.pred_content.instances,
      eval.ref_content.instances, eval.match, RemapDirection::pred_to_ref);
  RemapResult ref_remap = remap_instance_ids(
      eval.ref_content.items, eval.ref_content.instances,
      eval.pred_content.instances, eval.match, RemapDirection::ref_to_pred);

  eval.pred_verdicts = judge_questions(
      generate_question_pairs(pred_remap.mapped, *providers.negator),
      ref_caption, *providers.judge);
  eval.ref_verdicts = judge_questions(
      generate_question_pairs(ref_remap.mapped, *providers.negator),
      pred_caption, *providers.judge);
  eval.dropped_pred = std::move(pred_remap.dropped);
  eval.dropped_ref = std::move(ref_remap.dropped);

  QaScores qa = qa_scores(eval.pred_verdicts, eval.ref_verdicts,
                          eval.dropped_pred, eval.dropped_ref);

  eval.report.tag = tag_loc.tag;
  eval.report.loc = tag_loc.loc;
  eval.report.att = qa.att;
  eval.report.rel = qa.rel;
  eval.report.glo = qa.glo;
  eval.report.overall =
      overall_score(eval.report.tag.f1, eval.report.loc.f1, eval.report.att.f1,
                    eval.report.rel.f1, eval.report.glo.f1, cfg.lambda_g);
  return eval;
}

PancapReport evaluate_pair(const std::string& pred_caption,
                           const std::string& ref_caption, const EvalConfig& cfg,
                           const Providers& providers) {
  return evaluate_pair_detailed(pred_caption, ref_caption, std::nullopt, cfg,
                                providers)
      .report;
}

}  // namespace pancap
