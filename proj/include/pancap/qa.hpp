#pragma once

// Instance-aware question answering. Attribute, relation and global items
// from one caption are remapped into the other caption's ID space via the
// instance match, turned into paired yes/no questions, and judged against
// the other caption's text. Precision counts pred-derived items, recall
// counts ref-derived items; items about unmatched instances are dropped and
// charged to their direction's denominator.

#include <string>
#include <vector>

#include "pancap/core.hpp"
#include "pancap/providers.hpp"

namespace pancap {

enum class RemapDirection { pred_to_ref, ref_to_pred };

struct RemapResult {
  std::vector<SemanticItem> mapped;   // ids rewritten into the target space
  std::vector<SemanticItem> dropped;  // subject or endpoint unmatched
};

// Rewrites item subject/object ids through the matched pairs. `match` is the
// result of match_instances(ref, pred); direction picks which side the items
// come from. Every matched pair remaps, tag-consistent or not.
RemapResult remap_instance_ids(const std::vector<SemanticItem>& items,
                               const std::vector<EntityInstance>& source_instances,
                               const std::vector<EntityInstance>& target_instances,
                               const MatchResult& match, RemapDirection direction);

struct QuestionPair {
  std::size_t item_ref = 0;  // index into the mapped item list
  SemanticItem item;         // remapped item behind the questions
  std::string yes_q;
  std::string no_q;
  bool generation_failed = false;  // no-question generation failed; item scores 0
};

// Yes-question template: attributes ask "Is ID k {text}?" with one leading
// copula stripped, relations "Is it true that ID j {text} ID k?", globals
// "Is it true that {text}?".
std::string render_yes_question(const SemanticItem& item);

// One pair per item, input order. Generator failures flag the pair and the
// run continues.
std::vector<QuestionPair> generate_question_pairs(
    const std::vector<SemanticItem>& items, QuestionNegator& negator);

struct Verdict {
  std::size_t item_ref = 0;
  SemanticItem item;
  std::string yes_q;
  std::string no_q;
  JudgeAnswer yes_answer = JudgeAnswer::abstain;
  JudgeAnswer no_answer = JudgeAnswer::abstain;
  bool correct = false;  // yes_answer == yes and no_answer == no
};

// Asks both questions of every pair against the judging caption. Judge
// failures abstain, generation failures skip the judge entirely; both make
// the verdict incorrect. Workers > 1 issues judge calls concurrently;
// verdict order always follows pair order.
std::vector<Verdict> judge_questions(const std::vector<QuestionPair>& pairs,
                                     const std::string& judging_caption,
                                     JudgeProvider& judge, int workers = 1);

// Attribute / relation / global scores. Precision: correct fraction of
// pred-derived verdicts with dropped pred items in the denominator; recall
// mirrors it on the ref side; F1 harmonic. Both sides empty scores 100.
struct QaScores {
  DimensionScore att;
  DimensionScore rel;
  DimensionScore glo;
};

QaScores qa_scores(const std::vector<Verdict>& pred_verdicts,
                   const std::vector<Verdict>& ref_verdicts,
                   const std::vector<SemanticItem>& dropped_pred,
                   const std::vector<SemanticItem>& dropped_ref);

const char* judge_answer_name(JudgeAnswer answer);

// One audit line: {"item","dimension","yes_q","no_q","yes_answer",
// "no_answer","correct"}.
Json verdict_to_json(const Verdict& verdict);

}  // namespace pancap
