#include "pancap/qa.hpp"

#include <atomic>
#include <thread>
#include <unordered_map>

#include "pancap/errors.hpp"
#include "pancap/text_util.hpp"

namespace pancap {

namespace {

// Trailing sentence punctuation would double up with the question mark.
std::string clean_claim(std::string_view text) {
  std::string_view v = trim_view(text);
  while (!v.empty() && (v.back() == '.' || v.back() == '!' || v.back() == '?')) {
    v.remove_suffix(1);
    v = trim_view(v);
  }
  return std::string(v);
}

bool is_copula(std::string_view word) {
  std::string w = to_lower(word);
  return w == "is" || w == "are" || w == "was" || w == "were";
}

// "is red" -> "red"; claims without a leading copula pass through.
std::string strip_leading_copula(const std::string& claim) {
  std::size_t space = claim.find(' ');
  std::string_view first =
      space == std::string::npos ? std::string_view(claim)
                                 : std::string_view(claim).substr(0, space);
  if (!is_copula(first)) return claim;
  if (space == std::string::npos) return claim;  // bare copula, keep as-is
  std::string rest{trim_view(std::string_view(claim).substr(space + 1))};
  return rest.empty() ? claim : rest;
}

JudgeAnswer ask(JudgeProvider& judge, const SemanticItem& item,
                const std::string& question, const std::string& caption) {
  try {
    return judge.judge(item, question, caption);
  } catch (const PancapError&) {
    return JudgeAnswer::abstain;
  }
}

struct SideCounts {
  int correct = 0;
  int total = 0;
};

DimensionScore qa_dimension_score(const SideCounts& pred, const SideCounts& ref) {
  DimensionScore score;
  if (pred.total == 0 && ref.total == 0) {
    score.precision = score.recall = score.f1 = 100.0;
    return score;
  }
  score.precision =
      pred.total == 0 ? 0.0 : 100.0 * pred.correct / pred.total;
  score.recall = ref.total == 0 ? 0.0 : 100.0 * ref.correct / ref.total;
  double sum = score.precision + score.recall;
  score.f1 = sum == 0.0 ? 0.0 : 2.0 * score.precision * score.recall / sum;
  return score;
}

}  // namespace

RemapResult remap_instance_ids(const std::vector<SemanticItem>& items,
                               const std::vector<EntityInstance>& source_instances,
                               const std::vector<EntityInstance>& target_instances,
                               const MatchResult& match,
                               RemapDirection direction) {
  std::unordered_map<int, int> id_map;
  for (const PairMatch& pair : match.pairs) {
    int src = direction == RemapDirection::pred_to_ref ? pair.pred_index
                                                       : pair.gt_index;
    int dst = direction == RemapDirection::pred_to_ref ? pair.gt_index
                                                       : pair.pred_index;
    if (src < 0 || dst < 0) continue;
    if (static_cast<std::size_t>(src) >= source_instances.size()) continue;
    if (static_cast<std::size_t>(dst) >= target_instances.size()) continue;
    id_map[source_instances[src].id] = target_instances[dst].id;
  }

  RemapResult result;
  for (const SemanticItem& item : items) {
    if (!item.subject.has_value()) {
      result.mapped.push_back(item);
      continue;
    }
    auto subject = id_map.find(*item.subject);
    if (subject == id_map.end()) {
      result.dropped.push_back(item);
      continue;
    }
    SemanticItem mapped = item;
    mapped.subject = subject->second;
    if (item.object.has_value()) {
      auto object = id_map.find(*item.object);
      if (object == id_map.end()) {
        result.dropped.push_back(item);
        continue;
      }
      mapped.object = object->second;
    }
    result.mapped.push_back(std::move(mapped));
  }
  return result;
}

std::string render_yes_question(const SemanticItem& item) {
  std::string claim = clean_claim(item.text);
  switch (item.dim) {
    case ItemDim::attribute:
      return "Is ID " + std::to_string(item.subject.value_or(0)) + " " +
             strip_leading_copula(claim) + "?";
    case ItemDim::relation:
      return "Is it true that ID " + std::to_string(item.subject.value_or(0)) +
             " " + claim + " ID " + std::to_string(item.object.value_or(0)) +
             "?";
    case ItemDim::global_state:
      return "Is it true that " + claim + "?";
  }
  return "Is it true that " + claim + "?";
}

std::vector<QuestionPair> generate_question_pairs(
    const std::vector<SemanticItem>& items, QuestionNegator& negator) {
  std::vector<QuestionPair> pairs;
  pairs.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    QuestionPair pair;
    pair.item_ref = i;
    pair.item = items[i];
    pair.yes_q = render_yes_question(items[i]);
    try {
      pair.no_q = negator.negate(items[i], pair.yes_q);
    } catch (const PancapError&) {
      pair.generation_failed = true;
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<Verdict> judge_questions(const std::vector<QuestionPair>& pairs,
                                     const std::string& judging_caption,
                                     JudgeProvider& judge, int workers) {
  std::vector<Verdict> verdicts(pairs.size());
  auto run_one = [&](std::size_t i) {
    const QuestionPair& pair = pairs[i];
    Verdict verdict;
    verdict.item_ref = pair.item_ref;
    verdict.item = pair.item;
    verdict.yes_q = pair.yes_q;
    verdict.no_q = pair.no_q;
    if (!pair.generation_failed) {
      verdict.yes_answer = ask(judge, pair.item, pair.yes_q, judging_caption);
      verdict.no_answer = ask(judge, pair.item, pair.no_q, judging_caption);
    }
    verdict.correct = verdict.yes_answer == JudgeAnswer::yes &&
                      verdict.no_answer == JudgeAnswer::no;
    verdicts[i] = std::move(verdict);
  };

  if (workers <= 1 || pairs.size() < 2) {
    for (std::size_t i = 0; i < pairs.size(); ++i) run_one(i);
    return verdicts;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::size_t count = std::min(static_cast<std::size_t>(workers), pairs.size());
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < pairs.size();
           i = next.fetch_add(1)) {
        run_one(i);
      }
    });
  }
  for (auto& thread : pool) thread.join();
  return verdicts;
}

QaScores qa_scores(const std::vector<Verdict>& pred_verdicts,
                   const std::vector<Verdict>& ref_verdicts,
                   const std::vector<SemanticItem>& dropped_pred,
                   const std::vector<SemanticItem>& dropped_ref) {
  SideCounts pred[3];
  SideCounts ref[3];
  for (const Verdict& verdict : pred_verdicts) {
    SideCounts& c = pred[static_cast<int>(verdict.item.dim)];
    ++c.total;
    if (verdict.correct) ++c.correct;
  }
  for (const SemanticItem& item : dropped_pred) {
    ++pred[static_cast<int>(item.dim)].total;
  }
  for (const Verdict& verdict : ref_verdicts) {
    SideCounts& c = ref[static_cast<int>(verdict.item.dim)];
    ++c.total;
    if (verdict.correct) ++c.correct;
  }
  for (const SemanticItem& item : dropped_ref) {
    ++ref[static_cast<int>(item.dim)].total;
  }

  QaScores scores;
  scores.att = qa_dimension_score(pred[static_cast<int>(ItemDim::attribute)],
                                  ref[static_cast<int>(ItemDim::attribute)]);
  scores.rel = qa_dimension_score(pred[static_cast<int>(ItemDim::relation)],
                                  ref[static_cast<int>(ItemDim::relation)]);
  scores.glo = qa_dimension_score(pred[static_cast<int>(ItemDim::global_state)],
                                  ref[static_cast<int>(ItemDim::global_state)]);
  return scores;
}

const char* judge_answer_name(JudgeAnswer answer) {
  switch (answer) {
    case JudgeAnswer::yes:
      return "Yes";
    case JudgeAnswer::no:
      return "No";
    case JudgeAnswer::abstain:
      return "Abstain";
  }
  return "Abstain";
}

Json verdict_to_json(const Verdict& verdict) {
  return Json{{"item", verdict.item_ref},
              {"dimension", item_dim_name(verdict.item.dim)},
              {"yes_q", verdict.yes_q},
              {"no_q", verdict.no_q},
              {"yes_answer", judge_answer_name(verdict.yes_answer)},
              {"no_answer", judge_answer_name(verdict.no_answer)},
              {"correct", verdict.correct}};
}

}  // namespace pancap
