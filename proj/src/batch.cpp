#include "pancap/batch.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "pancap/errors.hpp"
#include "pancap/prompts.hpp"
#include "pancap/qa.hpp"

namespace pancap {

namespace {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PancapError(Errc::io_error, "cannot read " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Calls fn(line_json, line_number) for every non-blank line.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) {
    throw PancapError(Errc::io_error, "cannot read " + path.string());
  }
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json doc = Json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw PancapError(Errc::parse_error, path.string() + ":" +
                                               std::to_string(line_number) +
                                               ": not a JSON object");
    }
    fn(doc, line_number);
  }
}

std::string require_id(const Json& doc, const std::filesystem::path& path,
                       int line_number) {
  if (!doc.contains("id") || !doc["id"].is_string() ||
      doc["id"].get<std::string>().empty()) {
    throw PancapError(Errc::parse_error,
                      path.string() + ":" + std::to_string(line_number) +
                          ": missing string field \"id\"");
  }
  return doc["id"].get<std::string>();
}

// Inline field, or its "<field>_file" sibling read from disk.
std::string caption_field(const Json& doc, const std::string& field,
                          const std::filesystem::path& input_path,
                          int line_number) {
  if (doc.contains(field)) {
    if (!doc[field].is_string()) {
      throw PancapError(Errc::parse_error,
                        input_path.string() + ":" + std::to_string(line_number) +
                            ": field \"" + field + "\" is not a string");
    }
    return doc[field].get<std::string>();
  }
  const std::string file_field = field + "_file";
  if (doc.contains(file_field) && doc[file_field].is_string()) {
    std::filesystem::path ref = doc[file_field].get<std::string>();
    if (ref.is_relative()) ref = input_path.parent_path() / ref;
    return read_text_file(ref);
  }
  throw PancapError(Errc::parse_error,
                    input_path.string() + ":" + std::to_string(line_number) +
                        ": needs \"" + field + "\" or \"" + file_field + "\"");
}

DimensionScore qa_counts_score(const DirectionCounts& pred,
                               const DirectionCounts& ref) {
  if (pred.total == 0 && ref.total == 0) return {100.0, 100.0, 100.0};
  DimensionScore score;
  score.precision =
      pred.total == 0 ? 0.0 : 100.0 * double(pred.correct) / double(pred.total);
  score.recall =
      ref.total == 0 ? 0.0 : 100.0 * double(ref.correct) / double(ref.total);
  score.f1 = score.precision + score.recall == 0.0
                 ? 0.0
                 : 2.0 * score.precision * score.recall /
                       (score.precision + score.recall);
  return score;
}

void accumulate_qa(DirectionCounts& att, DirectionCounts& rel,
                   DirectionCounts& glo, const std::vector<Verdict>& verdicts,
                   const std::vector<SemanticItem>& dropped) {
  auto bucket = [&](ItemDim dim) -> DirectionCounts& {
    switch (dim) {
      case ItemDim::attribute: return att;
      case ItemDim::relation: return rel;
      default: return glo;
    }
  };
  for (const auto& verdict : verdicts) {
    DirectionCounts& counts = bucket(verdict.item.dim);
    ++counts.total;
    if (verdict.correct) ++counts.correct;
  }
  for (const auto& item : dropped) ++bucket(item.dim).total;
}

Json pooled_json(const PooledCounts& pooled) {
  auto match_dim = [&](long tp) {
    DimensionScore score =
        prf(int(tp), int(pooled.pred_instances), int(pooled.gt_instances));
    return Json{{"tp", tp},
                {"pred_total", pooled.pred_instances},
                {"gt_total", pooled.gt_instances},
                {"precision", score.precision},
                {"recall", score.recall},
                {"f1", score.f1}};
  };
  auto qa_dim = [](const DirectionCounts& pred, const DirectionCounts& ref) {
    DimensionScore score = qa_counts_score(pred, ref);
    return Json{{"pred_correct", pred.correct}, {"pred_total", pred.total},
                {"ref_correct", ref.correct},   {"ref_total", ref.total},
                {"precision", score.precision}, {"recall", score.recall},
                {"f1", score.f1}};
  };
  return Json{{"tag", match_dim(pooled.tag_tp)},
              {"loc", match_dim(pooled.loc_tp)},
              {"att", qa_dim(pooled.att_pred, pooled.att_ref)},
              {"rel", qa_dim(pooled.rel_pred, pooled.rel_ref)},
              {"glo", qa_dim(pooled.glo_pred, pooled.glo_ref)}};
}

}  // namespace

std::vector<BatchItem> load_batch_input(const std::filesystem::path& path) {
  std::vector<BatchItem> items;
  std::set<std::string> seen;
  for_each_jsonl(path, [&](const Json& doc, int line_number) {
    BatchItem item;
    item.id = require_id(doc, path, line_number);
    if (!seen.insert(item.id).second) {
      throw PancapError(Errc::parse_error,
                        path.string() + ":" + std::to_string(line_number) +
                            ": duplicate id \"" + item.id + "\"");
    }
    item.prediction = caption_field(doc, "prediction", path, line_number);
    item.reference = caption_field(doc, "reference", path, line_number);
    items.push_back(std::move(item));
  });
  return items;
}

namespace {

// {"id","caption"} lines; "prediction"/"reference" accepted as the caption
// key so pred.jsonl and ref.jsonl column names stay self-describing.
std::vector<std::pair<std::string, std::string>> load_caption_file(
    const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::set<std::string> seen;
  for_each_jsonl(path, [&](const Json& doc, int line_number) {
    std::string id = require_id(doc, path, line_number);
    if (!seen.insert(id).second) {
      throw PancapError(Errc::parse_error,
                        path.string() + ":" + std::to_string(line_number) +
                            ": duplicate id \"" + id + "\"");
    }
    std::string caption;
    bool found = false;
    for (const char* key : {"caption", "prediction", "reference"}) {
      if (doc.contains(key) && doc[key].is_string()) {
        caption = doc[key].get<std::string>();
        found = true;
        break;
      }
    }
    if (!found) {
      throw PancapError(Errc::parse_error,
                        path.string() + ":" + std::to_string(line_number) +
                            ": needs a \"caption\" field");
    }
    rows.emplace_back(std::move(id), std::move(caption));
  });
  return rows;
}

}  // namespace

std::vector<BatchItem> join_caption_files(
    const std::filesystem::path& pred_path,
    const std::filesystem::path& ref_path) {
  auto preds = load_caption_file(pred_path);
  auto refs = load_caption_file(ref_path);
  std::unordered_map<std::string, const std::string*> by_id;
  for (const auto& [id, caption] : refs) by_id.emplace(id, &caption);

  std::vector<BatchItem> items;
  items.reserve(preds.size());
  for (auto& [id, caption] : preds) {
    BatchItem item;
    item.id = id;
    item.prediction = std::move(caption);
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      item.reference_missing = true;
    } else {
      item.reference = *it->second;
    }
    items.push_back(std::move(item));
  }
  return items;
}

BatchResult run_batch(const std::vector<BatchItem>& items, const EvalConfig& cfg,
                      const Providers& providers, int workers) {
  if (workers < 1) {
    throw PancapError(Errc::config_error, "workers must be >= 1");
  }
  BatchResult result;
  result.outcomes.resize(items.size());

  std::mutex cache_mutex;
  std::unordered_map<std::string, SemanticContent> ref_cache;
  auto cached_ref = [&](const std::string& reference)
      -> std::optional<SemanticContent> {
    {
      std::lock_guard<std::mutex> lock(cache_mutex);
      auto it = ref_cache.find(reference);
      if (it != ref_cache.end()) return it->second;
    }
    SemanticContent content;
    try {
      content = providers.extractor->extract(reference);
    } catch (const PancapError& err) {
      if (err.code() == Errc::extraction_failed) throw;
      throw PancapError(Errc::extraction_failed, err.what());
    }
    std::lock_guard<std::mutex> lock(cache_mutex);
    return ref_cache.emplace(reference, std::move(content)).first->second;
  };

  auto run_one = [&](std::size_t index) {
    const BatchItem& item = items[index];
    PairOutcome& outcome = result.outcomes[index];
    outcome.id = item.id;
    try {
      if (item.reference_missing) {
        throw PancapError(Errc::dangling_reference,
                          "no reference caption for id \"" + item.id + "\"");
      }
      outcome.eval = evaluate_pair_detailed(
          item.prediction, item.reference, cached_ref(item.reference), cfg,
          providers);
    } catch (const PancapError& error) {
      outcome.failed = true;
      outcome.error_code = errc_name(error.code());
      outcome.error_message = error.what();
    } catch (const std::exception& error) {
      outcome.failed = true;
      outcome.error_code = "internal";
      outcome.error_message = error.what();
    }
  };

  std::size_t thread_count = std::min<std::size_t>(
      static_cast<std::size_t>(workers), items.size());
  if (thread_count <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < items.size();
             i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
    for (auto& worker : pool) worker.join();
  }

  for (const PairOutcome& outcome : result.outcomes) {
    if (outcome.failed) {
      ++result.failed;
      continue;
    }
    ++result.evaluated;
    const PairEvaluation& eval = outcome.eval;
    const PancapReport& report = eval.report;
    auto add = [](DimensionScore& into, const DimensionScore& score) {
      into.precision += score.precision;
      into.recall += score.recall;
      into.f1 += score.f1;
    };
    add(result.mean.tag, report.tag);
    add(result.mean.loc, report.loc);
    add(result.mean.att, report.att);
    add(result.mean.rel, report.rel);
    add(result.mean.glo, report.glo);
    result.mean.overall += report.overall;

    for (const PairMatch& pair : eval.match.pairs) {
      if (pair.tag_consistent) ++result.pooled.tag_tp;
      if (pair.loc_consistent) ++result.pooled.loc_tp;
    }
    result.pooled.pred_instances += long(eval.pred_content.instances.size());
    result.pooled.gt_instances += long(eval.ref_content.instances.size());
    accumulate_qa(result.pooled.att_pred, result.pooled.rel_pred,
                  result.pooled.glo_pred, eval.pred_verdicts,
                  eval.dropped_pred);
    accumulate_qa(result.pooled.att_ref, result.pooled.rel_ref,
                  result.pooled.glo_ref, eval.ref_verdicts, eval.dropped_ref);
  }
  if (result.evaluated > 0) {
    const double n = double(result.evaluated);
    for (DimensionScore* dim : {&result.mean.tag, &result.mean.loc,
                                &result.mean.att, &result.mean.rel,
                                &result.mean.glo}) {
      dim->precision /= n;
      dim->recall /= n;
      dim->f1 /= n;
    }
    result.mean.overall /= n;
  }
  return result;
}

Json batch_report_json(const BatchResult& result, const EvalConfig& cfg) {
  Json pairs = Json::array();
  Json failures = Json::array();
  for (const PairOutcome& outcome : result.outcomes) {
    if (outcome.failed) {
      Json error{{"code", outcome.error_code},
                 {"message", outcome.error_message}};
      pairs.push_back(Json{{"id", outcome.id}, {"error", error}});
      failures.push_back(Json{{"id", outcome.id}, {"code", outcome.error_code},
                              {"message", outcome.error_message}});
    } else {
      pairs.push_back(
          Json{{"id", outcome.id}, {"scores", to_json(outcome.eval.report)}});
    }
  }
  return Json{{"schema_version", kReportSchemaVersion},
              {"config", to_json(cfg)},
              {"prompts", PromptLibrary::builtin().versions()},
              {"summary",
               Json{{"pairs", result.evaluated + result.failed},
                    {"evaluated", result.evaluated},
                    {"failed", result.failed},
                    {"mean", to_json(result.mean)},
                    {"pooled", pooled_json(result.pooled)}}},
              {"pairs", pairs},
              {"failures", failures}};
}

int report_schema_version(const Json& report) {
  if (!report.is_object() || !report.contains("schema_version") ||
      !report["schema_version"].is_number_integer()) {
    throw PancapError(Errc::parse_error, "report has no schema_version");
  }
  return report["schema_version"].get<int>();
}

void write_report(const std::filesystem::path& path, const Json& report) {
  if (std::filesystem::exists(path)) {
    Json existing = Json::parse(read_text_file(path), nullptr, false);
    if (!existing.is_discarded() && existing.is_object() &&
        existing.contains("schema_version") &&
        existing["schema_version"].is_number_integer() &&
        existing["schema_version"].get<int>() > kReportSchemaVersion) {
      throw PancapError(
          Errc::config_error,
          path.string() + " holds a schema " +
              existing["schema_version"].dump() +
              " report; this build writes schema " +
              std::to_string(kReportSchemaVersion) + " and will not replace it");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw PancapError(Errc::io_error, "cannot write " + path.string());
  }
  out << report.dump(2) << "\n";
}

void write_qa_dump(const std::filesystem::path& path,
                   const BatchResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw PancapError(Errc::io_error, "cannot write " + path.string());
  }
  for (const PairOutcome& outcome : result.outcomes) {
    if (outcome.failed) continue;
    auto emit = [&](const char* side, const std::vector<Verdict>& verdicts) {
      for (const Verdict& verdict : verdicts) {
        Json line{{"pair", outcome.id}, {"side", side}};
        line.update(verdict_to_json(verdict));
        out << line.dump() << "\n";
      }
    };
    emit("pred", outcome.eval.pred_verdicts);
    emit("ref", outcome.eval.ref_verdicts);
  }
}

}  // namespace pancap
