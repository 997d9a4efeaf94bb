#include "pancap/core.hpp"

#include <algorithm>
#include <unordered_set>

namespace pancap {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::degenerate_box: return "DegenerateBox";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::malformed_box: return "MalformedBox";
    case Errc::parse_error: return "ParseError";
    case Errc::empty_tag: return "EmptyTag";
    case Errc::dangling_reference: return "DanglingReference";
    case Errc::duplicate_instance_id: return "DuplicateInstanceId";
    case Errc::count_inconsistency: return "CountInconsistency";
    case Errc::embedding_unavailable: return "EmbeddingUnavailable";
    case Errc::timeout: return "Timeout";
    case Errc::auth_failure: return "AuthFailure";
    case Errc::rate_limited: return "RateLimited";
    case Errc::malformed_response: return "MalformedResponse";
    case Errc::extraction_failed: return "ExtractionFailed";
    case Errc::judge_failed: return "JudgeFailed";
    case Errc::generation_failed: return "GenerationFailed";
    case Errc::stage_parse_failure: return "StageParseFailure";
    case Errc::untagged_region: return "UntaggedRegion";
    case Errc::degenerate_variance: return "DegenerateVariance";
    case Errc::all_tied: return "AllTied";
    case Errc::no_instances: return "NoInstances";
    case Errc::unfilled_placeholder: return "UnfilledPlaceholder";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

namespace {

std::string box_text(const BoundingBox& b) {
  return "(" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "," +
         std::to_string(b.x2) + "," + std::to_string(b.y2) + ")";
}

int clamp_coord(int v) { return std::clamp(v, 0, kCoordLimit - 1); }

}  // namespace

BoundingBox validate_box(const BoundingBox& box, bool strict) {
  if (strict) {
    const bool in_range = box.x1 >= 0 && box.y1 >= 0 && box.x2 < kCoordLimit &&
                          box.y2 < kCoordLimit && box.x1 < kCoordLimit &&
                          box.y1 < kCoordLimit && box.x2 >= 0 && box.y2 >= 0;
    if (!in_range) {
      throw PancapError(Errc::out_of_range, "box " + box_text(box) +
                                                " leaves [0, 1000) in strict mode");
    }
    if (box.x1 >= box.x2 || box.y1 >= box.y2) {
      throw PancapError(Errc::degenerate_box,
                        "box " + box_text(box) + " has no positive area");
    }
    return box;
  }

  BoundingBox repaired{clamp_coord(box.x1), clamp_coord(box.y1),
                       clamp_coord(box.x2), clamp_coord(box.y2)};
  if (repaired.x1 > repaired.x2) std::swap(repaired.x1, repaired.x2);
  if (repaired.y1 > repaired.y2) std::swap(repaired.y1, repaired.y2);
  if (repaired.x1 == repaired.x2 || repaired.y1 == repaired.y2) {
    throw PancapError(Errc::degenerate_box,
                      "box " + box_text(box) + " has zero area after repair");
  }
  return repaired;
}

long box_area(const BoundingBox& box) {
  return static_cast<long>(box.x2 - box.x1) * static_cast<long>(box.y2 - box.y1);
}

const char* item_dim_name(ItemDim dim) {
  switch (dim) {
    case ItemDim::attribute: return "attribute";
    case ItemDim::relation: return "relation";
    case ItemDim::global_state: return "global";
  }
  return "attribute";
}

ItemDim item_dim_from_name(const std::string& name) {
  if (name == "attribute") return ItemDim::attribute;
  if (name == "relation") return ItemDim::relation;
  if (name == "global") return ItemDim::global_state;
  throw PancapError(Errc::parse_error, "unknown item dimension '" + name + "'");
}

void SemanticContent::validate() const {
  std::unordered_set<int> ids;
  for (const auto& instance : instances) {
    if (!ids.insert(instance.id).second) {
      throw PancapError(Errc::duplicate_instance_id,
                        "instance id " + std::to_string(instance.id) +
                            " declared more than once");
    }
    if (instance.tag.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw PancapError(Errc::empty_tag, "instance id " +
                                             std::to_string(instance.id) +
                                             " has an empty tag");
    }
  }
  for (const auto& item : items) {
    const bool is_global = item.dim == ItemDim::global_state;
    if (is_global != !item.subject.has_value()) {
      throw PancapError(Errc::parse_error,
                        "item '" + item.text +
                            "': subject must be absent exactly for global items");
    }
    if (item.object.has_value() && item.dim != ItemDim::relation) {
      throw PancapError(Errc::parse_error,
                        "item '" + item.text + "': only relations take an object");
    }
    for (const auto& ref : {item.subject, item.object}) {
      if (ref && !ids.count(*ref)) {
        throw PancapError(Errc::dangling_reference,
                          "item '" + item.text + "' references unknown id " +
                              std::to_string(*ref));
      }
    }
  }
}

const EntityInstance* SemanticContent::find_instance(int id) const {
  for (const auto& instance : instances) {
    if (instance.id == id) return &instance;
  }
  return nullptr;
}

double MatchResult::objective() const {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& pair : pairs) scores.push_back(pair.similarity + pair.iou);
  std::sort(scores.begin(), scores.end());
  double total = 0.0;
  for (double s : scores) total += s;
  return total;
}

void EvalConfig::validate() const {
  if (mu <= 0.0) {
    throw PancapError(Errc::config_error, "mu must be positive");
  }
  for (double threshold : {delta_t, delta_l, merge_iou, consistency_drop}) {
    if (threshold < 0.0 || threshold > 1.0) {
      throw PancapError(Errc::config_error, "thresholds must lie in [0, 1]");
    }
  }
  if (lambda_g < 0.0) {
    throw PancapError(Errc::config_error, "lambda_g must be non-negative");
  }
}

Json to_json(const BoundingBox& box) {
  return Json::array({box.x1, box.y1, box.x2, box.y2});
}

Json to_json(const EntityInstance& instance) {
  return Json{{"id", instance.id}, {"tag", instance.tag}, {"box", to_json(instance.box)}};
}

Json to_json(const SemanticItem& item) {
  Json j;
  j["dim"] = item_dim_name(item.dim);
  j["subject"] = item.subject ? Json(*item.subject) : Json(nullptr);
  j["object"] = item.object ? Json(*item.object) : Json(nullptr);
  j["text"] = item.text;
  return j;
}

Json to_json(const SemanticContent& content) {
  Json instances = Json::array();
  for (const auto& instance : content.instances) instances.push_back(to_json(instance));
  Json items = Json::array();
  for (const auto& item : content.items) items.push_back(to_json(item));
  return Json{{"instances", std::move(instances)}, {"items", std::move(items)}};
}

Json to_json(const PairMatch& pair) {
  return Json{{"gt_index", pair.gt_index},
              {"pred_index", pair.pred_index},
              {"similarity", pair.similarity},
              {"iou", pair.iou},
              {"tag_consistent", pair.tag_consistent},
              {"loc_consistent", pair.loc_consistent}};
}

Json to_json(const MatchResult& match) {
  Json pairs = Json::array();
  for (const auto& pair : match.pairs) pairs.push_back(to_json(pair));
  return Json{{"pairs", std::move(pairs)},
              {"unmatched_gt", match.unmatched_gt},
              {"unmatched_pred", match.unmatched_pred},
              {"objective", match.objective()}};
}

Json to_json(const DimensionScore& score) {
  return Json{{"precision", score.precision}, {"recall", score.recall}, {"f1", score.f1}};
}

Json to_json(const PancapReport& report) {
  return Json{{"tag", to_json(report.tag)},   {"loc", to_json(report.loc)},
              {"att", to_json(report.att)},   {"rel", to_json(report.rel)},
              {"glo", to_json(report.glo)},   {"overall", report.overall}};
}

Json to_json(const EvalConfig& config) {
  return Json{{"mu", config.mu},
              {"delta_t", config.delta_t},
              {"delta_l", config.delta_l},
              {"lambda_g", config.lambda_g},
              {"merge_iou", config.merge_iou},
              {"consistency_drop", config.consistency_drop},
              {"strict_parse", config.strict_parse}};
}

namespace {

[[noreturn]] void bad_schema(const std::string& what) {
  throw PancapError(Errc::parse_error, "JSON schema violation: " + what);
}

}  // namespace

BoundingBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) bad_schema("box must be [x1, y1, x2, y2]");
  for (const auto& v : j) {
    if (!v.is_number_integer()) bad_schema("box coordinates must be integers");
  }
  return BoundingBox{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

EntityInstance instance_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("id") || !j.contains("box")) {
    bad_schema("instance must carry id and box");
  }
  EntityInstance instance;
  instance.id = j.at("id").get<int>();
  instance.tag = j.value("tag", std::string{});
  instance.box = box_from_json(j.at("box"));
  return instance;
}

SemanticItem item_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("text")) {
    bad_schema("item must carry dim and text");
  }
  SemanticItem item;
  item.dim = item_dim_from_name(j.at("dim").get<std::string>());
  if (j.contains("subject") && !j.at("subject").is_null()) {
    item.subject = j.at("subject").get<int>();
  }
  if (j.contains("object") && !j.at("object").is_null()) {
    item.object = j.at("object").get<int>();
  }
  item.text = j.at("text").get<std::string>();
  return item;
}

SemanticContent content_from_json(const Json& j) {
  if (!j.is_object()) bad_schema("semantic content must be an object");
  SemanticContent content;
  for (const auto& instance : j.value("instances", Json::array())) {
    content.instances.push_back(instance_from_json(instance));
  }
  for (const auto& item : j.value("items", Json::array())) {
    content.items.push_back(item_from_json(item));
  }
  content.validate();
  return content;
}

DimensionScore dimension_score_from_json(const Json& j) {
  DimensionScore score;
  score.precision = j.at("precision").get<double>();
  score.recall = j.at("recall").get<double>();
  score.f1 = j.at("f1").get<double>();
  return score;
}

PancapReport report_from_json(const Json& j) {
  PancapReport report;
  report.tag = dimension_score_from_json(j.at("tag"));
  report.loc = dimension_score_from_json(j.at("loc"));
  report.att = dimension_score_from_json(j.at("att"));
  report.rel = dimension_score_from_json(j.at("rel"));
  report.glo = dimension_score_from_json(j.at("glo"));
  report.overall = j.at("overall").get<double>();
  return report;
}

EvalConfig eval_config_from_json(const Json& j) {
  EvalConfig config;
  config.mu = j.value("mu", config.mu);
  config.delta_t = j.value("delta_t", config.delta_t);
  config.delta_l = j.value("delta_l", config.delta_l);
  config.lambda_g = j.value("lambda_g", config.lambda_g);
  config.merge_iou = j.value("merge_iou", config.merge_iou);
  config.consistency_drop = j.value("consistency_drop", config.consistency_drop);
  config.strict_parse = j.value("strict_parse", config.strict_parse);
  config.validate();
  return config;
}

}  // namespace pancap
