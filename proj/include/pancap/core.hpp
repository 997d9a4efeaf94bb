#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pancap/errors.hpp"

namespace pancap {

// Insertion-ordered JSON keeps serialized reports byte-stable across runs.
using Json = nlohmann::ordered_json;

// All coordinates live in the normalized integer grid [0, 1000). Callers with
// pixel boxes normalize before entering the toolkit.
inline constexpr int kCoordLimit = 1000;

struct BoundingBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// strict: reject anything outside 0 <= x1 < x2 < 1000 (same for y).
// lenient: clamp into range, swap inverted corners, then fail only if the
// repaired box still has zero area. Idempotent in both modes.
BoundingBox validate_box(const BoundingBox& box, bool strict);

long box_area(const BoundingBox& box);

// One entity instance: caption-local id, free-form semantic tag, box.
struct EntityInstance {
  int id = 0;
  std::string tag;
  BoundingBox box;

  friend bool operator==(const EntityInstance&, const EntityInstance&) = default;
};

// Dimension of a non-instance semantic item. Tag/location live on the
// instances themselves.
enum class ItemDim { attribute, relation, global_state };

const char* item_dim_name(ItemDim dim);
ItemDim item_dim_from_name(const std::string& name);

struct SemanticItem {
  ItemDim dim = ItemDim::attribute;
  std::optional<int> subject;  // absent only for global items
  std::optional<int> object;   // present only for relations
  std::string text;

  friend bool operator==(const SemanticItem&, const SemanticItem&) = default;
};

// Everything extracted from one caption. validate() enforces referential
// integrity and the per-item shape invariants.
struct SemanticContent {
  std::vector<EntityInstance> instances;
  std::vector<SemanticItem> items;

  void validate() const;
  const EntityInstance* find_instance(int id) const;

  friend bool operator==(const SemanticContent&, const SemanticContent&) = default;
};

struct PairMatch {
  int gt_index = -1;
  int pred_index = -1;
  double similarity = 0.0;  // Eq-A1 total for the pair's tags
  double iou = 0.0;
  bool tag_consistent = false;
  bool loc_consistent = false;  // implies tag_consistent
};

// One-to-one assignment between a ground-truth and a predicted instance set.
// Exactly min(n, m) pairs; each index appears at most once.
struct MatchResult {
  std::vector<PairMatch> pairs;
  std::vector<int> unmatched_gt;
  std::vector<int> unmatched_pred;

  // Sum of (similarity + iou) over pairs, accumulated in ascending score
  // order so tied assignments report bit-identical objectives.
  double objective() const;
};

// Percentages in [0, 100].
struct DimensionScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const DimensionScore&, const DimensionScore&) = default;
};

struct PancapReport {
  DimensionScore tag;
  DimensionScore loc;
  DimensionScore att;
  DimensionScore rel;
  DimensionScore glo;
  double overall = 0.0;  // tag + loc + att + rel + lambda_g * glo, range [0, 410] at lambda_g = 0.1

  friend bool operator==(const PancapReport&, const PancapReport&) = default;
};

struct EvalConfig {
  double mu = 10.0;        // tag-priority weight in the similarity score
  double delta_t = 0.5;    // semantic-consistency threshold on the similarity total
  double delta_l = 0.5;    // location-consistency IoU threshold
  double lambda_g = 0.1;   // global-state weight in the overall score
  double merge_iou = 0.5;  // region-dedup threshold (engine merge, chain aggregation)
  double consistency_drop = 0.5;  // keep captions with normalized non-location score >= this
  bool strict_parse = false;

  void validate() const;
};

// Canonical JSON interchange schema.
//   BoundingBox      -> [x1, y1, x2, y2]
//   EntityInstance   -> {"id": int, "tag": str, "box": [..]}
//   SemanticItem     -> {"dim": "attribute|relation|global", "subject": int|null,
//                        "object": int|null, "text": str}
Json to_json(const BoundingBox& box);
Json to_json(const EntityInstance& instance);
Json to_json(const SemanticItem& item);
Json to_json(const SemanticContent& content);
Json to_json(const PairMatch& pair);
Json to_json(const MatchResult& match);
Json to_json(const DimensionScore& score);
Json to_json(const PancapReport& report);
Json to_json(const EvalConfig& config);

BoundingBox box_from_json(const Json& j);
EntityInstance instance_from_json(const Json& j);
SemanticItem item_from_json(const Json& j);
SemanticContent content_from_json(const Json& j);
DimensionScore dimension_score_from_json(const Json& j);
PancapReport report_from_json(const Json& j);
EvalConfig eval_config_from_json(const Json& j);

}  // namespace pancap
