#pragma once

// Region-merge, entity-aware prompting, and cross-model consistency
// filtering. Detectors are external: this module ingests their region files
// and orchestrates merge -> prompt -> generate -> filter per image.

#include <filesystem>
#include <string>
#include <vector>

#include "pancap/caption.hpp"
#include "pancap/core.hpp"
#include "pancap/prompts.hpp"
#include "pancap/providers.hpp"
#include "pancap/scoring.hpp"

namespace pancap {

struct RegionSet {
  std::string image;
  std::string source;  // e.g. "class-agnostic" / "class-aware"
  std::vector<EntityInstance> regions;
};

// {"image","source","regions":[{"id"?,"tag"?,"box":[x1,y1,x2,y2]}...]}.
// Missing ids become positions (1..n); boxes are repaired leniently.
RegionSet region_set_from_json(const Json& doc);
Json to_json(const RegionSet& regions);
RegionSet load_region_file(const std::filesystem::path& path);

// All of r unchanged, then those r_prime regions whose IoU stays below
// merge_iou against every region of r and every already-admitted r_prime
// region, in input order. Admitted regions are renumbered after r's ids.
RegionSet merge_regions(const RegionSet& r, const RegionSet& r_prime,
                        double merge_iou);

// Renders the regions' instance text into the template's {instance_text}.
// Any untagged region is an UntaggedRegion error; an empty set renders an
// empty entity block and warns.
std::vector<ChatMessage> build_entity_prompt(const RegionSet& regions,
                                             const PromptTemplate& tpl);

struct ConsistencyResult {
  bool keep = false;
  double nonloc_score = 0.0;  // tag + att + rel + lambda_g * glo, in [0, 310]
  PancapReport report;        // the full evaluation behind the score
};

double nonloc_overall(const PancapReport& report, double lambda_g);

// Scores cap_a against cap_b with the location dimension excluded from the
// aggregate; keep iff nonloc_score / 310 >= cfg.consistency_drop.
ConsistencyResult consistency_filter(const PanopticCaption& cap_a,
                                     const PanopticCaption& cap_b,
                                     const EvalConfig& cfg,
                                     const Providers& providers);

struct EngineRun {
  RegionSet merged;
  std::string prompt;         // rendered caption-generation prompt
  std::string caption_a;      // model A's reply, verbatim
  std::string caption_b;
  ConsistencyResult forward;  // caption_a scored against caption_b
  ConsistencyResult reverse;  // caption_b scored against caption_a
  bool kept = false;          // pair decision: the forward filter's verdict
};

// One image end to end: merge the region files, prompt both caption models,
// filter. A dropped pair drops both captions; both direction scores are
// recorded so thresholds can be re-applied offline.
EngineRun run_engine(const RegionSet& agnostic, const RegionSet& aware,
                     ChatProvider& model_a, ChatProvider& model_b,
                     const PromptLibrary& prompts, const EvalConfig& cfg,
                     const Providers& providers);

// Output manifest line: {"image","model","caption","nonloc_score","kept"}.
Json manifest_line(const std::string& image, const std::string& model,
                   const std::string& caption, double nonloc_score, bool kept);

}  // namespace pancap
