#include "pancap/engine.hpp"

#include <fstream>
#include <sstream>

#include "pancap/errors.hpp"
#include "pancap/matching.hpp"
#include "pancap/text_util.hpp"

namespace pancap {

RegionSet region_set_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("regions") ||
      !doc["regions"].is_array()) {
    throw PancapError(Errc::parse_error,
                      "region file needs a \"regions\" array");
  }
  RegionSet set;
  set.image = doc.value("image", std::string{});
  set.source = doc.value("source", std::string{});
  int position = 0;
  for (const Json& entry : doc["regions"]) {
    ++position;
    if (!entry.is_object() || !entry.contains("box")) {
      throw PancapError(Errc::parse_error,
                        "region " + std::to_string(position) + " has no box");
    }
    EntityInstance region;
    region.id = entry.value("id", position);
    region.tag = entry.value("tag", std::string{});
    region.box = validate_box(box_from_json(entry["box"]), /*strict=*/false);
    set.regions.push_back(std::move(region));
  }
  return set;
}

Json to_json(const RegionSet& set) {
  Json regions = Json::array();
  for (const EntityInstance& region : set.regions) {
    regions.push_back(to_json(region));
  }
  return Json{{"image", set.image}, {"source", set.source},
              {"regions", regions}};
}

RegionSet load_region_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw PancapError(Errc::io_error, "cannot read " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Json doc = Json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded()) {
    throw PancapError(Errc::parse_error, path.string() + ": not JSON");
  }
  return region_set_from_json(doc);
}

RegionSet merge_regions(const RegionSet& r, const RegionSet& r_prime,
                        double merge_iou) {
  RegionSet merged = r;
  merged.source = "merged";
  for (const EntityInstance& candidate : r_prime.regions) {
    double best = 0.0;
    for (const EntityInstance& kept : merged.regions) {
      best = std::max(best, iou(candidate.box, kept.box));
    }
    if (best < merge_iou) {
      EntityInstance admitted = candidate;
      admitted.id = int(merged.regions.size()) + 1;
      merged.regions.push_back(std::move(admitted));
    }
  }
  return merged;
}

std::vector<ChatMessage> build_entity_prompt(const RegionSet& regions,
                                             const PromptTemplate& tpl) {
  InstanceText text;
  for (const EntityInstance& region : regions.regions) {
    if (trim_view(region.tag).empty()) {
      throw PancapError(Errc::untagged_region,
                        "region " + std::to_string(region.id) +
                            " has no semantic tag");
    }
    text.entries.push_back(region);
  }
  if (text.entries.empty()) {
    log_warning("entity prompt rendered with no regions");
  }
  return tpl.render({{"instance_text", serialize_instance_text(text)}});
}

double nonloc_overall(const PancapReport& report, double lambda_g) {
  return report.tag.f1 + report.att.f1 + report.rel.f1 +
         lambda_g * report.glo.f1;
}

ConsistencyResult consistency_filter(const PanopticCaption& cap_a,
                                     const PanopticCaption& cap_b,
                                     const EvalConfig& cfg,
                                     const Providers& providers) {
  ConsistencyResult result;
  result.report = evaluate_pair(cap_a.raw_text, cap_b.raw_text, cfg, providers);
  result.nonloc_score = nonloc_overall(result.report, cfg.lambda_g);
  result.keep = result.nonloc_score / 310.0 >= cfg.consistency_drop;
  return result;
}

EngineRun run_engine(const RegionSet& agnostic, const RegionSet& aware,
                     ChatProvider& model_a, ChatProvider& model_b,
                     const PromptLibrary& prompts, const EvalConfig& cfg,
                     const Providers& providers) {
  cfg.validate();
  EngineRun run;
  run.merged = merge_regions(agnostic, aware, cfg.merge_iou);

  std::vector<ChatMessage> messages =
      build_entity_prompt(run.merged, prompts.get("engine_caption"));
  std::string image =
      !agnostic.image.empty() ? agnostic.image : aware.image;
  for (ChatMessage& message : messages) {
    if (message.role == "user" && !message.image) message.image = image;
  }
  for (const ChatMessage& message : messages) {
    if (!run.prompt.empty()) run.prompt += "\n";
    run.prompt += message.content;
  }

  run.caption_a = model_a.complete(messages);
  run.caption_b = model_b.complete(messages);

  PanopticCaption parsed_a = parse_caption(run.caption_a, /*strict=*/false);
  PanopticCaption parsed_b = parse_caption(run.caption_b, /*strict=*/false);
  run.forward = consistency_filter(parsed_a, parsed_b, cfg, providers);
  run.reverse = consistency_filter(parsed_b, parsed_a, cfg, providers);
  run.kept = run.forward.keep;
  return run;
}

Json manifest_line(const std::string& image, const std::string& model,
                   const std::string& caption, double nonloc_score,
                   bool kept) {
  return Json{{"image", image},
              {"model", model},
              {"caption", caption},
              {"nonloc_score", nonloc_score},
              {"kept", kept}};
}

}  // namespace pancap
