#include "pancap/chain.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>

#include "pancap/errors.hpp"
#include "pancap/matching.hpp"

namespace pancap {

namespace {

constexpr const char* kStageNames[] = {"", "localization", "tagging",
                                       "discovery", "caption"};

constexpr const char* kStage1Reminder =
    "Reply with the bounding boxes only: comma-separated markups like "
    "<box>[[x1, y1, x2, y2]]</box>, at least one box.";
constexpr const char* kStage2Reminder =
    "Reply with comma-separated entries of the form "
    "tag <box>[[x1, y1, x2, y2]]</box>, the tag immediately before its box, "
    "one entry per entity.";
constexpr const char* kStage3Reminder =
    "Reply with comma-separated entries of the form "
    "tag <box>[[x1, y1, x2, y2]]</box> for the missing entities, or None "
    "when nothing is missing.";
constexpr const char* kStage4Reminder =
    "Reply with the full description, referencing each entity inline as "
    "tag <box>[[x1, y1, x2, y2]]</box>.";

std::string joined_contents(const std::vector<ChatMessage>& messages) {
  std::string out;
  for (const auto& message : messages) {
    if (!out.empty()) out += "\n";
    out += message.content;
  }
  return out;
}

void attach_image(std::vector<ChatMessage>& messages, const std::string& image) {
  for (auto& message : messages) {
    if (message.role == "user" && !message.image) message.image = image;
  }
}

// One stage: ask, parse, on grammar failure re-prompt once with the
// reminder, then give up. Records the original rendered prompt and the
// reply that parsed.
template <typename ParseFn>
auto run_stage(ChatProvider& chat, int stage, std::vector<ChatMessage> messages,
               const char* reminder, ChainTrace& trace, ParseFn&& parse_reply)
    -> typename std::invoke_result_t<ParseFn, const std::string&>::value_type {
  StageRecord record;
  record.stage = stage;
  record.prompt = joined_contents(messages);
  const auto start = std::chrono::steady_clock::now();

  std::string reply = chat.complete(messages);
  auto artifact = parse_reply(reply);
  if (!artifact) {
    record.attempts = 2;
    messages.push_back({"assistant", reply, std::nullopt});
    messages.push_back({"user", reminder, std::nullopt});
    reply = chat.complete(messages);
    artifact = parse_reply(reply);
  }
  record.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (!artifact) {
    throw StageParseError(stage, reply,
                          std::string(kStageNames[stage]) +
                              " reply failed the stage grammar after a "
                              "format reminder");
  }
  record.raw_reply = reply;
  trace.stages.push_back(std::move(record));
  return *std::move(artifact);
}

}  // namespace

Json to_json(const ChainTrace& trace) {
  Json stages = Json::array();
  for (const StageRecord& record : trace.stages) {
    stages.push_back(Json{{"stage", record.stage},
                          {"prompt", record.prompt},
                          {"reply", record.raw_reply},
                          {"artifact", record.artifact},
                          {"attempts", record.attempts}});
  }
  return Json{{"image", trace.image},
              {"caption", trace.caption},
              {"stages", stages}};
}

ChainResult run_chain(const std::string& image, ChatProvider& chat,
                      const PromptLibrary& prompts, const EvalConfig& cfg) {
  cfg.validate();
  ChainResult result;
  ChainTrace& trace = result.trace;
  trace.image = image;

  auto stage_messages = [&](const char* id,
                            std::map<std::string, std::string> values) {
    std::vector<ChatMessage> messages = prompts.get(id).render(values);
    attach_image(messages, image);
    return messages;
  };

  std::vector<BoundingBox> boxes = run_stage(
      chat, 1, stage_messages("chain_stage_1", {}), kStage1Reminder, trace,
      [](const std::string& reply) -> std::optional<std::vector<BoundingBox>> {
        std::vector<BoundingBox> parsed =
            parse_localization_text(reply, /*strict=*/false);
        if (parsed.empty()) return std::nullopt;
        return parsed;
      });
  trace.stages.back().artifact = serialize_localization_text(boxes);

  InstanceText tagged = run_stage(
      chat, 2,
      stage_messages("chain_stage_2",
                     {{"localization_text", trace.stages[0].artifact}}),
      kStage2Reminder, trace,
      [](const std::string& reply) -> std::optional<InstanceText> {
        InstanceText parsed = parse_instance_text(reply, /*strict=*/false);
        if (parsed.entries.empty()) return std::nullopt;
        return parsed;
      });
  trace.stages.back().artifact = serialize_instance_text(tagged);

  InstanceText extras = run_stage(
      chat, 3,
      stage_messages("chain_stage_3",
                     {{"instance_text", trace.stages[1].artifact}}),
      kStage3Reminder, trace,
      [](const std::string& reply) -> std::optional<InstanceText> {
        InstanceText parsed = parse_instance_text(reply, /*strict=*/false);
        // Markup that survives no parse means the model tried to emit
        // entries and failed; an entry-free prose reply means none missing.
        if (parsed.entries.empty() &&
            reply.find("<box>") != std::string::npos) {
          return std::nullopt;
        }
        return parsed;
      });
  trace.stages.back().artifact = serialize_instance_text(extras);

  InstanceText merged = tagged;
  for (const EntityInstance& extra : extras.entries) {
    double best = 0.0;
    for (const EntityInstance& kept : merged.entries) {
      best = std::max(best, iou(extra.box, kept.box));
    }
    if (best < cfg.merge_iou) merged.entries.push_back(extra);
  }
  for (std::size_t i = 0; i < merged.entries.size(); ++i) {
    merged.entries[i].id = int(i) + 1;
  }

  result.caption = run_stage(
      chat, 4,
      stage_messages("chain_stage_4",
                     {{"instance_text", serialize_instance_text(merged)}}),
      kStage4Reminder, trace,
      [](const std::string& reply) -> std::optional<PanopticCaption> {
        PanopticCaption parsed = parse_caption(reply, /*strict=*/false);
        if (parsed.spans.empty()) return std::nullopt;
        return parsed;
      });
  trace.caption = canonical_caption_text(result.caption);
  trace.stages.back().artifact = trace.caption;
  return result;
}

Json to_json(const TrainingTuple& tuple) {
  return Json{{"image", tuple.image},
              {"prompt", tuple.prompt},
              {"target", tuple.target},
              {"stage", tuple.stage}};
}

std::vector<TrainingTuple> build_training_tuples(const std::string& image,
                                                 const PanopticCaption& gt,
                                                 const PromptLibrary& prompts,
                                                 std::uint64_t seed) {
  std::vector<EntityInstance> all = gt.instances();
  if (all.empty()) {
    throw PancapError(Errc::no_instances, "caption has no box spans");
  }
  const std::size_t n = all.size();

  std::vector<BoundingBox> boxes;
  boxes.reserve(n);
  for (const EntityInstance& entry : all) boxes.push_back(entry.box);
  const std::string loc_text = serialize_localization_text(boxes);
  const std::string full_text = serialize_instance_text(InstanceText{all});

  auto stage_prompt = [&](const char* id,
                          const std::map<std::string, std::string>& values) {
    return joined_contents(prompts.get(id).render(values));
  };

  std::vector<TrainingTuple> tuples;
  tuples.push_back({image, stage_prompt("chain_stage_1", {}), loc_text, 1});
  tuples.push_back({image,
                    stage_prompt("chain_stage_2",
                                 {{"localization_text", loc_text}}),
                    full_text, 2});
  if (n >= 2) {
    const std::size_t held = std::max<std::size_t>(1, n / 3);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates; explicit draws keep the split stable across
    // standard libraries.
    for (std::size_t i = 0; i < held; ++i) {
      std::size_t j = i + std::size_t(rng() % std::uint64_t(n - i));
      std::swap(order[i], order[j]);
    }
    std::vector<bool> held_out(n, false);
    for (std::size_t i = 0; i < held; ++i) held_out[order[i]] = true;
    InstanceText kept;
    InstanceText missing;
    for (std::size_t i = 0; i < n; ++i) {
      (held_out[i] ? missing : kept).entries.push_back(all[i]);
    }
    tuples.push_back({image,
                      stage_prompt("chain_stage_3",
                                   {{"instance_text",
                                     serialize_instance_text(kept)}}),
                      serialize_instance_text(missing), 3});
  }
  tuples.push_back({image,
                    stage_prompt("chain_stage_4",
                                 {{"instance_text", full_text}}),
                    canonical_caption_text(gt), 4});
  return tuples;
}

void write_tuples(const std::filesystem::path& path,
                  const std::vector<TrainingTuple>& tuples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw PancapError(Errc::io_error, "cannot write " + path.string());
  }
  for (const TrainingTuple& tuple : tuples) {
    out << to_json(tuple).dump() << "\n";
  }
}

}  // namespace pancap
