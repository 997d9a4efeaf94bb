#pragma once

// Four-stage caption generation (localize, tag, discover extras, describe)
// over a multimodal chat provider, plus the training-tuple builder that
// supervises the same four stages.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pancap/caption.hpp"
#include "pancap/core.hpp"
#include "pancap/prompts.hpp"
#include "pancap/providers.hpp"

namespace pancap {

struct StageRecord {
  int stage = 0;          // 1..4
  std::string prompt;     // rendered message contents, newline-joined
  std::string raw_reply;  // the reply that parsed
  std::string artifact;   // canonical serialization of the parsed artifact
  int attempts = 1;       // 2 after a format re-prompt
  double seconds = 0.0;   // wall clock; kept out of dumps, which stay byte-stable
};

struct ChainTrace {
  std::string image;
  std::string caption;  // canonical final caption text
  std::vector<StageRecord> stages;
};

// Timing-free: repeated identical runs dump byte-identical JSON.
Json to_json(const ChainTrace& trace);

struct ChainResult {
  PanopticCaption caption;
  ChainTrace trace;
};

// Runs the four stages in order against one image. Replies are parsed
// leniently under per-stage grammars; a reply failing its grammar gets
// exactly one re-prompt with a format reminder, then StageParseError.
// Discovered extras merge into the tagged set by IoU dedup at cfg.merge_iou
// before the caption stage. Stage k's prompt embeds the serialized artifact
// of stage k-1 verbatim.
ChainResult run_chain(const std::string& image, ChatProvider& chat,
                      const PromptLibrary& prompts, const EvalConfig& cfg);

struct TrainingTuple {
  std::string image;
  std::string prompt;
  std::string target;
  int stage = 0;
};

Json to_json(const TrainingTuple& tuple);

// Supervision tuples for the four stages from one ground-truth caption.
// The discovery tuple holds out max(1, floor(n/3)) instances as the target
// and prompts with the rest; a single-instance caption omits that tuple.
// Held-out instances are drawn without replacement, deterministically in
// the seed. Throws NoInstances when gt has no spans.
std::vector<TrainingTuple> build_training_tuples(const std::string& image,
                                                 const PanopticCaption& gt,
                                                 const PromptLibrary& prompts,
                                                 std::uint64_t seed);

// JSON-lines {"image","prompt","target","stage"}.
void write_tuples(const std::filesystem::path& path,
                  const std::vector<TrainingTuple>& tuples);

}  // namespace pancap
