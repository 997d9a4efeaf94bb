#pragma once

// Batch evaluation: loads caption pairs, evaluates them on a worker pool,
// and assembles a schema-versioned JSON report. One provider failure fails
// one pair, never the batch.

#include <filesystem>
#include <string>
#include <vector>

#include "pancap/core.hpp"
#include "pancap/scoring.hpp"

namespace pancap {

inline constexpr int kReportSchemaVersion = 1;

struct BatchItem {
  std::string id;
  std::string prediction;
  std::string reference;
  bool reference_missing = false;  // pred id absent from the reference file
};

// One {"id","prediction","reference"} object per line. A caption field can
// instead appear as "prediction_file"/"reference_file" holding a path,
// resolved relative to the input file. Ids must be unique.
std::vector<BatchItem> load_batch_input(const std::filesystem::path& path);

// Two {"id","caption"} JSON-lines files joined by id, in prediction-file
// order. A prediction id missing from the reference file marks its item
// reference_missing; run_batch turns that into a per-pair failure.
std::vector<BatchItem> join_caption_files(
    const std::filesystem::path& pred_path,
    const std::filesystem::path& ref_path);

struct PairOutcome {
  std::string id;
  bool failed = false;
  std::string error_code;     // errc_name when failed
  std::string error_message;
  PairEvaluation eval;        // meaningful only when !failed
};

struct DirectionCounts {
  long correct = 0;
  long total = 0;
};

// Raw counts pooled across the corpus. Corpus scores are means of
// per-caption F1s; the counts let readers re-derive pooled F1s instead.
struct PooledCounts {
  long tag_tp = 0;
  long loc_tp = 0;
  long pred_instances = 0;
  long gt_instances = 0;
  DirectionCounts att_pred, att_ref;
  DirectionCounts rel_pred, rel_ref;
  DirectionCounts glo_pred, glo_ref;
};

struct BatchResult {
  std::vector<PairOutcome> outcomes;  // input order
  PancapReport mean;                  // field-wise means over evaluated pairs
  PooledCounts pooled;
  int evaluated = 0;
  int failed = 0;
};

// Reference extraction is cached by caption content, so a reference reused
// against many predictions is extracted once.
BatchResult run_batch(const std::vector<BatchItem>& items, const EvalConfig& cfg,
                      const Providers& providers, int workers = 1);

Json batch_report_json(const BatchResult& result, const EvalConfig& cfg);

// Reads a report back from its JSON. Throws ParseError on shape problems
// and ConfigError when the schema version is newer than this build writes.
int report_schema_version(const Json& report);

// Writes pretty JSON. Refuses to replace an existing report whose
// schema_version is newer than this build's writer.
void write_report(const std::filesystem::path& path, const Json& report);

// One verdict per line across all evaluated pairs, each tagged with the
// owning pair id and the side it scored ("pred" precision, "ref" recall).
void write_qa_dump(const std::filesystem::path& path, const BatchResult& result);

}  // namespace pancap
