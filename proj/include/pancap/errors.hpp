#pragma once

#include <stdexcept>
#include <string>

namespace pancap {

// Stable error codes surfaced by every module. Batch runners branch on the
// code, humans read the message.
enum class Errc {
  degenerate_box,
  out_of_range,
  malformed_box,
  parse_error,
  empty_tag,
  dangling_reference,
  duplicate_instance_id,
  count_inconsistency,
  embedding_unavailable,
  timeout,
  auth_failure,
  rate_limited,
  malformed_response,
  extraction_failed,
  judge_failed,
  generation_failed,
  stage_parse_failure,
  untagged_region,
  degenerate_variance,
  all_tied,
  no_instances,
  unfilled_placeholder,
  config_error,
  io_error,
};

const char* errc_name(Errc code);

class PancapError : public std::runtime_error {
 public:
  PancapError(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Stage failures keep the offending stage and the raw model reply so a batch
// report can show what the model actually said.
class StageParseError : public PancapError {
 public:
  StageParseError(int stage, std::string raw_reply, const std::string& message)
      : PancapError(Errc::stage_parse_failure,
                    "stage " + std::to_string(stage) + ": " + message),
        stage_(stage),
        raw_reply_(std::move(raw_reply)) {}

  int stage() const { return stage_; }
  const std::string& raw_reply() const { return raw_reply_; }

 private:
  int stage_;
  std::string raw_reply_;
};

}  // namespace pancap
