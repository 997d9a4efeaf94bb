#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pancap/core.hpp"

namespace pancap {

// Box markup grammar. Output is always the canonical double-bracket form
// "<box>[[x1, y1, x2, y2]]</box>"; input additionally accepts the
// single-bracket variant and arbitrary internal whitespace.
std::string serialize_box_markup(const BoundingBox& box);

// Parses a fragment containing exactly one box markup. Throws MalformedBox on
// structural problems; box validity errors follow validate_box(strict).
BoundingBox parse_box_markup(std::string_view fragment, bool strict = false);

// One inline box occurrence: [begin, end) byte range of the full markup in
// raw_text plus the instance resolved from it.
struct CaptionSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  EntityInstance instance;
};

// A panoptic caption: prose with inline box markup. Spans are non-overlapping
// and ordered; instance ids are 1..k in order of appearance.
struct PanopticCaption {
  std::string raw_text;
  std::vector<CaptionSpan> spans;
  std::string prose;  // raw_text with markup removed, whitespace squeezed

  std::vector<EntityInstance> instances() const;
};

// Extracts every box markup with its immediately preceding tag phrase.
// strict: any malformed markup is a ParseError carrying the byte offset.
// lenient: malformed markup is skipped; never throws, on any byte input.
PanopticCaption parse_caption(std::string_view text, bool strict = false);

// raw_text with every span re-serialized in the canonical markup form.
std::string canonical_caption_text(const PanopticCaption& caption);

// Localization text: comma-joined box markups ("" for the empty list).
std::string serialize_localization_text(const std::vector<BoundingBox>& boxes);
std::vector<BoundingBox> parse_localization_text(std::string_view text,
                                                 bool strict = false);

// Instance text: comma-separated "tag <box>[[..]]</box>" entries. Ids are
// positional; parse assigns 1..k, so round-trip identity holds for entry
// lists whose ids are already 1..k.
struct InstanceText {
  std::vector<EntityInstance> entries;

  friend bool operator==(const InstanceText&, const InstanceText&) = default;
};

std::string serialize_instance_text(const InstanceText& text);
InstanceText parse_instance_text(std::string_view text, bool strict = true);

// Semantic-content documents. JSON (canonical schema) is detected by a
// leading '{'; otherwise the line-oriented item-list format is parsed:
//
//   ID 1: dog <box>[[100, 200, 500, 600]]</box>   instance (tag + box)
//   ID 1: is brown                                attribute
//   ID 1 -> ID 2: chases                          relation
//   Global: the lighting is dim                   global state
//
// Blank lines, '#' comments and bracketed section headers are ignored.
// Referential integrity violations are errors in both modes; unrecognized
// lines and malformed boxes are errors only in strict mode.
SemanticContent parse_semantic_content(std::string_view doc, bool strict = true);

// Canonical line-oriented rendering; parse_semantic_content inverts it.
std::string render_semantic_lines(const SemanticContent& content);

}  // namespace pancap
