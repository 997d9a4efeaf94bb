#include "pancap/caption.hpp"

#include <cctype>
#include <charconv>
#include <optional>

#include "pancap/text_util.hpp"

namespace pancap {

namespace {

constexpr std::string_view kBoxOpen = "<box>";
constexpr std::string_view kBoxClose = "</box>";
constexpr int kMaxTagWords = 6;

[[noreturn]] void malformed(const std::string& what) {
  throw PancapError(Errc::malformed_box, what);
}

bool parse_int_token(std::string_view token, int& out) {
  token = trim_view(token);
  if (token.empty()) return false;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

// Inner payload of a markup: "[[a, b, c, d]]" or "[a, b, c, d]".
BoundingBox parse_markup_payload(std::string_view inner, bool strict) {
  inner = trim_view(inner);
  int depth = 0;
  while (!inner.empty() && inner.front() == '[' && depth < 2) {
    inner.remove_prefix(1);
    inner = trim_view(inner);
    ++depth;
  }
  if (depth == 0) malformed("expected '[' after <box>");
  int closing = 0;
  while (!inner.empty() && inner.back() == ']' && closing < depth) {
    inner.remove_suffix(1);
    inner = trim_view(inner);
    ++closing;
  }
  if (closing != depth) malformed("unbalanced brackets in box markup");

  int coords[4];
  std::size_t count = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= inner.size(); ++i) {
    if (i == inner.size() || inner[i] == ',') {
      if (count == 4) malformed("box markup has more than four coordinates");
      if (!parse_int_token(inner.substr(start, i - start), coords[count])) {
        malformed("non-integer coordinate in box markup");
      }
      ++count;
      start = i + 1;
    }
  }
  if (count != 4) malformed("box markup needs exactly four coordinates");
  return validate_box(BoundingBox{coords[0], coords[1], coords[2], coords[3]}, strict);
}

struct MarkupHit {
  std::size_t begin = 0;  // offset of "<box>"
  std::size_t end = 0;    // one past "</box>"
  BoundingBox box;
};

// Finds the next parseable markup at or after `from`. In lenient mode bad
// markup is skipped (optionally warned); in strict mode it throws ParseError
// with the byte offset.
std::optional<MarkupHit> next_markup(std::string_view text, std::size_t from,
                                     bool strict, bool warn) {
  std::size_t pos = from;
  while (true) {
    std::size_t open = text.find(kBoxOpen, pos);
    if (open == std::string_view::npos) return std::nullopt;
    std::size_t close = text.find(kBoxClose, open + kBoxOpen.size());
    if (close == std::string_view::npos) {
      if (strict) {
        throw PancapError(Errc::parse_error,
                          "unclosed <box> at offset " + std::to_string(open));
      }
      if (warn) log_warning("unclosed <box> markup skipped");
      pos = open + kBoxOpen.size();
      continue;
    }
    std::string_view inner =
        text.substr(open + kBoxOpen.size(), close - open - kBoxOpen.size());
    try {
      MarkupHit hit;
      hit.begin = open;
      hit.end = close + kBoxClose.size();
      hit.box = parse_markup_payload(inner, strict);
      return hit;
    } catch (const PancapError& err) {
      if (strict) {
        throw PancapError(Errc::parse_error, "offset " + std::to_string(open) +
                                                 ": " + err.what());
      }
      if (warn) log_warning(std::string("malformed box markup skipped: ") + err.what());
      pos = open + kBoxOpen.size();
    }
  }
}

bool tag_char(unsigned char c) {
  return std::isalnum(c) != 0 || c == ' ' || c == '-';
}

bool all_digits(std::string_view word) {
  if (word.empty()) return false;
  for (char c : word) {
    if (std::isdigit(static_cast<unsigned char>(c)) == 0) return false;
  }
  return true;
}

bool is_leading_stop_word(std::string_view word) {
  static const char* kStops[] = {"a",    "an",  "the",  "and",  "or",
                                 "but",  "with", "there", "here", "is",
                                 "are",  "was", "were", "also"};
  std::string lower = to_lower(word);
  for (const char* stop : kStops) {
    if (lower == stop) return true;
  }
  return false;
}

// Tag phrase: the run of letters/digits/spaces/hyphens immediately before the
// markup, capped at kMaxTagWords words, with leading function words and bare
// counts stripped. Falls back to "entity" when nothing survives.
std::string resolve_tag_phrase(std::string_view text, std::size_t markup_begin) {
  std::size_t start = markup_begin;
  while (start > 0 && tag_char(static_cast<unsigned char>(text[start - 1]))) {
    --start;
  }
  std::string_view run = text.substr(start, markup_begin - start);

  std::vector<std::string_view> words;
  std::size_t word_start = 0;
  for (std::size_t i = 0; i <= run.size(); ++i) {
    if (i == run.size() || run[i] == ' ') {
      if (i > word_start) words.push_back(run.substr(word_start, i - word_start));
      word_start = i + 1;
    }
  }
  if (words.size() > static_cast<std::size_t>(kMaxTagWords)) {
    words.erase(words.begin(),
                words.end() - static_cast<std::ptrdiff_t>(kMaxTagWords));
  }
  std::size_t first = 0;
  while (first < words.size() &&
         (is_leading_stop_word(words[first]) || all_digits(words[first]))) {
    ++first;
  }
  std::string tag;
  for (std::size_t i = first; i < words.size(); ++i) {
    if (!tag.empty()) tag.push_back(' ');
    tag.append(words[i]);
  }
  if (tag.empty()) return "entity";
  return tag;
}

// Separator between instance-text entries: whitespace with one optional comma.
// Returns the tag region with that separator removed.
std::string_view strip_entry_separator(std::string_view region) {
  region = trim_view(region);
  if (!region.empty() && region.front() == ',') {
    region.remove_prefix(1);
    region = trim_view(region);
  }
  return region;
}

}  // namespace

std::string serialize_box_markup(const BoundingBox& box) {
  std::string out;
  out.reserve(40);
  out += "<box>[[";
  out += std::to_string(box.x1);
  out += ", ";
  out += std::to_string(box.y1);
  out += ", ";
  out += std::to_string(box.x2);
  out += ", ";
  out += std::to_string(box.y2);
  out += "]]</box>";
  return out;
}

BoundingBox parse_box_markup(std::string_view fragment, bool strict) {
  std::size_t open = fragment.find(kBoxOpen);
  if (open == std::string_view::npos) malformed("missing <box> tag");
  std::size_t close = fragment.find(kBoxClose, open + kBoxOpen.size());
  if (close == std::string_view::npos) malformed("missing </box> tag");
  std::string_view inner =
      fragment.substr(open + kBoxOpen.size(), close - open - kBoxOpen.size());
  return parse_markup_payload(inner, strict);
}

std::vector<EntityInstance> PanopticCaption::instances() const {
  std::vector<EntityInstance> out;
  out.reserve(spans.size());
  for (const auto& span : spans) out.push_back(span.instance);
  return out;
}

PanopticCaption parse_caption(std::string_view text, bool strict) {
  PanopticCaption caption;
  caption.raw_text.assign(text);

  std::size_t pos = 0;
  int next_id = 1;
  while (auto hit = next_markup(text, pos, strict, /*warn=*/!strict)) {
    CaptionSpan span;
    span.begin = hit->begin;
    span.end = hit->end;
    span.instance =
        EntityInstance{next_id++, resolve_tag_phrase(text, hit->begin), hit->box};
    caption.spans.push_back(std::move(span));
    pos = hit->end;
  }

  std::string stripped;
  stripped.reserve(text.size());
  std::size_t cursor = 0;
  for (const auto& span : caption.spans) {
    stripped.append(text.substr(cursor, span.begin - cursor));
    cursor = span.end;
  }
  stripped.append(text.substr(cursor));
  caption.prose = collapse_whitespace(stripped);
  return caption;
}

std::string canonical_caption_text(const PanopticCaption& caption) {
  std::string out;
  out.reserve(caption.raw_text.size());
  std::size_t cursor = 0;
  for (const auto& span : caption.spans) {
    out.append(caption.raw_text, cursor, span.begin - cursor);
    out += serialize_box_markup(span.instance.box);
    cursor = span.end;
  }
  out.append(caption.raw_text, cursor, caption.raw_text.size() - cursor);
  return out;
}

std::string serialize_localization_text(const std::vector<BoundingBox>& boxes) {
  std::string out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i > 0) out += ", ";
    out += serialize_box_markup(boxes[i]);
  }
  return out;
}

std::vector<BoundingBox> parse_localization_text(std::string_view text,
                                                 bool strict) {
  std::vector<BoundingBox> boxes;
  std::size_t pos = 0;
  bool first = true;
  while (auto hit = next_markup(text, pos, strict, /*warn=*/false)) {
    if (strict) {
      std::string_view gap = text.substr(pos, hit->begin - pos);
      gap = first ? trim_view(gap) : strip_entry_separator(gap);
      if (!gap.empty()) {
        throw PancapError(Errc::parse_error,
                          "unexpected text between box markups");
      }
    }
    boxes.push_back(hit->box);
    pos = hit->end;
    first = false;
  }
  if (strict && !trim_view(text.substr(pos)).empty() && !boxes.empty()) {
    throw PancapError(Errc::parse_error, "trailing text after last box markup");
  }
  return boxes;
}

std::string serialize_instance_text(const InstanceText& text) {
  std::string out;
  for (std::size_t i = 0; i < text.entries.size(); ++i) {
    const auto& entry = text.entries[i];
    if (trim_view(entry.tag).empty()) {
      throw PancapError(Errc::empty_tag,
                        "instance " + std::to_string(entry.id) + " has no tag");
    }
    if (i > 0) out += ", ";
    out += collapse_whitespace(entry.tag);
    out += ' ';
    out += serialize_box_markup(entry.box);
  }
  return out;
}

InstanceText parse_instance_text(std::string_view text, bool strict) {
  InstanceText result;
  std::size_t pos = 0;
  int next_id = 1;
  bool first = true;
  while (auto hit = next_markup(text, pos, strict, /*warn=*/!strict)) {
    std::string_view region = text.substr(pos, hit->begin - pos);
    region = first ? trim_view(region) : strip_entry_separator(region);
    std::string tag = collapse_whitespace(region);
    if (tag.empty()) {
      if (strict) {
        throw PancapError(Errc::empty_tag, "instance-text entry at offset " +
                                               std::to_string(hit->begin) +
                                               " has no tag");
      }
      log_warning("untagged instance-text entry skipped");
    } else {
      result.entries.push_back(EntityInstance{next_id++, std::move(tag), hit->box});
    }
    pos = hit->end;
    first = false;
  }
  return result;
}

namespace {

struct LineScanner {
  std::string_view line;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < line.size() &&
           std::isspace(static_cast<unsigned char>(line[pos])) != 0) {
      ++pos;
    }
  }

  bool consume_ci(std::string_view token) {
    skip_ws();
    if (starts_with_ci(line.substr(pos), token)) {
      pos += token.size();
      return true;
    }
    return false;
  }

  bool consume(char c) {
    skip_ws();
    if (pos < line.size() && line[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  bool consume_int(int& out) {
    skip_ws();
    std::size_t start = pos;
    while (pos < line.size() &&
           std::isdigit(static_cast<unsigned char>(line[pos])) != 0) {
      ++pos;
    }
    if (pos == start) return false;
    return parse_int_token(line.substr(start, pos - start), out);
  }

  std::string_view rest() const { return trim_view(line.substr(pos)); }
};

}  // namespace

SemanticContent parse_semantic_content(std::string_view doc, bool strict) {
  std::string_view trimmed = trim_view(doc);
  if (!trimmed.empty() && trimmed.front() == '{') {
    Json parsed = Json::parse(trimmed, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
      throw PancapError(Errc::parse_error, "invalid JSON content document");
    }
    return content_from_json(parsed);
  }

  SemanticContent content;
  std::size_t line_start = 0;
  int line_no = 0;
  while (line_start <= doc.size()) {
    std::size_t line_end = doc.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = doc.size();
    std::string_view line = trim_view(doc.substr(line_start, line_end - line_start));
    line_start = line_end + 1;
    ++line_no;

    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[' && line.back() == ']') continue;  // section header

    LineScanner scan{line};
    if (scan.consume_ci("global") && scan.consume(':')) {
      std::string_view text = scan.rest();
      if (!text.empty()) {
        content.items.push_back(
            SemanticItem{ItemDim::global_state, std::nullopt, std::nullopt,
                         collapse_whitespace(text)});
        continue;
      }
    } else {
      scan = LineScanner{line};
      int subject = 0;
      if (scan.consume_ci("id") && scan.consume_int(subject)) {
        LineScanner relation_scan = scan;
        int object = 0;
        if (relation_scan.consume_ci("->") && relation_scan.consume_ci("id") &&
            relation_scan.consume_int(object) && relation_scan.consume(':')) {
          std::string_view text = relation_scan.rest();
          if (!text.empty()) {
            content.items.push_back(SemanticItem{ItemDim::relation, subject,
                                                 object,
                                                 collapse_whitespace(text)});
            continue;
          }
        } else if (scan.consume(':')) {
          std::string_view rest = scan.rest();
          std::size_t markup = rest.find(kBoxOpen);
          if (markup != std::string_view::npos) {
            std::string tag = collapse_whitespace(rest.substr(0, markup));
            try {
              BoundingBox box = parse_box_markup(rest.substr(markup), strict);
              if (tag.empty()) {
                throw PancapError(Errc::empty_tag, "instance line without tag");
              }
              content.instances.push_back(
                  EntityInstance{subject, std::move(tag), box});
              continue;
            } catch (const PancapError& err) {
              if (strict) {
                throw PancapError(Errc::parse_error,
                                  "line " + std::to_string(line_no) + ": " +
                                      err.what());
              }
              log_warning("line " + std::to_string(line_no) +
                          " skipped: " + err.what());
              continue;
            }
          }
          if (!rest.empty()) {
            content.items.push_back(SemanticItem{
                ItemDim::attribute, subject, std::nullopt, collapse_whitespace(rest)});
            continue;
          }
        }
      }
    }

    if (strict) {
      throw PancapError(Errc::parse_error, "line " + std::to_string(line_no) +
                                               ": unrecognized item line '" +
                                               std::string(line) + "'");
    }
    log_warning("line " + std::to_string(line_no) + " skipped: unrecognized");
  }

  content.validate();
  return content;
}

std::string render_semantic_lines(const SemanticContent& content) {
  std::string out;
  auto one_line = [](std::string_view text) {
    std::string flat = collapse_whitespace(text);
    return flat;
  };
  for (const auto& instance : content.instances) {
    out += "ID " + std::to_string(instance.id) + ": " + one_line(instance.tag) +
           " " + serialize_box_markup(instance.box) + "\n";
  }
  for (const auto& item : content.items) {
    switch (item.dim) {
      case ItemDim::attribute:
        out += "ID " + std::to_string(*item.subject) + ": " + one_line(item.text) + "\n";
        break;
      case ItemDim::relation:
        out += "ID " + std::to_string(*item.subject) + " -> ID " +
               std::to_string(*item.object) + ": " + one_line(item.text) + "\n";
        break;
      case ItemDim::global_state:
        out += "Global: " + one_line(item.text) + "\n";
        break;
    }
  }
  return out;
}

}  // namespace pancap
