#pragma once

// Deterministic caption corpus used by tests, the acceptance runner, and
// `fixtures --emit`. Captions are canonical semantic-line documents so the
// oracle providers read them back exactly; predictions range from perfect
// copies to systematically damaged variants.

#include <filesystem>
#include <string>
#include <vector>

#include "pancap/core.hpp"
#include "pancap/matching.hpp"

namespace pancap {

struct FixturePair {
  std::string id;
  std::string prediction;
  std::string reference;
};

// dog/puppy, car/automobile, tree/oak.
SynonymLexicon fixture_lexicon();

// 20 pairs, ids golden-01 .. golden-20. golden-01 is the hand-scored pair.
std::vector<FixturePair> fixture_corpus();

// Corruption helpers. Each parses the caption, edits one thing, and
// re-renders canonically. Unknown ids raise DanglingReference.
std::string drop_instance(const std::string& caption, int instance_id);
std::string shift_box(const std::string& caption, int instance_id, int dx,
                      int dy);
// Negates the n-th attribute item (0-based among attributes): "is red"
// becomes "is not red". Index out of range raises OutOfRange.
std::string negate_attribute(const std::string& caption, int attribute_index);

// Writes corpus.jsonl, pred.jsonl, ref.jsonl, lexicon.json, config.json and
// golden-01.report.json into dir.
void emit_fixtures(const std::filesystem::path& dir);

}  // namespace pancap
