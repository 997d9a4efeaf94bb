#include "pancap/fixtures.hpp"

#include <fstream>

#include "pancap/caption.hpp"
#include "pancap/errors.hpp"
#include "pancap/scoring.hpp"
#include "pancap/text_util.hpp"

namespace pancap {

namespace {

EntityInstance inst(int id, const char* tag, int x1, int y1, int x2, int y2) {
  return {id, tag, {x1, y1, x2, y2}};
}

SemanticItem attr(int id, const char* text) {
  return {ItemDim::attribute, id, std::nullopt, text};
}

SemanticItem rel(int subject, int object, const char* text) {
  return {ItemDim::relation, subject, object, text};
}

SemanticItem glob(const char* text) {
  return {ItemDim::global_state, std::nullopt, std::nullopt, text};
}

std::string doc(std::vector<EntityInstance> instances,
                std::vector<SemanticItem> items) {
  SemanticContent content;
  content.instances = std::move(instances);
  content.items = std::move(items);
  content.validate();
  return render_semantic_lines(content);
}

// Swaps one instance's tag, keeping everything else.
std::string retag(const std::string& caption, int id, const char* tag) {
  SemanticContent content = parse_semantic_content(caption, true);
  for (auto& instance : content.instances) {
    if (instance.id == id) instance.tag = tag;
  }
  return render_semantic_lines(content);
}

std::string drop_attribute(const std::string& caption, int attribute_index) {
  SemanticContent content = parse_semantic_content(caption, true);
  SemanticContent out;
  out.instances = content.instances;
  int seen = 0;
  for (const auto& item : content.items) {
    if (item.dim == ItemDim::attribute && seen++ == attribute_index) continue;
    out.items.push_back(item);
  }
  return render_semantic_lines(out);
}

}  // namespace

SynonymLexicon fixture_lexicon() {
  SynonymLexicon lexicon;
  lexicon.add("dog", "puppy");
  lexicon.add("car", "automobile");
  lexicon.add("tree", "oak");
  return lexicon;
}

std::vector<FixturePair> fixture_corpus() {
  std::vector<FixturePair> corpus;
  auto identity = [&corpus](const char* id, std::string reference) {
    corpus.push_back({id, reference, reference});
  };

  // 01: hand-scored pair. A synonym match with IoU 1, a same-tag match with
  // IoU 1/3, a forced zero-score pair, and QA hits and misses in every
  // direction. Expected: tag 66.67, loc 33.33, att 33.33, rel 66.67,
  // glo 100, overall 210.
  corpus.push_back(
      {"golden-01",
       doc({inst(1, "puppy", 100, 200, 500, 600),
            inst(2, "ball", 650, 620, 750, 720),
            inst(3, "car", 800, 100, 950, 300)},
           {attr(1, "is brown"), attr(1, "is fluffy"), attr(3, "is blue"),
            rel(1, 2, "chases"), glob("the lighting is dim")}),
       doc({inst(1, "dog", 100, 200, 500, 600),
            inst(2, "ball", 600, 620, 700, 720),
            inst(3, "tree", 20, 30, 220, 630)},
           {attr(1, "is brown"), attr(2, "is red"), attr(3, "is tall"),
            rel(1, 2, "chases"), rel(2, 3, "lies under"),
            glob("the lighting is dim")})});

  // 02: perfect prediction.
  identity("golden-02",
           doc({inst(1, "dog", 80, 420, 360, 700),
                inst(2, "ball", 500, 560, 600, 660),
                inst(3, "tree", 620, 40, 920, 620)},
               {attr(1, "is spotted"), attr(2, "is yellow"),
                attr(3, "is leafy"), rel(1, 2, "plays with"),
                rel(3, 1, "shades"), glob("it is a sunny day")}));

  // 03: synonym tags, gently jittered boxes, still location-consistent.
  {
    std::string reference =
        doc({inst(1, "car", 100, 100, 300, 300),
             inst(2, "lamp", 400, 80, 470, 360),
             inst(3, "person", 600, 200, 720, 560)},
            {attr(1, "is silver"), attr(2, "is lit"), attr(3, "is walking"),
             rel(3, 1, "stands beside"), glob("the street is wet")});
    std::string prediction = retag(reference, 1, "automobile");
    prediction = shift_box(prediction, 1, 20, 10);
    prediction = shift_box(prediction, 2, -5, 8);
    corpus.push_back({"golden-03", prediction, reference});
  }

  // 04: one instance missing entirely.
  {
    std::string reference =
        doc({inst(1, "table", 60, 500, 460, 760),
             inst(2, "chair", 500, 520, 700, 780),
             inst(3, "cup", 200, 420, 260, 500)},
            {attr(1, "is wooden"), attr(2, "is blue"), attr(3, "is steaming"),
             rel(3, 1, "sits on"), glob("the kitchen is tidy")});
    corpus.push_back({"golden-04", drop_instance(reference, 3), reference});
  }

  // 05: right tags, one box far from home.
  {
    std::string reference =
        doc({inst(1, "boat", 100, 300, 420, 520),
             inst(2, "dock", 60, 540, 700, 700)},
            {attr(1, "is white"), attr(2, "is weathered"),
             rel(1, 2, "is moored to"), glob("fog hangs low")});
    corpus.push_back({"golden-05", shift_box(reference, 1, 450, -200), reference});
  }

  // 06: one attribute claim negated.
  {
    std::string reference =
        doc({inst(1, "horse", 120, 220, 520, 640),
             inst(2, "fence", 40, 600, 900, 720)},
            {attr(1, "is chestnut"), attr(2, "is freshly painted"),
             rel(1, 2, "stands behind"), glob("the pasture is green")});
    corpus.push_back({"golden-06", negate_attribute(reference, 0), reference});
  }

  // 07: perfect prediction with synonym-eligible tags used literally.
  identity("golden-07",
           doc({inst(1, "oak", 300, 60, 700, 640),
                inst(2, "bird", 480, 120, 540, 180),
                inst(3, "mushroom", 340, 660, 400, 720)},
               {attr(1, "is ancient"), attr(2, "is singing"),
                attr(3, "is spotted"), rel(2, 1, "perches in"),
                rel(3, 1, "grows under"), glob("the forest is quiet")}));

  // 08: hallucinated extra instance carrying its own claim.
  {
    std::string reference =
        doc({inst(1, "laptop", 200, 340, 520, 560),
             inst(2, "mug", 560, 420, 640, 520)},
            {attr(1, "is open"), attr(2, "is full"), rel(2, 1, "sits beside"),
             glob("the desk is cluttered")});
    std::string prediction =
        doc({inst(1, "laptop", 200, 340, 520, 560),
             inst(2, "mug", 560, 420, 640, 520),
             inst(3, "plant", 700, 300, 780, 420)},
            {attr(1, "is open"), attr(2, "is full"), attr(3, "is thriving"),
             rel(2, 1, "sits beside"), glob("the desk is cluttered")});
    corpus.push_back({"golden-08", prediction, reference});
  }

  // 09: relation omitted.
  {
    std::string reference =
        doc({inst(1, "umbrella", 150, 100, 450, 400),
             inst(2, "towel", 200, 450, 500, 600)},
            {attr(1, "is striped"), attr(2, "is damp"),
             rel(1, 2, "shades"), glob("the beach is crowded")});
    std::string prediction =
        doc({inst(1, "umbrella", 150, 100, 450, 400),
             inst(2, "towel", 200, 450, 500, 600)},
            {attr(1, "is striped"), attr(2, "is damp"),
             glob("the beach is crowded")});
    corpus.push_back({"golden-09", prediction, reference});
  }

  // 10: global state wrong.
  {
    std::string reference =
        doc({inst(1, "moon", 600, 80, 720, 200),
             inst(2, "cloud", 200, 120, 520, 260)},
            {attr(1, "is full"), attr(2, "is wispy"), rel(2, 1, "drifts past"),
             glob("the night is clear")});
    std::string prediction =
        doc({inst(1, "moon", 600, 80, 720, 200),
             inst(2, "cloud", 200, 120, 520, 260)},
            {attr(1, "is full"), attr(2, "is wispy"), rel(2, 1, "drifts past"),
             glob("a storm is coming")});
    corpus.push_back({"golden-10", prediction, reference});
  }

  // 11: synonym tag plus jitter, still perfect consistency.
  {
    std::string reference =
        doc({inst(1, "tree", 100, 60, 420, 620),
             inst(2, "flower", 500, 500, 580, 600)},
            {attr(1, "is blossoming"), attr(2, "is crimson"),
             rel(2, 1, "grows near"), glob("spring has arrived")});
    std::string prediction = retag(reference, 1, "oak");
    prediction = shift_box(prediction, 2, 12, -10);
    corpus.push_back({"golden-11", prediction, reference});
  }

  // 12: missing instance and a negated attribute.
  {
    std::string reference =
        doc({inst(1, "printer", 80, 100, 320, 320),
             inst(2, "shelf", 400, 60, 900, 260),
             inst(3, "box", 460, 300, 660, 460)},
            {attr(1, "is humming"), attr(2, "is dusty"), attr(3, "is sealed"),
             rel(3, 2, "sits under"), glob("the office is empty")});
    std::string prediction = drop_instance(reference, 1);
    prediction = negate_attribute(prediction, 0);
    corpus.push_back({"golden-12", prediction, reference});
  }

  // 13: perfect prediction.
  identity("golden-13",
           doc({inst(1, "elephant", 200, 160, 700, 640),
                inst(2, "fence", 40, 620, 960, 740)},
               {attr(1, "is gray"), attr(2, "is electrified"),
                rel(1, 2, "towers over"), glob("the zoo is open")}));

  // 14: identical content, permuted ids and declaration order.
  {
    std::string reference =
        doc({inst(1, "swing", 100, 200, 260, 520),
             inst(2, "slide", 340, 160, 560, 540),
             inst(3, "sandbox", 620, 560, 900, 760)},
            {attr(1, "is red"), attr(2, "is steep"), attr(3, "is square"),
             rel(1, 2, "stands beside"), glob("children laugh nearby")});
    std::string prediction =
        doc({inst(1, "sandbox", 620, 560, 900, 760),
             inst(2, "swing", 100, 200, 260, 520),
             inst(3, "slide", 340, 160, 560, 540)},
            {attr(1, "is square"), attr(2, "is red"), attr(3, "is steep"),
             rel(2, 3, "stands beside"), glob("children laugh nearby")});
    corpus.push_back({"golden-14", prediction, reference});
  }

  // 15: one attribute forgotten.
  {
    std::string reference =
        doc({inst(1, "shelf", 60, 80, 940, 300),
             inst(2, "book", 200, 120, 280, 280)},
            {attr(1, "is oak"), attr(2, "is leather-bound"),
             rel(2, 1, "rests on"), glob("the library is silent")});
    corpus.push_back({"golden-15", drop_attribute(reference, 1), reference});
  }

  // 16: an extra unsupported attribute claim.
  {
    std::string reference =
        doc({inst(1, "cup", 300, 400, 380, 500),
             inst(2, "plate", 260, 520, 460, 580)},
            {attr(1, "is porcelain"), attr(2, "is chipped"),
             rel(1, 2, "sits on"), glob("the cafe hums softly")});
    std::string prediction =
        doc({inst(1, "cup", 300, 400, 380, 500),
             inst(2, "plate", 260, 520, 460, 580)},
            {attr(1, "is porcelain"), attr(1, "is golden"),
             attr(2, "is chipped"), rel(1, 2, "sits on"),
             glob("the cafe hums softly")});
    corpus.push_back({"golden-16", prediction, reference});
  }

  // 17: relation endpoints swapped.
  {
    std::string reference =
        doc({inst(1, "bridge", 100, 300, 900, 420),
             inst(2, "boat", 400, 480, 620, 600)},
            {attr(1, "is stone"), attr(2, "is red"),
             rel(2, 1, "passes under"), glob("the river runs high")});
    std::string prediction =
        doc({inst(1, "bridge", 100, 300, 900, 420),
             inst(2, "boat", 400, 480, 620, 600)},
            {attr(1, "is stone"), attr(2, "is red"),
             rel(1, 2, "passes under"), glob("the river runs high")});
    corpus.push_back({"golden-17", prediction, reference});
  }

  // 18: empty prediction.
  corpus.push_back(
      {"golden-18", "",
       doc({inst(1, "stall", 60, 200, 400, 600),
            inst(2, "crate", 440, 480, 620, 620),
            inst(3, "awning", 40, 60, 460, 180)},
           {attr(1, "is busy"), attr(2, "is overflowing"),
            attr(3, "is striped"), rel(3, 1, "covers"),
            glob("the market bustles")})});

  // 19: every tag wrong, boxes right.
  {
    std::string reference =
        doc({inst(1, "bed", 100, 400, 700, 720),
             inst(2, "lamp", 760, 320, 860, 560)},
            {attr(1, "is unmade"), attr(2, "is glowing"),
             rel(2, 1, "stands beside"), glob("the bedroom is warm")});
    std::string prediction = retag(reference, 1, "sofa");
    prediction = retag(prediction, 2, "fan");
    corpus.push_back({"golden-19", prediction, reference});
  }

  // 20: perfect prediction.
  identity("golden-20",
           doc({inst(1, "peak", 200, 40, 800, 400),
                inst(2, "hiker", 460, 420, 540, 600),
                inst(3, "trail", 100, 600, 900, 720)},
               {attr(1, "is snowcapped"), attr(2, "is resting"),
                attr(3, "is winding"), rel(2, 3, "pauses on"),
                rel(3, 1, "leads toward"), glob("the air is thin")}));

  return corpus;
}

std::string drop_instance(const std::string& caption, int instance_id) {
  SemanticContent content = parse_semantic_content(caption, true);
  if (content.find_instance(instance_id) == nullptr) {
    throw PancapError(Errc::dangling_reference,
                      "no instance " + std::to_string(instance_id));
  }
  SemanticContent out;
  for (const auto& instance : content.instances) {
    if (instance.id != instance_id) out.instances.push_back(instance);
  }
  for (const auto& item : content.items) {
    if (item.subject == instance_id || item.object == instance_id) continue;
    out.items.push_back(item);
  }
  return render_semantic_lines(out);
}

std::string shift_box(const std::string& caption, int instance_id, int dx,
                      int dy) {
  SemanticContent content = parse_semantic_content(caption, true);
  bool found = false;
  for (auto& instance : content.instances) {
    if (instance.id != instance_id) continue;
    instance.box.x1 += dx;
    instance.box.x2 += dx;
    instance.box.y1 += dy;
    instance.box.y2 += dy;
    validate_box(instance.box, /*strict=*/true);
    found = true;
  }
  if (!found) {
    throw PancapError(Errc::dangling_reference,
                      "no instance " + std::to_string(instance_id));
  }
  return render_semantic_lines(content);
}

std::string negate_attribute(const std::string& caption, int attribute_index) {
  SemanticContent content = parse_semantic_content(caption, true);
  int seen = 0;
  for (auto& item : content.items) {
    if (item.dim != ItemDim::attribute) continue;
    if (seen++ != attribute_index) continue;
    std::size_t space = item.text.find(' ');
    std::string first =
        to_lower(space == std::string::npos ? item.text
                                            : item.text.substr(0, space));
    bool copula =
        first == "is" || first == "are" || first == "was" || first == "were";
    if (copula && space != std::string::npos) {
      item.text = item.text.substr(0, space) + " not" + item.text.substr(space);
    } else {
      item.text = "not " + item.text;
    }
    return render_semantic_lines(content);
  }
  throw PancapError(Errc::out_of_range,
                    "attribute index " + std::to_string(attribute_index) +
                        " out of range");
}

void emit_fixtures(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto corpus = fixture_corpus();

  std::ofstream pairs(dir / "corpus.jsonl");
  std::ofstream preds(dir / "pred.jsonl");
  std::ofstream refs(dir / "ref.jsonl");
  if (!pairs || !preds || !refs) {
    throw PancapError(Errc::io_error, "cannot write into " + dir.string());
  }
  for (const auto& pair : corpus) {
    pairs << Json{{"id", pair.id},
                  {"prediction", pair.prediction},
                  {"reference", pair.reference}}
                 .dump()
          << "\n";
    preds << Json{{"id", pair.id}, {"caption", pair.prediction}}.dump() << "\n";
    refs << Json{{"id", pair.id}, {"caption", pair.reference}}.dump() << "\n";
  }

  std::ofstream lexicon(dir / "lexicon.json");
  lexicon << fixture_lexicon().to_json().dump(2) << "\n";

  EvalConfig cfg;
  std::ofstream config(dir / "config.json");
  config << Json{{"eval", to_json(cfg)}, {"lexicon", "lexicon.json"}}.dump(2)
         << "\n";

  Providers providers = make_mock_providers(fixture_lexicon());
  const FixturePair& golden = corpus.front();
  PancapReport report =
      evaluate_pair(golden.prediction, golden.reference, cfg, providers);
  std::ofstream golden_out(dir / "golden-01.report.json");
  golden_out << to_json(report).dump(2) << "\n";
}

}  // namespace pancap
