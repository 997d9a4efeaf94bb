#include <algorithm>
#include <set>
#include <string>

#include "doctest.h"
#include "pancap/caption.hpp"
#include "pancap/fixtures.hpp"
#include "pancap/scoring.hpp"

using namespace pancap;

namespace {

const FixturePair& pair_by_id(const std::vector<FixturePair>& corpus,
                              const std::string& id) {
  auto it = std::find_if(corpus.begin(), corpus.end(),
                         [&](const FixturePair& p) { return p.id == id; });
  REQUIRE(it != corpus.end());
  return *it;
}

}  // namespace

TEST_CASE("fixture corpus has 20 uniquely named pairs") {
  auto corpus = fixture_corpus();
  CHECK(corpus.size() == 20);
  std::set<std::string> ids;
  for (const auto& pair : corpus) ids.insert(pair.id);
  CHECK(ids.size() == 20);
  CHECK(corpus.front().id == "golden-01");
  CHECK(corpus.back().id == "golden-20");
}

TEST_CASE("golden-01 matches the hand-scored caption pair") {
  auto corpus = fixture_corpus();
  const FixturePair& golden = corpus.front();
  CHECK(golden.reference ==
        "ID 1: dog <box>[[100, 200, 500, 600]]</box>\n"
        "ID 2: ball <box>[[600, 620, 700, 720]]</box>\n"
        "ID 3: tree <box>[[20, 30, 220, 630]]</box>\n"
        "ID 1: is brown\n"
        "ID 2: is red\n"
        "ID 3: is tall\n"
        "ID 1 -> ID 2: chases\n"
        "ID 2 -> ID 3: lies under\n"
        "Global: the lighting is dim\n");
  CHECK(golden.prediction ==
        "ID 1: puppy <box>[[100, 200, 500, 600]]</box>\n"
        "ID 2: ball <box>[[650, 620, 750, 720]]</box>\n"
        "ID 3: car <box>[[800, 100, 950, 300]]</box>\n"
        "ID 1: is brown\n"
        "ID 1: is fluffy\n"
        "ID 3: is blue\n"
        "ID 1 -> ID 2: chases\n"
        "Global: the lighting is dim\n");
}

TEST_CASE("every fixture caption round-trips byte-exactly") {
  for (const auto& pair : fixture_corpus()) {
    for (const std::string* caption : {&pair.prediction, &pair.reference}) {
      if (caption->empty()) continue;  // golden-18 prediction
      CAPTURE(pair.id);
      SemanticContent content = parse_semantic_content(*caption, true);
      CHECK(render_semantic_lines(content) == *caption);
    }
  }
}

TEST_CASE("every fixture reference self-evaluates to a full score") {
  EvalConfig cfg;
  Providers providers = make_mock_providers(fixture_lexicon());
  for (const auto& pair : fixture_corpus()) {
    CAPTURE(pair.id);
    PancapReport report =
        evaluate_pair(pair.reference, pair.reference, cfg, providers);
    CHECK(report.tag.f1 == 100.0);
    CHECK(report.loc.f1 == 100.0);
    CHECK(report.att.f1 == 100.0);
    CHECK(report.rel.f1 == 100.0);
    CHECK(report.glo.f1 == 100.0);
    CHECK(report.overall == 410.0);
  }
}

TEST_CASE("hand-computed golden-01 evaluation") {
  EvalConfig cfg;
  Providers providers = make_mock_providers(fixture_lexicon());
  auto corpus = fixture_corpus();
  PancapReport report = evaluate_pair(corpus.front().prediction,
                                      corpus.front().reference, cfg, providers);
  CHECK(report.tag.f1 == doctest::Approx(200.0 / 3.0));
  CHECK(report.loc.f1 == doctest::Approx(100.0 / 3.0));
  CHECK(report.att.f1 == doctest::Approx(100.0 / 3.0));
  CHECK(report.rel.f1 == doctest::Approx(200.0 / 3.0));
  CHECK(report.glo.f1 == 100.0);
  CHECK(report.overall == doctest::Approx(210.0));
}

TEST_CASE("corruptions lower the dimension they target") {
  EvalConfig cfg;
  Providers providers = make_mock_providers(fixture_lexicon());
  auto corpus = fixture_corpus();
  const FixturePair& base = pair_by_id(corpus, "golden-02");
  PancapReport clean =
      evaluate_pair(base.reference, base.reference, cfg, providers);

  SUBCASE("dropping an instance lowers tag f1") {
    std::string damaged = drop_instance(base.reference, 2);
    PancapReport report =
        evaluate_pair(damaged, base.reference, cfg, providers);
    CHECK(report.tag.f1 < clean.tag.f1);
    CHECK(report.overall < clean.overall);
  }
  SUBCASE("pushing a box away lowers loc f1 but not tag f1") {
    std::string damaged = shift_box(base.reference, 2, 380, -380);
    PancapReport report =
        evaluate_pair(damaged, base.reference, cfg, providers);
    CHECK(report.tag.f1 == clean.tag.f1);
    CHECK(report.loc.f1 < clean.loc.f1);
    CHECK(report.overall < clean.overall);
  }
  SUBCASE("negating an attribute lowers att f1 only") {
    std::string damaged = negate_attribute(base.reference, 0);
    PancapReport report =
        evaluate_pair(damaged, base.reference, cfg, providers);
    CHECK(report.tag.f1 == clean.tag.f1);
    CHECK(report.loc.f1 == clean.loc.f1);
    CHECK(report.att.f1 < clean.att.f1);
    CHECK(report.overall < clean.overall);
  }
}

TEST_CASE("corruption helpers validate their targets") {
  auto corpus = fixture_corpus();
  const std::string& caption = pair_by_id(corpus, "golden-02").reference;

  SUBCASE("drop_instance removes the instance and every touching item") {
    std::string out = drop_instance(caption, 1);
    SemanticContent content = parse_semantic_content(out, true);
    CHECK(content.instances.size() == 2);
    CHECK(content.find_instance(1) == nullptr);
    for (const auto& item : content.items) {
      CHECK(item.subject != 1);
      CHECK(item.object != 1);
    }
  }
  SUBCASE("drop_instance rejects unknown ids") {
    CHECK_THROWS_WITH_AS(drop_instance(caption, 9), doctest::Contains("9"),
                         PancapError);
  }
  SUBCASE("shift_box translates exactly one box") {
    std::string out = shift_box(caption, 2, 30, -40);
    SemanticContent before = parse_semantic_content(caption, true);
    SemanticContent after = parse_semantic_content(out, true);
    const EntityInstance* moved = after.find_instance(2);
    const EntityInstance* was = before.find_instance(2);
    REQUIRE(moved != nullptr);
    CHECK(moved->box.x1 == was->box.x1 + 30);
    CHECK(moved->box.y1 == was->box.y1 - 40);
    CHECK(moved->box.x2 == was->box.x2 + 30);
    CHECK(moved->box.y2 == was->box.y2 - 40);
    CHECK(*after.find_instance(1) == *before.find_instance(1));
  }
  SUBCASE("shift_box rejects moves that leave the canvas") {
    CHECK_THROWS_AS(shift_box(caption, 3, 500, 0), PancapError);
  }
  SUBCASE("shift_box rejects unknown ids") {
    CHECK_THROWS_AS(shift_box(caption, 9, 1, 1), PancapError);
  }
  SUBCASE("negate_attribute inserts not after the copula") {
    std::string out = negate_attribute(caption, 1);
    SemanticContent content = parse_semantic_content(out, true);
    int seen = 0;
    for (const auto& item : content.items) {
      if (item.dim != ItemDim::attribute) continue;
      if (seen++ == 1) CHECK(item.text == "is not yellow");
    }
  }
  SUBCASE("negate_attribute prefixes texts without a copula") {
    SemanticContent content;
    content.instances.push_back({1, "dog", {0, 0, 10, 10}});
    content.items.push_back({ItemDim::attribute, 1, std::nullopt, "barks loudly"});
    std::string out = negate_attribute(render_semantic_lines(content), 0);
    SemanticContent parsed = parse_semantic_content(out, true);
    CHECK(parsed.items.at(0).text == "not barks loudly");
  }
  SUBCASE("negate_attribute rejects out-of-range indices") {
    CHECK_THROWS_AS(negate_attribute(caption, 3), PancapError);
  }
}

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pancap/batch.hpp"
#include "pancap/mocks.hpp"

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pancap-test-" + std::to_string(std::rand()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this) & 0xffff));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

class BatchCountingExtractor : public ExtractionProvider {
 public:
  SemanticContent extract(const std::string& caption) override {
    ++calls_;
    return inner_.extract(caption);
  }
  int calls() const { return calls_; }

 private:
  OracleExtractionProvider inner_;
  std::atomic<int> calls_{0};
};

}  // namespace

TEST_CASE("load_batch_input reads inline and file-referenced captions") {
  TempDir dir;
  write_file(dir.path / "ref-02.txt", "ID 1: dog <box>[[0, 0, 10, 10]]</box>\n");
  std::string input =
      R"({"id": "a", "prediction": "p1", "reference": "r1"})" "\n"
      "\n"
      R"({"id": "b", "prediction": "p2", "reference_file": "ref-02.txt"})" "\n";
  write_file(dir.path / "input.jsonl", input);

  auto items = load_batch_input(dir.path / "input.jsonl");
  REQUIRE(items.size() == 2);
  CHECK(items[0].id == "a");
  CHECK(items[0].prediction == "p1");
  CHECK(items[0].reference == "r1");
  CHECK(items[1].reference == "ID 1: dog <box>[[0, 0, 10, 10]]</box>\n");
}

TEST_CASE("load_batch_input rejects bad shapes") {
  TempDir dir;
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_batch_input(dir.path / "absent.jsonl"), PancapError);
  }
  SUBCASE("garbage line") {
    write_file(dir.path / "in.jsonl", "not json\n");
    CHECK_THROWS_AS(load_batch_input(dir.path / "in.jsonl"), PancapError);
  }
  SUBCASE("duplicate id") {
    write_file(dir.path / "in.jsonl",
               R"({"id": "a", "prediction": "x", "reference": "y"})" "\n"
               R"({"id": "a", "prediction": "x", "reference": "y"})" "\n");
    CHECK_THROWS_WITH_AS(load_batch_input(dir.path / "in.jsonl"),
                         doctest::Contains("duplicate id"), PancapError);
  }
  SUBCASE("missing caption field") {
    write_file(dir.path / "in.jsonl", R"({"id": "a", "prediction": "x"})" "\n");
    CHECK_THROWS_WITH_AS(load_batch_input(dir.path / "in.jsonl"),
                         doctest::Contains("reference"), PancapError);
  }
  SUBCASE("unreadable caption file reference") {
    write_file(dir.path / "in.jsonl",
               R"({"id": "a", "prediction": "x", "reference_file": "gone.txt"})"
               "\n");
    CHECK_THROWS_WITH_AS(load_batch_input(dir.path / "in.jsonl"),
                         doctest::Contains("gone.txt"), PancapError);
  }
}

TEST_CASE("join_caption_files pairs by id in prediction order") {
  TempDir dir;
  write_file(dir.path / "pred.jsonl",
             R"({"id": "b", "caption": "pb"})" "\n"
             R"({"id": "a", "prediction": "pa"})" "\n"
             R"({"id": "ghost", "caption": "pg"})" "\n");
  write_file(dir.path / "ref.jsonl",
             R"({"id": "a", "caption": "ra"})" "\n"
             R"({"id": "b", "reference": "rb"})" "\n");

  auto items = join_caption_files(dir.path / "pred.jsonl", dir.path / "ref.jsonl");
  REQUIRE(items.size() == 3);
  CHECK(items[0].id == "b");
  CHECK(items[0].reference == "rb");
  CHECK_FALSE(items[0].reference_missing);
  CHECK(items[1].id == "a");
  CHECK(items[1].reference == "ra");
  CHECK(items[2].id == "ghost");
  CHECK(items[2].reference_missing);
}

TEST_CASE("run_batch on the fixture corpus") {
  auto corpus = fixture_corpus();
  std::vector<BatchItem> items;
  for (const auto& pair : corpus) {
    items.push_back({pair.id, pair.prediction, pair.reference});
  }
  EvalConfig cfg;
  Providers providers = make_mock_providers(fixture_lexicon());
  BatchResult result = run_batch(items, cfg, providers, 4);

  CHECK(result.evaluated == 20);
  CHECK(result.failed == 0);
  REQUIRE(result.outcomes.size() == 20);
  CHECK(result.outcomes.front().id == "golden-01");
  CHECK(result.outcomes.front().eval.report.overall ==
        doctest::Approx(210.0));

  SUBCASE("means equal the hand-averaged per-pair scores") {
    double overall_sum = 0.0;
    double tag_f1_sum = 0.0;
    for (const auto& outcome : result.outcomes) {
      overall_sum += outcome.eval.report.overall;
      tag_f1_sum += outcome.eval.report.tag.f1;
    }
    CHECK(result.mean.overall == doctest::Approx(overall_sum / 20.0));
    CHECK(result.mean.tag.f1 == doctest::Approx(tag_f1_sum / 20.0));
  }
  SUBCASE("pooled instance counts add up") {
    long pred = 0;
    long ref = 0;
    for (const auto& outcome : result.outcomes) {
      pred += long(outcome.eval.pred_content.instances.size());
      ref += long(outcome.eval.ref_content.instances.size());
    }
    CHECK(result.pooled.pred_instances == pred);
    CHECK(result.pooled.gt_instances == ref);
    CHECK(result.pooled.tag_tp <= std::min(pred, ref));
    CHECK(result.pooled.loc_tp <= result.pooled.tag_tp);
  }
  SUBCASE("worker counts do not change the result") {
    BatchResult serial = run_batch(items, cfg, providers, 1);
    Json parallel_json = batch_report_json(result, cfg);
    Json serial_json = batch_report_json(serial, cfg);
    CHECK(parallel_json.dump() == serial_json.dump());
  }
}

TEST_CASE("run_batch caches reference extraction by content") {
  auto counting = std::make_shared<BatchCountingExtractor>();
  Providers providers = make_mock_providers(fixture_lexicon());
  providers.extractor = counting;
  EvalConfig cfg;

  std::string reference = fixture_corpus().front().reference;
  std::vector<BatchItem> items;
  for (int i = 0; i < 5; ++i) {
    items.push_back({"p" + std::to_string(i), reference, reference});
  }
  run_batch(items, cfg, providers, 1);
  // 5 predictions + 1 shared reference.
  CHECK(counting->calls() == 6);
}

class TrippingExtractor : public ExtractionProvider {
 public:
  SemanticContent extract(const std::string& caption) override {
    if (caption.find("TRIP") != std::string::npos) {
      throw PancapError(Errc::timeout, "provider gave up");
    }
    return inner_.extract(caption);
  }

 private:
  OracleExtractionProvider inner_;
};

TEST_CASE("run_batch isolates per-pair failures") {
  EvalConfig cfg;
  Providers providers = make_mock_providers(fixture_lexicon());
  providers.extractor = std::make_shared<TrippingExtractor>();
  std::string good = fixture_corpus().front().reference;
  std::vector<BatchItem> items;
  items.push_back({"ok", good, good});
  BatchItem missing;
  missing.id = "orphan";
  missing.prediction = good;
  missing.reference_missing = true;
  items.push_back(missing);
  items.push_back({"bad-ref", good, "TRIP caption\n"});

  BatchResult result = run_batch(items, cfg, providers, 2);
  CHECK(result.evaluated == 1);
  CHECK(result.failed == 2);
  CHECK_FALSE(result.outcomes[0].failed);
  CHECK(result.outcomes[0].eval.report.overall == 410.0);
  CHECK(result.outcomes[1].failed);
  CHECK(result.outcomes[1].error_code == "DanglingReference");
  CHECK(result.outcomes[2].failed);
  CHECK(result.outcomes[2].error_code == "ExtractionFailed");

  Json report = batch_report_json(result, cfg);
  CHECK(report["summary"]["failed"] == 2);
  CHECK(report["failures"].size() == 2);
  CHECK(report["pairs"][1].contains("error"));
  CHECK_FALSE(report["pairs"][0].contains("error"));
}

TEST_CASE("batch report json is stable and round-trips the schema version") {
  EvalConfig cfg;
  Providers providers = make_mock_providers(fixture_lexicon());
  std::vector<BatchItem> items;
  for (const auto& pair : fixture_corpus()) {
    items.push_back({pair.id, pair.prediction, pair.reference});
  }
  Json first = batch_report_json(run_batch(items, cfg, providers, 3), cfg);
  Json second = batch_report_json(run_batch(items, cfg, providers, 7), cfg);
  CHECK(first.dump() == second.dump());
  CHECK(report_schema_version(first) == kReportSchemaVersion);
  CHECK(first["summary"]["pairs"] == 20);
}

TEST_CASE("write_report refuses to clobber newer schema reports") {
  TempDir dir;
  auto path = dir.path / "report.json";
  Json report{{"schema_version", kReportSchemaVersion}, {"note", "old"}};

  SUBCASE("fresh write and same-version rewrite succeed") {
    write_report(path, report);
    CHECK(read_file(path).find("\"note\": \"old\"") != std::string::npos);
    Json updated{{"schema_version", kReportSchemaVersion}, {"note", "new"}};
    write_report(path, updated);
    CHECK(read_file(path).find("\"note\": \"new\"") != std::string::npos);
  }
  SUBCASE("newer schema on disk wins") {
    write_file(path, Json{{"schema_version", kReportSchemaVersion + 1}}.dump());
    CHECK_THROWS_WITH_AS(write_report(path, report),
                         doctest::Contains("will not replace"), PancapError);
    CHECK(read_file(path).find("note") == std::string::npos);
  }
  SUBCASE("non-report files are replaced") {
    write_file(path, "scratch\n");
    write_report(path, report);
    CHECK(read_file(path).find("schema_version") != std::string::npos);
  }
}

TEST_CASE("qa dump lists verdicts per pair and side") {
  TempDir dir;
  EvalConfig cfg;
  Providers providers = make_mock_providers(fixture_lexicon());
  auto corpus = fixture_corpus();
  std::vector<BatchItem> items{{corpus[0].id, corpus[0].prediction,
                                corpus[0].reference}};
  BatchResult result = run_batch(items, cfg, providers, 1);
  auto path = dir.path / "qa.jsonl";
  write_qa_dump(path, result);

  std::ifstream in(path);
  std::string line;
  int pred_lines = 0;
  int ref_lines = 0;
  while (std::getline(in, line)) {
    Json doc = Json::parse(line);
    CHECK(doc["pair"] == "golden-01");
    CHECK(doc.contains("yes_q"));
    CHECK(doc.contains("no_q"));
    CHECK(doc.contains("correct"));
    if (doc["side"] == "pred") ++pred_lines;
    if (doc["side"] == "ref") ++ref_lines;
  }
  CHECK(pred_lines == 5);
  CHECK(ref_lines == 6);
}

TEST_CASE("emit_fixtures writes a loadable corpus") {
  TempDir dir;
  emit_fixtures(dir.path);
  for (const char* name : {"corpus.jsonl", "pred.jsonl", "ref.jsonl",
                           "lexicon.json", "config.json",
                           "golden-01.report.json"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(dir.path / name));
  }

  auto combined = load_batch_input(dir.path / "corpus.jsonl");
  auto joined =
      join_caption_files(dir.path / "pred.jsonl", dir.path / "ref.jsonl");
  auto corpus = fixture_corpus();
  REQUIRE(combined.size() == corpus.size());
  REQUIRE(joined.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(combined[i].id == corpus[i].id);
    CHECK(combined[i].prediction == corpus[i].prediction);
    CHECK(combined[i].reference == corpus[i].reference);
    CHECK(joined[i].id == corpus[i].id);
    CHECK(joined[i].prediction == corpus[i].prediction);
    CHECK(joined[i].reference == corpus[i].reference);
  }

  Json golden = Json::parse(read_file(dir.path / "golden-01.report.json"));
  CHECK(golden["overall"].get<double>() == doctest::Approx(210.0));

  Json config = Json::parse(read_file(dir.path / "config.json"));
  EvalConfig cfg = eval_config_from_json(config["eval"]);
  CHECK(cfg.lambda_g == doctest::Approx(0.1));
}

TEST_CASE("checked-in fixtures match a fresh emit byte for byte") {
  TempDir dir;
  emit_fixtures(dir.path);
  std::filesystem::path repo = PANCAP_SOURCE_DIR "/fixtures";
  for (const char* name : {"corpus.jsonl", "pred.jsonl", "ref.jsonl",
                           "lexicon.json", "config.json",
                           "golden-01.report.json"}) {
    CAPTURE(name);
    REQUIRE(std::filesystem::exists(repo / name));
    CHECK(read_file(dir.path / name) == read_file(repo / name));
  }
}
