#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pancap/batch.hpp"
#include "pancap/caption.hpp"
#include "pancap/chain.hpp"
#include "pancap/engine.hpp"
#include "pancap/fixtures.hpp"
#include "pancap/gateway.hpp"
#include "pancap/mocks.hpp"
#include "pancap/scoring.hpp"
#include "pancap/stats.hpp"
#include "pancap/text_util.hpp"

using namespace pancap;

namespace {

// Exit codes: 0 ok, 2 per-pair evaluation failures, 64 usage or config,
// 65 malformed data or degenerate statistics, 70 internal, 74 file IO.
constexpr int kExitPairFailures = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitInternal = 70;
constexpr int kExitIo = 74;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PancapError(Errc::io_error, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PancapError(Errc::io_error, "cannot write " + path);
  out << body;
}

struct CliConfig {
  EvalConfig eval;
  SynonymLexicon lexicon;
  std::vector<ProviderProfile> profiles;
};

// {"eval": {...}, "lexicon": path-or-object, "profiles": [...]}; every
// field optional, relative lexicon paths resolve against the config file.
CliConfig load_cli_config(const std::string& path) {
  CliConfig cfg;
  if (path.empty()) return cfg;
  Json doc = Json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw PancapError(Errc::parse_error, path + ": expected a JSON object");
  }
  if (doc.contains("eval")) cfg.eval = eval_config_from_json(doc["eval"]);
  cfg.eval.validate();
  if (doc.contains("lexicon")) {
    Json lex = doc["lexicon"];
    if (lex.is_string()) {
      std::filesystem::path lex_path = lex.get<std::string>();
      if (lex_path.is_relative()) {
        lex_path = std::filesystem::path(path).parent_path() / lex_path;
      }
      lex = Json::parse(read_file(lex_path.string()), nullptr, false);
      if (lex.is_discarded()) {
        throw PancapError(Errc::parse_error,
                          lex_path.string() + ": invalid lexicon JSON");
      }
    }
    cfg.lexicon = SynonymLexicon::from_json(lex);
  }
  if (doc.contains("profiles")) {
    if (!doc["profiles"].is_array()) {
      throw PancapError(Errc::config_error, path + ": profiles must be an array");
    }
    for (const Json& entry : doc["profiles"]) {
      cfg.profiles.push_back(ProviderProfile::from_json(entry));
    }
  }
  return cfg;
}

const ProviderProfile& find_profile(const CliConfig& cfg,
                                    const std::string& name) {
  for (const ProviderProfile& profile : cfg.profiles) {
    if (profile.name == name) return profile;
  }
  throw PancapError(Errc::config_error, "no provider profile named \"" + name +
                                            "\"; check the --config file");
}

Providers make_http_providers(const ProviderProfile& profile,
                              SynonymLexicon lexicon) {
  auto prompts = std::make_shared<const PromptLibrary>(PromptLibrary::builtin());
  auto chat = std::make_shared<HttpChatProvider>(profile);
  Providers providers;
  providers.extractor = std::make_shared<ChatExtractionProvider>(chat, prompts);
  providers.judge = std::make_shared<ChatJudgeProvider>(chat, prompts);
  providers.negator = std::make_shared<ChatQuestionNegator>(chat, prompts);
  providers.embedder = std::make_shared<CachingEmbedder>(
      std::make_shared<HttpEmbeddingProvider>(profile));
  providers.lexicon = std::move(lexicon);
  return providers;
}

// Offline stand-in for a staged captioner: a fixed park scene, replayed in
// the four stage grammars so traces are byte-identical across runs.
class MockChainChat : public ChatProvider {
 public:
  std::string complete(const std::vector<ChatMessage>&) override {
    switch (++calls_) {
      case 1:
        return serialize_localization_text(
            {{100, 200, 500, 600}, {600, 620, 700, 720}, {20, 30, 220, 630}});
      case 2:
        return serialize_instance_text(
            {{{1, "dog", {100, 200, 500, 600}},
              {2, "ball", {600, 620, 700, 720}},
              {3, "tree", {20, 30, 220, 630}}}});
      case 3:
        return "None.";
      default:
        return "A brown dog <box>[[100, 200, 500, 600]]</box> chases a red "
               "ball <box>[[600, 620, 700, 720]]</box> beside a tall tree "
               "<box>[[20, 30, 220, 630]]</box> in a quiet park.";
    }
  }
  std::string name() const override { return "mock-chain"; }

 private:
  int calls_ = 0;
};

// Offline engine captioner: reads the boxed entities out of the prompt and
// restates them as a fresh caption, so both models agree byte-for-byte.
class MockCaptioner : public ChatProvider {
 public:
  explicit MockCaptioner(std::string name) : name_(std::move(name)) {}
  std::string complete(const std::vector<ChatMessage>& messages) override {
    // The prompt trailer spells out the markup shape with placeholder
    // coordinates; skip the repair warnings it would trigger.
    set_warnings_enabled(false);
    PanopticCaption parsed = parse_caption(messages.back().content, false);
    set_warnings_enabled(true);
    std::string out = "The image shows";
    for (std::size_t i = 0; i < parsed.spans.size(); ++i) {
      if (i == 0) out += " ";
      else if (i + 1 == parsed.spans.size()) out += ", and ";
      else out += ", ";
      out += "a " + parsed.spans[i].instance.tag + " " +
             serialize_localization_text({parsed.spans[i].instance.box});
    }
    out += ".";
    return out;
  }
  std::string name() const override { return name_; }

 private:
  std::string name_;
};

int cmd_evaluate(const std::string& pred, const std::string& ref,
                 const std::string& config_path, const std::string& out,
                 const std::string& qa_dump, bool mock, int workers) {
  CliConfig cfg = load_cli_config(config_path);
  Providers providers =
      mock ? make_mock_providers(cfg.lexicon)
           : (cfg.profiles.empty()
                  ? throw PancapError(Errc::config_error,
                                      "no provider profiles configured; pass "
                                      "--mock for the offline providers")
                  : make_http_providers(cfg.profiles.front(), cfg.lexicon));
  std::vector<BatchItem> items = join_caption_files(pred, ref);
  BatchResult result = run_batch(items, cfg.eval, providers, workers);
  write_report(out, batch_report_json(result, cfg.eval));
  if (!qa_dump.empty()) write_qa_dump(qa_dump, result);
  std::printf("evaluated %zu pairs (%zu failed) -> %s\n", result.evaluated,
              result.failed, out.c_str());
  return result.failed > 0 ? kExitPairFailures : 0;
}

int cmd_extract(const std::string& caption_path, const std::string& config_path,
                const std::string& profile_name) {
  CliConfig cfg = load_cli_config(config_path);
  std::shared_ptr<ExtractionProvider> extractor;
  if (profile_name.empty()) {
    extractor = std::make_shared<OracleExtractionProvider>();
  } else {
    auto prompts =
        std::make_shared<const PromptLibrary>(PromptLibrary::builtin());
    extractor = std::make_shared<ChatExtractionProvider>(
        std::make_shared<HttpChatProvider>(find_profile(cfg, profile_name)),
        prompts);
  }
  SemanticContent content = extractor->extract(read_file(caption_path));
  std::printf("%s\n", to_json(content).dump(2).c_str());
  return 0;
}

int cmd_chain(const std::string& image, const std::string& profile_name,
              const std::string& config_path, const std::string& trace_path,
              bool mock) {
  CliConfig cfg = load_cli_config(config_path);
  std::shared_ptr<ChatProvider> chat;
  if (mock) {
    chat = std::make_shared<MockChainChat>();
  } else {
    chat = std::make_shared<HttpChatProvider>(find_profile(cfg, profile_name));
  }
  ChainResult result =
      run_chain(image, *chat, PromptLibrary::builtin(), cfg.eval);
  write_file(trace_path, to_json(result.trace).dump(2) + "\n");
  std::printf("%s\n", result.caption.raw_text.c_str());
  return 0;
}

int cmd_engine(const std::string& regions_path, const std::string& aware_path,
               const std::vector<std::string>& profile_names,
               const std::string& config_path, const std::string& out,
               bool mock) {
  CliConfig cfg = load_cli_config(config_path);
  RegionSet agnostic = load_region_file(regions_path);
  RegionSet aware = load_region_file(aware_path);
  std::shared_ptr<ChatProvider> model_a;
  std::shared_ptr<ChatProvider> model_b;
  if (mock) {
    model_a = std::make_shared<MockCaptioner>(profile_names[0]);
    model_b = std::make_shared<MockCaptioner>(profile_names[1]);
  } else {
    model_a = std::make_shared<HttpChatProvider>(
        find_profile(cfg, profile_names[0]));
    model_b = std::make_shared<HttpChatProvider>(
        find_profile(cfg, profile_names[1]));
  }
  Providers providers = mock ? make_mock_providers(cfg.lexicon)
                             : make_http_providers(cfg.profiles.front(),
                                                   cfg.lexicon);
  EngineRun run = run_engine(agnostic, aware, *model_a, *model_b,
                             PromptLibrary::builtin(), cfg.eval, providers);
  std::string manifest =
      manifest_line(agnostic.image, model_a->name(), run.caption_a,
                    run.forward.nonloc_score, run.kept)
          .dump() +
      "\n" +
      manifest_line(agnostic.image, model_b->name(), run.caption_b,
                    run.reverse.nonloc_score, run.kept)
          .dump() +
      "\n";
  if (!out.empty()) write_file(out, manifest);
  std::printf("%s", manifest.c_str());
  return 0;
}

int cmd_stats(const std::string& ratings_path) {
  std::vector<RatedSample> samples = load_ratings(ratings_path);
  double rho = pcc(samples);
  double one_minus_r2 = 1.0 - r_squared(samples);
  double tau = kendall_tau(samples);
  std::printf("%.3f %.3f %.3f\n", rho, one_minus_r2, tau);
  return 0;
}

int cmd_fixtures(const std::string& dir) {
  emit_fixtures(dir);
  std::printf("wrote fixtures to %s\n", dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panoptic caption scoring toolkit"};
  app.require_subcommand(1);

  std::string pred, ref, config_path, out, qa_dump;
  bool mock = false;
  int workers = std::max(1u, std::thread::hardware_concurrency());
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "score predictions against references");
  evaluate->add_option("--pred", pred, "predictions JSONL")->required();
  evaluate->add_option("--ref", ref, "references JSONL")->required();
  evaluate->add_option("--config", config_path, "config JSON");
  evaluate->add_option("--out", out, "report path")->required();
  evaluate->add_option("--qa-dump", qa_dump, "per-question verdict JSONL");
  evaluate->add_flag("--mock", mock, "offline deterministic providers");
  evaluate->add_option("--workers", workers, "parallel evaluations");

  std::string caption_path, extract_profile;
  CLI::App* extract =
      app.add_subcommand("extract", "dump a caption's semantic content");
  extract->add_option("--caption", caption_path, "caption text file")
      ->required();
  extract->add_option("--config", config_path, "config JSON");
  extract->add_option("--profile", extract_profile,
                      "chat profile (omit for the offline extractor)");

  std::string image, chain_profile, trace_path;
  CLI::App* chain = app.add_subcommand("chain", "staged caption generation");
  chain->add_option("--image", image, "image reference")->required();
  chain->add_option("--profile", chain_profile, "chat profile")->required();
  chain->add_option("--config", config_path, "config JSON");
  chain->add_option("--trace", trace_path, "stage trace output")->required();
  chain->add_flag("--mock", mock, "offline deterministic captioner");

  std::string regions_path, aware_path, engine_out;
  std::vector<std::string> engine_profiles;
  CLI::App* engine =
      app.add_subcommand("engine", "merge regions, caption, filter");
  engine->add_option("--regions", regions_path, "class-agnostic region JSON")
      ->required();
  engine->add_option("--regions-aware", aware_path, "class-aware region JSON")
      ->required();
  engine->add_option("--profile", engine_profiles, "two captioner profiles")
      ->expected(2)
      ->required();
  engine->add_option("--config", config_path, "config JSON");
  engine->add_option("--out", engine_out, "manifest JSONL output");
  engine->add_flag("--mock", mock, "offline deterministic captioners");

  std::string ratings_path;
  CLI::App* stats =
      app.add_subcommand("stats", "human-consistency correlations");
  stats->add_option("--ratings", ratings_path, "ratings JSONL")->required();

  std::string fixtures_dir;
  CLI::App* fixtures = app.add_subcommand("fixtures", "write golden fixtures");
  fixtures->add_option("--emit", fixtures_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (evaluate->parsed()) {
      return cmd_evaluate(pred, ref, config_path, out, qa_dump, mock, workers);
    }
    if (extract->parsed()) {
      return cmd_extract(caption_path, config_path, extract_profile);
    }
    if (chain->parsed()) {
      return cmd_chain(image, chain_profile, config_path, trace_path, mock);
    }
    if (engine->parsed()) {
      return cmd_engine(regions_path, aware_path, engine_profiles, config_path,
                        engine_out, mock);
    }
    if (stats->parsed()) return cmd_stats(ratings_path);
    if (fixtures->parsed()) return cmd_fixtures(fixtures_dir);
    return kExitUsage;
  } catch (const PancapError& err) {
    std::fprintf(stderr, "pancap: %s\n", err.what());
    switch (err.code()) {
      case Errc::io_error:
        return kExitIo;
      case Errc::config_error:
      case Errc::unfilled_placeholder:
        return kExitUsage;
      default:
        return kExitData;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "pancap: %s\n", err.what());
    return kExitInternal;
  }
}
