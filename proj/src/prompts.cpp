#include "pancap/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "pancap/errors.hpp"

namespace pancap {

namespace {

bool ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

std::string render_text(const std::string& text,
                        const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
      out.push_back('{');
      ++i;
      continue;
    }
    if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      out.push_back('}');
      ++i;
      continue;
    }
    if (c == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && ident_char(text[j])) ++j;
      if (j > i + 1 && j < text.size() && text[j] == '}') {
        std::string name = text.substr(i + 1, j - i - 1);
        auto it = values.find(name);
        if (it == values.end()) {
          throw PancapError(Errc::unfilled_placeholder,
                            "placeholder {" + name + "} has no value");
        }
        out += it->second;
        i = j;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<ChatMessage> PromptTemplate::render(
    const std::map<std::string, std::string>& values) const {
  std::map<std::string, std::string> all = values;
  all.emplace("examples", example_block);
  std::vector<ChatMessage> out;
  out.reserve(skeleton.size());
  for (const auto& message : skeleton) {
    out.push_back(ChatMessage{message.role, render_text(message.content, all),
                              message.image});
  }
  return out;
}

PromptTemplate PromptTemplate::from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("id") || !doc.contains("messages")) {
    throw PancapError(Errc::parse_error,
                      "prompt template needs 'id' and 'messages'");
  }
  PromptTemplate tpl;
  tpl.id = doc.at("id").get<std::string>();
  tpl.version = doc.value("version", std::string("1"));
  tpl.example_block = doc.value("examples", std::string{});
  for (const auto& message : doc.at("messages")) {
    ChatMessage msg;
    msg.role = message.value("role", std::string("user"));
    msg.content = message.at("content").get<std::string>();
    tpl.skeleton.push_back(std::move(msg));
  }
  if (tpl.skeleton.empty()) {
    throw PancapError(Errc::parse_error,
                      "prompt template '" + tpl.id + "' has no messages");
  }
  return tpl;
}

Json PromptTemplate::to_json() const {
  Json messages = Json::array();
  for (const auto& message : skeleton) {
    messages.push_back(Json{{"role", message.role}, {"content", message.content}});
  }
  Json out{{"id", id}, {"version", version}, {"messages", std::move(messages)}};
  if (!example_block.empty()) out["examples"] = example_block;
  return out;
}

namespace {

PromptTemplate make(const std::string& id, std::vector<ChatMessage> skeleton,
                    std::string examples = {}) {
  PromptTemplate tpl;
  tpl.id = id;
  tpl.version = "1";
  tpl.skeleton = std::move(skeleton);
  tpl.example_block = std::move(examples);
  return tpl;
}

constexpr const char* kContentFormat =
    "Use one line per item, in this exact format:\n"
    "ID k: tag <box>[[x1, y1, x2, y2]]</box>   (an entity instance)\n"
    "ID k: attribute text                      (an attribute of instance k)\n"
    "ID j -> ID k: relation text               (a relation from j to k)\n"
    "Global: global state text                 (whole-image state)\n"
    "Coordinates are integers in [0, 1000). Emit nothing else.";

}  // namespace

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;

  lib.put(make(
      "extraction",
      {{"system",
        std::string("You extract semantic content from panoptic image captions. "
                    "List every entity instance with its semantic tag and "
                    "bounding box, then every attribute, relation, and global "
                    "image state mentioned in the caption.\n") +
            kContentFormat + "\n{examples}",
        std::nullopt},
       {"user", "Caption:\n{caption}", std::nullopt}},
      "Example caption:\n"
      "a brown dog <box>[[100, 200, 500, 600]]</box> chases a red ball "
      "<box>[[600, 620, 700, 720]]</box> at dusk\n"
      "Example output:\n"
      "ID 1: dog <box>[[100, 200, 500, 600]]</box>\n"
      "ID 2: ball <box>[[600, 620, 700, 720]]</box>\n"
      "ID 1: is brown\n"
      "ID 2: is red\n"
      "ID 1 -> ID 2: chases\n"
      "Global: the scene is at dusk"));

  lib.put(make(
      "extraction_repair",
      {{"system",
        std::string("Your previous extraction could not be parsed. Re-emit the "
                    "full item list, fixing the problem.\n") +
            kContentFormat,
        std::nullopt},
       {"user",
        "Caption:\n{caption}\n\nYour previous output:\n{reply}\n\n"
        "Parser error: {error}\n\nCorrected output:",
        std::nullopt}}));

  lib.put(make(
      "judge",
      {{"system",
        "You verify statements against a caption. Judge only from the caption "
        "text. Answer with exactly one word: Yes or No.\n{examples}",
        std::nullopt},
       {"user", "Caption:\n{caption}\n\nQuestion: {question}\nAnswer:",
        std::nullopt}},
      "Example: for the caption \"a brown dog\" and the question \"Is ID 1 "
      "brown?\" where ID 1 is the dog, answer Yes. For \"Is ID 1 green?\" "
      "answer No."));

  lib.put(make(
      "question_negation",
      {{"system",
        "Rewrite the verification question so that it asserts a minimally "
        "contradicting fact (for example a different color or a reversed "
        "relation). Keep every instance ID unchanged. Reply with the rewritten "
        "question only.",
        std::nullopt},
       {"user", "Question: {question}", std::nullopt}}));

  lib.put(make("chain_stage_1",
               {{"user", "Please localize all entities in this image",
                 std::nullopt}}));
  lib.put(make("chain_stage_2",
               {{"user",
                 "Please specify the semantic tags of all entities based on "
                 "their bounding boxes: {localization_text}",
                 std::nullopt}}));
  lib.put(make("chain_stage_3",
               {{"user",
                 "Please specify missing entities and their locations for this "
                 "image based on these specified entities: {instance_text}",
                 std::nullopt}}));
  lib.put(make("chain_stage_4",
               {{"user",
                 "Please provide a hyper-detailed description for this image, "
                 "including all entities, their locations, attributes, and "
                 "relationships, as well as the global image state, based on "
                 "boxes and tags: {instance_text}",
                 std::nullopt}}));

  lib.put(make("engine_caption",
               {{"user",
                 "Please provide a hyper-detailed description for this image, "
                 "including all entities, their locations, attributes, and "
                 "relationships, as well as the global image state, based on "
                 "boxes and tags: {instance_text}. Reference each entity with "
                 "its box in the form tag <box>[[x1, y1, x2, y2]]</box>.",
                 std::nullopt}}));

  return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib = builtin();
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw PancapError(Errc::io_error,
                      "prompt directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) {
      throw PancapError(Errc::io_error, "cannot open " + file.string());
    }
    Json doc = Json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
      throw PancapError(Errc::parse_error, "invalid JSON in " + file.string());
    }
    lib.put(PromptTemplate::from_json(doc));
  }
  return lib;
}

const PromptTemplate& PromptLibrary::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw PancapError(Errc::config_error, "no prompt template '" + id + "'");
  }
  return it->second;
}

void PromptLibrary::put(PromptTemplate tpl) {
  templates_[tpl.id] = std::move(tpl);
}

Json PromptLibrary::versions() const {
  Json out = Json::object();
  for (const auto& [id, tpl] : templates_) out[id] = tpl.version;
  return out;
}

}  // namespace pancap
