#pragma once

// Versioned prompt templates: role-tagged message skeletons with {name}
// placeholders. Compiled-in defaults can be overridden per-template by JSON
// files in a prompt directory.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pancap/core.hpp"
#include "pancap/providers.hpp"

namespace pancap {

struct PromptTemplate {
  std::string id;
  std::string version;
  std::vector<ChatMessage> skeleton;
  std::string example_block;  // available to the skeleton as {examples}

  // Substitutes {name} placeholders; "{{"/"}}" escape literal braces. A
  // placeholder with no value is an UnfilledPlaceholder error.
  std::vector<ChatMessage> render(
      const std::map<std::string, std::string>& values) const;

  static PromptTemplate from_json(const Json& doc);
  Json to_json() const;
};

class PromptLibrary {
 public:
  // The compiled-in template set.
  static PromptLibrary builtin();
  // builtin() plus overrides from every *.json file in dir.
  static PromptLibrary load(const std::filesystem::path& dir);

  const PromptTemplate& get(const std::string& id) const;
  bool has(const std::string& id) const { return templates_.count(id) > 0; }
  void put(PromptTemplate tpl);

  // id -> version map recorded in reports.
  Json versions() const;

 private:
  std::map<std::string, PromptTemplate> templates_;
};

}  // namespace pancap
