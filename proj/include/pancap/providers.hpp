#pragma once

// Abstract model-provider interfaces. Concrete backends live in gateway.hpp
// (HTTP) and mocks.hpp (deterministic, network-free).

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pancap/core.hpp"

namespace pancap {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
  std::optional<std::string> image;  // opaque reference, multimodal only
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
  virtual std::string name() const = 0;
};

// Vectors are unit L2-normalized, fixed dimension per provider.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
};

class ExtractionProvider {
 public:
  virtual ~ExtractionProvider() = default;
  virtual SemanticContent extract(const std::string& caption) = 0;
};

enum class JudgeAnswer { yes, no, abstain };

// First alphabetic token of the reply, case-insensitive: "yes" / "no",
// anything else abstains.
JudgeAnswer parse_judge_answer(std::string_view reply);

// Answers one verification question against a caption. `item` carries the
// structured fields behind the question so fixture-driven judges can answer
// without parsing the rendered text.
class JudgeProvider {
 public:
  virtual ~JudgeProvider() = default;
  virtual JudgeAnswer judge(const SemanticItem& item, const std::string& question,
                            const std::string& caption) = 0;
};

// Produces the minimally contradicting no-question for a yes-question.
class QuestionNegator {
 public:
  virtual ~QuestionNegator() = default;
  virtual std::string negate(const SemanticItem& item,
                             const std::string& yes_question) = 0;
};

}  // namespace pancap
