#pragma once

// Networked provider backends: profiles, retry with exponential backoff,
// in-flight rate limiting, embedding cache, and the chat/embed/extract
// operations over the open chat-completion JSON wire shape.

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "pancap/core.hpp"
#include "pancap/prompts.hpp"
#include "pancap/providers.hpp"

namespace pancap {

struct BackoffPolicy {
  int max_retries = 2;  // total attempts = 1 + max_retries
  double initial_delay_ms = 100.0;
  double multiplier = 2.0;
  double max_delay_ms = 2000.0;
};

struct ProviderProfile {
  std::string name = "default";
  std::string endpoint;  // e.g. "http://localhost:8000/v1/chat/completions"
  std::string model;
  std::string auth_env = "PANCAP_LLM_API_KEY";
  int max_in_flight = 4;
  double timeout_seconds = 60.0;
  BackoffPolicy backoff;
  double temperature = 0.0;
  bool multimodal = false;

  void validate() const;  // max_in_flight >= 1, retries >= 0
  static ProviderProfile from_json(const Json& doc);
  Json to_json() const;
};

// JSON array of profiles.
std::vector<ProviderProfile> load_profiles(const std::filesystem::path& file);

// Timeout and RateLimited are transient; everything else aborts the loop.
bool transient_error(Errc code);

// Runs fn up to 1 + policy.max_retries times, sleeping with exponential
// backoff between attempts; rethrows the last error when the budget is spent.
template <typename F>
auto retry_with_backoff(const BackoffPolicy& policy, F&& fn)
    -> decltype(fn()) {
  double delay = policy.initial_delay_ms;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const PancapError& err) {
      if (!transient_error(err.code()) || attempt >= policy.max_retries) {
        throw;
      }
    }
    if (delay > 0.0) {
      std::this_thread::sleep_for(
          std::chrono::duration<double, std::milli>(delay));
    }
    delay = std::min(delay * policy.multiplier, policy.max_delay_ms);
  }
}

// Bounds concurrent in-flight requests. Guard releases on destruction.
class RateLimiter {
 public:
  explicit RateLimiter(int max_in_flight);

  class Guard {
   public:
    explicit Guard(RateLimiter& limiter);
    ~Guard();
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    RateLimiter& limiter_;
  };

 private:
  void acquire();
  void release();

  std::mutex mutex_;
  std::condition_variable available_;
  int slots_;
};

// Chat-completion client for any backend speaking the open JSON interface.
class HttpChatProvider : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderProfile profile);
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return profile_.name; }

 private:
  ProviderProfile profile_;
  std::shared_ptr<RateLimiter> limiter_;
};

// Embeddings client; vectors are re-normalized to unit length on receipt.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(ProviderProfile profile);
  std::vector<double> embed(const std::string& text) override;

 private:
  ProviderProfile profile_;
  std::shared_ptr<RateLimiter> limiter_;
};

// Memoizes an inner embedder by text; optionally persists vectors to a
// content-hash-addressed directory.
class CachingEmbedder : public EmbeddingProvider {
 public:
  explicit CachingEmbedder(std::shared_ptr<EmbeddingProvider> inner,
                           std::optional<std::filesystem::path> cache_dir =
                               std::nullopt);
  std::vector<double> embed(const std::string& text) override;

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::optional<std::filesystem::path> cache_dir_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::vector<double>> memory_;
};

// Renders the extraction prompt, parses the reply, retries once with a repair
// prompt on a parse failure. Empty captions short-circuit to empty content.
SemanticContent extract_semantic_content(const std::string& caption,
                                         ChatProvider& chat,
                                         const PromptLibrary& prompts);

// ExtractionProvider over extract_semantic_content.
class ChatExtractionProvider : public ExtractionProvider {
 public:
  ChatExtractionProvider(std::shared_ptr<ChatProvider> chat,
                         std::shared_ptr<const PromptLibrary> prompts);
  SemanticContent extract(const std::string& caption) override;

 private:
  std::shared_ptr<ChatProvider> chat_;
  std::shared_ptr<const PromptLibrary> prompts_;
};

// JudgeProvider that renders the judging prompt and first-token-parses the
// reply. Provider failures surface as JudgeFailed.
class ChatJudgeProvider : public JudgeProvider {
 public:
  ChatJudgeProvider(std::shared_ptr<ChatProvider> chat,
                    std::shared_ptr<const PromptLibrary> prompts);
  JudgeAnswer judge(const SemanticItem& item, const std::string& question,
                    const std::string& caption) override;

 private:
  std::shared_ptr<ChatProvider> chat_;
  std::shared_ptr<const PromptLibrary> prompts_;
};

// QuestionNegator over the question_negation template.
class ChatQuestionNegator : public QuestionNegator {
 public:
  ChatQuestionNegator(std::shared_ptr<ChatProvider> chat,
                      std::shared_ptr<const PromptLibrary> prompts);
  std::string negate(const SemanticItem& item,
                     const std::string& yes_question) override;

 private:
  std::shared_ptr<ChatProvider> chat_;
  std::shared_ptr<const PromptLibrary> prompts_;
};

}  // namespace pancap
