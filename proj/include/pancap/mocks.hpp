#pragma once

// Deterministic, network-free providers. These are part of the public API:
// the CLI's --mock mode and every downstream test run on them.

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pancap/errors.hpp"
#include "pancap/providers.hpp"

namespace pancap {

// Replies with the content of the last user message, byte-exact.
class EchoChat : public ChatProvider {
 public:
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return "echo"; }
};

// Replays a fixed script. Each step may pin a substring the incoming user
// prompt must contain; a mismatch or an exhausted script is an error so
// tests fail loudly instead of drifting.
class ScriptedChat : public ChatProvider {
 public:
  struct Step {
    std::optional<std::string> expect;  // must appear in the user prompt
    std::string reply;
  };

  ScriptedChat() = default;
  explicit ScriptedChat(std::vector<Step> script) : script_(std::move(script)) {}

  void push(std::string reply) { script_.push_back({std::nullopt, std::move(reply)}); }
  void push(std::string expect, std::string reply) {
    script_.push_back({std::move(expect), std::move(reply)});
  }

  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return "scripted"; }

  // Prompts seen so far, one entry per call (user-role content, joined).
  std::vector<std::string> transcript() const;
  std::size_t calls() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Step> script_;
  std::vector<std::string> transcript_;
  std::size_t next_ = 0;
};

// Decorator that tracks concurrent complete() calls. `delay_ms` holds each
// call open so overlap is observable under stress.
class CountingChat : public ChatProvider {
 public:
  CountingChat(std::shared_ptr<ChatProvider> inner, int delay_ms = 0)
      : inner_(std::move(inner)), delay_ms_(delay_ms) {}

  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return "counting(" + inner_->name() + ")"; }

  int peak_in_flight() const { return peak_.load(); }
  int total_calls() const { return total_.load(); }

 private:
  std::shared_ptr<ChatProvider> inner_;
  int delay_ms_;
  std::atomic<int> current_{0};
  std::atomic<int> peak_{0};
  std::atomic<int> total_{0};
};

// Fails the first `failures` calls with `code`, then delegates.
class FlakyChat : public ChatProvider {
 public:
  FlakyChat(std::shared_ptr<ChatProvider> inner, int failures,
            Errc code = Errc::timeout)
      : inner_(std::move(inner)), remaining_(failures), code_(code) {}

  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string name() const override { return "flaky(" + inner_->name() + ")"; }

  int attempts() const { return attempts_.load(); }

 private:
  std::shared_ptr<ChatProvider> inner_;
  std::atomic<int> remaining_;
  Errc code_;
  std::atomic<int> attempts_{0};
};

// Bag-of-words embedder: lowercase alphanumeric tokens hashed onto fixed
// axes, counts unit-normalized. Texts with disjoint tokens are orthogonal
// (modulo hash collisions); no tokens maps to a reserved axis.
class HashedBowEmbedder : public EmbeddingProvider {
 public:
  explicit HashedBowEmbedder(std::size_t dim = 4096) : dim_(dim) {}
  std::vector<double> embed(const std::string& text) override;

 private:
  std::size_t dim_;
};

// Reads structured captions back exactly: semantic-content line format when
// the text parses as one, otherwise boxed spans from panoptic markup (tags
// only, no items). Plain prose yields empty content.
class OracleExtractionProvider : public ExtractionProvider {
 public:
  SemanticContent extract(const std::string& caption) override;
};

// Answers by literal presence of the item in the caption: structured
// captions are matched field-for-field, prose by normalized substring.
// Questions opening with "Is it false that" are answered with the opposite
// polarity, pairing with MockNegator.
class OracleJudge : public JudgeProvider {
 public:
  JudgeAnswer judge(const SemanticItem& item, const std::string& question,
                    const std::string& caption) override;
};

// Template negation: "Is it false that {claim}?" derived from the
// yes-question. Deterministic stand-in for the generator provider.
class MockNegator : public QuestionNegator {
 public:
  std::string negate(const SemanticItem& item,
                     const std::string& yes_question) override;
};

// True when the item (with instance ids already remapped into the caption's
// id space) is stated by the caption. Shared by OracleJudge and tests.
bool oracle_item_present(const SemanticItem& item, const std::string& caption);

}  // namespace pancap
