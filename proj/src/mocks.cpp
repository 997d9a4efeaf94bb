#include "pancap/mocks.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "pancap/caption.hpp"
#include "pancap/text_util.hpp"

namespace pancap {

namespace {

std::string joined_user_content(const std::vector<ChatMessage>& messages) {
  std::string joined;
  for (const auto& message : messages) {
    if (message.role != "user") continue;
    if (!joined.empty()) joined += '\n';
    joined += message.content;
  }
  return joined;
}

}  // namespace

std::string EchoChat::complete(const std::vector<ChatMessage>& messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return messages.empty() ? std::string{} : messages.back().content;
}

std::string ScriptedChat::complete(const std::vector<ChatMessage>& messages) {
  std::string prompt = joined_user_content(messages);
  std::lock_guard lock(mutex_);
  if (next_ >= script_.size()) {
    throw PancapError(Errc::malformed_response,
                      "script exhausted after " + std::to_string(script_.size()) +
                          " replies; prompt was: " + prompt);
  }
  const Step& step = script_[next_];
  if (step.expect && prompt.find(*step.expect) == std::string::npos) {
    throw PancapError(Errc::malformed_response,
                      "step " + std::to_string(next_ + 1) + " expected \"" +
                          *step.expect + "\" in prompt: " + prompt);
  }
  ++next_;
  transcript_.push_back(std::move(prompt));
  return step.reply;
}

std::vector<std::string> ScriptedChat::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

std::size_t ScriptedChat::calls() const {
  std::lock_guard lock(mutex_);
  return next_;
}

std::string CountingChat::complete(const std::vector<ChatMessage>& messages) {
  struct Scope {
    std::atomic<int>& counter;
    ~Scope() { --counter; }
  };
  int current = ++current_;
  Scope scope{current_};
  int peak = peak_.load();
  while (peak < current && !peak_.compare_exchange_weak(peak, current)) {
  }
  ++total_;
  if (delay_ms_ > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
  }
  return inner_->complete(messages);
}

std::string FlakyChat::complete(const std::vector<ChatMessage>& messages) {
  ++attempts_;
  if (remaining_.fetch_sub(1) > 0) {
    throw PancapError(code_, "injected failure");
  }
  return inner_->complete(messages);
}

std::vector<double> HashedBowEmbedder::embed(const std::string& text) {
  std::vector<double> vector(dim_, 0.0);
  bool any = false;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t begin = i;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    if (i == begin) continue;
    std::string token = to_lower(std::string_view(text).substr(begin, i - begin));
    vector[fnv1a_64(token) % dim_] += 1.0;
    any = true;
  }
  if (!any) {
    vector[0] = 1.0;
    return vector;
  }
  double norm = 0.0;
  for (double x : vector) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : vector) x /= norm;
  return vector;
}

SemanticContent OracleExtractionProvider::extract(const std::string& caption) {
  try {
    return parse_semantic_content(caption, /*strict=*/true);
  } catch (const PancapError&) {
  }
  if (caption.find("<box>") != std::string::npos) {
    SemanticContent content;
    content.instances = parse_caption(caption, /*strict=*/false).instances();
    return content;
  }
  return SemanticContent{};
}

bool oracle_item_present(const SemanticItem& item, const std::string& caption) {
  SemanticContent content;
  bool structured = true;
  try {
    content = parse_semantic_content(caption, /*strict=*/true);
  } catch (const PancapError&) {
    structured = false;
  }
  if (structured && (!content.instances.empty() || !content.items.empty())) {
    std::string wanted = normalize_text(item.text);
    for (const auto& candidate : content.items) {
      if (candidate.dim != item.dim) continue;
      if (candidate.subject != item.subject || candidate.object != item.object) {
        continue;
      }
      if (normalize_text(candidate.text) == wanted) return true;
    }
    return false;
  }
  return normalize_text(caption).find(normalize_text(item.text)) !=
         std::string::npos;
}

JudgeAnswer OracleJudge::judge(const SemanticItem& item,
                               const std::string& question,
                               const std::string& caption) {
  bool negated =
      starts_with_ci(trim_view(question), std::string_view("Is it false that"));
  bool truth = oracle_item_present(item, caption);
  if (negated) truth = !truth;
  return truth ? JudgeAnswer::yes : JudgeAnswer::no;
}

std::string MockNegator::negate(const SemanticItem&,
                                const std::string& yes_question) {
  std::string question{trim_view(yes_question)};
  if (starts_with_ci(question, "Is it true that ")) {
    return "Is it false that " + question.substr(16);
  }
  if (starts_with_ci(question, "Is ")) {
    return "Is it false that " + question.substr(3);
  }
  return "Is it false that " + question;
}

}  // namespace pancap
