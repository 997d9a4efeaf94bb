#include "pancap/gateway.hpp"

#include <cstdlib>
#include <fstream>

#include <httplib.h>

#include "pancap/caption.hpp"
#include "pancap/text_util.hpp"

namespace pancap {

namespace {

// "http://host:port/path" -> ("http://host:port", "/path")
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  std::size_t scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw PancapError(Errc::config_error,
                      "endpoint '" + endpoint + "' has no scheme");
  }
  std::size_t path = endpoint.find('/', scheme + 3);
  if (path == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path), endpoint.substr(path)};
}

void apply_timeouts(httplib::Client& client, double seconds) {
  auto usec = static_cast<time_t>(seconds * 1e6);
  client.set_connection_timeout(usec / 1000000, usec % 1000000);
  client.set_read_timeout(usec / 1000000, usec % 1000000);
  client.set_write_timeout(usec / 1000000, usec % 1000000);
}

httplib::Headers auth_headers(const ProviderProfile& profile) {
  httplib::Headers headers;
  if (!profile.auth_env.empty()) {
    const char* key = std::getenv(profile.auth_env.c_str());
    if (key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  return headers;
}

// Maps an HTTP outcome to the error taxonomy; returns the body on success.
std::string check_response(const httplib::Result& res, const std::string& base) {
  if (!res) {
    throw PancapError(Errc::timeout, "no response from " + base);
  }
  if (res->status == 401 || res->status == 403) {
    throw PancapError(Errc::auth_failure,
                      "status " + std::to_string(res->status) + " from " + base);
  }
  if (res->status == 429) {
    throw PancapError(Errc::rate_limited, "status 429 from " + base);
  }
  if (res->status >= 500) {
    throw PancapError(Errc::timeout, "server error " +
                                         std::to_string(res->status) + " from " +
                                         base);
  }
  if (res->status != 200) {
    throw PancapError(Errc::malformed_response,
                      "status " + std::to_string(res->status) + " from " + base);
  }
  return res->body;
}

void ensure_scheme_supported(const std::string& endpoint) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (endpoint.rfind("https://", 0) == 0) {
    throw PancapError(Errc::config_error,
                      "built without TLS support; use an http:// endpoint");
  }
#else
  (void)endpoint;
#endif
}

}  // namespace

void ProviderProfile::validate() const {
  if (endpoint.empty()) {
    throw PancapError(Errc::config_error, "profile '" + name + "' has no endpoint");
  }
  if (max_in_flight < 1) {
    throw PancapError(Errc::config_error, "max_in_flight must be >= 1");
  }
  if (backoff.max_retries < 0) {
    throw PancapError(Errc::config_error, "retry budget must be >= 0");
  }
  if (timeout_seconds <= 0.0) {
    throw PancapError(Errc::config_error, "timeout must be positive");
  }
}

ProviderProfile ProviderProfile::from_json(const Json& doc) {
  ProviderProfile profile;
  profile.name = doc.value("name", profile.name);
  profile.endpoint = doc.value("endpoint", profile.endpoint);
  profile.model = doc.value("model", profile.model);
  profile.auth_env = doc.value("auth_env", profile.auth_env);
  profile.max_in_flight = doc.value("max_in_flight", profile.max_in_flight);
  profile.timeout_seconds = doc.value("timeout_seconds", profile.timeout_seconds);
  profile.temperature = doc.value("temperature", profile.temperature);
  profile.multimodal = doc.value("multimodal", profile.multimodal);
  if (doc.contains("backoff")) {
    const Json& b = doc.at("backoff");
    profile.backoff.max_retries = b.value("max_retries", profile.backoff.max_retries);
    profile.backoff.initial_delay_ms =
        b.value("initial_delay_ms", profile.backoff.initial_delay_ms);
    profile.backoff.multiplier = b.value("multiplier", profile.backoff.multiplier);
    profile.backoff.max_delay_ms =
        b.value("max_delay_ms", profile.backoff.max_delay_ms);
  }
  profile.validate();
  return profile;
}

Json ProviderProfile::to_json() const {
  return Json{{"name", name},
              {"endpoint", endpoint},
              {"model", model},
              {"auth_env", auth_env},
              {"max_in_flight", max_in_flight},
              {"timeout_seconds", timeout_seconds},
              {"temperature", temperature},
              {"multimodal", multimodal},
              {"backoff",
               Json{{"max_retries", backoff.max_retries},
                    {"initial_delay_ms", backoff.initial_delay_ms},
                    {"multiplier", backoff.multiplier},
                    {"max_delay_ms", backoff.max_delay_ms}}}};
}

std::vector<ProviderProfile> load_profiles(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw PancapError(Errc::io_error, "cannot open profile file " + file.string());
  }
  Json doc = Json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw PancapError(Errc::parse_error,
                      "profile file must be a JSON array: " + file.string());
  }
  std::vector<ProviderProfile> profiles;
  for (const auto& entry : doc) profiles.push_back(ProviderProfile::from_json(entry));
  return profiles;
}

bool transient_error(Errc code) {
  return code == Errc::timeout || code == Errc::rate_limited;
}

RateLimiter::RateLimiter(int max_in_flight) : slots_(max_in_flight) {
  if (max_in_flight < 1) {
    throw PancapError(Errc::config_error, "rate limiter needs >= 1 slot");
  }
}

void RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  available_.wait(lock, [this] { return slots_ > 0; });
  --slots_;
}

void RateLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    ++slots_;
  }
  available_.notify_one();
}

RateLimiter::Guard::Guard(RateLimiter& limiter) : limiter_(limiter) {
  limiter_.acquire();
}

RateLimiter::Guard::~Guard() { limiter_.release(); }

HttpChatProvider::HttpChatProvider(ProviderProfile profile)
    : profile_(std::move(profile)),
      limiter_(std::make_shared<RateLimiter>(profile_.max_in_flight)) {
  profile_.validate();
  ensure_scheme_supported(profile_.endpoint);
}

std::string HttpChatProvider::complete(const std::vector<ChatMessage>& messages) {
  auto [base, path] = split_endpoint(profile_.endpoint);

  Json body;
  body["model"] = profile_.model;
  body["temperature"] = profile_.temperature;
  Json rendered = Json::array();
  for (const auto& message : messages) {
    Json entry;
    entry["role"] = message.role;
    if (message.image && profile_.multimodal) {
      entry["content"] = Json::array(
          {Json{{"type", "text"}, {"text", message.content}},
           Json{{"type", "image_url"},
                {"image_url", Json{{"url", *message.image}}}}});
    } else {
      entry["content"] = message.content;
    }
    rendered.push_back(std::move(entry));
  }
  body["messages"] = std::move(rendered);
  std::string payload = body.dump();

  return retry_with_backoff(profile_.backoff, [&entry_base = base,
                                               &entry_path = path, &payload,
                                               this]() -> std::string {
    RateLimiter::Guard guard(*limiter_);
    httplib::Client client(entry_base);
    apply_timeouts(client, profile_.timeout_seconds);
    auto res = client.Post(entry_path, auth_headers(profile_), payload,
                           "application/json");
    std::string reply_body = check_response(res, entry_base);
    Json reply = Json::parse(reply_body, nullptr, /*allow_exceptions=*/false);
    if (reply.is_discarded()) {
      throw PancapError(Errc::malformed_response,
                        "reply is not JSON from " + entry_base);
    }
    try {
      return reply.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const Json::exception&) {
      throw PancapError(Errc::malformed_response,
                        "reply lacks choices[0].message.content");
    }
  });
}

HttpEmbeddingProvider::HttpEmbeddingProvider(ProviderProfile profile)
    : profile_(std::move(profile)),
      limiter_(std::make_shared<RateLimiter>(profile_.max_in_flight)) {
  profile_.validate();
  ensure_scheme_supported(profile_.endpoint);
}

std::vector<double> HttpEmbeddingProvider::embed(const std::string& text) {
  if (trim_view(text).empty()) {
    throw PancapError(Errc::embedding_unavailable, "cannot embed empty text");
  }
  auto [base, path] = split_endpoint(profile_.endpoint);
  Json body{{"model", profile_.model}, {"input", text}};
  std::string payload = body.dump();

  try {
    return retry_with_backoff(profile_.backoff, [&base, &path, &payload,
                                                 this]() -> std::vector<double> {
      RateLimiter::Guard guard(*limiter_);
      httplib::Client client(base);
      apply_timeouts(client, profile_.timeout_seconds);
      auto res = client.Post(path, auth_headers(profile_), payload,
                             "application/json");
      std::string reply_body = check_response(res, base);
      Json reply = Json::parse(reply_body, nullptr, /*allow_exceptions=*/false);
      if (reply.is_discarded()) {
        throw PancapError(Errc::malformed_response, "reply is not JSON");
      }
      std::vector<double> vector;
      try {
        for (const auto& v : reply.at("data").at(0).at("embedding")) {
          vector.push_back(v.get<double>());
        }
      } catch (const Json::exception&) {
        throw PancapError(Errc::malformed_response,
                          "reply lacks data[0].embedding");
      }
      double norm = 0.0;
      for (double x : vector) norm += x * x;
      if (vector.empty() || norm <= 0.0) {
        throw PancapError(Errc::malformed_response, "embedding is empty or zero");
      }
      norm = std::sqrt(norm);
      for (double& x : vector) x /= norm;
      return vector;
    });
  } catch (const PancapError& err) {
    if (err.code() == Errc::embedding_unavailable) throw;
    throw PancapError(Errc::embedding_unavailable, err.what());
  }
}

CachingEmbedder::CachingEmbedder(std::shared_ptr<EmbeddingProvider> inner,
                                 std::optional<std::filesystem::path> cache_dir)
    : inner_(std::move(inner)), cache_dir_(std::move(cache_dir)) {}

std::vector<double> CachingEmbedder::embed(const std::string& text) {
  {
    std::lock_guard lock(mutex_);
    auto it = memory_.find(text);
    if (it != memory_.end()) return it->second;
  }

  if (cache_dir_) {
    std::filesystem::path file = *cache_dir_ / (fnv1a_hex(text) + ".json");
    std::ifstream in(file);
    if (in) {
      Json doc = Json::parse(in, nullptr, /*allow_exceptions=*/false);
      if (!doc.is_discarded() && doc.value("text", std::string{}) == text) {
        std::vector<double> vector =
            doc.at("vector").get<std::vector<double>>();
        std::lock_guard lock(mutex_);
        memory_[text] = vector;
        return vector;
      }
    }
  }

  std::vector<double> vector = inner_->embed(text);
  {
    std::lock_guard lock(mutex_);
    memory_[text] = vector;
  }
  if (cache_dir_) {
    std::error_code ec;
    std::filesystem::create_directories(*cache_dir_, ec);
    std::ofstream out(*cache_dir_ / (fnv1a_hex(text) + ".json"));
    if (out) {
      out << Json{{"text", text}, {"vector", vector}}.dump();
    }
  }
  return vector;
}

SemanticContent extract_semantic_content(const std::string& caption,
                                         ChatProvider& chat,
                                         const PromptLibrary& prompts) {
  if (trim_view(caption).empty()) return SemanticContent{};

  std::string reply =
      chat.complete(prompts.get("extraction").render({{"caption", caption}}));
  std::string first_error;
  try {
    return parse_semantic_content(reply, /*strict=*/true);
  } catch (const PancapError& err) {
    first_error = err.what();
  }

  try {
    std::string repaired = chat.complete(prompts.get("extraction_repair")
                                             .render({{"caption", caption},
                                                      {"reply", reply},
                                                      {"error", first_error}}));
    return parse_semantic_content(repaired, /*strict=*/true);
  } catch (const PancapError& err) {
    throw PancapError(Errc::extraction_failed,
                      std::string("unparseable after repair: ") + err.what());
  }
}

ChatExtractionProvider::ChatExtractionProvider(
    std::shared_ptr<ChatProvider> chat,
    std::shared_ptr<const PromptLibrary> prompts)
    : chat_(std::move(chat)), prompts_(std::move(prompts)) {}

SemanticContent ChatExtractionProvider::extract(const std::string& caption) {
  return extract_semantic_content(caption, *chat_, *prompts_);
}

ChatJudgeProvider::ChatJudgeProvider(std::shared_ptr<ChatProvider> chat,
                                     std::shared_ptr<const PromptLibrary> prompts)
    : chat_(std::move(chat)), prompts_(std::move(prompts)) {}

JudgeAnswer ChatJudgeProvider::judge(const SemanticItem&,
                                     const std::string& question,
                                     const std::string& caption) {
  try {
    std::string reply = chat_->complete(prompts_->get("judge").render(
        {{"caption", caption}, {"question", question}}));
    return parse_judge_answer(reply);
  } catch (const PancapError& err) {
    throw PancapError(Errc::judge_failed, err.what());
  }
}

ChatQuestionNegator::ChatQuestionNegator(
    std::shared_ptr<ChatProvider> chat,
    std::shared_ptr<const PromptLibrary> prompts)
    : chat_(std::move(chat)), prompts_(std::move(prompts)) {}

std::string ChatQuestionNegator::negate(const SemanticItem&,
                                        const std::string& yes_question) {
  try {
    std::string reply = chat_->complete(prompts_->get("question_negation")
                                            .render({{"question", yes_question}}));
    std::string line = collapse_whitespace(reply);
    if (line.empty()) {
      throw PancapError(Errc::generation_failed, "negator produced no text");
    }
    return line;
  } catch (const PancapError& err) {
    if (err.code() == Errc::generation_failed) throw;
    throw PancapError(Errc::generation_failed, err.what());
  }
}

}  // namespace pancap
