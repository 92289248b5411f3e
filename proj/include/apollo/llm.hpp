#pragma once

// Remote detection over an OpenAI-compatible chat-completions endpoint.
//
// The exchange has two phases: the model first names the techniques present,
// then quotes and explains each instance of those techniques. A reply that
// does not parse is retried with a format reminder appended, at most twice
// per phase.

#include <chrono>
#include <cstdlib>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "apollo/annotation.hpp"
#include "apollo/bias.hpp"
#include "apollo/detectors.hpp"
#include "apollo/error.hpp"

namespace apollo {

struct LlmClientConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  std::string api_key_env = "APOLLO_API_KEY";
  bool model_switching = false;
  int max_in_flight = 4;
  int timeout_seconds = 60;
  int transport_retries = 2;
  int retry_backoff_ms = 250;
  int format_retries = 2;
  double temperature = 0.0;
  std::size_t char_budget = kDefaultCharBudget;
};

/// Sends one chat-completion request and returns the assistant's content.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const std::string& model, const std::vector<ChatMessage>& messages) = 0;
};

inline nlohmann::json chat_request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                                        double temperature) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return nlohmann::json{{"model", model}, {"messages", msgs}, {"temperature", temperature}};
}

/// Extracts choices[0].message.content from a chat-completions response.
inline std::string chat_response_content(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw TransportError("chat-completions response is not JSON");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("unexpected chat-completions response shape: ") + e.what());
  }
}

class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(LlmClientConfig config)
      : config_(std::move(config)), in_flight_(std::max(1, config_.max_in_flight)) {
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("llm base_url needs a scheme: " + config_.base_url);
    const auto path_begin = config_.base_url.find('/', scheme_end + 3);
    origin_ = config_.base_url.substr(0, path_begin);
    path_prefix_ = path_begin == std::string::npos ? "" : config_.base_url.substr(path_begin);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }

  std::string complete(const std::string& model, const std::vector<ChatMessage>& messages) override {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw TransportError("credential environment variable " + config_.api_key_env + " is not set");

    const std::string body = chat_request_body(model, messages, config_.temperature).dump();
    const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    in_flight_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{in_flight_};

    std::string last_error;
    int last_status = 0;
    for (int attempt = 0; attempt <= config_.transport_retries; ++attempt) {
      if (attempt > 0 && config_.retry_backoff_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.retry_backoff_ms << (attempt - 1)));
      }
      httplib::Client client(origin_);
      client.set_connection_timeout(config_.timeout_seconds, 0);
      client.set_read_timeout(config_.timeout_seconds, 0);
      client.set_write_timeout(config_.timeout_seconds, 0);
      auto res = client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
      if (!res) {
        last_error = "request to " + origin_ + " failed: " + httplib::to_string(res.error());
        last_status = 0;
        continue;
      }
      if (res->status == 200) return chat_response_content(res->body);
      last_status = res->status;
      last_error = "chat-completions endpoint answered HTTP " + std::to_string(res->status);
      const bool retryable = res->status == 429 || res->status >= 500;
      if (!retryable) break;
    }
    throw TransportError(last_error, last_status);
  }

 private:
  LlmClientConfig config_;
  std::counting_semaphore<> in_flight_;
  std::string origin_;
  std::string path_prefix_;
};

struct LlmAnalysis {
  std::vector<Technique> techniques;  // phase 1
  ParsedOutput output;                // phase 2
  int identification_attempts = 0;
  int explanation_attempts = 0;

  int attempts() const noexcept { return std::max(identification_attempts, explanation_attempts); }
};

namespace detail {

/// Sends `messages`, re-asking with a format reminder while `parse` throws
/// MalformedOutput. Returns the parse result; `attempts` receives the count.
template <typename Parse>
auto exchange_with_retries(ChatTransport& transport, const std::string& model, std::vector<ChatMessage> messages,
                           int format_retries, Parse&& parse, int& attempts, std::string* accepted_reply = nullptr) {
  attempts = 0;
  for (;;) {
    ++attempts;
    std::string reply = transport.complete(model, messages);
    try {
      auto parsed = parse(reply);
      if (accepted_reply) *accepted_reply = std::move(reply);
      return parsed;
    } catch (const MalformedOutput& e) {
      if (attempts > format_retries) throw MalformedOutput(e.what(), attempts);
      messages.push_back({"assistant", std::move(reply)});
      messages.push_back({"user", format_reminder()});
    }
  }
}

}  // namespace detail

/// Two-phase remote analysis of one article (no chunking; an article over
/// the character budget is BodyTooLarge).
inline LlmAnalysis llm_analyze(const Article& article, const PersonaDirective* persona, const LlmClientConfig& config,
                               ChatTransport& transport, const std::string& model) {
  LlmAnalysis result;
  const PromptDocument prompt = build_identification_prompt(article, persona, config.char_budget);
  std::vector<ChatMessage> messages = prompt.messages();

  std::string phase1_reply;
  result.techniques = detail::exchange_with_retries(
      transport, model, messages, config.format_retries,
      [](const std::string& reply) { return parse_technique_list(reply); }, result.identification_attempts,
      &phase1_reply);
  if (result.techniques.empty()) return result;

  messages.push_back({"assistant", phase1_reply});
  messages.push_back({"user", build_explanation_request(result.techniques)});
  result.output = detail::exchange_with_retries(
      transport, model, std::move(messages), config.format_retries,
      [](const std::string& reply) { return parse_llm_output(reply); }, result.explanation_attempts);
  return result;
}

inline LlmAnalysis llm_analyze(const Article& article, const PersonaDirective* persona, const LlmClientConfig& config,
                               ChatTransport& transport) {
  return llm_analyze(article, persona, config, transport, config.model);
}

/// Chat-completion provider. Long articles are split at paragraph boundaries
/// and each chunk analyzed separately.
class LlmProvider final : public DetectionProvider {
 public:
  LlmProvider(LlmClientConfig config, std::shared_ptr<ChatTransport> transport)
      : config_(std::move(config)), transport_(std::move(transport)) {}

  explicit LlmProvider(LlmClientConfig config)
      : LlmProvider(config, std::make_shared<HttpChatTransport>(config)) {}

  std::string id() const override { return "llm"; }
  ProviderCapabilities capabilities() const override { return {true, false, config_.model_switching}; }
  std::string default_model() const override { return config_.model; }

  ProviderResult detect(const Article& article, const PersonaDirective* persona, const std::string& model) override {
    const std::string& use_model = config_.model_switching && !model.empty() ? model : config_.model;
    ProviderResult result;
    result.attempts = 0;
    for (auto& chunk : chunk_paragraphs(article.body, config_.char_budget)) {
      const Article part(article.id, chunk.text, article.title, article.source_url);
      LlmAnalysis a = llm_analyze(part, persona, config_, *transport_, use_model);
      result.attempts = std::max(result.attempts, a.attempts());
      for (auto& rej : a.output.rejected) {
        auto field = [&](const char* key) {
          return rej.entry.is_object() && rej.entry.contains(key) && rej.entry[key].is_string()
                     ? rej.entry[key].get<std::string>()
                     : std::string{};
        };
        RawDetection raw{rej.entry.is_object() ? field("statement") : rej.entry.dump(), field("technique"),
                         field("explanation"), std::nullopt};
        result.rejected.push_back({std::move(raw), rej.reason});
      }
      result.parts.push_back(ProviderPart{chunk.offset, std::move(chunk.text), std::move(a.output.detections)});
    }
    return result;
  }

  const LlmClientConfig& config() const noexcept { return config_; }

 private:
  LlmClientConfig config_;
  std::shared_ptr<ChatTransport> transport_;
};

}  // namespace apollo
