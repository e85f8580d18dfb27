#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smra {

// Chat-completion backend: (model id, prompt, temperature) -> text.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::string& model_id, const std::string& prompt,
                               double temperature) = 0;
};

// Offline client answering from substring rules (first match wins). Used
// for scripted runs and tests; no match raises ClientError.
class ScriptedClient : public ChatClient {
 public:
  struct Rule {
    std::string match;     // substring looked up in the rendered prompt
    std::string response;
  };

  explicit ScriptedClient(std::vector<Rule> rules) : rules_(std::move(rules)) {}
  static ScriptedClient from_file(const std::string& path);  // JSON array of rules

  std::string complete(const std::string& model_id, const std::string& prompt,
                       double temperature) override;

 private:
  std::vector<Rule> rules_;
};

// OpenAI-compatible chat completions endpoint. base_url like
// "https://api.openai.com" or an internal gateway; key sent as a Bearer
// token when non-empty.
class HttpChatClient : public ChatClient {
 public:
  HttpChatClient(std::string base_url, std::string api_key, int timeout_s = 120);
  std::string complete(const std::string& model_id, const std::string& prompt,
                       double temperature) override;

 private:
  std::string base_url_;
  std::string api_key_;
  int timeout_s_;
};

// Wraps another client with bounded retries and exponential backoff on
// ClientError. backoff_ms = 0 disables sleeping (tests).
class RetryingClient : public ChatClient {
 public:
  RetryingClient(ChatClient& inner, int max_attempts = 3, int backoff_ms = 250)
      : inner_(inner), max_attempts_(max_attempts), backoff_ms_(backoff_ms) {}
  std::string complete(const std::string& model_id, const std::string& prompt,
                       double temperature) override;

 private:
  ChatClient& inner_;
  int max_attempts_;
  int backoff_ms_;
};

std::uint64_t fnv1a64(std::string_view data);

// Content-addressed key: model id, template id, instance id and the full
// rendered prompt all participate, so editing a template body invalidates
// its cache entries.
std::string response_cache_key(const std::string& model_id, const std::string& template_id,
                               const std::string& instance_id, const std::string& prompt);

// One JSON file per key with atomic writes (temp file + rename).
class ResponseCache {
 public:
  explicit ResponseCache(std::string dir);
  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& model_id, const std::string& template_id,
           const std::string& instance_id, std::uint64_t prompt_fnv,
           const std::string& response) const;
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
};

}  // namespace smra
