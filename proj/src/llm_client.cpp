#include "smra/llm_client.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "smra/errors.hpp"

namespace smra {

namespace fs = std::filesystem;
using nlohmann::json;

ScriptedClient ScriptedClient::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scripted-client file: " + path);
  json j = json::parse(in);
  std::vector<Rule> rules;
  for (const auto& entry : j) {
    rules.push_back({entry.at("match").get<std::string>(),
                     entry.at("response").get<std::string>()});
  }
  return ScriptedClient(std::move(rules));
}

std::string ScriptedClient::complete(const std::string& /*model_id*/, const std::string& prompt,
                                     double /*temperature*/) {
  for (const auto& rule : rules_) {
    if (prompt.find(rule.match) != std::string::npos) return rule.response;
  }
  throw ClientError("scripted client has no rule matching the prompt");
}

HttpChatClient::HttpChatClient(std::string base_url, std::string api_key, int timeout_s)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_s_(timeout_s) {}

std::string HttpChatClient::complete(const std::string& model_id, const std::string& prompt,
                                     double temperature) {
  httplib::Client client(base_url_);
  client.set_read_timeout(timeout_s_, 0);
  client.set_connection_timeout(timeout_s_, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  json body;
  body["model"] = model_id;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = temperature;

  const auto res = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw ClientError("chat completion request failed: no response from " + base_url_);
  if (res->status != 200) {
    throw ClientError("chat completion request failed: HTTP " + std::to_string(res->status) +
                      ": " + res->body.substr(0, 200));
  }
  try {
    json j = json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ClientError(std::string("malformed chat completion response: ") + e.what());
  }
}

std::string RetryingClient::complete(const std::string& model_id, const std::string& prompt,
                                     double temperature) {
  std::string last_error;
  for (int attempt = 0; attempt < max_attempts_; ++attempt) {
    try {
      return inner_.complete(model_id, prompt, temperature);
    } catch (const ClientError& e) {
      last_error = e.what();
      if (attempt + 1 < max_attempts_ && backoff_ms_ > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms_ << attempt));
      }
    }
  }
  throw ClientError("giving up after " + std::to_string(max_attempts_) + " attempts: " +
                    last_error);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const char c : data) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string response_cache_key(const std::string& model_id, const std::string& template_id,
                               const std::string& instance_id, const std::string& prompt) {
  std::string blob;
  blob.reserve(model_id.size() + template_id.size() + instance_id.size() + prompt.size() + 3);
  blob += model_id;
  blob += '\x1f';
  blob += template_id;
  blob += '\x1f';
  blob += instance_id;
  blob += '\x1f';
  blob += prompt;
  std::ostringstream os;
  os << std::hex << fnv1a64(blob);
  return os.str();
}

ResponseCache::ResponseCache(std::string dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  const auto path = fs::path(dir_) / (key + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    json j = json::parse(in);
    return j.at("response").get<std::string>();
  } catch (const json::exception&) {
    return std::nullopt;  // unreadable entries are treated as misses
  }
}

void ResponseCache::put(const std::string& key, const std::string& model_id,
                        const std::string& template_id, const std::string& instance_id,
                        std::uint64_t prompt_fnv, const std::string& response) const {
  json j;
  j["model_id"] = model_id;
  j["template_id"] = template_id;
  j["instance_id"] = instance_id;
  j["prompt_fnv"] = prompt_fnv;
  j["response"] = response;
  const auto final_path = fs::path(dir_) / (key + ".json");
  const auto tmp_path = fs::path(dir_) / (key + ".json.tmp");
  {
    std::ofstream out(tmp_path);
    if (!out) throw IoError("cannot write cache entry: " + tmp_path.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp_path, final_path);
}

}  // namespace smra
