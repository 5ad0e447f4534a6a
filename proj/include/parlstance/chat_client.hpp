#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "parlstance/corpus.hpp"
#include "parlstance/error.hpp"
#include "parlstance/hash.hpp"
#include "parlstance/prediction.hpp"
#include "parlstance/prompt.hpp"

namespace parlstance::chat {

/// JSON field names of a chat-completion API. The defaults match the
/// widely used chat-completions schema.
struct ChatAdapter {
  std::string model_field = "model";
  std::string messages_field = "messages";
  std::string temperature_field = "temperature";
  std::string role_field = "role";
  std::string content_field = "content";
  std::string response_pointer = "/choices/0/message/content";

  static ChatAdapter from_json(const nlohmann::json& j) {
    ChatAdapter a;
    a.model_field = j.value("model_field", a.model_field);
    a.messages_field = j.value("messages_field", a.messages_field);
    a.temperature_field = j.value("temperature_field", a.temperature_field);
    a.role_field = j.value("role_field", a.role_field);
    a.content_field = j.value("content_field", a.content_field);
    a.response_pointer = j.value("response_pointer", a.response_pointer);
    return a;
  }
};

struct RetryPolicy {
  std::size_t max_attempts = 4;
  std::vector<std::chrono::milliseconds> backoff = {std::chrono::milliseconds(1000),
                                                    std::chrono::milliseconds(4000),
                                                    std::chrono::milliseconds(16000)};

  std::chrono::milliseconds delay_before(std::size_t attempt) const {
    if (backoff.empty() || attempt == 0) return std::chrono::milliseconds(0);
    return backoff[std::min(attempt - 1, backoff.size() - 1)];
  }
};

struct ChatClientConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-2024-05-13";
  double temperature = 0.0;
  std::size_t max_concurrency = 4;
  std::size_t requests_per_minute = 0;  // 0 = unlimited
  RetryPolicy retry;
  std::chrono::milliseconds timeout = std::chrono::milliseconds(60000);
  std::string api_key_env = "OPENAI_API_KEY";
  std::string cache_dir = "llm_cache";
  ChatAdapter adapter;

  void validate() const {
    if (retry.max_attempts < 1) throw ConfigError("retry max_attempts must be at least 1");
    if (max_concurrency < 1) throw ConfigError("max_concurrency must be at least 1");
    if (model.empty()) throw ConfigError("model identifier is empty");
  }

  static ChatClientConfig from_json(const nlohmann::json& j) {
    ChatClientConfig c;
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
    if (j.contains("retry")) {
      const auto& r = j.at("retry");
      c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
      if (r.contains("backoff_ms")) {
        c.retry.backoff.clear();
        for (const auto& ms : r.at("backoff_ms"))
          c.retry.backoff.emplace_back(ms.get<std::int64_t>());
      }
    }
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", c.timeout.count()));
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    if (j.contains("adapter")) c.adapter = ChatAdapter::from_json(j.at("adapter"));
    c.validate();
    return c;
  }
};

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  double temperature = 0.0;
};

inline nlohmann::ordered_json request_body(const ChatRequest& req, const ChatAdapter& a) {
  nlohmann::ordered_json body;
  body[a.model_field] = req.model;
  body[a.messages_field] = nlohmann::ordered_json::array(
      {{{a.role_field, "system"}, {a.content_field, req.system}},
       {{a.role_field, "user"}, {a.content_field, req.user}}});
  body[a.temperature_field] = req.temperature;
  return body;
}

inline std::optional<std::string> response_text(const nlohmann::json& body, const ChatAdapter& a) {
  nlohmann::json::json_pointer ptr(a.response_pointer);
  if (!body.contains(ptr)) return std::nullopt;
  const auto& v = body.at(ptr);
  if (!v.is_string()) return std::nullopt;
  return v.get<std::string>();
}

struct ChatReply {
  enum class Status { ok, retryable, auth_failure, fatal };
  Status status = Status::ok;
  std::string text;
  std::string detail;
};

class ChatTransport {
public:
  virtual ~ChatTransport() = default;
  virtual ChatReply send(const ChatRequest& request) = 0;
};

/// HTTP(S) transport. A fresh connection per request keeps the transport
/// usable from several worker threads at once.
class HttpChatTransport final : public ChatTransport {
public:
  HttpChatTransport(ChatClientConfig config, std::string api_key)
      : config_(std::move(config)), api_key_(std::move(api_key)) {
    auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos)
      throw ConfigError("endpoint '" + config_.endpoint + "' lacks a scheme");
    auto path_start = config_.endpoint.find('/', scheme_end + 3);
    origin_ = config_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
  }

  ChatReply send(const ChatRequest& request) override {
    httplib::Client client(origin_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto body = request_body(request, config_.adapter).dump();
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res)
      return {ChatReply::Status::retryable, {}, "transport error: " + httplib::to_string(res.error())};
    if (res->status == 401 || res->status == 403)
      return {ChatReply::Status::auth_failure, {}, "HTTP " + std::to_string(res->status)};
    if (res->status == 429 || res->status >= 500)
      return {ChatReply::Status::retryable, {}, "HTTP " + std::to_string(res->status)};
    if (res->status != 200)
      return {ChatReply::Status::fatal, {}, "HTTP " + std::to_string(res->status) + ": " + res->body};
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      return {ChatReply::Status::fatal, {}, "response body is not JSON"};
    }
    auto text = response_text(parsed, config_.adapter);
    if (!text)
      return {ChatReply::Status::fatal, {}, "response lacks " + config_.adapter.response_pointer};
    return {ChatReply::Status::ok, *text, {}};
  }

private:
  ChatClientConfig config_;
  std::string api_key_;
  std::string origin_;
  std::string path_;
};

/// Content-addressed response store: <dir>/<hh>/<sha256>.json, keyed by the
/// hash of the exact request body and endpoint.
class ResponseCache {
public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static std::string key(const ChatRequest& req, const ChatClientConfig& cfg) {
    nlohmann::ordered_json k;
    k["endpoint"] = cfg.endpoint;
    k["body"] = request_body(req, cfg.adapter);
    return sha256_hex(k.dump());
  }

  std::optional<std::string> get(const std::string& key) const {
    auto p = path_for(key);
    std::error_code ec;
    if (!std::filesystem::exists(p, ec)) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(read_file(p.string()));
      return j.at("response").get<std::string>();
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void put(const std::string& key, const ChatRequest& req, const ChatClientConfig& cfg,
           const std::string& response) {
    std::lock_guard lock(mutex_);
    auto p = path_for(key);
    std::filesystem::create_directories(p.parent_path());
    nlohmann::ordered_json j;
    j["request"] = request_body(req, cfg.adapter);
    j["response"] = response;
    auto tmp = p;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write cache entry " + tmp.string());
      out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, p);
  }

private:
  std::filesystem::path path_for(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
  }

  std::filesystem::path dir_;
  std::mutex mutex_;
};

/// Spaces request starts so that at most `per_minute` begin in any minute.
class RateLimiter {
public:
  explicit RateLimiter(std::size_t per_minute) : per_minute_(per_minute) {}

  void acquire() {
    if (per_minute_ == 0) return;
    auto interval = std::chrono::microseconds(60'000'000 / per_minute_);
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }

private:
  std::size_t per_minute_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

struct PromptRecipe {
  prompt::PromptFlags flags;
  std::vector<prompt::FewShotExample> shots;  // empty or six
  prompt::PromptTemplates templates;
  std::string model_tag;
};

inline std::string default_model_tag(const ChatClientConfig& cfg, const PromptRecipe& recipe) {
  std::string tag = cfg.model + "-" + std::to_string(recipe.shots.size()) + "shot-text";
  if (recipe.flags.include_party) tag += "+party";
  if (recipe.flags.include_policy) tag += "+policy";
  return tag;
}

struct EvalRun {
  std::vector<PredictionRecord> predictions;  // test-example order
  std::vector<std::string> abstained_ids;     // unparseable responses
  std::vector<std::string> failed_ids;        // retries exhausted
  std::size_t requests_issued = 0;
  std::size_t cache_hits = 0;
};

inline nlohmann::ordered_json to_json(const EvalRun& run) {
  nlohmann::ordered_json j;
  j["examples"] = run.predictions.size();
  j["requests_issued"] = run.requests_issued;
  j["cache_hits"] = run.cache_hits;
  j["abstained_ids"] = run.abstained_ids;
  j["failed_ids"] = run.failed_ids;
  return j;
}

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Sends one prompt per test example. Responses are served from the cache
/// when present. The first uncached request runs alone: if it cannot be
/// completed the run aborts with TransportError. Later failures after
/// exhausting retries mark the example failed and the run continues.
inline EvalRun run_eval(const ChatClientConfig& cfg, ChatTransport& transport,
                        std::span<const DebateExample> test, const PromptRecipe& recipe,
                        SleepFn sleep = [](std::chrono::milliseconds d) {
                          std::this_thread::sleep_for(d);
                        }) {
  cfg.validate();
  ResponseCache cache(cfg.cache_dir);
  RateLimiter limiter(cfg.requests_per_minute);
  const std::string tag = recipe.model_tag.empty() ? default_model_tag(cfg, recipe) : recipe.model_tag;

  struct Slot {
    ChatRequest request;
    std::string key;
    std::optional<std::string> response;
    bool failed = false;
    std::string error;
  };
  std::vector<Slot> slots(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto bundle = prompt::build_prompt(test[i], recipe.shots, recipe.flags, recipe.templates);
    slots[i].request = {cfg.model, bundle.system_text, bundle.user_text, cfg.temperature};
    slots[i].key = ResponseCache::key(slots[i].request, cfg);
  }

  EvalRun run;
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (auto hit = cache.get(slots[i].key)) {
      slots[i].response = *hit;
      ++run.cache_hits;
    } else {
      pending.push_back(i);
    }
  }

  std::atomic<std::size_t> issued{0};
  auto complete = [&](Slot& slot) -> ChatReply::Status {
    ChatReply reply;
    for (std::size_t attempt = 0; attempt < cfg.retry.max_attempts; ++attempt) {
      if (attempt > 0) sleep(cfg.retry.delay_before(attempt));
      limiter.acquire();
      ++issued;
      reply = transport.send(slot.request);
      if (reply.status != ChatReply::Status::retryable) break;
    }
    if (reply.status == ChatReply::Status::ok) {
      cache.put(slot.key, slot.request, cfg, reply.text);
      slot.response = reply.text;
    } else {
      slot.failed = true;
      slot.error = reply.detail;
    }
    return reply.status;
  };

  if (!pending.empty()) {
    auto& first = slots[pending.front()];
    auto status = complete(first);
    if (status != ChatReply::Status::ok)
      throw TransportError("run aborted: first request failed (" + first.error + ")");

    std::atomic<std::size_t> next{1};
    auto worker = [&] {
      for (std::size_t i = next++; i < pending.size(); i = next++) complete(slots[pending[i]]);
    };
    std::size_t n_threads = std::min(cfg.max_concurrency, pending.size() - 1);
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  run.requests_issued = issued.load();

  for (std::size_t i = 0; i < slots.size(); ++i) {
    PredictionRecord rec;
    rec.id = test[i].id;
    rec.model_tag = tag;
    if (slots[i].failed) {
      rec.abstained = true;
      run.failed_ids.push_back(rec.id);
    } else if (auto label = prompt::try_parse_response(*slots[i].response)) {
      rec.label = *label;
      rec.probability = *label == 1 ? 1.0 : 0.0;
    } else {
      rec.abstained = true;
      run.abstained_ids.push_back(rec.id);
    }
    run.predictions.push_back(std::move(rec));
  }
  return run;
}

/// API key from the configured environment variable; empty when unset.
inline std::string api_key_from_env(const ChatClientConfig& cfg) {
  const char* v = std::getenv(cfg.api_key_env.c_str());
  return v ? std::string(v) : std::string();
}

}  // namespace parlstance::chat
