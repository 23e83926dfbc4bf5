#pragma once

// Client for OpenAI-compatible chat-completion and embedding endpoints.
//
// Requests go through a Transport. The HTTP transport talks to real servers;
// the fixture transport replays content-addressed recordings so whole
// pipeline runs can execute offline and bit-reproducibly.

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/model.hpp"
#include "core/serialize.hpp"

namespace policysimp {

struct EndpointProfile {
  std::string model_name;
  std::string base_url;        // e.g. http://localhost:8000
  std::string api_key_env;     // name of the env var holding the key; may be empty
  DecodeParams decode;
  double request_timeout = 120.0;  // seconds
  int max_retries = 3;
  int concurrency_limit = 4;
  double backoff_initial = 0.5;    // seconds, doubled per retry

  void validate() const;
};

EndpointProfile endpoint_profile_from_json(const Json& j, const EndpointProfile& defaults = {});
Json to_json(const EndpointProfile& p);

struct PromptBundle {
  std::string system;
  // Few-shot demonstrations as (user, assistant) turns.
  std::vector<std::pair<std::string, std::string>> shots;
  std::string user;
  // Sent as chat_template_kwargs.enable_thinking when set.
  std::optional<bool> enable_thinking;

  bool empty() const noexcept { return system.empty() && shots.empty() && user.empty(); }
  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

struct ChatExchange {
  PromptBundle request;
  DecodeParams decode;
  std::string response_text;
  std::optional<std::string> reasoning_text;
  double latency_ms = 0.0;
  std::string endpoint;
  int attempts = 0;  // 0 when served from the response cache
};

/// Splits "<think>r</think>answer" into {answer, r}. Text without a closing
/// marker is returned unchanged with no reasoning.
std::pair<std::string, std::optional<std::string>> split_reasoning(std::string_view text);

/// The request body sent to /v1/chat/completions.
Json chat_request_body(const EndpointProfile& profile, const PromptBundle& prompt);
Json embed_request_body(const EndpointProfile& profile, const std::vector<std::string>& texts);

/// SHA-256 over model name and the canonical (sorted-key) request body.
std::string request_key(std::string_view model, const Json& body);

struct HttpResponse {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // `attempt` counts from 0. Network-level failures throw Error(Transport).
  virtual HttpResponse post(const EndpointProfile& profile, const std::string& path,
                            const Json& body, int attempt) = 0;
};

class HttpTransport : public Transport {
 public:
  HttpResponse post(const EndpointProfile& profile, const std::string& path, const Json& body,
                    int attempt) override;
};

// Fixture layout: <dir>/<request_key>.json holding
//   {"model": ..., "path": ..., "request": {...},
//    "responses": [{"status": 200, "body": {...}} | {"status": 0, "error": "..."}]}
// Attempt n is served responses[min(n, last)]; status 0 simulates a network
// failure.
class FixtureTransport : public Transport {
 public:
  explicit FixtureTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}
  HttpResponse post(const EndpointProfile& profile, const std::string& path, const Json& body,
                    int attempt) override;

 private:
  std::filesystem::path dir_;
};

// Forwards to another transport and writes what it saw in fixture layout.
class RecordingTransport : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path dir);
  HttpResponse post(const EndpointProfile& profile, const std::string& path, const Json& body,
                    int attempt) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, Json> recorded_;
};

// Counting semaphore used to cap in-flight requests per endpoint.
class Limiter {
 public:
  explicit Limiter(int limit) : available_(limit) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

struct GatewayStats {
  long endpoint_calls = 0;  // transport round trips, retries included
  long cache_hits = 0;
  long retries = 0;
};

class Gateway {
 public:
  // Successful responses are stored under `cache_dir` (when non-empty) and
  // reused on identical requests.
  explicit Gateway(std::shared_ptr<Transport> transport, std::filesystem::path cache_dir = {});

  ChatExchange chat(const EndpointProfile& profile, const PromptBundle& prompt);
  std::vector<std::vector<double>> embed(const EndpointProfile& profile,
                                         const std::vector<std::string>& texts);

  GatewayStats stats() const;
  void set_sleeper(std::function<void(double seconds)> sleeper) { sleeper_ = std::move(sleeper); }

 private:
  Json request(const EndpointProfile& profile, const std::string& path, const Json& body,
               int& attempts);
  Limiter& limiter_for(const EndpointProfile& profile);

  std::shared_ptr<Transport> transport_;
  std::filesystem::path cache_dir_;
  std::function<void(double)> sleeper_;
  std::mutex limiters_mu_;
  std::map<std::string, std::unique_ptr<Limiter>> limiters_;
  std::atomic<long> endpoint_calls_{0};
  std::atomic<long> cache_hits_{0};
  std::atomic<long> retries_{0};
};

}  // namespace policysimp
