#include "gateway/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "core/error.hpp"
#include "util/io.hpp"
#include "util/log.hpp"

namespace policysimp {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string canonical_dump(const Json& body) {
  // nlohmann::json keeps object keys sorted, which makes the dump canonical.
  return nlohmann::json::parse(body.dump()).dump();
}

class LimiterGuard {
 public:
  explicit LimiterGuard(Limiter& l) : l_(l) { l_.acquire(); }
  ~LimiterGuard() { l_.release(); }
  LimiterGuard(const LimiterGuard&) = delete;
  LimiterGuard& operator=(const LimiterGuard&) = delete;

 private:
  Limiter& l_;
};

std::string chat_content(const Json& body, std::optional<std::string>& reasoning_field) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() ||
      body["choices"].empty())
    throw Error(ErrorCode::MalformedResponse, "chat response has no choices");
  const Json& choice = body["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object())
    throw Error(ErrorCode::MalformedResponse, "chat response choice has no message");
  const Json& msg = choice["message"];
  if (auto it = msg.find("reasoning_content"); it != msg.end() && it->is_string())
    reasoning_field = it->get<std::string>();
  auto it = msg.find("content");
  if (it == msg.end() || !it->is_string())
    throw Error(ErrorCode::MalformedResponse, "chat response message has no string content");
  return it->get<std::string>();
}

std::vector<std::vector<double>> embedding_vectors(const Json& body, std::size_t expected) {
  if (!body.is_object() || !body.contains("data") || !body["data"].is_array())
    throw Error(ErrorCode::MalformedResponse, "embedding response has no data array");
  const Json& data = body["data"];
  if (data.size() != expected)
    throw Error(ErrorCode::MalformedResponse, "embedding response has " + std::to_string(data.size()) +
                                                  " vectors for " + std::to_string(expected) + " inputs");
  std::vector<std::vector<double>> out(expected);
  std::vector<bool> seen(expected, false);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Json& item = data[n];
    if (!item.is_object() || !item.contains("embedding") || !item["embedding"].is_array())
      throw Error(ErrorCode::MalformedResponse, "embedding item without vector");
    std::size_t idx = n;
    if (auto it = item.find("index"); it != item.end()) {
      if (!it->is_number_unsigned() || it->get<std::size_t>() >= expected)
        throw Error(ErrorCode::MalformedResponse, "embedding item index out of range");
      idx = it->get<std::size_t>();
    }
    if (seen[idx]) throw Error(ErrorCode::MalformedResponse, "duplicate embedding index");
    seen[idx] = true;
    for (const Json& v : item["embedding"]) {
      if (!v.is_number()) throw Error(ErrorCode::MalformedResponse, "non-numeric embedding entry");
      out[idx].push_back(v.get<double>());
    }
  }
  for (const auto& v : out)
    if (v.empty() || v.size() != out.front().size())
      throw Error(ErrorCode::MalformedResponse, "embedding vectors differ in dimension");
  return out;
}

}  // namespace

void EndpointProfile::validate() const {
  if (model_name.empty()) throw Error(ErrorCode::Config, "endpoint profile without model name");
  if (concurrency_limit < 1)
    throw Error(ErrorCode::Config, model_name + ": concurrency_limit must be >= 1");
  if (max_retries < 0) throw Error(ErrorCode::Config, model_name + ": max_retries must be >= 0");
  if (!(request_timeout > 0.0))
    throw Error(ErrorCode::Config, model_name + ": request_timeout must be positive");
  if (backoff_initial < 0.0)
    throw Error(ErrorCode::Config, model_name + ": backoff_initial must be >= 0");
  decode.validate();
}

EndpointProfile endpoint_profile_from_json(const Json& j, const EndpointProfile& defaults) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "endpoint profile must be an object");
  EndpointProfile p = defaults;
  try {
    p.model_name = get_field<std::string>(j, "model", "endpoint profile");
    p.base_url = j.value("base_url", p.base_url);
    p.api_key_env = j.value("api_key_env", p.api_key_env);
    p.request_timeout = j.value("request_timeout", p.request_timeout);
    p.max_retries = j.value("max_retries", p.max_retries);
    p.concurrency_limit = j.value("concurrency_limit", p.concurrency_limit);
    p.backoff_initial = j.value("backoff_initial", p.backoff_initial);
    if (auto it = j.find("decode"); it != j.end()) {
      const Json& d = *it;
      p.decode.temperature = d.value("temperature", p.decode.temperature);
      p.decode.top_p = d.value("top_p", p.decode.top_p);
      p.decode.max_tokens = d.value("max_tokens", p.decode.max_tokens);
      if (auto k = d.find("top_k"); k != d.end())
        p.decode.top_k = (k->is_null() || k->get<int>() < 0) ? std::nullopt : std::optional<int>(k->get<int>());
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("endpoint profile: ") + e.what());
  }
  p.validate();
  return p;
}

Json to_json(const EndpointProfile& p) {
  Json j;
  j["model"] = p.model_name;
  j["base_url"] = p.base_url;
  j["api_key_env"] = p.api_key_env;
  j["decode"] = to_json(p.decode);
  j["request_timeout"] = p.request_timeout;
  j["max_retries"] = p.max_retries;
  j["concurrency_limit"] = p.concurrency_limit;
  j["backoff_initial"] = p.backoff_initial;
  return j;
}

std::pair<std::string, std::optional<std::string>> split_reasoning(std::string_view text) {
  static constexpr std::string_view kOpen = "<think>";
  static constexpr std::string_view kClose = "</think>";
  const auto close = text.rfind(kClose);
  if (close == std::string_view::npos) return {trim(text), std::nullopt};
  std::size_t start = 0;
  if (const auto open = text.find(kOpen); open != std::string_view::npos && open < close)
    start = open + kOpen.size();
  return {trim(text.substr(close + kClose.size())), trim(text.substr(start, close - start))};
}

Json chat_request_body(const EndpointProfile& profile, const PromptBundle& prompt) {
  Json messages = Json::array();
  if (!prompt.system.empty()) messages.push_back({{"role", "system"}, {"content", prompt.system}});
  for (const auto& [u, a] : prompt.shots) {
    messages.push_back({{"role", "user"}, {"content", u}});
    messages.push_back({{"role", "assistant"}, {"content", a}});
  }
  messages.push_back({{"role", "user"}, {"content", prompt.user}});

  Json body;
  body["model"] = profile.model_name;
  body["messages"] = std::move(messages);
  body["temperature"] = profile.decode.temperature;
  body["top_p"] = profile.decode.top_p;
  if (profile.decode.top_k) body["top_k"] = *profile.decode.top_k;
  body["max_tokens"] = profile.decode.max_tokens;
  if (prompt.enable_thinking)
    body["chat_template_kwargs"] = {{"enable_thinking", *prompt.enable_thinking}};
  return body;
}

Json embed_request_body(const EndpointProfile& profile, const std::vector<std::string>& texts) {
  Json body;
  body["model"] = profile.model_name;
  body["input"] = texts;
  return body;
}

std::string request_key(std::string_view model, const Json& body) {
  std::string material(model);
  material += '\n';
  material += canonical_dump(body);
  return sha256_hex(material);
}

// --- transports ---

HttpResponse HttpTransport::post(const EndpointProfile& profile, const std::string& path,
                                 const Json& body, int /*attempt*/) {
  const std::string& url = profile.base_url;
  if (url.empty()) throw Error(ErrorCode::Config, profile.model_name + ": base_url not set");
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  const std::string origin = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  const auto secs = static_cast<time_t>(profile.request_timeout);
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!profile.api_key_env.empty()) {
    if (const char* key = std::getenv(profile.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(prefix + path, headers, body.dump(), "application/json");
  if (!res)
    throw Error(ErrorCode::Transport, profile.model_name + ": " + httplib::to_string(res.error()));
  return HttpResponse{res->status, res->body};
}

HttpResponse FixtureTransport::post(const EndpointProfile& profile, const std::string& path,
                                    const Json& body, int attempt) {
  const std::string key = request_key(profile.model_name, body);
  const auto file = dir_ / (key + ".json");
  if (!std::filesystem::exists(file))
    throw Error(ErrorCode::FixtureMissing,
                "no fixture for " + profile.model_name + " " + path + " (key " + key + ")");
  Json fx;
  try {
    fx = Json::parse(read_file(file));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Schema, file.string() + ": " + e.what());
  }
  const Json responses = get_field<Json>(fx, "responses", file.string());
  if (!responses.is_array() || responses.empty())
    throw Error(ErrorCode::Schema, file.string() + ": empty responses list");
  const Json& r = responses[std::min<std::size_t>(static_cast<std::size_t>(attempt), responses.size() - 1)];
  const int status = get_field<int>(r, "status", file.string());
  if (status == 0)
    throw Error(ErrorCode::Transport, "fixture-simulated failure: " + r.value("error", std::string("network")));
  const Json& b = r.contains("body") ? r["body"] : Json(nullptr);
  return HttpResponse{status, b.is_string() ? b.get<std::string>() : b.dump()};
}

RecordingTransport::RecordingTransport(std::shared_ptr<Transport> inner, std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

HttpResponse RecordingTransport::post(const EndpointProfile& profile, const std::string& path,
                                      const Json& body, int attempt) {
  Json entry;
  std::optional<HttpResponse> result;
  std::optional<Error> failure;
  try {
    result = inner_->post(profile, path, body, attempt);
    entry["status"] = result->status;
    try {
      entry["body"] = Json::parse(result->body);
    } catch (const nlohmann::json::exception&) {
      entry["body"] = result->body;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Transport) throw;
    entry["status"] = 0;
    entry["error"] = e.what();
    failure = e;
  }

  const std::string key = request_key(profile.model_name, body);
  {
    std::lock_guard lock(mu_);
    Json& fx = recorded_[key];
    if (fx.is_null()) {
      fx["model"] = profile.model_name;
      fx["path"] = path;
      fx["request"] = body;
      fx["responses"] = Json::array();
    }
    Json& responses = fx["responses"];
    while (responses.size() <= static_cast<std::size_t>(attempt)) responses.push_back(Json(nullptr));
    responses[static_cast<std::size_t>(attempt)] = entry;
    write_file_atomic(dir_ / (key + ".json"), fx.dump(1) + "\n");
  }
  if (failure) throw *failure;
  return *result;
}

void Limiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return available_ > 0; });
  --available_;
}

void Limiter::release() {
  {
    std::lock_guard lock(mu_);
    ++available_;
  }
  cv_.notify_one();
}

// --- gateway ---

Gateway::Gateway(std::shared_ptr<Transport> transport, std::filesystem::path cache_dir)
    : transport_(std::move(transport)), cache_dir_(std::move(cache_dir)) {
  if (!transport_) throw Error(ErrorCode::Precondition, "gateway needs a transport");
  sleeper_ = [](double s) {
    if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
  };
}

GatewayStats Gateway::stats() const {
  return GatewayStats{endpoint_calls_.load(), cache_hits_.load(), retries_.load()};
}

Limiter& Gateway::limiter_for(const EndpointProfile& profile) {
  std::lock_guard lock(limiters_mu_);
  auto& slot = limiters_[profile.base_url + "\n" + profile.model_name];
  if (!slot) slot = std::make_unique<Limiter>(profile.concurrency_limit);
  return *slot;
}

Json Gateway::request(const EndpointProfile& profile, const std::string& path, const Json& body,
                      int& attempts) {
  attempts = 0;
  LimiterGuard guard(limiter_for(profile));
  std::string last_failure;
  for (int attempt = 0; attempt <= profile.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      sleeper_(profile.backoff_initial * std::pow(2.0, attempt - 1));
    }
    ++attempts;
    ++endpoint_calls_;
    HttpResponse r;
    try {
      r = transport_->post(profile, path, body, attempt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Transport) throw;
      last_failure = e.what();
      log::warn(profile.model_name + ": attempt " + std::to_string(attempt + 1) + " failed: " + last_failure);
      continue;
    }
    if (r.status >= 200 && r.status < 300) {
      try {
        return Json::parse(r.body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedResponse, profile.model_name + ": response is not JSON: " + e.what());
      }
    }
    if (r.status >= 500 || r.status == 429) {
      last_failure = "HTTP " + std::to_string(r.status);
      log::warn(profile.model_name + ": attempt " + std::to_string(attempt + 1) + " got " + last_failure);
      continue;
    }
    throw Error(ErrorCode::Endpoint, profile.model_name + ": HTTP " + std::to_string(r.status) + ": " +
                                         r.body.substr(0, 200));
  }
  throw Error(ErrorCode::ExhaustedRetries, profile.model_name + ": gave up after " +
                                               std::to_string(attempts) + " attempts (" + last_failure + ")");
}

ChatExchange Gateway::chat(const EndpointProfile& profile, const PromptBundle& prompt) {
  profile.validate();
  if (prompt.empty() || prompt.user.empty())
    throw Error(ErrorCode::Precondition, "chat: empty prompt");
  const Json body = chat_request_body(profile, prompt);
  const auto t0 = std::chrono::steady_clock::now();

  ChatExchange ex;
  ex.request = prompt;
  ex.decode = profile.decode;
  ex.endpoint = profile.model_name;

  const std::string key = request_key(profile.model_name, body);
  const auto cache_file = cache_dir_.empty() ? std::filesystem::path() : cache_dir_ / (key + ".json");
  Json response;
  if (!cache_file.empty() && std::filesystem::exists(cache_file)) {
    response = Json::parse(read_file(cache_file));
    ++cache_hits_;
  } else {
    response = request(profile, "/v1/chat/completions", body, ex.attempts);
  }

  std::optional<std::string> reasoning_field;
  const std::string content = chat_content(response, reasoning_field);
  auto [text, reasoning] = split_reasoning(content);
  ex.response_text = std::move(text);
  ex.reasoning_text = reasoning ? reasoning : reasoning_field;

  if (!cache_file.empty() && ex.attempts > 0) {
    std::filesystem::create_directories(cache_dir_);
    write_file_atomic(cache_file, response.dump() + "\n");
  }
  ex.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return ex;
}

std::vector<std::vector<double>> Gateway::embed(const EndpointProfile& profile,
                                                const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::Precondition, "embed: no input texts");
  profile.validate();
  const Json body = embed_request_body(profile, texts);
  const std::string key = request_key(profile.model_name, body);
  const auto cache_file = cache_dir_.empty() ? std::filesystem::path() : cache_dir_ / (key + ".json");
  if (!cache_file.empty() && std::filesystem::exists(cache_file)) {
    ++cache_hits_;
    return embedding_vectors(Json::parse(read_file(cache_file)), texts.size());
  }
  int attempts = 0;
  const Json response = request(profile, "/v1/embeddings", body, attempts);
  auto vectors = embedding_vectors(response, texts.size());
  if (!cache_file.empty()) {
    std::filesystem::create_directories(cache_dir_);
    write_file_atomic(cache_file, response.dump() + "\n");
  }
  return vectors;
}

}  // namespace policysimp
