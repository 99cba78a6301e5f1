#include "figrl/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "figrl/io_util.hpp"

namespace figrl {

using nlohmann::json;

std::vector<GenerationResult> generate_batch(
    Generator& generator, const std::vector<GenerationRequest>& requests,
    int max_in_flight) {
  if (max_in_flight < 1)
    throw std::invalid_argument("max_in_flight must be >= 1");
  std::vector<std::optional<GenerationResult>> slots(requests.size());
  if (requests.empty()) return {};

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < requests.size();
         i = next.fetch_add(1)) {
      slots[i] = generator.generate(requests[i]);
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), requests.size());
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<GenerationResult> results;
  results.reserve(slots.size());
  for (auto& slot : slots) results.push_back(std::move(*slot));
  return results;
}

GatewayOptions GatewayOptions::from_env() {
  GatewayOptions options;
  if (const char* endpoint = std::getenv("GATEWAY_ENDPOINT"))
    options.endpoint = endpoint;
  if (const char* key = std::getenv("GATEWAY_API_KEY")) options.api_key = key;
  if (const char* timeout = std::getenv("GATEWAY_TIMEOUT_MS"))
    options.timeout_ms = std::atoi(timeout);
  return options;
}

std::string HttpGateway::request_body(const GenerationRequest& request) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  if (request.image) {
    content.push_back(
        {{"type", "image_url"},
         {"image_url",
          {{"url", "data:" + request.image->media_type + ";base64," +
                       base64_encode(request.image->bytes)}}}});
  }
  json body{{"model", request.model_id},
            {"temperature", request.decode.temperature},
            {"max_tokens", request.decode.max_tokens},
            {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  return body.dump();
}

GenerationResult HttpGateway::generate(const GenerationRequest& request) {
  if (request.prompt.empty())
    return GatewayError{GatewayError::Kind::service, "empty prompt"};
  if (request.decode.max_tokens < 1)
    return GatewayError{GatewayError::Kind::service, "max_tokens must be >= 1"};

  const std::string body = request_body(request);
  httplib::Headers headers;
  if (!options_.api_key.empty())
    headers.emplace("Authorization", "Bearer " + options_.api_key);

  GatewayError last_error{GatewayError::Kind::transport, "no attempt made"};
  int backoff_ms = options_.initial_backoff_ms;
  const auto started = std::chrono::steady_clock::now();

  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
    httplib::Client client(options_.endpoint);
    client.set_connection_timeout(0, options_.timeout_ms * 1000);
    client.set_read_timeout(options_.timeout_ms / 1000,
                            (options_.timeout_ms % 1000) * 1000);

    auto response = client.Post("/v1/chat/completions", headers, body,
                                "application/json");
    if (!response) {
      last_error = {GatewayError::Kind::transport,
                    "transport failure: " + httplib::to_string(response.error())};
      continue;
    }
    if (response->status == 429 || response->status >= 500) {
      last_error = {GatewayError::Kind::service,
                    "retryable status " + std::to_string(response->status)};
      continue;
    }
    if (response->status < 200 || response->status >= 300) {
      return GatewayError{GatewayError::Kind::service,
                          "status " + std::to_string(response->status) + ": " +
                              response->body};
    }

    json parsed = json::parse(response->body, nullptr, false);
    if (parsed.is_discarded())
      return GatewayError{GatewayError::Kind::payload,
                          "response is not valid JSON"};
    auto choices = parsed.find("choices");
    if (choices == parsed.end() || !choices->is_array() || choices->empty())
      return GatewayError{GatewayError::Kind::payload, "no choices in response"};
    const json& message = (*choices)[0].value("message", json::object());
    auto text = message.find("content");
    if (text == message.end() || !text->is_string())
      return GatewayError{GatewayError::Kind::payload,
                          "missing text content in response"};

    GenerationOutput output;
    output.text = text->get<std::string>();
    output.request_id = parsed.value("id", "");
    output.latency_ms = static_cast<long>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started)
            .count());
    return output;
  }
  return last_error;
}

MockModel::MockModel(std::string default_text)
    : default_text_(std::move(default_text)) {}

std::uint64_t MockModel::fingerprint(const GenerationRequest& request) {
  std::string key = request.prompt;
  key.push_back('\x1f');
  if (request.image) key += sha256_hex(request.image->bytes);
  return fnv1a64(key);
}

void MockModel::script(const GenerationRequest& request, std::string text) {
  script(fingerprint(request), std::move(text));
}

void MockModel::script(std::uint64_t fp, std::string text) {
  script_[fp] = std::move(text);
}

void MockModel::script_failure(const GenerationRequest& request,
                               GatewayError error) {
  failures_[fingerprint(request)] = std::move(error);
}

void MockModel::set_delay_hook(
    std::function<void(const GenerationRequest&)> hook) {
  delay_hook_ = std::move(hook);
}

GenerationResult MockModel::generate(const GenerationRequest& request) {
  calls_.fetch_add(1);
  const int now_in_flight = in_flight_.fetch_add(1) + 1;
  int seen = max_in_flight_seen_.load();
  while (now_in_flight > seen &&
         !max_in_flight_seen_.compare_exchange_weak(seen, now_in_flight)) {
  }
  if (delay_hook_) delay_hook_(request);

  const std::uint64_t fp = fingerprint(request);
  GenerationResult result = [&]() -> GenerationResult {
    if (auto failure = failures_.find(fp); failure != failures_.end())
      return failure->second;

    std::string text;
    if (auto it = script_.find(fp); it != script_.end())
      text = it->second;
    else
      text = default_text_;

    // Honor max_tokens by whitespace-token truncation.
    std::istringstream words(text);
    std::vector<std::string> tokens;
    for (std::string token; words >> token;) tokens.push_back(std::move(token));
    if (tokens.size() > static_cast<std::size_t>(request.decode.max_tokens)) {
      std::string limited;
      for (int i = 0; i < request.decode.max_tokens; ++i) {
        if (i > 0) limited += ' ';
        limited += tokens[static_cast<std::size_t>(i)];
      }
      text = std::move(limited);
    }

    char id[32];
    std::snprintf(id, sizeof(id), "mock-%016llx",
                  static_cast<unsigned long long>(fp));
    return GenerationOutput{text, id, 0};
  }();

  in_flight_.fetch_sub(1);
  return result;
}

}  // namespace figrl
