#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "figrl/result.hpp"

namespace figrl {

struct ImagePayload {
  std::string media_type;  // e.g. "image/png"
  std::string bytes;       // raw, base64-encoded on the wire
};

struct DecodeParams {
  double temperature = 0.0;  // teacher extraction defaults to greedy
  int max_tokens = 1024;
};

struct GenerationRequest {
  std::string prompt;
  std::optional<ImagePayload> image;
  DecodeParams decode;
  std::string model_id;
};

struct GenerationOutput {
  std::string text;
  std::string request_id;
  long latency_ms = 0;
};

struct GatewayError {
  enum class Kind { transport, service, payload };
  Kind kind = Kind::transport;
  std::string message;
};

using GenerationResult = Result<GenerationOutput, GatewayError>;

// Uniform client interface for generation services.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual GenerationResult generate(const GenerationRequest& request) = 0;
};

// Runs requests with at most max_in_flight outstanding at any instant.
// Result i corresponds to request i regardless of completion order, and
// per-item failures are embedded rather than aborting the batch.
std::vector<GenerationResult> generate_batch(
    Generator& generator, const std::vector<GenerationRequest>& requests,
    int max_in_flight);

struct GatewayOptions {
  std::string endpoint;  // base URL, e.g. "http://127.0.0.1:8080"
  std::string api_key;   // sent as a bearer token when non-empty
  int timeout_ms = 30000;
  int max_retries = 3;  // re-attempts after the first try
  int initial_backoff_ms = 50;

  // GATEWAY_ENDPOINT, GATEWAY_API_KEY, GATEWAY_TIMEOUT_MS.
  static GatewayOptions from_env();
};

// Chat-completions-style JSON client (see docs/wire_schema.md). Retries
// idempotently on transport failures and retryable statuses (429/5xx)
// with exponential backoff.
class HttpGateway : public Generator {
 public:
  explicit HttpGateway(GatewayOptions options) : options_(std::move(options)) {}

  GenerationResult generate(const GenerationRequest& request) override;

  // The exact wire body for a request; pinned by golden-transcript tests.
  static std::string request_body(const GenerationRequest& request);

 private:
  GatewayOptions options_;
};

// Deterministic in-process endpoint: canned responses keyed by a hash of
// (prompt, image digest), a configurable default for unknown
// fingerprints, and instrumentation for concurrency tests.
class MockModel : public Generator {
 public:
  explicit MockModel(std::string default_text = "");

  static std::uint64_t fingerprint(const GenerationRequest& request);

  void script(const GenerationRequest& request, std::string text);
  void script(std::uint64_t fingerprint, std::string text);
  void script_failure(const GenerationRequest& request, GatewayError error);

  GenerationResult generate(const GenerationRequest& request) override;

  // Optional hook executed inside generate(); lets tests reorder
  // completion timing.
  void set_delay_hook(std::function<void(const GenerationRequest&)> hook);

  int call_count() const { return calls_.load(); }
  int max_observed_in_flight() const { return max_in_flight_seen_.load(); }

 private:
  std::string default_text_;
  std::map<std::uint64_t, std::string> script_;
  std::map<std::uint64_t, GatewayError> failures_;
  std::function<void(const GenerationRequest&)> delay_hook_;
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_seen_{0};
};

}  // namespace figrl
