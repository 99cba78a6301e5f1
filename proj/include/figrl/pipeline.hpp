#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "figrl/gateway.hpp"
#include "figrl/grpo.hpp"
#include "figrl/sample.hpp"
#include "figrl/styles.hpp"
#include "figrl/toy.hpp"

namespace figrl {

// The five training setups: zero-shot prompting, SFT on bare labels, SFT
// on reasoning traces, GRPO from the base policy, and the full warm-up
// then GRPO pipeline.
enum class RunMode { zero_shot, sft_binary, sft_cot, grpo_only, sft_then_grpo };

RunMode run_mode_from_string(std::string_view name);
std::string_view to_string(RunMode mode);

struct GatewayRunConfig {
  std::string mode = "mock";  // "mock" or "http"
  std::string endpoint;       // http mode only; env supplies the rest
  std::string teacher_model_id = "teacher";
  double temperature = 0.0;
  int max_tokens = 1024;
  int max_in_flight = 4;
};

struct ToyRunConfig {
  int n = 200;  // per style
  double init_scale = kToyDefaultInitScale;
};

struct SftRunConfig {
  int epochs = 5;
  double learning_rate = 2e-4;
  bool cosine_schedule = true;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::vector<std::string> stages;
  std::vector<Style> styles;  // resolved; "combined" selects all four
  bool combined = false;
  std::map<Style, std::filesystem::path> datasets;
  GatewayRunConfig gateway;
  RunMode mode = RunMode::sft_then_grpo;
  ToyRunConfig toy;
  GrpoConfig grpo;
  SftRunConfig sft;
  std::optional<int> budget_total;

  // Canonical JSON snapshot (also the cache key for stage skipping).
  std::string canonical_json() const;
};

RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Stage order and artifact names.
inline constexpr const char* kStageNames[] = {
    "distill", "filter", "export_sft", "toy_sft", "toy_grpo", "eval", "analyze"};

struct Violation {
  std::string message;
};

// Path existence, style/label consistency, budget divisibility, and
// stage dependency closure. Violations are data, not errors.
std::vector<Violation> validate(const RunConfig& config);

struct StageRecord {
  std::string name;
  std::map<std::string, std::string> inputs;   // relative path -> digest
  std::map<std::string, std::string> outputs;  // relative path -> digest
  long wall_ms = 0;
  bool cache_hit = false;
};

struct RunManifest {
  std::string tool_version;
  std::string config_digest;
  std::string config_snapshot;  // canonical config JSON
  std::vector<StageRecord> stages;
};

struct ValidationError : std::runtime_error {
  ValidationError(std::string what, std::vector<Violation> v)
      : std::runtime_error(std::move(what)), violations(std::move(v)) {}
  std::vector<Violation> violations;
};

struct StageFailure : std::runtime_error {
  StageFailure(std::string stage_name, const std::string& cause)
      : std::runtime_error("stage " + stage_name + " failed: " + cause),
        stage(std::move(stage_name)) {}
  std::string stage;
};

// Executes the requested stages in dependency order, skipping any stage
// whose recorded outputs already exist unchanged for this exact config.
// Writes <out_dir>/manifest.json and returns the manifest. A non-null
// gateway serves generation requests in place of the configured one.
RunManifest run(const RunConfig& config, Generator* gateway = nullptr);

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path);

// The teacher-extraction request for one sample (prompt template plus
// caption; the image attached when image_ref is a readable file).
GenerationRequest teacher_request(const Sample& sample,
                                  const GatewayRunConfig& gateway);

// Deterministic scripted teacher for mock-mode runs: well-formed traces
// with the gold label, with a seeded minority of flipped labels and
// malformed chains so the filter stage has something to reject.
std::unique_ptr<MockModel> make_scripted_teacher(
    const std::vector<Sample>& samples, const GatewayRunConfig& gateway);

// The canned trace the scripted teacher returns for one sample.
std::string mock_teacher_trace(const Sample& sample);

}  // namespace figrl
