#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "figrl/io_util.hpp"
#include "figrl/sample.hpp"
#include "figrl/trace.hpp"

namespace figrl {

// One teacher trace tied to its sample, parsed when possible. kept=true
// implies the trace parsed and its final label equals the gold label.
struct DistilledRecord {
  std::string sample_id;
  Style style = Style::sarcasm;
  std::optional<CotTrace> trace;
  std::string raw;
  std::string teacher_model_id;
  bool kept = false;
  std::optional<RejectReason> reject_reason;

  bool operator==(const DistilledRecord&) const = default;
};

enum class AdapterKind { generic_jsonl, mmsd2_like, memotion_like, multimet_like };

AdapterKind adapter_from_string(std::string_view name);
std::string_view to_string(AdapterKind kind);

struct IngestOptions {
  std::optional<Style> style_hint;
  // Memotion ordinal scales: any level at or above the threshold index
  // counts as positive. Level 0 is the neutral class.
  int memotion_humor_threshold = 1;
  int memotion_offense_threshold = 1;
};

// Maps every row of a line-delimited JSON file to Samples. Any
// unmappable row aborts the ingest with a SchemaError naming each bad
// row; nothing is silently dropped.
std::vector<Sample> ingest(const std::filesystem::path& path, AdapterKind adapter,
                           const IngestOptions& options = {});

struct ProvidedSplitPolicy {};
struct SeededSplitPolicy {
  std::uint64_t seed = 0;
};
using SplitPolicy = std::variant<ProvidedSplitPolicy, SeededSplitPolicy>;

struct SplitResult {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// Provided: partition by the samples' own split tags (untagged samples
// are rejected). Seeded: deterministic 80/20 (+-1) stratified by gold
// label; split tags on the output are set accordingly.
SplitResult split(const std::vector<Sample>& samples, const SplitPolicy& policy);

// Exactly total/4 samples per style, uniform without replacement,
// deterministic per seed. Throws std::invalid_argument when total is not
// divisible by the style count or a style lacks samples.
std::vector<Sample> fixed_budget_sample(
    const std::map<Style, std::vector<Sample>>& by_style, int total,
    std::uint64_t seed);

inline constexpr std::string_view kCorpusSchemaName = "figrl.distilled_corpus";
inline constexpr int kCorpusSchemaVersion = 1;

// Line-delimited JSON with a schema-versioned header line;
// read_corpus(write_corpus(x)) == x. Read errors name the offending line.
void write_corpus(const std::vector<DistilledRecord>& records,
                  const std::filesystem::path& path);
std::vector<DistilledRecord> read_corpus(const std::filesystem::path& path);

// Sample <-> JSON-line codecs shared by the adapters and the CLIs.
std::string sample_to_json_line(const Sample& sample);
Sample sample_from_json_line(const std::string& line);
std::string record_to_json_line(const DistilledRecord& record);
DistilledRecord record_from_json_line(const std::string& line);
std::vector<Sample> read_samples(const std::filesystem::path& path);
void write_samples(const std::vector<Sample>& samples,
                   const std::filesystem::path& path);

}  // namespace figrl
