#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "figrl/result.hpp"
#include "figrl/sample.hpp"
#include "figrl/styles.hpp"

namespace figrl {

// A parsed five-step teacher reasoning chain with its extracted label.
struct CotTrace {
  std::array<std::string, 5> steps;  // trimmed bodies of Step 1..Step 5
  std::string final_label;
  std::string raw;

  bool operator==(const CotTrace&) const = default;
};

// A parsed student output: one think block followed by one answer block.
struct TaggedOutput {
  std::string think;
  std::string answer;
  std::string raw;

  bool operator==(const TaggedOutput&) const = default;
};

enum class ParseError {
  missing_steps,      // a "Step k:" marker absent, out of order, or empty
  unparseable_label,  // no label from the style vocabulary found
  format_error,       // think/answer block structure violated
};

enum class RejectReason { missing_steps, unparseable_label, label_mismatch };

std::string_view to_string(ParseError error);
std::string_view to_string(RejectReason reason);
RejectReason reject_reason_from_string(std::string_view name);

struct FilterReport {
  std::vector<std::pair<Sample, CotTrace>> kept;
  std::vector<std::pair<Sample, RejectReason>> rejected;
  std::size_t count_missing_steps = 0;
  std::size_t count_unparseable_label = 0;
  std::size_t count_label_mismatch = 0;

  std::size_t total() const { return kept.size() + rejected.size(); }
};

// Splits a raw teacher chain on line-leading "Step k:" markers (optional
// markdown bold around the marker) and extracts the final label from the
// Step 5 body. The negative label is searched before the positive one so
// that "not sarcastic" is never mistaken for "sarcastic".
Result<CotTrace, ParseError> parse_teacher_trace(const std::string& text,
                                                 const StyleInfo& style);

// Accepts exactly one <think>...</think> followed by exactly one
// <answer>...</answer> with nothing but whitespace outside the blocks.
// Tags are case-sensitive. Block contents are trimmed.
Result<TaggedOutput, ParseError> parse_tagged_output(const std::string& text);

// Lowercases, trims, collapses internal whitespace, then requires an
// exact match against the style's two labels.
Result<std::string, ParseError> normalize_label(const std::string& raw,
                                                const StyleInfo& style);

// Keeps a pair iff its trace parses and the final label equals the
// sample's gold label. Output order matches input order.
FilterReport filter_corpus(
    const std::vector<std::pair<Sample, std::string>>& pairs);

// Renders steps back into "Step k:" marker text; inverse of
// parse_teacher_trace for well-formed traces.
std::string render_trace_text(const CotTrace& trace);

std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace figrl
