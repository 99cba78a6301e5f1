#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace figrl {

enum class Style { sarcasm, humor, offense, metaphor };

// One of the four figurative styles with its closed binary label
// vocabulary. Labels are exact-match only; no synonyms.
struct StyleInfo {
  Style id;
  std::string name;            // "sarcasm", "humor", "offense", "metaphor"
  std::string positive_label;  // e.g. "sarcastic"
  std::string negative_label;  // e.g. "not sarcastic"
  std::string step3_name;      // style-specific cue step heading
};

enum class PromptKind { teacher_cot, rlvr_tagged };

// The four styles in fixed order: sarcasm, humor, offense, metaphor.
const std::vector<StyleInfo>& list_styles();

const StyleInfo& style_info(Style id);

// Lookup by name ("sarcasm", ...). Throws std::invalid_argument on
// unknown names.
const StyleInfo& style_by_name(std::string_view name);

// Full prompt template text, byte-for-byte identical across calls.
// teacher_cot templates carry the five-step schema; rlvr_tagged
// templates carry Steps 1-4 plus the <think>/<answer> tag contract.
const std::string& render_prompt(Style style, PromptKind kind);

std::string_view to_string(Style id);
std::string_view to_string(PromptKind kind);
Style style_from_string(std::string_view name);

}  // namespace figrl
