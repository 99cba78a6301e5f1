#include "figrl/reward.hpp"

#include <stdexcept>

#include "figrl/trace.hpp"

namespace figrl {

int accuracy_reward(const std::optional<std::string>& predicted,
                    const std::string& gold, const StyleInfo& style) {
  auto gold_norm = normalize_label(gold, style);
  if (!gold_norm)
    throw std::invalid_argument("gold label '" + gold +
                                "' is not in the vocabulary of style " + style.name);
  if (!predicted) return 0;
  auto pred_norm = normalize_label(*predicted, style);
  if (!pred_norm) return 0;
  return pred_norm.value() == gold_norm.value() ? 1 : 0;
}

int format_reward(const std::string& raw) {
  return parse_tagged_output(raw).ok() ? 1 : 0;
}

std::optional<std::string> scan_for_label(const std::string& raw,
                                          const StyleInfo& style) {
  const std::string haystack = collapse_whitespace(to_lower(raw));
  if (haystack.find(style.negative_label) != std::string::npos)
    return style.negative_label;
  if (haystack.find(style.positive_label) != std::string::npos)
    return style.positive_label;
  return std::nullopt;
}

RewardBreakdown total_reward(const std::string& raw, const std::string& gold,
                             const StyleInfo& style,
                             const RewardOptions& options) {
  RewardBreakdown breakdown;
  auto parsed = parse_tagged_output(raw);
  breakdown.r_format = parsed.ok() ? 1 : 0;

  if (parsed.ok()) {
    if (auto label = normalize_label(parsed.value().answer, style))
      breakdown.predicted_label = label.value();
  } else if (!options.strict_acc) {
    breakdown.predicted_label = scan_for_label(raw, style);
  }

  if (options.strict_acc && breakdown.r_format == 0) {
    breakdown.r_acc = 0;
  } else {
    breakdown.r_acc = accuracy_reward(breakdown.predicted_label, gold, style);
  }
  breakdown.total = breakdown.r_acc + breakdown.r_format;
  return breakdown;
}

}  // namespace figrl
