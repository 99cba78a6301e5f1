#pragma once

#include <optional>
#include <string>

#include "figrl/styles.hpp"

namespace figrl {

// Verifiable reward for one raw model output: R = R_acc + R_format.
struct RewardBreakdown {
  int r_acc = 0;     // 1 iff predicted label equals gold
  int r_format = 0;  // 1 iff the output is a valid think/answer pair
  int total = 0;
  std::optional<std::string> predicted_label;

  bool operator==(const RewardBreakdown&) const = default;
};

// 1 iff `predicted` is present and, after normalization against the
// style vocabulary, equals `gold`.
int accuracy_reward(const std::optional<std::string>& predicted,
                    const std::string& gold, const StyleInfo& style);

// 1 iff parse_tagged_output succeeds on `raw`.
int format_reward(const std::string& raw);

struct RewardOptions {
  // When set, r_acc is forced to 0 whenever r_format is 0 (answer-tag-only
  // scoring). Default keeps the two components orthogonal and recovers the
  // prediction from a whole-output label scan when the format is invalid.
  bool strict_acc = false;
};

RewardBreakdown total_reward(const std::string& raw, const std::string& gold,
                             const StyleInfo& style,
                             const RewardOptions& options = {});

// Longest-label-first containment scan over the whitespace-collapsed,
// lowercased output. Used as the accuracy fallback for unformatted text.
std::optional<std::string> scan_for_label(const std::string& raw,
                                          const StyleInfo& style);

}  // namespace figrl
