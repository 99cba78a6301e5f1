#pragma once

#include <string>

#include "figrl/styles.hpp"

namespace figrl {

enum class Split { train, test, unspecified };

// One image-text instance with style and binary gold label.
struct Sample {
  std::string id;
  Style style = Style::sarcasm;
  std::string caption;
  std::string image_ref;  // file path or inline payload digest
  std::string gold_label;
  Split split = Split::unspecified;

  bool operator==(const Sample&) const = default;
};

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

}  // namespace figrl
