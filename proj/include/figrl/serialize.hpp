#pragma once

#include <filesystem>
#include <string>

#include "figrl/eval.hpp"
#include "figrl/grpo.hpp"
#include "figrl/toy.hpp"

namespace figrl {

// Policy weights as JSON ({rows, cols, weights row-major}); doubles are
// serialized with round-trip precision so load(save(p)) == p exactly.
void save_policy(const ToyPolicy& policy, const std::filesystem::path& path);
ToyPolicy load_policy(const std::filesystem::path& path);

std::string train_report_to_json(const TrainReport& report);
std::string sft_report_to_json(const SftReport& report);
std::string metrics_to_json(const Metrics& metrics);

}  // namespace figrl
