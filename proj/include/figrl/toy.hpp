#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "figrl/grpo.hpp"
#include "figrl/styles.hpp"

namespace figrl {

// Discrete output template. Each action renders to text that the reward
// engine scores verbatim, bundling label choice and format validity.
struct ToyAction {
  Style style = Style::sarcasm;
  std::string label;
  bool well_formed = false;
  std::string rendered;
};

struct ToyExample {
  Eigen::VectorXd context;
  Style style = Style::sarcasm;
  std::string gold_label;
};

// Desk-scale surrogate for figurative incongruity: each context encodes
// an image-sentiment token, a caption-sentiment token, their pair, and
// distractor tokens; the gold label is positive iff the sentiments
// disagree.
struct ToyTask {
  std::vector<ToyExample> train;
  std::vector<ToyExample> eval;
  std::vector<ToyAction> actions;
};

// Context layout: [image token (2) | caption token (2) | pair token (4) |
// distractors (4)]. Token indicators carry gain kToyTokenGain so the
// default learning rates produce useful logit movement at desk scale.
constexpr Eigen::Index kToyImageDims = 2;
constexpr Eigen::Index kToyCaptionDims = 2;
constexpr Eigen::Index kToyPairDims = 4;
constexpr Eigen::Index kToyDistractorDims = 4;
constexpr Eigen::Index kToyFeatureDim =
    kToyImageDims + kToyCaptionDims + kToyPairDims + kToyDistractorDims;
constexpr double kToyTokenGain = 3.0;
constexpr double kToyDistractorAmplitude = 0.5;
constexpr double kToyDefaultInitScale = 0.3;

// The four output templates for one style:
// {positive, negative} x {well-formed, bare}.
std::vector<ToyAction> make_toy_actions(Style style);

// n balanced (+-1) training contexts plus a held-out eval split
// (max(200, n/5) contexts), both deterministic per seed.
ToyTask make_toy_task(std::uint64_t seed, int n, Style style = Style::sarcasm);

// Union of per-style tasks: contexts from the given styles interleaved,
// action vocabulary concatenated in style order. Defaults to all four.
ToyTask make_combined_toy_task(std::uint64_t seed, int n_per_style);
ToyTask make_combined_toy_task(std::uint64_t seed, int n_per_style,
                               const std::vector<Style>& styles);

// Sentiment tokens recovered from a context vector (for oracles and
// reports).
int toy_image_sentiment(const Eigen::VectorXd& context);
int toy_caption_sentiment(const Eigen::VectorXd& context);

using ToyRewardFn = std::function<int(const std::string& rendered,
                                      const ToyExample& example)>;

// reward_engine's total reward applied to an action's rendered text.
int toy_total_reward(const std::string& rendered, const ToyExample& example);

// Fraction of examples whose greedy action carries the gold label.
double greedy_accuracy(const ToyPolicy& policy,
                       const std::vector<ToyExample>& examples,
                       const std::vector<ToyAction>& actions);

struct StepRecord {
  double mean_reward = 0.0;
  double kl = 0.0;
  double loss = 0.0;
};

struct TrainReport {
  std::vector<StepRecord> steps;
  double final_greedy_accuracy = 0.0;
};

// epochs x |train| steps of sample -> score -> normalize -> gradient
// step, one group per step; deterministic for a given config seed.
TrainReport train_grpo(ToyPolicy& policy, const ReferencePolicy& ref,
                       const ToyTask& task, const GrpoConfig& config,
                       const ToyRewardFn& reward);

enum class SftTarget { cot, binary };  // well-formed vs bare-label action

// The labeled set for SFT warm-up: each example paired with its correct
// action of the requested shape.
std::vector<SftExample> toy_sft_examples(const ToyTask& task, SftTarget target);

}  // namespace figrl
