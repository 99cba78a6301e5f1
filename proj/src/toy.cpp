#include "figrl/toy.hpp"

#include <numeric>
#include <stdexcept>

#include "figrl/reward.hpp"

namespace figrl {

namespace {

std::string render_well_formed(const std::string& label) {
  return "<think>Step 1: image sentiment noted. Step 2: caption sentiment "
         "noted. Step 3: cue comparison. Step 4: intent assessment.</think>"
         "<answer>" +
         label + "</answer>";
}

std::string render_bare(const std::string& label) {
  return "Final call: " + label + ".";
}

void shuffle_in_place(std::vector<ToyExample>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(items[i - 1], items[j]);
  }
}

std::vector<ToyExample> generate_examples(int count, Style style, Rng& rng) {
  const StyleInfo& info = style_info(style);
  std::vector<ToyExample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const bool positive = (i % 2 == 0);
    const int image = static_cast<int>(rng.next_u64() & 1u);
    const int caption = positive ? 1 - image : image;

    Eigen::VectorXd context = Eigen::VectorXd::Zero(kToyFeatureDim);
    context[image] = kToyTokenGain;
    context[kToyImageDims + caption] = kToyTokenGain;
    context[kToyImageDims + kToyCaptionDims + image * 2 + caption] = kToyTokenGain;
    const Eigen::Index distractor_base =
        kToyImageDims + kToyCaptionDims + kToyPairDims;
    for (Eigen::Index d = 0; d < kToyDistractorDims; ++d)
      context[distractor_base + d] =
          (rng.next_u64() & 1u) ? kToyDistractorAmplitude : -kToyDistractorAmplitude;

    out.push_back({std::move(context), style,
                   positive ? info.positive_label : info.negative_label});
  }
  shuffle_in_place(out, rng);
  return out;
}

}  // namespace

std::vector<ToyAction> make_toy_actions(Style style) {
  const StyleInfo& info = style_info(style);
  return {
      {style, info.positive_label, true, render_well_formed(info.positive_label)},
      {style, info.negative_label, true, render_well_formed(info.negative_label)},
      {style, info.positive_label, false, render_bare(info.positive_label)},
      {style, info.negative_label, false, render_bare(info.negative_label)},
  };
}

ToyTask make_toy_task(std::uint64_t seed, int n, Style style) {
  if (n < 1) throw std::invalid_argument("toy task needs at least one sample");
  Rng rng(seed);
  ToyTask task;
  task.train = generate_examples(n, style, rng);
  task.eval = generate_examples(std::max(50, n / 5), style, rng);
  task.actions = make_toy_actions(style);
  return task;
}

ToyTask make_combined_toy_task(std::uint64_t seed, int n_per_style) {
  std::vector<Style> all;
  for (const StyleInfo& info : list_styles()) all.push_back(info.id);
  return make_combined_toy_task(seed, n_per_style, all);
}

ToyTask make_combined_toy_task(std::uint64_t seed, int n_per_style,
                               const std::vector<Style>& styles) {
  if (n_per_style < 1)
    throw std::invalid_argument("toy task needs at least one sample per style");
  if (styles.empty())
    throw std::invalid_argument("combined toy task needs at least one style");
  ToyTask combined;
  Rng order_rng(seed ^ 0x9e3779b97f4a7c15ull);
  for (Style style : styles) {
    ToyTask task =
        make_toy_task(seed + static_cast<std::uint64_t>(style), n_per_style, style);
    combined.train.insert(combined.train.end(), task.train.begin(), task.train.end());
    combined.eval.insert(combined.eval.end(), task.eval.begin(), task.eval.end());
    combined.actions.insert(combined.actions.end(), task.actions.begin(),
                            task.actions.end());
  }
  shuffle_in_place(combined.train, order_rng);
  return combined;
}

int toy_image_sentiment(const Eigen::VectorXd& context) {
  return context[1] > context[0] ? 1 : 0;
}

int toy_caption_sentiment(const Eigen::VectorXd& context) {
  return context[kToyImageDims + 1] > context[kToyImageDims] ? 1 : 0;
}

int toy_total_reward(const std::string& rendered, const ToyExample& example) {
  return total_reward(rendered, example.gold_label, style_info(example.style)).total;
}

double greedy_accuracy(const ToyPolicy& policy,
                       const std::vector<ToyExample>& examples,
                       const std::vector<ToyAction>& actions) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const ToyExample& ex : examples) {
    const auto a = static_cast<std::size_t>(policy.greedy_action(ex.context));
    if (actions[a].style == ex.style && actions[a].label == ex.gold_label)
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrainReport train_grpo(ToyPolicy& policy, const ReferencePolicy& ref,
                       const ToyTask& task, const GrpoConfig& config,
                       const ToyRewardFn& reward) {
  if (config.group_size < 2)
    throw std::invalid_argument("grpo group size must be >= 2");
  if (config.learning_rate <= 0.0)
    throw std::invalid_argument("grpo learning rate must be positive");
  if (task.train.empty())
    throw std::invalid_argument("grpo task has no training contexts");

  TrainReport report;
  report.steps.reserve(task.train.size() * static_cast<std::size_t>(config.epochs));
  Rng rng(config.seed);
  std::vector<std::size_t> order(task.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<RolloutGroup> batch(1);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t idx : order) {
      const ToyExample& ex = task.train[idx];
      RolloutGroup group =
          sample_rollouts(policy, ex.context, config.group_size, rng);
      group.rewards.resize(static_cast<Eigen::Index>(group.actions.size()));
      for (std::size_t k = 0; k < group.actions.size(); ++k)
        group.rewards[static_cast<Eigen::Index>(k)] =
            reward(task.actions[static_cast<std::size_t>(group.actions[k])].rendered, ex);
      group.advantages = group_advantages(group.rewards, config.epsilon_std);

      batch[0] = std::move(group);
      const LossAndGrad lg = grpo_loss_and_grad(policy, ref, batch, config.beta);
      const double kl = kl_divergence(policy, ref, ex.context);
      policy.weights() -= config.learning_rate * lg.grad;

      report.steps.push_back(
          {batch[0].rewards.cast<double>().mean(), kl, lg.loss});
    }
  }
  report.final_greedy_accuracy = greedy_accuracy(policy, task.eval, task.actions);
  return report;
}

std::vector<SftExample> toy_sft_examples(const ToyTask& task, SftTarget target) {
  const bool want_well_formed = (target == SftTarget::cot);
  std::vector<SftExample> out;
  out.reserve(task.train.size());
  for (const ToyExample& ex : task.train) {
    Eigen::Index action = -1;
    for (std::size_t a = 0; a < task.actions.size(); ++a) {
      const ToyAction& candidate = task.actions[a];
      if (candidate.style == ex.style && candidate.label == ex.gold_label &&
          candidate.well_formed == want_well_formed) {
        action = static_cast<Eigen::Index>(a);
        break;
      }
    }
    if (action < 0)
      throw std::logic_error("no action matches the example's gold label");
    out.push_back({ex.context, action});
  }
  return out;
}

}  // namespace figrl
