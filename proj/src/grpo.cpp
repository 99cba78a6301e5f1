#include "figrl/grpo.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace figrl {

ToyPolicy ToyPolicy::random_init(Eigen::Index feature_dim,
                                 Eigen::Index action_count, double scale,
                                 std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd w(feature_dim, action_count);
  for (Eigen::Index j = 0; j < action_count; ++j)
    for (Eigen::Index i = 0; i < feature_dim; ++i) w(i, j) = scale * rng.normal();
  return ToyPolicy(std::move(w));
}

Eigen::ArrayXd group_advantages(const Eigen::ArrayXi& rewards,
                                double epsilon_std) {
  const Eigen::Index g = rewards.size();
  if (g < 2)
    throw std::invalid_argument("group_advantages requires a group of size >= 2");

  const bool constant = (rewards == rewards[0]).all();
  if (constant) return Eigen::ArrayXd::Zero(g);

  const Eigen::ArrayXd r = rewards.cast<double>();
  const double mean = r.mean();
  const double pop_std = std::sqrt((r - mean).square().mean());
  return (r - mean) / (pop_std + epsilon_std);
}

double kl_divergence(const ToyPolicy& policy, const ReferencePolicy& ref,
                     const Eigen::VectorXd& context) {
  if (policy.action_count() != ref.policy().action_count())
    throw std::invalid_argument("policy and reference action spaces differ");
  const Eigen::VectorXd lp = policy.action_log_probabilities(context);
  const Eigen::VectorXd lq = ref.policy().action_log_probabilities(context);
  const double kl = (lp.array().exp() * (lp - lq).array()).sum();
  return kl < 0.0 ? 0.0 : kl;
}

LossAndGrad grpo_loss_and_grad(const ToyPolicy& policy,
                               const ReferencePolicy& ref,
                               const std::vector<RolloutGroup>& groups,
                               double beta) {
  if (groups.empty())
    throw std::invalid_argument("grpo_loss_and_grad requires at least one group");

  const Eigen::Index actions = policy.action_count();
  LossAndGrad out;
  out.grad = Eigen::MatrixXd::Zero(policy.feature_dim(), actions);
  const double n_inv = 1.0 / static_cast<double>(groups.size());

  for (const RolloutGroup& group : groups) {
    if (group.advantages.size() != static_cast<Eigen::Index>(group.actions.size()))
      throw std::invalid_argument("group advantages not populated");
    const Eigen::VectorXd lp = policy.action_log_probabilities(group.context);
    const Eigen::VectorXd pi = lp.array().exp().matrix();
    const double g_inv = 1.0 / static_cast<double>(group.actions.size());

    // Policy-gradient term: d/dlogits of -A_i log pi(o_i) summed over the
    // group is -(1/G) sum_i A_i (e_{o_i} - pi).
    Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(actions);
    double advantage_sum = 0.0;
    for (std::size_t i = 0; i < group.actions.size(); ++i) {
      const Eigen::Index a = group.actions[i];
      if (a < 0 || a >= actions)
        throw std::invalid_argument("rollout action index out of range");
      const double adv = group.advantages[static_cast<Eigen::Index>(i)];
      out.loss -= n_inv * g_inv * adv * lp[a];
      dlogits[a] -= g_inv * adv;
      advantage_sum += adv;
    }
    dlogits += g_inv * advantage_sum * pi;

    if (beta != 0.0) {
      const Eigen::VectorXd lq = ref.policy().action_log_probabilities(group.context);
      const Eigen::ArrayXd log_ratio = (lp - lq).array();
      const double kl = (pi.array() * log_ratio).sum();
      out.loss += n_inv * beta * std::max(kl, 0.0);
      // dKL/dlogit_j = pi_j (log_ratio_j - KL)
      dlogits += beta * (pi.array() * (log_ratio - kl)).matrix();
    }

    out.grad.noalias() += n_inv * group.context * dlogits.transpose();
  }
  return out;
}

RolloutGroup sample_rollouts(const ToyPolicy& policy,
                             const Eigen::VectorXd& context, int group_size,
                             Rng& rng) {
  if (group_size < 2)
    throw std::invalid_argument("rollout group size must be >= 2");
  RolloutGroup group;
  group.context = context;
  group.actions.reserve(static_cast<std::size_t>(group_size));
  const Eigen::VectorXd probs = policy.action_probabilities(context);
  for (int i = 0; i < group_size; ++i)
    group.actions.push_back(rng.categorical(probs));
  return group;
}

namespace {

double mean_cross_entropy(const ToyPolicy& policy,
                          const std::vector<SftExample>& labeled) {
  double loss = 0.0;
  for (const SftExample& ex : labeled)
    loss -= policy.action_log_probabilities(ex.context)[ex.target_action];
  return loss / static_cast<double>(labeled.size());
}

double train_accuracy(const ToyPolicy& policy,
                      const std::vector<SftExample>& labeled) {
  std::size_t correct = 0;
  for (const SftExample& ex : labeled)
    if (policy.greedy_action(ex.context) == ex.target_action) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labeled.size());
}

}  // namespace

ToyPolicy sft_warmup(ToyPolicy policy, const std::vector<SftExample>& labeled,
                     const SftConfig& config, SftReport* report) {
  if (labeled.empty())
    throw std::invalid_argument("sft_warmup requires a non-empty labeled set");
  for (const SftExample& ex : labeled)
    if (ex.target_action < 0 || ex.target_action >= policy.action_count())
      throw std::invalid_argument("sft target action out of range");

  if (report) *report = SftReport{};

  const std::size_t n = labeled.size();
  const std::size_t total_steps =
      config.full_batch ? static_cast<std::size_t>(config.epochs)
                        : static_cast<std::size_t>(config.epochs) * n;
  auto step_lr = [&](std::size_t step) {
    if (!config.cosine_schedule || total_steps == 0) return config.learning_rate;
    const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
    return config.learning_rate * 0.5 * (1.0 + std::cos(M_PI * progress));
  };

  Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.full_batch) {
      Eigen::MatrixXd grad =
          Eigen::MatrixXd::Zero(policy.feature_dim(), policy.action_count());
      for (const SftExample& ex : labeled) {
        const Eigen::VectorXd pi = policy.action_probabilities(ex.context);
        Eigen::VectorXd dlogits = pi;
        dlogits[ex.target_action] -= 1.0;
        grad.noalias() += ex.context * dlogits.transpose();
      }
      grad /= static_cast<double>(n);
      policy.weights() -= step_lr(step) * grad;
      ++step;
    } else {
      // Fisher-Yates with the deterministic stream.
      for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
      }
      for (std::size_t idx : order) {
        const SftExample& ex = labeled[idx];
        const Eigen::VectorXd pi = policy.action_probabilities(ex.context);
        Eigen::VectorXd dlogits = pi;
        dlogits[ex.target_action] -= 1.0;
        policy.weights().noalias() -= step_lr(step) * ex.context * dlogits.transpose();
        ++step;
      }
    }
    if (report) report->epoch_losses.push_back(mean_cross_entropy(policy, labeled));
  }
  if (report) report->final_train_accuracy = train_accuracy(policy, labeled);
  return policy;
}

}  // namespace figrl
