#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace figrl {

// Numerically stabilized log-softmax over a logit vector expression.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> log_softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Vector<Scalar, Eigen::Dynamic> z = logits;
  const Scalar m = z.maxCoeff();
  const Scalar lse = m + std::log((z.array() - m).exp().sum());
  return (z.array() - lse).matrix();
}

template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  return log_softmax(logits).array().exp().matrix();
}

// Deterministic random source. std::mt19937_64 output is specified by the
// standard and the [0,1) mapping below avoids the implementation-defined
// distributions, so streams are reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Box-Muller, pair-cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  // Index draw from a probability vector (inverse CDF).
  Eigen::Index categorical(const Eigen::VectorXd& probs) {
    const double u = uniform();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;
  }

 private:
  std::mt19937_64 gen_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Softmax classification policy with an explicit weight matrix
// (feature_dim x action_count). Logits are W^T x.
class ToyPolicy {
 public:
  ToyPolicy(Eigen::Index feature_dim, Eigen::Index action_count)
      : weights_(Eigen::MatrixXd::Zero(feature_dim, action_count)) {}
  explicit ToyPolicy(Eigen::MatrixXd weights) : weights_(std::move(weights)) {}

  static ToyPolicy random_init(Eigen::Index feature_dim,
                               Eigen::Index action_count, double scale,
                               std::uint64_t seed);

  Eigen::Index feature_dim() const { return weights_.rows(); }
  Eigen::Index action_count() const { return weights_.cols(); }

  Eigen::VectorXd logits(const Eigen::VectorXd& context) const {
    return weights_.transpose() * context;
  }
  Eigen::VectorXd action_probabilities(const Eigen::VectorXd& context) const {
    return softmax(logits(context));
  }
  Eigen::VectorXd action_log_probabilities(const Eigen::VectorXd& context) const {
    return log_softmax(logits(context));
  }
  Eigen::Index greedy_action(const Eigen::VectorXd& context) const {
    Eigen::Index best = 0;
    logits(context).maxCoeff(&best);
    return best;
  }

  Eigen::MatrixXd& weights() { return weights_; }
  const Eigen::MatrixXd& weights() const { return weights_; }

 private:
  Eigen::MatrixXd weights_;
};

// Frozen policy snapshot anchoring the KL term. Immutable once built.
class ReferencePolicy {
 public:
  explicit ReferencePolicy(ToyPolicy policy) : policy_(std::move(policy)) {}
  const ToyPolicy& policy() const { return policy_; }

 private:
  ToyPolicy policy_;
};

// G sampled outputs for one context with rewards and normalized advantages.
struct RolloutGroup {
  Eigen::VectorXd context;
  std::vector<Eigen::Index> actions;  // G sampled action indices
  Eigen::ArrayXi rewards;             // filled by the caller's scorer
  Eigen::ArrayXd advantages;
};

struct GrpoConfig {
  int group_size = 8;
  double beta = 0.04;
  double learning_rate = 1e-5;
  int epochs = 2;
  double epsilon_std = 1e-8;
  std::uint64_t seed = 0;
};

// A_i = (r_i - mean) / (pop_std + epsilon_std); exactly zero for
// constant groups. Throws std::invalid_argument when the group has
// fewer than two members.
Eigen::ArrayXd group_advantages(const Eigen::ArrayXi& rewards,
                                double epsilon_std);

// Exact categorical KL(pi_theta(.|context) || pi_ref(.|context)).
double kl_divergence(const ToyPolicy& policy, const ReferencePolicy& ref,
                     const Eigen::VectorXd& context);

struct LossAndGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // d(loss)/d(weights)
};

// loss = -(1/N) sum_g (1/G) sum_i A_i log pi(o_i|q_g)
//        + beta (1/N) sum_g KL(pi(.|q_g) || ref(.|q_g))
// with the exact analytical gradient. Advantages must be populated.
// Throws std::invalid_argument on an empty group list.
LossAndGrad grpo_loss_and_grad(const ToyPolicy& policy,
                               const ReferencePolicy& ref,
                               const std::vector<RolloutGroup>& groups,
                               double beta);

// G i.i.d. draws from pi(.|context); rewards and advantages unfilled.
// Throws std::invalid_argument when G < 2.
RolloutGroup sample_rollouts(const ToyPolicy& policy,
                             const Eigen::VectorXd& context, int group_size,
                             Rng& rng);

struct SftExample {
  Eigen::VectorXd context;
  Eigen::Index target_action;
};

struct SftConfig {
  int epochs = 5;
  double learning_rate = 2e-4;
  bool cosine_schedule = true;
  bool full_batch = false;  // per-sample SGD when false
  std::uint64_t seed = 0;   // shuffle order
};

struct SftReport {
  std::vector<double> epoch_losses;  // mean train CE after each epoch
  double final_train_accuracy = 0.0;
};

// Cross-entropy warm-up toward the labeled target actions. Returns the
// updated policy; callers freeze a copy as the ReferencePolicy for GRPO.
ToyPolicy sft_warmup(ToyPolicy policy, const std::vector<SftExample>& labeled,
                     const SftConfig& config, SftReport* report = nullptr);

}  // namespace figrl
