#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "rlvr/advantage.hpp"
#include "rlvr/config.hpp"
#include "rlvr/errors.hpp"
#include "rlvr/objective.hpp"
#include "rlvr/parallel.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/reuse.hpp"
#include "rlvr/rng.hpp"
#include "rlvr/rollout.hpp"
#include "rlvr/types.hpp"
#include "rlvr/verifier.hpp"

namespace rlvr {

/// Cumulative-success-rate buckets [0,0.2), [0.2,0.4), ..., [0.8,1.0].
inline constexpr std::size_t kNumBuckets = 5;

inline std::size_t success_bucket(double rate) {
  const auto b = static_cast<std::size_t>(std::floor(rate * static_cast<double>(kNumBuckets)));
  return std::min(b, kNumBuckets - 1);
}

struct StepMetrics {
  std::int64_t step = 0;
  double avg_reward = 0.0;
  double avg_response_length = 0.0;
  double zero_signal_ratio_pre_reuse = 0.0;
  double zero_signal_ratio_post_reuse = 0.0;
  std::size_t responses_sampled = 0;
  double responses_per_prompt = 0.0;
  std::size_t prompts_drawn = 0;
  std::size_t groups_trained = 0;
  std::size_t prompts_discarded = 0;
  bool underfilled = false;
  std::size_t reuse_eligible = 0;
  std::size_t reuse_fired = 0;
  std::size_t buffer_entries = 0;
  std::size_t tokens_total = 0;
  std::size_t tokens_clipped = 0;
  double mean_ratio = 0.0;
  double objective_value = 0.0;
  /// Prompts in this step's groups per cumulative-success bucket, and the
  /// responses they were allocated.
  std::array<std::size_t, kNumBuckets> bucket_prompts{};
  std::array<std::size_t, kNumBuckets> bucket_responses{};
  std::optional<double> eval_accuracy;

  bool operator==(const StepMetrics&) const = default;
};

/// On-policy successes and attempts per prompt across all steps.
class CumulativeStats {
 public:
  explicit CumulativeStats(std::size_t num_prompts)
      : successes_(num_prompts, 0), attempts_(num_prompts, 0) {}

  void record(const Group& g) {
    const auto p = static_cast<std::size_t>(g.prompt_id);
    for (const auto& r : g.responses) {
      if (r.reused) continue;
      ++attempts_[p];
      successes_[p] += r.reward == 1 ? 1 : 0;
    }
  }

  std::size_t successes(PromptId p) const { return successes_[static_cast<std::size_t>(p)]; }
  std::size_t attempts(PromptId p) const { return attempts_[static_cast<std::size_t>(p)]; }

  double rate(PromptId p) const {
    const auto a = attempts(p);
    return a == 0 ? 0.0 : static_cast<double>(successes(p)) / static_cast<double>(a);
  }

 private:
  std::vector<std::size_t> successes_;
  std::vector<std::size_t> attempts_;
};

/// Without-replacement prompt batches; the order is reshuffled every epoch.
/// A batch never straddles two epochs: the tail of an epoch too short for
/// the request is skipped.
class EpochSampler {
 public:
  EpochSampler(std::size_t num_prompts, std::uint64_t seed)
      : order_(num_prompts), seed_(seed) {
    reshuffle();
  }

  std::vector<std::size_t> next(std::size_t count) {
    if (count > order_.size()) throw ContractViolation("batch larger than dataset");
    if (pos_ + count > order_.size()) {
      ++epoch_;
      reshuffle();
    }
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(pos_ + count));
    pos_ += count;
    return out;
  }

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    auto g = rng_stream(seed_, epoch_, 0, 0, Purpose::shuffle);
    shuffle(std::span<std::size_t>(order_), g);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t pos_ = 0;
};

/// avg@n: mean over prompts of the fraction of n samples that verify. Uses
/// its own (seed, key) streams and never touches training state.
inline double eval_policy(const PolicyParams& params, std::span<const PromptSpec> dataset,
                          std::size_t n_samples, std::uint64_t seed, std::uint64_t key = 0,
                          std::size_t workers = 1) {
  if (n_samples < 1) throw ContractViolation("eval_policy needs n_samples >= 1");
  if (dataset.empty()) return 0.0;
  std::vector<double> acc(dataset.size(), 0.0);
  const VerifierRule rule{};
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    const auto& prompt = dataset[i];
    auto rng = rng_stream(seed, key, static_cast<std::uint64_t>(prompt.prompt_id), 0, Purpose::eval);
    std::size_t correct = 0;
    for (std::size_t s = 0; s < n_samples; ++s) {
      auto r = sample_response(params, prompt, rng);
      correct += static_cast<std::size_t>(verify(rule, prompt, r));
    }
    acc[i] = static_cast<double>(correct) / static_cast<double>(n_samples);
  });
  double sum = 0.0;
  for (double a : acc) sum += a;
  return sum / static_cast<double>(dataset.size());
}

struct TrainResult {
  std::vector<StepMetrics> metrics;
  PolicyParams params;
};

using StepObserver = std::function<void(const StepMetrics&)>;

namespace detail {

inline double zero_signal_ratio(std::span<const Group> groups) {
  if (groups.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) n += is_zero_signal(g) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(groups.size());
}

inline std::vector<PromptSpec> pick(std::span<const PromptSpec> dataset,
                                    const std::vector<std::size_t>& idx) {
  std::vector<PromptSpec> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(dataset[i]);
  return out;
}

}  // namespace detail

/// The training loop. Per step: draw a prompt batch, snapshot the policy,
/// roll out per the algorithm, apply response reuse to zero-correct groups
/// (ar3po with reuse on), normalize advantages, run prompt_batch/mini_batch
/// surrogate updates (repeated update_epochs times), insert new correct
/// responses into the buffer, and emit StepMetrics.
inline TrainResult train(const RunConfig& config, std::span<const PromptSpec> dataset,
                         const StepObserver& observer = {}) {
  RunConfig cfg = config;
  resolve(cfg);
  validate(cfg);
  if (dataset.empty()) throw ContractViolation("training needs a nonempty dataset");
  if (static_cast<std::size_t>(cfg.prompt_batch) > dataset.size())
    throw ConfigError("batch/prompt_batch", "larger than the dataset");
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset[i].prompt_id != static_cast<PromptId>(i))
      throw ContractViolation("dataset prompt ids must be 0..n-1 in order");

  const auto B = static_cast<std::size_t>(cfg.prompt_batch);
  const auto m = static_cast<std::size_t>(cfg.mini_batch);
  const auto workers = static_cast<std::size_t>(cfg.workers);
  const bool reuse_on = effective_reuse_mode(cfg) != ReuseMode::off;
  const ClipConfig clip{cfg.clip_low, cfg.clip_high};
  const std::uint64_t eval_seed = stream_key(cfg.seed, 0, 0, 0, Purpose::eval);

  TrainResult result;
  result.params = initial_policy(dataset, cfg.env);
  auto& params = result.params;
  Optimizer optimizer(cfg.optimizer, cfg.rmsprop_decay, cfg.rmsprop_eps);
  ReplayBuffer buffer(static_cast<std::size_t>(cfg.buffer_capacity));
  CumulativeStats stats(dataset.size());
  EpochSampler sampler(dataset.size(), cfg.seed);

  for (std::int64_t step = 1; step <= cfg.total_steps; ++step) {
    RolloutContext ctx{PolicySnapshot(params), VerifierRule{}, cfg.seed, step, workers};
    const PolicyParams& behavior = ctx.snapshot.params();

    RolloutReport report;
    switch (cfg.algo) {
      case Algo::grpo:
        report = rollout_uniform(ctx, detail::pick(dataset, sampler.next(B)),
                                 static_cast<std::size_t>(cfg.group_size));
        break;
      case Algo::ar3po:
        report = rollout_adaptive(ctx, detail::pick(dataset, sampler.next(B)),
                                  static_cast<std::size_t>(cfg.stages),
                                  static_cast<std::size_t>(cfg.per_stage));
        break;
      case Algo::dapo: {
        PromptSupply supply = [&](std::size_t n) {
          std::vector<PromptSpec> out;
          while (out.size() < n) {
            const auto take = std::min(B, n - out.size());
            for (auto& p : detail::pick(dataset, sampler.next(take))) out.push_back(std::move(p));
          }
          return out;
        };
        report = rollout_dynamic(ctx, supply, B, static_cast<std::size_t>(cfg.group_size),
                                 static_cast<std::size_t>(cfg.oversample_batch), B);
        break;
      }
    }

    StepMetrics sm;
    sm.step = step;
    sm.responses_sampled = report.total_responses;
    sm.responses_per_prompt = report.responses_per_prompt;
    sm.prompts_drawn = report.prompts_drawn;
    sm.prompts_discarded = report.prompts_discarded;
    sm.underfilled = report.underfilled;

    auto& groups = report.groups;
    sm.zero_signal_ratio_pre_reuse = detail::zero_signal_ratio(groups);

    // Reward, length, and cumulative success are on-policy quantities, taken
    // before reuse swaps anything in.
    std::size_t sampled = 0;
    double reward_sum = 0.0;
    double length_sum = 0.0;
    for (const auto& g : groups) {
      for (const auto& r : g.responses) {
        ++sampled;
        reward_sum += r.reward;
        length_sum += static_cast<double>(r.size());
      }
      stats.record(g);
    }
    if (sampled > 0) {
      sm.avg_reward = reward_sum / static_cast<double>(sampled);
      sm.avg_response_length = length_sum / static_cast<double>(sampled);
    }

    if (reuse_on) {
      for (auto& g : groups) {
        if (g.num_correct() != 0) continue;
        ++sm.reuse_eligible;
        auto rng = rng_stream(cfg.seed, static_cast<std::uint64_t>(step),
                              static_cast<std::uint64_t>(g.prompt_id), 0, Purpose::reuse);
        g = apply_reuse(g, buffer, cfg.reuse_mode, behavior, rng, cfg.std_kind);
        sm.reuse_fired += g.reuse_mode_applied != ReuseMode::off ? 1 : 0;
      }
    }
    for (auto& g : groups) compute_advantages(g, cfg.std_kind);
    sm.zero_signal_ratio_post_reuse = detail::zero_signal_ratio(groups);
    sm.groups_trained = groups.size();

    double ratio_weighted = 0.0;
    std::size_t updates = 0;
    for (int epoch = 0; epoch < cfg.update_epochs && !groups.empty(); ++epoch) {
      for (std::size_t lo = 0; lo < groups.size(); lo += m) {
        const auto n = std::min(m, groups.size() - lo);
        auto rep = surrogate(std::span<const Group>(groups).subspan(lo, n), params, clip,
                             cfg.token_norm, workers);
        optimizer.step(params, rep.gradient, cfg.learning_rate);
        sm.tokens_total += rep.tokens_total;
        sm.tokens_clipped += rep.tokens_clipped;
        ratio_weighted += rep.mean_ratio * static_cast<double>(rep.tokens_total);
        sm.objective_value += rep.value;
        ++updates;
      }
    }
    if (updates > 0) sm.objective_value /= static_cast<double>(updates);
    if (sm.tokens_total > 0) sm.mean_ratio = ratio_weighted / static_cast<double>(sm.tokens_total);

    if (reuse_on)
      for (const auto& g : groups) buffer.insert(g.responses);
    for (const auto& g : groups) {
      const auto b = success_bucket(stats.rate(g.prompt_id));
      ++sm.bucket_prompts[b];
      sm.bucket_responses[b] += g.size();
    }
    sm.buffer_entries = buffer.total();

    const bool eval_due = step == cfg.total_steps || (cfg.eval_every > 0 && step % cfg.eval_every == 0);
    if (eval_due)
      sm.eval_accuracy = eval_policy(params, dataset, static_cast<std::size_t>(cfg.eval_samples),
                                     eval_seed, static_cast<std::uint64_t>(step), workers);

    if (observer) observer(sm);
    result.metrics.push_back(std::move(sm));
  }
  return result;
}

}  // namespace rlvr
