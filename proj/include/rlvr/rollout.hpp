#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "rlvr/errors.hpp"
#include "rlvr/parallel.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rng.hpp"
#include "rlvr/types.hpp"
#include "rlvr/verifier.hpp"

namespace rlvr {

/// Everything a rollout needs besides the prompts. Streams are keyed by
/// (seed, step, prompt, stage), so results do not depend on `workers`.
struct RolloutContext {
  PolicySnapshot snapshot;
  VerifierRule verifier{};
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::size_t workers = 1;
};

struct RolloutReport {
  std::vector<Group> groups;
  std::size_t total_responses = 0;
  /// total_responses / prompts_drawn
  double responses_per_prompt = 0.0;
  std::map<PromptId, std::size_t> per_prompt_counts;
  std::size_t prompts_drawn = 0;
  std::size_t prompts_discarded = 0;
  /// Dynamic sampling ran out of draws before filling the batch.
  bool underfilled = false;
};

/// `count` verified responses for one prompt from the (step, prompt, stage)
/// stream.
inline std::vector<Response> generate_responses(const RolloutContext& ctx,
                                                const PromptSpec& prompt, std::size_t count,
                                                std::uint64_t stage) {
  auto rng = rng_stream(ctx.seed, static_cast<std::uint64_t>(ctx.step),
                        static_cast<std::uint64_t>(prompt.prompt_id), stage, Purpose::rollout);
  std::vector<Response> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto r = sample_response(ctx.snapshot, prompt, rng, ctx.step);
    verify(ctx.verifier, prompt, r);
    out.push_back(std::move(r));
  }
  return out;
}

namespace detail {

inline void finish_report(RolloutReport& report) {
  report.responses_per_prompt =
      report.prompts_drawn == 0 ? 0.0
                                : static_cast<double>(report.total_responses) /
                                      static_cast<double>(report.prompts_drawn);
}

inline std::vector<Group> generate_groups(const RolloutContext& ctx,
                                          std::span<const PromptSpec> prompts, std::size_t count,
                                          std::uint64_t stage) {
  std::vector<Group> groups(prompts.size());
  parallel_for(prompts.size(), ctx.workers, [&](std::size_t i) {
    groups[i].prompt_id = prompts[i].prompt_id;
    groups[i].responses = generate_responses(ctx, prompts[i], count, stage);
  });
  return groups;
}

}  // namespace detail

/// GRPO rollout: exactly G responses per prompt.
inline RolloutReport rollout_uniform(const RolloutContext& ctx, std::span<const PromptSpec> prompts,
                                     std::size_t group_size) {
  if (group_size < 2) throw ContractViolation("uniform rollout needs G >= 2");
  RolloutReport report;
  report.groups = detail::generate_groups(ctx, prompts, group_size, 0);
  for (const auto& g : report.groups) {
    report.per_prompt_counts[g.prompt_id] += g.size();
    report.total_responses += g.size();
  }
  report.prompts_drawn = prompts.size();
  detail::finish_report(report);
  return report;
}

/// Supplies the next n prompts of an ordered stream.
using PromptSupply = std::function<std::vector<PromptSpec>(std::size_t n)>;

/// True when the group survives the dynamic-sampling filter 0 < #correct < G.
inline bool has_mixed_rewards(const Group& g) {
  const auto c = g.num_correct();
  return c > 0 && c < g.size();
}

/// DAPO dynamic sampling. Prompts are drawn from the supply in chunks of
/// `chunk` (the last chunk is trimmed to max_draw), each gets G responses, and
/// only groups with mixed rewards are kept. Stops once `target_batch` groups
/// are kept or `max_draw` prompts are consumed. Every generated response
/// counts toward total_responses, including those of filtered prompts and of
/// qualifying prompts beyond the target (both counted in prompts_discarded).
inline RolloutReport rollout_dynamic(const RolloutContext& ctx, const PromptSupply& supply,
                                     std::size_t target_batch, std::size_t group_size,
                                     std::size_t max_draw, std::size_t chunk = 1) {
  if (group_size < 2) throw ContractViolation("dynamic rollout needs G >= 2");
  if (chunk == 0) throw ContractViolation("dynamic rollout chunk must be >= 1");
  RolloutReport report;
  std::uint64_t chunk_index = 0;
  while (report.groups.size() < target_batch && report.prompts_drawn < max_draw) {
    const auto n = std::min(chunk, max_draw - report.prompts_drawn);
    const auto prompts = supply(n);
    if (prompts.size() != n) throw ContractViolation("prompt supply ran dry");
    // The chunk index is the stage key, so a prompt drawn twice in one step
    // gets fresh samples.
    auto groups = detail::generate_groups(ctx, prompts, group_size, chunk_index++);
    report.prompts_drawn += n;
    for (auto& g : groups) {
      report.total_responses += g.size();
      if (has_mixed_rewards(g) && report.groups.size() < target_batch) {
        report.per_prompt_counts[g.prompt_id] += g.size();
        report.groups.push_back(std::move(g));
      } else {
        ++report.prompts_discarded;
      }
    }
  }
  report.underfilled = report.groups.size() < target_batch;
  detail::finish_report(report);
  return report;
}

/// AR3PO adaptive rollout. Every prompt in the pool gets k responses per
/// stage; a prompt leaves the pool as soon as a stage yields a correct
/// response. After S stages each prompt's group is the union of everything
/// it generated, so its size is s*k where s is its last stage.
inline RolloutReport rollout_adaptive(const RolloutContext& ctx,
                                      std::span<const PromptSpec> prompts, std::size_t stages,
                                      std::size_t per_stage) {
  if (stages < 1 || per_stage < 1 || stages * per_stage < 2)
    throw ContractViolation("adaptive rollout needs S >= 1, k >= 1, S*k >= 2");
  RolloutReport report;
  report.groups.resize(prompts.size());
  std::vector<std::size_t> pool(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    pool[i] = i;
    report.groups[i].prompt_id = prompts[i].prompt_id;
  }
  for (std::size_t s = 0; s < stages && !pool.empty(); ++s) {
    std::vector<std::vector<Response>> fresh(pool.size());
    parallel_for(pool.size(), ctx.workers, [&](std::size_t j) {
      fresh[j] = generate_responses(ctx, prompts[pool[j]], per_stage, s);
    });
    std::vector<std::size_t> next;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      bool any_correct = false;
      for (const auto& r : fresh[j]) any_correct = any_correct || r.reward == 1;
      auto& dst = report.groups[pool[j]].responses;
      for (auto& r : fresh[j]) dst.push_back(std::move(r));
      if (!any_correct) next.push_back(pool[j]);
    }
    pool = std::move(next);
  }
  for (const auto& g : report.groups) {
    report.per_prompt_counts[g.prompt_id] += g.size();
    report.total_responses += g.size();
  }
  report.prompts_drawn = prompts.size();
  detail::finish_report(report);
  return report;
}

}  // namespace rlvr
