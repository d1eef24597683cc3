#pragma once

#include <gtest/gtest.h>

#include <vector>

#include "rlvr/config.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rollout.hpp"
#include "rlvr/types.hpp"

namespace rlvr::testing {

// Prompts 0..n-1 with answer [1, EOS] and the given calibrated difficulties.
inline std::vector<PromptSpec> prompts_with_difficulty(const std::vector<double>& p) {
  std::vector<PromptSpec> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    PromptSpec s;
    s.prompt_id = static_cast<PromptId>(i);
    s.answer = {static_cast<Token>(1 + i % 3), kEos};
    s.difficulty_seed = p[i];
    out.push_back(s);
  }
  return out;
}

inline EnvConfig small_env() {
  EnvConfig env;
  env.vocab_size = 4;
  env.max_answer_len = 1;
  env.max_response_len = 3;
  return env;
}

inline RolloutContext context_for(const std::vector<PromptSpec>& prompts, std::uint64_t seed,
                                  std::int64_t step, std::size_t workers = 1) {
  return RolloutContext{PolicySnapshot(initial_policy(prompts, small_env())), VerifierRule{},
                        seed, step, workers};
}

inline bool same_response(const Response& a, const Response& b) {
  return a.prompt_id == b.prompt_id && a.tokens == b.tokens &&
         a.behavior_logprobs == b.behavior_logprobs && a.reward == b.reward &&
         a.origin_step == b.origin_step && a.reused == b.reused;
}

inline bool same_group(const Group& a, const Group& b) {
  if (a.prompt_id != b.prompt_id || a.size() != b.size() || a.advantages != b.advantages ||
      a.reuse_mode_applied != b.reuse_mode_applied)
    return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_response(a.responses[i], b.responses[i])) return false;
  return true;
}

inline bool same_report(const RolloutReport& a, const RolloutReport& b) {
  if (a.groups.size() != b.groups.size()) return false;
  for (std::size_t i = 0; i < a.groups.size(); ++i)
    if (!same_group(a.groups[i], b.groups[i])) return false;
  return a.total_responses == b.total_responses && a.per_prompt_counts == b.per_prompt_counts &&
         a.prompts_drawn == b.prompts_drawn && a.prompts_discarded == b.prompts_discarded &&
         a.underfilled == b.underfilled && a.responses_per_prompt == b.responses_per_prompt;
}

}  // namespace rlvr::testing
