#pragma once

#include <algorithm>
#include <cstdint>

#include "rlvr/types.hpp"

namespace rlvr {

enum class VerifierMode : std::uint8_t { exact_match };

/// Rule-based binary reward. New task families add a mode and a branch in
/// verify(); rollout and training only ever call verify().
struct VerifierRule {
  VerifierMode mode = VerifierMode::exact_match;
};

/// 1 iff the response reproduces the canonical answer including its EOS.
/// A response truncated at the length cap never ends in EOS and scores 0.
inline int verify(const VerifierRule& rule, const PromptSpec& prompt, Response& response) {
  int reward = 0;
  switch (rule.mode) {
    case VerifierMode::exact_match:
      reward = std::ranges::equal(response.tokens, prompt.answer) ? 1 : 0;
      break;
  }
  response.reward = reward;
  return reward;
}

}  // namespace rlvr
