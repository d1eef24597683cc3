#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "rlvr/advantage.hpp"
#include "rlvr/errors.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rng.hpp"
#include "rlvr/types.hpp"

namespace rlvr {

/// Per-prompt store of previously generated correct responses. Each prompt
/// keeps at most `capacity_per_prompt` entries (0 = unbounded), evicting the
/// oldest first. Stores never mix prompts.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity_per_prompt = 4) : capacity_(capacity_per_prompt) {}

  std::size_t capacity_per_prompt() const noexcept { return capacity_; }

  /// Inserts the reward-1 responses, in order. Reused copies are skipped;
  /// only freshly generated responses enter the buffer.
  void insert(std::span<const Response> responses) {
    for (const auto& r : responses) {
      if (r.reward != 1 || r.reused) continue;
      auto& store = stores_[r.prompt_id];
      store.push_back(r);
      if (capacity_ > 0 && store.size() > capacity_) store.erase(store.begin());
    }
  }

  /// Oldest first.
  std::span<const Response> entries(PromptId prompt) const {
    auto it = stores_.find(prompt);
    if (it == stores_.end()) return {};
    return it->second;
  }

  std::size_t size(PromptId prompt) const { return entries(prompt).size(); }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& [p, s] : stores_) n += s.size();
    return n;
  }

  std::size_t num_prompts() const noexcept { return stores_.size(); }

 private:
  std::size_t capacity_;
  std::map<PromptId, std::vector<Response>> stores_;
};

/// Response reuse for a group with no correct response. When the buffer has
/// entries for the prompt, a uniformly chosen incorrect response is replaced
/// by a uniformly chosen buffered one (marked reused) and advantages are
/// recomputed. Mode-specific preparation of the reused response:
///   direct   keeps the stored behavior log-probs of the policy that made it
///   option1  overwrites them with log-probs under `current` (ratio 1 at the
///            start of the update)
///   option2  keeps them but the group excludes the response from the
///            objective; it only contributes its reward to the advantages
/// With an empty store the group comes back unchanged with mode `off`.
inline Group apply_reuse(const Group& group, const ReplayBuffer& buffer, ReuseMode mode,
                         const PolicyParams& current, Stream& rng,
                         StdKind std_kind = StdKind::population) {
  if (mode == ReuseMode::off) throw ContractViolation("apply_reuse called with reuse off");
  if (group.num_correct() != 0)
    throw ContractViolation("apply_reuse on a group that already has a correct response");
  if (group.size() < 2) throw InvalidGroup("apply_reuse needs a group of at least 2 responses");

  Group out = group;
  const auto stored = buffer.entries(group.prompt_id);
  if (stored.empty()) {
    out.reuse_mode_applied = ReuseMode::off;
    compute_advantages(out, std_kind);
    return out;
  }
  const auto slot = uniform_index(rng, out.size());
  Response reused = stored[uniform_index(rng, stored.size())];
  reused.reused = true;
  if (mode == ReuseMode::option1)
    reused.behavior_logprobs = logprob(current, reused.prompt_id, reused.tokens);
  out.responses[slot] = std::move(reused);
  out.reuse_mode_applied = mode;
  compute_advantages(out, std_kind);
  return out;
}

}  // namespace rlvr
