#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rlvr/errors.hpp"
#include "rlvr/parallel.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/types.hpp"

namespace rlvr {

struct ClipConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;

  void validate() const {
    if (!(eps_low > 0.0 && eps_low < 1.0)) throw ContractViolation("clip eps_low must lie in (0, 1)");
    if (!(eps_high > 0.0)) throw ContractViolation("clip eps_high must be > 0");
  }
};

struct ObjectiveReport {
  double value = 0.0;
  SparseGradient gradient;
  std::size_t tokens_total = 0;
  std::size_t tokens_clipped = 0;
  double mean_ratio = 0.0;
};

/// pi_current(o_t) / pi_behavior(o_t) for token t of the response.
inline double token_ratio(const PolicyParams& current, const Response& response, std::size_t t) {
  if (t >= response.size()) throw ContractViolation("token index outside response");
  if (response.behavior_logprobs.size() != response.size())
    throw ContractViolation("response has misaligned behavior log-probs");
  detail::check_tokens(current, response.prompt_id, response.tokens);
  const double lp = log_softmax_at(current.row(response.prompt_id, t), response.tokens[t]);
  const double r = std::exp(lp - response.behavior_logprobs[t]);
  if (!std::isfinite(r) || !(r > 0.0))
    throw NumericalFailure("importance ratio " + std::to_string(r) + " at token " +
                           std::to_string(t) + " of prompt " + std::to_string(response.prompt_id));
  return r;
}

/// One token of min(r*A, clip(r, 1-eps_low, 1+eps_high)*A).
struct ClippedTerm {
  double value = 0.0;
  /// d value / d log pi_current(o_t): r*A on the unclipped branch, 0 on the
  /// clipped one.
  double coef = 0.0;
  bool clipped = false;
};

/// Ties (including every ratio inside the clip range) select the unclipped
/// branch.
inline ClippedTerm clipped_term(double ratio, double advantage, const ClipConfig& clip) {
  const double unclipped = ratio * advantage;
  const double bounded = std::clamp(ratio, 1.0 - clip.eps_low, 1.0 + clip.eps_high) * advantage;
  if (bounded < unclipped) return {bounded, 0.0, true};
  return {unclipped, unclipped, false};
}

namespace detail {

struct GroupTerms {
  double sum = 0.0;
  std::size_t tokens = 0;
  std::size_t clipped = 0;
  double ratio_sum = 0.0;
  SparseGradient grad;
};

inline GroupTerms group_terms(const Group& g, const PolicyParams& current, const ClipConfig& clip) {
  if (g.advantages.size() != g.responses.size())
    throw ContractViolation("group for prompt " + std::to_string(g.prompt_id) +
                            " has no advantages computed");
  GroupTerms out;
  out.grad = SparseGradient(current.vocab());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.gradient_excluded(i)) continue;
    const auto& resp = g.responses[i];
    for (std::size_t t = 0; t < resp.size(); ++t) {
      const double r = token_ratio(current, resp, t);
      const auto term = clipped_term(r, g.advantages[i], clip);
      out.sum += term.value;
      out.ratio_sum += r;
      ++out.tokens;
      out.clipped += term.clipped ? 1 : 0;
      accumulate_logprob_grad(current, resp.prompt_id, t, resp.tokens[t], term.coef, out.grad);
    }
  }
  return out;
}

}  // namespace detail

/// Token-level clipped surrogate (no KL term) and its exact gradient with
/// respect to `current`.
///
/// TokenNorm::group: each group's token sum is divided by that group's token
/// count, then groups are averaged. TokenNorm::batch: all token sums are
/// divided by the mini-batch token count. Gradient-excluded (option2 reused)
/// responses contribute to neither numerator nor denominator.
///
/// Per-group partial results are reduced in group order, so the result is
/// bit-identical for any worker count.
inline ObjectiveReport surrogate(std::span<const Group> groups, const PolicyParams& current,
                                 const ClipConfig& clip, TokenNorm norm = TokenNorm::group,
                                 std::size_t workers = 1) {
  if (groups.empty()) throw ContractViolation("surrogate over an empty group list");
  clip.validate();
  std::vector<detail::GroupTerms> parts(groups.size());
  parallel_for(groups.size(), workers,
               [&](std::size_t i) { parts[i] = detail::group_terms(groups[i], current, clip); });

  ObjectiveReport rep;
  rep.gradient = SparseGradient(current.vocab());
  double ratio_sum = 0.0;
  for (const auto& p : parts) {
    rep.tokens_total += p.tokens;
    rep.tokens_clipped += p.clipped;
    ratio_sum += p.ratio_sum;
  }
  if (norm == TokenNorm::group) {
    const double inv_groups = 1.0 / static_cast<double>(groups.size());
    for (const auto& p : parts) {
      if (p.tokens == 0) continue;
      const double w = inv_groups / static_cast<double>(p.tokens);
      rep.value += w * p.sum;
      rep.gradient.add(p.grad, w);
    }
  } else if (rep.tokens_total > 0) {
    const double w = 1.0 / static_cast<double>(rep.tokens_total);
    for (const auto& p : parts) {
      rep.value += w * p.sum;
      rep.gradient.add(p.grad, w);
    }
  }
  rep.mean_ratio =
      rep.tokens_total == 0 ? 0.0 : ratio_sum / static_cast<double>(rep.tokens_total);
  return rep;
}

/// Plain gradient ascent: logits += learning_rate * gradient. Nothing is
/// written if any resulting logit would be non-finite.
inline void apply_update(PolicyParams& params, const SparseGradient& gradient,
                         double learning_rate) {
  if (!std::isfinite(learning_rate)) throw NumericalFailure("non-finite learning rate");
  if (gradient.empty() || learning_rate == 0.0) return;
  if (gradient.vocab() != params.vocab())
    throw ContractViolation("gradient vocabulary does not match parameters");
  SparseGradient step(gradient.vocab());
  step.add(gradient, learning_rate);
  detail::commit_update(params, step);
}

}  // namespace rlvr
