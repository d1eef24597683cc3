#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <thread>

#include "rlvr/config.hpp"
#include "rlvr/dataset.hpp"
#include "rlvr/parallel.hpp"
#include "rlvr/rng.hpp"

namespace rlvr {
namespace {

std::vector<std::uint64_t> draws(Stream g, int n) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n; ++i) out.push_back(g());
  return out;
}

TEST(RngStream, IdenticalKeysGiveIdenticalStreams) {
  EXPECT_EQ(draws(rng_stream(42, 7, 3, 1), 100), draws(rng_stream(42, 7, 3, 1), 100));
}

TEST(RngStream, StagesDifferAcrossManyPairs) {
  // 10^4 (stage 0, stage 1) pairs: none may share any of the first 100 draws
  // position-wise, and no two keys may collide.
  std::set<std::uint64_t> keys;
  int identical_positions = 0;
  for (std::uint64_t p = 0; p < 10000; ++p) {
    auto a = draws(rng_stream(1, 5, p, 0), 100);
    auto b = draws(rng_stream(1, 5, p, 1), 100);
    EXPECT_NE(a, b);
    for (int i = 0; i < 100; ++i) identical_positions += a[i] == b[i] ? 1 : 0;
    keys.insert(stream_key(1, 5, p, 0, Purpose::rollout));
    keys.insert(stream_key(1, 5, p, 1, Purpose::rollout));
  }
  EXPECT_EQ(identical_positions, 0);
  EXPECT_EQ(keys.size(), 20000u);
}

TEST(RngStream, PurposeSeparatesStreams) {
  EXPECT_NE(stream_key(1, 2, 3, 0, Purpose::rollout), stream_key(1, 2, 3, 0, Purpose::reuse));
  EXPECT_NE(stream_key(1, 2, 3, 0, Purpose::rollout), stream_key(2, 2, 3, 0, Purpose::rollout));
}

TEST(RngStream, IndependentOfIterationOrder) {
  std::vector<std::vector<std::uint64_t>> forward(50), backward(50);
  for (std::uint64_t p = 0; p < 50; ++p) forward[p] = draws(rng_stream(9, 1, p, 0), 10);
  for (std::uint64_t p = 50; p-- > 0;) backward[p] = draws(rng_stream(9, 1, p, 0), 10);
  EXPECT_EQ(forward, backward);
}

TEST(RngStream, Uniform01InUnitInterval) {
  auto g = rng_stream(3, 0, 0, 0);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(g);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(RngStream, ShuffleIsAPermutation) {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  auto g = rng_stream(1, 0, 0, 0, Purpose::shuffle);
  shuffle(std::span<int>(v), g);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(v, sorted);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Config, DefaultsValidate) {
  RunConfig c;
  resolve(c);
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(c.oversample_batch, 3 * c.prompt_batch);
}

TEST(Config, PaperDefaults) {
  RunConfig c;
  EXPECT_EQ(c.group_size, 8);
  EXPECT_EQ(c.stages, 2);
  EXPECT_EQ(c.per_stage, 4);
  EXPECT_DOUBLE_EQ(c.clip_low, 0.2);
  EXPECT_DOUBLE_EQ(c.clip_high, 0.28);
}

void expect_rejected(const std::string& doc, const std::string& field) {
  try {
    config_from_json(nlohmann::json::parse(doc));
    FAIL() << "accepted " << doc;
  } catch (const ConfigError& e) {
    EXPECT_NE(e.field().find(field), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsInvariantViolations) {
  expect_rejected(R"({"optim": {"clip_low": 1.5}})", "clip_low");
  expect_rejected(R"({"optim": {"clip_high": 0.0}})", "clip_high");
  expect_rejected(R"({"rollout": {"group_size": 1}})", "group_size");
  expect_rejected(R"({"batch": {"prompt_batch": 64, "mini_batch": 10}})", "mini_batch");
  expect_rejected(R"({"algo": "ar3po", "rollout": {"per_stage": 1}})", "per_stage");
  expect_rejected(R"({"algo": "sgd"})", "algo");
  expect_rejected(R"({"rollout": {"group_sise": 8}})", "group_sise");
  expect_rejected(R"({"env": {"max_answer_len": 6, "max_response_len": 6}})", "max_response_len");
  expect_rejected(R"({"batch": {"prompt_batch": 512}, "env": {"dataset_size": 256}})",
                  "prompt_batch");
  expect_rejected(R"({"env": {"difficulty_low": 0.9, "difficulty_high": 0.1}})", "difficulty_high");
  expect_rejected(R"({"schedule": {"total_steps": "ten"}})", "total_steps");
  expect_rejected(R"({"rollout": {"oversample_batch": 10}})", "oversample_batch");
}

TEST(Config, RoundTripsThroughJson) {
  RunConfig c;
  c.algo = Algo::dapo;
  c.seed = 123456789012345ULL;
  c.learning_rate = 0.125;
  c.env.vocab_size = 5;
  c.output_dir = "x/y";
  resolve(c);
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, OverridesSupersedeFileValues) {
  auto doc = parse_config_text(R"({ // comment
    "schedule": {"total_steps": 100}})", "test");
  apply_overrides(doc, {{"total-steps", "3"}, {"algo", "grpo"}, {"learning-rate", "0.5"}});
  const auto c = config_from_json(doc);
  EXPECT_EQ(c.total_steps, 3);
  EXPECT_EQ(c.algo, Algo::grpo);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.5);
  EXPECT_EQ(to_json(c)["schedule"]["total_steps"], 3);
}

TEST(Config, InvalidOverrideNamesTheFlag) {
  auto doc = nlohmann::json::object();
  try {
    apply_overrides(doc, {{"total-steps", "ten"}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "--total-steps");
  }
  EXPECT_THROW(apply_overrides(doc, {{"no-such-flag", "1"}}), ConfigError);
  EXPECT_THROW(apply_overrides(doc, {{"reuse-mode", "sometimes"}}), ConfigError);
}

TEST(Config, EveryFieldHasAFlagAndAKey) {
  RunConfig c;
  std::set<std::string> flags, ptrs;
  visit_fields(c, [&](std::string_view ptr, std::string_view flag, auto&) {
    EXPECT_TRUE(flags.insert(std::string(flag)).second) << flag;
    EXPECT_TRUE(ptrs.insert(std::string(ptr)).second) << ptr;
    EXPECT_EQ(flag.find('_'), std::string_view::npos) << flag;
  });
  std::vector<std::string> leaves;
  detail::collect_leaves(to_json(c), "", leaves);
  EXPECT_EQ(leaves.size(), ptrs.size());
}

TEST(Config, MissingFileIsReported) {
  EXPECT_THROW(read_config_file("/nonexistent/config.jsonc"), ConfigError);
}

TEST(Dataset, CanonicalAndDeterministic) {
  EnvConfig env;
  const auto a = make_dataset(env);
  const auto b = make_dataset(env);
  ASSERT_EQ(a.size(), static_cast<std::size_t>(env.dataset_size));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].prompt_id, static_cast<PromptId>(i));
    EXPECT_EQ(a[i].answer, b[i].answer);
    ASSERT_GE(a[i].answer.size(), 2u);
    ASSERT_LE(a[i].answer.size(), static_cast<std::size_t>(env.max_answer_len + 1));
    EXPECT_EQ(a[i].answer.back(), kEos);
    for (std::size_t t = 0; t + 1 < a[i].answer.size(); ++t) {
      EXPECT_GT(a[i].answer[t], kEos);
      EXPECT_LT(a[i].answer[t], env.vocab_size);
    }
    EXPECT_GE(a[i].difficulty_seed, env.difficulty_low);
    EXPECT_LE(a[i].difficulty_seed, env.difficulty_high);
  }
}

}  // namespace
}  // namespace rlvr
