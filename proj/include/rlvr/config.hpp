#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlvr/errors.hpp"
#include "rlvr/types.hpp"

namespace rlvr {

struct EnvConfig {
  int vocab_size = 8;
  int max_answer_len = 3;
  int max_response_len = 6;
  int dataset_size = 256;
  double difficulty_low = 0.02;
  double difficulty_high = 0.95;
  std::uint64_t dataset_seed = 2024;

  bool operator==(const EnvConfig&) const = default;
};

struct RunConfig {
  Algo algo = Algo::ar3po;
  std::uint64_t seed = 0;

  int group_size = 8;
  int stages = 2;
  int per_stage = 4;
  // Upper bound on prompts drawn per step under dynamic sampling; 0 resolves
  // to 3 x prompt_batch.
  int oversample_batch = 0;

  // Only ar3po applies reuse; other algorithms ignore this field.
  ReuseMode reuse_mode = ReuseMode::option2;
  // 0 means unbounded.
  int buffer_capacity = 4;

  int prompt_batch = 64;
  int mini_batch = 16;
  int update_epochs = 1;

  double learning_rate = 2.0;
  double clip_low = 0.2;
  double clip_high = 0.28;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double rmsprop_decay = 0.99;
  double rmsprop_eps = 1e-8;
  TokenNorm token_norm = TokenNorm::group;
  StdKind std_kind = StdKind::population;

  int total_steps = 200;
  int eval_every = 10;
  int eval_samples = 8;

  EnvConfig env;

  int workers = 1;

  std::string output_dir = "runs/default";
  bool dump_params = true;
};

namespace detail {

template <typename E>
struct EnumNames;

template <>
struct EnumNames<Algo> {
  static constexpr std::array<std::pair<Algo, std::string_view>, 3> table{
      {{Algo::grpo, "grpo"}, {Algo::dapo, "dapo"}, {Algo::ar3po, "ar3po"}}};
};
template <>
struct EnumNames<ReuseMode> {
  static constexpr std::array<std::pair<ReuseMode, std::string_view>, 4> table{
      {{ReuseMode::off, "off"},
       {ReuseMode::direct, "direct"},
       {ReuseMode::option1, "option1"},
       {ReuseMode::option2, "option2"}}};
};
template <>
struct EnumNames<OptimizerKind> {
  static constexpr std::array<std::pair<OptimizerKind, std::string_view>, 2> table{
      {{OptimizerKind::sgd, "sgd"}, {OptimizerKind::rmsprop, "rmsprop"}}};
};
template <>
struct EnumNames<TokenNorm> {
  static constexpr std::array<std::pair<TokenNorm, std::string_view>, 2> table{
      {{TokenNorm::group, "group"}, {TokenNorm::batch, "batch"}}};
};
template <>
struct EnumNames<StdKind> {
  static constexpr std::array<std::pair<StdKind, std::string_view>, 2> table{
      {{StdKind::population, "population"}, {StdKind::sample, "sample"}}};
};

template <typename E>
std::string enum_choices() {
  std::string s;
  for (const auto& [v, name] : EnumNames<E>::table) {
    if (!s.empty()) s += " | ";
    s += name;
  }
  return s;
}

}  // namespace detail

template <typename E>
std::string_view enum_name(E v) {
  for (const auto& [e, name] : detail::EnumNames<E>::table)
    if (e == v) return name;
  return "?";
}

template <typename E>
bool parse_enum(std::string_view s, E& out) {
  for (const auto& [e, name] : detail::EnumNames<E>::table) {
    if (name == s) {
      out = e;
      return true;
    }
  }
  return false;
}

/// Every RunConfig field, once: JSON pointer, CLI flag (kebab-case), member.
/// Drives serialization, parsing, and flag overrides so the three cannot drift.
template <typename Config, typename Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("/algo", "algo", c.algo);
  v("/seed", "seed", c.seed);
  v("/rollout/group_size", "group-size", c.group_size);
  v("/rollout/stages", "stages", c.stages);
  v("/rollout/per_stage", "per-stage", c.per_stage);
  v("/rollout/oversample_batch", "oversample-batch", c.oversample_batch);
  v("/reuse/mode", "reuse-mode", c.reuse_mode);
  v("/reuse/buffer_capacity", "buffer-capacity", c.buffer_capacity);
  v("/batch/prompt_batch", "prompt-batch", c.prompt_batch);
  v("/batch/mini_batch", "mini-batch", c.mini_batch);
  v("/batch/update_epochs", "update-epochs", c.update_epochs);
  v("/optim/learning_rate", "learning-rate", c.learning_rate);
  v("/optim/clip_low", "clip-low", c.clip_low);
  v("/optim/clip_high", "clip-high", c.clip_high);
  v("/optim/optimizer", "optimizer", c.optimizer);
  v("/optim/rmsprop_decay", "rmsprop-decay", c.rmsprop_decay);
  v("/optim/rmsprop_eps", "rmsprop-eps", c.rmsprop_eps);
  v("/optim/token_norm", "token-norm", c.token_norm);
  v("/optim/std_kind", "std-kind", c.std_kind);
  v("/schedule/total_steps", "total-steps", c.total_steps);
  v("/schedule/eval_every", "eval-every", c.eval_every);
  v("/schedule/eval_samples", "eval-samples", c.eval_samples);
  v("/env/vocab_size", "vocab-size", c.env.vocab_size);
  v("/env/max_answer_len", "max-answer-len", c.env.max_answer_len);
  v("/env/max_response_len", "max-response-len", c.env.max_response_len);
  v("/env/dataset_size", "dataset-size", c.env.dataset_size);
  v("/env/difficulty_low", "difficulty-low", c.env.difficulty_low);
  v("/env/difficulty_high", "difficulty-high", c.env.difficulty_high);
  v("/env/dataset_seed", "dataset-seed", c.env.dataset_seed);
  v("/runtime/workers", "workers", c.workers);
  v("/output/dir", "output-dir", c.output_dir);
  v("/output/dump_params", "dump-params", c.dump_params);
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  auto copy = cfg;
  visit_fields(copy, [&](std::string_view ptr, std::string_view, auto& field) {
    using T = std::decay_t<decltype(field)>;
    nlohmann::json::json_pointer p{std::string(ptr)};
    if constexpr (std::is_enum_v<T>) {
      j[p] = std::string(enum_name(field));
    } else {
      j[p] = field;
    }
  });
  return j;
}

namespace detail {

inline void collect_leaves(const nlohmann::json& j, const std::string& prefix,
                           std::vector<std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) collect_leaves(v, prefix + "/" + k, out);
  } else {
    out.push_back(prefix);
  }
}

template <typename T>
void read_field(const nlohmann::json& v, std::string_view ptr, T& field) {
  const std::string name(ptr.substr(1));
  if constexpr (std::is_enum_v<T>) {
    if (!v.is_string() || !parse_enum(v.get<std::string>(), field))
      throw ConfigError(name, "expected one of " + enum_choices<T>());
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(name, "expected a boolean");
    field = v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(name, "expected a string");
    field = v.get<std::string>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(name, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned()) {
        field = v.get<T>();
      } else {
        if (v.get<std::int64_t>() < 0) throw ConfigError(name, "expected a non-negative integer");
        field = static_cast<T>(v.get<std::int64_t>());
      }
    } else {
      auto x = v.get<std::int64_t>();
      if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max())
        throw ConfigError(name, "integer out of range");
      field = static_cast<T>(x);
    }
  } else {
    if (!v.is_number()) throw ConfigError(name, "expected a number");
    field = v.get<double>();
  }
}

}  // namespace detail

inline ReuseMode effective_reuse_mode(const RunConfig& c) {
  return c.algo == Algo::ar3po ? c.reuse_mode : ReuseMode::off;
}

/// Resolves derived defaults (currently only oversample_batch).
inline void resolve(RunConfig& cfg) {
  if (cfg.oversample_batch == 0) cfg.oversample_batch = 3 * cfg.prompt_batch;
}

/// Throws ConfigError naming the first violated field.
inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* field, const std::string& msg) {
    if (!ok) throw ConfigError(field, msg);
  };
  require(c.group_size >= 2, "rollout/group_size", "must be >= 2");
  require(c.stages >= 1, "rollout/stages", "must be >= 1");
  require(c.per_stage >= 1, "rollout/per_stage", "must be >= 1");
  if (c.algo == Algo::ar3po) {
    require(c.per_stage >= 2, "rollout/per_stage",
            "must be >= 2 for ar3po (a stage-1 group must be normalizable)");
  }
  require(c.prompt_batch >= 1, "batch/prompt_batch", "must be >= 1");
  require(c.mini_batch >= 1, "batch/mini_batch", "must be >= 1");
  require(c.prompt_batch % c.mini_batch == 0, "batch/mini_batch", "must divide prompt_batch");
  require(c.update_epochs >= 1, "batch/update_epochs", "must be >= 1");
  require(c.oversample_batch == 0 || c.oversample_batch >= c.prompt_batch,
          "rollout/oversample_batch", "must be >= prompt_batch");
  require(c.buffer_capacity >= 0, "reuse/buffer_capacity", "must be >= 0 (0 = unbounded)");
  require(c.clip_low > 0.0 && c.clip_low < 1.0, "optim/clip_low", "must lie in (0, 1)");
  require(c.clip_high > 0.0 && c.clip_high < 1.0, "optim/clip_high", "must lie in (0, 1)");
  require(std::isfinite(c.learning_rate) && c.learning_rate >= 0.0, "optim/learning_rate",
          "must be finite and >= 0");
  require(c.rmsprop_decay > 0.0 && c.rmsprop_decay < 1.0, "optim/rmsprop_decay",
          "must lie in (0, 1)");
  require(c.rmsprop_eps > 0.0, "optim/rmsprop_eps", "must be > 0");
  require(c.total_steps >= 0, "schedule/total_steps", "must be >= 0");
  require(c.eval_every >= 0, "schedule/eval_every", "must be >= 0 (0 = final step only)");
  require(c.eval_samples >= 1, "schedule/eval_samples", "must be >= 1");
  const auto& e = c.env;
  require(e.vocab_size >= 2, "env/vocab_size", "must be >= 2 (EOS plus one answer token)");
  require(e.max_answer_len >= 1, "env/max_answer_len", "must be >= 1");
  require(e.max_response_len >= e.max_answer_len + 1, "env/max_response_len",
          "must be >= max_answer_len + 1 so the answer and EOS fit");
  require(e.dataset_size >= 1, "env/dataset_size", "must be >= 1");
  require(c.prompt_batch <= e.dataset_size, "batch/prompt_batch", "must be <= env.dataset_size");
  require(e.difficulty_low > 0.0 && e.difficulty_low < 1.0, "env/difficulty_low",
          "must lie in (0, 1)");
  require(e.difficulty_high > 0.0 && e.difficulty_high < 1.0, "env/difficulty_high",
          "must lie in (0, 1)");
  require(e.difficulty_low <= e.difficulty_high, "env/difficulty_high",
          "must be >= difficulty_low");
  require(c.workers >= 1, "runtime/workers", "must be >= 1");
}

/// Parses a (possibly partial) config document over the defaults. Unknown
/// keys are rejected so typos do not silently fall back to defaults.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  RunConfig cfg;
  const auto defaults = to_json(cfg);
  std::vector<std::string> leaves;
  detail::collect_leaves(j, "", leaves);
  for (const auto& leaf : leaves) {
    if (!defaults.contains(nlohmann::json::json_pointer(leaf)) ||
        defaults.at(nlohmann::json::json_pointer(leaf)).is_object())
      throw ConfigError(leaf.substr(1), "unknown config key");
  }
  visit_fields(cfg, [&](std::string_view ptr, std::string_view, auto& field) {
    nlohmann::json::json_pointer p{std::string(ptr)};
    if (j.contains(p)) detail::read_field(j.at(p), ptr, field);
  });
  resolve(cfg);
  validate(cfg);
  return cfg;
}

inline nlohmann::json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/true,
                                 /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", "cannot parse " + origin + ": " + e.what());
  }
}

inline nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), "'" + path + "'");
}

/// Flag name -> raw string value, as given on the command line.
using FlagOverrides = std::map<std::string, std::string>;

/// Applies flag overrides onto a config document. The target type of each
/// flag comes from the field it mirrors; a value that does not convert is
/// reported against the flag name.
inline void apply_overrides(nlohmann::json& doc, const FlagOverrides& overrides) {
  RunConfig defaults;
  std::map<std::string, std::string> flag_to_ptr;
  visit_fields(defaults, [&](std::string_view ptr, std::string_view flag, auto&) {
    flag_to_ptr.emplace(std::string(flag), std::string(ptr));
  });
  for (const auto& [flag, raw] : overrides) {
    auto it = flag_to_ptr.find(flag);
    if (it == flag_to_ptr.end()) throw ConfigError("--" + flag, "unknown override flag");
    const std::string& ptr = it->second;
    bool ok = false;
    nlohmann::json value;
    visit_fields(defaults, [&](std::string_view p, std::string_view, auto& field) {
      if (p != ptr) return;
      using T = std::decay_t<decltype(field)>;
      if constexpr (std::is_same_v<T, bool>) {
        if (raw == "true" || raw == "1") value = true, ok = true;
        else if (raw == "false" || raw == "0") value = false, ok = true;
      } else if constexpr (std::is_same_v<T, std::string> || std::is_enum_v<T>) {
        value = raw;
        ok = true;
        if constexpr (std::is_enum_v<T>) {
          T tmp{};
          ok = parse_enum(raw, tmp);
        }
      } else if constexpr (std::is_integral_v<T>) {
        T x{};
        auto [end, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), x);
        ok = ec == std::errc{} && end == raw.data() + raw.size();
        value = x;
      } else {
        try {
          std::size_t used = 0;
          double x = std::stod(raw, &used);
          ok = used == raw.size();
          value = x;
        } catch (const std::exception&) {
          ok = false;
        }
      }
    });
    if (!ok) throw ConfigError("--" + flag, "invalid override value '" + raw + "'");
    doc[nlohmann::json::json_pointer(ptr)] = value;
  }
}

inline RunConfig load_config(const std::string& path, const FlagOverrides& overrides = {}) {
  auto doc = read_config_file(path);
  apply_overrides(doc, overrides);
  return config_from_json(doc);
}

}  // namespace rlvr
