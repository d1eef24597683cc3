// rlvrlab: run, sweep, validate, and evaluate synthetic RLVR experiments.
//
// Exit codes: 0 success, 1 validation error, 2 runtime or numerical failure.

#include <cstdio>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "rlvr/rlvr.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

/// One string option per RunConfig field, so any field can be overridden
/// from the command line with its kebab-case name.
struct FieldFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    rlvr::RunConfig defaults;
    rlvr::visit_fields(defaults, [&](std::string_view ptr, std::string_view flag, auto&) {
      const std::string name(flag);
      options[name] =
          app->add_option("--" + name, values[name], "override " + std::string(ptr.substr(1)))
              ->group("Config overrides");
    });
  }

  rlvr::FlagOverrides given() const {
    rlvr::FlagOverrides out;
    for (const auto& [name, opt] : options)
      if (opt->count() > 0) out[name] = values.at(name);
    return out;
  }
};

int report_config_error(const rlvr::ConfigError& e) {
  std::cerr << "validation error: " << e.what() << '\n';
  return kExitValidation;
}

void print_summary(const rlvr::RunOutcome& outcome, const std::string& dir) {
  const auto& s = outcome.summary;
  std::printf("%s (reuse %s) seed %llu: %lld steps, final accuracy %.4f, "
              "%.3f responses/prompt, %.1f responses/step\n",
              s.algo.c_str(), s.reuse_mode.c_str(), static_cast<unsigned long long>(s.seed),
              static_cast<long long>(s.steps), s.final_eval_accuracy, s.mean_responses_per_prompt,
              s.mean_responses_sampled);
  std::printf("wrote %s/{metrics.jsonl,summary.csv,resolved_config.json}\n", dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic RLVR lab: GRPO, DAPO dynamic sampling, and adaptive rollout with "
               "response reuse on a tabular softmax policy"};
  app.require_subcommand(1);

  std::string config_path;
  FieldFlags run_flags, validate_flags, eval_flags;

  auto* run = app.add_subcommand("run", "train one configuration and write metrics");
  run->add_option("-c,--config", config_path, "config file (JSON, comments allowed)")->required();
  run_flags.attach(run);

  auto* validate = app.add_subcommand("validate", "parse and validate a config, print it resolved");
  validate->add_option("-c,--config", config_path, "config file")->required();
  validate_flags.attach(validate);

  std::string sweep_path;
  std::size_t jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "run every variant x seed of a sweep file");
  sweep->add_option("-s,--sweep", sweep_path, "sweep file")->required();
  sweep->add_option("-j,--jobs", jobs, "concurrent runs (overrides the file)");

  std::string params_path;
  std::size_t eval_samples = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a params dump with avg@n");
  eval->add_option("-c,--config", config_path, "config the params were trained with")->required();
  eval->add_option("-p,--params", params_path, "params.bin written by run")->required();
  eval->add_option("-n,--samples", eval_samples, "samples per prompt (default: config eval_samples)");
  eval_flags.attach(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run) {
      const auto cfg = rlvr::load_config(config_path, run_flags.given());
      const auto outcome = rlvr::run_experiment(cfg);
      print_summary(outcome, cfg.output_dir);
    } else if (*validate) {
      const auto cfg = rlvr::load_config(config_path, validate_flags.given());
      std::cout << rlvr::to_json(cfg).dump(2) << '\n';
    } else if (*sweep) {
      auto spec = rlvr::load_sweep(sweep_path);
      if (jobs > 0) spec.jobs = jobs;
      const auto result = rlvr::run_sweep(spec);
      std::cout << rlvr::sweep_table_text(result);
      for (const auto& r : result.runs)
        if (!r.summary)
          std::cerr << "run " << r.variant << " seed " << r.seed << " failed: " << r.error << '\n';
      std::cout << "wrote " << spec.output_dir << "/{comparison.csv,runs.csv}\n";
    } else if (*eval) {
      const auto cfg = rlvr::load_config(config_path, eval_flags.given());
      const auto dataset = rlvr::make_dataset(cfg.env);
      const auto params = rlvr::load_params(params_path);
      if (params.num_prompts() != dataset.size() ||
          params.vocab() != static_cast<std::size_t>(cfg.env.vocab_size) ||
          params.max_len() != static_cast<std::size_t>(cfg.env.max_response_len))
        throw rlvr::ConfigError("params", "dump shape does not match the config's env section");
      const std::size_t n = eval_samples > 0 ? eval_samples : static_cast<std::size_t>(cfg.eval_samples);
      const double acc = rlvr::eval_policy(params, dataset, n,
                                           rlvr::stream_key(cfg.seed, 0, 0, 0, rlvr::Purpose::eval),
                                           0, static_cast<std::size_t>(cfg.workers));
      std::printf("avg@%zu accuracy over %zu prompts: %.6f\n", n, dataset.size(), acc);
    }
  } catch (const rlvr::ConfigError& e) {
    return report_config_error(e);
  } catch (const rlvr::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const rlvr::IoError& e) {
    std::cerr << "write failure: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
