// rewardforge CLI: generate data, run the pretrain -> midtrain -> rl -> eval
// pipeline, and sweep reward configurations.
//
// Exit codes: 0 success, 1 internal error (including NaN aborts),
// 2 config error, 3 missing dependency. Human-facing text goes to stderr;
// stdout carries machine-readable output only.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rewardforge/checkpoint.hpp"
#include "rewardforge/config.hpp"
#include "rewardforge/corpus.hpp"
#include "rewardforge/eval.hpp"
#include "rewardforge/metrics.hpp"
#include "rewardforge/rl.hpp"
#include "rewardforge/tasks.hpp"
#include "rewardforge/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using rewardforge::config::ConfigError;
using rewardforge::config::ExperimentConfig;
using rewardforge::config::MissingDependency;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingDep = 3;

fs::path resolve_run_dir(const ExperimentConfig& cfg, const std::string& out_flag,
                         const std::string& stage) {
  if (!out_flag.empty()) return out_flag;
  std::string root = cfg.out_root;
  if (const char* env = std::getenv("REWARD_FORGE_OUT")) {
    if (*env != '\0') root = env;
  }
  return fs::path(root) / (stage + "-s" + std::to_string(cfg.seed));
}

ExperimentConfig load_config(const std::string& path, std::uint64_t seed_flag,
                             bool has_seed) {
  ExperimentConfig cfg = ExperimentConfig::load(path);
  if (has_seed) cfg.seed = seed_flag;
  return cfg;
}

rewardforge::model::ModelState load_start_state(const std::string& from,
                                                const std::string& stage) {
  if (from.empty()) {
    throw MissingDependency(stage + " requires --from <checkpoint>");
  }
  if (!fs::exists(from)) {
    throw MissingDependency(stage + " checkpoint not found: " + from);
  }
  return rewardforge::model::load_checkpoint(from);
}

int cmd_gen_data(const std::string& family,
                 const rewardforge::data::GeneratorParams& params,
                 std::uint64_t seed, const std::string& out) {
  const rewardforge::data::Corpus corpus =
      rewardforge::data::gen_corpus(family, params, seed);
  fs::path txt(out);
  if (txt.extension() != ".txt") txt += ".txt";
  if (txt.has_parent_path()) fs::create_directories(txt.parent_path());
  rewardforge::data::save_corpus(corpus, txt);
  std::cerr << "wrote " << corpus.documents.size() << " documents to " << txt
            << "\n";
  return kExitOk;
}

int cmd_pretrain(const ExperimentConfig& cfg, const fs::path& run_dir,
                 bool deterministic, const std::string& resume) {
  fs::create_directories(run_dir);
  cfg.save(run_dir / "config.json");

  rewardforge::model::ModelState state =
      resume.empty() ? rewardforge::train::init_for_run(cfg)
                     : rewardforge::model::load_checkpoint(resume);
  rewardforge::train::RunOptions opts;
  opts.run_dir = run_dir;
  opts.deterministic = deterministic;
  const rewardforge::train::PhaseResult result =
      rewardforge::train::run_pretrain(state, cfg, opts);
  if (result.aborted) {
    std::cerr << "pretrain aborted: " << result.abort_reason
              << " (last good checkpoint retained)\n";
    return kExitInternal;
  }
  std::cerr << "pretrain finished at step " << state.step << "\n";
  return kExitOk;
}

int cmd_midtrain(const ExperimentConfig& cfg, const fs::path& run_dir,
                 bool deterministic, const std::string& from) {
  rewardforge::model::ModelState state = load_start_state(from, "midtrain");
  fs::create_directories(run_dir);
  cfg.save(run_dir / "config.json");

  rewardforge::train::RunOptions opts;
  opts.run_dir = run_dir;
  opts.deterministic = deterministic;
  const rewardforge::train::PhaseResult result =
      rewardforge::train::run_midtrain(state, cfg, opts);
  if (result.aborted) {
    std::cerr << "midtrain aborted: " << result.abort_reason << "\n";
    return kExitInternal;
  }
  std::cerr << "midtrain finished at step " << state.step << "\n";
  return kExitOk;
}

int cmd_rl(const ExperimentConfig& cfg, const fs::path& run_dir,
           bool deterministic, const std::string& from, bool dump_rollouts,
           bool resume) {
  rewardforge::model::ModelState state = load_start_state(from, "rl");
  fs::create_directories(run_dir);
  cfg.save(run_dir / "config.json");

  const std::vector<rewardforge::data::TaskInstance> tasks =
      rewardforge::data::gen_tasks(cfg.rl.tasks.family, cfg.rl.tasks.params,
                                   cfg.rl.tasks.seed, cfg.rl.tasks.count);
  rewardforge::rl::RlRunOptions opts;
  opts.run_dir = run_dir;
  opts.deterministic = deterministic;
  opts.dump_rollouts = dump_rollouts;
  opts.resume = resume;
  const rewardforge::rl::RlResult result =
      rewardforge::rl::run_rl(state, tasks, cfg, opts);
  if (result.aborted) {
    std::cerr << "rl aborted: " << result.abort_reason << "\n";
    return kExitInternal;
  }
  std::cerr << "rl finished at step " << state.step << "\n";
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& cfg, const fs::path& run_dir,
             const std::string& from, bool dump) {
  rewardforge::model::ModelState state = load_start_state(from, "eval");
  fs::create_directories(run_dir);
  cfg.save(run_dir / "config.json");

  const std::vector<rewardforge::data::TaskInstance> tasks =
      rewardforge::data::gen_tasks(cfg.eval.tasks.family, cfg.eval.tasks.params,
                                   cfg.eval.tasks.seed, cfg.eval.tasks.count);
  rewardforge::eval::SampleSettings settings;
  settings.m = cfg.eval.m;
  settings.temperature = cfg.eval.temperature;
  settings.top_p = cfg.eval.top_p;
  settings.max_len = cfg.eval.max_len;
  settings.seed = rewardforge::derive_seed(cfg.seed, "eval-stage");

  std::optional<fs::path> dump_path;
  if (dump) dump_path = run_dir / "samples.jsonl";
  const rewardforge::eval::EvalReport report = rewardforge::eval::evaluate(
      state, tasks, settings, cfg.eval.ks, dump_path);

  const nlohmann::json j = report.to_json();
  {
    std::ofstream os(run_dir / "report.json", std::ios::trunc);
    os << j.dump(2) << "\n";
  }
  std::cout << j.dump() << "\n";
  std::cerr << "eval finished: avg@" << report.m << " = " << report.avg_at_m
            << "\n";
  return kExitOk;
}

struct SweepCell {
  int index;
  rewardforge::reward::RewardConfig reward;
  std::uint64_t seed;
  fs::path dir;
};

int run_sweep_cell(const ExperimentConfig& base, const SweepCell& cell,
                   bool deterministic) {
  ExperimentConfig cfg = base;
  cfg.reward = cell.reward;
  cfg.seed = cell.seed;
  cfg.sweep = {};

  fs::create_directories(cell.dir);
  cfg.save(cell.dir / "config.json");

  rewardforge::model::ModelState state = rewardforge::train::init_for_run(cfg);
  rewardforge::train::RunOptions opts;
  opts.run_dir = cell.dir;
  opts.deterministic = deterministic;
  rewardforge::train::PhaseResult result =
      rewardforge::train::run_pretrain(state, cfg, opts);
  if (result.aborted) return kExitInternal;
  if (cfg.midtrain.steps > 0) {
    result = rewardforge::train::run_midtrain(state, cfg, opts);
    if (result.aborted) return kExitInternal;
  }
  if (base.sweep.run_eval) {
    const std::vector<rewardforge::data::TaskInstance> tasks =
        rewardforge::data::gen_tasks(cfg.eval.tasks.family,
                                     cfg.eval.tasks.params, cfg.eval.tasks.seed,
                                     cfg.eval.tasks.count);
    rewardforge::eval::SampleSettings settings;
    settings.m = cfg.eval.m;
    settings.temperature = cfg.eval.temperature;
    settings.top_p = cfg.eval.top_p;
    settings.max_len = cfg.eval.max_len;
    settings.seed = rewardforge::derive_seed(cfg.seed, "eval-stage");
    const rewardforge::eval::EvalReport report = rewardforge::eval::evaluate(
        state, tasks, settings, cfg.eval.ks, std::nullopt);
    std::ofstream os(cell.dir / "report.json", std::ios::trunc);
    os << report.to_json().dump(2) << "\n";
  }
  return kExitOk;
}

std::string csv_num(double v) { return nlohmann::json(v).dump(); }

int cmd_sweep(const ExperimentConfig& cfg, const fs::path& out_dir, int jobs,
              bool deterministic) {
  if (cfg.sweep.rewards.empty()) {
    throw ConfigError("sweep.rewards must be non-empty");
  }
  std::vector<std::uint64_t> seeds = cfg.sweep.seeds;
  if (seeds.empty()) seeds = {cfg.seed};

  std::vector<SweepCell> cells;
  int index = 0;
  for (const rewardforge::reward::RewardConfig& r : cfg.sweep.rewards) {
    for (std::uint64_t s : seeds) {
      SweepCell cell;
      cell.index = index;
      cell.reward = r;
      cell.seed = s;
      char name[64];
      std::snprintf(name, sizeof(name), "cell-%03d", index);
      cell.dir = out_dir / name;
      cells.push_back(cell);
      ++index;
    }
  }
  fs::create_directories(out_dir);
  cfg.save(out_dir / "config.json");

  std::vector<int> status(cells.size(), -1);
  if (jobs <= 1) {
    for (size_t i = 0; i < cells.size(); ++i) {
      std::cerr << "sweep cell " << cells[i].dir.filename().string() << "\n";
      try {
        status[i] = run_sweep_cell(cfg, cells[i], deterministic);
      } catch (const std::exception& e) {
        std::cerr << "cell failed: " << e.what() << "\n";
        status[i] = kExitInternal;
      }
    }
  } else {
    // Cells are independent processes; each child writes only its own dir.
    size_t next = 0;
    std::vector<std::pair<pid_t, size_t>> running;
    while (next < cells.size() || !running.empty()) {
      while (next < cells.size() &&
             running.size() < static_cast<size_t>(jobs)) {
        std::cerr << "sweep cell " << cells[next].dir.filename().string()
                  << "\n";
        std::cout.flush();
        std::cerr.flush();
        const pid_t pid = fork();
        if (pid == 0) {
          int code = kExitInternal;
          try {
            code = run_sweep_cell(cfg, cells[next], deterministic);
          } catch (const std::exception& e) {
            std::cerr << "cell failed: " << e.what() << "\n";
          }
          _exit(code);
        }
        running.emplace_back(pid, next);
        ++next;
      }
      int wstatus = 0;
      const pid_t done = waitpid(-1, &wstatus, 0);
      for (auto it = running.begin(); it != running.end(); ++it) {
        if (it->first == done) {
          status[it->second] =
              WIFEXITED(wstatus) ? WEXITSTATUS(wstatus) : kExitInternal;
          running.erase(it);
          break;
        }
      }
    }
  }

  // Summary from the files each cell left behind.
  std::ofstream csv(out_dir / "summary.csv", std::ios::trunc);
  csv << "cell,beta,lambda_top,lambda_tail,top_k,seed,status,final_ppl,"
         "final_ppl_holdout,final_entropy,mass_out_topk,mass_topk_ex_target";
  if (cfg.sweep.run_eval) csv << ",avg_at_m,cons_at_m";
  csv << "\n";
  for (size_t i = 0; i < cells.size(); ++i) {
    const SweepCell& cell = cells[i];
    csv << cell.dir.filename().string() << "," << csv_num(cell.reward.beta)
        << "," << csv_num(cell.reward.lambda_top) << ","
        << csv_num(cell.reward.lambda_tail) << "," << cell.reward.k << ","
        << cell.seed << "," << (status[i] == 0 ? "ok" : "failed");
    const fs::path metrics_path = cell.dir / "metrics.jsonl";
    if (status[i] == 0 && fs::exists(metrics_path)) {
      const auto records = rewardforge::metrics::read_jsonl(metrics_path);
      if (!records.empty()) {
        const rewardforge::metrics::MetricsRecord& last = records.back();
        csv << "," << csv_num(last.ppl) << "," << csv_num(last.ppl_holdout)
            << "," << csv_num(last.mean_entropy) << ","
            << csv_num(last.mass_out_topk) << ","
            << csv_num(last.mass_topk_ex_target);
      } else {
        csv << ",,,,,";
      }
    } else {
      csv << ",,,,,";
    }
    if (cfg.sweep.run_eval) {
      const fs::path report_path = cell.dir / "report.json";
      if (status[i] == 0 && fs::exists(report_path)) {
        std::ifstream is(report_path);
        nlohmann::json j;
        is >> j;
        csv << "," << csv_num(j.at("avg_at_m").get<double>()) << ","
            << csv_num(j.at("cons_at_m").get<double>());
      } else {
        csv << ",,";
      }
    }
    csv << "\n";
  }
  std::cerr << "sweep finished: " << cells.size() << " cells, summary at "
            << (out_dir / "summary.csv") << "\n";

  for (int s : status) {
    if (s != 0) return kExitInternal;  // cell failures recorded, sweep ran on
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale reward-shaped LM training laboratory"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  std::string gen_family = "markov";
  std::uint64_t gen_seed = 1;
  std::string gen_out = "data/corpus";
  rewardforge::data::GeneratorParams gen_params;
  gen->add_option("--family", gen_family,
                  "markov | addition | modadd | pattern | copy");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output path (.txt appended if missing)");
  gen->add_option("--docs", gen_params.docs, "number of documents");
  gen->add_option("--alphabet", gen_params.alphabet, "markov alphabet size");
  gen->add_option("--order", gen_params.order, "markov order");
  gen->add_option("--peak", gen_params.peak, "markov dominant-symbol mass");
  gen->add_option("--doc-len", gen_params.doc_len, "document length");
  gen->add_option("--min-operand", gen_params.min_operand, "addition minimum");
  gen->add_option("--max-operand", gen_params.max_operand, "addition maximum");
  gen->add_option("--mod", gen_params.mod, "modadd modulus");
  gen->add_option("--pattern", gen_params.pattern, "pattern string");
  gen->add_option("--min-len", gen_params.min_len, "copy min length");
  gen->add_option("--max-len", gen_params.max_len, "copy max length");

  // shared stage flags
  struct StageArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool has_seed = false;
    bool deterministic = false;
    std::string from;
  };
  const auto add_stage_flags = [](CLI::App* cmd, StageArgs& args,
                                  bool needs_from) {
    cmd->add_option("--config", args.config, "experiment config JSON")
        ->required();
    cmd->add_option("--out", args.out, "run directory");
    cmd->add_option("--seed", args.seed, "master seed override")
        ->each([&args](const std::string&) { args.has_seed = true; });
    cmd->add_flag("--deterministic", args.deterministic,
                  "single-threaded reductions, zeroed wall_ms");
    if (needs_from) {
      cmd->add_option("--from", args.from, "input checkpoint (.bin)");
    }
  };

  StageArgs pre_args, mid_args, rl_args, eval_args, sweep_args;
  std::string pre_resume;
  bool rl_dump = false, rl_resume = false, eval_dump = false;
  int sweep_jobs = 1;

  auto* pre = app.add_subcommand("pretrain", "run the pre-training phase");
  add_stage_flags(pre, pre_args, false);
  pre->add_option("--resume", pre_resume, "resume from a checkpoint");

  auto* mid = app.add_subcommand("midtrain", "run the mid-training phase");
  add_stage_flags(mid, mid_args, true);

  auto* rlc = app.add_subcommand("rl", "run the RLVR stage");
  add_stage_flags(rlc, rl_args, true);
  rlc->add_flag("--dump-rollouts", rl_dump, "write rollouts.jsonl");
  rlc->add_flag("--resume", rl_resume, "--from is a mid-rl checkpoint");

  auto* evc = app.add_subcommand("eval", "sampling-based evaluation");
  add_stage_flags(evc, eval_args, true);
  evc->add_flag("--dump", eval_dump, "write samples.jsonl");

  auto* swc = app.add_subcommand("sweep", "run the reward-config grid");
  add_stage_flags(swc, sweep_args, false);
  swc->add_option("--jobs", sweep_jobs, "parallel cell processes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_data(gen_family, gen_params, gen_seed, gen_out);
    }
    if (pre->parsed()) {
      const ExperimentConfig cfg =
          load_config(pre_args.config, pre_args.seed, pre_args.has_seed);
      return cmd_pretrain(cfg, resolve_run_dir(cfg, pre_args.out, "pretrain"),
                          pre_args.deterministic, pre_resume);
    }
    if (mid->parsed()) {
      const ExperimentConfig cfg =
          load_config(mid_args.config, mid_args.seed, mid_args.has_seed);
      return cmd_midtrain(cfg, resolve_run_dir(cfg, mid_args.out, "midtrain"),
                          mid_args.deterministic, mid_args.from);
    }
    if (rlc->parsed()) {
      const ExperimentConfig cfg =
          load_config(rl_args.config, rl_args.seed, rl_args.has_seed);
      return cmd_rl(cfg, resolve_run_dir(cfg, rl_args.out, "rl"),
                    rl_args.deterministic, rl_args.from, rl_dump, rl_resume);
    }
    if (evc->parsed()) {
      const ExperimentConfig cfg =
          load_config(eval_args.config, eval_args.seed, eval_args.has_seed);
      return cmd_eval(cfg, resolve_run_dir(cfg, eval_args.out, "eval"),
                      eval_args.from, eval_dump);
    }
    if (swc->parsed()) {
      const ExperimentConfig cfg =
          load_config(sweep_args.config, sweep_args.seed, sweep_args.has_seed);
      return cmd_sweep(cfg, resolve_run_dir(cfg, sweep_args.out, "sweep"),
                       sweep_jobs, sweep_args.deterministic);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingDependency& e) {
    std::cerr << "missing dependency: " << e.what() << "\n";
    return kExitMissingDep;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitConfig;
}
