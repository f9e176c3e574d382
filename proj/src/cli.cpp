// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "stepwidth/checkpoint.hpp"
#include "stepwidth/dataset.hpp"
#include "stepwidth/evaluation.hpp"
#include "stepwidth/plot.hpp"
#include "stepwidth/random.hpp"
#include "stepwidth/search.hpp"
#include "stepwidth/strategy_io.hpp"
#include "stepwidth/training.hpp"

namespace stepwidth {

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <class F>
void as_usage(F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, sep);)
    if (!item.empty()) parts.push_back(item);
  return parts;
}

std::vector<WidthRatio> parse_widths(const std::string& text) {
  std::vector<WidthRatio> out;
  for (const auto& item : split(text, ',')) out.push_back(WidthRatio::parse(item));
  if (out.empty()) throw std::invalid_argument("empty width list");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<StepRange> parse_ranges(const std::string& text) {
  std::vector<StepRange> out;
  for (const auto& item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("range '" + item + "' is not of the form a:b");
    std::size_t used_a = 0, used_b = 0;
    const std::string a = item.substr(0, colon), b = item.substr(colon + 1);
    const unsigned long begin = std::stoul(a, &used_a), end = std::stoul(b, &used_b);
    if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("bad range '" + item + "'");
    out.emplace_back(begin, end);
  }
  if (out.empty()) throw std::invalid_argument("empty range spec");
  return out;
}

std::string ranges_to_string(const std::vector<StepRange>& ranges) {
  std::string s;
  for (const auto& [a, b] : ranges) {
    if (!s.empty()) s += ' ';
    s += std::to_string(a) + ':' + std::to_string(b);
  }
  return s;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string samples_csv(const Tensor& x) {
  std::string s;
  for (std::size_t c = 0; c < x.cols(); ++c) s += (c ? ",x" : "x") + std::to_string(c);
  s += '\n';
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) s += (c ? "," : "") + num(x(r, c));
    s += '\n';
  }
  return s;
}

struct SamplerFlags {
  std::string kind = "ddpm";
  double eta = 0.0;
  int sample_steps = 0;

  void add_to(CLI::App* app) {
    app->add_option("--sampler", kind, "ddpm or ddim")->check(CLI::IsMember({"ddpm", "ddim"}));
    app->add_option("--eta", eta, "DDIM stochasticity");
    app->add_option("--sample-steps", sample_steps, "respaced chain length (0 = full chain)");
  }
  Sampler sampler() const { return Sampler::parse(kind, eta); }
  TimestepSpacing spacing(int total) const {
    return sample_steps > 0 ? respace(total, sample_steps) : TimestepSpacing::full(total);
  }
};

struct ReferenceFlags {
  double bandwidth = 0.2;

  void add_to(CLI::App* app) {
    app->add_option("--bandwidth", bandwidth, "RBF bandwidth of the quality score (0 = median heuristic)")
        ->check(CLI::NonNegativeNumber);
  }
  /// The checkpoint's training set.
  Tensor build(const Checkpoint& ckpt) const {
    if (ckpt.meta.dataset_size == 0) throw std::runtime_error("checkpoint does not record its training set");
    return synth_dataset(parse_dataset_kind(ckpt.meta.dataset), ckpt.meta.dataset_size, ckpt.meta.dataset_seed);
  }
  double resolve(const Tensor& ref) const { return bandwidth > 0.0 ? bandwidth : median_pairwise_distance(ref); }
};

struct Cli {
  explicit Cli(std::ostream& o) : out(o) {}

  std::ostream& out;

  // train
  std::string dataset = "gauss8";
  std::size_t dataset_size = 8192;
  std::uint64_t dataset_seed = 0;
  ScheduleParams schedule;
  DenoiserConfig config;
  std::string widths_text;
  TrainConfig train;
  std::string optimizer = "sgd";
  std::string checkpoint_path;

  // search
  SearchConfig search;
  SamplerFlags sampler;
  ReferenceFlags reference;
  std::string strategy_out;
  std::string archive_out;
  std::string log_out;

  // sample / eval / combine / plot
  std::string strategy_path;
  std::size_t n = 2048;
  std::uint64_t seed = 0;
  std::string out_path;
  bool baseline = false;
  int steps_override = 0;
  std::string large = "8/8";
  std::string small = "2/8";
  std::vector<std::string> small_ranges;

  int run_train();
  int run_search();
  int run_sample();
  int run_eval();
  int run_combine();
  int run_plot();
};

int Cli::run_train() {
  as_usage([&] {
    parse_dataset_kind(dataset);
    if (!widths_text.empty()) config.allowed_widths = parse_widths(widths_text);
    config.validate();
    train.optimizer = optimizer == "adam" ? OptimizerKind::adam : OptimizerKind::sgd;
    train.validate();
    schedule.build();
    if (dataset_size == 0) throw std::invalid_argument("--dataset-size must be positive");
  });
  const Tensor data = synth_dataset(parse_dataset_kind(dataset), dataset_size, dataset_seed);
  Checkpoint ckpt{SupernetParams::initialize(config, derive_seed(train.seed, 0)), schedule,
                  CheckpointMeta{train.seed, 0, dataset, dataset_size, dataset_seed}};
  Trainer trainer(ckpt.net, data, train, schedule.build());
  trainer.run(&out, [&](const Trainer& t) {
    ckpt.net = t.ema();
    ckpt.meta.iterations = t.iterations_done();
    save_checkpoint(checkpoint_path, ckpt);
  });
  ckpt.net = trainer.ema();
  ckpt.meta.iterations = trainer.iterations_done();
  save_checkpoint(checkpoint_path, ckpt);
  out << "wrote " << checkpoint_path << '\n';
  return kExitOk;
}

int Cli::run_search() {
  as_usage([&] {
    if (!widths_text.empty()) search.options = parse_widths(widths_text);
    search.sampler = sampler.sampler();
    search.steps = sampler.sample_steps;
    search.bandwidth = reference.bandwidth;
    search.validate();
  });
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const NoiseSchedule sched = ckpt.schedule.build();
  const Tensor ref = reference.build(ckpt);

  std::ostringstream log;
  const SupernetSearch found = evolutionary_search(ckpt.net, sched, ref, search, &log);
  out << log.str();
  if (!log_out.empty()) write_text(log_out, log.str());

  std::vector<WidthRatio> options = search.options.empty() ? ckpt.net.config.allowed_widths : search.options;
  StrategyFile file = StrategyFile::from_strategy(found.result.best.strategy, options, search.sampler, found.spacing);
  file.provenance = StrategyProvenance{search.seed,       search.generations,
                                       search.population, search.mutation,
                                       search.flops_weight, found.result.best.quality * found.quality_unit,
                                       found.result.best.avg_flops * found.flops_unit};
  save_strategy(strategy_out, file);
  if (!archive_out.empty())
    write_archive_csv(archive_out, found.result.pareto_front, found.quality_unit, found.flops_unit);
  out << "best=" << found.result.best.strategy.to_string() << " quality=" << num(found.result.best.quality)
      << " avg_flops=" << num(file.provenance->avg_flops) << '\n';
  return kExitOk;
}

int Cli::run_sample() {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const NoiseSchedule sched = ckpt.schedule.build();
  Tensor x;
  if (strategy_path.empty()) {
    const TimestepSpacing spacing = sampler.spacing(sched.steps());
    x = generate_with_strategy(ckpt.net, sched, uniform_strategy(ckpt.net.config.max_width(), spacing.size()),
                               sampler.sampler(), spacing, n, seed);
  } else {
    const StrategyFile file = load_strategy(strategy_path);
    x = generate_with_strategy(ckpt.net, sched, file.strategy(), file.sampler, file.timestep_spacing(), n, seed);
  }
  write_text(out_path, samples_csv(x));
  out << "wrote " << x.rows() << " samples to " << out_path << '\n';
  return kExitOk;
}

int Cli::run_eval() {
  if (baseline == !strategy_path.empty()) throw UsageError("eval needs exactly one of --strategy or --baseline");
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const NoiseSchedule sched = ckpt.schedule.build();
  const Tensor ref = reference.build(ckpt);
  const double bandwidth = reference.resolve(ref);

  std::string id;
  StrategyEvaluation eval;
  if (baseline) {
    const TimestepSpacing spacing = sampler.spacing(sched.steps());
    const DenseNetwork dense = extract_subnetwork(ckpt.net, ckpt.net.config.max_width());
    const Tensor x = generate_baseline(dense, sched, sampler.sampler(), spacing, n, seed);
    eval.quality = mmd_quality(x, ref, bandwidth);
    eval.quality.seed = seed;
    eval.flops = strategy_flops(ckpt.net.config, uniform_strategy(ckpt.net.config.max_width(), spacing.size()), spacing);
    id = "baseline";
  } else {
    const StrategyFile file = load_strategy(strategy_path);
    const TimestepSpacing spacing =
        steps_override > 0 ? respace(sched.steps(), steps_override) : file.timestep_spacing();
    eval = evaluate_strategy(ckpt.net, sched, file.strategy(), file.sampler, spacing, ref, n, seed, bandwidth);
    id = file.strategy().to_string();
  }
  out << "strategy=" << id << " quality=" << num(eval.quality.value) << " avg_flops=" << num(eval.flops.average)
      << " total_flops=" << eval.flops.total << '\n';
  if (!out_path.empty()) write_text(out_path, evaluation_csv_header() + "\n" + evaluation_csv_row(id, eval) + "\n");
  return kExitOk;
}

int Cli::run_combine() {
  WidthRatio big, little;
  std::vector<std::vector<StepRange>> specs;
  as_usage([&] {
    big = WidthRatio::parse(large);
    little = WidthRatio::parse(small);
    for (const auto& s : small_ranges) specs.push_back(parse_ranges(s));
    if (specs.size() > 26) throw std::invalid_argument("at most 26 --small-range specs");
  });
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  ckpt.net.config.require_allowed(big);
  ckpt.net.config.require_allowed(little);
  const NoiseSchedule sched = ckpt.schedule.build();
  const TimestepSpacing spacing = sampler.spacing(sched.steps());
  const Tensor ref = reference.build(ckpt);
  const double bandwidth = reference.resolve(ref);

  std::string table = "name,quality,avg_flops,small_ranges\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Strategy s = make_range_strategy(big, little, specs[i], spacing.size());
    const StrategyEvaluation eval =
        evaluate_strategy(ckpt.net, sched, s, sampler.sampler(), spacing, ref, n, seed, bandwidth);
    table += std::string(1, static_cast<char>('A' + i)) + ',' + num(eval.quality.value) + ',' +
             num(eval.flops.average) + ',' + ranges_to_string(specs[i]) + '\n';
  }
  out << table;
  if (!out_path.empty()) write_text(out_path, table);
  return kExitOk;
}

int Cli::run_plot() {
  const StrategyFile file = load_strategy(strategy_path);
  plot_strategy(file.strategy(), file.width_options, out_path);
  out << "wrote " << out_path << ".svg and " << out_path << ".csv\n";
  return kExitOk;
}

void add_checkpoint(CLI::App* app, std::string& path) {
  app->add_option("--checkpoint", path, "supernet checkpoint")->required();
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Cli cli(out);
  CLI::App app{"Step-aware slimmable diffusion toolkit", "stepwidth"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for all subcommands");

  auto* train = app.add_subcommand("train", "train a slimmable supernet and write a checkpoint");
  train->add_option("--dataset", cli.dataset, "gauss8, two_moons or swiss_roll");
  train->add_option("--dataset-size", cli.dataset_size);
  train->add_option("--dataset-seed", cli.dataset_seed);
  train->add_option("--diffusion-steps", cli.schedule.steps, "T");
  train->add_option("--beta-start", cli.schedule.beta_start);
  train->add_option("--beta-end", cli.schedule.beta_end);
  train->add_option("--hidden", cli.config.hidden_width, "maximum hidden width");
  train->add_option("--depth", cli.config.depth);
  train->add_option("--time-embed", cli.config.time_embed_dim);
  train->add_option("--widths", cli.widths_text, "allowed width ratios, e.g. 2/8,4/8,8/8");
  train->add_option("--iterations", cli.train.iterations);
  train->add_option("--batch-size", cli.train.batch_size);
  train->add_option("--lr", cli.train.learning_rate);
  train->add_option("--ema-decay", cli.train.ema_decay);
  train->add_option("--optimizer", cli.optimizer)->check(CLI::IsMember({"sgd", "adam"}));
  train->add_option("--seed", cli.train.seed);
  train->add_option("--log-interval", cli.train.log_interval, "iterations per progress line and checkpoint");
  train->add_option("--out", cli.checkpoint_path, "checkpoint path")->required();

  auto* search = app.add_subcommand("search", "evolutionary search for a step-aware width strategy");
  add_checkpoint(search, cli.checkpoint_path);
  search->add_option("--generations", cli.search.generations);
  search->add_option("--population", cli.search.population);
  search->add_option("--mutation", cli.search.mutation);
  search->add_option("--wm", cli.search.flops_weight, "FLOPs weight of the scalar score");
  search->add_option("--samples", cli.search.samples, "samples per strategy evaluation");
  search->add_option("--seed", cli.search.seed);
  search->add_option("--widths", cli.widths_text, "width options to search over");
  cli.sampler.add_to(search);
  cli.reference.add_to(search);
  search->add_option("--out", cli.strategy_out, "strategy file")->required();
  search->add_option("--archive", cli.archive_out, "Pareto archive CSV");
  search->add_option("--log", cli.log_out, "per-generation log file");

  auto* sample = app.add_subcommand("sample", "generate samples with a strategy");
  add_checkpoint(sample, cli.checkpoint_path);
  sample->add_option("--strategy", cli.strategy_path, "strategy file (default: full width on every step)");
  cli.sampler.add_to(sample);
  sample->add_option("--n", cli.n, "number of samples")->check(CLI::PositiveNumber);
  sample->add_option("--seed", cli.seed);
  sample->add_option("--out", cli.out_path, "samples CSV")->required();

  auto* eval = app.add_subcommand("eval", "report quality and FLOPs of a strategy");
  add_checkpoint(eval, cli.checkpoint_path);
  eval->add_option("--strategy", cli.strategy_path, "strategy file");
  eval->add_flag("--baseline", cli.baseline, "evaluate the dense full-width network instead");
  eval->add_option("--steps", cli.steps_override, "evaluate on respace(T, steps) instead of the file's spacing");
  cli.sampler.add_to(eval);
  cli.reference.add_to(eval);
  eval->add_option("--n", cli.n, "number of samples")->check(CLI::PositiveNumber);
  eval->add_option("--seed", cli.seed);
  eval->add_option("--out", cli.out_path, "report CSV");

  auto* combine = app.add_subcommand("combine", "evaluate large/small model combinations over step ranges");
  add_checkpoint(combine, cli.checkpoint_path);
  combine->add_option("--large", cli.large);
  combine->add_option("--small", cli.small);
  combine->add_option("--small-range", cli.small_ranges, "a:b[,c:d...] positions served by the small model")
      ->required()
      ->take_all()
      ->allow_extra_args(false);
  cli.sampler.add_to(combine);
  cli.reference.add_to(combine);
  combine->add_option("--n", cli.n, "number of samples")->check(CLI::PositiveNumber);
  combine->add_option("--seed", cli.seed);
  combine->add_option("--out", cli.out_path, "table CSV");

  auto* plot = app.add_subcommand("plot", "write SVG and CSV views of a strategy");
  plot->add_option("--strategy", cli.strategy_path, "strategy file")->required();
  plot->add_option("--out", cli.out_path, "output path without extension")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* asked = &app;
    for (const auto* sub : app.get_subcommands()) asked = sub;
    out << asked->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const CLI::App* failed = &app;
    for (const auto* sub : app.get_subcommands()) failed = sub;
    err << "error: " << e.what() << "\n\n" << failed->help();
    return kExitUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  try {
    const std::string name = chosen->get_name();
    if (name == "train") return cli.run_train();
    if (name == "search") return cli.run_search();
    if (name == "sample") return cli.run_sample();
    if (name == "eval") return cli.run_eval();
    if (name == "combine") return cli.run_combine();
    return cli.run_plot();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << chosen->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace stepwidth
