// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/search.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "stepwidth/random.hpp"

namespace stepwidth {

void SearchConfig::validate() const {
  if (generations < 1) throw std::invalid_argument("generations must be >= 1");
  if (population < 2) throw std::invalid_argument("population must be >= 2");
  if (!(mutation >= 0.0 && mutation <= 1.0)) throw std::invalid_argument("mutation probability must lie in [0, 1]");
  if (!(flops_weight >= 0.0)) throw std::invalid_argument("FLOPs weight must be >= 0");
  if (samples < 1) throw std::invalid_argument("samples per evaluation must be >= 1");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (!(bandwidth >= 0.0) || !std::isfinite(bandwidth)) throw std::invalid_argument("bandwidth must be finite and >= 0");
}

double scalar_score(double quality, double avg_flops, double flops_weight) {
  return quality + flops_weight * avg_flops;
}

bool dominates(const Individual& a, const Individual& b) {
  return a.quality <= b.quality && a.avg_flops <= b.avg_flops &&
         (a.quality < b.quality || a.avg_flops < b.avg_flops);
}

std::vector<Strategy> init_population(std::size_t population, std::size_t steps, std::span<const WidthRatio> options,
                                      std::mt19937_64& rng) {
  if (options.empty()) throw std::invalid_argument("init_population: no width options");
  if (steps == 0) throw std::invalid_argument("init_population: strategies need at least one step");
  std::set<WidthRatio> distinct(options.begin(), options.end());
  if (population < distinct.size())
    throw std::invalid_argument("population " + std::to_string(population) + " is smaller than the " +
                                std::to_string(distinct.size()) + " width options");
  std::vector<Strategy> pop;
  pop.reserve(population);
  for (WidthRatio w : distinct) pop.push_back(uniform_strategy(w, steps));
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  while (pop.size() < population) {
    Strategy s;
    s.widths.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) s.widths.push_back(options[pick(rng)]);
    pop.push_back(std::move(s));
  }
  return pop;
}

std::vector<std::vector<std::size_t>> nondominated_sort(const std::vector<Individual>& pop) {
  for (const auto& ind : pop)
    if (!ind.evaluated()) throw std::invalid_argument("nondominated_sort: unevaluated individual " + ind.strategy.to_string());
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts(1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dominates(pop[i], pop[j]))
        dominated[i].push_back(j);
      else if (dominates(pop[j], pop[i]))
        ++count[i];
    }
    if (count[i] == 0) fronts[0].push_back(i);
  }
  while (true) {
    std::vector<std::size_t> next;
    for (std::size_t i : fronts.back())
      for (std::size_t j : dominated[i])
        if (--count[j] == 0) next.push_back(j);
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(next));
  }
  if (n == 0) fronts.clear();
  return fronts;
}

std::vector<double> crowding_distance(const std::vector<Individual>& pop, const std::vector<std::size_t>& front) {
  const std::size_t k = front.size();
  std::vector<double> dist(k, 0.0);
  if (k <= 2) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    return dist;
  }
  auto objective = [&](std::size_t member, int which) {
    const Individual& ind = pop[front[member]];
    return which == 0 ? ind.quality : ind.avg_flops;
  };
  for (int which = 0; which < 2; ++which) {
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double fa = objective(a, which), fb = objective(b, which);
      if (fa != fb) return fa < fb;
      return pop[front[a]].strategy < pop[front[b]].strategy;
    });
    const double lo = objective(order.front(), which);
    const double hi = objective(order.back(), which);
    dist[order.front()] = std::numeric_limits<double>::infinity();
    dist[order.back()] = std::numeric_limits<double>::infinity();
    const double range = hi - lo;
    if (!(range > 0.0)) continue;
    for (std::size_t i = 1; i + 1 < k; ++i)
      dist[order[i]] += (objective(order[i + 1], which) - objective(order[i - 1], which)) / range;
  }
  return dist;
}

std::vector<Individual> select(const std::vector<Individual>& pool, std::size_t population) {
  if (pool.size() < population)
    throw std::invalid_argument("select: pool of " + std::to_string(pool.size()) + " cannot fill a population of " +
                                std::to_string(population));
  const auto fronts = nondominated_sort(pool);
  std::vector<Individual> ranked = pool;
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    const auto crowd = crowding_distance(pool, fronts[r]);
    for (std::size_t i = 0; i < fronts[r].size(); ++i) {
      ranked[fronts[r][i]].rank = r;
      ranked[fronts[r][i]].crowding = crowd[i];
    }
  }
  std::vector<bool> keep(pool.size(), false);
  std::size_t kept = 0;
  for (const auto& front : fronts) {
    if (kept == population) break;
    if (kept + front.size() <= population) {
      for (std::size_t i : front) keep[i] = true;
      kept += front.size();
      continue;
    }
    std::vector<std::size_t> order = front;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (ranked[a].crowding != ranked[b].crowding) return ranked[a].crowding > ranked[b].crowding;
      if (ranked[a].strategy != ranked[b].strategy) return ranked[a].strategy < ranked[b].strategy;
      return a < b;
    });
    for (std::size_t i = 0; kept < population; ++i, ++kept) keep[order[i]] = true;
  }
  std::vector<Individual> out;
  out.reserve(population);
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (keep[i]) out.push_back(ranked[i]);
  return out;
}

std::pair<Strategy, Strategy> crossover_at(const Strategy& a, const Strategy& b, std::size_t pos) {
  if (a.size() != b.size()) throw std::invalid_argument("crossover: parents differ in length");
  if (pos > a.size()) throw std::invalid_argument("crossover: cut point beyond strategy length");
  Strategy c1 = a, c2 = b;
  for (std::size_t i = pos; i < a.size(); ++i) {
    c1.widths[i] = b.widths[i];
    c2.widths[i] = a.widths[i];
  }
  return {std::move(c1), std::move(c2)};
}

std::pair<Strategy, Strategy> single_point_crossover(const Strategy& a, const Strategy& b, std::mt19937_64& rng) {
  if (a.size() != b.size()) throw std::invalid_argument("crossover: parents differ in length");
  if (a.size() < 2) return {a, b};
  std::uniform_int_distribution<std::size_t> cut(1, a.size() - 1);
  return crossover_at(a, b, cut(rng));
}

Strategy mutate(const Strategy& s, double m, std::span<const WidthRatio> options, std::mt19937_64& rng) {
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("mutation probability must lie in [0, 1]");
  if (options.empty()) throw std::invalid_argument("mutate: no width options");
  Strategy out = s;
  if (options.size() < 2 || m == 0.0) return out;
  std::bernoulli_distribution flip(m);
  for (auto& gene : out.widths) {
    if (!flip(rng)) continue;
    std::vector<WidthRatio> others;
    for (WidthRatio w : options)
      if (w != gene) others.push_back(w);
    if (others.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
    gene = others[pick(rng)];
  }
  return out;
}

namespace {

const Individual& tournament(const std::vector<Individual>& pop, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  const Individual& a = pop[pick(rng)];
  const Individual& b = pop[pick(rng)];
  if (a.rank != b.rank) return a.rank < b.rank ? a : b;
  if (a.crowding != b.crowding) return a.crowding > b.crowding ? a : b;
  return b.strategy < a.strategy ? b : a;
}

bool better_scalar(const Individual& a, const Individual& b) {
  if (a.scalar_score != b.scalar_score) return a.scalar_score < b.scalar_score;
  return a.strategy < b.strategy;
}

}  // namespace

SearchResult run_search(std::size_t steps, std::span<const WidthRatio> options, const SearchConfig& cfg,
                        const StrategyEvaluator& evaluate, std::ostream* log) {
  cfg.validate();
  std::mt19937_64 rng(derive_seed(cfg.seed, 2));
  std::map<Strategy, Objectives> cache;
  SearchResult result;

  auto score_all = [&](std::vector<Individual>& inds) {
    std::vector<Strategy> fresh;
    std::set<Strategy> seen;
    for (const auto& ind : inds)
      if (!cache.contains(ind.strategy) && seen.insert(ind.strategy).second) fresh.push_back(ind.strategy);
    std::vector<Objectives> values(fresh.size());
    std::vector<std::exception_ptr> errors(fresh.size());
    const long long count = static_cast<long long>(fresh.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
      try {
        values[i] = evaluate(fresh[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      if (errors[i]) {
        try {
          std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
          throw std::runtime_error("evaluation failed for strategy [" + fresh[i].to_string() + "]: " + e.what());
        }
      }
      cache.emplace(fresh[i], values[i]);
      Individual ind{fresh[i]};
      ind.quality = values[i].quality;
      ind.avg_flops = values[i].flops;
      ind.scalar_score = scalar_score(ind.quality, ind.avg_flops, cfg.flops_weight);
      result.evaluated.push_back(ind);
      if (result.evaluated.size() == 1 || better_scalar(ind, result.best)) result.best = ind;
    }
    for (auto& ind : inds) {
      const Objectives& o = cache.at(ind.strategy);
      ind.quality = o.quality;
      ind.avg_flops = o.flops;
      ind.scalar_score = scalar_score(o.quality, o.flops, cfg.flops_weight);
    }
  };

  std::vector<Individual> population;
  for (auto& s : init_population(cfg.population, steps, options, rng)) population.push_back(Individual{std::move(s)});
  std::vector<Individual> offspring;

  for (int g = 0; g < cfg.generations; ++g) {
    std::vector<Individual> pool = population;
    pool.insert(pool.end(), offspring.begin(), offspring.end());
    score_all(pool);
    population = select(pool, cfg.population);

    GenerationLog entry{g, result.best.scalar_score, 0, cache.size()};
    for (const auto& ind : population) entry.front_size += ind.rank == 0;
    result.generations.push_back(entry);
    if (log)
      *log << "gen=" << entry.generation << " best_score=" << entry.best_score << " front_size=" << entry.front_size
           << " evals=" << entry.evals << '\n';

    if (g + 1 == cfg.generations) break;
    offspring.clear();
    std::set<Strategy> known;
    for (const auto& ind : population) known.insert(ind.strategy);
    for (std::size_t attempt = 0; offspring.size() < cfg.population && attempt < 20 * cfg.population; ++attempt) {
      const Individual& p1 = tournament(population, rng);
      const Individual& p2 = tournament(population, rng);
      auto [c1, c2] = single_point_crossover(p1.strategy, p2.strategy, rng);
      for (Strategy* child : {&c1, &c2}) {
        Strategy mutated = mutate(*child, cfg.mutation, options, rng);
        if (offspring.size() < cfg.population && known.insert(mutated).second)
          offspring.push_back(Individual{std::move(mutated)});
      }
    }
  }

  result.final_population = population;
  const auto fronts = nondominated_sort(result.evaluated);
  for (std::size_t i : fronts.front()) result.pareto_front.push_back(result.evaluated[i]);
  std::sort(result.pareto_front.begin(), result.pareto_front.end(),
            [](const Individual& a, const Individual& b) { return a.avg_flops < b.avg_flops || (a.avg_flops == b.avg_flops && a.strategy < b.strategy); });
  return result;
}

SupernetSearch evolutionary_search(const SupernetParams& net, const NoiseSchedule& sched, const Tensor& reference,
                                   const SearchConfig& cfg, std::ostream* log) {
  cfg.validate();
  net.validate();
  std::vector<WidthRatio> options = cfg.options.empty() ? net.config.allowed_widths : cfg.options;
  std::sort(options.begin(), options.end());
  options.erase(std::unique(options.begin(), options.end()), options.end());
  for (WidthRatio w : options) net.config.require_allowed(w);

  SupernetSearch out{{}, cfg.steps > 0 ? respace(sched.steps(), cfg.steps) : TimestepSpacing::full(sched.steps())};
  out.eval_seed = derive_seed(cfg.seed, 1);
  out.bandwidth = cfg.bandwidth > 0.0 ? cfg.bandwidth : median_pairwise_distance(reference);
  out.flops_unit = static_cast<double>(flops_per_step(net.config, net.config.max_width()));
  const MmdReference mmd(reference, out.bandwidth);
  const Tensor full = generate_with_strategy(net, sched, uniform_strategy(net.config.max_width(), out.spacing.size()),
                                             cfg.sampler, out.spacing, cfg.samples, out.eval_seed);
  out.quality_unit = mmd.score(full);
  if (!(out.quality_unit > 0.0)) out.quality_unit = 1.0;

  const StrategyEvaluator evaluate = [&](const Strategy& s) {
    const Tensor samples = generate_with_strategy(net, sched, s, cfg.sampler, out.spacing, cfg.samples, out.eval_seed);
    return Objectives{mmd.score(samples) / out.quality_unit, strategy_flops(net.config, s, out.spacing).average / out.flops_unit};
  };
  out.result = run_search(out.spacing.size(), options, cfg, evaluate, log);
  return out;
}

}  // namespace stepwidth
