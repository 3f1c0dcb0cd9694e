#include "forge/evaluation/search.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "forge/common/errors.hpp"
#include "forge/common/rng.hpp"
#include "forge/datagen/bo.hpp"

namespace forge::evaluation {

std::string to_string(SearchMethod m) {
  switch (m) {
    case SearchMethod::random: return "random";
    case SearchMethod::ga: return "ga";
    case SearchMethod::bo: return "bo";
  }
  return "?";
}

SearchMethod search_method_from_string(const std::string& name) {
  if (name == "random") return SearchMethod::random;
  if (name == "ga") return SearchMethod::ga;
  if (name == "bo") return SearchMethod::bo;
  throw ConfigError("unknown search method '" + name + "' (expected random, ga or bo)");
}

double SearchTrace::final_error() const { return points.empty() ? std::nan("") : points.back().best_error; }

std::optional<std::size_t> SearchTrace::calls_to_reach(double threshold) const {
  for (const auto& p : points)
    if (p.best_error <= threshold) return p.calls;
  return std::nullopt;
}

double search_objective(const sim::SimulatorSpec& spec, const SearchTarget& target, const sim::Composition& x) {
  const auto d = sim::simulate(spec, x);
  return phase_errors(d.values, target.diagram, target.hidden, target.scale, d.temps()).mean_relative();
}

namespace {

constexpr double kAuxCap = 15.0;

struct Recorder {
  const sim::SimulatorSpec& spec;
  const SearchTarget& target;
  SearchTrace& trace;

  double operator()(const sim::Composition& x) {
    const double e = search_objective(spec, target, x);
    const bool better = trace.points.empty() || e < trace.points.back().best_error;
    if (better) trace.best = x;
    trace.points.push_back({trace.points.size() + 1, better ? e : trace.points.back().best_error});
    return e;
  }
  bool exhausted() const { return trace.points.size() >= trace.budget; }
};

struct Individual {
  sim::Composition x{};
  double error = 0;
};

void run_ga(Recorder& eval, const std::vector<double>& upper, Rng& rng, const std::vector<sim::Composition>& seeds,
            const GaOptions& opt) {
  if (opt.population < 2 || opt.tournament == 0 || opt.elites >= opt.population) {
    throw ConfigError("GA needs population ≥ 2, tournament ≥ 1 and fewer elites than the population");
  }
  std::vector<Individual> pop;
  for (std::size_t i = 0; i < opt.population && !eval.exhausted(); ++i) {
    Individual ind;
    ind.x = i < seeds.size() ? seeds[i] : datagen::sample_feasible_composition(upper, kAuxCap, rng);
    ind.error = eval(ind.x);
    pop.push_back(ind);
  }
  const std::size_t genes = upper.size();
  auto tournament = [&]() -> const Individual& {
    std::size_t best = rng.below(pop.size());
    for (std::size_t k = 1; k < opt.tournament; ++k) {
      const std::size_t c = rng.below(pop.size());
      if (pop[c].error < pop[best].error) best = c;
    }
    return pop[best];
  };
  while (!eval.exhausted()) {
    std::stable_sort(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) { return a.error < b.error; });
    std::vector<Individual> next(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(std::min(opt.elites, pop.size())));
    while (next.size() < opt.population && !eval.exhausted()) {
      const Individual& a = tournament();
      const Individual& b = tournament();
      Individual child;
      for (std::size_t g = 0; g < genes; ++g) {
        const double lo = std::min(a.x[g], b.x[g]), hi = std::max(a.x[g], b.x[g]);
        const double d = hi - lo;
        double v = rng.uniform(lo - opt.blend_alpha * d, hi + opt.blend_alpha * d);
        if (rng.uniform() < opt.mutation_prob) v += rng.normal(0.0, opt.mutation_sigma * upper[g]);
        child.x[g] = std::clamp(v, 0.0, upper[g]);
      }
      datagen::enforce_aux_cap(child.x, kAuxCap);
      child.error = eval(child.x);
      next.push_back(child);
    }
    pop = std::move(next);
  }
}

}  // namespace

SearchTrace search_baseline(SearchMethod method, const sim::SimulatorSpec& spec, const SearchTarget& target,
                            std::size_t budget, std::uint64_t seed, const std::vector<sim::Composition>& seed_population,
                            const GaOptions& ga) {
  if (target.diagram.size() != spec.phases() * sim::kTemperatureCount) {
    throw DimensionError("search target has " + std::to_string(target.diagram.size()) + " cells, simulator produces " +
                         std::to_string(spec.phases() * sim::kTemperatureCount));
  }
  SearchTrace trace;
  trace.method = method;
  trace.budget = budget;
  if (budget == 0) return trace;
  Recorder eval{spec, target, trace};
  const auto upper = datagen::search_upper_bounds();
  Rng rng(seed);

  switch (method) {
    case SearchMethod::random:
      while (!eval.exhausted()) eval(datagen::sample_feasible_composition(upper, kAuxCap, rng));
      break;
    case SearchMethod::ga:
      run_ga(eval, upper, rng, seed_population, ga);
      break;
    case SearchMethod::bo: {
      auto f = [&](std::span<const double> t) { return eval(datagen::composition_from_unit(t, upper, kAuxCap)); };
      auto sampler = [&](Rng& r) {
        return datagen::composition_to_unit(datagen::sample_feasible_composition(upper, kAuxCap, r), upper);
      };
      datagen::gp_ei_minimize(f, sampler, upper.size(), budget, rng);
      break;
    }
  }
  return trace;
}

}  // namespace forge::evaluation
