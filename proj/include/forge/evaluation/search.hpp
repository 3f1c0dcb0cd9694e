#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/evaluation/closed_loop.hpp"
#include "forge/sim/simulator.hpp"

namespace forge::evaluation {

enum class SearchMethod { random, ga, bo };

std::string to_string(SearchMethod m);
/// Throws ConfigError for anything but random, ga or bo.
SearchMethod search_method_from_string(const std::string& name);

struct SearchTarget {
  std::vector<double> diagram;        // P·T raw fractions
  std::vector<std::uint8_t> hidden;   // empty, or P·T flags (1 = unspecified)
  PhaseScale scale;
};

struct TracePoint {
  std::size_t calls = 0;
  double best_error = 0;
};

struct SearchTrace {
  SearchMethod method = SearchMethod::random;
  std::size_t budget = 0;
  std::vector<TracePoint> points;  // one per simulator call, best-so-far
  sim::Composition best{};

  double final_error() const;
  /// First call count at which best_error ≤ threshold, or nullopt.
  std::optional<std::size_t> calls_to_reach(double threshold) const;
};

struct GaOptions {
  std::size_t population = 20;
  std::size_t tournament = 3;
  double blend_alpha = 0.5;
  double mutation_sigma = 0.02;  // fraction of each gene's range
  double mutation_prob = 0.2;
  std::size_t elites = 1;
};

/// Mean relative error over observed phases of simulate(x) against the target.
double search_objective(const sim::SimulatorSpec& spec, const SearchTarget& target, const sim::Composition& x);

/// Black-box search over the feasible composition box (Σ auxiliary ≤ 15). Every objective
/// evaluation is one simulator call. `seed_population` entries are evaluated first (GA only).
SearchTrace search_baseline(SearchMethod method, const sim::SimulatorSpec& spec, const SearchTarget& target,
                            std::size_t budget, std::uint64_t seed, const std::vector<sim::Composition>& seed_population = {},
                            const GaOptions& ga = {});

}  // namespace forge::evaluation
