#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "forge/common/rng.hpp"
#include "forge/sim/simulator.hpp"

namespace forge::datagen {

struct BOObjectiveConfig {
  double line_a = 0.0;
  double line_b = 0.0;
  double d1_threshold = 0.05;
  double cutoff = 0.88;
  double w1 = 1.0, w2 = 1.0, w3 = 0.1, w4 = -0.01;
  double sigma2 = 0.01;
  double constraint_cap = 15.0;
  std::vector<std::pair<double, double>> visited;  // S: (y200, y500) of earlier evaluations

  /// Line fitted to the base alloys under the given simulator.
  static BOObjectiveConfig for_spec(const sim::SimulatorSpec& spec);
};

struct BOTerms {
  double d1 = 0, d2 = 0;
  double l1 = 0, l2 = 0, l3 = 0, l4 = 0;
  double total = 0;
};

double line_distance(double y200, double y500, const BOObjectiveConfig& cfg);
BOTerms bo_terms(double y200, double y500, const sim::Composition& x, const BOObjectiveConfig& cfg);
double bo_objective(double y200, double y500, const sim::Composition& x, const BOObjectiveConfig& cfg);
/// The accepted region for dataset seeding: d1 < threshold and y200 above the cutoff.
bool in_target_region(double y200, double y500, const BOObjectiveConfig& cfg);

// ---- generic GP / expected-improvement minimiser over the unit box -------------------

struct GpEiOptions {
  std::size_t candidates = 1024;
  double noise = 1e-6;
  std::size_t initial = 0;  // 0 → min(budget, dim + 1) random points before the surrogate starts
};

struct Evaluation {
  std::vector<double> point;
  double value = 0;
};

/// Minimises f over points produced by `sample` (each in [0,1]^dim). Returns every
/// evaluation in order. `sample` must only yield feasible points.
std::vector<Evaluation> gp_ei_minimize(const std::function<double(std::span<const double>)>& f,
                                       const std::function<std::vector<double>(Rng&)>& sample, std::size_t dim,
                                       std::size_t budget, Rng& rng, const GpEiOptions& opts = {});

/// Expected improvement of a Gaussian prediction (mean, sd) below `best`.
double expected_improvement(double mean, double sd, double best);

// ---- alloy search -------------------------------------------------------------------

struct BOStep {
  sim::Composition composition{};
  double y200 = 0, y500 = 0;
  double objective = 0;
  double best_so_far = 0;
};

/// Upper bound per auxiliary element for the search box: 1.2 × the largest base-alloy value.
std::vector<double> search_upper_bounds();

/// Puts Σ auxiliary at or below `cap` by proportional shrinking, then sets Al to the balance.
void enforce_aux_cap(sim::Composition& x, double cap);
/// Maps unit-box coordinates (one per auxiliary element) into the search box, capped.
sim::Composition composition_from_unit(std::span<const double> t, const std::vector<double>& upper, double cap);
std::vector<double> composition_to_unit(const sim::Composition& x, const std::vector<double>& upper);

/// Draws a random composition in the search box with Σ auxiliary ≤ cap. Each auxiliary
/// element is zeroed with probability 0.3 so that sparsity is explored.
sim::Composition sample_feasible_composition(const std::vector<double>& upper, double cap, Rng& rng);

/// GP-EI search for compositions minimising the objective. S grows along the trajectory.
std::vector<BOStep> bo_search(BOObjectiveConfig cfg, const sim::SimulatorSpec& spec, std::size_t budget,
                              std::uint64_t seed);

}  // namespace forge::datagen
