#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/datagen/dataset.hpp"
#include "forge/evaluation/metrics.hpp"
#include "forge/sim/simulator.hpp"

namespace forge::evaluation {

/// Per-phase affine map onto [0, 1] using the global range of that phase over a dataset.
struct PhaseScale {
  std::vector<double> lo, hi;  // one entry per phase

  static PhaseScale of(const datagen::Dataset& data);
  /// Identity scaling (lo 0, hi 1) for P phases.
  static PhaseScale unit(std::size_t phases);
  double apply(std::size_t phase, double value) const;
};

/// The relative/absolute error metric applied to one diagram pair, phase by phase, over observed cells only. A phase
/// whose scaled truth is zero on every observed cell gets an absolute error instead of a
/// relative one; a phase with no observed cell gets neither.
struct PhaseErrors {
  std::vector<std::optional<double>> relative;
  std::vector<std::optional<double>> absolute;

  /// Mean of the defined relative errors (0 when none is defined).
  double mean_relative() const;
};

/// `hidden` is empty or P·T flags with 1 = not observed.
PhaseErrors phase_errors(std::span<const double> predicted, std::span<const double> truth,
                         std::span<const std::uint8_t> hidden, const PhaseScale& scale, std::size_t temps);

/// Per-phase minimum over the re-simulated candidates for one target.
struct ClosedLoopTarget {
  std::vector<std::optional<double>> relative;
  std::vector<std::optional<double>> absolute;
  std::size_t simulator_calls = 0;
};

ClosedLoopTarget closed_loop_verify(const sim::SimulatorSpec& spec, const std::vector<sim::Composition>& candidates,
                                    std::span<const double> truth, std::span<const std::uint8_t> hidden,
                                    const PhaseScale& scale);

/// Table-5 style summary: per-phase means over targets of the per-target minima.
struct ClosedLoopReport {
  std::vector<std::string> labels;
  std::vector<double> relative;  // NaN when no target defined the phase
  std::vector<double> absolute;
  std::vector<std::size_t> relative_count, absolute_count;
  std::size_t targets = 0;

  void add(const ClosedLoopTarget& target);
  /// Mean over phases with a defined relative error.
  double average_relative() const;
  double average_absolute() const;
};

ClosedLoopReport make_closed_loop_report(const std::vector<std::string>& labels);

/// Predicts candidates for each test row under the evaluation mask, re-simulates them and
/// scores the observed cells. Scaling uses the whole dataset.
ClosedLoopReport closed_loop_fold(const sim::SimulatorSpec& spec, const training::Checkpoint& ckpt,
                                  const datagen::Dataset& data, int test_fold, double mask_ratio, const EvalConfig& cfg);

}  // namespace forge::evaluation
