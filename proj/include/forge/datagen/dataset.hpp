#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "forge/common/rng.hpp"
#include "forge/datagen/bo.hpp"
#include "forge/sim/simulator.hpp"

namespace forge::datagen {

enum class DatasetKind { neighborhood, bo_driven };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

/// Each auxiliary element scaled by an independent factor in [1 − rel, 1 + rel]; Al takes
/// the remainder. Draws that would push Al below zero, or the auxiliary sum above
/// `aux_cap`, are redrawn.
std::vector<sim::Composition> perturb_neighborhood(const sim::Composition& base, double rel, std::size_t n,
                                                   std::uint64_t seed, double aux_cap = 100.0);

/// Seeded shuffle of 0..n−1 dealt round-robin into k folds.
std::vector<int> assign_folds(std::size_t n, std::size_t k, std::uint64_t seed);

struct DatasetOptions {
  DatasetKind kind = DatasetKind::neighborhood;
  std::size_t size = 1500;
  std::uint64_t seed = 0;
  double rel = 0.20;
  std::size_t bo_budget = 200;
  std::size_t per_point = 15;
  std::size_t folds = 5;
  /// Exchange the symmetric pair in each row with probability 1/2 before simulating.
  bool swap_augment = false;
};

struct Dataset {
  DatasetOptions options;
  std::uint64_t spec_seed = 0;
  std::string spec_sha256;
  std::vector<std::string> labels;
  std::vector<double> temperatures;
  std::vector<sim::Composition> compositions;
  std::vector<std::vector<double>> diagrams;  // phase-major, P·T each
  std::vector<int> folds;
  std::size_t bo_region_points = 0;  // trajectory points inside the target region (bo_driven only)

  std::size_t size() const { return compositions.size(); }
  std::size_t phases() const { return labels.size(); }
  std::size_t temps() const { return temperatures.size(); }
  std::size_t diagram_width() const { return phases() * temps(); }
  std::vector<std::size_t> rows_in_folds(const std::vector<int>& wanted) const;
  std::vector<std::size_t> rows_outside_fold(int fold) const;
};

/// Throws ShortfallError when the BO trajectory has too few points in the target region.
Dataset build_dataset(const DatasetOptions& opts, const sim::SimulatorSpec& spec);

/// Re-simulates every row; true when each stored diagram matches bit for bit.
bool regenerates(const Dataset& ds, const sim::SimulatorSpec& spec);

std::string spec_fingerprint(const sim::SimulatorSpec& spec);

/// Writes <dir>/dataset.csv and the sidecar <dir>/manifest.json.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
std::string dataset_csv(const Dataset& ds);
/// Accepts the dataset directory or the CSV path inside it.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace forge::datagen
