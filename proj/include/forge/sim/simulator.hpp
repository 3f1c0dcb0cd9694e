#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "forge/sim/composition.hpp"

// Synthetic forward model: composition → phase fractions over a fixed temperature grid.
//
// Closed form (all symbols are fields of SimulatorSpec):
//
//   ℓ_e  = ln(1 + x_e / log_offset) / feature_scale          for every auxiliary element e
//   a, b = ℓ of the two symmetric-pair elements
//   g    = [ℓ of the seven other auxiliaries in element order, a + b, (a − b)² + (a + b)]
//   φ    = [1, g_1..g_9, g_i·g_j for i ≤ j (row-major upper triangle)]          (55 entries)
//   u    = coefficients · φ
//
//   τ(T)   = T / 1500
//   τ_m    = melt_center + melt_range · tanh(u_0 / 2.5)
//   w_m    = melt_width · exp(melt_width_gain · tanh(u_1 / 2.5))
//   L(T)   = σ((τ(T) − τ_m) / w_m)                            liquid fraction
//   for compound c (u index 2 + 2c and 3 + 2c):
//     ln A_c = log_amplitude_c + amplitude_gain_c · tanh(u_{2+2c} / 2.5)
//     τ_c    = solvus_center_c + solvus_range_c · tanh(u_{3+2c} / 2.5)
//     s_c(T) = ln A_c + ln σ((τ_c − τ(T)) / solvus_width_c)
//   solid shares q = softmax([0 (FCC), s_1, ..., s_{P−2}])
//   row LIQUID = L, row FCC = (1 − L)·q_0, compound row c = (1 − L)·q_c
//
// Every entry depends on the pair only through a + b and (a − b)², so exchanging the two
// pair elements leaves the output bit-identical.
namespace forge::sim {

inline constexpr std::size_t kTemperatureCount = 31;
inline constexpr double kTemperatureStep = 50.0;
inline constexpr int kSpecVersion = 1;

std::vector<double> temperature_grid();

/// Phase fractions, phase-major: values[p * temperatures.size() + t].
struct PhaseDiagram {
  std::vector<std::string> labels;
  std::vector<double> temperatures;
  std::vector<double> values;

  std::size_t phases() const { return labels.size(); }
  std::size_t temps() const { return temperatures.size(); }
  double at(std::size_t phase, std::size_t t) const { return values[phase * temps() + t]; }
};

struct SimulatorSpec {
  int version = kSpecVersion;
  std::uint64_t seed = 0;
  std::vector<std::string> labels;  // index 0 liquid, index 1 FCC, rest compounds
  std::size_t liquid_index = 0;
  std::size_t fcc_index = 1;
  std::pair<std::size_t, std::size_t> symmetric_pair{2, 4};  // Mg, Zn

  double log_offset = 0.01;
  double feature_scale = 4.0;

  double melt_center = 0.42;
  double melt_range = 0.06;
  double melt_width = 0.012;
  double melt_width_gain = 0.25;

  std::vector<double> log_amplitude;
  std::vector<double> amplitude_gain;
  std::vector<double> solvus_center;
  std::vector<double> solvus_range;
  std::vector<double> solvus_width;

  std::vector<std::vector<double>> coefficients;  // [2 + 2·(P−2)] × 55

  std::size_t phases() const { return labels.size(); }
  std::size_t compounds() const { return labels.size() - 2; }

  /// Throws ConfigError on inconsistent sizes or a malformed symmetric pair.
  void validate() const;
};

inline constexpr std::size_t kFeatureCount = 55;

/// Draws a fresh spec. Coefficient rows are normalised so that u has zero mean and unit
/// standard deviation over the base alloys, then every real is rounded to 1e-6.
SimulatorSpec generate_spec(std::uint64_t seed, std::size_t phases = 8);

/// The spec shipped with the library (generate_spec with the default seed).
const SimulatorSpec& default_spec();
inline constexpr std::uint64_t kDefaultSpecSeed = 2019;

std::array<double, kFeatureCount> feature_map(const SimulatorSpec& spec, const Composition& x);

/// Throws DomainError if x violates the composition invariants.
PhaseDiagram simulate(const SimulatorSpec& spec, const Composition& x);

/// FCC fraction at 200 °C and 500 °C. Throws DomainError if the grid lacks either.
std::pair<double, double> fcc_extract(const PhaseDiagram& d, std::size_t fcc_index = 1);

/// Least-squares line y500 = a·y200 + b through the base alloys.
std::pair<double, double> fit_fcc_line(const SimulatorSpec& spec);

std::string spec_to_json(const SimulatorSpec& spec);
/// Throws VersionError for an unknown version, ConfigError for malformed content.
SimulatorSpec spec_from_json(const std::string& text);
void save_spec(const SimulatorSpec& spec, const std::filesystem::path& path);
SimulatorSpec load_spec(const std::filesystem::path& path);

}  // namespace forge::sim
