#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "forge/common/rng.hpp"

namespace forge::datagen {

enum class MaskMode { rows, cells };

std::string to_string(MaskMode mode);
MaskMode mask_mode_from_string(const std::string& name);

/// Which parts of a flattened P × T diagram are unspecified. Row masks hide whole phases;
/// cell masks hide individual (phase, temperature) entries.
struct Mask {
  double ratio = 0.0;
  MaskMode mode = MaskMode::rows;
  std::vector<std::size_t> hidden_phase_rows;  // sorted; rows mode
  std::vector<std::size_t> hidden_cells;       // sorted flat indices; cells mode

  /// Per-cell flags (1 = hidden) for a P × T layout, phase-major.
  std::vector<std::uint8_t> hidden_flags(std::size_t phases, std::size_t temps) const;
  std::size_t hidden_count(std::size_t phases, std::size_t temps) const;
};

/// round(ratio · P) distinct phase rows drawn uniformly.
Mask sample_row_mask(std::size_t phases, double ratio, Rng& rng);
/// round(ratio · D) distinct cells drawn uniformly.
Mask sample_cell_mask(std::size_t phases, std::size_t temps, double ratio, Rng& rng);
Mask row_mask(std::size_t phases, std::vector<std::size_t> hidden_rows);

struct MaskedDiagram {
  std::vector<double> observed;  // v: entries of unmasked cells in flattened order
  std::vector<double> hidden;    // h: entries of masked cells in flattened order
};

/// Splits a flattened diagram (phase-major) into (v, h).
MaskedDiagram apply_mask(std::span<const double> diagram, const Mask& mask, std::size_t phases, std::size_t temps);
/// Inverse of apply_mask.
std::vector<double> merge(const MaskedDiagram& parts, const Mask& mask, std::size_t phases, std::size_t temps);

/// Mask summary fed to networks: per-phase hidden fraction for rows-mode models,
/// per-cell flags for cells-mode models.
std::vector<double> mask_indicators(std::span<const std::uint8_t> hidden_flags, MaskMode mode,
                                    std::size_t phases, std::size_t temps);
std::size_t indicator_width(MaskMode mode, std::size_t phases, std::size_t temps);

std::string mask_to_json(const Mask& mask);
Mask mask_from_json(const std::string& text, std::size_t phases, std::size_t temps);
void save_mask(const Mask& mask, const std::filesystem::path& path);

}  // namespace forge::datagen
