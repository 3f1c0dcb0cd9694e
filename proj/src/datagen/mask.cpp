#include "forge/datagen/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forge/common/errors.hpp"
#include "forge/common/io.hpp"
#include "json.hpp"

namespace forge::datagen {

std::string to_string(MaskMode mode) { return mode == MaskMode::rows ? "rows" : "cells"; }

MaskMode mask_mode_from_string(const std::string& name) {
  if (name == "rows") return MaskMode::rows;
  if (name == "cells") return MaskMode::cells;
  throw ConfigError("unknown mask mode '" + name + "' (expected rows or cells)");
}

namespace {

std::vector<std::size_t> draw_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void check_ratio(double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw DomainError("mask ratio must lie in [0, 1], got " + std::to_string(ratio));
}

}  // namespace

std::vector<std::uint8_t> Mask::hidden_flags(std::size_t phases, std::size_t temps) const {
  std::vector<std::uint8_t> flags(phases * temps, 0);
  if (mode == MaskMode::rows) {
    for (std::size_t p : hidden_phase_rows) {
      if (p >= phases) throw DomainError("mask hides phase " + std::to_string(p) + " but P = " + std::to_string(phases));
      std::fill_n(flags.begin() + static_cast<std::ptrdiff_t>(p * temps), temps, std::uint8_t{1});
    }
  } else {
    for (std::size_t c : hidden_cells) {
      if (c >= flags.size()) throw DomainError("mask hides cell " + std::to_string(c) + " outside the diagram");
      flags[c] = 1;
    }
  }
  return flags;
}

std::size_t Mask::hidden_count(std::size_t /*phases*/, std::size_t temps) const {
  return mode == MaskMode::rows ? hidden_phase_rows.size() * temps : hidden_cells.size();
}

Mask sample_row_mask(std::size_t phases, double ratio, Rng& rng) {
  check_ratio(ratio);
  Mask m;
  m.ratio = ratio;
  m.mode = MaskMode::rows;
  m.hidden_phase_rows = draw_subset(phases, static_cast<std::size_t>(std::lround(ratio * static_cast<double>(phases))), rng);
  return m;
}

Mask sample_cell_mask(std::size_t phases, std::size_t temps, double ratio, Rng& rng) {
  check_ratio(ratio);
  Mask m;
  m.ratio = ratio;
  m.mode = MaskMode::cells;
  const std::size_t d = phases * temps;
  m.hidden_cells = draw_subset(d, static_cast<std::size_t>(std::lround(ratio * static_cast<double>(d))), rng);
  return m;
}

Mask row_mask(std::size_t phases, std::vector<std::size_t> hidden_rows) {
  std::sort(hidden_rows.begin(), hidden_rows.end());
  hidden_rows.erase(std::unique(hidden_rows.begin(), hidden_rows.end()), hidden_rows.end());
  for (std::size_t p : hidden_rows) {
    if (p >= phases) throw DomainError("mask hides phase " + std::to_string(p) + " but P = " + std::to_string(phases));
  }
  Mask m;
  m.mode = MaskMode::rows;
  m.ratio = static_cast<double>(hidden_rows.size()) / static_cast<double>(phases);
  m.hidden_phase_rows = std::move(hidden_rows);
  return m;
}

MaskedDiagram apply_mask(std::span<const double> diagram, const Mask& mask, std::size_t phases, std::size_t temps) {
  if (diagram.size() != phases * temps) {
    throw DimensionError("diagram has " + std::to_string(diagram.size()) + " entries, expected " +
                         std::to_string(phases * temps));
  }
  const auto flags = mask.hidden_flags(phases, temps);
  MaskedDiagram out;
  for (std::size_t i = 0; i < diagram.size(); ++i) (flags[i] ? out.hidden : out.observed).push_back(diagram[i]);
  return out;
}

std::vector<double> merge(const MaskedDiagram& parts, const Mask& mask, std::size_t phases, std::size_t temps) {
  const auto flags = mask.hidden_flags(phases, temps);
  const auto hidden = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1));
  if (parts.hidden.size() != hidden || parts.observed.size() != flags.size() - hidden) {
    throw DimensionError("merge: mask hides " + std::to_string(hidden) + " cells but got " +
                         std::to_string(parts.hidden.size()) + " hidden and " + std::to_string(parts.observed.size()) +
                         " observed values");
  }
  std::vector<double> full(flags.size());
  std::size_t v = 0, h = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) full[i] = flags[i] ? parts.hidden[h++] : parts.observed[v++];
  return full;
}

std::size_t indicator_width(MaskMode mode, std::size_t phases, std::size_t temps) {
  return mode == MaskMode::rows ? phases : phases * temps;
}

std::vector<double> mask_indicators(std::span<const std::uint8_t> flags, MaskMode mode, std::size_t phases,
                                    std::size_t temps) {
  if (flags.size() != phases * temps) throw DimensionError("mask flags do not match the diagram layout");
  if (mode == MaskMode::cells) return std::vector<double>(flags.begin(), flags.end());
  std::vector<double> out(phases, 0.0);
  for (std::size_t p = 0; p < phases; ++p) {
    std::size_t hidden = 0;
    for (std::size_t t = 0; t < temps; ++t) hidden += flags[p * temps + t];
    out[p] = static_cast<double>(hidden) / static_cast<double>(temps);
  }
  return out;
}

std::string mask_to_json(const Mask& mask) {
  nlohmann::json j;
  j["ratio"] = mask.ratio;
  j["mode"] = to_string(mask.mode);
  j["hidden_phase_rows"] = mask.hidden_phase_rows;
  if (mask.mode == MaskMode::cells) j["hidden_cells"] = mask.hidden_cells;
  return j.dump(2) + "\n";
}

Mask mask_from_json(const std::string& text, std::size_t phases, std::size_t temps) {
  Mask m;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& [key, _] : j.items()) {
      if (key != "ratio" && key != "mode" && key != "hidden_phase_rows" && key != "hidden_cells") {
        throw ConfigError("mask file has unknown key '" + key + "'");
      }
    }
    m.ratio = j.at("ratio").get<double>();
    m.mode = mask_mode_from_string(j.value("mode", std::string("rows")));
    m.hidden_phase_rows = j.value("hidden_phase_rows", std::vector<std::size_t>{});
    m.hidden_cells = j.value("hidden_cells", std::vector<std::size_t>{});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed mask file: ") + e.what());
  }
  check_ratio(m.ratio);
  std::sort(m.hidden_phase_rows.begin(), m.hidden_phase_rows.end());
  std::sort(m.hidden_cells.begin(), m.hidden_cells.end());
  m.hidden_flags(phases, temps);  // range check
  if (m.mode == MaskMode::rows &&
      m.hidden_phase_rows.size() != static_cast<std::size_t>(std::lround(m.ratio * static_cast<double>(phases)))) {
    throw ConfigError("mask hides " + std::to_string(m.hidden_phase_rows.size()) + " rows, but ratio " +
                      std::to_string(m.ratio) + " implies " +
                      std::to_string(std::lround(m.ratio * static_cast<double>(phases))));
  }
  return m;
}

void save_mask(const Mask& mask, const std::filesystem::path& path) { write_file(path, mask_to_json(mask)); }

}  // namespace forge::datagen
