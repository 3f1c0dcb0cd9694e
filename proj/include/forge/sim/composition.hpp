#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace forge::sim {

inline constexpr std::size_t kElements = 10;
inline constexpr std::size_t kAluminium = 9;
inline constexpr std::array<std::string_view, kElements> kElementNames{"Cr", "Cu", "Mg", "Ti", "Zn",
                                                                         "Zr", "Mn", "Si", "Ni", "Al"};

/// Element mass fractions in percent, ordered as kElementNames.
using Composition = std::array<double, kElements>;

/// Throws DomainError unless every fraction is finite and non-negative and the total is 100 (1e-9).
void validate_composition(const Composition& x);

/// Sum over the nine auxiliary (non-Al) elements.
double auxiliary_sum(const Composition& x);

/// Clips negative entries to zero and rescales so the fractions sum to 100.
Composition clip_and_normalize(std::span<const double> raw);

Composition swap_elements(Composition x, std::size_t i, std::size_t j);

std::size_t element_index(std::string_view name);

struct BaseAlloy {
  std::string id;
  Composition composition;
};

/// The thirty reference alloys: four tabulated compositions and 26 synthetic ones.
const std::vector<BaseAlloy>& base_alloys();

}  // namespace forge::sim
