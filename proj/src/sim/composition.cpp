#include "forge/sim/composition.hpp"

#include <algorithm>
#include <cmath>

#include "forge/common/errors.hpp"

namespace forge::sim {

void validate_composition(const Composition& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < kElements; ++i) {
    if (!std::isfinite(x[i]) || x[i] < 0.0) {
      throw DomainError("composition entry " + std::string(kElementNames[i]) + " = " + std::to_string(x[i]) +
                        " must be finite and non-negative");
    }
    total += x[i];
  }
  if (std::abs(total - 100.0) > 1e-9) {
    throw DomainError("composition sums to " + std::to_string(total) + ", expected 100");
  }
}

double auxiliary_sum(const Composition& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < kElements; ++i) {
    if (i != kAluminium) s += x[i];
  }
  return s;
}

Composition clip_and_normalize(std::span<const double> raw) {
  if (raw.size() != kElements) {
    throw DimensionError("composition needs " + std::to_string(kElements) + " entries, got " +
                         std::to_string(raw.size()));
  }
  Composition x{};
  double total = 0.0;
  for (std::size_t i = 0; i < kElements; ++i) {
    x[i] = std::isfinite(raw[i]) ? std::max(raw[i], 0.0) : 0.0;
    total += x[i];
  }
  if (total <= 0.0) {
    x.fill(0.0);
    x[kAluminium] = 100.0;
    return x;
  }
  for (double& v : x) v *= 100.0 / total;
  // Fold the rounding residue into the largest entry so the sum is 100 to the last bit we can.
  double s = 0.0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < kElements; ++i) {
    s += x[i];
    if (x[i] > x[largest]) largest = i;
  }
  x[largest] += 100.0 - s;
  return x;
}

Composition swap_elements(Composition x, std::size_t i, std::size_t j) {
  std::swap(x[i], x[j]);
  return x;
}

std::size_t element_index(std::string_view name) {
  for (std::size_t i = 0; i < kElements; ++i) {
    if (kElementNames[i] == name) return i;
  }
  throw ConfigError("unknown element '" + std::string(name) + "'");
}

const std::vector<BaseAlloy>& base_alloys() {
  // Rows after the first four were drawn by tools/scripts/gen_base_alloys.py.
  static const std::vector<BaseAlloy> alloys{
      {"2024", {0.05, 4.35, 1.5, 0.05, 0.1, 0, 0.6, 0.1, 0, 93.25}},
      {"2025", {0.05, 4.45, 0, 0.05, 0.1, 0, 0.8, 0.85, 0, 93.7}},
      {"6061", {0.2, 0.275, 1, 0.05, 0.1, 0, 0.05, 0.6, 0, 97.725}},
      {"6066", {0.2, 0.95, 1.1, 0.1, 0.1, 0, 0.85, 1.35, 0, 95.35}},
      {"2014", {0, 5.622, 0.835, 0.042, 0.194, 0, 0.688, 0.236, 1.107, 91.276}},
      {"2018", {0.076, 5.218, 0.694, 0.09, 0.142, 0, 0.323, 0.24, 1.086, 92.131}},
      {"2218", {0.027, 5.161, 1.281, 0.04, 0.116, 0, 0.403, 0.7, 0, 92.272}},
      {"2219", {0, 6.153, 1.63, 0.139, 0.233, 0, 0.802, 0.81, 0, 90.233}},
      {"2618", {0.056, 4.85, 0, 0.095, 0.206, 0, 0.805, 0.429, 1.241, 92.318}},
      {"6053", {0.103, 0.219, 0.842, 0.126, 0.155, 0, 0.64, 1.188, 0, 96.727}},
      {"6063", {0.061, 0.68, 0.926, 0.119, 0.062, 0, 0.115, 0.933, 0, 97.104}},
      {"6070", {0.157, 0.72, 0.449, 0.1, 0.061, 0, 0.716, 1.206, 0, 96.591}},
      {"6082", {0.103, 0.169, 1.111, 0.033, 0.136, 0, 0.672, 0.973, 0, 96.803}},
      {"6101", {0.107, 0.596, 0.44, 0.043, 0.107, 0, 0.843, 0.539, 0, 97.325}},
      {"6151", {0.227, 0.171, 0.876, 0.086, 0.076, 0, 0.428, 0.349, 0, 97.787}},
      {"6201", {0.191, 0.867, 0.94, 0.095, 0.117, 0, 0.545, 0.659, 0, 96.586}},
      {"6351", {0.17, 0.771, 1.263, 0.069, 0.184, 0, 0.59, 0.489, 0, 96.464}},
      {"6463", {0, 0.693, 0.472, 0.081, 0.167, 0, 0.461, 0.639, 0, 97.487}},
      {"6951", {0.082, 0.136, 0.709, 0.045, 0.085, 0, 0.873, 1.258, 0, 96.812}},
      {"7001", {0, 1.099, 2.655, 0.083, 6.574, 0, 0.309, 0.207, 0, 89.073}},
      {"7005", {0, 0.326, 2.208, 0.1, 6.54, 0.115, 0.142, 0.234, 0, 90.335}},
      {"7020", {0.281, 2.289, 1.728, 0.027, 5.332, 0.124, 0.069, 0.101, 0, 90.049}},
      {"7034", {0.143, 2.577, 2.25, 0.077, 4.787, 0, 0.244, 0.068, 0, 89.854}},
      {"7039", {0.186, 1.326, 2.891, 0.067, 5.002, 0, 0.172, 0.343, 0, 90.013}},
      {"7068", {0.292, 1.752, 1.767, 0.024, 5.929, 0, 0.261, 0.194, 0, 89.781}},
      {"7075", {0.254, 0.664, 2.171, 0.083, 4.334, 0, 0.324, 0.069, 0, 92.101}},
      {"7076", {0.123, 2.483, 1.717, 0.086, 6.564, 0, 0.352, 0.226, 0, 88.449}},
      {"7175", {0.225, 0.276, 1.289, 0.09, 6.218, 0, 0.494, 0.095, 0, 91.313}},
      {"7178", {0.131, 2.006, 2.08, 0.035, 3.977, 0, 0.293, 0.275, 0, 91.203}},
      {"7475", {0.226, 0.933, 1.765, 0.031, 3.839, 0, 0.283, 0.259, 0, 92.664}},
  };
  return alloys;
}

}  // namespace forge::sim
