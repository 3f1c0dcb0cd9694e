#include "forge/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forge/common/errors.hpp"
#include "forge/common/io.hpp"
#include "forge/common/rng.hpp"
#include "json.hpp"

namespace forge::sim {

namespace {

using json = nlohmann::json;

constexpr double kTanhScale = 2.5;

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_logistic(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::size_t u_count(std::size_t phases) { return 2 + 2 * (phases - 2); }

std::vector<double> eval_u(const SimulatorSpec& spec, const Composition& x) {
  const auto phi = feature_map(spec, x);
  std::vector<double> u(spec.coefficients.size(), 0.0);
  for (std::size_t r = 0; r < u.size(); ++r) {
    double acc = 0.0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) acc += spec.coefficients[r][f] * phi[f];
    u[r] = acc;
  }
  return u;
}

const std::vector<std::string>& default_labels() {
  static const std::vector<std::string> labels{"LIQUID",     "FCC_A1",     "AL2CU_C16", "AL6MN",
                                               "AL3TI_D022", "AL3ZR_D023", "ALMG_BETA", "AL7CU4NI"};
  return labels;
}

}  // namespace

std::vector<double> temperature_grid() {
  std::vector<double> t(kTemperatureCount);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = kTemperatureStep * static_cast<double>(i);
  return t;
}

void SimulatorSpec::validate() const {
  if (labels.size() < 3) throw ConfigError("simulator spec needs at least 3 phases");
  if (liquid_index != 0 || fcc_index != 1) throw ConfigError("simulator spec expects LIQUID at 0 and FCC at 1");
  const std::size_t c = compounds();
  for (const auto* v : {&log_amplitude, &amplitude_gain, &solvus_center, &solvus_range, &solvus_width}) {
    if (v->size() != c) {
      throw ConfigError("simulator spec compound arrays must have " + std::to_string(c) + " entries");
    }
  }
  if (coefficients.size() != u_count(labels.size())) {
    throw ConfigError("simulator spec needs " + std::to_string(u_count(labels.size())) + " coefficient rows, got " +
                      std::to_string(coefficients.size()));
  }
  for (const auto& row : coefficients) {
    if (row.size() != kFeatureCount) {
      throw ConfigError("simulator spec coefficient rows need " + std::to_string(kFeatureCount) + " entries");
    }
  }
  const auto [i, j] = symmetric_pair;
  if (i == j || i >= kAluminium || j >= kAluminium) throw ConfigError("symmetric_pair must name two auxiliary elements");
  if (!(log_offset > 0.0) || !(feature_scale > 0.0) || !(melt_width > 0.0)) {
    throw ConfigError("simulator spec scales must be positive");
  }
  for (double w : solvus_width) {
    if (!(w > 0.0)) throw ConfigError("solvus widths must be positive");
  }
}

std::array<double, kFeatureCount> feature_map(const SimulatorSpec& spec, const Composition& x) {
  const auto [pi, pj] = spec.symmetric_pair;
  auto ell = [&](std::size_t e) { return std::log1p(x[e] / spec.log_offset) / spec.feature_scale; };
  std::array<double, 9> g{};
  std::size_t k = 0;
  for (std::size_t e = 0; e < kAluminium; ++e) {
    if (e != pi && e != pj) g[k++] = ell(e);
  }
  const double a = ell(pi), b = ell(pj);
  const double s = a + b;
  const double d = a - b;
  g[7] = s;
  g[8] = d * d + s;

  std::array<double, kFeatureCount> phi{};
  phi[0] = 1.0;
  for (std::size_t i = 0; i < 9; ++i) phi[1 + i] = g[i];
  std::size_t f = 10;
  for (std::size_t i = 0; i < 9; ++i) {
    for (std::size_t j = i; j < 9; ++j) phi[f++] = g[i] * g[j];
  }
  return phi;
}

PhaseDiagram simulate(const SimulatorSpec& spec, const Composition& x) {
  validate_composition(x);
  const auto u = eval_u(spec, x);
  const std::size_t nc = spec.compounds();

  const double tau_m = spec.melt_center + spec.melt_range * std::tanh(u[0] / kTanhScale);
  const double w_m = spec.melt_width * std::exp(spec.melt_width_gain * std::tanh(u[1] / kTanhScale));
  std::vector<double> log_amp(nc), tau_c(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    log_amp[c] = spec.log_amplitude[c] + spec.amplitude_gain[c] * std::tanh(u[2 + 2 * c] / kTanhScale);
    tau_c[c] = spec.solvus_center[c] + spec.solvus_range[c] * std::tanh(u[3 + 2 * c] / kTanhScale);
  }

  PhaseDiagram d;
  d.labels = spec.labels;
  d.temperatures = temperature_grid();
  const std::size_t nt = d.temperatures.size();
  d.values.assign(spec.phases() * nt, 0.0);
  std::vector<double> logits(nc + 1);
  for (std::size_t t = 0; t < nt; ++t) {
    const double tau = d.temperatures[t] / 1500.0;
    const double liquid = logistic((tau - tau_m) / w_m);
    logits[0] = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      logits[c + 1] = log_amp[c] + log_logistic((tau_c[c] - tau) / spec.solvus_width[c]);
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& l : logits) {
      l = std::exp(l - mx);
      total += l;
    }
    const double solid = 1.0 - liquid;
    d.values[spec.liquid_index * nt + t] = liquid;
    d.values[spec.fcc_index * nt + t] = solid * (logits[0] / total);
    for (std::size_t c = 0; c < nc; ++c) d.values[(2 + c) * nt + t] = solid * (logits[c + 1] / total);
  }
  return d;
}

std::pair<double, double> fcc_extract(const PhaseDiagram& d, std::size_t fcc_index) {
  auto column = [&](double temp) {
    for (std::size_t t = 0; t < d.temps(); ++t) {
      if (d.temperatures[t] == temp) return t;
    }
    throw DomainError("temperature grid has no " + std::to_string(static_cast<int>(temp)) + " C column");
  };
  if (fcc_index >= d.phases()) throw DomainError("FCC phase index out of range");
  return {d.at(fcc_index, column(200.0)), d.at(fcc_index, column(500.0))};
}

std::pair<double, double> fit_fcc_line(const SimulatorSpec& spec) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto& alloys = base_alloys();
  for (const auto& alloy : alloys) {
    const auto [y200, y500] = fcc_extract(simulate(spec, alloy.composition), spec.fcc_index);
    sx += y200;
    sy += y500;
    sxx += y200 * y200;
    sxy += y200 * y500;
  }
  const double n = static_cast<double>(alloys.size());
  const double a = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {a, (sy - a * sx) / n};
}

SimulatorSpec generate_spec(std::uint64_t seed, std::size_t phases) {
  if (phases < 3) throw ConfigError("simulator needs at least 3 phases, got " + std::to_string(phases));
  Rng rng(seed);
  SimulatorSpec spec;
  spec.seed = seed;
  for (std::size_t p = 0; p < phases; ++p) {
    spec.labels.push_back(p < default_labels().size() ? default_labels()[p] : "PHASE_" + std::to_string(p));
  }
  const std::size_t nc = phases - 2;

  // Solvus temperatures are stratified over [90, 600] C so the compounds dissolve at
  // different points of the grid; late-dissolving compounds are kept small.
  std::vector<std::size_t> strata(nc);
  std::iota(strata.begin(), strata.end(), 0);
  rng.shuffle(strata);
  for (std::size_t c = 0; c < nc; ++c) {
    const double center = 0.06 + (static_cast<double>(strata[c]) + rng.uniform(0.2, 0.8)) * (0.34 / static_cast<double>(nc));
    const double amplitude = rng.uniform(0.012, 0.04) * (center > 0.3 ? 0.35 : 1.0);
    spec.solvus_center.push_back(round6(center));
    spec.log_amplitude.push_back(round6(std::log(amplitude)));
    spec.amplitude_gain.push_back(round6(rng.uniform(0.8, 1.4)));
    spec.solvus_range.push_back(round6(rng.uniform(0.05, 0.09)));
    spec.solvus_width.push_back(round6(rng.uniform(0.025, 0.05)));
  }

  // Raw rows: unit-scale linear terms, weaker quadratic terms; then centre and scale each
  // row over the base alloys.
  const std::size_t rows = u_count(phases);
  spec.coefficients.assign(rows, std::vector<double>(kFeatureCount, 0.0));
  for (auto& row : spec.coefficients) {
    for (std::size_t f = 1; f < kFeatureCount; ++f) row[f] = rng.normal() * (f < 10 ? 1.0 : 0.3);
  }
  std::vector<std::array<double, kFeatureCount>> phis;
  for (const auto& alloy : base_alloys()) phis.push_back(feature_map(spec, alloy.composition));
  const double n = static_cast<double>(phis.size());
  for (auto& row : spec.coefficients) {
    std::vector<double> vals;
    for (const auto& phi : phis) {
      double acc = 0.0;
      for (std::size_t f = 0; f < kFeatureCount; ++f) acc += row[f] * phi[f];
      vals.push_back(acc);
    }
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    for (double& c : row) c /= sd;
    row[0] = -mean / sd;
    for (double& c : row) c = round6(c);
  }
  spec.validate();
  return spec;
}

const SimulatorSpec& default_spec() {
  static const SimulatorSpec spec = generate_spec(kDefaultSpecSeed);
  return spec;
}

std::string spec_to_json(const SimulatorSpec& spec) {
  json j;
  j["version"] = spec.version;
  j["seed"] = spec.seed;
  j["P"] = spec.phases();
  j["labels"] = spec.labels;
  j["liquid_index"] = spec.liquid_index;
  j["fcc_index"] = spec.fcc_index;
  j["symmetric_pair"] = {spec.symmetric_pair.first, spec.symmetric_pair.second};
  j["log_offset"] = spec.log_offset;
  j["feature_scale"] = spec.feature_scale;
  j["melt"] = {{"center", spec.melt_center},
               {"range", spec.melt_range},
               {"width", spec.melt_width},
               {"width_gain", spec.melt_width_gain}};
  j["compounds"] = {{"log_amplitude", spec.log_amplitude},
                    {"amplitude_gain", spec.amplitude_gain},
                    {"solvus_center", spec.solvus_center},
                    {"solvus_range", spec.solvus_range},
                    {"solvus_width", spec.solvus_width}};
  j["coefficients"] = spec.coefficients;
  return j.dump(2) + "\n";
}

SimulatorSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("simulator spec is not valid JSON: ") + e.what());
  }
  if (!j.contains("version")) throw ConfigError("simulator spec has no version field");
  const int version = j.at("version").get<int>();
  if (version != kSpecVersion) {
    throw VersionError("simulator spec version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kSpecVersion) + ")");
  }
  SimulatorSpec spec;
  try {
    spec.version = version;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.labels = j.at("labels").get<std::vector<std::string>>();
    spec.liquid_index = j.at("liquid_index").get<std::size_t>();
    spec.fcc_index = j.at("fcc_index").get<std::size_t>();
    const auto pair = j.at("symmetric_pair").get<std::vector<std::size_t>>();
    if (pair.size() != 2) throw ConfigError("symmetric_pair must have two entries");
    spec.symmetric_pair = {pair[0], pair[1]};
    spec.log_offset = j.at("log_offset").get<double>();
    spec.feature_scale = j.at("feature_scale").get<double>();
    const auto& melt = j.at("melt");
    spec.melt_center = melt.at("center").get<double>();
    spec.melt_range = melt.at("range").get<double>();
    spec.melt_width = melt.at("width").get<double>();
    spec.melt_width_gain = melt.at("width_gain").get<double>();
    const auto& comp = j.at("compounds");
    spec.log_amplitude = comp.at("log_amplitude").get<std::vector<double>>();
    spec.amplitude_gain = comp.at("amplitude_gain").get<std::vector<double>>();
    spec.solvus_center = comp.at("solvus_center").get<std::vector<double>>();
    spec.solvus_range = comp.at("solvus_range").get<std::vector<double>>();
    spec.solvus_width = comp.at("solvus_width").get<std::vector<double>>();
    spec.coefficients = j.at("coefficients").get<std::vector<std::vector<double>>>();
    if (j.at("P").get<std::size_t>() != spec.labels.size()) throw ConfigError("P disagrees with the label count");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed simulator spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

void save_spec(const SimulatorSpec& spec, const std::filesystem::path& path) { write_file(path, spec_to_json(spec)); }

SimulatorSpec load_spec(const std::filesystem::path& path) { return spec_from_json(read_file(path)); }

}  // namespace forge::sim
