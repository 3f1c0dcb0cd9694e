#include "forge/datagen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "forge/common/errors.hpp"
#include "forge/common/hash.hpp"
#include "forge/common/io.hpp"
#include "json.hpp"

namespace forge::datagen {

std::string to_string(DatasetKind kind) { return kind == DatasetKind::neighborhood ? "neighborhood" : "bo_driven"; }

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "neighborhood") return DatasetKind::neighborhood;
  if (name == "bo_driven") return DatasetKind::bo_driven;
  throw ConfigError("unknown dataset kind '" + name + "' (expected neighborhood or bo_driven)");
}

std::vector<sim::Composition> perturb_neighborhood(const sim::Composition& base, double rel, std::size_t n,
                                                   std::uint64_t seed, double aux_cap) {
  sim::validate_composition(base);
  if (sim::auxiliary_sum(base) > aux_cap) throw DomainError("base composition already exceeds the auxiliary cap");
  if (!(rel > 0.0 && rel < 1.0)) throw DomainError("relative perturbation must lie in (0, 1)");
  Rng rng(seed);
  std::vector<sim::Composition> out;
  out.reserve(n);
  while (out.size() < n) {
    sim::Composition x = base;
    for (std::size_t e = 0; e < sim::kElements; ++e) {
      if (e != sim::kAluminium) x[e] = base[e] * rng.uniform(1.0 - rel, 1.0 + rel);
    }
    x[sim::kAluminium] = 100.0 - sim::auxiliary_sum(x);
    if (x[sim::kAluminium] < 0.0 || sim::auxiliary_sum(x) > aux_cap) continue;
    out.push_back(x);
  }
  return out;
}

std::vector<int> assign_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ConfigError("fold count must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> folds(n);
  for (std::size_t i = 0; i < n; ++i) folds[order[i]] = static_cast<int>(i % k);
  return folds;
}

std::vector<std::size_t> Dataset::rows_in_folds(const std::vector<int>& wanted) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (std::find(wanted.begin(), wanted.end(), folds[i]) != wanted.end()) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> Dataset::rows_outside_fold(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < folds.size(); ++i)
    if (folds[i] != fold) rows.push_back(i);
  return rows;
}

std::string spec_fingerprint(const sim::SimulatorSpec& spec) { return sha256_hex(sim::spec_to_json(spec)); }

Dataset build_dataset(const DatasetOptions& opts, const sim::SimulatorSpec& spec) {
  if (opts.size == 0) throw ConfigError("dataset size must be positive");
  spec.validate();
  Rng rng(opts.seed);
  const std::uint64_t perturb_seed = rng.fork();
  const std::uint64_t search_seed = rng.fork();
  const std::uint64_t swap_seed = rng.fork();
  const std::uint64_t fold_seed = rng.fork();

  Dataset ds;
  ds.options = opts;
  ds.spec_seed = spec.seed;
  ds.spec_sha256 = spec_fingerprint(spec);
  ds.labels = spec.labels;
  ds.temperatures = sim::temperature_grid();

  // Anchor compositions and how many perturbations each receives.
  std::vector<std::pair<sim::Composition, std::size_t>> anchors;
  double aux_cap = 100.0;
  if (opts.kind == DatasetKind::neighborhood) {
    const auto& alloys = sim::base_alloys();
    const std::size_t per = opts.size / alloys.size();
    const std::size_t extra = opts.size % alloys.size();
    for (std::size_t i = 0; i < alloys.size(); ++i) anchors.emplace_back(alloys[i].composition, per + (i < extra ? 1 : 0));
  } else {
    const auto cfg = BOObjectiveConfig::for_spec(spec);
    aux_cap = cfg.constraint_cap;
    const auto trajectory = bo_search(cfg, spec, opts.bo_budget, search_seed);
    std::vector<sim::Composition> region;
    for (const auto& step : trajectory) {
      if (in_target_region(step.y200, step.y500, cfg)) region.push_back(step.composition);
    }
    ds.bo_region_points = region.size();
    const std::size_t per = std::max<std::size_t>(opts.per_point, 1);
    const std::size_t needed = (opts.size + per - 1) / per;
    if (region.size() < needed) {
      throw ShortfallError("BO search found " + std::to_string(region.size()) + " of " +
                           std::to_string(trajectory.size()) + " points in the target region, but " +
                           std::to_string(needed) + " are needed for " + std::to_string(opts.size) + " rows");
    }
    Rng pick(search_seed ^ 0x5bd1e995ULL);
    pick.shuffle(region);
    region.resize(needed);
    std::size_t remaining = opts.size;
    for (const auto& x : region) {
      anchors.emplace_back(x, std::min(per, remaining));
      remaining -= anchors.back().second;
    }
  }

  Rng perturb_rng(perturb_seed);
  Rng swap_rng(swap_seed);
  const auto [pa, pb] = spec.symmetric_pair;
  for (const auto& [anchor, count] : anchors) {
    auto xs = perturb_neighborhood(anchor, opts.rel, count, perturb_rng.fork(), aux_cap);
    for (auto& x : xs) {
      if (opts.swap_augment && swap_rng.uniform() < 0.5) x = sim::swap_elements(x, pa, pb);
      ds.compositions.push_back(x);
      ds.diagrams.push_back(sim::simulate(spec, x).values);
    }
  }
  ds.folds = assign_folds(ds.size(), opts.folds, fold_seed);
  return ds;
}

bool regenerates(const Dataset& ds, const sim::SimulatorSpec& spec) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (sim::simulate(spec, ds.compositions[i]).values != ds.diagrams[i]) return false;
  }
  return true;
}

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_temp(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_real(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError("dataset line " + std::to_string(line) + ": cannot parse '" + s + "' as a number");
  }
  return v;
}

}  // namespace

std::string dataset_csv(const Dataset& ds) {
  std::string out;
  for (std::size_t e = 0; e < sim::kElements; ++e) out += "element:" + std::string(sim::kElementNames[e]) + ",";
  for (const auto& label : ds.labels)
    for (double t : ds.temperatures) out += "phase:" + label + "@" + format_temp(t) + ",";
  out += "fold\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.compositions[i]) out += format_real(v) + ",";
    for (double v : ds.diagrams[i]) out += format_real(v) + ",";
    out += std::to_string(ds.folds[i]) + "\n";
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  const std::string csv = dataset_csv(ds);
  write_file(dir / "dataset.csv", csv);
  nlohmann::ordered_json m;
  m["kind"] = to_string(ds.options.kind);
  m["size"] = ds.options.size;
  m["seed"] = ds.options.seed;
  m["rel"] = ds.options.rel;
  m["bo_budget"] = ds.options.bo_budget;
  m["per_point"] = ds.options.per_point;
  m["folds"] = ds.options.folds;
  m["swap_augment"] = ds.options.swap_augment;
  m["rows"] = ds.size();
  m["phases"] = ds.phases();
  m["temperatures"] = ds.temperatures;
  m["labels"] = ds.labels;
  m["spec_seed"] = ds.spec_seed;
  m["spec_sha256"] = ds.spec_sha256;
  m["bo_region_points"] = ds.bo_region_points;
  m["csv_sha256"] = sha256_hex(csv);
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& path) {
  const bool is_dir = std::filesystem::is_directory(path);
  const auto csv_path = is_dir ? path / "dataset.csv" : path;
  const auto manifest_path = csv_path.parent_path() / "manifest.json";
  const std::string text = read_file(csv_path);

  Dataset ds;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(csv_path.string() + " is empty");
  const auto header = split(line, ',');
  if (header.size() < sim::kElements + 2 || header.back() != "fold") {
    throw ConfigError(csv_path.string() + ": header must list 10 elements, the phase cells and 'fold'");
  }
  for (std::size_t e = 0; e < sim::kElements; ++e) {
    if (header[e] != "element:" + std::string(sim::kElementNames[e])) {
      throw ConfigError(csv_path.string() + ": unexpected column '" + header[e] + "'");
    }
  }
  // Recover the phase × temperature layout from the column names.
  std::vector<std::string> cell_labels;
  std::vector<double> cell_temps;
  for (std::size_t c = sim::kElements; c + 1 < header.size(); ++c) {
    const auto& h = header[c];
    const auto at = h.rfind('@');
    if (h.rfind("phase:", 0) != 0 || at == std::string::npos) throw ConfigError("unexpected column '" + h + "'");
    cell_labels.push_back(h.substr(6, at - 6));
    cell_temps.push_back(parse_real(h.substr(at + 1), 1));
  }
  for (std::size_t c = 0; c < cell_labels.size(); ++c) {
    if (c == 0 || cell_labels[c] != cell_labels[c - 1]) ds.labels.push_back(cell_labels[c]);
    if (ds.labels.size() == 1) ds.temperatures.push_back(cell_temps[c]);
  }
  if (ds.labels.size() * ds.temperatures.size() != cell_labels.size()) {
    throw ConfigError(csv_path.string() + ": phase columns do not form a full phase × temperature grid");
  }
  for (std::size_t c = 0; c < cell_labels.size(); ++c) {
    if (cell_labels[c] != ds.labels[c / ds.temps()] || cell_temps[c] != ds.temperatures[c % ds.temps()]) {
      throw ConfigError(csv_path.string() + ": phase columns are not in phase-major order");
    }
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw ConfigError("dataset line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " fields, expected " + std::to_string(header.size()));
    }
    sim::Composition x{};
    for (std::size_t e = 0; e < sim::kElements; ++e) x[e] = parse_real(cells[e], line_no);
    std::vector<double> y(cell_labels.size());
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = parse_real(cells[sim::kElements + c], line_no);
    ds.compositions.push_back(x);
    ds.diagrams.push_back(std::move(y));
    ds.folds.push_back(static_cast<int>(parse_real(cells.back(), line_no)));
  }

  if (std::filesystem::exists(manifest_path)) {
    try {
      const auto m = nlohmann::json::parse(read_file(manifest_path));
      ds.options.kind = dataset_kind_from_string(m.at("kind").get<std::string>());
      ds.options.size = m.at("size").get<std::size_t>();
      ds.options.seed = m.at("seed").get<std::uint64_t>();
      ds.options.rel = m.at("rel").get<double>();
      ds.options.bo_budget = m.at("bo_budget").get<std::size_t>();
      ds.options.per_point = m.at("per_point").get<std::size_t>();
      ds.options.folds = m.at("folds").get<std::size_t>();
      ds.options.swap_augment = m.at("swap_augment").get<bool>();
      ds.spec_seed = m.at("spec_seed").get<std::uint64_t>();
      ds.spec_sha256 = m.at("spec_sha256").get<std::string>();
      ds.bo_region_points = m.value("bo_region_points", std::size_t{0});
      if (m.at("csv_sha256").get<std::string>() != sha256_hex(text)) {
        throw IntegrityError(csv_path.string() + " does not match the checksum recorded in its manifest");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed dataset manifest " + manifest_path.string() + ": " + e.what());
    }
  } else {
    int max_fold = 0;
    for (int f : ds.folds) max_fold = std::max(max_fold, f);
    ds.options.folds = static_cast<std::size_t>(max_fold) + 1;
    ds.options.size = ds.size();
  }
  return ds;
}

}  // namespace forge::datagen
