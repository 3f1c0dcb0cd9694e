#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "forge/common/errors.hpp"
#include "forge/common/io.hpp"
#include "forge/datagen/bo.hpp"
#include "forge/datagen/dataset.hpp"
#include "forge/datagen/mask.hpp"

using namespace forge;
using namespace forge::datagen;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("forge_test_datagen_" + name);
  fs::remove_all(dir);
  return dir;
}

sim::Composition with_aux(std::initializer_list<std::pair<std::size_t, double>> entries) {
  sim::Composition x{};
  double aux = 0;
  for (auto [e, v] : entries) {
    x[e] = v;
    aux += v;
  }
  x[sim::kAluminium] = 100.0 - aux;
  return x;
}

}  // namespace

TEST_CASE("perturb_neighborhood keeps scaled bounds, zeros and totals") {
  const auto& base = sim::base_alloys()[0].composition;  // 2024
  const auto cu = sim::element_index("Cu"), zr = sim::element_index("Zr");
  const auto xs = perturb_neighborhood(base, 0.2, 500, 3);
  REQUIRE(xs.size() == 500);
  for (const auto& x : xs) {
    CHECK(x[cu] >= 3.48 - 1e-12);
    CHECK(x[cu] <= 5.22 + 1e-12);
    CHECK(x[zr] == 0.0);
    double s = 0;
    for (double v : x) s += v;
    CHECK(std::abs(s - 100.0) < 1e-9);
  }
  CHECK(perturb_neighborhood(base, 0.2, 5, 3) == perturb_neighborhood(base, 0.2, 5, 3));
  CHECK_THROWS_AS(perturb_neighborhood(base, 1.5, 5, 3), DomainError);
}

TEST_CASE("bo objective terms") {
  BOObjectiveConfig cfg;
  cfg.line_a = 0.0;
  cfg.line_b = 0.5;
  const auto x3 = with_aux({{0, 1.0}, {1, 2.0}, {2, 0.5}});

  auto t = bo_terms(0.95, 0.51, x3, cfg);  // d1 = 0.01
  CHECK(t.d1 == doctest::Approx(0.01));
  CHECK(t.l1 == 0.0);
  t = bo_terms(0.95, 0.6, x3, cfg);  // d1 = 0.1
  CHECK(t.l1 == doctest::Approx(0.01));
  t = bo_terms(0.80, 0.5, x3, cfg);
  CHECK(t.d2 == doctest::Approx(-0.08));
  CHECK(t.l2 == doctest::Approx(0.0064));
  CHECK(t.l4 == 3.0);
  CHECK(t.l3 == 0.0);  // nothing visited yet
  CHECK(t.total == doctest::Approx(0.0064 - 0.03));

  // Perpendicular distance for a sloped line: |0.5 − 1·0.2 − 0| / √2.
  BOObjectiveConfig sloped;
  sloped.line_a = 1.0;
  CHECK(line_distance(0.2, 0.5, sloped) == doctest::Approx(0.3 / std::sqrt(2.0)));

  cfg.visited = {{0.95, 0.5}, {0.0, 0.0}};
  t = bo_terms(0.95, 0.5, x3, cfg);
  CHECK(t.l3 == doctest::Approx(1.0));
  cfg.visited = {{0.85, 0.5}};
  CHECK(bo_terms(0.95, 0.5, x3, cfg).l3 == doctest::Approx(std::exp(-1.0)));

  BOObjectiveConfig flat;
  flat.line_b = 0.5;
  CHECK(in_target_region(0.95, 0.51, flat));
  CHECK_FALSE(in_target_region(0.85, 0.51, flat));
}

TEST_CASE("expected improvement reference values") {
  CHECK(expected_improvement(0.0, 1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  CHECK(expected_improvement(2.0, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(0.0, 0.0, 1.0) == 1.0);
  CHECK(expected_improvement(-1.0, 1.0, 0.0) > expected_improvement(1.0, 1.0, 0.0));
}

TEST_CASE("GP-EI locates the minimum of a 1-D quadratic") {
  // Oracle: grid search over [0, 1] puts the minimum at 0.3.
  double best_grid = 0, best_val = 1e9;
  for (int i = 0; i <= 1000; ++i) {
    const double t = i / 1000.0;
    if ((t - 0.3) * (t - 0.3) < best_val) best_val = (t - 0.3) * (t - 0.3), best_grid = t;
  }
  Rng rng(21);
  const auto evals = gp_ei_minimize([](std::span<const double> p) { return (p[0] - 0.3) * (p[0] - 0.3); },
                                    [](Rng& r) { return std::vector<double>{r.uniform()}; }, 1, 30, rng);
  REQUIRE(evals.size() == 30);
  const auto best = *std::min_element(evals.begin(), evals.end(),
                                      [](const auto& a, const auto& b) { return a.value < b.value; });
  CHECK(std::abs(best.point[0] - best_grid) < 0.05);
  CHECK_THROWS_AS(gp_ei_minimize([](auto) { return 0.0; }, [](Rng&) { return std::vector<double>{0.0}; }, 1, 0, rng),
                  DomainError);
}

TEST_CASE("bo_search respects the cap and keeps a monotone best-so-far") {
  const auto& spec = sim::default_spec();
  const auto cfg = BOObjectiveConfig::for_spec(spec);
  const auto traj = bo_search(cfg, spec, 25, 4);
  REQUIRE(traj.size() == 25);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(sim::auxiliary_sum(traj[i].composition) <= 15.0);
    CHECK_NOTHROW(sim::validate_composition(traj[i].composition));
    if (i > 0) CHECK(traj[i].best_so_far <= traj[i - 1].best_so_far);
  }
  const auto single = bo_search(cfg, spec, 1, 4);
  REQUIRE(single.size() == 1);
  CHECK(sim::auxiliary_sum(single[0].composition) <= 15.0);

  Rng rng(5);
  const auto upper = search_upper_bounds();
  for (int i = 0; i < 2000; ++i) CHECK(sim::auxiliary_sum(sample_feasible_composition(upper, 15.0, rng)) <= 15.0);
}

TEST_CASE("row masks: counts, split and merge") {
  Rng rng(1);
  const std::size_t P = 8, T = 31;
  std::vector<double> y(P * T);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.001 * static_cast<double>(i) + 1e-17;

  auto m0 = sample_row_mask(P, 0.0, rng);
  auto parts = apply_mask(y, m0, P, T);
  CHECK(parts.hidden.empty());
  CHECK(parts.observed == y);

  auto m1 = sample_row_mask(P, 1.0, rng);
  CHECK(apply_mask(y, m1, P, T).observed.empty());

  for (int trial = 0; trial < 20; ++trial) {
    const double ratio = rng.uniform();
    auto m = sample_row_mask(P, ratio, rng);
    CHECK(m.hidden_phase_rows.size() == static_cast<std::size_t>(std::lround(ratio * P)));
    const auto split = apply_mask(y, m, P, T);
    CHECK(split.hidden.size() == m.hidden_phase_rows.size() * T);
    CHECK(merge(split, m, P, T) == y);
  }
  CHECK(sample_row_mask(P, 0.5, rng).hidden_phase_rows.size() == 4);
  CHECK_THROWS_AS(sample_row_mask(P, 1.5, rng), DomainError);
  CHECK_THROWS_AS(apply_mask(std::vector<double>(5), m0, P, T), DimensionError);
  CHECK_THROWS_AS(row_mask(P, {9}), DomainError);
}

TEST_CASE("cell masks and indicators") {
  Rng rng(2);
  const std::size_t P = 3, T = 4;
  const auto m = sample_cell_mask(P, T, 0.25, rng);
  CHECK(m.hidden_cells.size() == 3);
  const auto flags = m.hidden_flags(P, T);
  CHECK(std::count(flags.begin(), flags.end(), 1) == 3);
  CHECK(mask_indicators(flags, MaskMode::cells, P, T).size() == 12);

  const auto rm = row_mask(P, {1});
  const auto ind = mask_indicators(rm.hidden_flags(P, T), MaskMode::rows, P, T);
  CHECK(ind == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(indicator_width(MaskMode::rows, P, T) == 3);
  CHECK(indicator_width(MaskMode::cells, P, T) == 12);
}

TEST_CASE("mask JSON round trip and validation") {
  const auto m = row_mask(8, {5, 1, 3, 7});
  const auto back = mask_from_json(mask_to_json(m), 8, 31);
  CHECK(back.hidden_phase_rows == std::vector<std::size_t>{1, 3, 5, 7});
  CHECK(back.ratio == 0.5);
  CHECK_THROWS_AS(mask_from_json(R"({"ratio": 0.5, "hidden_phase_rows": [1]})", 8, 31), ConfigError);
  CHECK_THROWS_AS(mask_from_json(R"({"ratio": 0.125, "hidden_phase_rows": [8]})", 8, 31), DomainError);
  CHECK_THROWS_AS(mask_from_json(R"({"ratio": 0.0, "bogus": 1})", 8, 31), ConfigError);
}

TEST_CASE("folds partition rows with balanced sizes") {
  for (std::size_t n : {0u, 1u, 7u, 150u, 1001u}) {
    const auto folds = assign_folds(n, 5, 9);
    std::vector<std::size_t> count(5, 0);
    for (int f : folds) {
      REQUIRE(f >= 0);
      REQUIRE(f < 5);
      ++count[static_cast<std::size_t>(f)];
    }
    CHECK(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()) <= 1);
  }
}

TEST_CASE("neighborhood dataset: counts, regeneration, folds and file round trip") {
  const auto& spec = sim::default_spec();
  DatasetOptions opts;
  opts.size = 150;
  opts.seed = 17;
  const auto ds = build_dataset(opts, spec);
  REQUIRE(ds.size() == 150);
  CHECK(ds.diagram_width() == 8 * 31);
  for (int f = 0; f < 5; ++f) CHECK(ds.rows_in_folds({f}).size() == 30);
  CHECK(regenerates(ds, spec));
  // Five perturbations of each base alloy, in base-alloy order.
  const auto mg = sim::element_index("Mg");
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(std::abs(ds.compositions[i][mg] - 1.5) <= 0.3 + 1e-12);
  }

  const auto dir = scratch_dir("nb");
  save_dataset(ds, dir);
  const auto loaded = load_dataset(dir);
  CHECK(loaded.compositions == ds.compositions);
  CHECK(loaded.diagrams == ds.diagrams);
  CHECK(loaded.folds == ds.folds);
  CHECK(loaded.labels == ds.labels);
  CHECK(loaded.temperatures == ds.temperatures);
  CHECK(loaded.spec_sha256 == spec_fingerprint(spec));

  // Identical inputs give identical bytes.
  const auto dir2 = scratch_dir("nb2");
  save_dataset(build_dataset(opts, spec), dir2);
  CHECK(read_file(dir / "dataset.csv") == read_file(dir2 / "dataset.csv"));
  CHECK(read_file(dir / "manifest.json") == read_file(dir2 / "manifest.json"));

  const auto header = read_file(dir / "dataset.csv").substr(0, 40);
  CHECK(header.rfind("element:Cr,element:Cu,", 0) == 0);

  // A tampered CSV no longer matches its manifest.
  auto text = read_file(dir / "dataset.csv");
  text[text.size() - 2] = text[text.size() - 2] == '0' ? '1' : '0';
  write_file(dir / "dataset.csv", text);
  CHECK_THROWS_AS(load_dataset(dir), IntegrityError);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("swap augmentation exchanges the pair without changing the diagram") {
  const auto& spec = sim::default_spec();
  DatasetOptions opts;
  opts.size = 60;
  opts.seed = 3;
  const auto plain = build_dataset(opts, spec);
  opts.swap_augment = true;
  const auto swapped = build_dataset(opts, spec);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain.diagrams[i] == swapped.diagrams[i]);
    if (plain.compositions[i] != swapped.compositions[i]) {
      ++changed;
      CHECK(swapped.compositions[i] == sim::swap_elements(plain.compositions[i], 2, 4));
    }
  }
  CHECK(changed > 10);
  CHECK(changed < 50);
}

TEST_CASE("perturbation respects an auxiliary cap") {
  sim::Composition x{};
  x[0] = 10.0, x[1] = 4.9;
  x[sim::kAluminium] = 85.1;
  for (const auto& y : perturb_neighborhood(x, 0.2, 200, 3, 15.0)) CHECK(sim::auxiliary_sum(y) <= 15.0);
  x[1] = 6.0;
  x[sim::kAluminium] = 84.0;
  CHECK_THROWS_AS(perturb_neighborhood(x, 0.2, 1, 3, 15.0), DomainError);
}

TEST_CASE("bo_driven dataset and shortfall") {
  const auto& spec = sim::default_spec();
  DatasetOptions opts;
  opts.kind = DatasetKind::bo_driven;
  opts.size = 45;
  opts.bo_budget = 20;
  opts.seed = 8;
  const auto ds = build_dataset(opts, spec);
  CHECK(ds.size() == 45);
  CHECK(ds.bo_region_points >= 3);
  CHECK(regenerates(ds, spec));
  for (const auto& x : ds.compositions) CHECK(sim::auxiliary_sum(x) <= 15.0);

  opts.size = 15 * 25;  // needs 25 region points from only 20 evaluations
  CHECK_THROWS_AS(build_dataset(opts, spec), ShortfallError);
  CHECK_THROWS_AS(dataset_kind_from_string("grid"), ConfigError);
}
