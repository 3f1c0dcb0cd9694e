#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "forge/common/errors.hpp"
#include "forge/common/rng.hpp"
#include "forge/sim/composition.hpp"
#include "forge/sim/simulator.hpp"

using namespace forge;
using namespace forge::sim;

namespace {

Composition random_in_domain(Rng& rng) {
  // Neighbourhood of a random base alloy, the same region the datasets cover.
  const auto& alloys = base_alloys();
  Composition x = alloys[rng.below(alloys.size())].composition;
  for (std::size_t e = 0; e < kAluminium; ++e) x[e] *= rng.uniform(0.8, 1.2);
  x[kAluminium] = 0.0;
  double aux = 0;
  for (std::size_t e = 0; e < kAluminium; ++e) aux += x[e];
  x[kAluminium] = 100.0 - aux;
  return x;
}

// Straight transcription of the closed form with no numerical shortcuts.
std::vector<double> oracle(const SimulatorSpec& s, const Composition& x) {
  std::vector<double> ell(kAluminium);
  for (std::size_t e = 0; e < kAluminium; ++e) ell[e] = std::log(1.0 + x[e] / s.log_offset) / s.feature_scale;
  const double a = ell[s.symmetric_pair.first], b = ell[s.symmetric_pair.second];
  std::vector<double> g;
  for (std::size_t e = 0; e < kAluminium; ++e)
    if (e != s.symmetric_pair.first && e != s.symmetric_pair.second) g.push_back(ell[e]);
  g.push_back(a + b);
  g.push_back((a - b) * (a - b) + (a + b));
  std::vector<double> phi{1.0};
  for (double v : g) phi.push_back(v);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = i; j < 9; ++j) phi.push_back(g[i] * g[j]);
  std::vector<double> u;
  for (const auto& row : s.coefficients) {
    double acc = 0;
    for (std::size_t k = 0; k < phi.size(); ++k) acc += row[k] * phi[k];
    u.push_back(acc);
  }
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const std::size_t nc = s.compounds();
  const double tm = s.melt_center + s.melt_range * std::tanh(u[0] / 2.5);
  const double wm = s.melt_width * std::exp(s.melt_width_gain * std::tanh(u[1] / 2.5));
  std::vector<double> out(s.phases() * 31);
  for (std::size_t t = 0; t < 31; ++t) {
    const double tau = 50.0 * t / 1500.0;
    const double liq = sig((tau - tm) / wm);
    std::vector<double> w{1.0};
    for (std::size_t c = 0; c < nc; ++c) {
      const double amp = std::exp(s.log_amplitude[c] + s.amplitude_gain[c] * std::tanh(u[2 + 2 * c] / 2.5));
      const double tc = s.solvus_center[c] + s.solvus_range[c] * std::tanh(u[3 + 2 * c] / 2.5);
      w.push_back(amp * sig((tc - tau) / s.solvus_width[c]));
    }
    double total = 0;
    for (double v : w) total += v;
    out[t] = liq;
    for (std::size_t p = 0; p < w.size(); ++p) out[(p + 1) * 31 + t] = (1 - liq) * w[p] / total;
  }
  return out;
}

}  // namespace

TEST_CASE("base alloys: tabulated entries and validity") {
  const auto& alloys = base_alloys();
  REQUIRE(alloys.size() == 30);
  CHECK(alloys[0].id == "2024");
  CHECK(alloys[0].composition[element_index("Cu")] == doctest::Approx(4.35));
  CHECK(alloys[0].composition[element_index("Mg")] == doctest::Approx(1.5));
  CHECK(alloys[0].composition[element_index("Al")] == doctest::Approx(93.25));
  const auto& a6061 = *std::find_if(alloys.begin(), alloys.end(), [](const auto& a) { return a.id == "6061"; });
  CHECK(a6061.composition[element_index("Si")] == doctest::Approx(0.6));
  CHECK(a6061.composition[element_index("Mg")] == doctest::Approx(1.0));
  for (const auto& a : alloys) CHECK_NOTHROW(validate_composition(a.composition));
}

TEST_CASE("composition validation and helpers") {
  Composition x{};
  x[kAluminium] = 100.0;
  CHECK_NOTHROW(validate_composition(x));
  x[0] = -0.1;
  x[kAluminium] = 100.1;
  CHECK_THROWS_AS(validate_composition(x), DomainError);
  x[0] = 1.0;
  x[kAluminium] = 100.0;
  CHECK_THROWS_AS(validate_composition(x), DomainError);

  const std::vector<double> raw{-1, 2, 2, 0, 0, 0, 0, 0, 0, 46};
  const auto c = clip_and_normalize(raw);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == doctest::Approx(4.0));
  double sum = 0;
  for (double v : c) sum += v;
  CHECK(std::abs(sum - 100.0) < 1e-9);
  CHECK_THROWS_AS(clip_and_normalize(std::vector<double>(9, 1.0)), DimensionError);
  CHECK_THROWS_AS(element_index("Fe"), ConfigError);
}

TEST_CASE("simulate matches an independent transcription for alloy 2024") {
  const auto& spec = default_spec();
  const auto d = simulate(spec, base_alloys()[0].composition);
  const auto expect = oracle(spec, base_alloys()[0].composition);
  REQUIRE(d.values.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(std::abs(d.values[i] - expect[i]) < 1e-12);
}

TEST_CASE("phase fractions sum to one per temperature and are non-negative") {
  const auto& spec = default_spec();
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = simulate(spec, random_in_domain(rng));
    for (std::size_t t = 0; t < d.temps(); ++t) {
      double s = 0;
      for (std::size_t p = 0; p < d.phases(); ++p) {
        CHECK(d.at(p, t) >= 0.0);
        s += d.at(p, t);
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("swapping the symmetric pair leaves the diagram bit-identical") {
  const auto& spec = default_spec();
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_in_domain(rng);
    const auto y = swap_elements(x, spec.symmetric_pair.first, spec.symmetric_pair.second);
    CHECK(simulate(spec, x).values == simulate(spec, y).values);
  }
  // Any other pair generally changes the output.
  const auto x = base_alloys()[0].composition;
  CHECK(simulate(spec, x).values != simulate(spec, swap_elements(x, 0, 1)).values);
}

TEST_CASE("simulate is pure and Lipschitz at small scale") {
  const auto& spec = default_spec();
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_in_domain(rng);
    CHECK(simulate(spec, x).values == simulate(spec, x).values);
    auto x2 = x;
    x2[1] += 1e-6;
    x2[kAluminium] -= 1e-6;
    const auto a = simulate(spec, x).values, b = simulate(spec, x2).values;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-3);
  }
}

TEST_CASE("liquid fraction rises with temperature; cold and hot ends are solid and liquid") {
  const auto& spec = default_spec();
  for (const auto& alloy : base_alloys()) {
    const auto d = simulate(spec, alloy.composition);
    for (std::size_t t = 1; t < d.temps(); ++t) CHECK(d.at(0, t) >= d.at(0, t - 1));
    CHECK(d.at(0, 0) < 1e-6);
    CHECK(d.at(0, d.temps() - 1) > 1.0 - 1e-6);
  }
}

TEST_CASE("simulate rejects invalid compositions") {
  Composition x{};
  x[kAluminium] = 99.0;
  CHECK_THROWS_AS(simulate(default_spec(), x), DomainError);
}

TEST_CASE("fcc_extract reads the 200 and 500 C columns") {
  PhaseDiagram d;
  d.labels = {"LIQUID", "FCC_A1"};
  d.temperatures = temperature_grid();
  d.values.assign(2 * d.temps(), 0.1);
  std::fill_n(d.values.begin() + static_cast<std::ptrdiff_t>(d.temps()), d.temps(), 0.9);
  const auto [a, b] = fcc_extract(d);
  CHECK(a == 0.9);
  CHECK(b == 0.9);
  d.temperatures[4] = 201.0;
  CHECK_THROWS_AS(fcc_extract(d), DomainError);
}

TEST_CASE("spec JSON round trip and version check") {
  const auto& spec = default_spec();
  const auto text = spec_to_json(spec);
  const auto back = spec_from_json(text);
  CHECK(spec_to_json(back) == text);
  const auto x = base_alloys()[5].composition;
  CHECK(simulate(back, x).values == simulate(spec, x).values);

  auto bumped = text;
  const auto pos = bumped.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  bumped.replace(pos, 12, "\"version\": 7");
  CHECK_THROWS_AS(spec_from_json(bumped), VersionError);
  CHECK_THROWS_AS(spec_from_json("{\"version\": 1}"), ConfigError);
  CHECK_THROWS_AS(spec_from_json("not json"), ConfigError);
}

TEST_CASE("generate_spec is deterministic in its seed") {
  CHECK(spec_to_json(generate_spec(5)) == spec_to_json(generate_spec(5)));
  CHECK(spec_to_json(generate_spec(5)) != spec_to_json(generate_spec(6)));
  CHECK(generate_spec(5, 5).phases() == 5);
  CHECK_THROWS_AS(generate_spec(5, 2), ConfigError);
}
