#include <algorithm>
#include <chrono>
#include <cmath>

#include "doctest.h"
#include "forge/common/errors.hpp"
#include "forge/evaluation/closed_loop.hpp"
#include "forge/inference/predict.hpp"
#include "json.hpp"

using namespace forge;
using namespace forge::inference;
using training::Checkpoint;
using training::TrainConfig;
using models::ModelKind;

namespace {

const datagen::Dataset& data() {
  static const datagen::Dataset ds = [] {
    datagen::DatasetOptions o;
    o.size = 1500;
    o.seed = 21;
    return datagen::build_dataset(o, sim::default_spec());
  }();
  return ds;
}

Checkpoint fit(ModelKind kind, std::size_t epochs, double mask_ratio = 0.0) {
  TrainConfig c;
  c.kind = kind;
  c.hidden = {96, 48};
  c.latent_dim = 6;
  c.components = 3;
  c.epochs = epochs;
  c.batch = 50;
  c.lr = 2e-3;
  c.lr_decay = 0.05;
  c.seed = 3;
  c.mask_ratio = mask_ratio;
  c.forest.trees = 5;
  return training::train(c, data(), data().rows_outside_fold(0));
}

const Checkpoint& hybrid() {
  static const Checkpoint ck = fit(ModelKind::cvae_mdn, 200, 0.5);
  return ck;
}

const Checkpoint& full_mlp() {
  static const Checkpoint ck = fit(ModelKind::mlp, 5);
  return ck;
}

models::MixtureDensity mix3(std::vector<double> w) {
  return {std::move(w), {{0.0}, {1.0}, {2.0}}, {1.0, 1.0, 1.0}};
}

Query half_hidden(std::size_t row) {
  const auto& ds = data();
  return make_query(ds.diagrams[row], datagen::row_mask(ds.phases(), {0, 2, 4, 6}), ds.phases(), ds.temps());
}

}  // namespace

TEST_CASE("gumbel_select") {
  const std::vector<double> zero(3, 0.0);
  CHECK(gumbel_select(mix3({0.2, 0.5, 0.3}), zero) == 1);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> g{rng.gumbel(), rng.gumbel(), rng.gumbel()};
    CHECK(gumbel_select(mix3({1.0, 0.0, 0.0}), g) == 0);
  }
  CHECK_THROWS_AS(gumbel_select(mix3({0.0, 0.0, 0.0}), zero), ContractError);
  CHECK_THROWS_AS(gumbel_select(mix3({0.2, 0.5, 0.3}), std::vector<double>(2, 0.0)), ContractError);
}

TEST_CASE("gumbel_select frequencies follow the weights") {
  const auto mix = mix3({0.15, 0.6, 0.25});
  std::vector<double> counts(3, 0.0);
  Rng rng(77);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    std::vector<double> g{rng.gumbel(), rng.gumbel(), rng.gumbel()};
    counts[gumbel_select(mix, g)] += 1.0;
  }
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(counts[k] / draws - mix.weights[k]) < 0.01);
}

TEST_CASE("plain MLP on a full query gives one candidate equal to the network output") {
  const auto& ck = full_mlp();
  const auto q = full_query(data().diagrams[1]);
  const auto set = predict_conditional(ck, q, {});
  const auto c = predict_designs(ck, q, {});
  REQUIRE(c.size() == 1);
  CHECK_FALSE(c[0].log_density.has_value());
  const auto expected = sim::clip_and_normalize(component_design(ck, set.records[0].mixture, 0));
  CHECK(c[0].composition == expected);
  CHECK_THROWS_AS(predict_designs(ck, half_hidden(1), {}), ContractError);
  CHECK_THROWS_AS(impute(ck, q, std::vector<double>(6, 0.0)), ContractError);
  CHECK_THROWS_AS(predict_designs(ck, Query{{1.0, 2.0}, {0, 0}}, {}), DimensionError);
}

TEST_CASE("conditional prediction records") {
  const auto& ck = hybrid();
  const auto q = half_hidden(5);
  InferenceConfig one;
  one.n = 1;
  CHECK(predict_conditional(ck, q, one).records.size() == 1);

  InferenceConfig cfg;
  cfg.seed = 9;
  const auto set = predict_conditional(ck, q, cfg);
  REQUIRE(set.records.size() == 20);
  for (const auto& r : set.records) {
    double s = 0;
    for (double w : r.mixture.weights) s += w;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.imputed.size() == q.hidden_count());
    CHECK(r.z.size() == ck.bundle.arch.latent_dim);
  }
  InferenceConfig bad;
  bad.n = 0;
  CHECK_THROWS_AS(predict_conditional(ck, q, bad), ConfigError);
}

TEST_CASE("predict_designs: candidate contract and determinism") {
  const auto& ck = hybrid();
  const auto q = half_hidden(7);
  InferenceConfig cfg;
  cfg.seed = 12;
  const auto a = predict_designs(ck, q, cfg);
  const auto b = predict_designs(ck, q, cfg);
  REQUIRE(!a.empty());
  CHECK(a.size() <= 20);
  CHECK(candidates_to_json(a) == candidates_to_json(b));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK_NOTHROW(sim::validate_composition(a[i].composition));
    REQUIRE(a[i].log_density.has_value());
    CHECK(a[i].z_index < 20);
    CHECK(a[i].component_index < ck.bundle.arch.components);
    if (i > 0) CHECK(*a[i - 1].log_density >= *a[i].log_density);
  }
  const auto parsed = nlohmann::json::parse(candidates_to_json(a));
  CHECK(parsed.size() == a.size());
  CHECK(parsed[0]["composition"].contains("Al"));
}

TEST_CASE("impute") {
  const auto& ck = hybrid();
  const std::vector<double> z(ck.bundle.arch.latent_dim, 0.0);
  CHECK(impute(ck, full_query(data().diagrams[3]), z).empty());
  const auto q = half_hidden(3);
  const auto h = impute(ck, q, z);
  CHECK(h.size() == q.hidden_count());
  CHECK(impute(ck, q, z) == h);
  CHECK_THROWS_AS(impute(ck, q, std::vector<double>(2, 0.0)), DimensionError);
}

TEST_CASE("imputation of a held-out row is close for the best latent draw") {
  const auto& ck = hybrid();
  const auto& ds = data();
  const auto scale = evaluation::PhaseScale::of(ds);
  const auto rows = ds.rows_in_folds({0});
  double total = 0;
  const std::size_t checked = 10;
  for (std::size_t i = 0; i < checked; ++i) {
    const std::size_t row = rows[i];
    const auto q = half_hidden(row);
    InferenceConfig cfg;
    cfg.seed = row;
    const auto set = predict_conditional(ck, q, cfg);
    double best = 1e300;
    for (const auto& r : set.records) {
      double err = 0;
      std::size_t j = 0;
      for (std::size_t c = 0; c < q.diagram.size(); ++c) {
        if (!q.hidden[c]) continue;
        const std::size_t p = c / ds.temps();
        err += std::abs(scale.apply(p, r.imputed[j++]) - scale.apply(p, ds.diagrams[row][c]));
      }
      best = std::min(best, err / static_cast<double>(q.hidden_count()));
    }
    total += best;
  }
  MESSAGE("mean best-of-20 imputation error (scaled units): " << total / checked);
  CHECK(total / checked <= 0.05);
}

TEST_CASE("query JSON") {
  const auto schema = training::Schema::of(data());
  const auto q = query_from_json(R"({"observed": {"FCC_A1@200": 0.9, "LIQUID@1500": 1.0}})", schema);
  CHECK(q.hidden_count() == q.hidden.size() - 2);
  const std::size_t fcc = 1 * 31 + 4;
  CHECK(q.hidden[fcc] == 0);
  CHECK(q.diagram[fcc] == 0.9);
  CHECK_THROWS_AS(query_from_json(R"({"observed": {"FCC_A1@210": 0.9}})", schema), ConfigError);
  CHECK_THROWS_AS(query_from_json(R"({"observed": {"BCC@200": 0.9}})", schema), ConfigError);
  CHECK_THROWS_AS(query_from_json(R"({"observed": {}, "mask": 1})", schema), ConfigError);
  CHECK_THROWS_AS(query_from_json("not json", schema), ConfigError);
}
