#include "forge/training/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <set>

#include "forge/common/errors.hpp"
#include "forge/models/losses.hpp"
#include "forge/tensor/adam.hpp"
#include "forge/tensor/ops.hpp"
#include "forge/training/batch.hpp"
#include "json.hpp"

namespace forge::training {

namespace t = forge::tensor;
using datagen::MaskMode;
using models::ModelBundle;

std::string to_string(MaskSampling s) { return s == MaskSampling::fixed ? "fixed" : "uniform"; }

MaskSampling mask_sampling_from_string(const std::string& name) {
  if (name == "fixed") return MaskSampling::fixed;
  if (name == "uniform") return MaskSampling::uniform;
  throw ConfigError("unknown mask_sampling '" + name + "' (expected fixed or uniform)");
}

bool TrainConfig::masked() const {
  return models::is_hybrid(kind) || mask_sampling == MaskSampling::uniform || mask_ratio > 0.0;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("train config field '" + field + "' " + why);
  };
  if (hidden.empty()) fail("hidden", "must list at least one layer width");
  for (std::size_t h : hidden)
    if (h == 0) fail("hidden", "widths must be positive");
  if (latent_dim == 0) fail("latent_dim", "must be positive");
  if (components == 0) fail("components", "must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda", "must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr", "must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail("lr_decay", "must lie in (0, 1]");
  if (batch == 0) fail("batch", "must be positive");
  if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) fail("mask_ratio", "must lie in [0, 1]");
  if (!(convergence_tol >= 0.0)) fail("convergence_tol", "must be non-negative");
  if (convergence_window == 0) fail("convergence_window", "must be positive");
  if (!(anneal_beta > 0.0 && anneal_beta <= 1.0)) fail("anneal_beta", "must lie in (0, 1]");
  if (kind == ModelKind::rf && masked()) fail("mask_ratio", "must be 0 for rf, which needs the full diagram");
  if (forest.trees == 0) fail("forest.trees", "must be positive");
  if (forest.max_features == 0) fail("forest.max_features", "must be positive");
}

double annealing_beta(const TrainConfig& cfg, std::size_t epoch) {
  if (epoch == 0 || epoch > cfg.anneal_epochs) return 1.0;
  const double progress = static_cast<double>(epoch - 1) / static_cast<double>(cfg.anneal_epochs);
  return std::pow(cfg.anneal_beta, 1.0 - progress);
}

std::string config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["model_kind"] = models::to_string(c.kind);
  j["hidden"] = c.hidden;
  j["latent_dim"] = c.latent_dim;
  j["components"] = c.components;
  j["lambda"] = c.lambda;
  j["lr"] = c.lr;
  j["lr_decay"] = c.lr_decay;
  j["batch"] = c.batch;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["mask_mode"] = datagen::to_string(c.mask_mode);
  j["mask_ratio"] = c.mask_ratio;
  j["mask_sampling"] = to_string(c.mask_sampling);
  j["convergence_tol"] = c.convergence_tol;
  j["convergence_window"] = c.convergence_window;
  j["anneal_epochs"] = c.anneal_epochs;
  j["anneal_beta"] = c.anneal_beta;
  j["forest"] = {{"trees", c.forest.trees},
                 {"max_features", c.forest.max_features},
                 {"min_leaf_rows", c.forest.min_leaf_rows},
                 {"bootstrap", c.forest.bootstrap}};
  return j.dump(2);
}

TrainConfig config_from_json(const std::string& text) {
  static const std::set<std::string> known{"model_kind", "hidden", "latent_dim", "components", "lambda",
                                           "lr", "lr_decay", "batch", "epochs", "seed", "mask_mode", "mask_ratio",
                                           "mask_sampling", "convergence_tol", "convergence_window", "anneal_epochs",
                                           "anneal_beta", "forest"};
  static const std::set<std::string> forest_keys{"trees", "max_features", "min_leaf_rows", "bootstrap"};
  TrainConfig c;
  std::string field;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ConfigError("train config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (!known.count(key)) throw ConfigError("train config has unknown key '" + key + "'");
    }
    auto read = [&](const char* name, auto& target) {
      field = name;
      if (j.contains(name)) target = j.at(name).get<std::decay_t<decltype(target)>>();
    };
    std::string kind = models::to_string(c.kind), mode = datagen::to_string(c.mask_mode),
                sampling = to_string(c.mask_sampling);
    read("model_kind", kind);
    read("hidden", c.hidden);
    read("latent_dim", c.latent_dim);
    read("components", c.components);
    read("lambda", c.lambda);
    read("lr", c.lr);
    read("lr_decay", c.lr_decay);
    read("batch", c.batch);
    read("epochs", c.epochs);
    read("seed", c.seed);
    read("mask_mode", mode);
    read("mask_ratio", c.mask_ratio);
    read("mask_sampling", sampling);
    read("convergence_tol", c.convergence_tol);
    read("convergence_window", c.convergence_window);
    read("anneal_epochs", c.anneal_epochs);
    read("anneal_beta", c.anneal_beta);
    c.kind = models::model_kind_from_string(kind);
    c.mask_mode = datagen::mask_mode_from_string(mode);
    c.mask_sampling = mask_sampling_from_string(sampling);
    if (j.contains("forest")) {
      field = "forest";
      const auto& f = j.at("forest");
      for (const auto& [key, _] : f.items()) {
        if (!forest_keys.count(key)) throw ConfigError("train config has unknown key 'forest." + key + "'");
      }
      if (f.contains("trees")) c.forest.trees = f.at("trees").get<std::size_t>();
      if (f.contains("max_features")) c.forest.max_features = f.at("max_features").get<std::size_t>();
      if (f.contains("min_leaf_rows")) c.forest.min_leaf_rows = f.at("min_leaf_rows").get<std::size_t>();
      if (f.contains("bootstrap")) c.forest.bootstrap = f.at("bootstrap").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("train config field '" + field + "': " + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || n < k) {
    throw DomainError("kfold_split needs n >= k >= 1, got n = " + std::to_string(n) + ", k = " + std::to_string(k));
  }
  const auto folds = datagen::assign_folds(n, k, seed);
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < n; ++i) out[static_cast<std::size_t>(folds[i])].push_back(i);
  return out;
}

Schema Schema::of(const datagen::Dataset& ds) {
  Schema s;
  for (auto name : sim::kElementNames) s.elements.emplace_back(name);
  s.labels = ds.labels;
  s.temperatures = ds.temperatures;
  return s;
}

std::string Schema::diff(const Schema& other) const {
  std::string out;
  auto list = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + e;
    return s;
  };
  if (elements != other.elements) out += "elements: [" + list(elements) + "] vs [" + list(other.elements) + "]; ";
  if (labels != other.labels) out += "phases: [" + list(labels) + "] vs [" + list(other.labels) + "]; ";
  if (temperatures != other.temperatures) {
    out += "temperatures: " + std::to_string(temperatures.size()) + " columns vs " +
           std::to_string(other.temperatures.size()) + " (or different values); ";
  }
  return out;
}

datagen::Mask sample_training_mask(const TrainConfig& cfg, std::size_t phases, std::size_t temps, Rng& rng) {
  const std::size_t units = cfg.mask_mode == MaskMode::rows ? phases : phases * temps;
  double ratio = cfg.mask_ratio;
  if (cfg.mask_sampling == MaskSampling::uniform) {
    ratio = static_cast<double>(rng.below(units)) / static_cast<double>(units);
  }
  return cfg.mask_mode == MaskMode::rows ? datagen::sample_row_mask(phases, ratio, rng)
                                         : datagen::sample_cell_mask(phases, temps, ratio, rng);
}

namespace {

RowMatrix gather_targets(const datagen::Dataset& data, const std::vector<std::size_t>& rows) {
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.diagram_width()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& y = data.diagrams[rows[r]];
    std::copy(y.begin(), y.end(), m.row(static_cast<Eigen::Index>(r)).data());
  }
  return m;
}

RowMatrix gather_designs(const datagen::Dataset& data, const std::vector<std::size_t>& rows) {
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(sim::kElements));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto t = models::design_log_features(data.compositions[rows[r]]);
    std::copy(t.begin(), t.end(), m.row(static_cast<Eigen::Index>(r)).data());
  }
  return m;
}

void check_finite(double v, std::size_t epoch, std::size_t batch, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string(what) + " became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                       std::to_string(batch));
  }
}

}  // namespace

Checkpoint train(const TrainConfig& cfg, const datagen::Dataset& data, const std::vector<std::size_t>& train_rows,
                 const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_rows.empty()) throw DomainError("training needs at least one row");
  for (std::size_t r : train_rows) {
    if (r >= data.size()) throw DomainError("training row " + std::to_string(r) + " is outside the dataset");
  }

  Checkpoint ck;
  ck.version = kCheckpointVersion;
  ck.config = cfg;
  ck.schema = Schema::of(data);
  ck.training_rows = train_rows.size();

  const std::size_t P = data.phases(), T = data.temps(), D = data.diagram_width();
  models::ArchConfig arch;
  arch.target_width = D;
  arch.indicator_width = cfg.masked() ? datagen::indicator_width(cfg.mask_mode, P, T) : 0;
  arch.design_width = sim::kElements;
  arch.hidden = cfg.hidden;
  arch.latent_dim = cfg.latent_dim;
  arch.components = cfg.components;

  Rng rng(cfg.seed);
  ck.bundle = ModelBundle::create(cfg.kind, arch, rng.fork());
  auto& bundle = ck.bundle;

  const RowMatrix raw_y = gather_targets(data, train_rows);
  const RowMatrix raw_x = gather_designs(data, train_rows);
  bundle.input_scaler = models::Standardizer::fit(raw_y);
  bundle.design_scaler = models::Standardizer::fit(raw_x);
  const RowMatrix ys = bundle.input_scaler.transform(raw_y);
  const RowMatrix xs = bundle.design_scaler.transform(raw_x);

  if (cfg.kind == ModelKind::rf) {
    if (cfg.epochs > 0) {
      bundle.forest->fit(ys, xs, cfg.forest, rng.fork());
      ck.log.epochs.push_back({1, 0.0, 0.0});
    } else {
      ck.log.stop_reason = "no_epochs";
    }
    return ck;
  }
  if (cfg.epochs == 0) {
    ck.log.stop_reason = "no_epochs";
    return ck;
  }

  // Optimisers: one over everything for plain and CVAE kinds; CGAN splits discriminator
  // from generator plus predictor.
  std::vector<t::Tensor> main_params = bundle.predictor->parameters();
  std::vector<t::Tensor> disc_params;
  if (bundle.cvae) {
    auto p = bundle.cvae->recognition_parameters();
    auto g = bundle.cvae->generation_parameters();
    p.insert(p.end(), g.begin(), g.end());
    p.insert(p.end(), main_params.begin(), main_params.end());
    main_params = std::move(p);
  } else if (bundle.cgan) {
    auto g = bundle.cgan->generator_parameters();
    g.insert(g.end(), main_params.begin(), main_params.end());
    main_params = std::move(g);
    disc_params = bundle.cgan->discriminator_parameters();
  }
  t::AdamOptimizer main_opt(main_params, cfg.lr);
  t::AdamOptimizer disc_opt;
  if (!disc_params.empty()) disc_opt = t::AdamOptimizer(disc_params, cfg.lr);

  const BatchLayout layout{cfg.mask_mode, P, T, arch.indicator_width > 0};
  std::vector<std::size_t> order(train_rows.size());
  std::iota(order.begin(), order.end(), 0);
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    const double beta = annealing_beta(cfg, epoch);
    const double lr = cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch - 1) / static_cast<double>(cfg.epochs));
    main_opt.set_lr(lr);
    if (!disc_params.empty()) disc_opt.set_lr(lr);
    models::HybridTerms terms;
    terms.beta = beta;
    double loss_sum = 0, adv_sum = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch, ++batch_index) {
      const std::size_t b = std::min(cfg.batch, order.size() - start);
      std::vector<const double*> y_rows(b);
      std::vector<std::uint8_t> flags(b * D, 0);
      std::vector<double> x_flat(b * sim::kElements);
      for (std::size_t i = 0; i < b; ++i) {
        const auto r = static_cast<Eigen::Index>(order[start + i]);
        y_rows[i] = ys.row(r).data();
        std::copy_n(xs.row(r).data(), sim::kElements, x_flat.begin() + static_cast<std::ptrdiff_t>(i * sim::kElements));
        if (layout.use_indicators) {
          const auto f = sample_training_mask(cfg, P, T, rng).hidden_flags(P, T);
          std::copy(f.begin(), f.end(), flags.begin() + static_cast<std::ptrdiff_t>(i * D));
        }
      }
      const auto batch = make_masked_batch(layout, y_rows, flags);
      const auto x = t::Tensor::matrix(b, sim::kElements, std::move(x_flat));
      auto noise = [&](std::size_t width) {
        std::vector<double> v(b * width);
        for (double& e : v) e = rng.normal();
        return t::Tensor::matrix(b, width, std::move(v));
      };

      double loss_value = 0;
      if (bundle.cvae) {
        auto objective = models::hybrid_cvae_objective(*bundle.cvae, *bundle.predictor, batch, x, cfg.lambda,
                                                       noise(cfg.latent_dim), terms);
        auto loss = t::scale(objective, -1.0);
        loss_value = loss.item();
        check_finite(loss_value, epoch, batch_index, "training objective");
        loss.backward();
        main_opt.step();
      } else if (bundle.cgan) {
        const auto z = noise(cfg.latent_dim);
        auto disc = models::hybrid_cgan_loss(*bundle.cgan, *bundle.predictor, batch, x, z, cfg.lambda, terms).disc_loss;
        const double disc_value = disc.item();
        check_finite(disc_value, epoch, batch_index, "discriminator loss");
        disc.backward();
        disc_opt.step();
        main_opt.zero_grad();

        auto joint = models::hybrid_cgan_loss(*bundle.cgan, *bundle.predictor, batch, x, z, cfg.lambda, terms).joint_objective;
        auto loss = t::scale(joint, -1.0);
        loss_value = loss.item();
        check_finite(loss_value, epoch, batch_index, "generator objective");
        loss.backward();
        main_opt.step();
        disc_opt.zero_grad();
        adv_sum += disc_value * static_cast<double>(b);
      } else {
        auto loss = models::mdn_nll(*bundle.predictor, plain_condition(batch, layout), x, beta);
        loss_value = loss.item();
        check_finite(loss_value, epoch, batch_index, "training objective");
        loss.backward();
        main_opt.step();
      }
      loss_sum += loss_value * static_cast<double>(b);
    }

    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), adv_sum / static_cast<double>(order.size())};
    ck.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    // Tempered objectives are not comparable with the final one.
    if (beta < 1.0) continue;
    if (rec.objective - best > 10.0 * (std::abs(best) + 1.0)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": objective " +
                         std::to_string(rec.objective) + " against best " + std::to_string(best));
    }
    best = std::min(best, rec.objective);

    // Converged once each of the last `window` epochs moved the objective by less than
    // tol relative to the epoch before it.
    const std::size_t w = cfg.convergence_window;
    const auto& log = ck.log.epochs;
    if (epoch > cfg.anneal_epochs + w) {
      bool flat = true;
      for (std::size_t i = log.size() - w; i < log.size() && flat; ++i) {
        const double prev = log[i - 1].objective;
        flat = std::abs(log[i].objective - prev) < cfg.convergence_tol * std::max(std::abs(prev), 1e-12);
      }
      if (flat) {
        ck.log.stop_reason = "converged";
        break;
      }
    }
  }
  return ck;
}

}  // namespace forge::training
