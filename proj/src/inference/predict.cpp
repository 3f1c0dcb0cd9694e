#include "forge/inference/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/common/errors.hpp"
#include "forge/tensor/ops.hpp"
#include "forge/training/batch.hpp"
#include "json.hpp"

namespace forge::inference {

namespace t = forge::tensor;
using training::Checkpoint;

void InferenceConfig::validate() const {
  if (n == 0) throw ConfigError("inference field 'n' must be at least 1");
  if (modes_per_mixture == 0) throw ConfigError("inference field 'modes_per_mixture' must be at least 1");
}

std::size_t Query::hidden_count() const {
  return static_cast<std::size_t>(std::count(hidden.begin(), hidden.end(), std::uint8_t{1}));
}

Query make_query(std::span<const double> diagram, const datagen::Mask& mask, std::size_t phases, std::size_t temps) {
  if (diagram.size() != phases * temps) throw DimensionError("query diagram does not match the phase × temperature layout");
  return Query{std::vector<double>(diagram.begin(), diagram.end()), mask.hidden_flags(phases, temps)};
}

Query full_query(std::span<const double> diagram) {
  return Query{std::vector<double>(diagram.begin(), diagram.end()), std::vector<std::uint8_t>(diagram.size(), 0)};
}

Query query_from_json(const std::string& text, const training::Schema& schema) {
  const std::size_t P = schema.labels.size(), T = schema.temperatures.size();
  Query q{std::vector<double>(P * T, 0.0), std::vector<std::uint8_t>(P * T, 1)};
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& [key, _] : j.items()) {
      if (key != "observed") throw ConfigError("query has unknown key '" + key + "' (expected only 'observed')");
    }
    for (const auto& [cell, value] : j.at("observed").items()) {
      const auto at = cell.rfind('@');
      if (at == std::string::npos) throw ConfigError("query cell '" + cell + "' is not of the form <phase>@<temp>");
      const auto label = cell.substr(0, at);
      const auto p = std::find(schema.labels.begin(), schema.labels.end(), label);
      if (p == schema.labels.end()) throw ConfigError("query names unknown phase '" + label + "'");
      char* end = nullptr;
      const std::string temp_text = cell.substr(at + 1);
      const double temp = std::strtod(temp_text.c_str(), &end);
      const auto tt = std::find(schema.temperatures.begin(), schema.temperatures.end(), temp);
      if (temp_text.empty() || *end != '\0' || tt == schema.temperatures.end()) {
        throw ConfigError("query cell '" + cell + "' names a temperature outside the grid");
      }
      const std::size_t idx = static_cast<std::size_t>(p - schema.labels.begin()) * T +
                              static_cast<std::size_t>(tt - schema.temperatures.begin());
      q.diagram[idx] = value.get<double>();
      q.hidden[idx] = 0;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed query: ") + e.what());
  }
  return q;
}

namespace {

training::BatchLayout layout_of(const Checkpoint& ck) {
  return {ck.config.mask_mode, ck.schema.labels.size(), ck.schema.temperatures.size(),
          ck.bundle.arch.indicator_width > 0};
}

void check_query(const Checkpoint& ck, const Query& q) {
  const std::size_t d = ck.bundle.arch.target_width;
  if (q.diagram.size() != d || q.hidden.size() != d) {
    throw DimensionError("query has " + std::to_string(q.diagram.size()) + " cells, model expects " + std::to_string(d));
  }
}

// N copies of the standardized query packed as a batch.
models::MaskedBatch replicate(const Checkpoint& ck, const Query& q, std::size_t n, std::vector<double>& storage) {
  storage = q.diagram;
  for (std::size_t i = 0; i < storage.size(); ++i)
    if (q.hidden[i]) storage[i] = ck.bundle.input_scaler.mean[i];
  ck.bundle.input_scaler.transform(storage);
  std::vector<const double*> rows(n, storage.data());
  std::vector<std::uint8_t> flags;
  flags.reserve(n * q.hidden.size());
  for (std::size_t i = 0; i < n; ++i) flags.insert(flags.end(), q.hidden.begin(), q.hidden.end());
  return training::make_masked_batch(layout_of(ck), rows, flags);
}

// Imputed diagram (standardized, full layout) for each z row.
t::Tensor completed_targets(const Checkpoint& ck, const models::MaskedBatch& batch, const t::Tensor& z) {
  if (ck.bundle.cvae) return batch.merge(ck.bundle.cvae->decode(batch, z).first);
  return batch.merge(ck.bundle.cgan->generate(batch, z));
}

std::vector<double> hidden_entries(const Checkpoint& ck, const Query& q, const t::Tensor& completed, std::size_t row) {
  const std::size_t d = q.diagram.size();
  std::vector<double> full(completed.data().begin() + static_cast<std::ptrdiff_t>(row * d),
                           completed.data().begin() + static_cast<std::ptrdiff_t>((row + 1) * d));
  ck.bundle.input_scaler.inverse(full);
  std::vector<double> h;
  for (std::size_t i = 0; i < d; ++i)
    if (q.hidden[i]) h.push_back(full[i]);
  return h;
}

}  // namespace

std::vector<double> impute(const Checkpoint& ck, const Query& q, std::span<const double> z) {
  check_query(ck, q);
  if (!models::is_hybrid(ck.config.kind)) {
    throw ContractError("impute needs a hybrid model; '" + models::to_string(ck.config.kind) + "' has no imputer");
  }
  if (z.size() != ck.bundle.arch.latent_dim) {
    throw DimensionError("latent vector has " + std::to_string(z.size()) + " entries, model expects " +
                         std::to_string(ck.bundle.arch.latent_dim));
  }
  if (q.hidden_count() == 0) return {};
  t::NoGradGuard guard;
  std::vector<double> storage;
  const auto batch = replicate(ck, q, 1, storage);
  const auto zt = t::Tensor::matrix(1, z.size(), std::vector<double>(z.begin(), z.end()));
  return hidden_entries(ck, q, completed_targets(ck, batch, zt), 0);
}

PredictionSet predict_conditional(const Checkpoint& ck, const Query& q, const InferenceConfig& cfg) {
  cfg.validate();
  check_query(ck, q);
  const auto& b = ck.bundle;
  const bool hybrid = models::is_hybrid(ck.config.kind);
  if (!hybrid && q.hidden_count() > 0 && b.arch.indicator_width == 0) {
    throw ContractError("model '" + models::to_string(ck.config.kind) +
                        "' was trained on full diagrams and cannot take a query with " +
                        std::to_string(q.hidden_count()) + " hidden cells; use a hybrid (cvae_*/cgan_*) model");
  }
  t::NoGradGuard guard;
  Rng rng(cfg.seed);
  const std::size_t n = cfg.n, L = b.arch.latent_dim;
  std::vector<double> zflat(n * L);
  for (double& v : zflat) v = rng.normal();

  PredictionSet set;
  set.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) set.records[i].z.assign(zflat.begin() + static_cast<std::ptrdiff_t>(i * L),
                                                              zflat.begin() + static_cast<std::ptrdiff_t>((i + 1) * L));

  if (ck.config.kind == models::ModelKind::rf) {
    std::vector<double> y = q.diagram;
    b.input_scaler.transform(y);
    models::MixtureDensity mix{{1.0}, {b.forest->predict(y)}, {0.0}};
    for (auto& r : set.records) r.mixture = mix;
    return set;
  }

  std::vector<double> storage;
  const auto batch = replicate(ck, q, n, storage);
  t::Tensor condition;
  if (hybrid) {
    const auto z = t::Tensor::matrix(n, L, zflat);
    condition = completed_targets(ck, batch, z);
    if (q.hidden_count() > 0) {
      for (std::size_t i = 0; i < n; ++i) set.records[i].imputed = hidden_entries(ck, q, condition, i);
    }
  } else {
    condition = training::plain_condition(batch, layout_of(ck));
  }
  auto mixtures = b.predictor->mixtures(condition);
  for (std::size_t i = 0; i < n; ++i) set.records[i].mixture = std::move(mixtures[i]);
  return set;
}

std::size_t gumbel_select(const models::MixtureDensity& mix, std::span<const double> noise) {
  if (noise.size() != mix.components()) {
    throw ContractError("Gumbel noise has " + std::to_string(noise.size()) + " entries for " +
                        std::to_string(mix.components()) + " components");
  }
  if (std::none_of(mix.weights.begin(), mix.weights.end(), [](double w) { return w > 0.0; })) {
    throw ContractError("mixture has no component with positive weight");
  }
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mix.components(); ++k) {
    const double log_w = mix.weights[k] > 0.0 ? std::max(std::log(mix.weights[k]), -1e30) : -1e30;
    const double score = log_w + noise[k];
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  return best;
}

std::vector<double> component_design(const Checkpoint& ck, const models::MixtureDensity& mix, std::size_t k) {
  return models::decode_design(ck.bundle, mix.means.at(k));
}

std::optional<double> design_log_density(const Checkpoint& ck, const std::vector<Record>& records,
                                         const sim::Composition& x) {
  if (records.empty() || records.front().mixture.is_point_mass()) return std::nullopt;
  const auto s = models::encode_design(ck.bundle, x);
  std::vector<double> terms;
  terms.reserve(records.size());
  for (const auto& r : records) terms.push_back(models::mdn_log_density(r.mixture, s));
  const double mx = *std::max_element(terms.begin(), terms.end());
  double acc = 0;
  for (double v : terms) acc += std::exp(v - mx);
  return mx + std::log(acc / static_cast<double>(terms.size())) + models::design_log_jacobian(ck.bundle, x);
}

std::vector<Candidate> predict_designs(const Checkpoint& ck, const Query& q, const InferenceConfig& cfg) {
  const auto set = predict_conditional(ck, q, cfg);
  Rng rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const auto& mix = set.records[i].mixture;
    for (std::size_t m = 0; m < cfg.modes_per_mixture; ++m) {
      std::vector<double> noise(mix.components());
      for (double& g : noise) g = rng.gumbel();
      const std::size_t k = gumbel_select(mix, noise);
      Candidate c;
      c.composition = sim::clip_and_normalize(component_design(ck, mix, k));
      c.z_index = i;
      c.component_index = k;
      const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Candidate& o) {
        for (std::size_t e = 0; e < sim::kElements; ++e)
          if (std::abs(o.composition[e] - c.composition[e]) >= 1e-6) return false;
        return true;
      });
      if (!duplicate) out.push_back(c);
    }
  }
  for (auto& c : out) c.log_density = design_log_density(ck, set.records, c.composition);
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (!a.log_density || !b.log_density) return false;
    return *a.log_density > *b.log_density;
  });
  return out;
}

std::vector<sim::Composition> all_component_means(const Checkpoint& ck, const PredictionSet& set) {
  std::vector<sim::Composition> out;
  for (const auto& r : set.records)
    for (std::size_t k = 0; k < r.mixture.components(); ++k)
      out.push_back(sim::clip_and_normalize(component_design(ck, r.mixture, k)));
  return out;
}

std::string candidates_to_json(const std::vector<Candidate>& candidates) {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& c : candidates) {
    nlohmann::ordered_json comp;
    for (std::size_t e = 0; e < sim::kElements; ++e) comp[std::string(sim::kElementNames[e])] = c.composition[e];
    nlohmann::ordered_json item;
    item["composition"] = comp;
    item["log_density"] = c.log_density ? nlohmann::ordered_json(*c.log_density) : nlohmann::ordered_json(nullptr);
    item["z_index"] = c.z_index;
    item["component_index"] = c.component_index;
    list.push_back(item);
  }
  return list.dump(2) + "\n";
}

}  // namespace forge::inference
