#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "forge/datagen/dataset.hpp"
#include "forge/datagen/mask.hpp"
#include "forge/models/bundle.hpp"
#include "forge/models/forest.hpp"

namespace forge::training {

using models::ModelKind;

/// How many entries a training example hides.
enum class MaskSampling {
  fixed,    // exactly round(mask_ratio · units)
  uniform,  // uniform over 0 .. units − 1, so one model covers every ratio
};

std::string to_string(MaskSampling s);
MaskSampling mask_sampling_from_string(const std::string& name);

struct TrainConfig {
  ModelKind kind = ModelKind::mdn;
  std::vector<std::size_t> hidden{500, 100, 50};
  std::size_t latent_dim = 30;
  std::size_t components = 5;
  double lambda = 1.0;
  double lr = 1e-3;
  double lr_decay = 1.0;  // lr reaches lr·lr_decay at the epoch cap, geometrically
  std::size_t batch = 50;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;

  datagen::MaskMode mask_mode = datagen::MaskMode::rows;
  double mask_ratio = 0.0;
  MaskSampling mask_sampling = MaskSampling::fixed;

  double convergence_tol = 1e-5;
  std::size_t convergence_window = 5;

  // Mixture tempering for MDN predictors: beta rises geometrically from anneal_beta to 1
  // over the first anneal_epochs epochs. Convergence is not tested until it reaches 1.
  std::size_t anneal_epochs = 30;
  double anneal_beta = 0.1;

  models::ForestOptions forest;

  /// Plain models see mask indicators only when trained on masked inputs; hybrids always do.
  bool masked() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Inverse temperature used for the design likelihood in 1-based epoch `epoch`.
double annealing_beta(const TrainConfig& cfg, std::size_t epoch);

/// Serialises every field; from_json rejects unknown keys and fills missing ones with defaults.
std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& text);

/// k disjoint index sets covering 0..n−1, sizes differing by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double objective = 0;  // mean per-example loss minimised by the predictor side
  double adversary = 0;  // mean discriminator loss (CGAN kinds), else 0
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::string stop_reason = "epoch_cap";  // epoch_cap | converged | no_epochs
};

/// Column names for a dataset's schema: element names, then phase@temperature cells.
struct Schema {
  std::vector<std::string> elements;
  std::vector<std::string> labels;
  std::vector<double> temperatures;

  std::size_t target_width() const { return labels.size() * temperatures.size(); }
  static Schema of(const datagen::Dataset& ds);
  /// Empty when equal, else a readable list of differences.
  std::string diff(const Schema& other) const;
};

struct Checkpoint {
  int version = 1;
  TrainConfig config;
  Schema schema;
  models::ModelBundle bundle;
  TrainLog log;
  std::size_t training_rows = 0;
};

inline constexpr int kCheckpointVersion = 1;

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Fits the model on the given dataset rows. Standardisation statistics come from those
/// rows only. Throws NumericError on a non-finite or diverging objective.
Checkpoint train(const TrainConfig& cfg, const datagen::Dataset& data, const std::vector<std::size_t>& train_rows,
                 const EpochCallback& on_epoch = {});

/// Per-example mask drawn the way training draws it.
datagen::Mask sample_training_mask(const TrainConfig& cfg, std::size_t phases, std::size_t temps, Rng& rng);

}  // namespace forge::training
