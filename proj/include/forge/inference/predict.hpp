#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/common/rng.hpp"
#include "forge/datagen/mask.hpp"
#include "forge/models/mixture.hpp"
#include "forge/sim/composition.hpp"
#include "forge/training/train.hpp"

namespace forge::inference {

struct InferenceConfig {
  std::size_t n = 20;  // latent draws
  std::uint64_t seed = 0;
  std::size_t modes_per_mixture = 1;

  void validate() const;
};

/// A target specification: the full diagram layout with per-cell hidden flags. Values
/// under hidden cells are ignored.
struct Query {
  std::vector<double> diagram;       // P·T, phase-major, raw phase fractions
  std::vector<std::uint8_t> hidden;  // P·T, 1 = unspecified

  std::size_t hidden_count() const;
};

Query make_query(std::span<const double> diagram, const datagen::Mask& mask, std::size_t phases, std::size_t temps);
Query full_query(std::span<const double> diagram);
/// Parses {"observed": {"<phase>@<temp>": value, ...}}; every cell not listed is hidden.
Query query_from_json(const std::string& text, const training::Schema& schema);

/// h̄ = imputer mean given (v, z), in raw phase-fraction units, hidden cells only, in
/// flattened order. Empty when nothing is hidden. Throws ContractError for plain kinds.
std::vector<double> impute(const training::Checkpoint& ckpt, const Query& q, std::span<const double> z);

struct Record {
  std::vector<double> z;
  std::vector<double> imputed;     // h̄ in raw units (empty for plain kinds)
  models::MixtureDensity mixture;  // over the model's design space
};

struct Candidate {
  sim::Composition composition{};  // clipped and renormalised
  std::optional<double> log_density;
  std::size_t z_index = 0;
  std::size_t component_index = 0;
};

struct PredictionSet {
  std::vector<Record> records;
  std::vector<Candidate> candidates;  // Gumbel-selected, in draw order
};

/// Draws N latent vectors from N(0, I), imputes, and evaluates the predictor. Plain kinds
/// skip imputation; one trained on full diagrams rejects a masked query with ContractError.
PredictionSet predict_conditional(const training::Checkpoint& ckpt, const Query& q, const InferenceConfig& cfg);

/// argmax_k (ln α_k + noise_k) with ln 0 clamped to −1e30. Throws ContractError when every
/// weight is zero or the noise length differs from K.
std::size_t gumbel_select(const models::MixtureDensity& mix, std::span<const double> noise);

/// Component mean k of a record's mixture mapped back to a raw composition (unclipped).
std::vector<double> component_design(const training::Checkpoint& ckpt, const models::MixtureDensity& mix,
                                     std::size_t k);

/// log of (1/N) Σ_i P(x | v, h̄_i) at a raw composition, or nullopt for point-mass heads.
std::optional<double> design_log_density(const training::Checkpoint& ckpt, const std::vector<Record>& records,
                                         const sim::Composition& x);

/// Ranked candidates: Gumbel-selected modes, deduplicated (1e-6 max-norm), clipped and
/// renormalised, sorted by descending log density. Never calls the simulator.
std::vector<Candidate> predict_designs(const training::Checkpoint& ckpt, const Query& q, const InferenceConfig& cfg);

/// Every component mean of every record, clipped and renormalised.
std::vector<sim::Composition> all_component_means(const training::Checkpoint& ckpt, const PredictionSet& set);

std::string candidates_to_json(const std::vector<Candidate>& candidates);

}  // namespace forge::inference
