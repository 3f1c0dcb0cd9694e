#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forge/datagen/mask.hpp"
#include "forge/models/networks.hpp"

namespace forge::training {

struct BatchLayout {
  datagen::MaskMode mode = datagen::MaskMode::rows;
  std::size_t phases = 0;
  std::size_t temps = 0;
  bool use_indicators = false;

  std::size_t width() const { return phases * temps; }
};

/// Packs standardized target rows and per-row hidden flags (b·D, 1 = hidden) into network
/// inputs. Without indicators the flags must all be zero.
models::MaskedBatch make_masked_batch(const BatchLayout& layout, const std::vector<const double*>& y_rows,
                                      std::span<const std::uint8_t> flags);

/// Predictor input for plain kinds: the observed diagram plus the mask summary, or the
/// diagram alone for models trained on full input.
tensor::Tensor plain_condition(const models::MaskedBatch& batch, const BatchLayout& layout);

}  // namespace forge::training
