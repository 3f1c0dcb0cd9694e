#include "forge/training/batch.hpp"

#include <algorithm>

#include "forge/common/errors.hpp"
#include "forge/tensor/ops.hpp"

namespace forge::training {

namespace t = forge::tensor;

models::MaskedBatch make_masked_batch(const BatchLayout& layout, const std::vector<const double*>& y_rows,
                                      std::span<const std::uint8_t> flags) {
  const std::size_t b = y_rows.size(), d = layout.width();
  if (flags.size() != b * d) throw DimensionError("mask flags do not match the batch layout");
  std::vector<double> y(b * d), hidden(b * d);
  for (std::size_t i = 0; i < b; ++i) std::copy_n(y_rows[i], d, y.begin() + static_cast<std::ptrdiff_t>(i * d));
  std::transform(flags.begin(), flags.end(), hidden.begin(), [](std::uint8_t f) { return f ? 1.0 : 0.0; });

  models::MaskedBatch batch;
  batch.y = t::Tensor::matrix(b, d, std::move(y));
  batch.hidden = t::Tensor::matrix(b, d, std::move(hidden));
  if (layout.use_indicators) {
    const std::size_t iw = datagen::indicator_width(layout.mode, layout.phases, layout.temps);
    std::vector<double> ind(b * iw);
    for (std::size_t i = 0; i < b; ++i) {
      const auto row = datagen::mask_indicators(flags.subspan(i * d, d), layout.mode, layout.phases, layout.temps);
      std::copy(row.begin(), row.end(), ind.begin() + static_cast<std::ptrdiff_t>(i * iw));
    }
    batch.indicators = t::Tensor::matrix(b, iw, std::move(ind));
  } else {
    if (std::any_of(flags.begin(), flags.end(), [](std::uint8_t f) { return f != 0; })) {
      throw ContractError("this model was trained on full diagrams and cannot take a masked query; "
                          "use a hybrid (cvae_* or cgan_*) or a mask-trained model");
    }
  }
  return batch;
}

tensor::Tensor plain_condition(const models::MaskedBatch& batch, const BatchLayout& layout) {
  if (!layout.use_indicators) return batch.y;
  return t::concat_cols({batch.observed(), batch.indicators});
}

}  // namespace forge::training
