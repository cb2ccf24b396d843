#include "densekit/train/masking.hpp"

#include "densekit/rng.hpp"

namespace densekit::train {

MaskResult mask_tokens(const std::vector<int>& ids, double mask_prob,
                       std::uint64_t seed, int mask_id, int vocab_size,
                       int num_specials) {
  require(mask_prob >= 0.0 && mask_prob <= 1.0, "mask_prob must lie in [0,1]");
  require(mask_id >= 0 && mask_id < vocab_size, "mask_id out of range");
  bool any_maskable = false;
  for (int id : ids) {
    require(id >= 0 && id < vocab_size, "token id out of range");
    if (id >= num_specials) any_maskable = true;
  }
  require(any_maskable, "sequence has no maskable positions");

  Rng rng(seed);
  MaskResult out;
  out.corrupted = ids;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < num_specials) continue;
    if (rng.uniform() >= mask_prob) continue;
    out.positions.push_back(static_cast<int>(i));
    out.labels.push_back(ids[i]);
    const double roll = rng.uniform();
    if (roll < 0.8) {
      out.corrupted[i] = mask_id;
    } else if (roll < 0.9) {
      out.corrupted[i] = static_cast<int>(rng.uniform_below(
          static_cast<std::uint64_t>(vocab_size)));
    }  // else: keep the original token
  }
  return out;
}

}  // namespace densekit::train
