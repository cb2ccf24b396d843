#pragma once

#include <cstdint>
#include <vector>

#include "densekit/common.hpp"

namespace densekit::train {

struct MaskResult {
  std::vector<int> corrupted;  // ids with the masking applied
  std::vector<int> labels;     // original ids at the selected positions
  std::vector<int> positions;  // selected positions, ascending
};

/// Independent selection of each non-special position with probability
/// mask_prob; of the selected, 80% become mask_id, 10% a random vocabulary id
/// and 10% stay unchanged. Ids below num_specials never get selected.
/// Deterministic in the seed. Requires at least one maskable position;
/// mask_prob == 0 legitimately yields an empty selection.
MaskResult mask_tokens(const std::vector<int>& ids, double mask_prob,
                       std::uint64_t seed, int mask_id, int vocab_size,
                       int num_specials);

}  // namespace densekit::train
