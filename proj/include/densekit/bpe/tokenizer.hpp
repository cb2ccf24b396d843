#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "densekit/common.hpp"

namespace densekit::bpe {

/// Names of the reserved tokens, in the id order they occupy.
struct SpecialTokens {
  std::string sequence_start = "<s>";
  std::string sequence_end = "</s>";
  std::string mask = "<mask>";
  std::string pad = "<pad>";
  std::string unknown = "<unk>";

  std::vector<std::string> as_list() const {
    return {sequence_start, sequence_end, mask, pad, unknown};
  }
  static SpecialTokens from_list(const std::vector<std::string>& names);
};

/// Byte-level BPE model. Ids are laid out as
///   [0, S)            special tokens
///   [S, S+256)        the 256 byte symbols
///   [S+256, ...)      one id per merge, in selection order
/// so |vocab| == 256 + |merges| + |special_tokens| always holds.
///
/// Token strings use the printable byte-to-codepoint remapping of the
/// byte-level BPE family (space becomes U+0120, etc.) so the model
/// serializes as plain UTF-8 JSON.
class TokenizerModel {
 public:
  TokenizerModel() = default;

  static TokenizerModel byte_level(const SpecialTokens& specials,
                                   bool lowercase);

  int vocab_size() const { return static_cast<int>(id_to_token_.size()); }
  bool lowercase() const { return lowercase_; }
  const SpecialTokens& specials() const { return specials_; }
  const std::vector<std::pair<std::string, std::string>>& merges() const {
    return merges_;
  }
  const std::unordered_map<std::string, int>& vocab() const { return vocab_; }
  const std::string& token(int id) const;
  int id_of(const std::string& token) const;  // -1 when absent

  int start_id() const { return 0; }
  int end_id() const { return 1; }
  int mask_id() const { return 2; }
  int pad_id() const { return 3; }
  int unk_id() const { return 4; }
  int num_specials() const { return 5; }
  bool is_special(int id) const { return id >= 0 && id < num_specials(); }

  /// Normalization applied before pre-tokenization (ASCII lowercasing when
  /// the model is uncased). Round trips are exact up to this function.
  std::string normalize(const std::string& text) const;

  /// Normalize, pre-tokenize, merge, and wrap with start/end ids.
  std::vector<int> encode(const std::string& text) const;

  /// Inverse of encode up to normalization; special tokens are dropped.
  std::string decode(const std::vector<int>& ids) const;

  void save(const std::string& path) const;
  std::string to_json() const;
  static TokenizerModel load(const std::string& path);
  static TokenizerModel from_json(const std::string& json_text);

  // Used by the trainer: appends the merge and its product token.
  void push_merge(const std::string& left, const std::string& right);

 private:
  void check_invariants() const;
  std::vector<std::string> merge_word(const std::string& pretoken) const;

  SpecialTokens specials_;
  bool lowercase_ = true;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::string, int> vocab_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> merge_rank_;  // "left\nright" -> rank
  mutable std::unordered_map<std::string, std::vector<int>> word_cache_;
};

/// Train a byte-level BPE model. Deterministic: the most frequent adjacent
/// pair wins each round, ties broken by lexicographic (left, right) order,
/// and candidates whose concatenation is already a token are skipped so the
/// vocab-size identity stays exact. Stops early when no mergeable pair
/// remains.
TokenizerModel train_bpe(const std::vector<std::string>& corpus,
                         int vocab_size, bool lowercase,
                         const SpecialTokens& specials = SpecialTokens{});

/// Lossless splitter used by both training and encoding: a pre-token is an
/// optional leading space plus a maximal run of one character class
/// (letters, digits, other), or a whitespace run. Merges never cross
/// pre-token boundaries. Non-ASCII codepoints classify as letters.
std::vector<std::string> pretokenize(const std::string& text);

// Byte <-> printable codepoint remapping shared with the serialized format.
std::string byte_to_symbol(unsigned char b);
std::string symbols_of_bytes(const std::string& bytes);
std::string bytes_of_symbols(const std::string& symbols);

/// encode() clipped to max_len ids, keeping the end-of-sequence id last.
std::vector<int> encode_truncated(const TokenizerModel& model,
                                  const std::string& text, int max_len);

}  // namespace densekit::bpe
