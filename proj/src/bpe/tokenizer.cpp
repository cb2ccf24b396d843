#include "densekit/bpe/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace densekit::bpe {
namespace {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Byte <-> codepoint remapping.
//
// Printable single-byte characters keep their own codepoint; the remaining 68
// bytes (controls, space, DEL, a few latin-1 holes) map to 256+n so every
// token string is printable UTF-8. Space lands on U+0120, the familiar
// leading-space marker.
// ---------------------------------------------------------------------------

struct ByteTables {
  std::array<int, 256> byte_to_cp;
  std::unordered_map<int, unsigned char> cp_to_byte;
  ByteTables() {
    auto printable = [](int b) {
      return (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || (b >= 174 && b <= 255);
    };
    int n = 0;
    for (int b = 0; b < 256; ++b) {
      int cp = printable(b) ? b : 256 + n++;
      byte_to_cp[static_cast<std::size_t>(b)] = cp;
      cp_to_byte[cp] = static_cast<unsigned char>(b);
    }
  }
};

const ByteTables& tables() {
  static const ByteTables t;
  return t;
}

void append_utf8(std::string& out, int cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Decodes the codepoint starting at position i; advances i. An invalid byte
// decodes as itself (category "other") so malformed input still segments.
int next_codepoint(const std::string& s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  int cp = b0;
  if (b0 < 0x80) {
    len = 1;
  } else if ((b0 >> 5) == 0x6) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 >> 4) == 0xE) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 >> 3) == 0x1E) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return b0;  // stray continuation byte
  }
  if (i + len > s.size()) {
    ++i;
    return b0;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto bk = static_cast<unsigned char>(s[i + k]);
    if ((bk >> 6) != 0x2) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += len;
  return cp;
}

enum class CharClass { Space, OtherWs, Letter, Digit, Other };

CharClass classify(int cp) {
  if (cp == ' ') return CharClass::Space;
  if (cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f')
    return CharClass::OtherWs;
  if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || cp >= 0x80)
    return CharClass::Letter;
  if (cp >= '0' && cp <= '9') return CharClass::Digit;
  return CharClass::Other;
}

bool is_ws(CharClass c) { return c == CharClass::Space || c == CharClass::OtherWs; }

std::string merge_key(const std::string& l, const std::string& r) {
  // Mapped symbols never contain a raw '\n' byte, so this key is unambiguous.
  return l + '\n' + r;
}

}  // namespace

std::string byte_to_symbol(unsigned char b) {
  std::string s;
  append_utf8(s, tables().byte_to_cp[b]);
  return s;
}

std::string symbols_of_bytes(const std::string& bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (char c : bytes) append_utf8(out, tables().byte_to_cp[static_cast<unsigned char>(c)]);
  return out;
}

std::string bytes_of_symbols(const std::string& symbols) {
  std::string out;
  std::size_t i = 0;
  while (i < symbols.size()) {
    int cp = next_codepoint(symbols, i);
    auto it = tables().cp_to_byte.find(cp);
    require(it != tables().cp_to_byte.end(),
            "token contains a codepoint outside the byte alphabet");
    out.push_back(static_cast<char>(it->second));
  }
  return out;
}

std::vector<std::string> pretokenize(const std::string& text) {
  std::vector<std::string> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t probe = i;
    int cp = next_codepoint(text, probe);
    CharClass c = classify(cp);
    if (is_ws(c)) {
      // Maximal whitespace run; a trailing single space attaches to the next
      // word instead.
      std::size_t j = i;
      std::size_t last_start = i;
      while (j < n) {
        std::size_t p = j;
        int wcp = next_codepoint(text, p);
        if (!is_ws(classify(wcp))) break;
        last_start = j;
        j = p;
      }
      if (j < n && text[j - 1] == ' ') {
        if (j - 1 > i) out.push_back(text.substr(i, j - 1 - i));
        i = j - 1;  // single space falls through to the word path
      } else {
        out.push_back(text.substr(i, j - i));
        i = j;
        continue;
      }
    }
    // Word: optional single leading space + maximal run of one class.
    std::size_t start = i;
    if (text[i] == ' ') ++i;
    std::size_t p = i;
    int first = next_codepoint(text, p);
    CharClass run = classify(first);
    i = p;
    while (i < n) {
      std::size_t q = i;
      int ncp = next_codepoint(text, q);
      if (classify(ncp) != run) break;
      i = q;
    }
    out.push_back(text.substr(start, i - start));
  }
  return out;
}

// ---------------------------------------------------------------------------
// SpecialTokens
// ---------------------------------------------------------------------------

SpecialTokens SpecialTokens::from_list(const std::vector<std::string>& names) {
  require(names.size() == 5,
          "special_tokens must list exactly 5 names "
          "(sequence-start, sequence-end, mask, pad, unknown)");
  std::unordered_set<std::string> uniq(names.begin(), names.end());
  require(uniq.size() == names.size(), "special tokens must be distinct");
  SpecialTokens s;
  s.sequence_start = names[0];
  s.sequence_end = names[1];
  s.mask = names[2];
  s.pad = names[3];
  s.unknown = names[4];
  return s;
}

// ---------------------------------------------------------------------------
// TokenizerModel
// ---------------------------------------------------------------------------

TokenizerModel TokenizerModel::byte_level(const SpecialTokens& specials,
                                          bool lowercase) {
  TokenizerModel m;
  m.specials_ = specials;
  m.lowercase_ = lowercase;
  for (const auto& name : specials.as_list()) {
    m.vocab_[name] = static_cast<int>(m.id_to_token_.size());
    m.id_to_token_.push_back(name);
  }
  for (int b = 0; b < 256; ++b) {
    std::string sym = byte_to_symbol(static_cast<unsigned char>(b));
    require(m.vocab_.find(sym) == m.vocab_.end(),
            "special token collides with a byte symbol: " + sym);
    m.vocab_[sym] = static_cast<int>(m.id_to_token_.size());
    m.id_to_token_.push_back(sym);
  }
  return m;
}

const std::string& TokenizerModel::token(int id) const {
  require(id >= 0 && id < vocab_size(), "token id out of range: " + std::to_string(id));
  return id_to_token_[static_cast<std::size_t>(id)];
}

int TokenizerModel::id_of(const std::string& tok) const {
  auto it = vocab_.find(tok);
  return it == vocab_.end() ? -1 : it->second;
}

void TokenizerModel::push_merge(const std::string& left, const std::string& right) {
  const std::string product = left + right;
  require(vocab_.count(left) == 1 && vocab_.count(right) == 1,
          "merge refers to unknown tokens");
  require(vocab_.count(product) == 0, "merge product already in vocabulary");
  merge_rank_[merge_key(left, right)] = static_cast<int>(merges_.size());
  merges_.emplace_back(left, right);
  vocab_[product] = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(product);
  word_cache_.clear();
}

std::string TokenizerModel::normalize(const std::string& text) const {
  if (!lowercase_) return text;
  std::string out = text;
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

// Merges apply by rank, each pass folding every occurrence of the best pair.
// For models produced by train_bpe this equals replaying the merge list in
// trained order, because each merge's operands predate it.
std::vector<std::string> TokenizerModel::merge_word(const std::string& pretoken) const {
  std::vector<std::string> syms;
  for (char c : pretoken) syms.push_back(byte_to_symbol(static_cast<unsigned char>(c)));
  while (syms.size() >= 2) {
    int best_rank = -1;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = merge_rank_.find(merge_key(syms[i], syms[i + 1]));
      if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank))
        best_rank = it->second;
    }
    if (best_rank < 0) break;
    const auto& [l, r] = merges_[static_cast<std::size_t>(best_rank)];
    std::vector<std::string> next;
    next.reserve(syms.size());
    std::size_t i = 0;
    while (i < syms.size()) {
      if (i + 1 < syms.size() && syms[i] == l && syms[i + 1] == r) {
        next.push_back(l + r);
        i += 2;
      } else {
        next.push_back(std::move(syms[i]));
        ++i;
      }
    }
    syms = std::move(next);
  }
  return syms;
}

namespace {
std::mutex g_word_cache_mutex;
}

std::vector<int> TokenizerModel::encode(const std::string& text) const {
  std::vector<int> ids;
  ids.push_back(start_id());
  const std::string norm = normalize(text);
  for (const auto& word : pretokenize(norm)) {
    {
      std::lock_guard<std::mutex> lock(g_word_cache_mutex);
      auto it = word_cache_.find(word);
      if (it != word_cache_.end()) {
        ids.insert(ids.end(), it->second.begin(), it->second.end());
        continue;
      }
    }
    std::vector<int> word_ids;
    for (const auto& sym : merge_word(word)) {
      auto it = vocab_.find(sym);
      require(it != vocab_.end(), "merged symbol missing from vocabulary: " + sym);
      word_ids.push_back(it->second);
    }
    {
      std::lock_guard<std::mutex> lock(g_word_cache_mutex);
      word_cache_[word] = word_ids;
    }
    ids.insert(ids.end(), word_ids.begin(), word_ids.end());
  }
  ids.push_back(end_id());
  return ids;
}

std::string TokenizerModel::decode(const std::vector<int>& ids) const {
  std::string symbols;
  for (int id : ids) {
    require(id >= 0 && id < vocab_size(),
            "token id out of range: " + std::to_string(id));
    if (is_special(id)) continue;
    symbols += id_to_token_[static_cast<std::size_t>(id)];
  }
  return bytes_of_symbols(symbols);
}

std::string TokenizerModel::to_json() const {
  json j;
  j["format"] = "densekit-bpe";
  j["version"] = 1;
  j["lowercase"] = lowercase_;
  j["special_tokens"] = specials_.as_list();
  json merges = json::array();
  for (const auto& [l, r] : merges_) merges.push_back(l + " " + r);
  j["merges"] = std::move(merges);
  json vocab = json::object();
  for (const auto& [tok, id] : vocab_) vocab[tok] = id;
  j["vocab"] = std::move(vocab);
  return j.dump(2) + "\n";
}

void TokenizerModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open tokenizer file for writing: " + path);
  out << to_json();
  require(out.good(), "failed writing tokenizer file: " + path);
}

TokenizerModel TokenizerModel::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("tokenizer file is not valid JSON: ") + e.what());
  }
  require(j.value("format", "") == "densekit-bpe", "unrecognized tokenizer format");
  TokenizerModel m = byte_level(
      SpecialTokens::from_list(j.at("special_tokens").get<std::vector<std::string>>()),
      j.at("lowercase").get<bool>());
  for (const auto& entry : j.at("merges")) {
    const std::string s = entry.get<std::string>();
    auto sp = s.find(' ');
    require(sp != std::string::npos, "malformed merge entry: " + s);
    m.push_merge(s.substr(0, sp), s.substr(sp + 1));
  }
  // The file's vocab must agree with the rebuilt one exactly.
  const auto& vocab = j.at("vocab");
  require(vocab.size() == m.vocab_.size(),
          "vocab size disagrees with 256 + merges + specials");
  for (auto it = vocab.begin(); it != vocab.end(); ++it) {
    auto found = m.vocab_.find(it.key());
    require(found != m.vocab_.end(), "vocab token not derivable: " + it.key());
    require(found->second == it.value().get<int>(),
            "vocab id mismatch for token: " + it.key());
  }
  m.check_invariants();
  return m;
}

TokenizerModel TokenizerModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open tokenizer file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void TokenizerModel::check_invariants() const {
  require(vocab_size() == 256 + static_cast<int>(merges_.size()) + num_specials(),
          "vocabulary size identity violated");
  std::unordered_set<int> seen;
  for (const auto& [tok, id] : vocab_) {
    require(id >= 0 && id < vocab_size(), "token id out of range");
    require(seen.insert(id).second, "duplicate token id");
    require(id_to_token_[static_cast<std::size_t>(id)] == tok, "id table mismatch");
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

struct TrainWord {
  std::vector<std::string> syms;
  long long count = 0;
};

struct PairStat {
  std::string left, right;
  long long count = 0;
  std::unordered_set<int> words;
};

void add_word_pairs(const TrainWord& w, int word_idx,
                    std::unordered_map<std::string, PairStat>& stats, int sign) {
  for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
    auto& st = stats[merge_key(w.syms[i], w.syms[i + 1])];
    if (st.left.empty() && st.right.empty()) {
      st.left = w.syms[i];
      st.right = w.syms[i + 1];
    }
    st.count += sign * w.count;
    if (sign > 0)
      st.words.insert(word_idx);
  }
}

}  // namespace

std::vector<int> encode_truncated(const TokenizerModel& model,
                                  const std::string& text, int max_len) {
  require(max_len >= 2, "max_len must fit the start/end wrapper");
  std::vector<int> ids = model.encode(text);
  if (static_cast<int>(ids.size()) > max_len) {
    ids.resize(static_cast<std::size_t>(max_len));
    ids.back() = model.end_id();
  }
  return ids;
}

TokenizerModel train_bpe(const std::vector<std::string>& corpus, int vocab_size,
                         bool lowercase, const SpecialTokens& specials) {
  const int min_size = 256 + static_cast<int>(specials.as_list().size());
  require(vocab_size >= min_size,
          "vocab_size must be at least " + std::to_string(min_size));
  require(!corpus.empty(), "empty corpus");

  TokenizerModel model = TokenizerModel::byte_level(specials, lowercase);

  // Collapse the corpus to unique pre-tokens with counts.
  std::unordered_map<std::string, long long> word_counts;
  for (const auto& doc : corpus)
    for (auto& w : pretokenize(model.normalize(doc))) word_counts[w] += 1;
  require(!word_counts.empty(), "empty corpus");

  // Deterministic word order keeps the stats rebuild reproducible.
  std::vector<std::pair<std::string, long long>> ordered(word_counts.begin(),
                                                         word_counts.end());
  std::sort(ordered.begin(), ordered.end());

  std::vector<TrainWord> words;
  words.reserve(ordered.size());
  std::unordered_map<std::string, PairStat> stats;
  for (const auto& [text, count] : ordered) {
    TrainWord w;
    w.count = count;
    for (char c : text) w.syms.push_back(byte_to_symbol(static_cast<unsigned char>(c)));
    words.push_back(std::move(w));
    add_word_pairs(words.back(), static_cast<int>(words.size()) - 1, stats, +1);
  }

  const int budget = vocab_size - min_size;
  for (int round = 0; round < budget; ++round) {
    // Highest count wins; ties break on lexicographic (left, right). Pairs
    // whose product is already a token are skipped so the size identity
    // |vocab| == 256 + |merges| + |specials| stays exact.
    const PairStat* best = nullptr;
    for (const auto& [key, st] : stats) {
      if (st.count <= 0) continue;
      if (model.vocab().count(st.left + st.right)) continue;
      if (!best || st.count > best->count ||
          (st.count == best->count &&
           (st.left < best->left ||
            (st.left == best->left && st.right < best->right)))) {
        best = &st;
      }
    }
    if (!best) break;

    const std::string left = best->left, right = best->right;
    const std::vector<int> affected(best->words.begin(), best->words.end());
    model.push_merge(left, right);

    for (int wi : affected) {
      TrainWord& w = words[static_cast<std::size_t>(wi)];
      add_word_pairs(w, wi, stats, -1);
      std::vector<std::string> next;
      next.reserve(w.syms.size());
      std::size_t i = 0;
      while (i < w.syms.size()) {
        if (i + 1 < w.syms.size() && w.syms[i] == left && w.syms[i + 1] == right) {
          next.push_back(left + right);
          i += 2;
        } else {
          next.push_back(std::move(w.syms[i]));
          ++i;
        }
      }
      w.syms = std::move(next);
      add_word_pairs(w, wi, stats, +1);
    }
    // Drop exhausted entries so the scan stays tight.
    for (auto it = stats.begin(); it != stats.end();) {
      if (it->second.count <= 0)
        it = stats.erase(it);
      else
        ++it;
    }
  }
  return model;
}

}  // namespace densekit::bpe
