#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "densekit/common.hpp"
#include "densekit/rng.hpp"

namespace densekit::train {

/// One training record. Raw-document sources leave positive/negatives empty.
struct Record {
  std::string query;
  std::string positive;
  std::vector<std::string> negatives;
};

class DataSource {
 public:
  DataSource(std::string name, std::vector<Record> records);

  const std::string& name() const { return name_; }
  std::size_t size() const { return records_.size(); }
  const Record& record(std::size_t i) const { return records_.at(i); }

  /// JSON Lines with {"query", "positive"[, "negatives"]} per line, or
  /// {"text"} for raw documents.
  static DataSource from_jsonl(const std::string& name, const std::string& path);
  /// One raw document per line.
  static DataSource from_lines(const std::string& name, const std::string& path);
  /// Dispatch on extension: .jsonl/.json use from_jsonl, anything else lines.
  static DataSource from_file(const std::string& name, const std::string& path);

 private:
  std::string name_;
  std::vector<Record> records_;
};

/// Batches drawn from one source at a time, the source picked with
/// probability size_k / sum(sizes); within a source examples are consumed
/// without replacement, reshuffled per epoch. Fully determined by the seed.
class ProportionalSampler {
 public:
  struct Batch {
    int source_index = -1;
    std::vector<const Record*> records;
  };

  ProportionalSampler(std::vector<const DataSource*> sources, int batch_size,
                      std::uint64_t seed);

  Batch next();
  int num_sources() const { return static_cast<int>(sources_.size()); }

 private:
  std::size_t draw_source();

  std::vector<const DataSource*> sources_;
  int batch_size_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> queues_;  // shuffled, consumed from back
  std::vector<double> cumulative_;
};

}  // namespace densekit::train
