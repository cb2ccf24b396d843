#include "densekit/train/data.hpp"

#include <fstream>

#include "json.hpp"

namespace densekit::train {

using json = nlohmann::json;

DataSource::DataSource(std::string name, std::vector<Record> records)
    : name_(std::move(name)), records_(std::move(records)) {
  require(!records_.empty(), "data source '" + name_ + "' is empty");
}

DataSource DataSource::from_jsonl(const std::string& name, const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open data file: " + path);
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": invalid JSON: " + e.what());
    }
    Record r;
    if (j.contains("query")) {
      r.query = j.at("query").get<std::string>();
      r.positive = j.value("positive", std::string{});
      if (j.contains("negatives"))
        r.negatives = j.at("negatives").get<std::vector<std::string>>();
    } else if (j.contains("text")) {
      r.query = j.at("text").get<std::string>();
    } else {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": record needs a \"query\" or \"text\" field");
    }
    records.push_back(std::move(r));
  }
  return DataSource(name, std::move(records));
}

DataSource DataSource::from_lines(const std::string& name, const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open data file: " + path);
  std::vector<Record> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Record r;
    r.query = line;
    records.push_back(std::move(r));
  }
  return DataSource(name, std::move(records));
}

DataSource DataSource::from_file(const std::string& name, const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".jsonl" || ext == ".json") return from_jsonl(name, path);
  return from_lines(name, path);
}

ProportionalSampler::ProportionalSampler(std::vector<const DataSource*> sources,
                                         int batch_size, std::uint64_t seed)
    : sources_(std::move(sources)), batch_size_(batch_size), rng_(seed) {
  require(!sources_.empty(), "sampler needs at least one source");
  require(batch_size_ >= 1, "batch size must be >= 1");
  double total = 0;
  for (const DataSource* s : sources_) {
    require(s != nullptr && s->size() > 0, "sampler source is empty");
    total += static_cast<double>(s->size());
    cumulative_.push_back(total);
  }
  queues_.resize(sources_.size());
}

std::size_t ProportionalSampler::draw_source() {
  const double u = rng_.uniform() * cumulative_.back();
  for (std::size_t k = 0; k < cumulative_.size(); ++k)
    if (u < cumulative_[k]) return k;
  return cumulative_.size() - 1;
}

ProportionalSampler::Batch ProportionalSampler::next() {
  const std::size_t k = draw_source();
  Batch batch;
  batch.source_index = static_cast<int>(k);
  auto& queue = queues_[k];
  const DataSource& src = *sources_[k];
  for (int i = 0; i < batch_size_; ++i) {
    if (queue.empty()) {
      queue.resize(src.size());
      for (std::size_t j = 0; j < src.size(); ++j) queue[j] = j;
      rng_.shuffle(queue);
    }
    batch.records.push_back(&src.record(queue.back()));
    queue.pop_back();
  }
  return batch;
}

}  // namespace densekit::train
