#include "densekit/bpe/analysis.hpp"

#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace densekit::bpe {

using json = nlohmann::json;

OverlapReport vocab_overlap(const TokenizerModel& a, const TokenizerModel& b) {
  OverlapReport r;
  for (const auto& [tok, id] : a.vocab()) {
    (void)id;
    if (b.vocab().count(tok))
      ++r.common_count;
    else
      ++r.only_a;
  }
  r.only_b = static_cast<long long>(b.vocab().size()) - r.common_count;
  r.common_fraction =
      a.vocab().empty() ? 0.0
                        : static_cast<double>(r.common_count) /
                              static_cast<double>(a.vocab().size());
  return r;
}

std::string OverlapReport::to_json() const {
  json j;
  j["common_count"] = common_count;
  j["only_a"] = only_a;
  j["only_b"] = only_b;
  j["common_fraction"] = common_fraction;
  return j.dump(2) + "\n";
}

std::string OverlapReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(18) << "common" << common_count << "\n"
     << std::left << std::setw(18) << "only_a" << only_a << "\n"
     << std::left << std::setw(18) << "only_b" << only_b << "\n"
     << std::left << std::setw(18) << "common_fraction" << std::fixed
     << std::setprecision(4) << common_fraction << "\n";
  return os.str();
}

TokenCountReport corpus_token_stats(
    const std::vector<std::pair<std::string, const TokenizerModel*>>& models,
    const std::vector<std::string>& samples) {
  require(!samples.empty(), "samples list must be non-empty");
  require(!models.empty(), "at least one tokenizer required");
  TokenCountReport report;
  report.sample_count = samples.size();
  for (const auto& [name, model] : models) {
    TokenCountReport::PerModel pm;
    pm.name = name;
    for (const auto& text : samples) {
      long long n = 0;
      for (int id : model->encode(text))
        if (!model->is_special(id)) ++n;
      pm.per_sample.push_back(n);
      pm.total_tokens += n;
    }
    report.models.push_back(std::move(pm));
  }
  const double base = static_cast<double>(report.models.front().total_tokens);
  for (auto& pm : report.models)
    pm.delta_pct_vs_first =
        base == 0.0 ? 0.0
                    : 100.0 * (static_cast<double>(pm.total_tokens) - base) / base;
  return report;
}

std::string TokenCountReport::to_json() const {
  json j;
  j["sample_count"] = sample_count;
  json ms = json::array();
  for (const auto& pm : models) {
    json m;
    m["name"] = pm.name;
    m["total_tokens"] = pm.total_tokens;
    m["delta_pct_vs_first"] = pm.delta_pct_vs_first;
    ms.push_back(std::move(m));
  }
  j["models"] = std::move(ms);
  return j.dump(2) + "\n";
}

std::string TokenCountReport::to_table() const {
  std::ostringstream os;
  std::size_t w = 10;
  for (const auto& pm : models) w = std::max(w, pm.name.size() + 2);
  os << std::left << std::setw(static_cast<int>(w)) << "tokenizer"
     << std::right << std::setw(14) << "tokens" << std::setw(12) << "delta%"
     << "\n";
  for (const auto& pm : models) {
    os << std::left << std::setw(static_cast<int>(w)) << pm.name << std::right
       << std::setw(14) << pm.total_tokens << std::setw(12) << std::fixed
       << std::setprecision(2) << pm.delta_pct_vs_first << "\n";
  }
  os << "samples: " << sample_count << "\n";
  return os.str();
}

}  // namespace densekit::bpe
