#include "densekit/evalkit/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace densekit::evalkit {

PrfScore entity_f1(const std::vector<IobDocument>& pred,
                   const std::vector<IobDocument>& gold) {
  require(pred.size() == gold.size(), "document count mismatch");
  long long tp = 0, pred_total = 0, gold_total = 0;
  for (std::size_t d = 0; d < pred.size(); ++d) {
    require(pred[d].tokens == gold[d].tokens,
            "token misalignment in document " + std::to_string(d));
    auto p = extract_spans(pred[d]);
    auto g = extract_spans(gold[d]);
    std::set<EntitySpan> gold_set(g.begin(), g.end());
    for (const auto& span : p)
      if (gold_set.count(span)) ++tp;
    pred_total += static_cast<long long>(p.size());
    gold_total += static_cast<long long>(g.size());
  }
  PrfScore s;
  s.precision = pred_total == 0 ? 0.0 : static_cast<double>(tp) / pred_total;
  s.recall = gold_total == 0 ? 0.0 : static_cast<double>(tp) / gold_total;
  s.f1 = (s.precision + s.recall) == 0
             ? 0.0
             : 2 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

std::string normalize_answer(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    lowered.push_back(static_cast<char>(std::tolower(u)));
  }
  std::istringstream in(lowered);
  std::string word;
  std::string out;
  while (in >> word) {
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

namespace {
std::vector<std::string> tokens_of(const std::string& normalized) {
  std::istringstream in(normalized);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

double token_f1(const std::vector<std::string>& p, const std::vector<std::string>& g) {
  if (p.empty() || g.empty()) return (p.empty() && g.empty()) ? 1.0 : 0.0;
  std::map<std::string, int> gold_counts;
  for (const auto& w : g) ++gold_counts[w];
  int overlap = 0;
  for (const auto& w : p) {
    auto it = gold_counts.find(w);
    if (it != gold_counts.end() && it->second > 0) {
      ++overlap;
      --it->second;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / p.size();
  const double recall = static_cast<double>(overlap) / g.size();
  return 2 * precision * recall / (precision + recall);
}
}  // namespace

double qa_f1(const std::string& pred, const std::vector<std::string>& golds) {
  const auto p = tokens_of(normalize_answer(pred));
  // Unanswerable convention: empty gold list or all-empty golds.
  bool any_gold = false;
  for (const auto& g : golds)
    if (!normalize_answer(g).empty()) any_gold = true;
  if (!any_gold) return p.empty() ? 1.0 : 0.0;
  if (p.empty()) return 0.0;
  double best = 0.0;
  for (const auto& g : golds)
    best = std::max(best, token_f1(p, tokens_of(normalize_answer(g))));
  return best;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "pearson: length mismatch");
  require(x.size() >= 2, "pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0 && syy > 0, "pearson: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

double accuracy(const std::vector<std::string>& pred,
                const std::vector<std::string>& gold) {
  require(pred.size() == gold.size(), "accuracy: length mismatch");
  require(!pred.empty(), "accuracy: empty input");
  long long hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == gold[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

MicroMacro micro_macro(
    const std::map<std::string, std::map<std::string, double>>& scores) {
  require(!scores.empty(), "micro_macro: empty score structure");
  MicroMacro out;
  double total = 0;
  long long count = 0;
  double task_sum = 0;
  for (const auto& [task, datasets] : scores) {
    require(!datasets.empty(), "micro_macro: task has no datasets: " + task);
    double ds_sum = 0;
    for (const auto& [ds, score] : datasets) {
      total += score;
      ++count;
      ds_sum += score;
    }
    task_sum += ds_sum / static_cast<double>(datasets.size());
  }
  out.micro = total / static_cast<double>(count);
  out.macro = task_sum / static_cast<double>(scores.size());
  return out;
}

SeedStats seed_stats(const std::vector<double>& values) {
  require(!values.empty(), "seed_stats: no values");
  SeedStats s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double acc = 0;
  for (double v : values) acc += (v - s.mean) * (v - s.mean);
  s.stdev = std::sqrt(acc / static_cast<double>(values.size()));
  return s;
}

}  // namespace densekit::evalkit
