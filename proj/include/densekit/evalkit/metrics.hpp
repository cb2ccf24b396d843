#pragma once

#include <map>
#include <string>
#include <vector>

#include "densekit/common.hpp"
#include "densekit/evalkit/iob.hpp"

namespace densekit::evalkit {

struct PrfScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Strict span-and-type matching over aligned document pairs; F1 is 0 when
/// both precision and recall are 0.
PrfScore entity_f1(const std::vector<IobDocument>& pred,
                   const std::vector<IobDocument>& gold);

/// SQuAD-style answer normalization: lowercase, strip punctuation and the
/// English articles a/an/the, collapse whitespace.
std::string normalize_answer(const std::string& text);

/// Token-overlap F1 against the best-matching gold answer. Both sides empty
/// (unanswerable predicted unanswerable) scores 1, exactly one empty scores 0.
double qa_f1(const std::string& pred, const std::vector<std::string>& golds);

/// Sample Pearson correlation; rejects length < 2 or zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

double accuracy(const std::vector<std::string>& pred,
                const std::vector<std::string>& gold);

struct MicroMacro {
  double micro = 0;  // unweighted mean over all dataset scores
  double macro = 0;  // mean over tasks of each task's dataset mean
};

/// task -> dataset -> score.
MicroMacro micro_macro(
    const std::map<std::string, std::map<std::string, double>>& scores);

/// Mean and standard deviation over per-seed values (population SD; the
/// single-value case reports SD 0).
struct SeedStats {
  double mean = 0;
  double stdev = 0;
};
SeedStats seed_stats(const std::vector<double>& values);

}  // namespace densekit::evalkit
