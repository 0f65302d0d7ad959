#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace vf {

/// One scored commit: ground truth, predicted probability, changed lines.
struct Scored {
  bool is_fix = false;
  double prob = 0.0;
  std::int64_t changed_loc = 0;
};

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::int64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Predicts fix iff prob >= threshold.
ConfusionCounts confusion(const std::vector<Scored>& scored, double threshold = 0.5);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

/// Ratios with the 0/0 = 0 convention.
Prf prf1(const ConfusionCounts& c);

/// Cost-effectiveness at inspection budget L: walk commits by descending
/// probability (ties: smaller changed_loc, then input order), stop before
/// the commit that would push inspected lines past L, and return the
/// fraction of all fixes inspected.
double cost_effort(const std::vector<Scored>& scored, std::int64_t budget);

struct EvalReport {
  ConfusionCounts counts;
  Prf metrics;
  std::int64_t ce_budget = 0;
  double ce_fraction = 0.0;
  std::int64_t n_fixes = 0;
  std::int64_t n_records = 0;
  std::map<std::string, EvalReport> strata;  // by changed_loc bin
};

/// Full report; strata_edges (ascending) bins records by changed_loc into
/// [0,e1), [e1,e2), ..., [ek,inf). Empty edges means no stratification.
EvalReport evaluate_scored(const std::vector<Scored>& scored, double threshold,
                           std::int64_t ce_budget,
                           const std::vector<std::int64_t>& strata_edges);

nlohmann::json report_to_json(const EvalReport& r);
std::string report_table(const EvalReport& r);

}  // namespace vf
