#include <vf/metrics.hpp>

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace vf {
namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion(const std::vector<Scored>& scored, double threshold) {
  ConfusionCounts c;
  for (const Scored& s : scored) {
    bool predicted = s.prob >= threshold;
    if (predicted && s.is_fix) ++c.tp;
    else if (predicted && !s.is_fix) ++c.fp;
    else if (!predicted && s.is_fix) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Prf prf1(const ConfusionCounts& c) {
  Prf p;
  p.precision = ratio(c.tp, c.tp + c.fp);
  p.recall = ratio(c.tp, c.tp + c.fn);
  double sum = p.precision + p.recall;
  p.f1 = sum == 0.0 ? 0.0 : 2.0 * p.precision * p.recall / sum;
  p.accuracy = ratio(c.tp + c.tn, c.total());
  return p;
}

double cost_effort(const std::vector<Scored>& scored, std::int64_t budget) {
  std::int64_t total_fixes = 0;
  for (const Scored& s : scored)
    if (s.is_fix) ++total_fixes;
  if (total_fixes == 0) return 0.0;

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scored[a].prob != scored[b].prob) return scored[a].prob > scored[b].prob;
    return scored[a].changed_loc < scored[b].changed_loc;
    // remaining ties keep input order via stable_sort
  });

  std::int64_t spent = 0, fixes_inspected = 0;
  for (std::size_t i : order) {
    if (spent + scored[i].changed_loc > budget) break;
    spent += scored[i].changed_loc;
    if (scored[i].is_fix) ++fixes_inspected;
  }
  return static_cast<double>(fixes_inspected) / static_cast<double>(total_fixes);
}

EvalReport evaluate_scored(const std::vector<Scored>& scored, double threshold,
                           std::int64_t ce_budget,
                           const std::vector<std::int64_t>& strata_edges) {
  EvalReport r;
  r.counts = confusion(scored, threshold);
  r.metrics = prf1(r.counts);
  r.ce_budget = ce_budget;
  r.ce_fraction = cost_effort(scored, ce_budget);
  r.n_records = static_cast<std::int64_t>(scored.size());
  for (const Scored& s : scored)
    if (s.is_fix) ++r.n_fixes;

  if (!strata_edges.empty()) {
    std::vector<std::int64_t> lo{0};
    for (std::int64_t e : strata_edges) lo.push_back(e);
    for (std::size_t b = 0; b < lo.size(); ++b) {
      std::int64_t from = lo[b];
      bool last = b + 1 == lo.size();
      std::int64_t to = last ? 0 : lo[b + 1];
      std::vector<Scored> bin;
      for (const Scored& s : scored)
        if (s.changed_loc >= from && (last || s.changed_loc < to)) bin.push_back(s);
      std::string key = last ? "[" + std::to_string(from) + ",inf)"
                             : "[" + std::to_string(from) + "," + std::to_string(to) + ")";
      r.strata.emplace(key, evaluate_scored(bin, threshold, ce_budget, {}));
    }
  }
  return r;
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j = {{"counts",
                       {{"tp", r.counts.tp},
                        {"fp", r.counts.fp},
                        {"fn", r.counts.fn},
                        {"tn", r.counts.tn}}},
                      {"precision", r.metrics.precision},
                      {"recall", r.metrics.recall},
                      {"f1", r.metrics.f1},
                      {"accuracy", r.metrics.accuracy},
                      {"ce_budget", r.ce_budget},
                      {"ce_fraction", r.ce_fraction},
                      {"n_fixes", r.n_fixes},
                      {"n_records", r.n_records}};
  if (!r.strata.empty()) {
    nlohmann::json strata = nlohmann::json::object();
    for (const auto& [key, sub] : r.strata) strata[key] = report_to_json(sub);
    j["strata"] = strata;
  }
  return j;
}

std::string report_table(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "records: " << r.n_records << "  fixes: " << r.n_fixes << "\n";
  os << "tp " << r.counts.tp << "  fp " << r.counts.fp << "  fn " << r.counts.fn
     << "  tn " << r.counts.tn << "\n";
  os << "precision " << r.metrics.precision << "  recall " << r.metrics.recall
     << "  f1 " << r.metrics.f1 << "  accuracy " << r.metrics.accuracy << "\n";
  os << "cost-effectiveness@" << r.ce_budget << ": " << r.ce_fraction << "\n";
  for (const auto& [key, sub] : r.strata) {
    os << "stratum " << key << ": n=" << sub.n_records << " fixes=" << sub.n_fixes
       << " precision=" << sub.metrics.precision << " recall=" << sub.metrics.recall
       << " f1=" << sub.metrics.f1 << " ce=" << sub.ce_fraction << "\n";
  }
  return os.str();
}

}  // namespace vf
