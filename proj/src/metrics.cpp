#include "drue/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "drue/errors.hpp"

namespace drue {

namespace {

void check_nonempty(const std::vector<double>& id_scores,
                    const std::vector<double>& ood_scores, const char* who) {
  if (id_scores.empty() || ood_scores.empty())
    throw ContractViolation(std::string(who) + ": empty score list");
  for (double v : id_scores)
    if (!std::isfinite(v))
      throw ContractViolation(std::string(who) + ": non-finite score");
  for (double v : ood_scores)
    if (!std::isfinite(v))
      throw ContractViolation(std::string(who) + ": non-finite score");
}

}  // namespace

double auc(const std::vector<double>& id_scores,
           const std::vector<double>& ood_scores) {
  check_nonempty(id_scores, ood_scores, "auc");
  std::vector<double> sorted_id = id_scores;
  std::sort(sorted_id.begin(), sorted_id.end());

  // wins and ties stay integers, so u is exact in double; picking the smaller
  // of u and nm-u for the division makes auc(a,b) + auc(b,a) land on 1.0
  // exactly.
  double u = 0.0;
  for (double s : ood_scores) {
    const auto lo = std::lower_bound(sorted_id.begin(), sorted_id.end(), s);
    const auto hi = std::upper_bound(lo, sorted_id.end(), s);
    const double wins = static_cast<double>(lo - sorted_id.begin());
    const double ties = static_cast<double>(hi - lo);
    u += wins + 0.5 * ties;
  }
  const double nm = static_cast<double>(id_scores.size()) *
                    static_cast<double>(ood_scores.size());
  if (2.0 * u <= nm) return u / nm;
  return 1.0 - (nm - u) / nm;
}

double aupr(const std::vector<double>& id_scores,
            const std::vector<double>& ood_scores) {
  check_nonempty(id_scores, ood_scores, "aupr");

  std::vector<std::pair<double, int>> all;
  all.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) all.emplace_back(s, 0);
  for (double s : ood_scores) all.emplace_back(s, 1);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  const double positives = static_cast<double>(ood_scores.size());
  double tp = 0.0, fp = 0.0, ap = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    double dtp = 0.0, dfp = 0.0;
    while (j < all.size() && all[j].first == all[i].first) {
      (all[j].second ? dtp : dfp) += 1.0;
      ++j;
    }
    tp += dtp;
    fp += dfp;
    if (dtp > 0.0) ap += dtp * (tp / (tp + fp));
    i = j;
  }
  return ap / positives;
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw ContractViolation("quartiles: empty input");
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
  };
  return Quartiles{at(0.25), at(0.5), at(0.75)};
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw ContractViolation("mean_std: empty input");
  double m = 0.0;
  for (double v : values) m += v;
  m /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return MeanStd{m, std::sqrt(acc / static_cast<double>(values.size()))};
}

}  // namespace drue
