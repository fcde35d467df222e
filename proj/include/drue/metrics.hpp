#pragma once

#include <vector>

namespace drue {

// Probability that a random ood score exceeds a random id score, ties counted
// half. auc(a,b) + auc(b,a) == 1 holds exactly, not just to rounding.
double auc(const std::vector<double>& id_scores,
           const std::vector<double>& ood_scores);

// Step-wise average precision with ood as the positive class and descending
// score order; equal scores collapse into one threshold group. No
// interpolation.
double aupr(const std::vector<double>& id_scores,
            const std::vector<double>& ood_scores);

struct Quartiles {
  double q1;
  double median;
  double q3;
};

// Linear-interpolation quantiles (the common "type 7" convention).
Quartiles quartiles(std::vector<double> values);

struct MeanStd {
  double mean;
  double std;  // population convention (divide by n)
};

MeanStd mean_std(const std::vector<double>& values);

}  // namespace drue
