#pragma once

#include <span>
#include <vector>

#include "drtr/graph_store.hpp"
#include "drtr/matrix.hpp"

namespace drtr {

// Fraction of `nodes` whose argmax logit (lowest index on ties) matches the
// label.
double accuracy(const Matrix& logits, const std::vector<int>& labels,
                std::span<const NodeId> nodes);

// Area under the ROC curve for positive vs negative scores; ties contribute
// half. Rank-statistic form, no thresholds.
double auc_score(std::span<const double> positive, std::span<const double> negative);

// Average precision over the ranking induced by descending score.
double average_precision(std::span<const double> positive, std::span<const double> negative);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Least-squares line y = intercept + slope * x with coefficient of
// determination.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double mean_of(std::span<const double> xs);
double population_variance(std::span<const double> xs);

} // namespace drtr
