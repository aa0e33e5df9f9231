#include "drtr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "drtr/errors.hpp"

namespace drtr {

double accuracy(const Matrix& logits, const std::vector<int>& labels,
                std::span<const NodeId> nodes) {
    if (nodes.empty()) throw InvalidArgumentError("accuracy: empty node set");
    std::size_t correct = 0;
    for (NodeId v : nodes) {
        const auto row = logits.row(v);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = c;
        }
        if (static_cast<int>(best) == labels[v]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double auc_score(std::span<const double> positive, std::span<const double> negative) {
    if (positive.empty() || negative.empty()) {
        throw InvalidArgumentError("auc_score: both score sets must be non-empty");
    }
    // Mann-Whitney U via a merged sort; ties get half credit.
    std::vector<double> neg(negative.begin(), negative.end());
    std::sort(neg.begin(), neg.end());
    double u = 0.0;
    for (double p : positive) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
        const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
        u += static_cast<double>(lo - neg.begin());
        u += 0.5 * static_cast<double>(hi - lo);
    }
    return u / (static_cast<double>(positive.size()) * static_cast<double>(neg.size()));
}

double average_precision(std::span<const double> positive, std::span<const double> negative) {
    if (positive.empty()) throw InvalidArgumentError("average_precision: no positives");
    std::vector<std::pair<double, int>> ranked; // (score, is_positive)
    ranked.reserve(positive.size() + negative.size());
    for (double s : positive) ranked.emplace_back(s, 1);
    for (double s : negative) ranked.emplace_back(s, 0);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second > b.second; // deterministic tie order
    });
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].second) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return ap / static_cast<double>(positive.size());
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InvalidArgumentError("linear_fit: need >= 2 paired samples");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LinearFit fit;
    if (sxx == 0.0) {
        fit.slope = 0.0;
        fit.intercept = my;
        fit.r2 = 0.0;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy == 0.0) {
        fit.r2 = 1.0; // constant target, perfectly reproduced
    } else {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double e = y[i] - (fit.intercept + fit.slope * x[i]);
            ss_res += e * e;
        }
        fit.r2 = 1.0 - ss_res / syy;
    }
    return fit;
}

double mean_of(std::span<const double> xs) {
    if (xs.empty()) throw InvalidArgumentError("mean_of: empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double population_variance(std::span<const double> xs) {
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size());
}

} // namespace drtr
