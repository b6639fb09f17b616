#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "curveface/error.hpp"

namespace curveface {

/// Class identifier (subject name for face datasets).
using Label = std::string;

/// Training points with parallel labels.
struct LabeledSet {
    std::vector<std::vector<double>> points;
    std::vector<Label> labels;

    std::size_t size() const { return points.size(); }
    std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }

    void validate() const {
        if (points.empty()) throw ArgumentError("labeled set is empty");
        if (points.size() != labels.size())
            throw DimensionError("labeled set: point and label counts differ");
        for (const auto& p : points)
            if (p.size() != dim()) throw DimensionError("labeled set: points have unequal lengths");
    }

    std::vector<Label> classes() const {
        std::vector<Label> c = labels;
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        return c;
    }
};

struct EuclideanMetric {};

/// Gaussian kernel recast as a dissimilarity: 1 - exp(-|x-y|^2 / (2 sigma^2)).
struct GaussianMetric {
    double sigma = 1.0;
};

using Metric = std::variant<EuclideanMetric, GaussianMetric>;

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw DimensionError("distance: lengths " + std::to_string(x.size()) + " and " +
                             std::to_string(y.size()) + " differ");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

namespace detail {
inline double metric_from_squared(const Metric& metric, double d2) {
    if (const auto* g = std::get_if<GaussianMetric>(&metric))
        return -std::expm1(-d2 / (2.0 * g->sigma * g->sigma));
    return std::sqrt(d2);
}

// Strictly increasing function of the metric value that does not saturate.
// 1 - exp(-u) rounds to 1 for u beyond ~37, so Gaussian neighbours are
// ranked by the exponent u itself.
inline double rank_key(const Metric& metric, double d2) {
    if (const auto* g = std::get_if<GaussianMetric>(&metric)) return d2 / (2.0 * g->sigma * g->sigma);
    return d2;
}
}  // namespace detail

inline double knn_distance(const Metric& metric, std::span<const double> x, std::span<const double> y) {
    return detail::metric_from_squared(metric, squared_distance(x, y));
}

/// Median of all pairwise Euclidean distances; 1 when every pair coincides.
inline double median_pairwise_distance(const std::vector<std::vector<double>>& points) {
    std::vector<double> d;
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            d.push_back(std::sqrt(squared_distance(points[i], points[j])));
    if (d.empty()) return 1.0;
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    double m = *mid;
    if (d.size() % 2 == 0) m = 0.5 * (m + *std::max_element(d.begin(), mid));
    return m > 0.0 ? m : 1.0;
}

/// Brute-force k-nearest-neighbour classifier.
///
/// Neighbours are ranked by (metric value, training index). The k nearest
/// vote; a tie in vote count goes to the label whose neighbours have the
/// smallest summed Euclidean distance, then to the label holding the
/// lowest training index. Both metrics are monotone in Euclidean distance,
/// so they yield the same predictions.
class KnnClassifier {
public:
    KnnClassifier(LabeledSet data, int k, Metric metric = EuclideanMetric{})
        : data_(std::move(data)), k_(k), metric_(metric) {
        data_.validate();
        if (k_ < 1 || static_cast<std::size_t>(k_) > data_.size())
            throw ArgumentError("knn: k=" + std::to_string(k_) + " outside [1, " +
                                std::to_string(data_.size()) + "]");
        if (const auto* g = std::get_if<GaussianMetric>(&metric_); g && !(g->sigma > 0.0))
            throw ArgumentError("knn: gaussian sigma must be positive");
    }

    /// Gaussian metric with sigma set to the median pairwise training distance.
    static KnnClassifier with_default_gaussian(LabeledSet data, int k) {
        const double sigma = median_pairwise_distance(data.points);
        return KnnClassifier(std::move(data), k, GaussianMetric{sigma});
    }

    const LabeledSet& data() const { return data_; }
    int k() const { return k_; }
    const Metric& metric() const { return metric_; }

    Label predict(std::span<const double> query) const {
        if (query.size() != data_.dim())
            throw DimensionError("knn_predict: query length " + std::to_string(query.size()) +
                                 " != training dimension " + std::to_string(data_.dim()));
        const std::size_t n = data_.size();
        std::vector<double> d2(n), score(n);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = squared_distance(query, data_.points[i]);
            score[i] = detail::rank_key(metric_, d2[i]);
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        const auto closer = [&](std::size_t a, std::size_t b) {
            return score[a] < score[b] || (score[a] == score[b] && a < b);
        };
        if (k_ == 1) return data_.labels[*std::min_element(order.begin(), order.end(), closer)];
        std::partial_sort(order.begin(), order.begin() + k_, order.end(), closer);

        struct Tally {
            int votes = 0;
            double distance = 0.0;
            std::size_t first_index = 0;
        };
        std::map<Label, Tally> tally;
        for (int r = 0; r < k_; ++r) {
            const std::size_t i = order[static_cast<std::size_t>(r)];
            auto [it, fresh] = tally.try_emplace(data_.labels[i]);
            if (fresh) it->second.first_index = i;
            it->second.votes += 1;
            it->second.distance += std::sqrt(d2[i]);
            it->second.first_index = std::min(it->second.first_index, i);
        }
        auto best = tally.begin();
        for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
            const Tally& a = it->second;
            const Tally& b = best->second;
            if (a.votes != b.votes) {
                if (a.votes > b.votes) best = it;
            } else if (a.distance != b.distance) {
                if (a.distance < b.distance) best = it;
            } else if (a.first_index < b.first_index) {
                best = it;
            }
        }
        return best->first;
    }

private:
    LabeledSet data_;
    int k_;
    Metric metric_;
};

inline Label knn_predict(const KnnClassifier& c, std::span<const double> query) {
    return c.predict(query);
}

}  // namespace curveface
