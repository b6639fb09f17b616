#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <tuple>
#include <vector>

#include "curveface/knn.hpp"

using namespace curveface;

namespace {

// Exhaustive oracle: sort every (distance, index) pair, vote among the
// first k, settle vote ties by summed distance and then by lowest index.
Label oracle_predict(const LabeledSet& s, const std::vector<double>& q, int k) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double acc = 0.0;
        for (std::size_t d = 0; d < q.size(); ++d) acc += (q[d] - s.points[i][d]) * (q[d] - s.points[i][d]);
        all.emplace_back(std::sqrt(acc), i);
    }
    std::sort(all.begin(), all.end());
    std::map<Label, std::tuple<int, double, std::size_t>> votes;
    for (int r = 0; r < k; ++r) {
        const auto [dist, idx] = all[r];
        auto& [count, sum, first] = votes.try_emplace(s.labels[idx], 0, 0.0, idx).first->second;
        ++count;
        sum += dist;
        first = std::min(first, idx);
    }
    const auto better = [](const auto& a, const auto& b) {
        const auto& [ca, sa, fa] = a.second;
        const auto& [cb, sb, fb] = b.second;
        if (ca != cb) return ca > cb;
        if (sa != sb) return sa < sb;
        return fa < fb;
    };
    return std::min_element(votes.begin(), votes.end(), better)->first;
}

LabeledSet random_set(std::mt19937& rng, int n, int d, int classes) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> lab(0, classes - 1);
    LabeledSet s;
    for (int i = 0; i < n; ++i) {
        std::vector<double> p(d);
        for (auto& v : p) v = u(rng);
        s.points.push_back(std::move(p));
        s.labels.push_back("c" + std::to_string(lab(rng)));
    }
    return s;
}

LabeledSet tiny_set() {
    return {{{0, 0}, {10, 0}, {0, 10}}, {"A", "B", "B"}};
}

}  // namespace

TEST(KnnDistance, Basics) {
    const std::vector<double> x{3, 0}, y{0, 4};
    EXPECT_DOUBLE_EQ(knn_distance(EuclideanMetric{}, x, y), 5.0);
    EXPECT_EQ(knn_distance(EuclideanMetric{}, x, x), 0.0);
    EXPECT_EQ(knn_distance(GaussianMetric{2.0}, x, x), 0.0);
    EXPECT_NEAR(knn_distance(GaussianMetric{5.0}, x, y), 1.0 - std::exp(-25.0 / 50.0), 1e-15);
    EXPECT_THROW(knn_distance(EuclideanMetric{}, x, std::vector<double>{1.0}), DimensionError);
}

TEST(KnnDistance, GaussianIsMonotoneInEuclidean) {
    // Sorting by Euclidean distance leaves the Gaussian dissimilarity
    // non-decreasing (far points may saturate to equal values).
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = random_set(rng, 30, 4, 3);
        const std::vector<double> q = s.points.back();
        s.points.pop_back();
        std::sort(s.points.begin(), s.points.end(), [&](const auto& a, const auto& b) {
            return knn_distance(EuclideanMetric{}, q, a) < knn_distance(EuclideanMetric{}, q, b);
        });
        for (double sigma : {0.3, 1.0, 4.0})
            for (std::size_t i = 1; i < s.points.size(); ++i)
                EXPECT_LE(knn_distance(GaussianMetric{sigma}, q, s.points[i - 1]),
                          knn_distance(GaussianMetric{sigma}, q, s.points[i]));
    }
}

TEST(KnnPredict, GaussianMatchesEuclideanForEverySigma) {
    std::mt19937 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = random_set(rng, 30, 4, 3);
        const auto q = random_set(rng, 1, 4, 1).points[0];
        for (int k : {1, 3, 5})
            for (double sigma : {0.05, 0.3, 1.0, 40.0})
                EXPECT_EQ(KnnClassifier(s, k, GaussianMetric{sigma}).predict(q), KnnClassifier(s, k).predict(q));
    }
}

TEST(KnnPredict, TinyExamples) {
    const KnnClassifier one(tiny_set(), 1);
    EXPECT_EQ(one.predict(std::vector<double>{1, 0}), "A");
    EXPECT_EQ(one.predict(std::vector<double>{10, 0}), "B");
    const KnnClassifier three(tiny_set(), 3);
    EXPECT_EQ(three.predict(std::vector<double>{4, 4}), "B");
}

TEST(KnnPredict, EqualDistanceGoesToLowestIndex) {
    const LabeledSet s{{{1, 0}, {-1, 0}}, {"right", "left"}};
    EXPECT_EQ(KnnClassifier(s, 1).predict(std::vector<double>{0, 0}), "right");
}

TEST(KnnPredict, VoteTieUsesSummedDistance) {
    // Two votes each for X and Y; Y's neighbours are closer in total.
    const LabeledSet s{{{1.0}, {-1.1}, {1.2}, {-1.25}, {50.0}}, {"Y", "X", "Y", "X", "Z"}};
    EXPECT_EQ(KnnClassifier(s, 4).predict(std::vector<double>{0.0}), "Y");
}

TEST(KnnPredict, Errors) {
    EXPECT_THROW(KnnClassifier(tiny_set(), 4), ArgumentError);
    EXPECT_THROW(KnnClassifier(tiny_set(), 0), ArgumentError);
    EXPECT_THROW(KnnClassifier(tiny_set(), 1, GaussianMetric{0.0}), ArgumentError);
    EXPECT_THROW(KnnClassifier(tiny_set(), 1).predict(std::vector<double>{1.0}), DimensionError);
    EXPECT_THROW(KnnClassifier(LabeledSet{}, 1), ArgumentError);
}

TEST(KnnPredict, MatchesOracleOnRandomInstances) {
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> dim(1, 16), count(5, 50), classes(2, 5);
    const int ks[] = {1, 3, 5};
    for (int trial = 0; trial < 300; ++trial) {
        auto s = random_set(rng, count(rng), dim(rng), classes(rng));
        const int k = ks[trial % 3];
        const std::vector<double> q = random_set(rng, 1, static_cast<int>(s.dim()), 1).points[0];
        const KnnClassifier eu(s, k);
        const auto gauss = KnnClassifier::with_default_gaussian(s, k);
        const Label expect = oracle_predict(s, q, k);
        EXPECT_EQ(eu.predict(q), expect);
        EXPECT_EQ(gauss.predict(q), expect);
    }
}

TEST(KnnPredict, PermutationInvariantForDistinctDistances) {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_set(rng, 20, 3, 3);
        const auto q = random_set(rng, 1, 3, 1).points[0];
        LabeledSet shuffled = s;
        std::vector<std::size_t> perm(s.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < perm.size(); ++i) {
            shuffled.points[i] = s.points[perm[i]];
            shuffled.labels[i] = s.labels[perm[i]];
        }
        for (int k : {1, 3}) EXPECT_EQ(KnnClassifier(s, k).predict(q), KnnClassifier(shuffled, k).predict(q));
    }
}

TEST(KnnPredict, UniformScalingInvariant) {
    std::mt19937 rng(91);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_set(rng, 25, 5, 4);
        auto q = random_set(rng, 1, 5, 1).points[0];
        LabeledSet scaled = s;
        for (auto& p : scaled.points)
            for (auto& v : p) v *= 8.0;
        auto qs = q;
        for (auto& v : qs) v *= 8.0;
        EXPECT_EQ(KnnClassifier(s, 1).predict(q), KnnClassifier(scaled, 1).predict(qs));
    }
}

TEST(KnnSigma, MedianPairwiseDistance) {
    EXPECT_DOUBLE_EQ(median_pairwise_distance({{0.0}, {1.0}, {3.0}}), 2.0);  // {1, 3, 2}
    EXPECT_DOUBLE_EQ(median_pairwise_distance({{0.0}, {1.0}, {3.0}, {7.0}}), 3.5);  // {1,2,3,4,6,7}
    EXPECT_DOUBLE_EQ(median_pairwise_distance({{2.0}, {2.0}}), 1.0);
}
