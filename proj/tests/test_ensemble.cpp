#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>
#include <vector>

#include "curveface/ensemble.hpp"
#include "curveface/synthetic.hpp"

using namespace curveface;

namespace {

using Votes = std::vector<std::pair<int, Label>>;

std::vector<LabeledImage> small_dataset(int classes, int per_class, int size = 32, std::uint64_t seed = 4) {
    SyntheticSpec s;
    s.classes = classes;
    s.per_class = per_class;
    s.width = s.height = size;
    s.seed = seed;
    return make_synthetic_dataset(s);
}

}  // namespace

TEST(MajorityVote, Unanimity) {
    const auto p = majority_vote({{1, "A"}, {2, "A"}, {3, "A"}, {4, "A"}}, 3);
    EXPECT_EQ(p.label, "A");
    EXPECT_EQ(p.counts.at("A"), 4);
}

TEST(MajorityVote, Plurality) {
    EXPECT_EQ(majority_vote({{1, "A"}, {2, "A"}, {3, "B"}, {4, "C"}}, 3).label, "A");
}

TEST(MajorityVote, TieBrokenByScaleThree) {
    EXPECT_EQ(majority_vote({{1, "A"}, {2, "A"}, {3, "B"}, {4, "B"}}, 3).label, "B");
    EXPECT_EQ(majority_vote({{1, "B"}, {2, "A"}, {3, "A"}, {4, "B"}}, 3).label, "A");
}

TEST(MajorityVote, UnresolvedTieIsRejected) {
    EXPECT_EQ(majority_vote({{1, "A"}, {2, "B"}, {3, "C"}, {4, "D"}}, 3).label, "C");
    // Scale 3 votes for a label outside the tied set.
    EXPECT_TRUE(majority_vote({{1, "A"}, {2, "A"}, {3, "C"}, {4, "B"}, {5, "B"}}, 3).rejected());
    EXPECT_TRUE(majority_vote({{1, "A"}, {2, "A"}, {4, "B"}, {5, "B"}}, 3).rejected());     // no scale-3 voter
    EXPECT_TRUE(majority_vote({{1, "A"}, {2, "B"}}, -1).rejected());
}

TEST(MajorityVote, SingleVoterNeverRejects) {
    for (const char* l : {"x", "y"}) EXPECT_EQ(majority_vote({{2, l}}, 3).label, l);
}

TEST(MajorityVote, RandomProperties) {
    std::mt19937 rng(31);
    std::uniform_int_distribution<int> nv(1, 6), lab(0, 3);
    for (int trial = 0; trial < 2000; ++trial) {
        Votes v;
        const int n = nv(rng);
        for (int i = 0; i < n; ++i) v.emplace_back(i + 1, std::string(1, static_cast<char>('A' + lab(rng))));
        const auto p = majority_vote(v, 3);
        int total = 0;
        for (const auto& [_, c] : p.counts) total += c;
        EXPECT_EQ(total, n);
        if (p.rejected()) {
            EXPECT_GE(n, 2);
            continue;
        }
        const int win = p.counts.at(*p.label);
        for (const auto& [l, c] : p.counts) EXPECT_LE(c, win);
        // Dropping a voter that agreed with a strict winner leaves the winner in place.
        bool strict = true;
        for (const auto& [l, c] : p.counts)
            if (l != *p.label && c == win) strict = false;
        if (!strict || win < 2) continue;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i].second != *p.label) continue;
            Votes fewer = v;
            fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
            const auto q = majority_vote(fewer, 3);
            int second = 0;
            for (const auto& [l, c] : p.counts)
                if (l != *p.label) second = std::max(second, c);
            if (win - 1 > second) {
                EXPECT_EQ(q.label, p.label);
            }
        }
    }
}

TEST(Ensemble, StructureOfSmallModel) {
    const auto data = small_dataset(2, 3);
    EnsembleConfig cfg;
    cfg.scales = {2, 3};
    const auto model = ensemble_train(data, cfg);
    ASSERT_EQ(model.voters().size(), 2u);
    EXPECT_EQ(model.voters()[0].key, 2);
    EXPECT_EQ(model.voters()[1].key, 3);
    for (const auto& v : model.voters()) {
        EXPECT_LE(v.pca.k(), 6);
        EXPECT_EQ(v.pca.requested_k(), 6);
    }
    EXPECT_EQ(model.classes(), (std::vector<Label>{"s00", "s01"}));
}

TEST(Ensemble, ResubstitutionIsPerfect) {
    const auto data = small_dataset(4, 5);
    const auto model = ensemble_train(data, EnsembleConfig{});
    for (const auto& d : data) {
        const auto p = ensemble_predict(model, d.image);
        EXPECT_EQ(p.label, d.label);
        for (const auto& [_, l] : p.votes) EXPECT_EQ(l, d.label);
    }
}

TEST(Ensemble, OneTransformPerImage) {
    const auto data = small_dataset(3, 4);
    const auto before_train = fdct::forward_transform_count().load();
    const auto model = ensemble_train(data, EnsembleConfig{});
    EXPECT_EQ(fdct::forward_transform_count().load() - before_train, data.size());
    const auto before = fdct::forward_transform_count().load();
    (void)ensemble_predict(model, data[0].image);
    EXPECT_EQ(fdct::forward_transform_count().load() - before, 1u);
}

TEST(Ensemble, QuantizedModeUsesThreeBitDepthVoters) {
    const auto data = small_dataset(3, 4);
    EnsembleConfig cfg;
    cfg.mode = EnsembleMode::quantized;
    const auto model = ensemble_train(data, cfg);
    ASSERT_EQ(model.voters().size(), 3u);
    EXPECT_EQ(model.voters()[0].key, 8);
    EXPECT_EQ(model.voters()[1].key, 4);
    EXPECT_EQ(model.voters()[2].key, 2);
    EXPECT_EQ(model.tie_break_key(), -1);
    const auto before = fdct::forward_transform_count().load();
    const auto p = ensemble_predict(model, data[5].image);
    EXPECT_EQ(fdct::forward_transform_count().load() - before, 3u);
    EXPECT_EQ(p.votes.size(), 3u);
}

TEST(Ensemble, DeterministicPrediction) {
    const auto data = small_dataset(3, 4);
    const auto m1 = ensemble_train(data, EnsembleConfig{});
    const auto m2 = ensemble_train(data, EnsembleConfig{});
    auto probe = data[1].image;
    probe.pixels[10] = 255.0 - probe.pixels[10];
    const auto a = ensemble_predict(m1, probe), b = ensemble_predict(m2, probe), c = ensemble_predict(m1, probe);
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.votes, b.votes);
    EXPECT_EQ(a.votes, c.votes);
}

TEST(Ensemble, SvmVoters) {
    const auto data = small_dataset(3, 6);
    EnsembleConfig cfg;
    cfg.classifier = ClassifierKind::svm;
    cfg.scales = {2, 3};
    const auto model = ensemble_train(data, cfg);
    int correct = 0;
    for (const auto& d : data) correct += ensemble_predict(model, d.image).label == d.label;
    EXPECT_EQ(correct, static_cast<int>(data.size()));
}

TEST(Ensemble, Errors) {
    auto data = small_dataset(2, 3);
    EXPECT_THROW(ensemble_train({}, EnsembleConfig{}), ArgumentError);
    EXPECT_THROW(ensemble_train(data, EnsembleConfig{}, {"s00", "s01", "ghost"}), ArgumentError);
    EnsembleConfig bad;
    bad.scales = {0, 2};
    EXPECT_THROW(ensemble_train(data, bad), ArgumentError);
    bad.scales = {2, 2};
    EXPECT_THROW(ensemble_train(data, bad), ArgumentError);
    bad = EnsembleConfig{};
    bad.num_scales = 2;
    bad.scales = {1, 2};
    EXPECT_THROW(ensemble_train(data, bad), ArgumentError);

    const auto model = ensemble_train(data, EnsembleConfig{});
    EXPECT_THROW(ensemble_predict(model, Image::filled(34, 32, 0.0)), DimensionError);
    data[1].image = Image::filled(34, 32, 7.0);
    EXPECT_THROW(ensemble_train(data, EnsembleConfig{}), DimensionError);
}

TEST(Ensemble, BundleRoundTrip) {
    const auto data = small_dataset(3, 4);
    for (auto kind : {ClassifierKind::knn, ClassifierKind::svm}) {
        EnsembleConfig cfg;
        cfg.classifier = kind;
        cfg.gaussian_metric = kind == ClassifierKind::knn;
        const auto model = ensemble_train(data, cfg);
        std::stringstream first;
        write_ensemble(model, first);
        const auto loaded = read_ensemble(first);
        std::stringstream second;
        write_ensemble(loaded, second);
        EXPECT_EQ(first.str(), second.str());
        for (const auto& d : data) EXPECT_EQ(ensemble_predict(loaded, d.image).votes, ensemble_predict(model, d.image).votes);
    }
    const auto path = std::filesystem::temp_directory_path() / "curveface_bundle_test.cfen";
    const auto model = ensemble_train(data, EnsembleConfig{});
    save_ensemble(model, path);
    EXPECT_EQ(load_ensemble(path).voters().size(), 4u);
    std::filesystem::remove(path);
    std::stringstream junk("XXXXjunk");
    EXPECT_THROW(read_ensemble(junk), FormatError);
}
