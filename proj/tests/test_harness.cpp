#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "curveface/harness.hpp"
#include "curveface/synthetic.hpp"

using namespace curveface;
namespace fs = std::filesystem;

namespace {

std::vector<LabeledImage> tiny_data(int classes = 3, int per_class = 6) {
    SyntheticSpec s;
    s.classes = classes;
    s.per_class = per_class;
    s.width = s.height = 32;
    s.seed = 11;
    return make_synthetic_dataset(s);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Split, FirstKTakesLeadingImages) {
    const auto data = tiny_data(3, 10);
    const auto s = split(data, {5, SplitMode::first_k, 0});
    ASSERT_EQ(s.train.size(), 15u);
    ASSERT_EQ(s.test.size(), 15u);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 5; ++i) {
            EXPECT_EQ(s.train[c * 5 + i].image, data[c * 10 + i].image);
            EXPECT_EQ(s.test[c * 5 + i].image, data[c * 10 + 5 + i].image);
        }
}

TEST(Split, SeededIsDeterministicAndPartitions) {
    const auto data = tiny_data(3, 10);
    const SplitPolicy p{4, SplitMode::seeded_random, 99};
    const auto a = split(data, p), b = split(data, p);
    ASSERT_EQ(a.train.size(), b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].image, b.train[i].image);
    // Disjoint and covering: every source image appears exactly once.
    std::multiset<std::vector<double>> all, parts;
    for (const auto& d : data) all.insert(d.image.pixels);
    for (const auto& d : a.train) parts.insert(d.image.pixels);
    for (const auto& d : a.test) parts.insert(d.image.pixels);
    EXPECT_EQ(all, parts);
    std::map<Label, int> per;
    for (const auto& d : a.train) ++per[d.label];
    for (const auto& [_, n] : per) EXPECT_EQ(n, 4);
    const auto other = split(data, {4, SplitMode::seeded_random, 100});
    bool differs = false;
    for (std::size_t i = 0; i < a.train.size(); ++i) differs |= !(a.train[i].image == other.train[i].image);
    EXPECT_TRUE(differs);
}

TEST(Split, Errors) {
    const auto data = tiny_data(2, 4);
    EXPECT_THROW(split(data, {4, SplitMode::first_k, 0}), ArgumentError);
    EXPECT_THROW(split(data, {0, SplitMode::first_k, 0}), ArgumentError);
}

TEST(Experiment, ReportInvariants) {
    const auto data = tiny_data(3, 6);
    const auto r = run_experiment(data, "synthetic", {5, SplitMode::first_k, 0}, EnsembleConfig{});
    EXPECT_EQ(r.test_count, 3);  // (6 - 5) * 3
    int cells = 0;
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
        int row = 0;
        for (int v : r.confusion[c]) row += v;
        cells += row;
        EXPECT_LE(row, r.class_totals[c]);
    }
    EXPECT_EQ(cells + r.rejections, r.test_count);
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(r.accuracy, static_cast<double>(r.correct) / r.test_count);
    EXPECT_EQ(r.config_hash.size(), 16u);
}

TEST(Experiment, ResubstitutionIsExact) {
    const auto data = tiny_data(3, 6);
    Split s{data, data};
    const auto r = evaluate_split(s, "synthetic", {}, EnsembleConfig{});
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.rejections, 0);
}

TEST(Experiment, DeterministicAcrossRuns) {
    const auto data = tiny_data(3, 8);
    const SplitPolicy p{4, SplitMode::seeded_random, 7};
    const auto a = run_experiment(data, "synthetic", p, EnsembleConfig{});
    const auto b = run_experiment(data, "synthetic", p, EnsembleConfig{});
    EXPECT_TRUE(a.same_outcome(b));
}

TEST(Experiment, MultiSeedAggregation) {
    const auto data = tiny_data(3, 6);
    EnsembleConfig cfg;
    cfg.scales = {2, 3};
    const auto s = run_seeds(data, "synthetic", {3, SplitMode::first_k, 0}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, cfg);
    ASSERT_EQ(s.reports.size(), 10u);
    double mean = 0.0;
    for (const auto& r : s.reports) mean += r.accuracy;
    EXPECT_NEAR(s.mean, mean / 10.0, 1e-15);
    EXPECT_GE(s.stddev, 0.0);
    EXPECT_EQ(s.reports[3].split.seed, 4u);
    EXPECT_NE(s.reports[0].config_hash, s.reports[1].config_hash);
}

TEST(Experiment, ConfigHashTracksConfig) {
    EnsembleConfig a, b;
    b.pca_k = 50;
    EXPECT_EQ(fnv1a_hex(config_echo(a, {}, "x")), fnv1a_hex(config_echo(a, {}, "x")));
    EXPECT_NE(fnv1a_hex(config_echo(a, {}, "x")), fnv1a_hex(config_echo(b, {}, "x")));
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Report, ExportIsByteStable) {
    const auto data = tiny_data(3, 6);
    const auto r = run_experiment(data, "synthetic", {5, SplitMode::first_k, 0}, EnsembleConfig{});
    TempDir dir("curveface_report_test");
    for (auto fmt : {ReportFormat::csv, ReportFormat::json_lines}) {
        export_report(r, dir.path / "a", fmt);
        export_report(r, dir.path / "b", fmt);
        EXPECT_EQ(slurp(dir.path / "a"), slurp(dir.path / "b"));
    }
    export_report({r, r}, dir.path / "multi.csv", ReportFormat::csv);
    const auto csv = slurp(dir.path / "multi.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_EQ(csv.rfind("config_hash,dataset,train_count,pca_k,classifier,scale_set,", 0), 0u);
    export_report(r, dir.path / "r.jsonl", ReportFormat::json_lines);
    const auto j = nlohmann::json::parse(slurp(dir.path / "r.jsonl"));
    EXPECT_EQ(j["test_count"], 3);
    EXPECT_EQ(j["config_hash"], r.config_hash);
    EXPECT_THROW(export_report(r, dir.path / "missing" / "x.csv", ReportFormat::csv), IoError);
}

TEST(Dataset, LoadsSortedSubjects) {
    TempDir dir("curveface_dataset_test");
    for (const char* subject : {"s2", "s1", "s10"}) {
        fs::create_directories(dir.path / subject);
        for (int i = 0; i < 3; ++i)
            write_pgm(Image::filled(8, 6, 10.0 * i + subject[1]), dir.path / subject / (std::to_string(i) + ".pgm"));
        std::ofstream(dir.path / subject / "notes.txt") << "not an image";
    }
    const auto data = load_dataset({dir.path, 15, 3, "custom"});
    ASSERT_EQ(data.size(), 9u);
    EXPECT_EQ(data[0].label, "s1");
    EXPECT_EQ(data[3].label, "s10");
    EXPECT_EQ(data[6].label, "s2");
    EXPECT_EQ(data[1].image.pixels[0], 10.0 + '1');

    const auto limited = load_dataset({dir.path, 2, 0, "custom"});
    EXPECT_EQ(limited.size(), 6u);

    fs::create_directories(dir.path / "s3");
    EXPECT_THROW(load_dataset({dir.path, 15, 0, "custom"}), DatasetError);
    EXPECT_THROW(load_dataset({dir.path / "nope", 15, 0, "custom"}), IoError);
    EXPECT_THROW(load_dataset({dir.path, 1, 0, "custom"}), ArgumentError);
    TempDir empty("curveface_dataset_empty");
    EXPECT_THROW(load_dataset({empty.path, 15, 0, "custom"}), DatasetError);
}

TEST(Synthetic, ShapeAndRange) {
    const auto data = make_synthetic_dataset({});
    ASSERT_EQ(data.size(), 200u);
    std::set<Label> labels;
    for (const auto& d : data) {
        labels.insert(d.label);
        EXPECT_EQ(d.image.width, 64);
        for (double v : d.image.pixels) {
            EXPECT_EQ(v, std::round(v));
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 255.0);
        }
    }
    EXPECT_EQ(labels.size(), 10u);
    EXPECT_EQ(make_synthetic_dataset({})[17].image, data[17].image);
}

TEST(Bench, RatioIsPositive) {
    const auto b = bench_fft(64, 64, 3);
    EXPECT_GT(b.fft_ms, 0.0);
    EXPECT_GT(b.ratio(), 1.0);
}
