#pragma once

// Experiment plumbing: dataset directories, train/test splits, evaluation
// reports and their CSV / JSON-lines export.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "curveface/ensemble.hpp"
#include "curveface/error.hpp"
#include "curveface/image_io.hpp"
#include "curveface/imaging.hpp"

namespace curveface {

struct DatasetSpec {
    std::filesystem::path root;
    int subject_limit = 15;
    int images_per_subject = 0;  // 0: no expectation checked
    std::string tag = "custom";  // orl | grimace | gatech | custom | synthetic
};

/// One subdirectory per subject, both levels sorted lexicographically.
/// Unreadable files are skipped; a subject left with no images is an error.
inline std::vector<LabeledImage> load_dataset(const DatasetSpec& spec) {
    namespace fs = std::filesystem;
    if (spec.subject_limit < 2) throw ArgumentError("subject limit must be >= 2");
    if (!fs::is_directory(spec.root)) throw IoError("dataset root not found: " + spec.root.string());

    std::vector<fs::path> subjects;
    for (const auto& e : fs::directory_iterator(spec.root))
        if (e.is_directory() && e.path().filename().string().front() != '.') subjects.push_back(e.path());
    std::sort(subjects.begin(), subjects.end());
    if (subjects.empty()) throw DatasetError("no subject directories under " + spec.root.string());
    if (subjects.size() > static_cast<std::size_t>(spec.subject_limit)) subjects.resize(static_cast<std::size_t>(spec.subject_limit));

    std::vector<LabeledImage> out;
    for (const auto& dir : subjects) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().filename().string().front() != '.') files.push_back(e.path());
        std::sort(files.begin(), files.end());
        const std::string label = dir.filename().string();
        int count = 0;
        for (const auto& f : files) {
            try {
                out.push_back({canonicalize(load_image(f)), label});
                ++count;
            } catch (const FormatError&) {
            } catch (const IoError&) {
            }
        }
        if (count == 0) throw DatasetError("subject '" + label + "' has no readable images");
        if (spec.images_per_subject > 0 && count != spec.images_per_subject)
            throw DatasetError("subject '" + label + "' has " + std::to_string(count) + " images, expected " +
                               std::to_string(spec.images_per_subject));
    }
    return out;
}

enum class SplitMode { first_k, seeded_random };

struct SplitPolicy {
    int train_count = 5;
    SplitMode mode = SplitMode::first_k;
    std::uint64_t seed = 1;
};

struct Split {
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> test;
};

/// Per subject (in order of first appearance) the first `train_count` images,
/// after a seeded shuffle in random mode, go to train; the rest to test.
inline Split split(const std::vector<LabeledImage>& data, const SplitPolicy& policy) {
    if (policy.train_count < 1) throw ArgumentError("train_count must be >= 1");
    std::vector<Label> order;
    std::map<Label, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto [it, fresh] = groups.try_emplace(data[i].label);
        if (fresh) order.push_back(data[i].label);
        it->second.push_back(i);
    }
    std::mt19937_64 rng(policy.seed);
    Split s;
    for (const auto& label : order) {
        auto idx = groups[label];
        if (idx.size() <= static_cast<std::size_t>(policy.train_count))
            throw ArgumentError("subject '" + label + "' has " + std::to_string(idx.size()) +
                                " images; train_count " + std::to_string(policy.train_count) + " leaves none for testing");
        if (policy.mode == SplitMode::seeded_random) std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t r = 0; r < idx.size(); ++r)
            (r < static_cast<std::size_t>(policy.train_count) ? s.train : s.test).push_back(data[idx[r]]);
    }
    return s;
}

/// Canonical key=value rendering of everything that determines a run.
inline std::string config_echo(const EnsembleConfig& c, const SplitPolicy& p, const std::string& dataset) {
    std::ostringstream os;
    os << "dataset=" << dataset << '\n'
       << "train_count=" << p.train_count << '\n'
       << "split=" << (p.mode == SplitMode::first_k ? "first-k" : "seeded-random") << '\n'
       << "seed=" << p.seed << '\n'
       << "num_scales=" << c.num_scales << '\n'
       << "angles_coarse=" << c.angles_coarse << '\n';
    os << "scales=";
    for (std::size_t i = 0; i < c.scales.size(); ++i) os << (i ? "," : "") << c.scales[i];
    os << '\n'
       << "pca_k=" << c.pca_k << '\n'
       << "classifier=" << to_string(c.classifier) << '\n'
       << "knn_k=" << c.knn_k << '\n'
       << "metric=" << (c.gaussian_metric ? "gaussian" : "euclidean") << '\n'
       << "sigma=" << c.gaussian_sigma << '\n'
       << "svm_c=" << c.svm.C << '\n'
       << "svm_max_epochs=" << c.svm.max_epochs << '\n'
       << "tie_break_scale=" << c.tie_break_scale << '\n'
       << "ensemble=" << to_string(c.mode) << '\n'
       << "quantized_scale=" << c.quantized_scale << '\n';
    return os.str();
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct EvaluationReport {
    std::string dataset;
    EnsembleConfig config;
    SplitPolicy split;
    std::string config_hash;
    std::vector<Label> classes;
    std::vector<std::vector<int>> confusion;  // [true][predicted]; rejections excluded
    std::vector<int> class_totals;            // test images per true class
    int test_count = 0;
    int correct = 0;
    int rejections = 0;
    double accuracy = 0.0;  // correct / test_count
    std::vector<double> per_class_accuracy;
    PhaseTimings train_time;
    PhaseTimings test_time;

    /// Everything except wall-clock timings.
    bool same_outcome(const EvaluationReport& o) const {
        return dataset == o.dataset && config_hash == o.config_hash && classes == o.classes &&
               confusion == o.confusion && class_totals == o.class_totals && test_count == o.test_count &&
               correct == o.correct && rejections == o.rejections && accuracy == o.accuracy &&
               per_class_accuracy == o.per_class_accuracy;
    }
};

/// Trains on the train split, scores the test split. Rejections count as errors.
inline EvaluationReport evaluate_split(const Split& s, const std::string& dataset, const SplitPolicy& policy,
                                       const EnsembleConfig& cfg) {
    if (s.test.empty()) throw ArgumentError("empty test split");
    EvaluationReport r;
    r.dataset = dataset;
    r.config = cfg;
    r.split = policy;
    r.config_hash = fnv1a_hex(config_echo(cfg, policy, dataset));

    const auto model = ensemble_train(s.train, cfg, {}, &r.train_time);
    r.classes = model.classes();
    for (const auto& t : s.test)
        if (!std::binary_search(r.classes.begin(), r.classes.end(), t.label))
            throw DatasetError("test label '" + t.label + "' absent from training split");
    const auto index_of = [&](const Label& l) {
        return static_cast<std::size_t>(std::lower_bound(r.classes.begin(), r.classes.end(), l) - r.classes.begin());
    };
    const std::size_t n = r.classes.size();
    r.confusion.assign(n, std::vector<int>(n, 0));
    r.class_totals.assign(n, 0);
    std::vector<int> class_correct(n, 0);
    for (const auto& t : s.test) {
        const std::size_t truth = index_of(t.label);
        ++r.class_totals[truth];
        const auto p = ensemble_predict(model, t.image, &r.test_time);
        if (p.rejected()) {
            ++r.rejections;
            continue;
        }
        const std::size_t guess = index_of(*p.label);
        ++r.confusion[truth][guess];
        if (guess == truth) ++class_correct[truth];
    }
    r.test_count = static_cast<int>(s.test.size());
    for (std::size_t c = 0; c < n; ++c) {
        r.correct += class_correct[c];
        r.per_class_accuracy.push_back(r.class_totals[c] ? static_cast<double>(class_correct[c]) / r.class_totals[c] : 0.0);
    }
    r.accuracy = static_cast<double>(r.correct) / r.test_count;
    return r;
}

inline EvaluationReport run_experiment(const std::vector<LabeledImage>& data, const std::string& dataset,
                                       const SplitPolicy& policy, const EnsembleConfig& cfg) {
    const auto s = split(data, policy);
    if (s.train.size() + s.test.size() != data.size() || s.train.empty())
        throw Error("split lost or duplicated images");
    return evaluate_split(s, dataset, policy, cfg);
}

inline EvaluationReport run_experiment(const DatasetSpec& spec, const SplitPolicy& policy, const EnsembleConfig& cfg) {
    return run_experiment(load_dataset(spec), spec.tag, policy, cfg);
}

struct SeedSummary {
    std::vector<EvaluationReport> reports;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single seed
};

/// One seeded-random split per seed.
inline SeedSummary run_seeds(const std::vector<LabeledImage>& data, const std::string& dataset, SplitPolicy policy,
                             const std::vector<std::uint64_t>& seeds, const EnsembleConfig& cfg) {
    if (seeds.empty()) throw ArgumentError("no seeds given");
    SeedSummary s;
    policy.mode = SplitMode::seeded_random;
    for (auto seed : seeds) {
        policy.seed = seed;
        s.reports.push_back(run_experiment(data, dataset, policy, cfg));
    }
    for (const auto& r : s.reports) s.mean += r.accuracy;
    s.mean /= static_cast<double>(s.reports.size());
    if (s.reports.size() > 1) {
        double ss = 0.0;
        for (const auto& r : s.reports) ss += (r.accuracy - s.mean) * (r.accuracy - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(s.reports.size() - 1));
    }
    return s;
}

/// Direct 1-NN on raw pixels; a separability reference for the pipeline.
inline double pixel_baseline_accuracy(const Split& s) {
    LabeledSet set;
    for (const auto& t : s.train) {
        set.points.push_back(t.image.pixels);
        set.labels.push_back(t.label);
    }
    const KnnClassifier knn(std::move(set), 1);
    int correct = 0;
    for (const auto& t : s.test) correct += knn.predict(t.image.pixels) == t.label;
    return static_cast<double>(correct) / static_cast<double>(s.test.size());
}

enum class ReportFormat { csv, json_lines };

namespace detail {

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string scale_set(const EnsembleConfig& c) {
    if (c.mode == EnsembleMode::quantized) return "q8/4/2@" + std::to_string(c.quantized_scale);
    std::string s;
    for (std::size_t i = 0; i < c.scales.size(); ++i) s += (i ? " " : "") + std::to_string(c.scales[i]);
    return s;
}

inline nlohmann::ordered_json report_json(const EvaluationReport& r) {
    nlohmann::ordered_json j;
    j["config_hash"] = r.config_hash;
    j["dataset"] = r.dataset;
    j["train_count"] = r.split.train_count;
    j["split"] = r.split.mode == SplitMode::first_k ? "first-k" : "seeded-random";
    j["seed"] = r.split.seed;
    j["pca_k"] = r.config.pca_k;
    j["classifier"] = to_string(r.config.classifier);
    j["scale_set"] = scale_set(r.config);
    j["tie_break_scale"] = r.config.tie_break_scale;
    j["test_count"] = r.test_count;
    j["correct"] = r.correct;
    j["accuracy"] = r.accuracy;
    j["rejections"] = r.rejections;
    j["classes"] = r.classes;
    j["per_class_accuracy"] = r.per_class_accuracy;
    j["confusion"] = r.confusion;
    j["transform_ms"] = r.train_time.transform_ms + r.test_time.transform_ms;
    j["pca_ms"] = r.train_time.pca_ms + r.test_time.pca_ms;
    j["classify_ms"] = r.train_time.classify_ms + r.test_time.classify_ms;
    return j;
}

}  // namespace detail

/// CSV: header plus one row per report. JSON lines: one object per report.
inline void export_report(const std::vector<EvaluationReport>& reports, const std::filesystem::path& path,
                          ReportFormat format) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write report to " + path.string());
    if (format == ReportFormat::csv) {
        os << "config_hash,dataset,train_count,pca_k,classifier,scale_set,seed,accuracy,rejections,"
              "transform_ms,pca_ms,classify_ms\n";
        for (const auto& r : reports) {
            os << r.config_hash << ',' << r.dataset << ',' << r.split.train_count << ',' << r.config.pca_k << ','
               << to_string(r.config.classifier) << ',' << detail::scale_set(r.config) << ',' << r.split.seed << ','
               << detail::fixed(r.accuracy, 6) << ',' << r.rejections << ','
               << detail::fixed(r.train_time.transform_ms + r.test_time.transform_ms, 3) << ','
               << detail::fixed(r.train_time.pca_ms + r.test_time.pca_ms, 3) << ','
               << detail::fixed(r.train_time.classify_ms + r.test_time.classify_ms, 3) << '\n';
        }
    } else {
        for (const auto& r : reports) os << detail::report_json(r).dump() << '\n';
    }
    if (!os) throw IoError("write failed for " + path.string());
}

inline void export_report(const EvaluationReport& report, const std::filesystem::path& path, ReportFormat format) {
    export_report(std::vector<EvaluationReport>{report}, path, format);
}

/// Forward-transform time over one FFT time at the same size (median of `runs`).
struct FftBenchmark {
    int width = 0, height = 0, runs = 0;
    double fft_ms = 0.0;
    double transform_ms = 0.0;
    double ratio() const { return transform_ms / fft_ms; }
};

inline FftBenchmark bench_fft(int width = 256, int height = 256, int runs = 20, std::uint64_t seed = 1) {
    if (runs < 1) throw ArgumentError("runs must be >= 1");
    const auto windows = fdct::build_windows(width, height, 4, 8);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, 255);
    std::vector<double> px(static_cast<std::size_t>(width) * height);
    for (auto& v : px) v = u(rng);
    const Image img(width, height, px);

    const auto median_ms = [&](auto&& fn) {
        fn();  // warm-up
        std::vector<double> t;
        for (int i = 0; i < runs; ++i) {
            const auto a = std::chrono::steady_clock::now();
            fn();
            t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - a).count());
        }
        std::sort(t.begin(), t.end());
        return t.size() % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
    };
    // Same plan flags as the transform's own image FFT.
    Fft2d fft(height, width, Fft2d::Direction::forward);
    std::vector<Complex> buf(px.size());
    FftBenchmark b{width, height, runs, 0.0, 0.0};
    b.fft_ms = median_ms([&] {
        std::copy(px.begin(), px.end(), buf.begin());
        fft(buf);
    });
    b.transform_ms = median_ms([&] { (void)fdct::fdct_forward(img, windows); });
    return b;
}

}  // namespace curveface
