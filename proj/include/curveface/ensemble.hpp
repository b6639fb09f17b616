#pragma once

// Per-scale classifier ensemble fused by majority vote.
//
// Each training image is transformed once. For every configured curvelet
// scale the coefficient magnitudes are reduced with that scale's PCA model
// and fed to that scale's classifier; at prediction time the per-scale
// labels vote. A strict plurality wins; a tie is settled by the tie-break
// scale's vote when it belongs to the tied set, otherwise the image is
// rejected.
//
// The quantized mode swaps the voters: one classifier per bit depth
// (8, 4, 2), each seeing the magnitudes of a single scale of the
// correspondingly quantized image, with no tie-break.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "curveface/binary_io.hpp"
#include "curveface/error.hpp"
#include "curveface/fdct.hpp"
#include "curveface/imaging.hpp"
#include "curveface/knn.hpp"
#include "curveface/pca.hpp"
#include "curveface/svm.hpp"

namespace curveface {

enum class ClassifierKind { knn, svm };
enum class EnsembleMode { per_scale, quantized };

inline std::string to_string(ClassifierKind k) { return k == ClassifierKind::knn ? "knn" : "svm"; }
inline std::string to_string(EnsembleMode m) { return m == EnsembleMode::per_scale ? "per-scale" : "quantized"; }

struct EnsembleConfig {
    int num_scales = 4;
    int angles_coarse = 8;
    std::vector<int> scales{1, 2, 3, 4};  // voting scales (per-scale mode)
    int pca_k = kDefaultPcaComponents;
    ClassifierKind classifier = ClassifierKind::knn;
    int knn_k = 1;
    bool gaussian_metric = false;
    double gaussian_sigma = 0.0;  // 0 selects the median pairwise training distance
    SvmOptions svm;
    int tie_break_scale = 3;
    EnsembleMode mode = EnsembleMode::per_scale;
    int quantized_scale = 3;  // feature scale used by every voter in quantized mode

    void validate() const {
        if (num_scales < 3) throw ArgumentError("num_scales must be >= 3");
        if (pca_k < 1) throw ArgumentError("pca_k must be >= 1");
        if (knn_k < 1) throw ArgumentError("knn k must be >= 1");
        if (mode == EnsembleMode::per_scale) {
            if (scales.empty()) throw ArgumentError("at least one voting scale is required");
            std::set<int> seen;
            for (int s : scales) {
                if (s < 1 || s > num_scales)
                    throw ArgumentError("voting scale " + std::to_string(s) + " outside [1, " +
                                        std::to_string(num_scales) + "]");
                if (!seen.insert(s).second) throw ArgumentError("duplicate voting scale " + std::to_string(s));
            }
        } else if (quantized_scale < 1 || quantized_scale > num_scales) {
            throw ArgumentError("quantized feature scale out of range");
        }
    }
};

struct LabeledImage {
    Image image;
    Label label;
};

using Classifier = std::variant<KnnClassifier, OaaSvm>;

/// Accumulated wall-clock milliseconds per pipeline phase.
struct PhaseTimings {
    double transform_ms = 0.0;
    double pca_ms = 0.0;
    double classify_ms = 0.0;
};

/// One voter: the scale (or bit depth in quantized mode) it reads, its PCA
/// model and its classifier.
struct Voter {
    int key = 0;
    PcaModel pca;
    Classifier classifier;
};

struct Prediction {
    std::optional<Label> label;                 // empty when rejected
    std::vector<std::pair<int, Label>> votes;   // (voter key, label) in voter order
    std::map<Label, int> counts;

    bool rejected() const { return !label.has_value(); }
};

/// Plurality over votes; ties resolved by the vote cast under `tie_break_key`
/// if that label is among the tied ones. Pass a key no voter uses to disable.
inline Prediction majority_vote(std::vector<std::pair<int, Label>> votes, int tie_break_key) {
    Prediction p;
    p.votes = std::move(votes);
    for (const auto& [_, label] : p.votes) ++p.counts[label];
    int best = 0;
    for (const auto& [_, c] : p.counts) best = std::max(best, c);
    std::vector<Label> tied;
    for (const auto& [label, c] : p.counts)
        if (c == best) tied.push_back(label);
    if (tied.size() == 1) {
        p.label = tied.front();
    } else {
        for (const auto& [key, label] : p.votes)
            if (key == tie_break_key && std::find(tied.begin(), tied.end(), label) != tied.end())
                p.label = label;
    }
    return p;
}

class ScaleEnsembleModel {
public:
    ScaleEnsembleModel(EnsembleConfig config, int width, int height, std::vector<Voter> voters,
                       std::vector<Label> classes)
        : config_(std::move(config)), voters_(std::move(voters)), classes_(std::move(classes)),
          windows_(std::make_shared<const fdct::WindowFamily>(
              fdct::build_windows(width, height, config_.num_scales, config_.angles_coarse))) {}

    const EnsembleConfig& config() const { return config_; }
    const std::vector<Voter>& voters() const { return voters_; }
    const std::vector<Label>& classes() const { return classes_; }
    const fdct::WindowFamily& windows() const { return *windows_; }
    int width() const { return windows_->width(); }
    int height() const { return windows_->height(); }

    int tie_break_key() const {
        return config_.mode == EnsembleMode::per_scale ? config_.tie_break_scale : -1;
    }

private:
    EnsembleConfig config_;
    std::vector<Voter> voters_;
    std::vector<Label> classes_;
    std::shared_ptr<const fdct::WindowFamily> windows_;
};

namespace detail {

class Stopwatch {
public:
    explicit Stopwatch(double* sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~Stopwatch() {
        if (sink_)
            *sink_ += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }
    Stopwatch(const Stopwatch&) = delete;
    Stopwatch& operator=(const Stopwatch&) = delete;

private:
    double* sink_;
    std::chrono::steady_clock::time_point start_;
};

inline double* slot(PhaseTimings* t, double PhaseTimings::*m) { return t ? &(t->*m) : nullptr; }

inline Label classify(const Classifier& c, std::span<const double> x) {
    if (const auto* knn = std::get_if<KnnClassifier>(&c)) return knn->predict(x);
    return std::get<OaaSvm>(c).predict(x).label;
}

inline Classifier train_classifier(LabeledSet set, const EnsembleConfig& cfg) {
    if (cfg.classifier == ClassifierKind::svm) return OaaSvm::train(set, cfg.svm);
    const int k = std::min<int>(cfg.knn_k, static_cast<int>(set.size()));
    if (!cfg.gaussian_metric) return KnnClassifier(std::move(set), k);
    if (cfg.gaussian_sigma > 0.0) return KnnClassifier(std::move(set), k, GaussianMetric{cfg.gaussian_sigma});
    return KnnClassifier::with_default_gaussian(std::move(set), k);
}

inline Voter train_voter(int key, const std::vector<std::vector<double>>& features,
                         const std::vector<Label>& labels, const EnsembleConfig& cfg, PhaseTimings* t) {
    // k is clamped to what the data can support; pca_fit reduces it further to the numerical rank.
    const int limit = static_cast<int>(std::min(features.size(), features.front().size()));
    std::optional<PcaModel> pca;
    LabeledSet set;
    {
        Stopwatch sw(slot(t, &PhaseTimings::pca_ms));
        pca = pca_fit(features, std::min(cfg.pca_k, limit));
        set.labels = labels;
        set.points.reserve(features.size());
        for (const auto& f : features) set.points.push_back(pca->project(f));
    }
    Stopwatch sw(slot(t, &PhaseTimings::classify_ms));
    Classifier c = train_classifier(std::move(set), cfg);
    return Voter{key, std::move(*pca), std::move(c)};
}

// Feature vectors per voter for one image, in voter-key order.
inline std::vector<std::pair<int, std::vector<double>>> voter_features(const Image& img,
                                                                       const EnsembleConfig& cfg,
                                                                       const fdct::WindowFamily& windows,
                                                                       PhaseTimings* t) {
    Stopwatch sw(slot(t, &PhaseTimings::transform_ms));
    std::vector<std::pair<int, std::vector<double>>> out;
    if (cfg.mode == EnsembleMode::per_scale) {
        const auto coeffs = fdct::fdct_forward(img, windows);
        for (int s : cfg.scales) out.emplace_back(s, fdct::coefficient_magnitudes(coeffs, s));
    } else {
        for (int bits : {8, 4, 2}) {
            const auto coeffs = fdct::fdct_forward(quantize(img, bits), windows);
            out.emplace_back(bits, fdct::coefficient_magnitudes(coeffs, cfg.quantized_scale));
        }
    }
    return out;
}

}  // namespace detail

/// Trains one voter per configured scale. Every class in `declared_classes`
/// must have at least one image; pass an empty list to accept the labels present.
inline ScaleEnsembleModel ensemble_train(const std::vector<LabeledImage>& train, const EnsembleConfig& cfg,
                                         const std::vector<Label>& declared_classes = {},
                                         PhaseTimings* timings = nullptr) {
    cfg.validate();
    if (train.empty()) throw ArgumentError("ensemble_train: no training images");
    const int width = train.front().image.width;
    const int height = train.front().image.height;
    for (const auto& t : train)
        if (t.image.width != width || t.image.height != height)
            throw DimensionError("ensemble_train: training images differ in geometry (" +
                                 std::to_string(t.image.width) + "x" + std::to_string(t.image.height) +
                                 " vs " + std::to_string(width) + "x" + std::to_string(height) + ")");

    std::vector<Label> labels;
    for (const auto& t : train) labels.push_back(t.label);
    std::vector<Label> classes = labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    for (const auto& c : declared_classes)
        if (!std::binary_search(classes.begin(), classes.end(), c))
            throw ArgumentError("ensemble_train: class '" + c + "' has no training images");

    const auto windows = fdct::build_windows(width, height, cfg.num_scales, cfg.angles_coarse);

    // One transform per image (three in quantized mode); features grouped by voter.
    std::vector<int> keys;
    std::vector<std::vector<std::vector<double>>> features;
    for (const auto& t : train) {
        auto per_voter = detail::voter_features(t.image, cfg, windows, timings);
        if (keys.empty()) {
            for (const auto& [key, _] : per_voter) keys.push_back(key);
            features.resize(keys.size());
        }
        for (std::size_t v = 0; v < per_voter.size(); ++v) features[v].push_back(std::move(per_voter[v].second));
    }

    std::vector<Voter> voters;
    for (std::size_t v = 0; v < keys.size(); ++v)
        voters.push_back(detail::train_voter(keys[v], features[v], labels, cfg, timings));
    return ScaleEnsembleModel(cfg, width, height, std::move(voters), std::move(classes));
}

inline Prediction ensemble_predict(const ScaleEnsembleModel& model, const Image& img,
                                   PhaseTimings* timings = nullptr) {
    if (img.width != model.width() || img.height != model.height())
        throw DimensionError("ensemble_predict: image is " + std::to_string(img.width) + "x" +
                             std::to_string(img.height) + ", model expects " +
                             std::to_string(model.width()) + "x" + std::to_string(model.height()));
    const auto features = detail::voter_features(img, model.config(), model.windows(), timings);
    std::vector<std::pair<int, Label>> votes;
    for (std::size_t v = 0; v < model.voters().size(); ++v) {
        const auto& voter = model.voters()[v];
        std::vector<double> reduced;
        {
            detail::Stopwatch sw(detail::slot(timings, &PhaseTimings::pca_ms));
            reduced = voter.pca.project(features[v].second);
        }
        detail::Stopwatch sw(detail::slot(timings, &PhaseTimings::classify_ms));
        votes.emplace_back(voter.key, detail::classify(voter.classifier, reduced));
    }
    return majority_vote(std::move(votes), model.tie_break_key());
}

// Model bundle: "CFEN" u32 version=1, config block, u32 width, u32 height,
// u32 class count + class labels, u32 voter count, then per voter:
// i32 key, PCA block ("CFPC", see pca.hpp), u32 classifier tag (0 knn, 1 svm)
// and the classifier block. Strings are u32 length + bytes; reals f64 LE.
namespace detail {

inline void write_config(const EnsembleConfig& c, binary::Writer& w) {
    w.u32(static_cast<std::uint32_t>(c.num_scales));
    w.u32(static_cast<std::uint32_t>(c.angles_coarse));
    w.u32(static_cast<std::uint32_t>(c.scales.size()));
    for (int s : c.scales) w.i32(s);
    w.u32(static_cast<std::uint32_t>(c.pca_k));
    w.u32(c.classifier == ClassifierKind::knn ? 0u : 1u);
    w.u32(static_cast<std::uint32_t>(c.knn_k));
    w.u32(c.gaussian_metric ? 1u : 0u);
    w.f64(c.gaussian_sigma);
    w.f64(c.svm.C);
    w.u32(static_cast<std::uint32_t>(c.svm.max_epochs));
    w.f64(c.svm.tolerance);
    w.i32(c.tie_break_scale);
    w.u32(c.mode == EnsembleMode::per_scale ? 0u : 1u);
    w.i32(c.quantized_scale);
}

inline EnsembleConfig read_config(binary::Reader& r) {
    EnsembleConfig c;
    c.num_scales = static_cast<int>(r.u32());
    c.angles_coarse = static_cast<int>(r.u32());
    const std::uint32_t ns = r.u32();
    if (ns > 64) throw FormatError("implausible scale list");
    c.scales.clear();
    for (std::uint32_t i = 0; i < ns; ++i) c.scales.push_back(r.i32());
    c.pca_k = static_cast<int>(r.u32());
    c.classifier = r.u32() == 0 ? ClassifierKind::knn : ClassifierKind::svm;
    c.knn_k = static_cast<int>(r.u32());
    c.gaussian_metric = r.u32() != 0;
    c.gaussian_sigma = r.f64();
    c.svm.C = r.f64();
    c.svm.max_epochs = static_cast<int>(r.u32());
    c.svm.tolerance = r.f64();
    c.tie_break_scale = r.i32();
    c.mode = r.u32() == 0 ? EnsembleMode::per_scale : EnsembleMode::quantized;
    c.quantized_scale = r.i32();
    return c;
}

inline void write_points(const std::vector<std::vector<double>>& pts, std::size_t dim, binary::Writer& w) {
    w.u32(static_cast<std::uint32_t>(pts.size()));
    w.u32(static_cast<std::uint32_t>(dim));
    for (const auto& p : pts) w.f64s(p);
}

inline std::vector<std::vector<double>> read_points(binary::Reader& r) {
    const std::uint32_t n = r.u32();
    const std::uint32_t d = r.u32();
    std::vector<std::vector<double>> pts;
    pts.reserve(std::min<std::uint32_t>(n, 1u << 20));
    for (std::uint32_t i = 0; i < n; ++i) pts.push_back(r.f64s(d));
    return pts;
}

inline void write_classifier(const Classifier& c, binary::Writer& w) {
    if (const auto* knn = std::get_if<KnnClassifier>(&c)) {
        w.u32(0);
        w.u32(static_cast<std::uint32_t>(knn->k()));
        const auto* g = std::get_if<GaussianMetric>(&knn->metric());
        w.u32(g ? 1u : 0u);
        w.f64(g ? g->sigma : 0.0);
        write_points(knn->data().points, knn->data().dim(), w);
        for (const auto& l : knn->data().labels) w.str(l);
        return;
    }
    const auto& svm = std::get<OaaSvm>(c);
    w.u32(1);
    w.f64(svm.C());
    w.u32(static_cast<std::uint32_t>(svm.dim()));
    w.f64s(svm.standardizer().mean);
    w.f64s(svm.standardizer().scale);
    w.u32(static_cast<std::uint32_t>(svm.classes().size()));
    for (std::size_t i = 0; i < svm.classes().size(); ++i) {
        const auto& m = svm.machines()[i];
        w.str(svm.classes()[i]);
        w.f64s(m.w);
        w.f64(m.b);
        w.u32(m.converged ? 1u : 0u);
        w.u32(static_cast<std::uint32_t>(m.epochs));
    }
}

inline Classifier read_classifier(binary::Reader& r) {
    const std::uint32_t tag = r.u32();
    if (tag == 0) {
        const int k = static_cast<int>(r.u32());
        const bool gaussian = r.u32() != 0;
        const double sigma = r.f64();
        LabeledSet set;
        set.points = read_points(r);
        for (std::size_t i = 0; i < set.points.size(); ++i) set.labels.push_back(r.str());
        if (gaussian) return KnnClassifier(std::move(set), k, GaussianMetric{sigma});
        return KnnClassifier(std::move(set), k);
    }
    if (tag != 1) throw FormatError("unknown classifier tag");
    const double C = r.f64();
    const std::uint32_t d = r.u32();
    Standardizer st;
    st.mean = r.f64s(d);
    st.scale = r.f64s(d);
    const std::uint32_t nc = r.u32();
    std::vector<Label> classes;
    std::vector<BinarySvm> machines;
    for (std::uint32_t i = 0; i < nc; ++i) {
        classes.push_back(r.str());
        BinarySvm m;
        m.w = r.f64s(d);
        m.b = r.f64();
        m.converged = r.u32() != 0;
        m.epochs = static_cast<int>(r.u32());
        machines.push_back(std::move(m));
    }
    return OaaSvm(std::move(st), std::move(classes), std::move(machines), C);
}

}  // namespace detail

inline void write_ensemble(const ScaleEnsembleModel& model, std::ostream& os) {
    binary::Writer w(os);
    w.magic("CFEN");
    w.u32(1);
    detail::write_config(model.config(), w);
    w.u32(static_cast<std::uint32_t>(model.width()));
    w.u32(static_cast<std::uint32_t>(model.height()));
    w.u32(static_cast<std::uint32_t>(model.classes().size()));
    for (const auto& c : model.classes()) w.str(c);
    w.u32(static_cast<std::uint32_t>(model.voters().size()));
    for (const auto& v : model.voters()) {
        w.i32(v.key);
        write_pca(v.pca, w);
        detail::write_classifier(v.classifier, w);
    }
    w.check();
}

inline ScaleEnsembleModel read_ensemble(std::istream& is) {
    binary::Reader r(is);
    r.expect_magic("CFEN");
    if (r.u32() != 1) throw FormatError("unsupported ensemble bundle version");
    auto cfg = detail::read_config(r);
    cfg.validate();
    const int width = static_cast<int>(r.u32());
    const int height = static_cast<int>(r.u32());
    const std::uint32_t nc = r.u32();
    std::vector<Label> classes;
    for (std::uint32_t i = 0; i < nc; ++i) classes.push_back(r.str());
    const std::uint32_t nv = r.u32();
    if (nv > 64) throw FormatError("implausible voter count");
    std::vector<Voter> voters;
    for (std::uint32_t i = 0; i < nv; ++i) {
        const int key = r.i32();
        auto pca = read_pca(r);
        auto cls = detail::read_classifier(r);
        voters.push_back(Voter{key, std::move(pca), std::move(cls)});
    }
    return ScaleEnsembleModel(std::move(cfg), width, height, std::move(voters), std::move(classes));
}

inline void save_ensemble(const ScaleEnsembleModel& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    write_ensemble(model, os);
}

inline ScaleEnsembleModel load_ensemble(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return read_ensemble(is);
}

}  // namespace curveface
