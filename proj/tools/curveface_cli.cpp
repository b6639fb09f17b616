// curveface command-line front end.
//
//   curveface transform IMAGE --out coeffs.cfdc
//   curveface quantize IMAGE --bits 4 --out q.pgm
//   curveface train --dataset DIR --out model.cfen
//   curveface evaluate --dataset DIR [--seeds 1,2,3] --out report.csv
//   curveface bench-fft
//
// --config FILE (flat key=value lines, keys are the long flag names) may be
// given before or after the subcommand; flags on the command line win.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "curveface/ensemble.hpp"
#include "curveface/fdct.hpp"
#include "curveface/harness.hpp"
#include "curveface/image_io.hpp"
#include "curveface/imaging.hpp"
#include "curveface/synthetic.hpp"

using namespace curveface;

namespace {

struct PipelineArgs {
    std::string dataset;
    bool synthetic = false;
    std::string tag = "custom";
    int subject_limit = 15;
    int train_count = 5;
    std::uint64_t seed = 0;  // 0: first-k split
    std::vector<std::uint64_t> seeds;
    EnsembleConfig config;
    std::string classifier = "knn";
    std::string metric = "euclidean";
    bool quantized = false;
    std::string out;
    std::string format;
};

// CLI11 reads config files on the root app only; flat keys are routed to
// whichever subcommand was selected.
class FlatConfig : public CLI::ConfigINI {
public:
    explicit FlatConfig(const CLI::App* root) : root_(root) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        auto items = CLI::ConfigINI::from_config(input);
        const auto selected = root_->get_subcommands();
        if (selected.empty()) return items;
        for (auto& item : items)
            if (item.parents.empty()) item.parents.push_back(selected.front()->get_name());
        return items;
    }

private:
    const CLI::App* root_;
};

void add_pipeline_options(CLI::App* app, PipelineArgs& a, bool multi_seed) {
    app->add_option("--dataset", a.dataset, "dataset root: one subdirectory of images per subject");
    app->add_flag("--synthetic", a.synthetic, "use the generated 10-class benchmark instead of --dataset");
    app->add_option("--dataset-tag", a.tag, "name recorded in reports")->check(CLI::IsMember({"orl", "grimace", "gatech", "custom", "synthetic"}));
    app->add_option("--subject-limit", a.subject_limit, "number of subjects kept")->check(CLI::Range(2, 1 << 20));
    app->add_option("--train-count", a.train_count, "training images per subject")->check(CLI::PositiveNumber);
    app->add_option("--seed", a.seed, "seeded-random split with this seed (default: first-k split)");
    if (multi_seed)
        app->add_option("--seeds", a.seeds, "comma-separated seeds; one seeded-random run each")->delimiter(',');
    app->add_option("--pca-k", a.config.pca_k, "PCA components per scale")->check(CLI::PositiveNumber);
    app->add_option("--classifier", a.classifier, "per-scale classifier")->check(CLI::IsMember({"knn", "svm"}));
    app->add_option("--knn-k", a.config.knn_k, "neighbours for k-NN")->check(CLI::PositiveNumber);
    app->add_option("--metric", a.metric, "k-NN metric")->check(CLI::IsMember({"euclidean", "gaussian"}));
    app->add_option("--sigma", a.config.gaussian_sigma, "Gaussian metric width (0: median pairwise distance)");
    app->add_option("--svm-c", a.config.svm.C, "SVM regularization constant")->check(CLI::PositiveNumber);
    app->add_option("--svm-epochs", a.config.svm.max_epochs, "SVM epoch cap")->check(CLI::PositiveNumber);
    app->add_option("--num-scales", a.config.num_scales, "curvelet scales")->check(CLI::Range(3, 12));
    app->add_option("--angles", a.config.angles_coarse, "angles at the first oriented scale");
    app->add_option("--scales", a.config.scales, "voting scales, e.g. 1,2,3,4")->delimiter(',');
    app->add_option("--tie-break-scale", a.config.tie_break_scale, "scale whose vote settles plurality ties");
    app->add_flag("--quantized-ensemble", a.quantized, "vote over 8/4/2-bit copies at one scale instead");
    app->add_option("--quantized-scale", a.config.quantized_scale, "feature scale for --quantized-ensemble");
    app->add_option("--out", a.out, "output path");
    app->add_option("--format", a.format, "report format (default from --out extension)")->check(CLI::IsMember({"csv", "jsonl"}));
}

EnsembleConfig resolve(PipelineArgs& a) {
    EnsembleConfig c = a.config;
    c.classifier = a.classifier == "svm" ? ClassifierKind::svm : ClassifierKind::knn;
    c.gaussian_metric = a.metric == "gaussian";
    c.mode = a.quantized ? EnsembleMode::quantized : EnsembleMode::per_scale;
    c.validate();
    return c;
}

std::vector<LabeledImage> load(PipelineArgs& a) {
    if (a.synthetic) {
        a.tag = "synthetic";
        return make_synthetic_dataset(SyntheticSpec{});
    }
    if (a.dataset.empty()) throw ArgumentError("--dataset or --synthetic is required");
    return load_dataset(DatasetSpec{a.dataset, a.subject_limit, 0, a.tag});
}

SplitPolicy policy_of(const PipelineArgs& a) {
    return {a.train_count, a.seed ? SplitMode::seeded_random : SplitMode::first_k, a.seed};
}

int cmd_transform(const std::string& image, const std::string& out, int scales, int angles) {
    const Image img = canonicalize(load_image(image));
    const auto windows = fdct::build_windows(img.width, img.height, scales, angles);
    const auto coeffs = fdct::fdct_forward(img, windows);
    std::printf("%s: %dx%d (canonical), %zu coefficients\n", image.c_str(), img.width, img.height,
                coeffs.coefficient_count());
    for (const auto& s : coeffs.scales)
        std::printf("  scale %d: %zu band(s), first %dx%d\n", s.scale_index, s.bands.size(), s.bands.front().rows,
                    s.bands.front().cols);
    if (!out.empty()) fdct::save_decomposition(coeffs, out);
    return 0;
}

int cmd_quantize(const std::string& image, int bits, const std::string& out) {
    const Image q = quantize(load_image(image), bits);
    write_pgm(q, out);
    std::printf("%s -> %s: %d bits, %zu distinct levels\n", image.c_str(), out.c_str(), bits, distinct_levels(q));
    return 0;
}

int cmd_train(PipelineArgs& a) {
    if (a.out.empty()) throw ArgumentError("--out is required for train");
    const auto cfg = resolve(a);
    const auto data = load(a);
    const auto s = split(data, policy_of(a));
    const auto model = ensemble_train(s.train, cfg);
    save_ensemble(model, a.out);
    std::printf("trained %zu voter(s) on %zu images (%zu classes, %dx%d) -> %s\n", model.voters().size(),
                s.train.size(), model.classes().size(), model.width(), model.height(), a.out.c_str());
    for (const auto& v : model.voters())
        std::printf("  voter %d: PCA k=%d of %d requested%s\n", v.key, v.pca.k(), v.pca.requested_k(),
                    v.pca.rank_reduced() ? " (rank reduced)" : "");
    return 0;
}

void print_report(const EvaluationReport& r) {
    std::printf("[%s] seed=%llu accuracy=%.4f (%d/%d) rejections=%d transform=%.1fms pca=%.1fms classify=%.1fms\n",
                r.config_hash.c_str(), static_cast<unsigned long long>(r.split.seed), r.accuracy, r.correct,
                r.test_count, r.rejections, r.train_time.transform_ms + r.test_time.transform_ms,
                r.train_time.pca_ms + r.test_time.pca_ms, r.train_time.classify_ms + r.test_time.classify_ms);
}

int cmd_evaluate(PipelineArgs& a) {
    const auto cfg = resolve(a);
    const auto data = load(a);
    std::vector<EvaluationReport> reports;
    if (!a.seeds.empty()) {
        const auto summary = run_seeds(data, a.tag, policy_of(a), a.seeds, cfg);
        reports = summary.reports;
        for (const auto& r : reports) print_report(r);
        std::printf("mean accuracy %.4f, std %.4f over %zu seeds\n", summary.mean, summary.stddev, reports.size());
    } else {
        reports.push_back(run_experiment(data, a.tag, policy_of(a), cfg));
        print_report(reports.back());
    }
    if (!a.out.empty()) {
        const bool jsonl = a.format == "jsonl" || (a.format.empty() && a.out.size() >= 6 &&
                                                   a.out.compare(a.out.size() - 6, 6, ".jsonl") == 0);
        export_report(reports, a.out, jsonl ? ReportFormat::json_lines : ReportFormat::csv);
    }
    return 0;
}

int cmd_bench(int size, int runs) {
    const auto b = bench_fft(size, size, runs);
    std::printf("%dx%d, median of %d: fft %.3f ms, forward transform %.3f ms, ratio %.2f\n", b.width, b.height, b.runs,
                b.fft_ms, b.transform_ms, b.ratio());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curvelet-based face recognition toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "flat key=value file (keys are long flag names); command-line flags win");
    app.config_formatter(std::make_shared<FlatConfig>(&app));
    app.allow_config_extras(CLI::config_extras_mode::error);

    std::string image, out;
    int scales = 4, angles = 8, bits = 4;
    auto* transform = app.add_subcommand("transform", "dump the curvelet decomposition of one image");
    transform->add_option("image", image, "input image (PGM/PPM/PNG/JPEG)")->required()->check(CLI::ExistingFile);
    transform->add_option("--out", out, "write coefficients to this container file");
    transform->add_option("--num-scales", scales, "curvelet scales")->check(CLI::Range(2, 12));
    transform->add_option("--angles", angles, "angles at the first oriented scale");

    auto* quant = app.add_subcommand("quantize", "reduce an image to 2, 4 or 8 bits");
    quant->add_option("image", image, "input image")->required()->check(CLI::ExistingFile);
    quant->add_option("--bits", bits, "target bit depth")->check(CLI::IsMember({2, 4, 8}));
    quant->add_option("--out", out, "output PGM")->required();

    PipelineArgs train_args, eval_args;
    auto* train = app.add_subcommand("train", "fit the per-scale ensemble and save a model bundle");
    add_pipeline_options(train, train_args, false);
    auto* evaluate = app.add_subcommand("evaluate", "train/test experiment with a report");
    add_pipeline_options(evaluate, eval_args, true);

    int size = 256, runs = 20;
    auto* bench = app.add_subcommand("bench-fft", "time the forward transform against one FFT");
    bench->add_option("--size", size, "square image size (even)")->check(CLI::Range(16, 8192));
    bench->add_option("--runs", runs, "timed repetitions")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*transform) return cmd_transform(image, out, scales, angles);
        if (*quant) return cmd_quantize(image, bits, out);
        if (*train) return cmd_train(train_args);
        if (*evaluate) return cmd_evaluate(eval_args);
        if (*bench) return cmd_bench(size, runs);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
