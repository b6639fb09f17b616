#pragma once

// Per-scale feature vectors and principal component reduction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "curveface/binary_io.hpp"
#include "curveface/error.hpp"
#include "curveface/fdct.hpp"

namespace curveface {

/// Coefficient magnitudes of one curvelet scale, in canonical band order.
struct FeatureVector {
    int scale_index = 0;
    std::vector<double> values;
};

inline FeatureVector extract_features(const fdct::CurveletDecomposition& coeffs, int scale) {
    return {scale, fdct::coefficient_magnitudes(coeffs, scale)};
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Training mean plus an orthonormal basis of the leading principal directions.
class PcaModel {
public:
    PcaModel() = default;
    PcaModel(std::vector<double> mean, RowMatrix components, std::vector<double> singular_values,
             int requested_k)
        : mean_(std::move(mean)), components_(std::move(components)),
          singular_values_(std::move(singular_values)), requested_k_(requested_k) {}

    int dim() const { return static_cast<int>(mean_.size()); }
    int k() const { return static_cast<int>(components_.rows()); }
    int requested_k() const { return requested_k_; }
    /// True when the data had fewer independent directions than requested.
    bool rank_reduced() const { return k() < requested_k_; }

    const std::vector<double>& mean() const { return mean_; }
    const RowMatrix& components() const { return components_; }
    const std::vector<double>& singular_values() const { return singular_values_; }

    /// components * (x - mean)
    std::vector<double> project(std::span<const double> x) const {
        if (x.size() != mean_.size())
            throw DimensionError("pca_project: vector length " + std::to_string(x.size()) +
                                 " != model dimension " + std::to_string(mean_.size()));
        Eigen::VectorXd centered(dim());
        for (int i = 0; i < dim(); ++i) centered[i] = x[static_cast<std::size_t>(i)] - mean_[static_cast<std::size_t>(i)];
        const Eigen::VectorXd y = components_ * centered;
        return {y.data(), y.data() + y.size()};
    }

    /// mean + components^T * y, using the first `terms` coordinates of y.
    std::vector<double> reconstruct(std::span<const double> y, int terms) const {
        if (terms < 0 || terms > k() || y.size() < static_cast<std::size_t>(terms))
            throw ArgumentError("pca reconstruct: term count out of range");
        std::vector<double> x = mean_;
        for (int c = 0; c < terms; ++c)
            for (int i = 0; i < dim(); ++i)
                x[static_cast<std::size_t>(i)] += components_(c, i) * y[static_cast<std::size_t>(c)];
        return x;
    }

    friend bool operator==(const PcaModel& a, const PcaModel& b) {
        return a.mean_ == b.mean_ && a.components_ == b.components_ &&
               a.singular_values_ == b.singular_values_ && a.requested_k_ == b.requested_k_;
    }

private:
    std::vector<double> mean_;
    RowMatrix components_;
    std::vector<double> singular_values_;
    int requested_k_ = 0;
};

/// Default retained component count.
inline constexpr int kDefaultPcaComponents = 100;

/// Fits PCA by thin SVD of the centered sample matrix. Components follow
/// non-increasing singular value; each is signed so its largest-magnitude
/// entry (first on ties) is non-negative. k shrinks to the numerical rank
/// when the data span fewer directions.
inline PcaModel pca_fit(const std::vector<std::vector<double>>& samples, int k) {
    if (samples.size() < 2) throw ArgumentError("pca_fit: need at least two samples");
    const std::size_t d = samples.front().size();
    for (const auto& s : samples)
        if (s.size() != d) throw DimensionError("pca_fit: samples have unequal lengths");
    const std::size_t n = samples.size();
    if (k < 1 || static_cast<std::size_t>(k) > std::min(d, n))
        throw ArgumentError("pca_fit: k=" + std::to_string(k) + " outside [1, " +
                            std::to_string(std::min(d, n)) + "]");

    std::vector<double> mean(d, 0.0);
    for (const auto& s : samples)
        for (std::size_t i = 0; i < d; ++i) mean[i] += s[i];
    for (double& m : mean) m /= static_cast<double>(n);

    Eigen::MatrixXd centered(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < d; ++i)
            centered(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = samples[r][i] - mean[i];

    const Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = sv.size() > 0 ? sv[0] * static_cast<double>(std::max(n, d)) *
                                           std::numeric_limits<double>::epsilon()
                                     : 0.0;
    int rank = 0;
    while (rank < sv.size() && sv[rank] > tol && sv[rank] > 0.0) ++rank;
    const int kept = std::min(k, rank);

    RowMatrix components(kept, static_cast<Eigen::Index>(d));
    std::vector<double> kept_sv(static_cast<std::size_t>(kept));
    for (int c = 0; c < kept; ++c) {
        Eigen::VectorXd v = svd.matrixV().col(c);
        Eigen::Index arg = 0;
        for (Eigen::Index i = 1; i < v.size(); ++i)
            if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
        if (v[arg] < 0.0) v = -v;
        components.row(c) = v.transpose();
        kept_sv[static_cast<std::size_t>(c)] = sv[c];
    }
    return PcaModel(std::move(mean), std::move(components), std::move(kept_sv), k);
}

inline std::vector<double> pca_project(const PcaModel& model, std::span<const double> x) {
    return model.project(x);
}

// PCA file: "CFPC" u32 version=1 u32 dim u32 k u32 requested_k,
// then mean[dim], singular_values[k], components[k*dim] (row-major), f64 LE.
inline void write_pca(const PcaModel& m, binary::Writer& w) {
    w.magic("CFPC");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(m.dim()));
    w.u32(static_cast<std::uint32_t>(m.k()));
    w.u32(static_cast<std::uint32_t>(m.requested_k()));
    w.f64s(m.mean());
    w.f64s(m.singular_values());
    w.f64s(std::span<const double>(m.components().data(),
                                   static_cast<std::size_t>(m.components().size())));
}

inline PcaModel read_pca(binary::Reader& r) {
    r.expect_magic("CFPC");
    if (r.u32() != 1) throw FormatError("unsupported PCA file version");
    const std::uint32_t d = r.u32();
    const std::uint32_t k = r.u32();
    const int requested = static_cast<int>(r.u32());
    if (k > d && d > 0) throw FormatError("PCA file: k exceeds dimension");
    auto mean = r.f64s(d);
    auto sv = r.f64s(k);
    const auto flat = r.f64s(static_cast<std::size_t>(k) * d);
    RowMatrix comps(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
    std::copy(flat.begin(), flat.end(), comps.data());
    return PcaModel(std::move(mean), std::move(comps), std::move(sv), requested);
}

inline void save_pca(const PcaModel& m, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    binary::Writer w(os);
    write_pca(m, w);
    w.check();
}

inline PcaModel load_pca(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    binary::Reader r(is);
    return read_pca(r);
}

}  // namespace curveface
