#pragma once

// Fast discrete curvelet transform via wrapping.
//
// Frequency plane layout (normalized so |w| = 1 at Nyquist on each axis):
//   scale 1          low-pass square, P_1^2
//   scales 2..J-1    dyadic square rings P_j^2 - P_{j-1}^2, each split into
//                    num_angles(j) smooth polar sectors
//   scale J          everything outside P_{J-1}, isotropic
// where P_j(w) = phi(w_x / a_j) phi(w_y / a_j), a_j = (2/3) 2^(j-J).
// The squared windows sum to one at every DFT sample, so with unitary FFTs
// and an injective wrap the transform is a Parseval tight frame.
//
// Each band's windowed spectrum is wrapped (periodized) onto a rectangle
// near the origin before the inverse FFT. The rectangle is as tall as the
// support's extent along one axis and as wide as the longest support run
// along the other, which guarantees no two support samples share a cell.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curveface/binary_io.hpp"
#include "curveface/error.hpp"
#include "curveface/fft.hpp"
#include "curveface/imaging.hpp"

namespace curveface::fdct {

struct WindowParams {
    int width = 0;
    int height = 0;
    int num_scales = 4;
    int angles_coarse = 8;

    friend bool operator==(const WindowParams&, const WindowParams&) = default;
};

/// Orientation count at a scale (1-based): one for the coarsest and finest
/// scales, `angles_coarse` at scale 2, doubling every second scale after that.
inline int num_angles(int scale, int num_scales, int angles_coarse) {
    if (scale < 1 || scale > num_scales) throw ArgumentError("num_angles: scale out of range");
    if (scale == 1 || scale == num_scales) return 1;
    return angles_coarse << ((scale - 1) / 2);
}

namespace detail {

// Meyer smoothness polynomial: 0 at 0, 1 at 1, nu(x) + nu(1 - x) = 1.
inline double meyer_nu(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * x * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x);
}

// phi^2 for a 1-D low-pass with flat top on [-a, a] and support (-2a, 2a).
inline double lowpass_sq(double t, double a) {
    const double u = std::abs(t) / a;
    if (u <= 1.0) return 1.0;
    if (u >= 2.0) return 0.0;
    return meyer_nu(2.0 - u);
}

inline int centered_index(int array_index, int n) {
    return array_index < n / 2 ? array_index : array_index - n;
}

inline int positive_mod(int v, int m) {
    const int r = v % m;
    return r < 0 ? r + m : r;
}

}  // namespace detail

/// Sparse description of one (scale, angle) window on the source DFT grid.
struct BandWindow {
    int scale = 0;  // 1-based
    int angle = 0;  // 0-based within the scale
    int rows = 0;   // wrapped rectangle extent
    int cols = 0;
    std::vector<std::uint32_t> spectrum_index;  // flat index into the DFT array
    std::vector<std::uint32_t> wrapped_index;   // flat index into the rows x cols grid
    std::vector<double> weight;                 // window value (not squared)
    std::shared_ptr<const FftPair> fft;
};

/// Radial x angular window family for one image geometry. Immutable once built.
class WindowFamily {
public:
    WindowFamily(WindowParams params, std::vector<std::vector<BandWindow>> scales,
                 std::shared_ptr<const FftPair> image_fft)
        : params_(params), scales_(std::move(scales)), image_fft_(std::move(image_fft)) {}

    const WindowParams& params() const { return params_; }
    int width() const { return params_.width; }
    int height() const { return params_.height; }
    int num_scales() const { return params_.num_scales; }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(params_.width) * params_.height;
    }

    /// Bands of scale j (1-based).
    const std::vector<BandWindow>& scale(int j) const {
        if (j < 1 || j > num_scales()) throw ArgumentError("scale index out of range");
        return scales_[static_cast<std::size_t>(j - 1)];
    }

    std::vector<int> band_counts() const {
        std::vector<int> counts;
        for (const auto& s : scales_) counts.push_back(static_cast<int>(s.size()));
        return counts;
    }

    const FftPair& image_fft() const { return *image_fft_; }

    /// Dense window on the DFT grid (row-major, FFT index order).
    std::vector<double> dense_window(int j, int l) const {
        const auto& bands = scale(j);
        if (l < 0 || l >= static_cast<int>(bands.size()))
            throw ArgumentError("angle index out of range");
        std::vector<double> w(pixel_count(), 0.0);
        const auto& b = bands[static_cast<std::size_t>(l)];
        for (std::size_t e = 0; e < b.weight.size(); ++e) w[b.spectrum_index[e]] = b.weight[e];
        return w;
    }

    /// Sum over all bands of |window|^2 at each DFT sample.
    std::vector<double> squared_sum() const {
        std::vector<double> s(pixel_count(), 0.0);
        for (const auto& bands : scales_)
            for (const auto& b : bands)
                for (std::size_t e = 0; e < b.weight.size(); ++e)
                    s[b.spectrum_index[e]] += b.weight[e] * b.weight[e];
        return s;
    }

    /// Total number of coefficients produced per transform.
    std::size_t coefficient_count() const {
        std::size_t n = 0;
        for (const auto& bands : scales_)
            for (const auto& b : bands) n += static_cast<std::size_t>(b.rows) * b.cols;
        return n;
    }

private:
    WindowParams params_;
    std::vector<std::vector<BandWindow>> scales_;
    std::shared_ptr<const FftPair> image_fft_;
};

namespace detail {

struct SupportPoint {
    int kr;  // centered row frequency
    int kc;  // centered column frequency
    std::uint32_t flat;
    double weight;
};

// Span of the support along `minor` for each value of `major`; returns
// (major extent, longest minor run).
template <typename Major, typename Minor>
std::pair<int, int> wrap_extent(const std::vector<SupportPoint>& pts, Major major, Minor minor) {
    std::map<int, std::pair<int, int>> runs;
    int lo = major(pts.front()), hi = lo;
    for (const auto& p : pts) {
        const int a = major(p), b = minor(p);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
        auto [it, inserted] = runs.try_emplace(a, b, b);
        if (!inserted) {
            it->second.first = std::min(it->second.first, b);
            it->second.second = std::max(it->second.second, b);
        }
    }
    int widest = 0;
    for (const auto& [_, r] : runs) widest = std::max(widest, r.second - r.first + 1);
    return {hi - lo + 1, widest};
}

inline BandWindow make_band(int scale, int angle, const std::vector<SupportPoint>& pts,
                            std::map<std::pair<int, int>, std::shared_ptr<const FftPair>>& plans) {
    BandWindow band;
    band.scale = scale;
    band.angle = angle;
    if (pts.empty()) throw ArgumentError("window band has empty support; image too small");

    const auto by_row = wrap_extent(pts, [](const SupportPoint& p) { return p.kr; },
                                    [](const SupportPoint& p) { return p.kc; });
    const auto by_col = wrap_extent(pts, [](const SupportPoint& p) { return p.kc; },
                                    [](const SupportPoint& p) { return p.kr; });
    const bool rows_major = static_cast<long>(by_row.first) * by_row.second <=
                            static_cast<long>(by_col.first) * by_col.second;
    band.rows = rows_major ? by_row.first : by_col.second;
    band.cols = rows_major ? by_row.second : by_col.first;

    band.spectrum_index.reserve(pts.size());
    band.wrapped_index.reserve(pts.size());
    band.weight.reserve(pts.size());
    for (const auto& p : pts) {
        const int r = positive_mod(p.kr, band.rows);
        const int c = positive_mod(p.kc, band.cols);
        band.spectrum_index.push_back(p.flat);
        band.wrapped_index.push_back(static_cast<std::uint32_t>(r * band.cols + c));
        band.weight.push_back(p.weight);
    }

    auto& plan = plans[{band.rows, band.cols}];
    if (!plan) plan = std::make_shared<const FftPair>(band.rows, band.cols);
    band.fft = plan;
    return band;
}

}  // namespace detail

/// Builds the window family for a width x height grid.
inline WindowFamily build_windows(int width, int height, int num_scales, int angles_coarse) {
    if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0)
        throw DimensionError("build_windows: extents must be positive and even");
    if (num_scales < 2) throw ArgumentError("build_windows: num_scales must be >= 2");
    if (angles_coarse < 8 || angles_coarse % 4 != 0)
        throw ArgumentError("build_windows: angles_coarse must be a multiple of 4, >= 8");

    using detail::SupportPoint;
    const int J = num_scales;
    const double pi = std::numbers::pi;

    // Squared low-pass profiles P_j^2 for j = 1..J-1 on the whole grid.
    std::vector<double> a(static_cast<std::size_t>(J), 0.0);
    for (int j = 1; j < J; ++j) a[static_cast<std::size_t>(j)] = (2.0 / 3.0) * std::ldexp(1.0, j - J);

    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::vector<double>> lowpass(static_cast<std::size_t>(J), std::vector<double>(n));
    std::vector<double> theta(n);
    for (int r = 0; r < height; ++r) {
        const int kr = detail::centered_index(r, height);
        const double wy = kr / (height / 2.0);
        for (int c = 0; c < width; ++c) {
            const int kc = detail::centered_index(c, width);
            const double wx = kc / (width / 2.0);
            const std::size_t i = static_cast<std::size_t>(r) * width + c;
            for (int j = 1; j < J; ++j) {
                const double aj = a[static_cast<std::size_t>(j)];
                lowpass[static_cast<std::size_t>(j)][i] =
                    detail::lowpass_sq(wx, aj) * detail::lowpass_sq(wy, aj);
            }
            theta[i] = std::atan2(wy, wx);
        }
    }

    std::map<std::pair<int, int>, std::shared_ptr<const FftPair>> plans;
    std::vector<std::vector<BandWindow>> scales(static_cast<std::size_t>(J));

    auto collect = [&](auto&& squared_at) {
        std::vector<SupportPoint> pts;
        for (int r = 0; r < height; ++r) {
            const int kr = detail::centered_index(r, height);
            for (int c = 0; c < width; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * width + c;
                const double w2 = squared_at(i);
                if (w2 > 0.0)
                    pts.push_back({kr, detail::centered_index(c, width),
                                   static_cast<std::uint32_t>(i), std::sqrt(w2)});
            }
        }
        return pts;
    };

    scales[0].push_back(detail::make_band(
        1, 0, collect([&](std::size_t i) { return lowpass[1][i]; }), plans));

    for (int j = 2; j < J; ++j) {
        const int na = num_angles(j, J, angles_coarse);
        const double sector = 2.0 * pi / na;
        const double half = sector / 2.0;
        const double eps = sector / 4.0;
        const auto& outer = lowpass[static_cast<std::size_t>(j)];
        const auto& inner = lowpass[static_cast<std::size_t>(j - 1)];
        for (int l = 0; l < na; ++l) {
            // Sector boundaries sit on multiples of `sector` offset by -pi/4, so the
            // cone diagonals are always boundaries; l + na/2 is the mirror of l.
            const double center = -pi / 4.0 + (l + 0.5) * sector;
            auto angular_sq = [&](double th) {
                double d = std::remainder(th - center, 2.0 * pi);
                d = std::abs(d);
                if (d <= half - eps) return 1.0;
                if (d >= half + eps) return 0.0;
                return detail::meyer_nu((half + eps - d) / (2.0 * eps));
            };
            scales[static_cast<std::size_t>(j - 1)].push_back(detail::make_band(
                j, l, collect([&](std::size_t i) {
                    const double radial = std::max(0.0, outer[i] - inner[i]);
                    return radial == 0.0 ? 0.0 : radial * angular_sq(theta[i]);
                }),
                plans));
        }
    }

    const auto& last = lowpass[static_cast<std::size_t>(J - 1)];
    scales[static_cast<std::size_t>(J - 1)].push_back(detail::make_band(
        J, 0, collect([&](std::size_t i) { return std::max(0.0, 1.0 - last[i]); }), plans));

    return WindowFamily(WindowParams{width, height, num_scales, angles_coarse}, std::move(scales),
                        std::make_shared<const FftPair>(height, width));
}

inline WindowFamily build_windows(const WindowParams& p) {
    return build_windows(p.width, p.height, p.num_scales, p.angles_coarse);
}

/// Complex coefficients of one (scale, angle) band.
struct CoefficientGrid {
    int rows = 0;
    int cols = 0;
    std::vector<Complex> values;

    Complex at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

struct ScaleBand {
    int scale_index = 0;  // 1-based
    std::vector<CoefficientGrid> bands;
};

/// Coefficients C^{j,l}_{m,n}: scales[j-1].bands[l].at(m, n).
struct CurveletDecomposition {
    std::vector<ScaleBand> scales;
    int source_width = 0;
    int source_height = 0;

    std::size_t coefficient_count() const {
        std::size_t n = 0;
        for (const auto& s : scales)
            for (const auto& b : s.bands) n += b.values.size();
        return n;
    }

    double energy() const {
        double e = 0.0;
        for (const auto& s : scales)
            for (const auto& b : s.bands)
                for (const auto& z : b.values) e += std::norm(z);
        return e;
    }
};

/// Real-valued raster returned by the inverse transform.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<double> values;
};

/// Process-wide count of forward transforms, for instrumentation.
inline std::atomic<std::uint64_t>& forward_transform_count() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

/// Forward transform of a row-major real array of the family's extent.
inline CurveletDecomposition fdct_forward(std::span<const double> pixels, const WindowFamily& windows) {
    if (pixels.size() != windows.pixel_count())
        throw DimensionError("fdct_forward: image extent does not match window family");
    forward_transform_count().fetch_add(1, std::memory_order_relaxed);

    std::vector<Complex> spectrum(pixels.begin(), pixels.end());
    windows.image_fft().forward(spectrum);

    CurveletDecomposition out;
    out.source_width = windows.width();
    out.source_height = windows.height();
    out.scales.resize(static_cast<std::size_t>(windows.num_scales()));
    for (int j = 1; j <= windows.num_scales(); ++j) {
        auto& dst = out.scales[static_cast<std::size_t>(j - 1)];
        dst.scale_index = j;
        for (const auto& band : windows.scale(j)) {
            CoefficientGrid grid{band.rows, band.cols,
                                 std::vector<Complex>(static_cast<std::size_t>(band.rows) * band.cols)};
            for (std::size_t e = 0; e < band.weight.size(); ++e)
                grid.values[band.wrapped_index[e]] = band.weight[e] * spectrum[band.spectrum_index[e]];
            band.fft->backward(grid.values);
            dst.bands.push_back(std::move(grid));
        }
    }
    return out;
}

inline CurveletDecomposition fdct_forward(const Image& img, const WindowFamily& windows) {
    if (img.width != windows.width() || img.height != windows.height())
        throw DimensionError("fdct_forward: image is " + std::to_string(img.width) + "x" +
                             std::to_string(img.height) + ", windows are " +
                             std::to_string(windows.width()) + "x" +
                             std::to_string(windows.height()));
    return fdct_forward(std::span<const double>(img.pixels), windows);
}

/// Adjoint of fdct_forward; with the partition of unity it is also the inverse.
/// Returns the complex reconstruction.
inline std::vector<Complex> fdct_adjoint(const CurveletDecomposition& coeffs,
                                         const WindowFamily& windows) {
    if (coeffs.scales.size() != static_cast<std::size_t>(windows.num_scales()))
        throw DimensionError("fdct_inverse: scale count mismatch");
    std::vector<Complex> spectrum(windows.pixel_count(), Complex{});
    std::vector<Complex> work;
    for (int j = 1; j <= windows.num_scales(); ++j) {
        const auto& src = coeffs.scales[static_cast<std::size_t>(j - 1)];
        const auto& bands = windows.scale(j);
        if (src.bands.size() != bands.size())
            throw DimensionError("fdct_inverse: band count mismatch at scale " + std::to_string(j));
        for (std::size_t l = 0; l < bands.size(); ++l) {
            const auto& band = bands[l];
            const auto& grid = src.bands[l];
            if (grid.rows != band.rows || grid.cols != band.cols ||
                grid.values.size() != static_cast<std::size_t>(band.rows) * band.cols)
                throw DimensionError("fdct_inverse: band extent mismatch");
            work = grid.values;
            band.fft->forward(work);
            for (std::size_t e = 0; e < band.weight.size(); ++e)
                spectrum[band.spectrum_index[e]] += band.weight[e] * work[band.wrapped_index[e]];
        }
    }
    windows.image_fft().backward(spectrum);
    return spectrum;
}

/// Real part of the adjoint, as a raster of the source extent.
inline Raster fdct_inverse(const CurveletDecomposition& coeffs, const WindowFamily& windows) {
    const auto z = fdct_adjoint(coeffs, windows);
    Raster out{windows.width(), windows.height(), std::vector<double>(z.size())};
    for (std::size_t i = 0; i < z.size(); ++i) out.values[i] = z[i].real();
    return out;
}

/// |C^{j,l}_{m,n}| for every band of scale j, angle-major then row-major.
inline std::vector<double> coefficient_magnitudes(const CurveletDecomposition& coeffs, int scale) {
    if (scale < 1 || scale > static_cast<int>(coeffs.scales.size()))
        throw ArgumentError("coefficient_magnitudes: scale " + std::to_string(scale) +
                            " out of range");
    const auto& s = coeffs.scales[static_cast<std::size_t>(scale - 1)];
    std::size_t n = 0;
    for (const auto& b : s.bands) n += b.values.size();
    std::vector<double> out;
    out.reserve(n);
    for (const auto& b : s.bands)
        for (const auto& z : b.values) out.push_back(std::abs(z));
    return out;
}

/// Length of coefficient_magnitudes(·, scale) for a given family.
inline std::size_t magnitude_length(const WindowFamily& windows, int scale) {
    std::size_t n = 0;
    for (const auto& b : windows.scale(scale)) n += static_cast<std::size_t>(b.rows) * b.cols;
    return n;
}

// Decomposition container:
//   "CFDC" u32 version=1 u32 width u32 height u32 num_scales
//   per scale: u32 num_bands; per band: u32 rows u32 cols,
//   then rows*cols (re, im) pairs as f64. All little-endian.
inline void write_decomposition(const CurveletDecomposition& d, std::ostream& os) {
    binary::Writer w(os);
    w.magic("CFDC");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(d.source_width));
    w.u32(static_cast<std::uint32_t>(d.source_height));
    w.u32(static_cast<std::uint32_t>(d.scales.size()));
    for (const auto& s : d.scales) {
        w.u32(static_cast<std::uint32_t>(s.bands.size()));
        for (const auto& b : s.bands) {
            w.u32(static_cast<std::uint32_t>(b.rows));
            w.u32(static_cast<std::uint32_t>(b.cols));
            for (const auto& z : b.values) {
                w.f64(z.real());
                w.f64(z.imag());
            }
        }
    }
    w.check();
}

inline CurveletDecomposition read_decomposition(std::istream& is) {
    binary::Reader r(is);
    r.expect_magic("CFDC");
    if (r.u32() != 1) throw FormatError("unsupported decomposition version");
    CurveletDecomposition d;
    d.source_width = static_cast<int>(r.u32());
    d.source_height = static_cast<int>(r.u32());
    const std::uint32_t ns = r.u32();
    if (ns > 64) throw FormatError("implausible scale count");
    for (std::uint32_t j = 0; j < ns; ++j) {
        ScaleBand s;
        s.scale_index = static_cast<int>(j + 1);
        const std::uint32_t nb = r.u32();
        if (nb > 4096) throw FormatError("implausible band count");
        for (std::uint32_t l = 0; l < nb; ++l) {
            CoefficientGrid g;
            g.rows = static_cast<int>(r.u32());
            g.cols = static_cast<int>(r.u32());
            const auto raw = r.f64s(2 * static_cast<std::size_t>(g.rows) * g.cols);
            g.values.resize(raw.size() / 2);
            for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = {raw[2 * i], raw[2 * i + 1]};
            s.bands.push_back(std::move(g));
        }
        d.scales.push_back(std::move(s));
    }
    return d;
}

inline void save_decomposition(const CurveletDecomposition& d, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    write_decomposition(d, os);
}

inline CurveletDecomposition load_decomposition(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return read_decomposition(is);
}

}  // namespace curveface::fdct
