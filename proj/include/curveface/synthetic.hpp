#pragma once

// Generated face-like benchmark: each class is a smooth random pattern
// (a handful of Gaussian bumps over a slow gradient); each sample is that
// pattern shifted by a few pixels with white noise at a fixed SNR.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "curveface/ensemble.hpp"
#include "curveface/imaging.hpp"

namespace curveface {

struct SyntheticSpec {
    int classes = 10;
    int per_class = 20;
    int width = 64;
    int height = 64;
    int max_shift = 2;
    double snr_db = 20.0;
    std::uint64_t seed = 1;
    int bumps = 6;
};

namespace detail {

// Base pattern for one class, scaled to [40, 215].
inline std::vector<double> synthetic_pattern(const SyntheticSpec& s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> px(static_cast<std::size_t>(s.width) * s.height, 0.0);
    const double gx = u(rng) - 0.5, gy = u(rng) - 0.5;
    struct Bump {
        double cx, cy, sx, sy, amp;
    };
    std::vector<Bump> bumps;
    for (int i = 0; i < s.bumps; ++i)
        bumps.push_back({u(rng) * s.width, u(rng) * s.height, 4.0 + 8.0 * u(rng), 4.0 + 8.0 * u(rng),
                         u(rng) < 0.5 ? -1.0 - u(rng) : 1.0 + u(rng)});
    for (int r = 0; r < s.height; ++r)
        for (int c = 0; c < s.width; ++c) {
            double v = gx * c / s.width + gy * r / s.height;
            for (const auto& b : bumps) {
                const double dx = (c - b.cx) / b.sx, dy = (r - b.cy) / b.sy;
                v += b.amp * std::exp(-0.5 * (dx * dx + dy * dy));
            }
            px[static_cast<std::size_t>(r) * s.width + c] = v;
        }
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    const double a = *lo, span = std::max(*hi - *lo, 1e-12);
    for (auto& v : px) v = 40.0 + 175.0 * (v - a) / span;
    return px;
}

}  // namespace detail

/// Labels are "s00", "s01", ...; images are grouped by class in generation order.
inline std::vector<LabeledImage> make_synthetic_dataset(const SyntheticSpec& s) {
    std::mt19937_64 rng(s.seed);
    std::vector<LabeledImage> out;
    for (int k = 0; k < s.classes; ++k) {
        const auto base = detail::synthetic_pattern(s, rng);
        double mean = 0.0;
        for (double v : base) mean += v;
        mean /= static_cast<double>(base.size());
        double power = 0.0;
        for (double v : base) power += (v - mean) * (v - mean);
        power /= static_cast<double>(base.size());
        const double noise_sd = std::sqrt(power / std::pow(10.0, s.snr_db / 10.0));

        std::uniform_int_distribution<int> shift(-s.max_shift, s.max_shift);
        std::normal_distribution<double> noise(0.0, noise_sd);
        char name[16];
        std::snprintf(name, sizeof name, "s%02d", k);
        for (int i = 0; i < s.per_class; ++i) {
            const int dx = shift(rng), dy = shift(rng);
            std::vector<double> px(base.size());
            for (int r = 0; r < s.height; ++r)
                for (int c = 0; c < s.width; ++c) {
                    const int sr = std::clamp(r - dy, 0, s.height - 1);
                    const int sc = std::clamp(c - dx, 0, s.width - 1);
                    const double v = base[static_cast<std::size_t>(sr) * s.width + sc] + noise(rng);
                    px[static_cast<std::size_t>(r) * s.width + c] = std::clamp(std::round(v), 0.0, 255.0);
                }
            out.push_back({Image(s.width, s.height, std::move(px)), name});
        }
    }
    return out;
}

}  // namespace curveface
