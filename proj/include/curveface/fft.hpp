#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>

#include <fftw3.h>

#include "curveface/error.hpp"

namespace curveface {

using Complex = std::complex<double>;

namespace detail {
// FFTW's planner is not re-entrant; execution of an existing plan on fresh arrays is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// Unitary 2-D complex DFT of fixed extent (rows x cols, row-major).
/// Plans are created once and executed on caller-provided buffers, so one
/// plan may be shared across threads.
class Fft2d {
public:
    enum class Direction { forward, backward };

    Fft2d(int rows, int cols, Direction dir) : rows_(rows), cols_(cols) {
        if (rows <= 0 || cols <= 0) throw DimensionError("Fft2d: empty extent");
        std::lock_guard lock(detail::fftw_planner_mutex());
        // FFTW_ESTIMATE leaves the scratch arrays untouched.
        auto* scratch = fftw_alloc_complex(static_cast<std::size_t>(rows) * cols);
        plan_ = fftw_plan_dft_2d(rows, cols, scratch, scratch,
                                 dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(scratch);
        if (plan_ == nullptr) throw std::runtime_error("fftw planning failed");
    }

    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    ~Fft2d() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return static_cast<std::size_t>(rows_) * cols_; }

    /// In-place transform scaled by 1/sqrt(rows*cols).
    void operator()(std::span<Complex> data) const {
        if (data.size() != size()) throw DimensionError("Fft2d: buffer size mismatch");
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(plan_, p, p);
        const double scale = 1.0 / std::sqrt(static_cast<double>(size()));
        for (auto& z : data) z *= scale;
    }

    /// In-place transform without normalization; used for timing baselines.
    void execute_raw(std::span<Complex> data) const {
        if (data.size() != size()) throw DimensionError("Fft2d: buffer size mismatch");
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(plan_, p, p);
    }

private:
    int rows_;
    int cols_;
    fftw_plan plan_ = nullptr;
};

/// Forward/backward plan pair for one extent.
struct FftPair {
    FftPair(int rows, int cols)
        : forward(rows, cols, Fft2d::Direction::forward),
          backward(rows, cols, Fft2d::Direction::backward) {}
    Fft2d forward;
    Fft2d backward;
};

}  // namespace curveface
