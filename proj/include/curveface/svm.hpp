#pragma once

// Linear soft-margin SVM trained in the primal and the one-against-all
// multiclass wrapper.
//
// Objective: F(w, b) = 1/2 |w|^2 + C sum_n max(0, 1 - y_n (w.x_n + b)).
// Each epoch performs an exact line minimization along every coordinate
// (weights, then bias) followed by one along the negative subgradient.
// Each 1-D problem is a convex piecewise quadratic solved exactly by
// sweeping its breakpoints, so F never increases from one step to the next.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curveface/binary_io.hpp"
#include "curveface/error.hpp"
#include "curveface/knn.hpp"

namespace curveface {

struct SvmOptions {
    double C = 1.0;
    int max_epochs = 1000;
    double tolerance = 1e-6;  // relative objective decrease per epoch
};

struct BinarySvm {
    std::vector<double> w;
    double b = 0.0;
    bool converged = false;
    int epochs = 0;
    std::vector<double> objective_history;  // F before the first epoch, then after each

    double decision(std::span<const double> x) const {
        if (x.size() != w.size()) throw DimensionError("svm decision: length mismatch");
        double s = b;
        for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
        return s;
    }
};

namespace detail {

class HingeProblem {
public:
    HingeProblem(std::vector<const std::vector<double>*> x, std::vector<double> y, double C)
        : x_(std::move(x)), y_(std::move(y)), C_(C), w_(x_.front()->size(), 0.0), margin_(y_.size(), 0.0) {}

    std::size_t dim() const { return w_.size(); }

    double objective() const {
        double reg = 0.0;
        for (double v : w_) reg += v * v;
        double loss = 0.0;
        for (double m : margin_) loss += std::max(0.0, 1.0 - m);
        return 0.5 * reg + C_ * loss;
    }

    void coordinate_step(std::size_t i) {
        std::vector<double> s(y_.size());
        for (std::size_t n = 0; n < y_.size(); ++n) s[n] = y_[n] * (*x_[n])[i];
        const double t = line_minimum(1.0, w_[i], s);
        if (t == 0.0) return;
        const double before = objective();
        w_[i] += t;
        shift_margins(s, t);
        if (objective() > before) {  // rounding guard
            w_[i] -= t;
            shift_margins(s, -t);
        }
    }

    void bias_step() {
        const double t = line_minimum(0.0, 0.0, y_);
        if (t == 0.0) return;
        const double before = objective();
        b_ += t;
        shift_margins(y_, t);
        if (objective() > before) {
            b_ -= t;
            shift_margins(y_, -t);
        }
    }

    // Line search along the negative of the subgradient that takes
    // hinge terms with margin < 1 as active.
    void subgradient_step() {
        std::vector<double> v = w_;
        for (double& e : v) e = -e;
        double vb = 0.0;
        for (std::size_t n = 0; n < y_.size(); ++n) {
            if (margin_[n] >= 1.0) continue;
            const auto& xn = *x_[n];
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += C_ * y_[n] * xn[i];
            vb += C_ * y_[n];
        }
        double vv = 0.0, wv = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            vv += v[i] * v[i];
            wv += w_[i] * v[i];
        }
        if (vv == 0.0 && vb == 0.0) return;
        std::vector<double> s(y_.size());
        for (std::size_t n = 0; n < y_.size(); ++n) {
            double dot = vb;
            const auto& xn = *x_[n];
            for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * xn[i];
            s[n] = y_[n] * dot;
        }
        const double t = line_minimum(vv, wv, s);
        if (t == 0.0) return;
        const double before = objective();
        const auto saved_w = w_;
        const auto saved_m = margin_;
        const double saved_b = b_;
        for (std::size_t i = 0; i < v.size(); ++i) w_[i] += t * v[i];
        b_ += t * vb;
        shift_margins(s, t);
        if (objective() > before) {
            w_ = saved_w;
            margin_ = saved_m;
            b_ = saved_b;
        }
    }

    const std::vector<double>& w() const { return w_; }
    double b() const { return b_; }

private:
    void shift_margins(const std::vector<double>& s, double t) {
        for (std::size_t n = 0; n < margin_.size(); ++n) margin_[n] += t * s[n];
    }

    // argmin_t  1/2 A t^2 + B t + C sum_n max(0, 1 - margin_n - t s_n)
    double line_minimum(double A, double B, const std::vector<double>& s) const {
        struct Kink {
            double t;
            double drop;  // decrease of the active slope sum when t passes this point
        };
        std::vector<Kink> kinks;
        double active = 0.0;  // sum of s_n over terms active as t -> -infinity
        for (std::size_t n = 0; n < s.size(); ++n) {
            if (s[n] == 0.0) continue;
            kinks.push_back({(1.0 - margin_[n]) / s[n], std::abs(s[n])});
            if (s[n] > 0.0) active += s[n];
        }
        std::sort(kinks.begin(), kinks.end(), [](const Kink& a, const Kink& b) { return a.t < b.t; });

        double lo = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i <= kinks.size(); ++i) {
            const double hi = i < kinks.size() ? kinks[i].t : std::numeric_limits<double>::infinity();
            if (std::isfinite(lo) && A * lo + B - C_ * active >= 0.0) return lo;
            if (A > 0.0) {
                const double t = (C_ * active - B) / A;
                if (t <= hi) return std::isfinite(lo) ? std::max(t, lo) : t;
            } else if (B - C_ * active == 0.0) {
                return std::clamp(0.0, lo, hi);
            }
            if (i < kinks.size()) active -= kinks[i].drop;
            lo = hi;
        }
        return 0.0;  // unbounded below along this direction; stay put
    }

    std::vector<const std::vector<double>*> x_;
    std::vector<double> y_;
    double C_;
    std::vector<double> w_;
    double b_ = 0.0;
    std::vector<double> margin_;  // y_n (w.x_n + b)
};

inline bool all_finite(const std::vector<std::vector<double>>& pts) {
    for (const auto& p : pts)
        for (double v : p)
            if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace detail

inline BinarySvm svm_train_binary(const std::vector<std::vector<double>>& positives,
                                  const std::vector<std::vector<double>>& negatives,
                                  const SvmOptions& opt = {}) {
    if (positives.empty() || negatives.empty())
        throw ArgumentError("svm_train_binary: both classes need at least one sample");
    if (!(opt.C > 0.0) || !std::isfinite(opt.C)) throw ArgumentError("svm_train_binary: C must be positive");
    if (opt.max_epochs < 1) throw ArgumentError("svm_train_binary: max_epochs must be >= 1");
    const std::size_t d = positives.front().size();
    for (const auto* group : {&positives, &negatives})
        for (const auto& p : *group)
            if (p.size() != d) throw DimensionError("svm_train_binary: unequal vector lengths");
    if (!detail::all_finite(positives) || !detail::all_finite(negatives))
        throw ArgumentError("svm_train_binary: non-finite input");

    std::vector<const std::vector<double>*> x;
    std::vector<double> y;
    for (const auto& p : positives) {
        x.push_back(&p);
        y.push_back(1.0);
    }
    for (const auto& p : negatives) {
        x.push_back(&p);
        y.push_back(-1.0);
    }
    detail::HingeProblem problem(std::move(x), std::move(y), opt.C);

    BinarySvm out;
    double prev = problem.objective();
    out.objective_history.push_back(prev);
    for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
        for (std::size_t i = 0; i < problem.dim(); ++i) problem.coordinate_step(i);
        problem.bias_step();
        problem.subgradient_step();
        const double f = problem.objective();
        out.objective_history.push_back(f);
        out.epochs = epoch;
        if (prev - f <= opt.tolerance * std::max(prev, std::numeric_limits<double>::min())) {
            out.converged = true;
            break;
        }
        prev = f;
    }
    out.w = problem.w();
    out.b = problem.b();
    return out;
}

/// Per-feature z-score statistics from a training set.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;  // standard deviation, 1 where it vanishes

    static Standardizer fit(const std::vector<std::vector<double>>& points) {
        Standardizer s;
        const std::size_t d = points.empty() ? 0 : points.front().size();
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 0.0);
        for (const auto& p : points)
            for (std::size_t i = 0; i < d; ++i) s.mean[i] += p[i];
        for (double& m : s.mean) m /= static_cast<double>(points.size());
        for (const auto& p : points)
            for (std::size_t i = 0; i < d; ++i) s.scale[i] += (p[i] - s.mean[i]) * (p[i] - s.mean[i]);
        for (double& v : s.scale) {
            v = std::sqrt(v / static_cast<double>(points.size()));
            if (!(v > 0.0)) v = 1.0;
        }
        return s;
    }

    std::vector<double> apply(std::span<const double> x) const {
        if (x.size() != mean.size()) throw DimensionError("standardize: length mismatch");
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / scale[i];
        return out;
    }
};

struct OaaPrediction {
    Label label;
    bool accepted = false;  // exactly one class produced a positive decision value
    std::vector<double> decision_values;  // in classes() order
};

/// One-against-all linear SVM over standardized inputs.
class OaaSvm {
public:
    OaaSvm() = default;
    OaaSvm(Standardizer standardizer, std::vector<Label> classes, std::vector<BinarySvm> machines, double C)
        : standardizer_(std::move(standardizer)), classes_(std::move(classes)),
          machines_(std::move(machines)), C_(C) {}

    static OaaSvm train(const LabeledSet& data, const SvmOptions& opt = {}) {
        data.validate();
        auto standardizer = Standardizer::fit(data.points);
        std::vector<std::vector<double>> z;
        z.reserve(data.size());
        for (const auto& p : data.points) z.push_back(standardizer.apply(p));

        auto classes = data.classes();
        std::vector<BinarySvm> machines;
        for (const auto& c : classes) {
            std::vector<std::vector<double>> pos, neg;
            for (std::size_t i = 0; i < z.size(); ++i) (data.labels[i] == c ? pos : neg).push_back(z[i]);
            if (neg.empty()) {
                // Single-class model: constant positive decision.
                BinarySvm m;
                m.w.assign(data.dim(), 0.0);
                m.b = 1.0;
                m.converged = true;
                machines.push_back(std::move(m));
            } else {
                machines.push_back(svm_train_binary(pos, neg, opt));
            }
        }
        return OaaSvm(std::move(standardizer), std::move(classes), std::move(machines), opt.C);
    }

    const std::vector<Label>& classes() const { return classes_; }
    const std::vector<BinarySvm>& machines() const { return machines_; }
    const Standardizer& standardizer() const { return standardizer_; }
    double C() const { return C_; }
    std::size_t dim() const { return standardizer_.mean.size(); }

    bool all_converged() const {
        return std::all_of(machines_.begin(), machines_.end(), [](const BinarySvm& m) { return m.converged; });
    }

    OaaPrediction predict(std::span<const double> x) const {
        if (x.size() != dim())
            throw DimensionError("oaa_predict: query length " + std::to_string(x.size()) +
                                 " != training dimension " + std::to_string(dim()));
        const auto z = standardizer_.apply(x);
        OaaPrediction out;
        int positive = 0;
        std::size_t best = 0;
        for (std::size_t c = 0; c < machines_.size(); ++c) {
            const double v = machines_[c].decision(z);
            out.decision_values.push_back(v);
            if (v > 0.0) ++positive;
            if (v > out.decision_values[best]) best = c;
        }
        out.label = classes_[best];
        out.accepted = positive == 1;
        return out;
    }

private:
    Standardizer standardizer_;
    std::vector<Label> classes_;
    std::vector<BinarySvm> machines_;
    double C_ = 1.0;
};

inline OaaPrediction oaa_predict(const OaaSvm& model, std::span<const double> x) { return model.predict(x); }

}  // namespace curveface
