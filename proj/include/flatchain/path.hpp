#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace flatchain {

struct PathMeta {
    std::string generator;  // "fbm", "constant", "line", "circle", "table", ...
    std::uint64_t seed = 0;
    std::optional<double> hurst;
    std::string descriptor;  // free-form analytic descriptor summary
};

// A curve in R^d sampled uniformly on [0, T]: N+1 points at t_j = j*T/N.
class SampledPath {
 public:
    SampledPath(int dim, double horizon, std::vector<double> samples, PathMeta meta = {})
        : dim_(dim), horizon_(horizon), samples_(std::move(samples)), meta_(std::move(meta)) {
        require(dim_ >= 1, "SampledPath: dim must be >= 1");
        require(horizon_ > 0.0, "SampledPath: horizon must be positive");
        require(samples_.size() % static_cast<std::size_t>(dim_) == 0,
                "SampledPath: sample buffer size must be a multiple of dim");
        n_steps_ = static_cast<int>(samples_.size() / dim_) - 1;
        require(n_steps_ >= 2, "SampledPath: need at least N >= 2 steps");
        require(all_finite(samples_.data(), samples_.size()),
                "SampledPath: samples contain non-finite values");
    }

    int dim() const { return dim_; }
    double horizon() const { return horizon_; }
    int n_steps() const { return n_steps_; }
    double step() const { return horizon_ / n_steps_; }
    double time(int j) const { return horizon_ * j / n_steps_; }
    const double* point(int j) const { return samples_.data() + static_cast<std::size_t>(j) * dim_; }
    double coord(int j, int i) const { return samples_[static_cast<std::size_t>(j) * dim_ + i]; }
    const std::vector<double>& samples() const { return samples_; }
    const PathMeta& meta() const { return meta_; }

    // Piecewise-linear value at s in [0, T] (clamped outside).
    void value_at(double s, double* out) const {
        double u = std::clamp(s / step(), 0.0, static_cast<double>(n_steps_));
        int j = std::min(static_cast<int>(u), n_steps_ - 1);
        double w = u - j;
        const double* a = point(j);
        const double* b = point(j + 1);
        for (int i = 0; i < dim_; ++i) out[i] = a[i] + w * (b[i] - a[i]);
    }

 private:
    int dim_;
    double horizon_;
    int n_steps_;
    std::vector<double> samples_;  // (N+1) x dim, row-major
    PathMeta meta_;
};

// Constant extension of a path to [-1, T+1], with pads sampled at the base step.
// Values on the pads equal the matching endpoint, so the piecewise-linear value
// is just the clamped base value.
class ExtendedPath {
 public:
    explicit ExtendedPath(SampledPath base) : base_(std::move(base)) {
        pad_steps_ = static_cast<int>(std::ceil(1.0 / base_.step() - 1e-12));
        pad_steps_ = std::max(pad_steps_, 1);
    }

    const SampledPath& base() const { return base_; }
    int dim() const { return base_.dim(); }
    int pad_steps() const { return pad_steps_; }
    int first_index() const { return -pad_steps_; }
    int last_index() const { return base_.n_steps() + pad_steps_; }
    double time(int j) const { return base_.step() * j; }

    void sample(int j, double* out) const {
        int jc = std::clamp(j, 0, base_.n_steps());
        const double* p = base_.point(jc);
        for (int i = 0; i < dim(); ++i) out[i] = p[i];
    }

    double sample_coord(int j, int i) const {
        return base_.coord(std::clamp(j, 0, base_.n_steps()), i);
    }

    void value_at(double s, double* out) const { base_.value_at(s, out); }

 private:
    SampledPath base_;
    int pad_steps_;
};

inline ExtendedPath extend_constant(const SampledPath& p) { return ExtendedPath(p); }

struct HolderEstimate {
    double gamma = 0.0;
    double constant = 0.0;  // sup over tested pairs of |X_t - X_s| / |t-s|^gamma
    long pairs_tested = 0;
};

namespace detail {

// Dyadic-lag Holder estimator over an index range with an arbitrary accessor.
template <typename CoordAt>
HolderEstimate holder_dyadic(int dim, double step, int lo, int hi, double gamma, CoordAt at) {
    require(gamma > 0.0 && gamma <= 1.0, "estimate_holder: gamma must be in (0, 1]");
    HolderEstimate est;
    est.gamma = gamma;
    for (int lag = 1; lag <= hi - lo; lag *= 2) {
        double denom = std::pow(lag * step, gamma);
        for (int j = lo; j + lag <= hi; ++j) {
            double d2 = 0.0;
            for (int i = 0; i < dim; ++i) {
                double d = at(j + lag, i) - at(j, i);
                d2 += d * d;
            }
            est.constant = std::max(est.constant, std::sqrt(d2) / denom);
            ++est.pairs_tested;
        }
    }
    return est;
}

}  // namespace detail

inline HolderEstimate estimate_holder(const SampledPath& p, double gamma) {
    return detail::holder_dyadic(p.dim(), p.step(), 0, p.n_steps(), gamma,
                                 [&](int j, int i) { return p.coord(j, i); });
}

inline HolderEstimate estimate_holder(const ExtendedPath& e, double gamma) {
    return detail::holder_dyadic(e.dim(), e.base().step(), e.first_index(), e.last_index(), gamma,
                                 [&](int j, int i) { return e.sample_coord(j, i); });
}

struct AnalyticDescriptor {
    enum class Kind { Constant, Line, Circle, Table };
    Kind kind = Kind::Constant;
    int dim = 1;
    std::vector<double> vec;    // Constant: the value c; Line: the velocity v
    std::vector<double> table;  // Table: (N+1) x dim samples, row-major

    static AnalyticDescriptor constant(std::vector<double> c) {
        AnalyticDescriptor d;
        d.kind = Kind::Constant;
        d.dim = static_cast<int>(c.size());
        d.vec = std::move(c);
        return d;
    }
    static AnalyticDescriptor line(std::vector<double> v) {
        AnalyticDescriptor d;
        d.kind = Kind::Line;
        d.dim = static_cast<int>(v.size());
        d.vec = std::move(v);
        return d;
    }
    static AnalyticDescriptor circle() {
        AnalyticDescriptor d;
        d.kind = Kind::Circle;
        d.dim = 2;
        return d;
    }
    static AnalyticDescriptor from_table(int dim, std::vector<double> samples) {
        AnalyticDescriptor d;
        d.kind = Kind::Table;
        d.dim = dim;
        d.table = std::move(samples);
        return d;
    }
};

inline SampledPath generate_analytic(const AnalyticDescriptor& d, int n_steps, double horizon) {
    require(n_steps >= 2, "generate_analytic: n_steps must be >= 2");
    require(horizon > 0.0, "generate_analytic: horizon must be positive");
    PathMeta meta;
    std::vector<double> samples;
    switch (d.kind) {
        case AnalyticDescriptor::Kind::Constant: {
            require(!d.vec.empty(), "generate_analytic: constant descriptor needs a value");
            meta.generator = "constant";
            samples.resize(static_cast<std::size_t>(n_steps + 1) * d.vec.size());
            for (int j = 0; j <= n_steps; ++j)
                std::copy(d.vec.begin(), d.vec.end(), samples.begin() + static_cast<std::size_t>(j) * d.vec.size());
            break;
        }
        case AnalyticDescriptor::Kind::Line: {
            require(!d.vec.empty(), "generate_analytic: line descriptor needs a velocity");
            meta.generator = "line";
            int dim = static_cast<int>(d.vec.size());
            samples.resize(static_cast<std::size_t>(n_steps + 1) * dim);
            for (int j = 0; j <= n_steps; ++j) {
                double t = horizon * j / n_steps;
                for (int i = 0; i < dim; ++i) samples[static_cast<std::size_t>(j) * dim + i] = d.vec[i] * t;
            }
            break;
        }
        case AnalyticDescriptor::Kind::Circle: {
            meta.generator = "circle";
            samples.resize(static_cast<std::size_t>(n_steps + 1) * 2);
            for (int j = 0; j <= n_steps; ++j) {
                double t = horizon * j / n_steps;
                samples[2 * static_cast<std::size_t>(j)] = std::cos(t);
                samples[2 * static_cast<std::size_t>(j) + 1] = std::sin(t);
            }
            break;
        }
        case AnalyticDescriptor::Kind::Table: {
            meta.generator = "table";
            require(d.table.size() == static_cast<std::size_t>(n_steps + 1) * d.dim,
                    "generate_analytic: table size must be (n_steps+1)*dim");
            samples = d.table;
            break;
        }
        default:
            throw std::invalid_argument("generate_analytic: unknown descriptor");
    }
    return SampledPath(d.dim, horizon, std::move(samples), std::move(meta));
}

// Keep every `factor`-th sample (the piecewise-linear interpolant on the coarser grid).
inline SampledPath subsample(const SampledPath& p, int factor) {
    require(factor >= 1 && p.n_steps() % factor == 0, "subsample: factor must divide N");
    int n = p.n_steps() / factor;
    require(n >= 2, "subsample: too coarse");
    std::vector<double> s(static_cast<std::size_t>(n + 1) * p.dim());
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i < p.dim(); ++i) s[static_cast<std::size_t>(j) * p.dim() + i] = p.coord(j * factor, i);
    PathMeta meta = p.meta();
    meta.descriptor += "(subsampled x" + std::to_string(factor) + ")";
    return SampledPath(p.dim(), p.horizon(), std::move(s), std::move(meta));
}

// Time-reversed path: sample j becomes sample N-j.
inline SampledPath reverse_path(const SampledPath& p) {
    std::vector<double> s(p.samples().size());
    int n = p.n_steps(), d = p.dim();
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i < d; ++i) s[static_cast<std::size_t>(j) * d + i] = p.coord(n - j, i);
    PathMeta meta = p.meta();
    meta.descriptor += "(reversed)";
    return SampledPath(d, p.horizon(), std::move(s), std::move(meta));
}

}  // namespace flatchain
