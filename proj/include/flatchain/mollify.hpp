#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "common.hpp"
#include "kernel.hpp"
#include "path.hpp"

namespace flatchain {

// Below this smoothing scale the kernel sees too few samples for the convolution
// quadrature to mean anything; the alpha -> 0 limit is reached by extrapolation.
inline double alpha_floor(const SampledPath& p) { return 4.0 * p.step(); }

struct SheetPoint {
    double t = 0.0;
    double alpha = 0.0;
    std::vector<double> value;   // X_{t,alpha}
    std::vector<double> dt;      // time partial
    std::vector<double> dalpha;  // scale partial
};

namespace detail {

// One pass of the smoothing convolution and its two partials at (t, alpha).
//
//   value(t,a)  = int eta_a(t-s) Xt(s) ds
//   dt(t,a)     = (1/a^2) int eta'((t-s)/a) (Xt(s) - Xt(t)) ds
//   dalpha(t,a) = int [-(1/a^2) eta((t-s)/a) - ((t-s)/a^3) eta'((t-s)/a)] (Xt(s) - Xt(t)) ds
//
// Quadrature: composite Simpson on the partition of [t-a, t+a] cut at sample nodes,
// the two support endpoints, and kernel kink preimages. Each segment's integrand is
// a polynomial of degree <= 3 (piecewise-quadratic kernel times piecewise-linear
// path), so the rule is exact for the sampled path's linear interpolant. Kernel
// pieces are selected per segment, which realizes one-sided kink evaluation.
struct ConvolutionResult {
    std::vector<double> value, dt, dalpha;
};

inline ConvolutionResult convolve_all(const ExtendedPath& ext, const MollifierKernel& k, double t,
                                      double alpha) {
    const SampledPath& base = ext.base();
    const int d = base.dim();
    const double h = base.step();
    const double a = t - alpha, b = t + alpha;

    // breakpoints in s
    std::vector<double> nodes;
    nodes.push_back(a);
    nodes.push_back(b);
    {
        int j0 = static_cast<int>(std::ceil(a / h - 1e-12));
        int j1 = static_cast<int>(std::floor(b / h + 1e-12));
        for (int j = j0; j <= j1; ++j) nodes.push_back(j * h);
        for (double rk : k.kinks()) nodes.push_back(t - alpha * rk);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(),
                            [&](double x, double y) { return std::abs(x - y) < 1e-13 * alpha; }),
                nodes.end());

    std::vector<double> xt(d);
    ext.value_at(t, xt.data());

    ConvolutionResult out;
    out.value.assign(d, 0.0);
    out.dt.assign(d, 0.0);
    out.dalpha.assign(d, 0.0);

    const double inv_a = 1.0 / alpha;
    const double inv_a2 = inv_a * inv_a;
    std::vector<double> xs(3 * d);

    for (std::size_t seg = 0; seg + 1 < nodes.size(); ++seg) {
        double s0 = nodes[seg], s1 = nodes[seg + 1];
        double len = s1 - s0;
        if (len <= 0.0) continue;
        double sm = 0.5 * (s0 + s1);
        double rs[3] = {(t - s0) * inv_a, (t - sm) * inv_a, (t - s1) * inv_a};
        std::size_t piece = k.piece_index(rs[1]);
        ext.value_at(s0, xs.data());
        ext.value_at(sm, xs.data() + d);
        ext.value_at(s1, xs.data() + 2 * d);
        static constexpr double simpson_w[3] = {1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0};
        for (int q = 0; q < 3; ++q) {
            double r = rs[q];
            double eta = k.eval_on_piece(piece, r);
            double etap = k.deriv_on_piece(piece, r);
            double w_value = eta * inv_a;
            double w_dt = etap * inv_a2;
            double w_da = -(eta + r * etap) * inv_a2;
            double cw = simpson_w[q] * len;
            const double* x = xs.data() + q * d;
            for (int i = 0; i < d; ++i) {
                double centered = x[i] - xt[i];
                out.value[i] += cw * w_value * x[i];
                out.dt[i] += cw * w_dt * centered;
                out.dalpha[i] += cw * w_da * centered;
            }
        }
    }
    return out;
}

inline void check_smooth_args(const SampledPath& base, double t, double alpha) {
    require(t >= 0.0 && t <= base.horizon(), "mollify: t must lie in [0, T]");
    require(alpha <= 1.0, "mollify: alpha must be <= 1");
    if (alpha < alpha_floor(base))
        throw std::invalid_argument("mollify: alpha below the resolution floor (4 sample steps)");
}

// The same quadrature as convolve_all, specialized to sample-aligned t: weights
// collapse to a fixed integer-offset stencil per (kernel, alpha, h), so a whole
// sheet row costs three dot products per node. Centered forms are folded into the
// offset-0 coefficient.
class ConvolutionStencil {
 public:
    ConvolutionStencil(const MollifierKernel& k, double alpha, double h) : alpha_(alpha) {
        span_ = static_cast<int>(std::floor(alpha / h + 1e-9));
        int width = 2 * span_ + 3;
        off0_ = span_ + 1;  // array index of sample offset 0
        cv_.assign(width, 0.0);
        cdt_.assign(width, 0.0);
        cda_.assign(width, 0.0);

        std::vector<double> rnodes{-1.0, 1.0};
        for (double rk : k.kinks()) rnodes.push_back(rk);
        for (int m = -span_; m <= span_; ++m) {
            double r = m * h / alpha;
            if (r > -1.0 && r < 1.0) rnodes.push_back(r);
        }
        std::sort(rnodes.begin(), rnodes.end());
        rnodes.erase(std::unique(rnodes.begin(), rnodes.end(),
                                 [](double x, double y) { return std::abs(x - y) < 1e-14; }),
                     rnodes.end());

        const double inv_a = 1.0 / alpha;
        for (std::size_t seg = 0; seg + 1 < rnodes.size(); ++seg) {
            double r0 = rnodes[seg], r1 = rnodes[seg + 1];
            double len = r1 - r0;
            if (len <= 0.0) continue;
            double rm = 0.5 * (r0 + r1);
            std::size_t piece = k.piece_index(rm);
            const double rq[3] = {r0, rm, r1};
            static constexpr double simpson_w[3] = {1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0};
            for (int q = 0; q < 3; ++q) {
                double r = rq[q];
                double eta = k.eval_on_piece(piece, r);
                double etap = k.deriv_on_piece(piece, r);
                double cw = simpson_w[q] * len;
                deposit(-alpha * r / h, cw * eta, cw * etap * inv_a, -cw * (eta + r * etap) * inv_a);
            }
        }
        // centered integrands: subtract the total weight at the base point
        double sdt = 0.0, sda = 0.0;
        for (double c : cdt_) sdt += c;
        for (double c : cda_) sda += c;
        cdt_[off0_] -= sdt;
        cda_[off0_] -= sda;
    }

    int span() const { return span_ + 1; }
    double alpha() const { return alpha_; }

    // Evaluate value/dt/dalpha at sample index j of the extended path.
    void apply(const ExtendedPath& ext, int j, double* value, double* dt, double* dalpha) const {
        const SampledPath& base = ext.base();
        const int d = base.dim();
        const int n = base.n_steps();
        const double* raw = base.samples().data();
        for (int i = 0; i < d; ++i) value[i] = dt[i] = dalpha[i] = 0.0;
        const int w = static_cast<int>(cv_.size());
        if (j - off0_ >= 0 && j - off0_ + w - 1 <= n) {
            const double* row = raw + static_cast<std::size_t>(j - off0_) * d;
            for (int u = 0; u < w; ++u, row += d) {
                double a = cv_[u], b = cdt_[u], c = cda_[u];
                for (int i = 0; i < d; ++i) {
                    value[i] += a * row[i];
                    dt[i] += b * row[i];
                    dalpha[i] += c * row[i];
                }
            }
        } else {
            for (int u = 0; u < w; ++u) {
                int jj = std::clamp(j - off0_ + u, 0, n);
                const double* row = raw + static_cast<std::size_t>(jj) * d;
                double a = cv_[u], b = cdt_[u], c = cda_[u];
                for (int i = 0; i < d; ++i) {
                    value[i] += a * row[i];
                    dt[i] += b * row[i];
                    dalpha[i] += c * row[i];
                }
            }
        }
    }

 private:
    void deposit(double u, double wv, double wdt, double wda) {
        double shifted = u + off0_;
        double lo = std::floor(shifted);
        double frac = shifted - lo;
        int i0 = static_cast<int>(lo);
        if (frac < 1e-9) {
            add(i0, 1.0, wv, wdt, wda);
        } else if (frac > 1.0 - 1e-9) {
            add(i0 + 1, 1.0, wv, wdt, wda);
        } else {
            add(i0, 1.0 - frac, wv, wdt, wda);
            add(i0 + 1, frac, wv, wdt, wda);
        }
    }

    void add(int idx, double share, double wv, double wdt, double wda) {
        require(idx >= 0 && idx < static_cast<int>(cv_.size()), "ConvolutionStencil: offset overflow");
        cv_[idx] += share * wv;
        cdt_[idx] += share * wdt;
        cda_[idx] += share * wda;
    }

    double alpha_;
    int span_ = 0;
    int off0_ = 0;
    std::vector<double> cv_, cdt_, cda_;
};

}  // namespace detail

inline std::vector<double> smooth_value(const ExtendedPath& ext, const MollifierKernel& k, double t,
                                        double alpha) {
    detail::check_smooth_args(ext.base(), t, alpha);
    return detail::convolve_all(ext, k, t, alpha).value;
}

inline std::vector<double> smooth_dt(const ExtendedPath& ext, const MollifierKernel& k, double t,
                                     double alpha) {
    detail::check_smooth_args(ext.base(), t, alpha);
    return detail::convolve_all(ext, k, t, alpha).dt;
}

inline std::vector<double> smooth_dalpha(const ExtendedPath& ext, const MollifierKernel& k, double t,
                                         double alpha) {
    detail::check_smooth_args(ext.base(), t, alpha);
    return detail::convolve_all(ext, k, t, alpha).dalpha;
}

// All three fields at once (shares one quadrature pass).
inline SheetPoint smooth_point(const ExtendedPath& ext, const MollifierKernel& k, double t,
                               double alpha) {
    detail::check_smooth_args(ext.base(), t, alpha);
    auto conv = detail::convolve_all(ext, k, t, alpha);
    SheetPoint p;
    p.t = t;
    p.alpha = alpha;
    p.value = std::move(conv.value);
    p.dt = std::move(conv.dt);
    p.dalpha = std::move(conv.dalpha);
    return p;
}

}  // namespace flatchain
