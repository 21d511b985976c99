#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "common.hpp"
#include "forms.hpp"
#include "path.hpp"

namespace flatchain {

// Partition-sum evaluation point: left is Ito, midpoint is Stratonovich.
enum class RiemannScheme { Left, Right, Midpoint };

inline const char* scheme_name(RiemannScheme s) {
    switch (s) {
        case RiemannScheme::Left: return "left";
        case RiemannScheme::Right: return "right";
        default: return "midpoint";
    }
}

inline RiemannScheme scheme_by_name(const std::string& s) {
    if (s == "left" || s == "ito") return RiemannScheme::Left;
    if (s == "right") return RiemannScheme::Right;
    if (s == "midpoint" || s == "stratonovich") return RiemannScheme::Midpoint;
    throw std::invalid_argument("unknown Riemann scheme: " + s);
}

// sum_j <w_j, X_{t_{j+stride}} - X_{t_j}> with w_j = phi at the scheme's point.
inline double riemann_sum(const SampledPath& p, const OneForm& phi, RiemannScheme scheme,
                          int stride = 1) {
    require(phi.dim() == p.dim(), "riemann_sum: form dimension mismatch");
    require(stride >= 1 && p.n_steps() % stride == 0, "riemann_sum: stride must divide N");
    const int d = p.dim();
    std::vector<double> wl(d), wr(d);
    double s = 0.0;
    for (int j = 0; j + stride <= p.n_steps(); j += stride) {
        const double* a = p.point(j);
        const double* b = p.point(j + stride);
        double term = 0.0;
        switch (scheme) {
            case RiemannScheme::Left:
                phi.eval(a, wl.data());
                for (int i = 0; i < d; ++i) term += wl[i] * (b[i] - a[i]);
                break;
            case RiemannScheme::Right:
                phi.eval(b, wr.data());
                for (int i = 0; i < d; ++i) term += wr[i] * (b[i] - a[i]);
                break;
            case RiemannScheme::Midpoint:
                phi.eval(a, wl.data());
                phi.eval(b, wr.data());
                for (int i = 0; i < d; ++i) term += 0.5 * (wl[i] + wr[i]) * (b[i] - a[i]);
                break;
        }
        s += term;
    }
    return s;
}

struct YoungValue {
    double value = 0.0;
    double error_estimate = 0.0;
    bool monotone = true;  // refinement gaps decreased; otherwise the finest sum is returned
};

// Midpoint sums at strides {4,2,1} with Richardson extrapolation assuming the
// error scales like stride^(2*gamma - 1).
inline YoungValue young_value(const SampledPath& p, const OneForm& phi, double gamma) {
    require(p.n_steps() % 8 == 0, "young_value: N must be a multiple of 8");
    require(gamma > 0.5 && gamma <= 1.0, "young_value: gamma must lie in (1/2, 1]");
    double s4 = riemann_sum(p, phi, RiemannScheme::Midpoint, 4);
    double s2 = riemann_sum(p, phi, RiemannScheme::Midpoint, 2);
    double s1 = riemann_sum(p, phi, RiemannScheme::Midpoint, 1);
    double gap_coarse = std::abs(s2 - s4);
    double gap_fine = std::abs(s1 - s2);
    YoungValue out;
    if (gap_fine > gap_coarse && gap_fine > 1e-14 * (1.0 + std::abs(s1))) {
        out.value = s1;
        out.error_estimate = 2.0 * std::max(gap_fine, gap_coarse);
        out.monotone = false;
        return out;
    }
    double rate = std::pow(2.0, 2.0 * gamma - 1.0);
    out.value = s1 + (s1 - s2) / (rate - 1.0);
    out.error_estimate = std::abs(out.value - s1);
    return out;
}

// Forward Ito sum plus the backward-time Ito sum of the reversed path, combined
// increment by increment; the pairing makes the discrete identity
// lyons_zheng_value == midpoint sum hold up to rounding.
inline double lyons_zheng_value(const SampledPath& p, const OneForm& phi) {
    require(phi.dim() == p.dim(), "lyons_zheng_value: form dimension mismatch");
    const int d = p.dim();
    std::vector<double> wf(d), wb(d);
    double s = 0.0;
    for (int j = 0; j < p.n_steps(); ++j) {
        const double* a = p.point(j);
        const double* b = p.point(j + 1);
        // forward half at t_j; backward half is the reversed-path left sum term
        // for the same increment, evaluated at t_{j+1} with the sign flipped twice
        phi.eval(a, wf.data());
        phi.eval(b, wb.data());
        double fwd = 0.0, bwd = 0.0;
        for (int i = 0; i < d; ++i) {
            fwd += wf[i] * (b[i] - a[i]);
            bwd += wb[i] * (b[i] - a[i]);
        }
        s += 0.5 * (fwd + bwd);
    }
    return s;
}

// F(X_T) - F(X_0).
inline double gradient_exact(const std::function<double(const double*)>& potential,
                             const SampledPath& p) {
    return potential(p.point(p.n_steps())) - potential(p.point(0));
}

}  // namespace flatchain
