#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "forms.hpp"
#include "sheet.hpp"

namespace flatchain {

struct ChainTerms {
    double t_dphi = 0.0;      // two-current against d(phi) over the strip
    double top_edge = 0.0;    // curve integral at alpha = 1
    double right_edge = 0.0;  // alpha-edge at t = T
    double left_edge = 0.0;   // alpha-edge at t = 0
};

struct ChainIntegralResult {
    double value_at_alpha_min = 0.0;  // curve integral at the alpha_min level
    ChainTerms terms;
    double stokes_residual = 0.0;
    double residual_tolerance = 0.0;
    bool extrapolated = false;
    double extrapolated_value = 0.0;  // alpha -> 0 estimate; value_at_alpha_min if the fit is rejected
    double extrapolation_exponent = 0.0;
    double fit_slope = 0.0;
    double fit_residual = 0.0;
    std::vector<double> alpha_sequence;  // all alpha nodes
    std::vector<double> curve_values;    // smoothed curve integral per node
};

struct ChainOptions {
    // Extrapolation exponent for the alpha -> 0 fit. Unset selects 2*gamma - 1
    // (the two-current tail rate); the d = 1 graph lift instead decays at the
    // edge rate gamma, since its only wedge slots pair dalpha with the smooth
    // time direction.
    std::optional<double> exponent;
    int fit_window = 4;
};

// Classical Riemann integral of the smoothed curve at a grid alpha-node:
// int_0^T <phi(X_{t,alpha}), dX_{t,alpha}/dt> dt by trapezoid on the cached row.
inline double smoothed_curve_integral(const SheetGrid& g, const OneForm& phi, double alpha) {
    require(phi.dim() == g.dim(), "smoothed_curve_integral: form dimension mismatch");
    int m = g.alpha_index(alpha);
    const int nt = g.n_t(), d = g.dim();
    std::vector<double> comp(d);
    double s = 0.0;
    for (int j = 0; j < nt; ++j) {
        phi.eval(g.value(m, j), comp.data());
        s += detail::trap_w(j, nt) * dot(comp.data(), g.dt(m, j), d);
    }
    return s * g.t_step();
}

// Graph-lift variant: phi on R^{d+1} (slot 0 = time), picked up by the tangent (1, dt).
inline double smoothed_curve_integral_graph(const SheetGrid& g, const OneForm& phi, double alpha) {
    require(phi.dim() == g.dim() + 1, "smoothed_curve_integral_graph: form dimension mismatch");
    int m = g.alpha_index(alpha);
    const int nt = g.n_t(), d = g.dim();
    std::vector<double> comp(d + 1), pt(d + 1);
    double s = 0.0;
    for (int j = 0; j < nt; ++j) {
        pt[0] = g.path().time(j);
        std::copy(g.value(m, j), g.value(m, j) + d, pt.begin() + 1);
        phi.eval(pt.data(), comp.data());
        s += detail::trap_w(j, nt) * (comp[0] + dot(comp.data() + 1, g.dt(m, j), d));
    }
    return s * g.t_step();
}

namespace detail {

// alpha-edge integral at a fixed t-node: trapezoid over the alpha nodes of
// <phi(point), dalpha>; the graph variant evaluates phi at (t, X) and pairs
// only the spatial slots (the tangent is (0, dalpha)).
inline double alpha_edge(const SheetGrid& g, const OneForm& phi, int j, bool graph) {
    const int d = g.dim();
    std::vector<double> comp(phi.dim()), pt(d + 1);
    const int na = g.n_alpha();
    std::vector<double> f(na);
    for (int m = 0; m < na; ++m) {
        const double* spatial;
        if (graph) {
            pt[0] = g.path().time(j);
            std::copy(g.value(m, j), g.value(m, j) + d, pt.begin() + 1);
            phi.eval(pt.data(), comp.data());
            spatial = comp.data() + 1;
        } else {
            phi.eval(g.value(m, j), comp.data());
            spatial = comp.data();
        }
        f[m] = dot(spatial, g.dalpha(m, j), d);
    }
    double s = 0.0;
    for (int m = 0; m + 1 < na; ++m)
        s += 0.5 * (f[m] + f[m + 1]) * (g.alphas()[m + 1] - g.alphas()[m]);
    return s;
}

struct LineFit {
    bool ok = false;
    double intercept = 0.0, slope = 0.0, rms = 0.0;
};

// Edge-tail ladder: the alpha-edge integrands at t = 0 and t = T evaluated on a
// fine geometric ladder reaching far below alpha_min. On the piecewise-linear
// path the convolution is exact at any alpha > 0, so the tails
//   int_(0, alpha_m] <phi, dalpha> dalpha
// are computable to quadrature accuracy. Subtracting them from the curve
// integrals cancels the endpoint-smoothing channel of the truncation error,
// leaving the two-current tail that the extrapolation model describes.
struct EdgeTails {
    std::vector<double> alphas;    // ladder nodes, ascending; includes the fit-window nodes
    std::vector<double> right;     // cumulative int_(0, alpha] at t = T
    std::vector<double> left;      // cumulative at t = 0

    double tail_at(double alpha, bool left_side) const {
        const auto& c = left_side ? left : right;
        for (std::size_t i = 0; i < alphas.size(); ++i)
            if (std::abs(alphas[i] - alpha) <= 1e-12 * alpha) return c[i];
        throw std::logic_error("EdgeTails: alpha not on the ladder");
    }
};

inline double edge_integrand(const SheetGrid& g, const OneForm& phi, double t, double alpha,
                             bool graph) {
    auto conv = convolve_all(g.extension(), g.kernel(), t, alpha);
    const int d = g.dim();
    std::vector<double> comp(phi.dim());
    if (graph) {
        std::vector<double> pt(d + 1);
        pt[0] = t;
        std::copy(conv.value.begin(), conv.value.end(), pt.begin() + 1);
        phi.eval(pt.data(), comp.data());
        return dot(comp.data() + 1, conv.dalpha.data(), d);
    }
    phi.eval(conv.value.data(), comp.data());
    return dot(comp.data(), conv.dalpha.data(), d);
}

inline EdgeTails edge_tails(const SheetGrid& g, const OneForm& phi, bool graph, int window) {
    EdgeTails out;
    const double h = g.t_step();
    const double deep = 0.25 * h;
    const double ratio = std::pow(2.0, 0.125);
    for (double a = deep; a < g.alpha_min() * (1.0 - 1e-12); a *= ratio) out.alphas.push_back(a);
    for (int m = 0; m < window && m < g.n_alpha(); ++m) out.alphas.push_back(g.alphas()[m]);

    const double T = g.horizon();
    std::size_t n = out.alphas.size();
    std::vector<double> fr(n), fl(n);
    for (std::size_t i = 0; i < n; ++i) {
        fr[i] = edge_integrand(g, phi, T, out.alphas[i], graph);
        fl[i] = edge_integrand(g, phi, 0.0, out.alphas[i], graph);
    }
    out.right.resize(n);
    out.left.resize(n);
    // below the deepest node the smoothing sees a single sample cell, where the
    // scale derivative is constant in alpha; a right-rectangle closes the gap
    out.right[0] = fr[0] * out.alphas[0];
    out.left[0] = fl[0] * out.alphas[0];
    for (std::size_t i = 1; i < n; ++i) {
        double w = 0.5 * (out.alphas[i] - out.alphas[i - 1]);
        out.right[i] = out.right[i - 1] + w * (fr[i] + fr[i - 1]);
        out.left[i] = out.left[i - 1] + w * (fl[i] + fl[i - 1]);
    }
    return out;
}

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit out;
    const std::size_t n = x.size();
    if (n < 2) return out;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    double span = *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
    if (span < 1e-9 * (1.0 + std::abs(mx))) return out;  // ill-conditioned design
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - out.intercept - out.slope * x[i];
        ss += r * r;
    }
    out.rms = std::sqrt(ss / n);
    out.ok = true;
    return out;
}

inline ChainIntegralResult assemble_chain(const SheetGrid& g, const OneForm& phi, bool graph,
                                          const ChainOptions& opt) {
    require(phi.dim() == g.dim() + (graph ? 1 : 0), "chain_integral: form dimension mismatch");
    ChainIntegralResult r;

    TwoForm dphi = exterior_derivative(phi);
    r.terms.t_dphi = graph ? eval_two_current_graph(g, dphi) : eval_two_current(g, dphi);
    const int n = g.path().n_steps();
    r.terms.right_edge = alpha_edge(g, phi, n, graph);
    r.terms.left_edge = alpha_edge(g, phi, 0, graph);

    r.alpha_sequence = g.alphas();
    r.curve_values.resize(g.n_alpha());
    for (int m = 0; m < g.n_alpha(); ++m) {
        double a = g.alphas()[m];
        r.curve_values[m] =
            graph ? smoothed_curve_integral_graph(g, phi, a) : smoothed_curve_integral(g, phi, a);
    }
    r.terms.top_edge = r.curve_values[g.n_alpha() - 1];
    r.value_at_alpha_min = r.curve_values[0];

    double assembled = r.terms.t_dphi + r.terms.top_edge - r.terms.right_edge + r.terms.left_edge;
    r.stokes_residual = r.value_at_alpha_min - assembled;
    double term_mag = std::abs(r.terms.t_dphi) + std::abs(r.terms.top_edge) +
                      std::abs(r.terms.right_edge) + std::abs(r.terms.left_edge);
    r.residual_tolerance = std::max(1e-6, 0.01 * term_mag);
    require(std::isfinite(assembled) && std::isfinite(r.value_at_alpha_min),
            "chain_integral: form is not finite on the sheet range");

    // alpha -> 0 extrapolation over the smallest alpha-node curve integrals,
    // corrected for the exactly-computable edge tails
    double gamma = g.gamma();
    double q;
    if (opt.exponent) {
        q = *opt.exponent;
    } else {
        q = (graph && g.dim() == 1) ? gamma : 2.0 * gamma - 1.0;
    }
    r.extrapolation_exponent = q;

    int w = std::min<int>(opt.fit_window, g.n_alpha());
    EdgeTails tails = edge_tails(g, phi, graph, w);
    std::vector<double> xs(w), ys(w);
    for (int m = 0; m < w; ++m) {
        double a = g.alphas()[m];
        xs[m] = std::pow(a, q);
        ys[m] = r.curve_values[m] - tails.tail_at(a, false) + tails.tail_at(a, true);
    }
    LineFit fit = fit_line(xs, ys);
    r.extrapolated_value = r.value_at_alpha_min;
    if (fit.ok) {
        r.fit_slope = fit.slope;
        r.fit_residual = fit.rms;
        double allowance = 0.2 * std::abs(fit.slope) * xs[0] + 1e-9 * (1.0 + std::abs(fit.intercept));
        if (fit.rms <= allowance) {
            r.extrapolated = true;
            r.extrapolated_value = fit.intercept;
        }
    }
    return r;
}

}  // namespace detail

// The flat-chain line integral: Stokes assembly on the truncated strip, the
// alpha_min-level curve integral as the working value, and the alpha -> 0
// extrapolation. value_at_alpha_min = t_dphi + top - right + left + residual
// holds by construction; the residual is the numerical Stokes defect.
inline ChainIntegralResult chain_integral(const SheetGrid& g, const OneForm& phi,
                                          const ChainOptions& opt = {}) {
    return detail::assemble_chain(g, phi, false, opt);
}

// Graph-lift variant for time-dependent forms on R^{d+1} (slot 0 = time),
// with tangent pairs (1, dt) and (0, dalpha).
inline ChainIntegralResult chain_integral_graph(const SheetGrid& g, const OneForm& phi,
                                                const ChainOptions& opt = {}) {
    return detail::assemble_chain(g, phi, true, opt);
}

}  // namespace flatchain
