#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "common.hpp"
#include "fbm.hpp"
#include "kernel.hpp"
#include "mollify.hpp"
#include "path.hpp"
#include "sheet.hpp"

namespace flatchain {

namespace detail {

// J_f integrals over the dyadic squares of one strip S_n = [lo, lo+1] x (2^-n-1, 2^-n],
// snapped to the sample grid in t. Returns the 2^(n+1) square values.
inline std::vector<double> strip_square_masses(const SampledPath& path, const MollifierKernel& kernel,
                                               int n, int t_res, double window_lo) {
    require(n >= 0, "strip_mass: strip index must be >= 0");
    const double a_lo = std::pow(2.0, -n - 1), a_hi = std::pow(2.0, -n);
    require(path.step() <= a_lo / 4.0, "strip_mass: path step too coarse for this strip");
    require(window_lo - 1.0 >= -1e-12, "strip_mass: window must start at t >= 1");
    require(window_lo + 1.0 + a_hi <= path.horizon() + 1e-12,
            "strip_mass: mollifier support leaves the sampled horizon");

    const int n_squares = 1 << (n + 1);
    if (t_res <= 0) t_res = 16 << n;
    int per_square = std::max(2, t_res / n_squares);

    const double h = path.step();
    const double square_w = 1.0 / n_squares;

    // five geometric alpha nodes spanning the strip
    std::vector<double> alphas(5);
    for (int q = 0; q <= 4; ++q) alphas[q] = a_lo * std::pow(2.0, 0.25 * q);
    alphas[4] = a_hi;

    ExtendedPath ext = extend_constant(path);
    const int d = path.dim();

    // J values on the snapped tensor grid, one row per alpha node
    std::vector<std::vector<int>> square_idx(n_squares);
    for (int kq = 0; kq < n_squares; ++kq) {
        std::vector<int>& idx = square_idx[kq];
        for (int i = 0; i <= per_square; ++i) {
            double t = window_lo + square_w * (kq + static_cast<double>(i) / per_square);
            int j = static_cast<int>(std::lround(t / h));
            if (idx.empty() || idx.back() != j) idx.push_back(j);
        }
    }

    std::vector<double> tmpv(d), tmpdt(d), tmpda(d);
    std::vector<std::vector<std::vector<double>>> jac_rows(5);  // [alpha][square][node]
    for (int q = 0; q < 5; ++q) {
        detail::ConvolutionStencil stencil(kernel, alphas[q], h);
        jac_rows[q].resize(n_squares);
        for (int kq = 0; kq < n_squares; ++kq) {
            const auto& idx = square_idx[kq];
            auto& row = jac_rows[q][kq];
            row.resize(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                stencil.apply(ext, idx[i], tmpv.data(), tmpdt.data(), tmpda.data());
                row[i] = jacobian(tmpdt.data(), tmpda.data(), d);
            }
        }
    }

    std::vector<double> out(n_squares, 0.0);
    for (int kq = 0; kq < n_squares; ++kq) {
        const auto& idx = square_idx[kq];
        // t-line integrals per alpha, then trapezoid across alpha
        std::vector<double> tline(5, 0.0);
        for (int q = 0; q < 5; ++q) {
            const auto& row = jac_rows[q][kq];
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < idx.size(); ++i)
                s += 0.5 * (row[i] + row[i + 1]) * (idx[i + 1] - idx[i]) * h;
            tline[q] = s;
        }
        double v = 0.0;
        for (int q = 0; q + 1 < 5; ++q)
            v += 0.5 * (tline[q] + tline[q + 1]) * (alphas[q + 1] - alphas[q]);
        out[kq] = v;
    }
    return out;
}

}  // namespace detail

// Tensor trapezoid of J_f over the strip [window_lo, window_lo+1] x (2^-n-1, 2^-n],
// at a t-resolution tied to the strip's alpha scale.
inline double strip_mass(const SampledPath& path, const MollifierKernel& kernel, int n,
                         int t_res = 0, double window_lo = 1.0) {
    auto squares = detail::strip_square_masses(path, kernel, n, t_res, window_lo);
    double s = 0.0;
    for (double v : squares) s += v;
    return s;
}

struct StripReport {
    int n_max = 0;
    int replicas = 0;
    std::vector<double> strip_total;    // per-strip MC mean of int_{S_n} J_f
    std::vector<double> strip_stderr;
    std::vector<double> square_mean;    // mean over the strip's dyadic squares and replicas
    std::vector<double> square_stderr;
};

// Monte Carlo of the Brownian strip masses: per-strip totals and per-square means
// with standard errors, over `replicas` independent d-dimensional BM paths.
inline StripReport scaling_experiment(int replicas, int n_max, std::uint64_t seed, int dim,
                                      const MollifierKernel& kernel, int n_steps = 1 << 15,
                                      double horizon = 3.0, int threads = 1) {
    require(replicas >= 2, "scaling_experiment: need at least 2 replicas");
    require(n_max >= 0, "scaling_experiment: n_max must be >= 0");

    const int ns = n_max + 1;
    std::vector<std::vector<double>> totals(ns, std::vector<double>(replicas, 0.0));
    std::vector<std::vector<std::vector<double>>> squares(
        ns, std::vector<std::vector<double>>(replicas));
    parallel_for(static_cast<std::size_t>(replicas), threads, [&](std::size_t r) {
        SampledPath path = generate_fbm(0.5, dim, n_steps, horizon, seed + r);
        for (int n = 0; n <= n_max; ++n) {
            auto sq = detail::strip_square_masses(path, kernel, n, 0, 1.0);
            double tot = 0.0;
            for (double v : sq) tot += v;
            totals[n][r] = tot;
            squares[n][r] = std::move(sq);
        }
    });

    StripReport rep;
    rep.n_max = n_max;
    rep.replicas = replicas;
    for (int n = 0; n <= n_max; ++n) {
        double mean = 0.0;
        for (double v : totals[n]) mean += v;
        mean /= replicas;
        double var = 0.0;
        for (double v : totals[n]) var += (v - mean) * (v - mean);
        rep.strip_total.push_back(mean);
        rep.strip_stderr.push_back(std::sqrt(var / (replicas - 1) / replicas));

        double smean = 0.0;
        long cnt = 0;
        for (const auto& sq : squares[n])
            for (double v : sq) {
                smean += v;
                ++cnt;
            }
        smean /= cnt;
        double svar = 0.0;
        for (const auto& sq : squares[n])
            for (double v : sq) svar += (v - smean) * (v - smean);
        rep.square_mean.push_back(smean);
        rep.square_stderr.push_back(std::sqrt(svar / (cnt - 1) / cnt));
    }
    return rep;
}

}  // namespace flatchain
