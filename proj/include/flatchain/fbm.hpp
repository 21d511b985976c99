#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "common.hpp"
#include "path.hpp"

namespace flatchain {
namespace detail {

// In-place iterative radix-2 complex FFT; sign = -1 forward, +1 inverse (unscaled).
inline void fft_pow2(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    require((n & (n - 1)) == 0 && n >= 1, "fft_pow2: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Autocovariance of fractional Gaussian noise increments at step dt.
inline double fgn_autocov(double hurst, double dt, long lag) {
    double a = std::pow(std::abs(static_cast<double>(lag + 1)), 2.0 * hurst);
    double b = std::pow(std::abs(static_cast<double>(lag)), 2.0 * hurst);
    double c = std::pow(std::abs(static_cast<double>(lag - 1)), 2.0 * hurst);
    return 0.5 * std::pow(dt, 2.0 * hurst) * (a - 2.0 * b + c);
}

// Circulant eigenvalues of the even embedding of the fGn covariance (size m >= 2n, power of two).
inline std::vector<double> fgn_circulant_eigs(double hurst, double dt, int n, std::size_t m) {
    std::vector<std::complex<double>> row(m);
    for (std::size_t j = 0; j <= m / 2; ++j) row[j] = fgn_autocov(hurst, dt, static_cast<long>(j));
    for (std::size_t j = m / 2 + 1; j < m; ++j) row[j] = row[m - j];
    (void)n;
    fft_pow2(row, -1);
    std::vector<double> eig(m);
    for (std::size_t j = 0; j < m; ++j) eig[j] = row[j].real();
    return eig;
}

// Two independent fGn tracks of length n from 2m standard normals (m complex draws),
// by the circulant embedding synthesis. Exposed so tests can drive it with chosen
// Gaussian inputs and verify the induced covariance exactly.
//
// With eigenvalues lambda_k of the circulant C and eps_k = g_{2k} + i*g_{2k+1},
// z = sum_k sqrt(lambda_k/m) eps_k e^{+2*pi*i*jk/m} has Re z, Im z ~ N(0, C) independent.
inline void fgn_from_gaussians(const std::vector<double>& eig, int n,
                               const std::vector<double>& gauss,  // 2m values
                               std::vector<double>& track_re, std::vector<double>& track_im) {
    const std::size_t m = eig.size();
    require(gauss.size() == 2 * m, "fgn_from_gaussians: need 2m gaussians");
    double max_eig = 0.0;
    for (double e : eig) max_eig = std::max(max_eig, e);
    std::vector<std::complex<double>> z(m);
    for (std::size_t k = 0; k < m; ++k) {
        double lam = eig[k];
        if (lam < 0.0) {
            // tolerate eigenvalue rounding noise only
            require(lam > -1e-9 * max_eig, "circulant embedding not nonnegative-definite");
            lam = 0.0;
        }
        double scale = std::sqrt(lam / static_cast<double>(m));
        z[k] = scale * std::complex<double>(gauss[2 * k], gauss[2 * k + 1]);
    }
    fft_pow2(z, +1);
    track_re.resize(n);
    track_im.resize(n);
    for (int j = 0; j < n; ++j) {
        track_re[j] = z[j].real();
        track_im[j] = z[j].imag();
    }
}

// Dense fallback: Cholesky factor of the Toeplitz fGn covariance. O(n^3); small n only.
inline std::vector<double> fgn_cholesky(double hurst, double dt, int n) {
    std::vector<double> cov(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cov[static_cast<std::size_t>(i) * n + j] = fgn_autocov(hurst, dt, std::abs(i - j));
    std::vector<double> chol(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = cov[static_cast<std::size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                s -= chol[static_cast<std::size_t>(i) * n + k] * chol[static_cast<std::size_t>(j) * n + k];
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("fbm: dense covariance factorization failed");
                chol[static_cast<std::size_t>(i) * n + i] = std::sqrt(s);
            } else {
                chol[static_cast<std::size_t>(i) * n + j] = s / chol[static_cast<std::size_t>(j) * n + j];
            }
        }
    }
    return chol;
}

}  // namespace detail

// Fractional Brownian motion with Hurst index in (0,1), X_0 = 0, independent
// coordinates, exact increment covariance (circulant embedding; dense Cholesky
// fallback for small N if the embedding fails). Deterministic per seed.
inline SampledPath generate_fbm(double hurst, int dim, int n_steps, double horizon,
                                std::uint64_t seed) {
    require(hurst > 0.0 && hurst < 1.0, "generate_fbm: hurst must lie in (0,1)");
    require(dim >= 1, "generate_fbm: dim must be >= 1");
    require(n_steps >= 2, "generate_fbm: n_steps must be >= 2");
    require(horizon > 0.0, "generate_fbm: horizon must be positive");

    const double dt = horizon / n_steps;
    GaussianRng rng(seed);

    // one synthesis yields two independent tracks; coordinates consume them in pairs
    std::vector<std::vector<double>> tracks;
    tracks.reserve(dim);
    bool circulant_ok = true;
    std::vector<double> eig;
    std::size_t m = 1;
    while (m < 2 * static_cast<std::size_t>(n_steps)) m <<= 1;
    try {
        eig = detail::fgn_circulant_eigs(hurst, dt, n_steps, m);
        double max_eig = 0.0;
        for (double e : eig) max_eig = std::max(max_eig, e);
        for (double e : eig)
            if (e < -1e-9 * max_eig) circulant_ok = false;
    } catch (const std::exception&) {
        circulant_ok = false;
    }

    if (circulant_ok) {
        for (int c = 0; c < dim; c += 2) {
            std::vector<double> gauss(2 * m);
            for (auto& g : gauss) g = rng();
            std::vector<double> re, im;
            detail::fgn_from_gaussians(eig, n_steps, gauss, re, im);
            tracks.push_back(std::move(re));
            if (c + 1 < dim) tracks.push_back(std::move(im));
        }
    } else {
        if (n_steps > 4096)
            throw std::runtime_error(
                "generate_fbm: circulant embedding not nonnegative-definite and N too large "
                "for the dense factorization fallback");
        auto chol = detail::fgn_cholesky(hurst, dt, n_steps);
        for (int c = 0; c < dim; ++c) {
            std::vector<double> g(n_steps);
            for (auto& v : g) v = rng();
            std::vector<double> tr(n_steps, 0.0);
            for (int i = 0; i < n_steps; ++i) {
                double s = 0.0;
                for (int k = 0; k <= i; ++k) s += chol[static_cast<std::size_t>(i) * n_steps + k] * g[k];
                tr[i] = s;
            }
            tracks.push_back(std::move(tr));
        }
    }

    std::vector<double> samples(static_cast<std::size_t>(n_steps + 1) * dim, 0.0);
    for (int i = 0; i < dim; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n_steps; ++j) {
            acc += tracks[i][j];
            samples[static_cast<std::size_t>(j + 1) * dim + i] = acc;
        }
    }
    PathMeta meta;
    meta.generator = "fbm";
    meta.seed = seed;
    meta.hurst = hurst;
    return SampledPath(dim, horizon, std::move(samples), std::move(meta));
}

}  // namespace flatchain
