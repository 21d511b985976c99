#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "common.hpp"
#include "forms.hpp"
#include "oracle.hpp"
#include "path.hpp"

namespace flatchain {

// Uniform symmetric lattice of wavevectors in [-K, K]^d (odd per-axis count, so
// k = 0 is a node and the lattice is invariant under k -> -k).
class WaveGrid {
 public:
    WaveGrid(int dim, double cutoff, int per_axis) : dim_(dim), cutoff_(cutoff), per_axis_(per_axis) {
        require(dim_ >= 1, "WaveGrid: dim must be >= 1");
        require(cutoff_ > 0.0, "WaveGrid: cutoff must be positive");
        require(per_axis_ >= 3 && per_axis_ % 2 == 1, "WaveGrid: per-axis count must be odd and >= 3");
        n_nodes_ = 1;
        for (int i = 0; i < dim_; ++i) n_nodes_ *= per_axis_;
    }

    int dim() const { return dim_; }
    double cutoff() const { return cutoff_; }
    int per_axis() const { return per_axis_; }
    long n_nodes() const { return n_nodes_; }
    double spacing() const { return 2.0 * cutoff_ / (per_axis_ - 1); }
    double cell_volume() const { return std::pow(spacing(), dim_); }

    double axis_value(int a) const { return -cutoff_ + a * spacing(); }

    void node(long idx, double* k) const {
        for (int i = 0; i < dim_; ++i) {
            k[i] = axis_value(static_cast<int>(idx % per_axis_));
            idx /= per_axis_;
        }
    }

    long mirror(long idx) const {
        long out = 0, mul = 1;
        for (int i = 0; i < dim_; ++i) {
            long a = idx % per_axis_;
            out += (per_axis_ - 1 - a) * mul;
            mul *= per_axis_;
            idx /= per_axis_;
        }
        return out;
    }

    long center_index() const {
        long out = 0, mul = 1;
        for (int i = 0; i < dim_; ++i) {
            out += ((per_axis_ - 1) / 2) * mul;
            mul *= per_axis_;
        }
        return out;
    }

 private:
    int dim_;
    double cutoff_;
    int per_axis_;
    long n_nodes_;
};

// Z_k = sum_j e^{i<k, X_.>} (X_{j+1} - X_j), one complex d-vector per lattice node.
struct FourierCoefficients {
    WaveGrid grid;
    RiemannScheme scheme = RiemannScheme::Left;
    std::vector<std::complex<double>> z;  // n_nodes x dim, row-major

    const std::complex<double>* at(long idx) const { return z.data() + idx * grid.dim(); }

    double abs2(long idx) const {
        double s = 0.0;
        for (int i = 0; i < grid.dim(); ++i) s += std::norm(at(idx)[i]);
        return s;
    }
};

namespace detail {

// per-axis phase table e^{i k_a x_i} for one sample
inline void axis_phases(const WaveGrid& g, const double* x, std::vector<std::complex<double>>& out) {
    const int m = g.per_axis(), d = g.dim();
    for (int i = 0; i < d; ++i)
        for (int a = 0; a < m; ++a)
            out[static_cast<std::size_t>(i) * m + a] = std::polar(1.0, g.axis_value(a) * x[i]);
}

inline void node_phases(const WaveGrid& g, const std::vector<std::complex<double>>& axis,
                        std::vector<std::complex<double>>& out) {
    const int m = g.per_axis(), d = g.dim();
    const long n = g.n_nodes();
    if (d == 1) {
        std::copy(axis.begin(), axis.begin() + m, out.begin());
        return;
    }
    if (d == 2) {
        for (int b = 0; b < m; ++b) {
            std::complex<double> pb = axis[static_cast<std::size_t>(m) + b];
            for (int a = 0; a < m; ++a) out[static_cast<std::size_t>(b) * m + a] = axis[a] * pb;
        }
        return;
    }
    for (long idx = 0; idx < n; ++idx) {
        long rem = idx;
        std::complex<double> p(1.0, 0.0);
        for (int i = 0; i < d; ++i) {
            p *= axis[static_cast<std::size_t>(i) * m + rem % m];
            rem /= m;
        }
        out[idx] = p;
    }
}

}  // namespace detail

inline FourierCoefficients compute_Zk(const SampledPath& p, const WaveGrid& grid,
                                      RiemannScheme scheme) {
    require(grid.dim() == p.dim(), "compute_Zk: grid dimension mismatch");
    require(scheme != RiemannScheme::Right, "compute_Zk: schemes are left (Ito) or midpoint");
    const int d = p.dim(), m = grid.per_axis();
    const long n_nodes = grid.n_nodes();
    FourierCoefficients out{grid, scheme, {}};
    out.z.assign(static_cast<std::size_t>(n_nodes) * d, {0.0, 0.0});

    std::vector<std::complex<double>> axis(static_cast<std::size_t>(d) * m);
    std::vector<std::complex<double>> cur(n_nodes), prev(n_nodes);
    detail::axis_phases(grid, p.point(0), axis);
    detail::node_phases(grid, axis, prev);
    for (int j = 0; j < p.n_steps(); ++j) {
        detail::axis_phases(grid, p.point(j + 1), axis);
        detail::node_phases(grid, axis, cur);
        const double* a = p.point(j);
        const double* b = p.point(j + 1);
        for (long idx = 0; idx < n_nodes; ++idx) {
            std::complex<double> w =
                scheme == RiemannScheme::Left ? prev[idx] : 0.5 * (prev[idx] + cur[idx]);
            std::complex<double>* zrow = out.z.data() + static_cast<std::size_t>(idx) * d;
            for (int i = 0; i < d; ++i) zrow[i] += w * (b[i] - a[i]);
        }
        std::swap(prev, cur);
    }

    // exact invariants: conjugate symmetry and the telescoping value at k = 0
    for (long idx = 0; idx < n_nodes; ++idx) {
        long mir = grid.mirror(idx);
        if (mir > idx)
            for (int i = 0; i < d; ++i)
                out.z[static_cast<std::size_t>(mir) * d + i] =
                    std::conj(out.z[static_cast<std::size_t>(idx) * d + i]);
    }
    long c = grid.center_index();
    for (int i = 0; i < d; ++i)
        out.z[static_cast<std::size_t>(c) * d + i] = p.coord(p.n_steps(), i) - p.coord(0, i);
    return out;
}

struct Reconstruction {
    double value = 0.0;
    double imag_part = 0.0;
    double imag_ratio = 0.0;
};

// Midpoint-rule lattice sum of (2pi)^{-d} <phi_hat(k), Z_k>; the imaginary part
// must cancel by conjugate symmetry and is reported as a diagnostic.
inline Reconstruction reconstruct(const FormDescriptor& form, const FourierCoefficients& coeffs) {
    require(static_cast<bool>(form.fourier), "reconstruct: form has no closed-form Fourier transform");
    const WaveGrid& g = coeffs.grid;
    require(form.dim == g.dim(), "reconstruct: dimension mismatch");
    const int d = g.dim();
    std::vector<double> k(d);
    std::vector<std::complex<double>> ph(d);
    std::complex<double> acc(0.0, 0.0);
    for (long idx = 0; idx < g.n_nodes(); ++idx) {
        g.node(idx, k.data());
        form.fourier(k.data(), ph.data());
        const std::complex<double>* z = coeffs.at(idx);
        for (int i = 0; i < d; ++i) acc += ph[i] * z[i];
    }
    acc *= g.cell_volume() * std::pow(2.0 * M_PI, -d);
    Reconstruction out;
    out.value = acc.real();
    out.imag_part = acc.imag();
    out.imag_ratio = std::abs(out.imag_part) / std::max(1e-300, std::abs(acc));
    if (out.imag_ratio > 0.05)
        throw std::runtime_error("reconstruct: imaginary part exceeds 5% (grid asymmetry or wrong transform)");
    return out;
}

struct SobolevEstimate {
    double s = 0.0;
    double value = 0.0;       // MC mean of cell_vol * sum_k |Z_k|^2 (1+|k|^2)^{-s}
    double stderr_mean = 0.0;
    double tail_trend = 0.0;  // outer half-shell share of the lattice sum
    std::vector<double> per_replica;
};

inline SobolevEstimate sobolev_estimate(const std::function<SampledPath(int)>& make_path,
                                        int replicas, const WaveGrid& grid, double s,
                                        RiemannScheme scheme, int threads = 1) {
    require(s > 0.0, "sobolev_estimate: s must be positive");
    require(replicas >= 2, "sobolev_estimate: ensemble size must be >= 2");
    const long n_nodes = grid.n_nodes();
    std::vector<double> weight(n_nodes), k(grid.dim());
    std::vector<bool> outer(n_nodes);
    for (long idx = 0; idx < n_nodes; ++idx) {
        grid.node(idx, k.data());
        double k2 = norm2(k.data(), grid.dim());
        weight[idx] = std::pow(1.0 + k2, -s);
        outer[idx] = std::sqrt(k2) > 0.5 * grid.cutoff();
    }
    std::vector<double> totals(replicas, 0.0), tails(replicas, 0.0);
    parallel_for(static_cast<std::size_t>(replicas), threads, [&](std::size_t r) {
        auto coeffs = compute_Zk(make_path(static_cast<int>(r)), grid, scheme);
        double tot = 0.0, tail = 0.0;
        for (long idx = 0; idx < n_nodes; ++idx) {
            double c = weight[idx] * coeffs.abs2(idx);
            tot += c;
            if (outer[idx]) tail += c;
        }
        totals[r] = tot * grid.cell_volume();
        tails[r] = tail * grid.cell_volume();
    });
    SobolevEstimate out;
    out.s = s;
    out.per_replica = totals;
    double mt = 0.0, mtail = 0.0;
    for (int r = 0; r < replicas; ++r) {
        mt += totals[r];
        mtail += tails[r];
    }
    mt /= replicas;
    mtail /= replicas;
    out.value = mt;
    out.tail_trend = mt > 0.0 ? mtail / mt : 0.0;
    double var = 0.0;
    for (double v : totals) var += (v - mt) * (v - mt);
    out.stderr_mean = replicas > 1 ? std::sqrt(var / (replicas - 1) / replicas) : 0.0;
    return out;
}

struct MomentTable {
    std::vector<double> k_mag;    // bin centers (integer-rounded |k|)
    std::vector<double> moment;   // ensemble mean of |Z_k|^2 averaged within the bin
    std::vector<double> stderr_;  // over replicas
    std::vector<long> bin_size;   // lattice nodes per bin
    double slope = 0.0;           // log-log fit over the requested |k| window
    bool slope_valid = false;
};

// Per-|k| table of the second moment of the coefficients; the log-log slope over
// [fit_lo, fit_hi] quantifies growth in |k|.
inline MomentTable coefficient_moment_table(const std::function<SampledPath(int)>& make_path,
                                            int replicas, const WaveGrid& grid, RiemannScheme scheme,
                                            double fit_lo = 4.0, double fit_hi = 0.0,
                                            int threads = 1) {
    require(replicas >= 2, "coefficient_moment_table: ensemble size must be >= 2");
    if (fit_hi <= 0.0) fit_hi = grid.cutoff();
    const long n_nodes = grid.n_nodes();
    std::vector<int> bin(n_nodes);
    std::vector<double> k(grid.dim());
    int max_bin = 0;
    for (long idx = 0; idx < n_nodes; ++idx) {
        grid.node(idx, k.data());
        bin[idx] = static_cast<int>(std::lround(norm(k.data(), grid.dim())));
        max_bin = std::max(max_bin, bin[idx]);
    }
    const int nb = max_bin + 1;
    std::vector<std::vector<double>> per_replica(replicas);
    parallel_for(static_cast<std::size_t>(replicas), threads, [&](std::size_t r) {
        auto coeffs = compute_Zk(make_path(static_cast<int>(r)), grid, scheme);
        std::vector<double> acc(nb, 0.0);
        std::vector<long> cnt(nb, 0);
        for (long idx = 0; idx < n_nodes; ++idx) {
            acc[bin[idx]] += coeffs.abs2(idx);
            ++cnt[bin[idx]];
        }
        for (int b = 0; b < nb; ++b) acc[b] = cnt[b] ? acc[b] / cnt[b] : 0.0;
        per_replica[r] = std::move(acc);
    });

    MomentTable out;
    std::vector<long> cnt(nb, 0);
    for (long idx = 0; idx < n_nodes; ++idx) ++cnt[bin[idx]];
    for (int b = 0; b < nb; ++b) {
        if (!cnt[b]) continue;
        double mean = 0.0;
        for (int r = 0; r < replicas; ++r) mean += per_replica[r][b];
        mean /= replicas;
        double var = 0.0;
        for (int r = 0; r < replicas; ++r) {
            double dv = per_replica[r][b] - mean;
            var += dv * dv;
        }
        out.k_mag.push_back(b);
        out.moment.push_back(mean);
        out.stderr_.push_back(replicas > 1 ? std::sqrt(var / (replicas - 1) / replicas) : 0.0);
        out.bin_size.push_back(cnt[b]);
    }

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < out.k_mag.size(); ++i) {
        if (out.k_mag[i] >= fit_lo && out.k_mag[i] <= fit_hi && out.moment[i] > 0.0) {
            lx.push_back(std::log(out.k_mag[i]));
            ly.push_back(std::log(out.moment[i]));
        }
    }
    if (lx.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= lx.size();
        my /= ly.size();
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        if (sxx > 0.0) {
            out.slope = sxy / sxx;
            out.slope_valid = true;
        }
    }
    return out;
}

}  // namespace flatchain
