#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "forms.hpp"
#include "kernel.hpp"
#include "mollify.hpp"
#include "path.hpp"

namespace flatchain {

// Area element of the sheet map f(t,alpha) = X_{t,alpha}:
//   J_f = sqrt(|dt|^2 |dalpha|^2 - <dt, dalpha>^2).
// The radicand is clamped at zero within rounding noise; anything more negative
// signals corrupted inputs.
inline double jacobian(const double* dt, const double* dalpha, int d) {
    double a = norm2(dt, d), b = norm2(dalpha, d), c = dot(dt, dalpha, d);
    double radicand = a * b - c * c;
    if (radicand < 0.0) {
        if (radicand < -1e-12 * a * b)
            throw std::runtime_error("jacobian: radicand below rounding tolerance");
        radicand = 0.0;
    }
    return std::sqrt(radicand);
}

inline double jacobian(const std::vector<double>& dt, const std::vector<double>& dalpha) {
    require(dt.size() == dalpha.size() && !dt.empty(), "jacobian: dimension mismatch");
    return jacobian(dt.data(), dalpha.data(), static_cast<int>(dt.size()));
}

// Graph-lift area element for f~(t,alpha) = (t, X_{t,alpha}):
//   J = sqrt(|dalpha|^2 (1 + |dt|^2) - <dt, dalpha>^2).
inline double jacobian_graph(const double* dt, const double* dalpha, int d) {
    double a = norm2(dt, d), b = norm2(dalpha, d), c = dot(dt, dalpha, d);
    double radicand = b * (1.0 + a) - c * c;
    if (radicand < 0.0) {
        if (radicand < -1e-12 * b * (1.0 + a))
            throw std::runtime_error("jacobian_graph: radicand below rounding tolerance");
        radicand = 0.0;
    }
    return std::sqrt(radicand);
}

inline double jacobian_graph(const std::vector<double>& dt, const std::vector<double>& dalpha) {
    require(dt.size() == dalpha.size() && !dt.empty(), "jacobian_graph: dimension mismatch");
    return jacobian_graph(dt.data(), dalpha.data(), static_cast<int>(dt.size()));
}

struct SheetGridOptions {
    double alpha_min = 0.02;
    double rho = std::pow(2.0, 0.25);  // geometric alpha ratio
    int threads = 1;
};

// The discretized parameter domain [0,T] x [alpha_min, 1] with cached smoothed
// values and partials at every node. t-nodes are the path's sample times; the
// alpha-nodes form a geometric sequence ending exactly at 1.
class SheetGrid {
 public:
    SheetGrid(const SampledPath& path, const MollifierKernel& kernel, double gamma,
              const SheetGridOptions& opt = {})
        : ext_(extend_constant(path)), kernel_(kernel), gamma_(gamma), alpha_min_(opt.alpha_min) {
        require(gamma_ > 0.0 && gamma_ <= 1.0, "SheetGrid: gamma must lie in (0, 1]");
        require(opt.rho > 1.0, "SheetGrid: alpha ratio must exceed 1");
        require(opt.alpha_min <= 1.0, "SheetGrid: alpha_min must be <= 1");
        require(opt.alpha_min >= alpha_floor(path),
                "SheetGrid: alpha_min below the mollifier resolution floor");

        holder_ = estimate_holder(ext_, gamma_);
        constants_ = kernel_constants(kernel_, gamma_);

        // alpha_min * rho^m, capped so the last node is exactly 1
        for (double a = opt.alpha_min; a < 1.0 - 1e-12; a *= opt.rho) alphas_.push_back(a);
        alphas_.push_back(1.0);
        if (alphas_.size() >= 2 && alphas_[alphas_.size() - 2] > 1.0 / std::sqrt(opt.rho))
            alphas_.erase(alphas_.end() - 2);  // avoid a sliver at the top

        const int n = path.n_steps();
        const int d = path.dim();
        value_.assign(alphas_.size(), {});
        dt_.assign(alphas_.size(), {});
        dalpha_.assign(alphas_.size(), {});
        for (std::size_t m = 0; m < alphas_.size(); ++m) {
            value_[m].resize(static_cast<std::size_t>(n + 1) * d);
            dt_[m].resize(static_cast<std::size_t>(n + 1) * d);
            dalpha_[m].resize(static_cast<std::size_t>(n + 1) * d);
        }
        parallel_for(alphas_.size(), opt.threads, [&](std::size_t m) {
            detail::ConvolutionStencil stencil(kernel_, alphas_[m], path.step());
            for (int j = 0; j <= n; ++j) {
                std::size_t off = static_cast<std::size_t>(j) * d;
                stencil.apply(ext_, j, value_[m].data() + off, dt_[m].data() + off,
                              dalpha_[m].data() + off);
            }
        });
    }

    const SampledPath& path() const { return ext_.base(); }
    const ExtendedPath& extension() const { return ext_; }
    const MollifierKernel& kernel() const { return kernel_; }
    double gamma() const { return gamma_; }
    double alpha_min() const { return alpha_min_; }
    const HolderEstimate& holder() const { return holder_; }
    const KernelConstants& constants() const { return constants_; }
    const std::vector<double>& alphas() const { return alphas_; }
    int n_alpha() const { return static_cast<int>(alphas_.size()); }
    int n_t() const { return ext_.base().n_steps() + 1; }
    int dim() const { return ext_.base().dim(); }
    double t_step() const { return ext_.base().step(); }
    double horizon() const { return ext_.base().horizon(); }

    const double* value(int m, int j) const {
        return value_[m].data() + static_cast<std::size_t>(j) * dim();
    }
    const double* dt(int m, int j) const { return dt_[m].data() + static_cast<std::size_t>(j) * dim(); }
    const double* dalpha(int m, int j) const {
        return dalpha_[m].data() + static_cast<std::size_t>(j) * dim();
    }

    SheetPoint point(int m, int j) const {
        SheetPoint p;
        p.t = ext_.base().time(j);
        p.alpha = alphas_[m];
        p.value.assign(value(m, j), value(m, j) + dim());
        p.dt.assign(dt(m, j), dt(m, j) + dim());
        p.dalpha.assign(dalpha(m, j), dalpha(m, j) + dim());
        return p;
    }

    int alpha_index(double alpha) const {
        for (std::size_t m = 0; m < alphas_.size(); ++m)
            if (std::abs(alphas_[m] - alpha) <= 1e-12 * std::max(1.0, std::abs(alpha)))
                return static_cast<int>(m);
        throw std::invalid_argument("SheetGrid: alpha is not a grid node");
    }

 private:
    ExtendedPath ext_;
    MollifierKernel kernel_;
    double gamma_;
    double alpha_min_;
    HolderEstimate holder_;
    KernelConstants constants_;
    std::vector<double> alphas_;
    std::vector<std::vector<double>> value_, dt_, dalpha_;  // [alpha][node*dim+i]
};

struct MassReport {
    double total = 0.0;
    std::vector<double> band_mass;        // per consecutive alpha-node pair
    std::vector<double> band_bound;       // C^2 kappa1 kappa2 T int alpha^(2gamma-2) per band
    double bound_prediction = 0.0;        // sum of band bounds
    double holder_constant = 0.0;
    double kappa1 = 0.0, kappa2 = 0.0;
};

namespace detail {

// trapezoid weight for node index j on a 1-d grid of size n
inline double trap_w(int j, int n) { return (j == 0 || j == n - 1) ? 0.5 : 1.0; }

}  // namespace detail

// Tensor trapezoid of J_f over the cached grid, with the alpha^(2(gamma-1))
// bound prediction per band.
inline MassReport surface_mass(const SheetGrid& g) {
    MassReport r;
    r.holder_constant = g.holder().constant;
    r.kappa1 = g.constants().kappa1;
    r.kappa2 = g.constants().kappa2;
    const int na = g.n_alpha(), nt = g.n_t(), d = g.dim();
    const double ht = g.t_step();
    std::vector<double> tline(na, 0.0);
    for (int m = 0; m < na; ++m) {
        double s = 0.0;
        for (int j = 0; j < nt; ++j)
            s += detail::trap_w(j, nt) * jacobian(g.dt(m, j), g.dalpha(m, j), d);
        tline[m] = s * ht;
    }
    const double q = 2.0 * g.gamma() - 1.0;  // exponent of the antiderivative of a^(2g-2)
    const double cbound = r.holder_constant * r.holder_constant * r.kappa1 * r.kappa2 * g.horizon();
    for (int m = 0; m + 1 < na; ++m) {
        double a0 = g.alphas()[m], a1 = g.alphas()[m + 1];
        double band = 0.5 * (tline[m] + tline[m + 1]) * (a1 - a0);
        r.band_mass.push_back(band);
        double integral = std::abs(q) > 1e-12 ? (std::pow(a1, q) - std::pow(a0, q)) / q
                                              : std::log(a1 / a0);
        r.band_bound.push_back(cbound * integral);
        r.total += band;
        r.bound_prediction += cbound * integral;
    }
    return r;
}

// T(psi) = int_A sum_{i<j} psi_ij(X_{t,a}) (dt_i da_j - dt_j da_i) dt dalpha,
// tensor trapezoid over the cached nodes.
inline double eval_two_current(const SheetGrid& g, const TwoForm& psi) {
    require(psi.dim() == g.dim(), "eval_two_current: form dimension mismatch");
    const int na = g.n_alpha(), nt = g.n_t(), d = g.dim();
    const int nc = psi.n_components();
    const double ht = g.t_step();
    std::vector<double> comp(nc);
    double total = 0.0;
    std::vector<double> tline(na, 0.0);
    for (int m = 0; m < na; ++m) {
        double s = 0.0;
        for (int j = 0; j < nt; ++j) {
            const double* dt = g.dt(m, j);
            const double* da = g.dalpha(m, j);
            psi.eval(g.value(m, j), comp.data());
            double v = 0.0;
            int idx = 0;
            for (int i = 0; i < d; ++i)
                for (int jj = i + 1; jj < d; ++jj)
                    v += comp[idx++] * (dt[i] * da[jj] - dt[jj] * da[i]);
            s += detail::trap_w(j, nt) * v;
        }
        tline[m] = s * ht;
    }
    for (int m = 0; m + 1 < na; ++m)
        total += 0.5 * (tline[m] + tline[m + 1]) * (g.alphas()[m + 1] - g.alphas()[m]);
    return total;
}

// Graph-lift variant: psi lives on R^{d+1} with slot 0 = time; tangent pairs are
// (1, dt) and (0, dalpha), so the (0,j) slots pick up dalpha_j.
inline double eval_two_current_graph(const SheetGrid& g, const TwoForm& psi) {
    require(psi.dim() == g.dim() + 1, "eval_two_current_graph: form dimension mismatch");
    const int na = g.n_alpha(), nt = g.n_t(), d = g.dim();
    const int dd = d + 1;
    const int nc = psi.n_components();
    const double ht = g.t_step();
    std::vector<double> comp(nc), pt(dd);
    std::vector<double> tline(na, 0.0);
    for (int m = 0; m < na; ++m) {
        double s = 0.0;
        for (int j = 0; j < nt; ++j) {
            const double* dt = g.dt(m, j);
            const double* da = g.dalpha(m, j);
            pt[0] = g.path().time(j);
            std::copy(g.value(m, j), g.value(m, j) + d, pt.begin() + 1);
            psi.eval(pt.data(), comp.data());
            double v = 0.0;
            for (int jj = 1; jj <= d; ++jj)
                v += comp[TwoForm::pack_index(dd, 0, jj)] * da[jj - 1];
            for (int i = 1; i <= d; ++i)
                for (int jj = i + 1; jj <= d; ++jj)
                    v += comp[TwoForm::pack_index(dd, i, jj)] *
                         (dt[i - 1] * da[jj - 1] - dt[jj - 1] * da[i - 1]);
            s += detail::trap_w(j, nt) * v;
        }
        tline[m] = s * ht;
    }
    double total = 0.0;
    for (int m = 0; m + 1 < na; ++m)
        total += 0.5 * (tline[m] + tline[m + 1]) * (g.alphas()[m + 1] - g.alphas()[m]);
    return total;
}

}  // namespace flatchain
